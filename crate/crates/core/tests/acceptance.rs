//! The acceptance suite: one test per criterion of the verification
//! matrix, at desk scale, printing one pass/fail line each.
//!
//! Criteria 2, 3 and 4 share their excursion samples through the suite's
//! process-level cache, so running the whole file costs one sampling pass
//! per boundary-law regime. Run with `--nocapture` to see the lines for
//! passing criteria too.

use refstable::suite::{run_criterion, SuiteConfig};

fn check(index: usize) {
    let cfg = SuiteConfig::default();
    let r = run_criterion(index, &cfg);
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_01_kernel_identities() {
    check(1);
}

#[test]
fn criterion_02_duration_tail_light() {
    check(2);
}

#[test]
fn criterion_03_duration_tail_heavy() {
    check(3);
}

#[test]
fn criterion_04_amplitude_tails() {
    check(4);
}

#[test]
fn criterion_05_discrete_scaling_identity() {
    check(5);
}

#[test]
fn criterion_06_reflected_scaling() {
    check(6);
}

#[test]
fn criterion_07_assembly_consistency() {
    check(7);
}

#[test]
fn criterion_08_exit_dichotomy() {
    check(8);
}

#[test]
fn criterion_09_clock_law() {
    check(9);
}

#[test]
fn criterion_10_weak_generator_consistency() {
    check(10);
}

#[test]
fn criterion_11_half_space_exit() {
    check(11);
}

#[test]
fn criterion_12_geometry_properties() {
    check(12);
}

#[test]
fn criterion_13_boundary_occupation() {
    check(13);
}
