//! Shared numerical kernels: adaptive Gauss–Kronrod quadrature,
//! Gauss–Legendre rules, and the special functions the estimators need.

/// 15-point Kronrod abscissae on `[-1, 1]` (nonnegative half).
const XGK15: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];

/// Kronrod weights matching `XGK15`.
const WGK15: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

/// Embedded 7-point Gauss weights (nodes are `XGK15[1], XGK15[3], XGK15[5], XGK15[7]`).
const WG7: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss–Kronrod 15(7) panel on `[a, b]`. Returns `(kronrod, |kronrod - gauss|)`.
fn gk15_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK15[7] * fc;
    let mut gauss = WG7[3] * fc;
    for j in 0..7 {
        let x = half * XGK15[j];
        let fsum = f(center - x) + f(center + x);
        kron += WGK15[j] * fsum;
        if j % 2 == 1 {
            gauss += WG7[j / 2] * fsum;
        }
    }
    (kron * half, (kron - gauss).abs() * half.abs())
}

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]` to absolute
/// tolerance `tol`. Bisects the worst panel first; gives up (with
/// `converged = false`) once `max_panels` panels are in play.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_panels: usize) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, error: 0.0, converged: true };
    }
    // (neg error, a, b, value, err) ordered worst-first via linear scan;
    // panel counts stay small so a Vec is fine.
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    let (v, e) = gk15_panel(&f, a, b);
    panels.push((a, b, v, e));
    loop {
        let err_total: f64 = panels.iter().map(|p| p.3).sum();
        if err_total <= tol {
            let value = panels.iter().map(|p| p.2).sum();
            return QuadResult { value, error: err_total, converged: true };
        }
        if panels.len() >= max_panels {
            let value = panels.iter().map(|p| p.2).sum();
            return QuadResult { value, error: err_total, converged: false };
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (pa, pb, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // Interval at floating point resolution; keep its estimate.
            let (v, _) = gk15_panel(&f, pa, pb);
            panels.push((pa, pb, v, 0.0));
            continue;
        }
        let (v1, e1) = gk15_panel(&f, pa, mid);
        let (v2, e2) = gk15_panel(&f, mid, pb);
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence. Accurate to ~1e-15 for `n <= 256`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Natural log of the gamma function (Lanczos, g = 7).
pub fn ln_gamma(z: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if z < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

pub fn gamma(z: f64) -> f64 {
    if z < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * z).sin() * gamma(1.0 - z))
    } else {
        ln_gamma(z).exp()
    }
}

/// Regularized incomplete beta function `I_x(a, b)` by the Lentz
/// continued fraction.
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    let use_direct = x < (a + 1.0) / (a + b + 2.0);
    let (aa, bb, xx) = if use_direct { (a, b, x) } else { (b, a, 1.0 - x) };
    // Lentz's algorithm for the continued fraction.
    let tiny = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (aa + bb) * xx / (aa + 1.0);
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let num = m * (bb - m) * xx / ((aa + m2 - 1.0) * (aa + m2));
        d = 1.0 + num * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + num / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let num = -(aa + m) * (aa + bb + m) * xx / ((aa + m2) * (aa + m2 + 1.0));
        d = 1.0 + num * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + num / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-15 {
            break;
        }
    }
    let cf = front * h / aa;
    if use_direct {
        cf
    } else {
        1.0 - cf
    }
}

/// Two-sided Student-t survival `P(|T_df| > t)`.
fn t_two_sided_p(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    beta_inc(0.5 * df, 0.5, x)
}

/// 97.5% Student-t quantile (for 95% confidence half-widths), by bisection.
pub fn t_quantile_975(df: usize) -> f64 {
    let df = df as f64;
    let (mut lo, mut hi) = (0.5, 700.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_two_sided_p(mid, df) > 0.05 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_polynomial_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, 1e-12, 100);
        // Antiderivative x^4/4 - x^2 + x evaluated on [-1, 3].
        let exact = (81.0 / 4.0 - 9.0 + 3.0) - (0.25 - 1.0 - 1.0);
        assert!((r.value - exact).abs() < 1e-10);
        assert!(r.converged);
    }

    #[test]
    fn gk_endpoint_singularity() {
        // Integrable singularity x^{-1/2}: integral over (0, 1] is 2.
        let r = integrate(|x| if x > 0.0 { x.powf(-0.5) } else { 0.0 }, 0.0, 1.0, 1e-9, 4000);
        assert!((r.value - 2.0).abs() < 1e-6, "got {}", r.value);
    }

    #[test]
    fn legendre_rule_integrates_cos() {
        let (x, w) = gauss_legendre(24);
        let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.cos()).sum();
        assert!((s - 2.0 * 1.0f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn gamma_values() {
        assert!((gamma(1.0) - 1.0).abs() < 1e-12);
        assert!((gamma(5.0) - 24.0).abs() < 1e-10);
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn t_quantiles_match_tables() {
        // Classical two-sided 95% critical values.
        assert!((t_quantile_975(7) - 2.365).abs() < 2e-3);
        assert!((t_quantile_975(30) - 2.042).abs() < 2e-3);
        assert!((t_quantile_975(120) - 1.980).abs() < 2e-3);
    }
}
