//! Tail-index fitting, two-sample tests, and batched Monte Carlo
//! confidence intervals.

use crate::numerics::t_quantile_975;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("need at least {need} batches, got {got}")]
    TooFewBatches { need: usize, got: usize },
    #[error("invalid window [{0}, {1}]")]
    InvalidWindow(f64, f64),
}

/// Quantile window over which a tail is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailWindow {
    pub q_lo: f64,
    pub q_hi: f64,
}

impl Default for TailWindow {
    fn default() -> Self {
        // The laws under test are power laws only asymptotically; the
        // upper-quantile window keeps the fit in the settled regime.
        Self { q_lo: 0.90, q_hi: 0.999 }
    }
}

impl TailWindow {
    pub fn new(q_lo: f64, q_hi: f64) -> Result<Self, StatsError> {
        if !(0.0 <= q_lo && q_lo < q_hi && q_hi < 1.0) {
            return Err(StatsError::InvalidWindow(q_lo, q_hi));
        }
        Ok(Self { q_lo, q_hi })
    }
}

/// A fitted survival-tail slope: `log P(X > x) ~ slope * log x + const`.
#[derive(Debug, Clone, Serialize)]
pub struct TailFit {
    /// Least-squares slope of log rank against log value (negative for a
    /// power tail).
    pub slope: f64,
    pub stderr: f64,
    /// Hill-estimator cross-check, reported as a slope (`-alpha_hill`).
    pub hill_slope: f64,
    pub n_window: usize,
    pub n_total: usize,
    pub window: TailWindow,
    /// Difference between half-window slopes measured in joint standard
    /// errors; large values flag a drifting (non-power-law) fit.
    pub drift_score: f64,
}

impl TailFit {
    pub fn is_drifting(&self) -> bool {
        self.drift_score > 6.0
    }
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - my - slope * (x - mx);
            e * e
        })
        .sum();
    let stderr = (resid / (n - 2.0) / sxx).sqrt();
    (slope, stderr)
}

/// Fit the survival tail of a positive sample over a quantile window:
/// least-squares slope of log empirical survival against log value, with a
/// Hill-estimator cross-check.
pub fn fit_tail(samples: &[f64], window: TailWindow) -> Result<TailFit, StatsError> {
    let n = samples.len();
    if n < 1000 {
        return Err(StatsError::TooFewSamples { need: 1000, got: n });
    }
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let i_lo = ((window.q_lo * n as f64) as usize).min(n - 2);
    let i_hi = ((window.q_hi * n as f64) as usize).clamp(i_lo + 2, n - 1);
    if xs[i_lo] <= 0.0 {
        return Err(StatsError::Degenerate("window contains nonpositive values".into()));
    }
    if xs[i_hi] <= xs[i_lo] * (1.0 + 1e-12) {
        return Err(StatsError::Degenerate("window has no spread".into()));
    }
    let mut lx = Vec::with_capacity(i_hi - i_lo);
    let mut ly = Vec::with_capacity(i_hi - i_lo);
    for i in i_lo..i_hi {
        // Empirical survival at the i-th order statistic (ascending).
        let surv = (n - i) as f64 / n as f64;
        lx.push(xs[i].ln());
        ly.push(surv.ln());
    }
    let (slope, _ols_err) = ols_slope(&lx, &ly);
    // Rank residuals are strongly correlated, so the OLS standard error is
    // far too optimistic; use the extreme-value order 1/sqrt(k) instead.
    let stderr = slope.abs() / (lx.len() as f64).sqrt();
    // Half-window drift: a genuine power law gives compatible slopes.
    let mid = lx.len() / 2;
    let (s1, _) = ols_slope(&lx[..mid], &ly[..mid]);
    let (s2, _) = ols_slope(&lx[mid..], &ly[mid..]);
    let half_sd = (s1 * s1 / mid as f64 + s2 * s2 / (lx.len() - mid) as f64).sqrt();
    let drift_score = (s1 - s2).abs() / half_sd.max(1e-12);
    // Hill estimator over the exceedances of the window threshold.
    let k = n - i_lo - 1;
    let x_thr = xs[i_lo];
    let sum_log: f64 = xs[i_lo + 1..].iter().map(|x| (x / x_thr).ln()).sum();
    let hill_alpha = k as f64 / sum_log.max(1e-300);
    Ok(TailFit {
        slope,
        stderr,
        hill_slope: -hill_alpha,
        n_window: i_hi - i_lo,
        n_total: n,
        window,
        drift_score,
    })
}

/// Two-sample Kolmogorov–Smirnov report.
#[derive(Debug, Clone, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Kolmogorov survival function `Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2)`.
fn ks_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Classical two-sample Kolmogorov–Smirnov test with the asymptotic
/// p-value (small-sample corrected effective size).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsReport, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::TooFewSamples { need: 1, got: 0 });
    }
    let mut xs: Vec<f64> = a.to_vec();
    let mut ys: Vec<f64> = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsReport { statistic: d, p_value: ks_survival(lambda), n_a: n, n_b: m })
}

/// Batch-means mean and 95% confidence half-width.
#[derive(Debug, Clone, Serialize)]
pub struct BatchCi {
    pub mean: f64,
    pub halfwidth: f64,
    pub n_batches: usize,
}

/// Split the outputs into `batches` contiguous batches and form the
/// Student-t confidence interval of the batch means.
pub fn batch_ci(outputs: &[f64], batches: usize) -> Result<BatchCi, StatsError> {
    if batches < 8 {
        return Err(StatsError::TooFewBatches { need: 8, got: batches });
    }
    if outputs.len() < batches {
        return Err(StatsError::TooFewSamples { need: batches, got: outputs.len() });
    }
    let size = outputs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| {
            let chunk = &outputs[b * size..(b + 1) * size];
            chunk.iter().sum::<f64>() / chunk.len() as f64
        })
        .collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (batches - 1) as f64;
    let halfwidth = t_quantile_975(batches - 1) * (var / batches as f64).sqrt();
    Ok(BatchCi { mean, halfwidth, n_batches: batches })
}

/// Empirical quantile of a sample (sorts a copy).
pub fn quantile(samples: &[f64], q: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let i = ((q * xs.len() as f64) as usize).min(xs.len() - 1);
    xs[i]
}

pub fn median(samples: &[f64]) -> f64 {
    quantile(samples, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn pareto_slope_recovered() {
        // Synthetic oracle: exact Pareto with survival x^{-2}.
        let mut rng = RngStream::keyed(51, 0, 0);
        let xs: Vec<f64> = (0..200_000).map(|_| rng.uniform_pos().powf(-0.5)).collect();
        let fit = fit_tail(&xs, TailWindow::default()).unwrap();
        assert!((fit.slope + 2.0).abs() < 0.03, "slope {}", fit.slope);
        assert!((fit.hill_slope + 2.0).abs() < 0.05, "hill {}", fit.hill_slope);
        assert!(!fit.is_drifting(), "drift score {}", fit.drift_score);
    }

    #[test]
    fn scale_equivariance_exact() {
        let mut rng = RngStream::keyed(52, 0, 0);
        let xs: Vec<f64> = (0..50_000).map(|_| rng.uniform_pos().powf(-1.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 7.25 * x).collect();
        let f1 = fit_tail(&xs, TailWindow::default()).unwrap();
        let f2 = fit_tail(&ys, TailWindow::default()).unwrap();
        assert!((f1.slope - f2.slope).abs() < 1e-12);
    }

    #[test]
    fn exponential_flagged_as_drifting() {
        let mut rng = RngStream::keyed(53, 0, 0);
        let xs: Vec<f64> = (0..200_000).map(|_| rng.exp(1.0)).collect();
        let fit = fit_tail(&xs, TailWindow::default()).unwrap();
        assert!(fit.is_drifting(), "drift score {}", fit.drift_score);
    }

    #[test]
    fn degenerate_inputs_error() {
        assert!(matches!(
            fit_tail(&[1.0; 10], TailWindow::default()),
            Err(StatsError::TooFewSamples { .. })
        ));
        let xs = vec![2.5; 5000];
        assert!(matches!(fit_tail(&xs, TailWindow::default()), Err(StatsError::Degenerate(_))));
    }

    #[test]
    fn ks_identical_samples() {
        let a: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value > 0.999);
    }

    #[test]
    fn ks_detects_shift() {
        let mut rng = RngStream::keyed(54, 0, 0);
        let a: Vec<f64> = (0..10_000).map(|_| rng.uniform()).collect();
        let b: Vec<f64> = (0..10_000).map(|_| rng.uniform() + 0.1).collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert!(r.p_value < 1e-6, "p = {}", r.p_value);
    }

    #[test]
    fn ks_null_calibration() {
        // Independent uniform samples: p > 0.01 in at least 98% of repeats
        // (up to binomial noise on the repeat count).
        let mut ok = 0;
        let reps = 400;
        for k in 0..reps {
            let mut r1 = RngStream::keyed(55, k, 0);
            let mut r2 = RngStream::keyed(55, k, 1);
            let a: Vec<f64> = (0..10_000).map(|_| r1.uniform()).collect();
            let b: Vec<f64> = (0..10_000).map(|_| r2.uniform()).collect();
            if ks_two_sample(&a, &b).unwrap().p_value > 0.01 {
                ok += 1;
            }
        }
        assert!(ok as f64 >= 0.975 * reps as f64, "only {ok}/{reps} repeats passed");
    }

    #[test]
    fn ks_symmetric_in_arguments() {
        let mut r1 = RngStream::keyed(56, 0, 0);
        let a: Vec<f64> = (0..5000).map(|_| r1.uniform()).collect();
        let b: Vec<f64> = (0..3000).map(|_| r1.uniform() * 1.05).collect();
        let ab = ks_two_sample(&a, &b).unwrap();
        let ba = ks_two_sample(&b, &a).unwrap();
        assert_eq!(ab.statistic, ba.statistic);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn batch_ci_constant_and_errors() {
        let xs = vec![3.0; 160];
        let ci = batch_ci(&xs, 8).unwrap();
        assert_eq!(ci.mean, 3.0);
        assert_eq!(ci.halfwidth, 0.0);
        assert!(matches!(batch_ci(&xs, 1), Err(StatsError::TooFewBatches { .. })));
    }

    #[test]
    fn batch_ci_coverage_on_gaussian_like() {
        // Sums of uniforms; the true mean is 0.5.
        let mut covered = 0;
        let reps = 300;
        for k in 0..reps {
            let mut rng = RngStream::keyed(57, k, 0);
            let xs: Vec<f64> = (0..800).map(|_| rng.uniform()).collect();
            let ci = batch_ci(&xs, 16).unwrap();
            if (ci.mean - 0.5).abs() <= ci.halfwidth {
                covered += 1;
            }
        }
        let rate = covered as f64 / reps as f64;
        assert!((0.90..=0.99).contains(&rate), "coverage {rate}");
    }
}
