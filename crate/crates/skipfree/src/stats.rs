//! Estimator plumbing: sample means with standard errors and binomial
//! proportion intervals.
//!
//! Aggregation is always a sequential fold over path-index order, so the
//! same sample set produces bit-identical statistics regardless of how many
//! workers produced it.

const Z95: f64 = 1.959963984540054;

/// Monte Carlo point estimate with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorReport {
    pub mean: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    pub n_samples: usize,
    pub seed: u64,
}

impl EstimatorReport {
    /// Mean, standard error (ddof = 1), and normal 95% interval.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        assert!(n > 0, "cannot estimate from zero samples");
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n as f64 - 1.0)).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        EstimatorReport {
            mean,
            std_error,
            ci95: (mean - Z95 * std_error, mean + Z95 * std_error),
            n_samples: n,
            seed,
        }
    }
}

/// Binomial proportion estimate. Uses the normal interval for comfortable
/// counts and Wilson for fewer than 30 successes or failures, since the
/// tail probabilities probed here get small.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialEstimate {
    pub successes: u64,
    pub n: u64,
    pub p_hat: f64,
    pub ci95: (f64, f64),
}

impl BinomialEstimate {
    pub fn new(successes: u64, n: u64) -> Self {
        assert!(n > 0 && successes <= n);
        let nf = n as f64;
        let p = successes as f64 / nf;
        let few = successes.min(n - successes) < 30;
        let ci95 = if few {
            wilson(p, nf)
        } else {
            let se = (p * (1.0 - p) / nf).sqrt();
            (p - Z95 * se, p + Z95 * se)
        };
        BinomialEstimate {
            successes,
            n,
            p_hat: p,
            ci95,
        }
    }
}

fn wilson(p: f64, n: f64) -> (f64, f64) {
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the bounds collapse to the boundary exactly at p = 0 and p = 1
    let lo = if p == 0.0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if p == 1.0 { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Ratio of two independent binomial proportions with a delta-method
/// interval on the log scale; falls back to the Wilson bound quotient when
/// either count is small. `None` when the denominator estimate is zero.
pub fn proportion_ratio_ci(lhs: &BinomialEstimate, rhs: &BinomialEstimate) -> Option<(f64, (f64, f64))> {
    if rhs.successes == 0 {
        return None;
    }
    let ratio = lhs.p_hat / rhs.p_hat;
    if lhs.successes == 0 {
        // one-sided: upper bound from lhs upper and rhs lower
        let hi = lhs.ci95.1 / rhs.ci95.0.max(f64::MIN_POSITIVE);
        return Some((ratio, (0.0, hi)));
    }
    let small = lhs.successes.min(rhs.successes) < 30;
    if small {
        let lo = lhs.ci95.0 / rhs.ci95.1;
        let hi = lhs.ci95.1 / rhs.ci95.0.max(f64::MIN_POSITIVE);
        Some((ratio, (lo, hi)))
    } else {
        let v = (1.0 - lhs.p_hat) / (lhs.successes as f64) + (1.0 - rhs.p_hat) / (rhs.successes as f64);
        let half = Z95 * v.sqrt();
        Some((ratio, (ratio * (-half).exp(), ratio * half.exp())))
    }
}

/// Standard error of the difference of two independent binomial proportions.
pub fn joint_proportion_se(a: &BinomialEstimate, b: &BinomialEstimate) -> f64 {
    let va = a.p_hat * (1.0 - a.p_hat) / a.n as f64;
    let vb = b.p_hat * (1.0 - b.p_hat) / b.n as f64;
    (va + vb).sqrt()
}
