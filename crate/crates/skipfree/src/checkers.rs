//! Numerical evaluation of the sufficient conditions: the Peskir summability
//! condition, the vanishing-ratio condition on `f`, and moderate-function
//! membership, plus the m/m/1 asymptotic calibration function `h`.
//!
//! All verdicts here are finite-truncation heuristics with traces attached;
//! the conditions involve infinite sups and sums, so the tool reports
//! evidence and never claims a proof. Thresholds are config-overridable and
//! were calibrated on the m/m/1 phase diagram, where the answers are known
//! analytically.

use std::sync::Arc;

use crate::scale::{log_sub, ScaleTable};
use crate::{Error, Result};

/// Trend of the Peskir partial sups as the truncation grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Bounded,
    Growing,
    Inconclusive,
}

impl std::fmt::Display for Trend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Trend::Bounded => f.write_str("bounded"),
            Trend::Growing => f.write_str("growing"),
            Trend::Inconclusive => f.write_str("inconclusive"),
        }
    }
}

/// Outcome of a Peskir-condition evaluation at a given power `p`.
#[derive(Debug, Clone)]
pub struct PeskirVerdict {
    pub p: f64,
    /// Max of the computed trace.
    pub sup_value: f64,
    pub trend: Trend,
    /// `(n, S_n)` with the inner sum truncated at `k_truncation`.
    pub per_n_trace: Vec<(usize, f64)>,
    pub k_truncation: usize,
    /// Extrapolated contribution of the dropped `k > K` tail at the trace
    /// argmax, assuming the fitted power-law decay of the summand;
    /// infinite when the summand does not decay fast enough to sum.
    pub tail_bound_estimate: f64,
    /// Fitted decay exponent `q` of the summand `(k^p - (k-1)^p)/f_k` over
    /// the last octave; the inner series converges iff q > 1.
    pub summand_decay: f64,
}

/// Tunable thresholds of the trend heuristic.
#[derive(Debug, Clone)]
pub struct PeskirOptions {
    /// Summand decay exponents at or below this are treated as a divergent
    /// inner series.
    pub divergence_q: f64,
    /// Running-max relative growth over the last quartile below this counts
    /// as a plateau.
    pub plateau_rel_tol: f64,
    /// Increment growth factor across doubling windows above which the
    /// trace counts as superlinear in log n.
    pub superlinear_factor: f64,
}

impl Default for PeskirOptions {
    fn default() -> Self {
        PeskirOptions {
            divergence_q: 1.05,
            plateau_rel_tol: 1e-3,
            superlinear_factor: 1.25,
        }
    }
}

/// `k^p - (k-1)^p` without cancellation: `-k^p expm1(p log1p(-1/k))`.
fn power_increment(k: f64, p: f64) -> f64 {
    if k <= 1.0 {
        return 1.0; // k = 1: 1^p - 0^p
    }
    -k.powf(p) * (p * (-1.0 / k).ln_1p()).exp_m1()
}

/// Evaluate the Peskir condition trace for `p > 0` with the inner sum
/// truncated at `k_max`, using default thresholds.
pub fn peskir_check(s: &ScaleTable, p: f64, k_max: usize) -> Result<PeskirVerdict> {
    peskir_check_with(s, p, k_max, &PeskirOptions::default())
}

/// Evaluate the Peskir condition trace with explicit thresholds.
///
/// `S_n = (f_n / n^p) * sum_{k=n+1}^{K} (k^p - (k-1)^p)/f_k` is computed
/// for `n <= K/2` entirely in log space, so supercritical chains whose `f`
/// overflows 64-bit floats are handled exactly.
pub fn peskir_check_with(
    s: &ScaleTable,
    p: f64,
    k_max: usize,
    opts: &PeskirOptions,
) -> Result<PeskirVerdict> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be positive, got {p}")));
    }
    if k_max > s.n_max() {
        return Err(Error::OutOfRange {
            what: "k_max",
            value: k_max as f64,
            limit: s.n_max() as f64,
        });
    }
    if k_max < 8 {
        return Err(Error::InvalidParameter("k_max must be at least 8".into()));
    }

    // log of the summand t_k = (k^p - (k-1)^p)/f_k for k = 1..=K
    let log_t: Vec<f64> = (1..=k_max)
        .map(|k| power_increment(k as f64, p).ln() - s.log_f_at(k))
        .collect();

    // log suffix sums: log_suffix[n] = log sum_{k=n+1}^{K} t_k
    let mut log_suffix = vec![f64::NEG_INFINITY; k_max + 1];
    for k in (1..=k_max).rev() {
        log_suffix[k - 1] = crate::scale::log_add(log_suffix[k], log_t[k - 1]);
    }

    let n_top = k_max / 2;
    let mut trace = Vec::with_capacity(n_top);
    for (n, &suffix) in log_suffix.iter().enumerate().take(n_top + 1).skip(1) {
        let log_s = s.log_f_at(n) - p * (n as f64).ln() + suffix;
        trace.push((n, log_s.exp()));
    }

    let (argmax, sup_value) = trace
        .iter()
        .fold((1usize, f64::NEG_INFINITY), |(am, mx), &(n, v)| {
            if v > mx {
                (n, v)
            } else {
                (am, mx)
            }
        });

    // Fit the summand's decay over the last octave on log-log axes.
    let lo = k_max / 2;
    let xs: Vec<f64> = (lo..=k_max).map(|k| (k as f64).ln()).collect();
    let ys: Vec<f64> = (lo..=k_max).map(|k| log_t[k - 1]).collect();
    let q = -regression_slope(&xs, &ys);

    let t_last = log_t[k_max - 1].exp();
    let tail_bound_estimate = if q > 1.0 {
        let tail = t_last * k_max as f64 / (q - 1.0);
        let (n_star, _) = trace[argmax - 1];
        (s.log_f_at(n_star).exp() / (n_star as f64).powf(p)) * tail
    } else {
        f64::INFINITY
    };

    let trend = if q <= opts.divergence_q {
        Trend::Growing
    } else {
        // running max plateau over the last quartile of n
        let run_max: Vec<f64> = trace
            .iter()
            .scan(f64::NEG_INFINITY, |mx, &(_, v)| {
                *mx = mx.max(v);
                Some(*mx)
            })
            .collect();
        let end = run_max[run_max.len() - 1];
        let at34 = run_max[(run_max.len() * 3) / 4 - 1];
        let rel_growth = if end > 0.0 { (end - at34) / end } else { 0.0 };
        if rel_growth < opts.plateau_rel_tol {
            Trend::Bounded
        } else {
            // increments of S over doubling windows of n
            let v = |i: usize| trace[i - 1].1;
            let (a, b, c) = (v(n_top / 4), v(n_top / 2), v(n_top));
            let d1 = b - a;
            let d2 = c - b;
            if d2 > 0.0 && d2 > opts.superlinear_factor * d1.max(0.0) {
                Trend::Growing
            } else {
                Trend::Inconclusive
            }
        }
    };

    Ok(PeskirVerdict {
        p,
        sup_value,
        trend,
        per_n_trace: trace,
        k_truncation: k_max,
        tail_bound_estimate,
        summand_decay: q,
    })
}

fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    sxy / sxx
}

/// Outcome of evaluating the vanishing-ratio condition
/// `lim_{delta -> 0} sup_{k >= M} f(floor(delta k)) / (f(floor(beta k)) - f(k)) = 0`.
#[derive(Debug, Clone)]
pub struct VanishingRatioVerdict {
    pub beta: f64,
    pub m_min: usize,
    pub delta_grid: Vec<f64>,
    /// Per-delta sup over the integer k range.
    pub sup_curve: Vec<(f64, f64)>,
    pub k_max: usize,
    pub passes: bool,
}

/// Evaluate the vanishing-ratio condition on a decreasing delta grid with
/// k ranging over `[m_min, k_max]`. Passes when the sup curve is
/// nonincreasing (within 10%) and its final value is below `tol`.
pub fn vanishing_ratio_check(
    s: &ScaleTable,
    beta: f64,
    m_min: usize,
    delta_grid: &[f64],
    k_max: usize,
    tol: f64,
) -> Result<VanishingRatioVerdict> {
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must exceed 1, got {beta}")));
    }
    if m_min < 1 {
        return Err(Error::InvalidParameter("m_min must be >= 1".into()));
    }
    if delta_grid.is_empty() || delta_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "delta grid must be strictly decreasing and nonempty".into(),
        ));
    }
    if delta_grid.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidParameter("delta grid must be positive".into()));
    }
    let top_level = (beta * k_max as f64).floor() as usize;
    if top_level > s.n_max() {
        return Err(Error::OutOfRange {
            what: "floor(beta * k_max)",
            value: top_level as f64,
            limit: s.n_max() as f64,
        });
    }

    let mut sup_curve = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        let mut sup = 0.0f64;
        for k in m_min..=k_max {
            let b = (beta * k as f64).floor() as usize;
            if b <= k {
                continue; // floor(beta k) must exceed k for the denominator to be positive
            }
            let a = (delta * k as f64).floor() as usize;
            if a == 0 {
                continue; // f_0 = 0
            }
            // ratio = f_a / (f_b - f_k) in log space
            let log_den = log_sub(s.log_f_at(b), s.log_f_at(k));
            let r = (s.log_f_at(a) - log_den).exp();
            if r > sup {
                sup = r;
            }
        }
        sup_curve.push((delta, sup));
    }
    let nonincreasing = sup_curve.windows(2).all(|w| w[1].1 <= 1.1 * w[0].1);
    let final_value = sup_curve.last().unwrap().1;
    Ok(VanishingRatioVerdict {
        beta,
        m_min,
        delta_grid: delta_grid.to_vec(),
        sup_curve,
        k_max,
        passes: nonincreasing && final_value < tol,
    })
}

/// A candidate moderate function: continuous, increasing, `F(0) = 0`.
#[derive(Clone)]
pub enum ModerateFunction {
    /// `F(x) = x^p`.
    Power(f64),
    /// `F(x) = x^p * ln(1 + x)^q`.
    PowerLog(f64, f64),
    /// User-supplied monotone function.
    UserMonotone(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for ModerateFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModerateFunction::Power(p) => write!(f, "Power({p})"),
            ModerateFunction::PowerLog(p, q) => write!(f, "PowerLog({p}, {q})"),
            ModerateFunction::UserMonotone(_) => write!(f, "UserMonotone"),
        }
    }
}

impl std::fmt::Display for ModerateFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModerateFunction::Power(p) => write!(f, "power:{p}"),
            ModerateFunction::PowerLog(p, q) => write!(f, "powerlog:{p},{q}"),
            ModerateFunction::UserMonotone(_) => write!(f, "user"),
        }
    }
}

impl ModerateFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("power exponent must be positive, got {p}")));
        }
        Ok(ModerateFunction::Power(p))
    }

    pub fn power_log(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0) || !(q >= 0.0) {
            return Err(Error::InvalidParameter(
                "power_log requires p > 0 and q >= 0".into(),
            ));
        }
        Ok(ModerateFunction::PowerLog(p, q))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ModerateFunction::Power(p) => x.powf(*p),
            ModerateFunction::PowerLog(p, q) => x.powf(*p) * x.ln_1p().powf(*q),
            ModerateFunction::UserMonotone(f) => f(x),
        }
    }

    /// Analytic bound on `sup_x F(beta x)/F(x)` when one is known.
    pub fn beta_ratio_bound(&self, beta: f64) -> Option<f64> {
        match self {
            ModerateFunction::Power(p) => Some(beta.powf(*p)),
            // ln(1 + beta x)/ln(1 + x) decreases from beta to 1, so the sup
            // sits at x -> 0.
            ModerateFunction::PowerLog(p, q) => Some(beta.powf(p + q)),
            ModerateFunction::UserMonotone(_) => None,
        }
    }
}

/// Empirical evidence for moderate-function membership over a grid.
#[derive(Debug, Clone)]
pub struct ModerateReport {
    pub sup_ratio: f64,
    /// Per-decade sups of `F(beta x)/F(x)`.
    pub per_decade: Vec<f64>,
    /// True when the per-decade sups stop growing toward the top of the
    /// grid (the defining sup looks finite).
    pub is_moderate_evidence: bool,
    pub analytic_bound: Option<f64>,
}

/// Check `sup F(beta x)/F(x)` over a grid spanning at least six decades.
pub fn moderate_check(f: &ModerateFunction, beta: f64, grid: &[f64]) -> Result<ModerateReport> {
    if !(beta > 1.0) {
        return Err(Error::InvalidParameter(format!("beta must exceed 1, got {beta}")));
    }
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) || grid[0] <= 0.0 {
        return Err(Error::InvalidParameter(
            "grid must be strictly increasing and positive".into(),
        ));
    }
    let span = grid[grid.len() - 1] / grid[0];
    if span < 1e6 * (1.0 - 1e-9) {
        return Err(Error::InvalidParameter(format!(
            "grid must span at least 6 decades, spans {:.2}",
            span.log10()
        )));
    }
    let f0 = f.eval(0.0);
    if f0 != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "moderate candidate must satisfy F(0) = 0, got {f0}"
        )));
    }

    let decade0 = grid[0].log10().floor();
    let mut per_decade: Vec<f64> = Vec::new();
    let mut sup_ratio = 0.0f64;
    let mut prev_val = 0.0f64;
    let mut diverged = false;
    for &x in grid {
        let v = f.eval(x);
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid moderate candidate: F({x}) = {v} is not positive"
            )));
        }
        if v + 1e-12 * v.abs() < prev_val {
            return Err(Error::InvalidParameter(format!(
                "invalid moderate candidate: F is decreasing at x = {x}"
            )));
        }
        prev_val = v;
        let vt = f.eval(beta * x);
        let ratio = vt / v;
        if !ratio.is_finite() {
            diverged = true;
        }
        sup_ratio = sup_ratio.max(ratio);
        let d = (x.log10().floor() - decade0) as usize;
        if per_decade.len() <= d {
            per_decade.resize(d + 1, 0.0);
        }
        per_decade[d] = per_decade[d].max(ratio);
    }
    let head_max = per_decade[..per_decade.len() - 1]
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    let tail = *per_decade.last().unwrap();
    let is_moderate_evidence = !diverged && sup_ratio.is_finite() && tail <= 1.05 * head_max;
    Ok(ModerateReport {
        sup_ratio,
        per_decade,
        is_moderate_evidence,
        analytic_bound: f.beta_ratio_bound(beta),
    })
}

/// The m/m/1 calibration function `h` and the asymptotic law of `g`, in
/// all three branches of the death/birth ratio.
#[derive(Debug, Clone, Copy)]
pub struct Mm1Asymptotics {
    pub alpha: f64,
    pub lambda: f64,
}

/// Three-branch strictly increasing `h` with `h(0) = 0`, `f_n ~ h(n)`.
pub fn h_mm1(alpha: f64, lambda: f64) -> Result<Mm1Asymptotics> {
    if !(alpha > 0.0) || !(lambda > 0.0) {
        return Err(Error::InvalidParameter(
            "h_mm1 requires positive alpha and lambda".into(),
        ));
    }
    Ok(Mm1Asymptotics { alpha, lambda })
}

impl Mm1Asymptotics {
    /// `h(x)`: `x/(lambda(1-alpha))` below criticality, `x^2/(2 lambda)` at
    /// it, `alpha(alpha^x - 1)/(lambda(alpha-1)^2)` above.
    pub fn h(&self, x: f64) -> f64 {
        let (a, l) = (self.alpha, self.lambda);
        if a < 1.0 {
            x / (l * (1.0 - a))
        } else if a == 1.0 {
            x * x / (2.0 * l)
        } else {
            a * (a.powf(x) - 1.0) / (l * (a - 1.0) * (a - 1.0))
        }
    }

    /// Asymptotic law of `g(t)` as `t -> infinity`: `lambda(1-alpha) t`,
    /// `sqrt(2 lambda t)`, or `log_alpha t`.
    pub fn g_asymptote(&self, t: f64) -> f64 {
        let (a, l) = (self.alpha, self.lambda);
        if a < 1.0 {
            l * (1.0 - a) * t
        } else if a == 1.0 {
            (2.0 * l * t).sqrt()
        } else {
            t.ln() / a.ln()
        }
    }
}

/// Convenience alias matching the operation name used by the lab.
pub fn g_asymptote_mm1(alpha: f64, lambda: f64) -> Result<Mm1Asymptotics> {
    h_mm1(alpha, lambda)
}
