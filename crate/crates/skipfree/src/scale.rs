//! Scale-function machinery: the F recursion, the functions `m` and `f`,
//! their continuous extension, and the inverse `g`.
//!
//! The table `f` solves the Poisson equation `Qf = 1`, `f_0 = 0`; `f_n` is
//! the expected first-passage time from 0 to level n, which is why it
//! doubles as the analytic oracle for the simulator's hitting times.
//!
//! Two computation routes exist on purpose. `compute_f_table` is the
//! definition-faithful `F_in` recursion kept as an oracle; `compute_scale`
//! is the production path using the summation-order-exchanged recursion
//!
//! ```text
//! m_n = (1/lambda_n) * (1 + sum_{k=0}^{n-1} G_n(k) m_k),   G_n(k) = sum_{j<=k} q_nj
//! ```
//!
//! which touches each state once. Every quantity is carried both in linear
//! and in log space: supercritical chains overflow 64-bit floats near level
//! 1000, and the condition checkers need `f` ratios far beyond that.

use crate::chain::{Generator, GeneratorKind, State};
use crate::{Error, Result};

/// How `f` is extended from the integer knots to the half line.
///
/// Everything downstream depends only on quantities invariant to this
/// choice; piecewise-linear is canonical and the exponential variant
/// exists to exercise that invariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtensionKind {
    #[default]
    PiecewiseLinear,
    /// Geometric interpolation between knots for n >= 1, linear on [0, 1]
    /// (where `f_0 = 0` rules out the geometric form).
    PiecewiseExponential,
}

impl std::fmt::Display for ExtensionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtensionKind::PiecewiseLinear => f.write_str("linear"),
            ExtensionKind::PiecewiseExponential => f.write_str("exponential"),
        }
    }
}

/// Numerically stable log(exp(a) + exp(b)).
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// log(exp(a) - exp(b)) for a > b.
pub(crate) fn log_sub(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b);
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + (-((b - a).exp())).ln_1p()
}

/// Streaming log-sum-exp accumulator.
struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Lower-triangular table of the dimensionless coefficients `F_in`,
/// `0 <= i <= n <= n_max`. This is the definition-faithful oracle route.
#[derive(Debug, Clone)]
pub struct FTable {
    n_max: usize,
    /// rows[i][n - i] = F_in
    rows: Vec<Vec<f64>>,
}

impl FTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// F_in for 0 <= i <= n <= n_max.
    pub fn get(&self, i: usize, n: usize) -> f64 {
        assert!(i <= n && n <= self.n_max, "FTable::get({i}, {n}) out of range");
        self.rows[i][n - i]
    }

    /// The defining formula `m_n = sum_i F_in / lambda_i`, used as the
    /// independent oracle for the production recursion.
    pub fn m_from_definition(&self, g: &Generator, n: usize) -> f64 {
        (0..=n).map(|i| self.get(i, n) / g.birth_rate(i)).sum()
    }
}

/// Exact `F_in` recursion: `F_ii = 1`,
/// `F_in = (1/lambda_n) sum_{k=i}^{n-1} F_ik G_n(k)`.
pub fn compute_f_table(g: &Generator, n_max: usize) -> Result<FTable> {
    let mut rows: Vec<Vec<f64>> = (0..=n_max).map(|_| vec![1.0]).collect();
    for n in 1..=n_max {
        let lam = checked_birth_rate(g, n)?;
        // G_n(k) for k = 0..n-1
        let mut gcum = vec![0.0; n];
        g.for_each_down(n, |j, q| {
            if j < n {
                gcum[j] += q;
            }
        });
        for k in 1..n {
            gcum[k] += gcum[k - 1];
        }
        for i in 0..n {
            let mut s = 0.0;
            for k in i..n {
                s += rows[i][k - i] * gcum[k];
            }
            rows[i].push(s / lam);
        }
    }
    Ok(FTable { n_max, rows })
}

fn checked_birth_rate(g: &Generator, n: State) -> Result<f64> {
    let lam = g.birth_rate(n);
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(Error::InvalidGenerator {
            state: n,
            reason: format!("birth rate lambda_{n} = {lam} must be positive and finite"),
        });
    }
    Ok(lam)
}

/// Scale table: `m_0..m_{n_max-1}`, `f_0..f_{n_max}`, both also in log
/// space, plus the continuous extension and its inverse.
///
/// Immutable after construction; all evaluations are read-only.
#[derive(Debug, Clone)]
pub struct ScaleTable {
    n_max: usize,
    extension: ExtensionKind,
    m: Vec<f64>,
    f: Vec<f64>,
    log_m: Vec<f64>,
    log_f: Vec<f64>,
    lambda: Vec<f64>,
    /// Largest n with f_n finite in 64-bit arithmetic. The log-space track
    /// stays exact beyond it.
    finite_limit: usize,
}

/// Production scale recursion. Supercritical chains may overflow the linear
/// track; the table then reports the largest finite index and keeps serving
/// log-space values, and the caller decides.
pub fn compute_scale(g: &Generator, n_max: usize, extension: ExtensionKind) -> Result<ScaleTable> {
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be >= 1".into()));
    }
    let mut lambda = Vec::with_capacity(n_max);
    let mut m = vec![0.0; n_max];
    let mut log_m = vec![f64::NEG_INFINITY; n_max];
    let mut f = vec![0.0; n_max + 1];
    let mut log_f = vec![f64::NEG_INFINITY; n_max + 1];

    for n in 0..n_max {
        let lam = checked_birth_rate(g, n)?;
        lambda.push(lam);
        let (w, log_w) = if g.kind() == GeneratorKind::Catastrophe && n >= 1 {
            // G_n(k) = mu for every k < n, so the weighted sum collapses to
            // mu * f_n; same additions as the generic scan, reordered.
            let mu = g.death_rate(n);
            (mu * f[n], mu.ln() + log_f[n])
        } else {
            weighted_down_sum(g, n, &m, &log_m)?
        };
        m[n] = (1.0 + w) / lam;
        log_m[n] = log_add(0.0, log_w) - lam.ln();
        f[n + 1] = f[n] + m[n];
        log_f[n + 1] = log_add(log_f[n], log_m[n]);
        debug_assert!(m[n] >= 1.0 / lam);
    }

    let finite_limit = f
        .iter()
        .rposition(|v| v.is_finite())
        .expect("f[0] = 0 is always finite");

    Ok(ScaleTable {
        n_max,
        extension,
        m,
        f,
        log_m,
        log_f,
        lambda,
        finite_limit,
    })
}

/// `sum_{k} G_n(k) m_k` in linear and log space, scanning k upward from the
/// lowest down-rate target with a running cumulative rate. Touches O(n -
/// j_min) states, which is O(1) per state for birth-death rows.
fn weighted_down_sum(g: &Generator, n: State, m: &[f64], log_m: &[f64]) -> Result<(f64, f64)> {
    let row = g.down_rates(n);
    if row.is_empty() {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    if row.last().unwrap().0 >= n {
        return Err(Error::InvalidGenerator {
            state: n,
            reason: format!("down-rate target {} is not below {n}", row.last().unwrap().0),
        });
    }
    let mut w = 0.0;
    let mut lse = LogSumExp::new();
    let mut gcum = 0.0;
    let mut ln_g = f64::NEG_INFINITY;
    let mut idx = 0;
    for k in row[0].0..n {
        let mut changed = false;
        while idx < row.len() && row[idx].0 == k {
            gcum += row[idx].1;
            idx += 1;
            changed = true;
        }
        if changed {
            ln_g = gcum.ln();
        }
        if gcum > 0.0 {
            w += gcum * m[k];
            lse.push(ln_g + log_m[k]);
        }
    }
    Ok((w, lse.value()))
}

impl ScaleTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn extension(&self) -> ExtensionKind {
        self.extension
    }

    /// Largest n with `f_n` finite in the linear track.
    pub fn finite_limit(&self) -> usize {
        self.finite_limit
    }

    /// `m_n` for 0 <= n < n_max.
    pub fn m_at(&self, n: usize) -> f64 {
        self.m[n]
    }

    /// Knot value `f_n` for 0 <= n <= n_max.
    pub fn f_at(&self, n: usize) -> f64 {
        self.f[n]
    }

    /// `ln f_n`; finite for every n >= 1 even when the linear track
    /// overflowed.
    pub fn log_f_at(&self, n: usize) -> f64 {
        self.log_f[n]
    }

    /// `ln m_n`; finite past the linear track's overflow point.
    pub fn log_m_at(&self, n: usize) -> f64 {
        self.log_m[n]
    }

    pub fn m_values(&self) -> &[f64] {
        &self.m
    }

    pub fn f_values(&self) -> &[f64] {
        &self.f
    }

    pub fn lambda_values(&self) -> &[f64] {
        &self.lambda
    }

    /// Largest time the inverse is defined for: `f` at the finite limit.
    pub fn f_coverage(&self) -> f64 {
        self.f[self.finite_limit]
    }

    fn check_x(&self, x: f64) -> Result<()> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "f_eval argument must be a finite nonnegative real, got {x}"
            )));
        }
        if x > self.n_max as f64 {
            return Err(Error::OutOfRange {
                what: "x",
                value: x,
                limit: self.n_max as f64,
            });
        }
        Ok(())
    }

    /// Continuous extension of `f` at a real `x` in `[0, n_max]`.
    pub fn f_eval(&self, x: f64) -> Result<f64> {
        self.check_x(x)?;
        let n = x.floor() as usize;
        let theta = x - n as f64;
        if theta == 0.0 {
            // agree with the knots exactly, both extensions
            if n > self.finite_limit {
                return Err(Error::Overflow {
                    finite_limit: self.finite_limit,
                });
            }
            return Ok(self.f[n]);
        }
        if n + 1 > self.finite_limit {
            return Err(Error::Overflow {
                finite_limit: self.finite_limit,
            });
        }
        match self.extension {
            ExtensionKind::PiecewiseLinear => Ok(self.f[n] + theta * self.m[n]),
            ExtensionKind::PiecewiseExponential => {
                if n == 0 {
                    Ok(theta * self.f[1])
                } else {
                    Ok((self.log_f[n] + theta * (self.log_f[n + 1] - self.log_f[n])).exp())
                }
            }
        }
    }

    fn locate_segment(&self, t: f64) -> Result<usize> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "g_eval argument must be a finite nonnegative time, got {t}"
            )));
        }
        let cover = self.f[self.finite_limit];
        if t > cover {
            return Err(Error::OutOfRange {
                what: "t",
                value: t,
                limit: cover,
            });
        }
        // largest n with f_n <= t
        let knots = &self.f[..=self.finite_limit];
        Ok(knots.partition_point(|&v| v <= t) - 1)
    }

    /// Inverse of the continuous extension; exact on each interpolation
    /// piece. Out-of-range times are an error, never an extrapolation.
    pub fn g_eval(&self, t: f64) -> Result<f64> {
        let n = self.locate_segment(t)?;
        if self.f[n] == t {
            return Ok(n as f64);
        }
        let x = match self.extension {
            ExtensionKind::PiecewiseLinear => n as f64 + (t - self.f[n]) / self.m[n],
            ExtensionKind::PiecewiseExponential => {
                if n == 0 {
                    t / self.f[1]
                } else {
                    n as f64 + (t.ln() - self.log_f[n]) / (self.log_f[n + 1] - self.log_f[n])
                }
            }
        };
        Ok(x.clamp(n as f64, (n + 1) as f64))
    }

    /// `(floor g(t), ceil g(t))` computed purely from the knot sequence;
    /// independent of the continuous extension by construction.
    pub fn floor_ceil_g(&self, t: f64) -> Result<(usize, usize)> {
        let floor = self.locate_segment(t)?;
        let knots = &self.f[..=self.finite_limit];
        let ceil = knots.partition_point(|&v| v < t);
        Ok((floor, ceil))
    }

    /// Analytic prediction of the expected first time the chain reaches
    /// level n from 0; equals `f_n`.
    pub fn expected_hitting_time(&self, n: usize) -> Result<f64> {
        if n > self.n_max {
            return Err(Error::Domain(format!(
                "level {n} exceeds table n_max {}",
                self.n_max
            )));
        }
        Ok(self.f[n])
    }

    /// Heuristic nonexplosivity probe over the computed window. Reports
    /// `Diverging` when the partial sums keep growing like a nonexplosive
    /// chain's must; never claims explosivity.
    pub fn nonexplosive_probe(&self, opts: &ProbeOptions) -> NonexplosiveProbe {
        let n = self.n_max;
        let steps = 16.min(n);
        let trace: Vec<(usize, f64)> = (0..=steps)
            .map(|i| {
                let idx = n * i / steps.max(1);
                (idx, self.f[idx])
            })
            .collect();
        if n < 2 {
            return NonexplosiveProbe {
                verdict: ProbeVerdict::Inconclusive,
                tail_ratio: 1.0,
                tail_increment_ok: false,
                trace,
            };
        }
        let half = n / 2;
        let log_ratio = self.log_f[n] - self.log_f[half];
        let tail_ratio = log_ratio.exp();
        // f_N - f_{N/2} >= (N - N/2) * min over the window of 1/lambda;
        // compare in log space so supercritical overflow cannot bite.
        let max_lambda = self.lambda[half..n].iter().cloned().fold(0.0, f64::max);
        let floor_log = ((n - half) as f64 / max_lambda).ln();
        let log_diff = if log_ratio > 0.0 {
            log_sub(self.log_f[n], self.log_f[half])
        } else {
            f64::NEG_INFINITY
        };
        // slack: when m_n = 1/lambda_n exactly (pure birth at constant
        // rate) the comparison is an exact tie up to rounding
        let tail_increment_ok = log_diff >= floor_log - 1e-9;
        let verdict = if tail_increment_ok && log_ratio >= opts.ratio_multiplier.ln() {
            ProbeVerdict::Diverging
        } else {
            ProbeVerdict::Inconclusive
        };
        NonexplosiveProbe {
            verdict,
            tail_ratio,
            tail_increment_ok,
            trace,
        }
    }
}

/// Thresholds for the nonexplosivity heuristic. The divergence criterion
/// has no canonical numeric form; these defaults are documented heuristics.
#[derive(Debug, Clone)]
pub struct ProbeOptions {
    /// `f_N` must exceed this multiple of `f_{N/2}`.
    pub ratio_multiplier: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            ratio_multiplier: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeVerdict {
    Diverging,
    Inconclusive,
}

impl std::fmt::Display for ProbeVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProbeVerdict::Diverging => f.write_str("diverging"),
            ProbeVerdict::Inconclusive => f.write_str("inconclusive"),
        }
    }
}

/// Output of the nonexplosivity probe with its partial-sum trace.
#[derive(Debug, Clone)]
pub struct NonexplosiveProbe {
    pub verdict: ProbeVerdict,
    /// `f_N / f_{N/2}` (as exp of the log-space difference).
    pub tail_ratio: f64,
    pub tail_increment_ok: bool,
    /// Sampled partial sums `(n, f_n)`.
    pub trace: Vec<(usize, f64)>,
}

/// Closed-form mm1 scale values, used by tests and the condition checkers.
pub fn mm1_f_closed_form(alpha: f64, lambda: f64, n: usize) -> f64 {
    let nf = n as f64;
    if alpha == 1.0 {
        nf * (nf + 1.0) / (2.0 * lambda)
    } else {
        (alpha * (alpha.powf(nf) - 1.0) - (alpha - 1.0) * nf) / (lambda * (alpha - 1.0) * (alpha - 1.0))
    }
}

/// Closed-form catastrophe scale values `f_n = ((alpha+1)^n - 1)/mu`.
pub fn catastrophe_f_closed_form(alpha: f64, mu: f64, n: usize) -> f64 {
    ((alpha + 1.0).powf(n as f64) - 1.0) / mu
}
