//! Exact event-driven simulation: single paths with running-maximum
//! tracking, stopping rules, the two-component monotone couplings, and the
//! controllability probe.
//!
//! # Reproducibility
//!
//! Every path owns a ChaCha stream derived from `(master seed, path
//! index)`, so a batch is bit-reproducible independent of worker count and
//! scheduling. Batch results are collected and folded in path-index order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chain::{Generator, State};
use crate::stats::BinomialEstimate;
use crate::{Error, Result};

/// Hard guards against explosive or malformed generators.
#[derive(Debug, Clone, Copy)]
pub struct SimCaps {
    /// Paths climbing above this state abort with an explosion-guard error.
    pub state_cap: usize,
    /// Paths exceeding this many jumps abort with an event-cap error.
    pub event_cap: u64,
}

impl Default for SimCaps {
    fn default() -> Self {
        SimCaps {
            state_cap: 1_000_000,
            event_cap: 100_000_000,
        }
    }
}

/// A simulatable stopping time. `HitLevel` uses the first time the chain is
/// `>= L` (for skip-free chains this coincides with first equality, the
/// `>=` form is kept deliberately).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingRule {
    FixedTime(f64),
    HitLevel(State),
    /// `min(FixedTime, HitLevel)`: the fixed-time component keeps the rule
    /// bounded and the simulation terminating.
    MinOf(f64, State),
}

impl StoppingRule {
    pub fn time_cap(&self) -> Option<f64> {
        match self {
            StoppingRule::FixedTime(t) | StoppingRule::MinOf(t, _) => Some(*t),
            StoppingRule::HitLevel(_) => None,
        }
    }

    pub fn hit_level(&self) -> Option<State> {
        match self {
            StoppingRule::HitLevel(l) | StoppingRule::MinOf(_, l) => Some(*l),
            StoppingRule::FixedTime(_) => None,
        }
    }

    /// Bounded rules carry a deterministic time cap.
    pub fn is_bounded(&self) -> bool {
        self.time_cap().is_some()
    }

    fn validated(self) -> Result<Self> {
        if let Some(t) = self.time_cap() {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "time cap must be a finite nonnegative time, got {t}"
                )));
            }
        }
        Ok(self)
    }
}

impl fmt::Display for StoppingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoppingRule::FixedTime(t) => write!(f, "fixed:{t}"),
            StoppingRule::HitLevel(l) => write!(f, "hit:{l}"),
            StoppingRule::MinOf(t, l) => write!(f, "min:{t},{l}"),
        }
    }
}

impl FromStr for StoppingRule {
    type Err = Error;

    /// Grammar: `fixed:T | hit:L | min:T,L`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse stopping rule {s:?}; expected fixed:T, hit:L, or min:T,L"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let rule = match kind {
            "fixed" => StoppingRule::FixedTime(rest.trim().parse::<f64>().map_err(|_| bad())?),
            "hit" => StoppingRule::HitLevel(rest.trim().parse::<State>().map_err(|_| bad())?),
            "min" => {
                let (t, l) = rest.split_once(',').ok_or_else(bad)?;
                StoppingRule::MinOf(
                    t.trim().parse::<f64>().map_err(|_| bad())?,
                    l.trim().parse::<State>().map_err(|_| bad())?,
                )
            }
            _ => return Err(bad()),
        };
        rule.validated()
    }
}

/// What one simulated path produced at its stopping time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOutcome {
    pub tau: f64,
    pub x_at_tau: State,
    /// Running maximum over the whole path up to tau.
    pub x_star: State,
    pub n_jumps: u64,
    /// Master seed of the stream that produced this path.
    pub seed: u64,
}

/// ChaCha stream for path `stream` under `master_seed`. Streams are
/// independent, so per-path results do not depend on worker scheduling.
pub fn path_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Simulate one path from state 0 (stream 0 of `seed`).
///
/// ```
/// use skipfree::chain::Generator;
/// use skipfree::sim::{simulate, StoppingRule};
///
/// let g = Generator::mm1(1.0, 2.0).unwrap();
/// let out = simulate(&g, StoppingRule::MinOf(10.0, 5), 42).unwrap();
/// assert!(out.tau <= 10.0);
/// assert!(out.x_star >= out.x_at_tau);
/// // same seed, same path
/// assert_eq!(out, simulate(&g, StoppingRule::MinOf(10.0, 5), 42).unwrap());
/// ```
pub fn simulate(g: &Generator, rule: StoppingRule, seed: u64) -> Result<TrajectoryOutcome> {
    simulate_from_with(g, 0, rule, seed, 0, &SimCaps::default())
}

/// Simulate one path from an arbitrary start state (stream 0 of `seed`).
pub fn simulate_from(g: &Generator, start: State, rule: StoppingRule, seed: u64) -> Result<TrajectoryOutcome> {
    simulate_from_with(g, start, rule, seed, 0, &SimCaps::default())
}

/// Fully parameterized single-path simulation.
pub fn simulate_from_with(
    g: &Generator,
    start: State,
    rule: StoppingRule,
    seed: u64,
    stream: u64,
    caps: &SimCaps,
) -> Result<TrajectoryOutcome> {
    let rule = rule.validated()?;
    let Some(t_cap) = rule.time_cap() else {
        return Err(Error::UnboundedRule(rule.to_string()));
    };
    let mut rng = path_rng(seed, stream);
    let mut walker = Walker::new(g, start, caps);

    if let Some(l) = rule.hit_level() {
        if start >= l {
            return Ok(TrajectoryOutcome {
                tau: 0.0,
                x_at_tau: start,
                x_star: start,
                n_jumps: 0,
                seed,
            });
        }
    }

    loop {
        let (dt, next) = walker.propose(&mut rng)?;
        if walker.t + dt > t_cap {
            return Ok(TrajectoryOutcome {
                tau: t_cap,
                x_at_tau: walker.state,
                x_star: walker.x_star,
                n_jumps: walker.n_jumps,
                seed,
            });
        }
        walker.advance(dt, next)?;
        if let Some(l) = rule.hit_level() {
            if walker.state >= l {
                return Ok(TrajectoryOutcome {
                    tau: walker.t,
                    x_at_tau: walker.state,
                    x_star: walker.x_star,
                    n_jumps: walker.n_jumps,
                    seed,
                });
            }
        }
    }
}

/// Parallel batch; path `i` uses stream `i`. Results arrive in path order.
pub fn simulate_paths(
    g: &Generator,
    rule: StoppingRule,
    n_paths: usize,
    seed: u64,
    caps: &SimCaps,
) -> Result<Vec<TrajectoryOutcome>> {
    simulate_paths_from(g, 0, rule, n_paths, seed, caps)
}

pub(crate) fn require_paths(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("path count must be positive".into()));
    }
    Ok(())
}

/// Parallel batch from an arbitrary start state.
pub fn simulate_paths_from(
    g: &Generator,
    start: State,
    rule: StoppingRule,
    n_paths: usize,
    seed: u64,
    caps: &SimCaps,
) -> Result<Vec<TrajectoryOutcome>> {
    require_paths(n_paths)?;
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_from_with(g, start, rule, seed, i, caps))
        .collect()
}

/// One-step engine shared by the plain and checkpointing simulations.
struct Walker<'a> {
    g: &'a Generator,
    caps: &'a SimCaps,
    state: State,
    t: f64,
    x_star: State,
    n_jumps: u64,
    /// Reused sparse row buffer.
    row: Vec<(State, f64)>,
}

impl<'a> Walker<'a> {
    fn new(g: &'a Generator, start: State, caps: &'a SimCaps) -> Self {
        Walker {
            g,
            caps,
            state: start,
            t: 0.0,
            x_star: start,
            n_jumps: 0,
            row: Vec::new(),
        }
    }

    /// Draw the holding time and the next state. Consumes exactly two
    /// uniforms per call.
    fn propose(&mut self, rng: &mut ChaCha8Rng) -> Result<(f64, State)> {
        let n = self.state;
        let lambda = self.g.birth_rate(n);
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidGenerator {
                state: n,
                reason: format!("birth rate {lambda} is not a finite nonnegative rate"),
            });
        }
        self.row.clear();
        let mut bad: Option<Error> = None;
        let mut total = lambda;
        self.g.for_each_down(n, |j, q| {
            if j >= n && bad.is_none() {
                bad = Some(Error::InvalidGenerator {
                    state: n,
                    reason: format!("down rate targets {j} >= {n}"),
                });
            }
            if (!(q >= 0.0) || !q.is_finite()) && bad.is_none() {
                bad = Some(Error::InvalidGenerator {
                    state: n,
                    reason: format!("down rate q_{{{n},{j}}} = {q} is invalid"),
                });
            }
            total += q;
            self.row.push((j, q));
        });
        if let Some(e) = bad {
            return Err(e);
        }
        if total <= 0.0 {
            return Err(Error::DeadState(n));
        }
        let u: f64 = rng.random();
        let dt = -(1.0 - u).ln() / total;
        // inverse-CDF over the sparse row: birth first, then downs in order
        let v = rng.random::<f64>() * total;
        let next = if v < lambda {
            n + 1
        } else {
            let mut acc = lambda;
            let mut chosen = self.row.last().map(|&(j, _)| j).unwrap_or(n + 1);
            for &(j, q) in &self.row {
                acc += q;
                if v < acc {
                    chosen = j;
                    break;
                }
            }
            chosen
        };
        Ok((dt, next))
    }

    fn advance(&mut self, dt: f64, next: State) -> Result<()> {
        self.t += dt;
        self.state = next;
        self.n_jumps += 1;
        if next > self.x_star {
            self.x_star = next;
        }
        if next > self.caps.state_cap {
            return Err(Error::ExplosionGuard {
                cap: self.caps.state_cap,
                n_jumps: self.n_jumps,
                t: self.t,
            });
        }
        if self.n_jumps > self.caps.event_cap {
            return Err(Error::EventCap {
                cap: self.caps.event_cap,
            });
        }
        Ok(())
    }
}

/// Running maxima of one path observed at each checkpoint time.
///
/// `times` must be ascending; entry `[i]` is `X*` at `times[i]`. One path
/// serves every checkpoint, which doubles as common-random-numbers across
/// the time grid.
pub fn simulate_xstar_checkpoints(
    g: &Generator,
    start: State,
    times: &[f64],
    n_paths: usize,
    seed: u64,
    caps: &SimCaps,
) -> Result<Vec<Vec<State>>> {
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "checkpoint times must be ascending and nonempty".into(),
        ));
    }
    if times[0] < 0.0 || !times.iter().all(|t| t.is_finite()) {
        return Err(Error::InvalidParameter("checkpoint times must be finite and nonnegative".into()));
    }
    require_paths(n_paths)?;
    let t_end = *times.last().unwrap();
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let mut walker = Walker::new(g, start, caps);
            let mut out = Vec::with_capacity(times.len());
            let mut next_cp = 0usize;
            loop {
                let (dt, next) = walker.propose(&mut rng)?;
                let t_new = walker.t + dt;
                while next_cp < times.len() && times[next_cp] < t_new {
                    out.push(walker.x_star);
                    next_cp += 1;
                }
                if t_new > t_end {
                    break;
                }
                walker.advance(dt, next)?;
            }
            while next_cp < times.len() {
                out.push(walker.x_star);
                next_cp += 1;
            }
            Ok(out)
        })
        .collect()
}

/// Outcome of one coupled two-component path run to a fixed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledOutcome {
    pub y_star: State,
    pub z_star: State,
    /// Final states at the time horizon; the marginal laws of these match
    /// the single chains started at `m` and 0.
    pub y_end: State,
    pub z_end: State,
    /// Largest single-jump increase of the gap `Y - Z`; the couplings are
    /// built so this is identically zero.
    pub max_distance_increase: i64,
    pub start_m: State,
    pub n_jumps: u64,
    pub seed: u64,
}

fn seq_at(seq: &[f64], n: usize) -> f64 {
    seq[n.min(seq.len() - 1)]
}

/// Death rate mu_n for n >= 1 from a sequence indexed mu_seq[0] = mu_1;
/// mu_0 = 0 (state 0 has no deaths).
fn mu_at(mu_seq: &[f64], n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        seq_at(mu_seq, n - 1)
    }
}

fn check_monotone_pair(name: &str, hi: f64, lo: f64, i: usize, j: usize) -> Result<f64> {
    let r = hi - lo;
    if r < 0.0 {
        return Err(Error::HypothesisViolation(format!(
            "{name} monotonicity fails between states {j} and {i} (rates {lo} vs {hi})"
        )));
    }
    Ok(r)
}

/// Coupled birth-death pair `(Y, Z)` from `(m, 0)` with the monotone
/// coupling: joint births at `lambda_i`, solo Z-births at `lambda_j -
/// lambda_i`, joint deaths at `mu_j`, solo Y-deaths at `mu_i - mu_j`.
/// Requires decreasing birth rates and increasing death rates; violations
/// encountered along the path are errors.
pub fn simulate_coupled_bd(
    lambda_seq: &[f64],
    mu_seq: &[f64],
    m: State,
    t_end: f64,
    seed: u64,
) -> Result<CoupledOutcome> {
    simulate_coupled_bd_with(lambda_seq, mu_seq, m, t_end, seed, 0, &SimCaps::default())
}

pub fn simulate_coupled_bd_with(
    lambda_seq: &[f64],
    mu_seq: &[f64],
    m: State,
    t_end: f64,
    seed: u64,
    stream: u64,
    caps: &SimCaps,
) -> Result<CoupledOutcome> {
    validate_coupling_inputs(lambda_seq, Some(mu_seq), t_end)?;
    let mut rng = path_rng(seed, stream);
    let (mut y, mut z) = (m, 0usize);
    let mut t = 0.0;
    let (mut y_star, mut z_star) = (y, z);
    let mut n_jumps = 0u64;
    let mut max_inc = 0i64;

    loop {
        let li = seq_at(lambda_seq, y);
        let lj = seq_at(lambda_seq, z);
        let mi = mu_at(mu_seq, y);
        let mj = mu_at(mu_seq, z);
        let solo_birth = check_monotone_pair("birth-rate", lj, li, y, z)?;
        let solo_death = check_monotone_pair("death-rate", mi, mj, y, z)?;
        // moves: (y+1, z+1) | (y, z+1) | (y-1, z-1) | (y-1, z)
        let rates = [li, solo_birth, mj, solo_death];
        let total: f64 = rates.iter().sum();
        if total <= 0.0 {
            // absorbed (can only happen with zero rates everywhere)
            return Ok(CoupledOutcome {
                y_star,
                z_star,
                y_end: y,
                z_end: z,
                max_distance_increase: max_inc,
                start_m: m,
                n_jumps,
                seed,
            });
        }
        let u: f64 = rng.random();
        let dt = -(1.0 - u).ln() / total;
        if t + dt > t_end {
            break;
        }
        t += dt;
        let v = rng.random::<f64>() * total;
        let gap_before = y as i64 - z as i64;
        if v < rates[0] {
            y += 1;
            z += 1;
        } else if v < rates[0] + rates[1] {
            z += 1;
        } else if v < rates[0] + rates[1] + rates[2] {
            y -= 1;
            z -= 1;
        } else {
            y -= 1;
        }
        let gap_after = y as i64 - z as i64;
        max_inc = max_inc.max(gap_after - gap_before);
        if gap_after < 0 {
            return Err(Error::HypothesisViolation(format!(
                "coupled order Y >= Z broke at (y, z) = ({y}, {z})"
            )));
        }
        y_star = y_star.max(y);
        z_star = z_star.max(z);
        n_jumps += 1;
        if y > caps.state_cap {
            return Err(Error::ExplosionGuard {
                cap: caps.state_cap,
                n_jumps,
                t,
            });
        }
        if n_jumps > caps.event_cap {
            return Err(Error::EventCap { cap: caps.event_cap });
        }
    }
    Ok(CoupledOutcome {
        y_star,
        z_star,
        y_end: y,
        z_end: z,
        max_distance_increase: max_inc,
        start_m: m,
        n_jumps,
        seed,
    })
}

/// Coupled catastrophe pair: joint births as above, joint collapse of both
/// components to `(0, 0)` at rate `mu` from any state but the origin.
pub fn simulate_coupled_catastrophe(
    lambda_seq: &[f64],
    mu: f64,
    m: State,
    t_end: f64,
    seed: u64,
) -> Result<CoupledOutcome> {
    simulate_coupled_catastrophe_with(lambda_seq, mu, m, t_end, seed, 0, &SimCaps::default())
}

pub fn simulate_coupled_catastrophe_with(
    lambda_seq: &[f64],
    mu: f64,
    m: State,
    t_end: f64,
    seed: u64,
    stream: u64,
    caps: &SimCaps,
) -> Result<CoupledOutcome> {
    validate_coupling_inputs(lambda_seq, None, t_end)?;
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    let mut rng = path_rng(seed, stream);
    let (mut y, mut z) = (m, 0usize);
    let mut t = 0.0;
    let (mut y_star, mut z_star) = (y, z);
    let mut n_jumps = 0u64;
    let mut max_inc = 0i64;

    loop {
        let li = seq_at(lambda_seq, y);
        let lj = seq_at(lambda_seq, z);
        let solo_birth = check_monotone_pair("birth-rate", lj, li, y, z)?;
        let collapse = if (y, z) == (0, 0) { 0.0 } else { mu };
        let rates = [li, solo_birth, collapse];
        let total: f64 = rates.iter().sum();
        if total <= 0.0 {
            return Ok(CoupledOutcome {
                y_star,
                z_star,
                y_end: y,
                z_end: z,
                max_distance_increase: max_inc,
                start_m: m,
                n_jumps,
                seed,
            });
        }
        let u: f64 = rng.random();
        let dt = -(1.0 - u).ln() / total;
        if t + dt > t_end {
            break;
        }
        t += dt;
        let v = rng.random::<f64>() * total;
        let gap_before = y as i64 - z as i64;
        if v < rates[0] {
            y += 1;
            z += 1;
        } else if v < rates[0] + rates[1] {
            z += 1;
        } else {
            y = 0;
            z = 0;
        }
        let gap_after = y as i64 - z as i64;
        max_inc = max_inc.max(gap_after - gap_before);
        y_star = y_star.max(y);
        z_star = z_star.max(z);
        n_jumps += 1;
        if y > caps.state_cap {
            return Err(Error::ExplosionGuard {
                cap: caps.state_cap,
                n_jumps,
                t,
            });
        }
        if n_jumps > caps.event_cap {
            return Err(Error::EventCap { cap: caps.event_cap });
        }
    }
    Ok(CoupledOutcome {
        y_star,
        z_star,
        y_end: y,
        z_end: z,
        max_distance_increase: max_inc,
        start_m: m,
        n_jumps,
        seed,
    })
}

fn validate_coupling_inputs(lambda_seq: &[f64], mu_seq: Option<&[f64]>, t_end: f64) -> Result<()> {
    if lambda_seq.is_empty() {
        return Err(Error::InvalidParameter("lambda_seq must be nonempty".into()));
    }
    if lambda_seq.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidParameter("lambda_seq must be positive and finite".into()));
    }
    if let Some(mu) = mu_seq {
        if mu.is_empty() {
            return Err(Error::InvalidParameter("mu_seq must be nonempty".into()));
        }
        if mu.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter("mu_seq must be nonnegative and finite".into()));
        }
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!("t_end must be finite and nonnegative, got {t_end}")));
    }
    Ok(())
}

/// Parallel batches of coupled paths.
pub fn simulate_coupled_bd_paths(
    lambda_seq: &[f64],
    mu_seq: &[f64],
    m: State,
    t_end: f64,
    n_paths: usize,
    seed: u64,
    caps: &SimCaps,
) -> Result<Vec<CoupledOutcome>> {
    require_paths(n_paths)?;
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_coupled_bd_with(lambda_seq, mu_seq, m, t_end, seed, i, caps))
        .collect()
}

pub fn simulate_coupled_catastrophe_paths(
    lambda_seq: &[f64],
    mu: f64,
    m: State,
    t_end: f64,
    n_paths: usize,
    seed: u64,
    caps: &SimCaps,
) -> Result<Vec<CoupledOutcome>> {
    require_paths(n_paths)?;
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_coupled_catastrophe_with(lambda_seq, mu, m, t_end, seed, i, caps))
        .collect()
}

/// One grid cell of the controllability probe.
#[derive(Debug, Clone)]
pub struct ControllabilityCell {
    pub t: f64,
    pub k: State,
    /// `floor(beta k)`.
    pub lhs_level: State,
    /// `floor(gamma k)`.
    pub rhs_level: State,
    /// `P_k(X*_t >= lhs_level)`.
    pub lhs: BinomialEstimate,
    /// `P_0(X*_t >= rhs_level)`.
    pub rhs: BinomialEstimate,
    pub ratio: Option<f64>,
    pub ratio_ci: Option<(f64, f64)>,
    /// Set when the denominator estimate is zero with a positive numerator:
    /// not a failure, a sample-size signal.
    pub insufficient_samples: bool,
}

/// Monte Carlo probe of the restart-domination bound
/// `P_k(X*_t >= floor(beta k)) <= C P_0(X*_t >= floor(gamma k))`.
#[allow(clippy::too_many_arguments)]
pub fn controllability_probe(
    g: &Generator,
    beta: f64,
    gamma: f64,
    t_grid: &[f64],
    k_grid: &[State],
    n_samples: usize,
    seed: u64,
    caps: &SimCaps,
) -> Result<Vec<ControllabilityCell>> {
    if !(beta > 1.0) {
        return Err(Error::InvalidParameter(format!("beta must exceed 1, got {beta}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let mut cells = Vec::new();
    for (ki, &k) in k_grid.iter().enumerate() {
        // one batch from k for the numerator, one from 0 for the denominator
        let seed_lhs = mix_seed(seed, 2 * ki as u64);
        let seed_rhs = mix_seed(seed, 2 * ki as u64 + 1);
        let from_k = simulate_xstar_checkpoints(g, k, t_grid, n_samples, seed_lhs, caps)?;
        let from_0 = simulate_xstar_checkpoints(g, 0, t_grid, n_samples, seed_rhs, caps)?;
        for (ti, &t) in t_grid.iter().enumerate() {
            let lhs_level = (beta * k as f64).floor() as State;
            let rhs_level = (gamma * k as f64).floor() as State;
            let lhs_count = from_k.iter().filter(|p| p[ti] >= lhs_level).count() as u64;
            let rhs_count = from_0.iter().filter(|p| p[ti] >= rhs_level).count() as u64;
            let lhs = BinomialEstimate::new(lhs_count, n_samples as u64);
            let rhs = BinomialEstimate::new(rhs_count, n_samples as u64);
            let rc = crate::stats::proportion_ratio_ci(&lhs, &rhs);
            cells.push(ControllabilityCell {
                t,
                k,
                lhs_level,
                rhs_level,
                ratio: rc.map(|(r, _)| r),
                ratio_ci: rc.map(|(_, ci)| ci),
                insufficient_samples: rhs_count == 0 && lhs_count > 0,
                lhs,
                rhs,
            });
        }
    }
    Ok(cells)
}

/// splitmix64 step, used to derive independent sub-seeds for grid cells.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e3779b97f4a7c15);
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
