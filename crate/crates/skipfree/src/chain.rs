//! Upward skip-free generators: rate descriptions, built-in families, and
//! validation.
//!
//! A chain on the nonnegative integers is upward skip-free when its
//! generator matrix satisfies `q_ij = 0` for `j >= i + 2`: births move up
//! by exactly one, deaths may jump down arbitrarily far. Rates are served
//! lazily by state so unbounded state spaces never materialize a matrix;
//! only the explicit kind carries a truncation cap.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

/// Chain states are nonnegative integers.
pub type State = usize;

/// Which family a generator belongs to. Built-ins unlock closed-form fast
/// paths in the scale recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    BirthDeath,
    Catastrophe,
    ExplicitTruncated,
    Callback,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GeneratorKind::BirthDeath => "birth_death",
            GeneratorKind::Catastrophe => "catastrophe",
            GeneratorKind::ExplicitTruncated => "explicit",
            GeneratorKind::Callback => "callback",
        };
        f.write_str(s)
    }
}

/// Per-state rate source. Finite sequences extend with their last value so
/// that constant-tail families (m/m/1, catastrophe, monotone-rate chains)
/// are expressible without a cap.
#[derive(Clone)]
enum RateSeq {
    Const(f64),
    Seq(Arc<[f64]>),
    Fn(Arc<dyn Fn(State) -> f64 + Send + Sync>),
}

impl RateSeq {
    fn at(&self, n: State) -> f64 {
        match self {
            RateSeq::Const(v) => *v,
            RateSeq::Seq(v) => v[n.min(v.len() - 1)],
            RateSeq::Fn(f) => f(n),
        }
    }
}

impl fmt::Debug for RateSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateSeq::Const(v) => write!(f, "Const({v})"),
            RateSeq::Seq(v) => write!(f, "Seq({} values)", v.len()),
            RateSeq::Fn(_) => write!(f, "Fn"),
        }
    }
}

/// Downward-rate source: the sparse map `j -> q_nj` for `j < n`.
#[derive(Clone)]
enum DownSpec {
    /// Birth-death: a single entry `{n-1 -> mu_n}` for n >= 1.
    Single(RateSeq),
    /// Catastrophe: a single entry `{0 -> mu}` for n >= 1.
    ToZero(f64),
    /// User-supplied sparse rows up to a cap.
    Rows(Arc<ExplicitRows>),
    /// Arbitrary callback returning the sparse row of state n.
    Fn(Arc<dyn Fn(State) -> Vec<(State, f64)> + Send + Sync>),
}

impl fmt::Debug for DownSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DownSpec::Single(s) => write!(f, "Single({s:?})"),
            DownSpec::ToZero(mu) => write!(f, "ToZero({mu})"),
            DownSpec::Rows(r) => write!(f, "Rows(cap={})", r.cap),
            DownSpec::Fn(_) => write!(f, "Fn"),
        }
    }
}

#[derive(Debug)]
struct ExplicitRows {
    cap: State,
    /// q_{n,n+1} for n <= cap.
    birth: Vec<f64>,
    /// Sorted sparse down rows: down[n] = [(j, q_nj)] with j < n.
    down: Vec<Vec<(State, f64)>>,
    /// Original triples, kept so `validate` can flag entries that do not
    /// fit the skip-free shape (they are invisible to the accessors).
    raw: Vec<(State, State, f64)>,
}

/// Rate description of an upward skip-free chain.
///
/// Immutable after construction and cheap to clone (shared rate tables), so
/// it can be handed to concurrent simulation workers freely.
#[derive(Debug, Clone)]
pub struct Generator {
    kind: GeneratorKind,
    birth: RateSeq,
    down: DownSpec,
    state_cap: Option<State>,
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be a positive finite rate, got {v}"
        )));
    }
    Ok(())
}

impl Generator {
    /// M/M/1 queue: `lambda_n = lambda` for n >= 0, `mu_n = mu` for n >= 1.
    pub fn mm1(lambda: f64, mu: f64) -> Result<Self> {
        require_positive("lambda", lambda)?;
        require_positive("mu", mu)?;
        Ok(Generator {
            kind: GeneratorKind::BirthDeath,
            birth: RateSeq::Const(lambda),
            down: DownSpec::Single(RateSeq::Const(mu)),
            state_cap: None,
        })
    }

    /// Catastrophe chain: `lambda_n = lambda`, `q_n0 = mu` for n >= 1 and no
    /// other downward rates.
    pub fn catastrophe(lambda: f64, mu: f64) -> Result<Self> {
        require_positive("lambda", lambda)?;
        require_positive("mu", mu)?;
        Ok(Generator {
            kind: GeneratorKind::Catastrophe,
            birth: RateSeq::Const(lambda),
            down: DownSpec::ToZero(mu),
            state_cap: None,
        })
    }

    /// General birth-death chain. `lambda_seq[n]` is the birth rate at n,
    /// `mu_seq[k]` is the death rate at state k + 1; both sequences extend
    /// with their last value.
    pub fn birth_death(lambda_seq: &[f64], mu_seq: &[f64]) -> Result<Self> {
        if lambda_seq.is_empty() {
            return Err(Error::InvalidParameter("lambda_seq must be nonempty".into()));
        }
        if mu_seq.is_empty() {
            return Err(Error::InvalidParameter("mu_seq must be nonempty".into()));
        }
        for (n, &l) in lambda_seq.iter().enumerate() {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "lambda_seq[{n}] must be positive, got {l}"
                )));
            }
        }
        for (k, &m) in mu_seq.iter().enumerate() {
            if !(m >= 0.0) || !m.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "mu_seq[{k}] must be nonnegative, got {m}"
                )));
            }
        }
        Ok(Generator {
            kind: GeneratorKind::BirthDeath,
            birth: RateSeq::Seq(lambda_seq.into()),
            down: DownSpec::Single(RateSeq::Seq(mu_seq.into())),
            state_cap: None,
        })
    }

    /// Pure birth chain: no downward rates at all.
    pub fn pure_birth(lambda_seq: &[f64]) -> Result<Self> {
        Self::birth_death(lambda_seq, &[0.0])
    }

    /// Callback-backed generator; `down(n)` must return the sparse row
    /// `[(j, q_nj)]` with `j < n`. Violations are caught by `validate` and
    /// lazily during simulation.
    pub fn from_fns(
        birth: impl Fn(State) -> f64 + Send + Sync + 'static,
        down: impl Fn(State) -> Vec<(State, f64)> + Send + Sync + 'static,
    ) -> Self {
        Generator {
            kind: GeneratorKind::Callback,
            birth: RateSeq::Fn(Arc::new(birth)),
            down: DownSpec::Fn(Arc::new(down)),
            state_cap: None,
        }
    }

    /// Explicit row-sparse rate list `[(from, to, rate)]` truncated at
    /// `state_cap`. Entries that do not fit the skip-free shape are kept
    /// for `validate` to report but never served by the rate accessors.
    pub fn explicit(triples: &[(State, State, f64)], state_cap: State) -> Result<Self> {
        // rows are materialized up to the cap; anything past the simulator's
        // hard state cap is pointless and invites allocation bombs from
        // untrusted configs
        if state_cap > 10_000_000 {
            return Err(Error::InvalidParameter(format!(
                "state_cap {state_cap} exceeds the supported maximum of 10^7"
            )));
        }
        let mut birth = vec![0.0; state_cap + 1];
        let mut down: Vec<Vec<(State, f64)>> = vec![Vec::new(); state_cap + 1];
        for &(from, to, rate) in triples {
            if from > state_cap {
                return Err(Error::InvalidParameter(format!(
                    "rate entry from state {from} exceeds state_cap {state_cap}"
                )));
            }
            if to == from + 1 {
                birth[from] += rate;
            } else if to < from {
                down[from].push((to, rate));
            }
            // to == from or to >= from + 2: left to validate()
        }
        for row in &mut down {
            row.sort_by_key(|&(j, _)| j);
            // merge duplicate targets
            let mut merged: Vec<(State, f64)> = Vec::with_capacity(row.len());
            for &(j, q) in row.iter() {
                match merged.last_mut() {
                    Some((lj, lq)) if *lj == j => *lq += q,
                    _ => merged.push((j, q)),
                }
            }
            *row = merged;
        }
        Ok(Generator {
            kind: GeneratorKind::ExplicitTruncated,
            birth: RateSeq::Const(0.0), // unused; rows carry births
            down: DownSpec::Rows(Arc::new(ExplicitRows {
                cap: state_cap,
                birth,
                down,
                raw: triples.to_vec(),
            })),
            state_cap: Some(state_cap),
        })
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn state_cap(&self) -> Option<State> {
        self.state_cap
    }

    /// Birth rate `lambda_n = q_{n,n+1}`. Zero beyond an explicit cap.
    pub fn birth_rate(&self, n: State) -> f64 {
        match &self.down {
            DownSpec::Rows(rows) => {
                if n <= rows.cap {
                    rows.birth[n]
                } else {
                    0.0
                }
            }
            _ => self.birth.at(n),
        }
    }

    /// Visit the sparse downward row of state `n` in ascending target order.
    pub fn for_each_down(&self, n: State, mut visit: impl FnMut(State, f64)) {
        if n == 0 {
            return;
        }
        match &self.down {
            DownSpec::Single(mu) => {
                let m = mu.at(n - 1);
                if m > 0.0 {
                    visit(n - 1, m);
                }
            }
            DownSpec::ToZero(mu) => visit(0, *mu),
            DownSpec::Rows(rows) => {
                if n <= rows.cap {
                    for &(j, q) in &rows.down[n] {
                        visit(j, q);
                    }
                }
            }
            DownSpec::Fn(f) => {
                let mut row = f(n);
                row.sort_by_key(|&(j, _)| j);
                for (j, q) in row {
                    visit(j, q);
                }
            }
        }
    }

    /// Sparse map `j -> q_nj` for `j < n`, sorted by target.
    pub fn down_rates(&self, n: State) -> Vec<(State, f64)> {
        let mut out = Vec::new();
        self.for_each_down(n, |j, q| out.push((j, q)));
        out
    }

    /// Total death rate `mu_n`.
    pub fn death_rate(&self, n: State) -> f64 {
        let mut total = 0.0;
        self.for_each_down(n, |_, q| total += q);
        total
    }

    /// Total exit rate `lambda_n + mu_n`.
    pub fn total_rate(&self, n: State) -> f64 {
        self.birth_rate(n) + self.death_rate(n)
    }

    /// Partial sum `G_n(k) = sum_{j=0..=k} q_nj` of downward rates out of
    /// `n` into `{0..k}`. Errors when `k >= n`.
    pub fn cumulative_down(&self, n: State, k: State) -> Result<f64> {
        if k >= n {
            return Err(Error::Domain(format!(
                "cumulative_down requires k < n, got n = {n}, k = {k}"
            )));
        }
        let mut total = 0.0;
        self.for_each_down(n, |j, q| {
            if j <= k {
                total += q;
            }
        });
        Ok(total)
    }

    /// Check the generator invariants for every state in `0..=up_to` and
    /// report all violations. Violations are data, not failures.
    pub fn validate(&self, up_to: State) -> ValidationReport {
        let mut violations = Vec::new();
        for n in 0..=up_to {
            let l = self.birth_rate(n);
            if !(l > 0.0) {
                violations.push(Violation {
                    state: n,
                    description: format!("birth rate lambda_{n} = {l} is not positive"),
                });
            } else if !l.is_finite() {
                violations.push(Violation {
                    state: n,
                    description: format!("birth rate lambda_{n} = {l} is not finite"),
                });
            }
            let mut prev: Option<State> = None;
            self.for_each_down(n, |j, q| {
                if j >= n {
                    violations.push(Violation {
                        state: n,
                        description: format!("down rate target {j} is not below {n}"),
                    });
                }
                if !(q >= 0.0) || !q.is_finite() {
                    violations.push(Violation {
                        state: n,
                        description: format!("down rate q_{{{n},{j}}} = {q} is not a nonnegative finite rate"),
                    });
                }
                if let Some(p) = prev {
                    if j <= p {
                        violations.push(Violation {
                            state: n,
                            description: format!("down row of {n} has unsorted or duplicate target {j}"),
                        });
                    }
                }
                prev = Some(j);
            });
            let total = self.total_rate(n);
            if !total.is_finite() {
                violations.push(Violation {
                    state: n,
                    description: format!("total exit rate at {n} is not finite"),
                });
            }
        }
        if let DownSpec::Rows(rows) = &self.down {
            for &(from, to, rate) in &rows.raw {
                if to >= from + 2 && rate > 0.0 {
                    violations.push(Violation {
                        state: from,
                        description: format!(
                            "not skip-free: q_{{{from},{to}}} = {rate} is an upward jump of size {}",
                            to - from
                        ),
                    });
                } else if to == from {
                    violations.push(Violation {
                        state: from,
                        description: format!("diagonal rate q_{{{from},{from}}} is implied and may not be supplied"),
                    });
                } else if rate < 0.0 || !rate.is_finite() {
                    violations.push(Violation {
                        state: from,
                        description: format!("rate q_{{{from},{to}}} = {rate} is not a nonnegative finite rate"),
                    });
                }
            }
        }
        ValidationReport {
            ok: violations.is_empty(),
            violations,
        }
    }
}

/// One invariant violation found by `validate`.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub state: State,
    pub description: String,
}

/// Result of checking a generator's invariants over a state range.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}
