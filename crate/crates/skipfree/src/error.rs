use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received a parameter outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An index/argument pair outside an operation's domain (e.g. k >= n).
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation outside the range covered by a computed table.
    #[error("out of range: {what} = {value} exceeds table limit {limit}; raise n_max")]
    OutOfRange {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    /// A scale table is too short for the requested evaluation; the caller
    /// must recompute with a larger truncation level.
    #[error("scale table too small: g({t}) undefined, f table covers [0, {f_max}] up to level {n_max}; raise n_max")]
    TableTooSmall { t: f64, f_max: f64, n_max: usize },

    /// The table's floating-point values overflowed past this level.
    #[error("scale values overflow 64-bit floats past level {finite_limit}")]
    Overflow { finite_limit: usize },

    /// A simulated path climbed above the hard state cap.
    #[error("explosion guard: state exceeded cap {cap} after {n_jumps} jumps at t = {t}")]
    ExplosionGuard { cap: usize, n_jumps: u64, t: f64 },

    /// A simulated path exceeded the hard event cap.
    #[error("event cap exceeded: more than {cap} jumps before the stopping rule fired")]
    EventCap { cap: u64 },

    /// The generator is malformed at a state reached during lazy validation.
    #[error("invalid generator at state {state}: {reason}")]
    InvalidGenerator { state: usize, reason: String },

    /// A state with zero total exit rate was reached during simulation.
    #[error("dead state {0}: total exit rate is zero")]
    DeadState(usize),

    /// `simulate` requires a rule with a deterministic time cap.
    #[error("unbounded stopping rule: {0}; wrap in min:T,L to bound the simulation")]
    UnboundedRule(String),

    /// A coupling encountered a state pair violating its monotonicity hypotheses.
    #[error("coupling hypothesis violated: {0}")]
    HypothesisViolation(String),

    /// Config file / descriptor string could not be parsed.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code for the CLI: parse/parameter problems are 2, everything
    /// else (runtime failures) also 2; assertion failures are handled by
    /// the subcommands themselves via exit code 1.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
