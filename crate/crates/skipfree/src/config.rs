//! JSON config files describing generators. Unknown keys are rejected so a
//! typo in an experiment file fails loudly instead of silently defaulting.

use serde::{Deserialize, Serialize};

use crate::chain::{Generator, State};
use crate::{Error, Result};

/// On-disk generator description:
/// `{"kind": "mm1" | "catastrophe" | "birth_death" | "explicit", ...}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    Mm1 {
        lambda: f64,
        mu: f64,
    },
    Catastrophe {
        lambda: f64,
        mu: f64,
    },
    BirthDeath {
        lambda_seq: Vec<f64>,
        mu_seq: Vec<f64>,
    },
    /// Row-sparse rate list `[[from, to, rate], ...]` truncated at
    /// `state_cap`.
    Explicit {
        rates: Vec<(State, State, f64)>,
        state_cap: State,
    },
}

impl GeneratorConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("generator config: {e}")))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn build(&self) -> Result<Generator> {
        match self {
            GeneratorConfig::Mm1 { lambda, mu } => Generator::mm1(*lambda, *mu),
            GeneratorConfig::Catastrophe { lambda, mu } => Generator::catastrophe(*lambda, *mu),
            GeneratorConfig::BirthDeath { lambda_seq, mu_seq } => {
                Generator::birth_death(lambda_seq, mu_seq)
            }
            GeneratorConfig::Explicit { rates, state_cap } => Generator::explicit(rates, *state_cap),
        }
    }
}
