//! Small parsers for CLI list arguments. Centralized here so the fuzz
//! targets can drive exactly what the CLI consumes.

use crate::checkers::ModerateFunction;
use crate::{Error, Result};

/// Comma-separated finite reals: `"0.1,1,10"`.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::Config(format!("cannot parse {p:?} as a real number")))
                .and_then(|v| {
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(Error::Config(format!("{p:?} is not finite")))
                    }
                })
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(Error::Config(format!("empty number list {s:?}")))
            } else {
                Ok(v)
            }
        })
}

/// Comma-separated nonnegative integers, with `a..b` inclusive range
/// shorthand: `"4..12"` or `"2,5,9"`.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("cannot parse range start {a:?}")))?;
            let b: usize = b
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("cannot parse range end {b:?}")))?;
            if b < a {
                return Err(Error::Config(format!("range {part:?} is reversed")));
            }
            if b - a > 1_000_000 {
                return Err(Error::Config(format!("range {part:?} is unreasonably large")));
            }
            out.extend(a..=b);
        } else {
            out.push(
                part.parse()
                    .map_err(|_| Error::Config(format!("cannot parse {part:?} as an integer")))?,
            );
        }
    }
    if out.is_empty() {
        return Err(Error::Config(format!("empty integer list {s:?}")));
    }
    Ok(out)
}

/// Hit-level list where `inf` means "no hit level" (pure fixed-time rule):
/// `"1,3,10,inf"`.
pub fn parse_level_list(s: &str) -> Result<Vec<Option<usize>>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            if p.eq_ignore_ascii_case("inf") {
                Ok(None)
            } else {
                p.parse::<usize>()
                    .map(Some)
                    .map_err(|_| Error::Config(format!("cannot parse level {p:?} (integer or 'inf')")))
            }
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(Error::Config(format!("empty level list {s:?}")))
            } else {
                Ok(v)
            }
        })
}

/// Moderate-function descriptors: `power:P` or `powerlog:P,Q`.
pub fn parse_moderate(s: &str) -> Result<ModerateFunction> {
    let bad = || Error::Config(format!("cannot parse moderate function {s:?}; expected power:P or powerlog:P,Q"));
    let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
    match kind.trim() {
        "power" => ModerateFunction::power(rest.trim().parse::<f64>().map_err(|_| bad())?),
        "powerlog" => {
            let (p, q) = rest.split_once(',').ok_or_else(bad)?;
            ModerateFunction::power_log(
                p.trim().parse::<f64>().map_err(|_| bad())?,
                q.trim().parse::<f64>().map_err(|_| bad())?,
            )
        }
        _ => Err(bad()),
    }
}

/// Comma-separated list of moderate-function descriptors.
pub fn parse_moderate_list(s: &str) -> Result<Vec<ModerateFunction>> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(parse_moderate)
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(Error::Config(format!("empty moderate-function list {s:?}")))
            } else {
                Ok(v)
            }
        })
}
