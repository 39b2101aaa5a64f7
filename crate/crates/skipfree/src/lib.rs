//! Scale-function machinery, sufficient-condition checks, and seeded Monte
//! Carlo verification of sharp moderate maximal inequalities for upward
//! skip-free continuous-time Markov chains.
//!
//! The crate is organized around the pipeline: describe a chain
//! ([`chain::Generator`]), compute its scale table ([`scale::compute_scale`])
//! with the continuous extension and inverse `g`, evaluate the sufficient
//! conditions ([`checkers`]), and verify the maximal inequalities by exact
//! identities and reproducible simulation ([`sim`], [`lab`]).
//!
//! Every Monte Carlo entry point takes one master seed; per-path ChaCha
//! streams are derived from `(seed, path index)`, so results are
//! bit-identical across worker counts.
//!
//! ```
//! use skipfree::chain::Generator;
//! use skipfree::scale::{compute_scale, ExtensionKind};
//!
//! // critical m/m/1: f_n = n(n+1)/2, so the expected first-passage time
//! // to level 3 is 6, and g inverts f
//! let g = Generator::mm1(1.0, 1.0).unwrap();
//! let s = compute_scale(&g, 50, ExtensionKind::PiecewiseLinear).unwrap();
//! assert_eq!(s.expected_hitting_time(3).unwrap(), 6.0);
//! assert_eq!(s.g_eval(6.0).unwrap(), 3.0);
//! assert_eq!(s.floor_ceil_g(4.2).unwrap(), (2, 3));
//! ```

// `!(x > 0.0)` is used throughout instead of `x <= 0.0`: the negated form
// also rejects NaN, which is the point of those guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod checkers;
pub mod cli;
pub mod config;
pub mod lab;
pub mod parse;
pub mod report;
pub mod scale;
pub mod sim;
pub mod stats;

mod error;

pub use error::{Error, Result};
