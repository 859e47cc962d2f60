//! Equilibrium transition paths of a growth economy whose households expect
//! Transformative AI at a random date and compete, through capital
//! accumulation, for a wealth-based share of post-TAI AI labor.
//!
//! The crate is organized bottom-up:
//!
//! - [`econ`]: preferences, technology, factor prices, stationary equilibria
//!   and the AI-labor allocation rule.
//! - [`timeline`]: arrival-year distributions, their negative beta-binomial
//!   construction and fitting, and passive belief updating.
//! - [`transition`]: the no-arrival spine and one post-TAI branch per
//!   arrival year, solved jointly by stacked-residual Newton iteration.
//! - [`term_structure`]: bond rates, rental rates, savings and the strategic
//!   wedge read off solved paths.
//! - [`scenario`]: configuration, orchestration and CSV outputs for the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod econ;
pub mod error;
pub mod format;
mod linalg;
pub mod scenario;
pub mod term_structure;
pub mod timeline;
pub mod transition;

pub use error::{Error, Result};
