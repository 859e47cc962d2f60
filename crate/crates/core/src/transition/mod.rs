//! Equilibrium transition paths.
//!
//! Households are identical, so the equilibrium is a deterministic tree: one
//! spine along which TAI has not yet arrived, and for every year `s` with a
//! positive hazard a post-TAI branch that starts from the spine capital in
//! year `s`. All series are in detrended units. Along the spine TFP grows at
//! `g_sq`; on a branch it grows at `g_tai` from the arrival year on, so the
//! arrival year's factor prices are the same on the spine and on its branch.
//!
//! Both kinds of path are solved in sequence space: the capital sequence is
//! the unknown, the stacked Euler residuals are the equations, and a damped
//! Newton iteration with a tridiagonal Jacobian drives them to zero.

mod branch;
mod newton;
mod spine;

pub use branch::{solve_post_tai_branch, strategic_premium, PostTaiPath};
pub use spine::{pre_tai_euler_residual, solve_spine, solve_spine_with, PremiumRule, SpinePath};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Last spine year `T`; capital is pinned to the status-quo steady state there.
    pub terminal_year: usize,
    /// Number of branch periods after arrival before the TAI steady state is imposed.
    pub branch_horizon: usize,
    /// Sup-norm tolerance on Euler residuals and Newton steps.
    pub tol: f64,
    pub max_iter: usize,
    /// Step contraction factor applied when a Newton step is rejected.
    pub damping: f64,
    /// Require every branch to end within `tol` of the TAI steady state.
    pub check_branch_terminal: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            terminal_year: 150,
            branch_horizon: 120,
            tol: 1e-8,
            max_iter: 500,
            damping: 0.5,
            check_branch_terminal: true,
        }
    }
}

impl SolverSettings {
    /// Checks internal consistency and that the spine covers `timeline_horizon` years.
    pub fn validate(&self, timeline_horizon: usize) -> Result<()> {
        if self.terminal_year < 2 {
            return Err(Error::config("terminal_year must be at least 2"));
        }
        if self.terminal_year < timeline_horizon {
            return Err(Error::config(format!(
                "terminal_year {} is shorter than the {timeline_horizon}-year timeline",
                self.terminal_year
            )));
        }
        if self.branch_horizon < 1 {
            return Err(Error::config("branch_horizon must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::config("tol must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::config(format!("damping {} must lie in (0, 1]", self.damping)));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter must be positive"));
        }
        Ok(())
    }
}
