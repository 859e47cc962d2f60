//! Deterministic post-TAI paths.
//!
//! A branch starts in the arrival year with predetermined capital and TFP
//! inherited from the spine; detrended capital then follows
//! `(1 + g_tai) k[j+1] = (1 - delta) k[j] + y[j] - c[j]` and the Euler
//! equation `c[j]^-eta = beta (1+g_tai)^-eta (1 + r_k[j+1]) c[j+1]^-eta`
//! until the TAI steady state is imposed after `branch_horizon` periods.
//!
//! Aggregates do not depend on `lambda`: with identical households every
//! AI-labor share equals one.

use super::newton::{self, NewtonOptions, System};
use super::SolverSettings;
use crate::econ::{self, ModelParams, SteadyState};
use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;

#[derive(Debug, Clone, PartialEq)]
pub struct PostTaiPath {
    pub arrival_year: usize,
    /// Detrended capital; index 0 is the arrival year. One entry per period
    /// `0..=branch_horizon`, after which capital sits at the steady state.
    pub k_hat: Vec<f64>,
    pub c_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
    pub w_hat: Vec<f64>,
    pub r_k: Vec<f64>,
    pub converged: bool,
    pub max_residual: f64,
    /// `|k_hat[last] - k_ss|`.
    pub terminal_gap: f64,
    pub(crate) labor_value: f64,
    pub(crate) d_c0: f64,
    pub(crate) d_labor_value: f64,
}

impl PostTaiPath {
    pub fn horizon(&self) -> usize {
        self.k_hat.len() - 1
    }

    /// Detrended consumption `offset` periods after arrival, reading the
    /// steady state beyond the solved horizon.
    pub fn c_hat_at(&self, offset: usize, ss: &SteadyState) -> f64 {
        self.c_hat.get(offset).copied().unwrap_or(ss.c_hat)
    }

    /// Discounted marginal-utility value of one unit of AI labor received
    /// from the arrival year on, in units of arrival-year marginal utility:
    /// `sum_{i>=1} beta^i q^(i-1) w[i-1] c[i-1]^-eta` with `q = (1+g_tai)^(1-eta)`.
    pub fn labor_value(&self) -> f64 {
        self.labor_value
    }
}

/// Strategic premium on capital chosen one year before a possible arrival:
/// `hazard * (lambda / k_next) * labor_value`, in arrival-year marginal-utility units.
pub fn strategic_premium(branch: &PostTaiPath, k_next_hat: f64, hazard: f64, params: &ModelParams) -> Result<f64> {
    if params.growth_discount(params.g_tai) >= 1.0 {
        return Err(Error::config(
            "post-TAI labor value diverges: beta*(1+g_tai)^(1-eta) >= 1",
        ));
    }
    if !(k_next_hat > 0.0) {
        return Err(Error::domain(format!("capital {k_next_hat} must be positive")));
    }
    if hazard == 0.0 || params.lambda == 0.0 {
        return Ok(0.0);
    }
    Ok(hazard * econ::labor_share_gradient(k_next_hat, params.lambda)? * branch.labor_value)
}

struct BranchSystem<'a> {
    params: &'a ModelParams,
    growth: f64,
    k0: f64,
    k_terminal: f64,
}

impl BranchSystem<'_> {
    fn full_path(&self, x: &[f64]) -> Vec<f64> {
        let mut k = Vec::with_capacity(x.len() + 2);
        k.push(self.k0);
        k.extend_from_slice(x);
        k.push(self.k_terminal);
        k
    }

    /// Consumption `c[j]` for `j = 0..k.len()-1`.
    fn consumption(&self, k: &[f64]) -> Result<Vec<f64>> {
        let g = 1.0 + self.growth;
        let mut c = Vec::with_capacity(k.len() - 1);
        for j in 0..k.len() - 1 {
            if !(k[j] > 0.0) {
                return Err(Error::Infeasible(format!("branch capital {} at period {j}", k[j])));
            }
            let cj = self.params.resources(k[j]) - g * k[j + 1];
            if !(cj > 0.0) {
                return Err(Error::Infeasible(format!("branch consumption {cj} at period {j}")));
            }
            c.push(cj);
        }
        Ok(c)
    }
}

impl System for BranchSystem<'_> {
    type Eval = Vec<f64>;

    fn evaluate(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.full_path(x);
        let c = self.consumption(&k)?;
        let p = self.params;
        let disc = p.beta * (1.0 + self.growth).powf(-p.eta);
        let r = (0..x.len())
            .map(|j| c[j].powf(-p.eta) - disc * p.gross_return(k[j + 1]) * c[j + 1].powf(-p.eta))
            .collect();
        Ok((r, c))
    }

    fn jacobian(&self, x: &[f64], c: &Vec<f64>) -> Result<Tridiagonal> {
        let k = self.full_path(x);
        let p = self.params;
        let g = 1.0 + self.growth;
        let disc = p.beta * g.powf(-p.eta);
        let n = x.len();
        let mut jac = Tridiagonal::zeros(n);
        for j in 0..n {
            let mu_now = -p.eta * c[j].powf(-p.eta - 1.0);
            let mu_next = -p.eta * c[j + 1].powf(-p.eta - 1.0);
            let ret = p.gross_return(k[j + 1]);
            // residual j depends on k[j], k[j+1], k[j+2]; unknown i is k[i+1]
            if j >= 1 {
                jac.add(j, j - 1, mu_now * p.gross_return(k[j]));
            }
            let d_next =
                mu_now * (-g) - disc * (p.gross_return_slope(k[j + 1]) * c[j + 1].powf(-p.eta) + ret * mu_next * ret);
            jac.add(j, j, d_next);
            if j + 1 < n {
                jac.add(j, j + 1, -disc * ret * mu_next * (-g));
            }
        }
        Ok(jac)
    }
}

/// Stable root of the linearized saddle-path dynamics around `ss`.
fn saddle_root(params: &ModelParams, ss: &SteadyState) -> f64 {
    if params.eta <= 0.0 {
        return 0.5;
    }
    let g = 1.0 + ss.growth;
    let gross = ss.r_gross;
    let curvature = -params.beta * g.powf(-params.eta) * params.gross_return_slope(ss.k_hat) * ss.c_hat / params.eta;
    let s = gross + g + curvature;
    let disc = (s * s - 4.0 * g * gross).max(0.0);
    ((s - disc.sqrt()) / (2.0 * g)).clamp(0.0, 0.999)
}

fn saddle_guess(k0: f64, ss: &SteadyState, root: f64, horizon: usize) -> Vec<f64> {
    (1..=horizon)
        .map(|j| ss.k_hat + (k0 - ss.k_hat) * root.powi(j as i32))
        .collect()
}

pub(crate) struct BranchSolver<'a> {
    pub params: &'a ModelParams,
    pub settings: &'a SolverSettings,
    pub ss: SteadyState,
    root: f64,
}

impl<'a> BranchSolver<'a> {
    pub fn new(params: &'a ModelParams, settings: &'a SolverSettings) -> Result<Self> {
        let ss = econ::stationary_state(params.g_tai, params)?;
        Ok(BranchSolver {
            params,
            settings,
            root: saddle_root(params, &ss),
            ss,
        })
    }

    fn options(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.settings.tol,
            max_iter: self.settings.max_iter,
            damping: self.settings.damping,
        }
    }

    /// Solves the branch from `k0`, warm-starting from `previous` when given.
    pub fn solve(&self, k0: f64, arrival_year: usize, previous: Option<&PostTaiPath>) -> Result<PostTaiPath> {
        if !(k0 > 0.0) {
            return Err(Error::domain(format!("arrival capital {k0} must be positive")));
        }
        let horizon = self.settings.branch_horizon;
        let guess = match previous {
            Some(prev) if prev.horizon() == horizon => {
                let shift = k0 - prev.k_hat[0];
                (1..=horizon)
                    .map(|j| prev.k_hat[j] + shift * self.root.powi(j as i32))
                    .collect()
            }
            _ => saddle_guess(k0, &self.ss, self.root, horizon),
        };
        self.solve_with_continuation(k0, arrival_year, guess, 0)
    }

    fn solve_with_continuation(
        &self,
        k0: f64,
        arrival_year: usize,
        guess: Vec<f64>,
        depth: usize,
    ) -> Result<PostTaiPath> {
        match self.solve_from(k0, arrival_year, guess) {
            Ok(path) => Ok(path),
            Err(err @ (Error::Infeasible(_) | Error::NonConvergence { .. })) => {
                if depth >= 12 {
                    return Err(err);
                }
                // move the initial capital halfway from the steady state, then extend
                let mid = 0.5 * (k0 + self.ss.k_hat);
                let mid_guess = saddle_guess(mid, &self.ss, self.root, self.settings.branch_horizon);
                let mid_path = self.solve_with_continuation(mid, arrival_year, mid_guess, depth + 1)?;
                let shift = k0 - mid;
                let guess = (1..=self.settings.branch_horizon)
                    .map(|j| mid_path.k_hat[j] + shift * self.root.powi(j as i32))
                    .collect();
                self.solve_from(k0, arrival_year, guess)
            }
            Err(e) => Err(e),
        }
    }

    fn solve_from(&self, k0: f64, arrival_year: usize, guess: Vec<f64>) -> Result<PostTaiPath> {
        let system = BranchSystem {
            params: self.params,
            growth: self.params.g_tai,
            k0,
            k_terminal: self.ss.k_hat,
        };
        let sol = newton::solve(&system, guess, &self.options())?;
        let k = system.full_path(&sol.x);
        let c = sol.eval;
        let p = self.params;
        let h = self.settings.branch_horizon;

        // sensitivity of the whole path to the arrival capital
        let jac = system.jacobian(&sol.x, &c)?;
        let mut rhs = vec![0.0; h];
        rhs[0] = p.eta * c[0].powf(-p.eta - 1.0) * p.gross_return(k0);
        let dx = jac
            .solve(&rhs)
            .ok_or_else(|| Error::Infeasible("singular branch Jacobian".into()))?;
        let mut dk = Vec::with_capacity(h + 2);
        dk.push(1.0);
        dk.extend_from_slice(&dx);
        dk.push(0.0);
        let g = 1.0 + p.g_tai;
        let dc: Vec<f64> = (0..=h).map(|j| p.gross_return(k[j]) * dk[j] - g * dk[j + 1]).collect();

        let q = g.powf(1.0 - p.eta);
        let bq = p.beta * q;
        let mut value = 0.0;
        let mut d_value = 0.0;
        let mut weight = p.beta;
        for j in 0..=h {
            let w = p.detrended_wage(k[j]);
            let dw = p.alpha * w / k[j];
            let mu = c[j].powf(-p.eta);
            value += weight * w * mu;
            d_value += weight * (dw * dk[j] * mu - p.eta * w * mu / c[j] * dc[j]);
            weight *= bq;
        }
        // steady-state tail; weight is now beta^(h+2) q^(h+1)
        value += weight / (1.0 - bq) * self.ss.w_hat * self.ss.c_hat.powf(-p.eta);

        let y: Vec<f64> = k[..=h].iter().map(|&kj| p.detrended_output(kj)).collect();
        let w: Vec<f64> = k[..=h].iter().map(|&kj| p.detrended_wage(kj)).collect();
        let r_k: Vec<f64> = k[..=h].iter().map(|&kj| p.gross_return(kj) - 1.0).collect();
        let terminal_gap = (k[h] - self.ss.k_hat).abs();
        Ok(PostTaiPath {
            arrival_year,
            converged: !self.settings.check_branch_terminal || terminal_gap <= self.settings.tol,
            max_residual: newton::sup_norm(&sol.residual),
            terminal_gap,
            k_hat: k[..=h].to_vec(),
            c_hat: c,
            y_hat: y,
            w_hat: w,
            r_k,
            labor_value: value,
            d_c0: dc[0],
            d_labor_value: d_value,
        })
    }
}

/// Solves the post-TAI path from detrended arrival capital `k0_hat`.
pub fn solve_post_tai_branch(k0_hat: f64, params: &ModelParams, settings: &SolverSettings) -> Result<PostTaiPath> {
    params.validate()?;
    BranchSolver::new(params, settings)?.solve(k0_hat, 0, None)
}
