use std::sync::Mutex;

use rayon::prelude::*;

use super::branch::{strategic_premium, BranchSolver, PostTaiPath};
use super::newton::{self, NewtonOptions, System};
use super::SolverSettings;
use crate::econ::{self, ModelParams};
use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;
use crate::timeline::ArrivalDistribution;

/// Whether the strategic premium enters the capital Euler equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PremiumRule {
    #[default]
    Strategic,
    /// Drop the premium regardless of `lambda` (no-competition benchmark).
    Disabled,
}

/// Equilibrium path conditional on no arrival so far, with its branches.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinePath {
    /// Detrended series for years `0..=T`. Year 0 is the status-quo steady
    /// state in which beliefs form.
    pub k_hat: Vec<f64>,
    pub c_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
    pub w_hat: Vec<f64>,
    pub r_k: Vec<f64>,
    /// Premium term of the capital Euler equation at year `t`, in units of
    /// detrended year-`t` marginal utility (zero where no arrival can follow).
    pub premium: Vec<f64>,
    /// `hazards[t]`: probability of arrival in year `t` given none before; `hazards[0] = 0`.
    pub hazards: Vec<f64>,
    /// One branch per arrival year with positive hazard, in increasing year order.
    pub branches: Vec<PostTaiPath>,
    /// Euler residuals at years `0..T-1`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl SpinePath {
    pub fn terminal_year(&self) -> usize {
        self.k_hat.len() - 1
    }

    pub fn branch(&self, arrival_year: usize) -> Option<&PostTaiPath> {
        self.branches
            .binary_search_by_key(&arrival_year, |b| b.arrival_year)
            .ok()
            .map(|i| &self.branches[i])
    }

    pub fn max_residual(&self) -> f64 {
        newton::sup_norm(&self.residuals)
    }
}

fn find_branch(branches: &[PostTaiPath], year: usize) -> Option<&PostTaiPath> {
    branches.iter().find(|b| b.arrival_year == year)
}

struct Terms {
    c_now: f64,
    c_next: f64,
    expected_mu: f64,
    premium: f64,
}

fn euler_terms(
    t: usize,
    k: &[f64],
    branch: Option<&PostTaiPath>,
    hazard: f64,
    params: &ModelParams,
    rule: PremiumRule,
) -> Result<Terms> {
    let g = 1.0 + params.g_sq;
    for j in t..=t + 2 {
        if !(k[j] > 0.0) {
            return Err(Error::Infeasible(format!("spine capital {} at year {j}", k[j])));
        }
    }
    let c_now = params.resources(k[t]) - g * k[t + 1];
    let c_next = params.resources(k[t + 1]) - g * k[t + 2];
    if !(c_now > 0.0 && c_next > 0.0) {
        return Err(Error::Infeasible(format!(
            "spine consumption {c_now:.3e}, {c_next:.3e} at years {t}, {}",
            t + 1
        )));
    }
    let mu_next = c_next.powf(-params.eta);
    let (expected_mu, premium) = if hazard > 0.0 {
        let b = branch
            .ok_or_else(|| Error::domain(format!("no branch for arrival year {} with hazard {hazard}", t + 1)))?;
        let mu_branch = b.c_hat[0].powf(-params.eta);
        let premium = match rule {
            PremiumRule::Strategic => g.powf(-params.eta) * strategic_premium(b, k[t + 1], hazard, params)?,
            PremiumRule::Disabled => 0.0,
        };
        (hazard * mu_branch + (1.0 - hazard) * mu_next, premium)
    } else {
        (mu_next, 0.0)
    };
    Ok(Terms {
        c_now,
        c_next,
        expected_mu,
        premium,
    })
}

fn residual_from(t: usize, k: &[f64], terms: &Terms, params: &ModelParams) -> f64 {
    let disc = params.beta * (1.0 + params.g_sq).powf(-params.eta);
    terms.c_now.powf(-params.eta) - disc * params.gross_return(k[t + 1]) * terms.expected_mu - terms.premium
}

/// Capital Euler residual at spine year `t`:
/// `u'(c_t) - beta E[(1 + r_k) u'(c_{t+1})] - premium`, all detrended by
/// year-`t` TFP. `k_path` covers years `0..=t+2`; `branches` must contain
/// the arrival-year-`t+1` branch whenever its hazard is positive.
pub fn pre_tai_euler_residual(
    t: usize,
    k_path: &[f64],
    branches: &[PostTaiPath],
    beliefs: &ArrivalDistribution,
    params: &ModelParams,
) -> Result<f64> {
    if t + 2 >= k_path.len() {
        return Err(Error::domain(format!("year {t} needs capital through year {}", t + 2)));
    }
    let hazard = beliefs.period_hazard(t + 1);
    let terms = euler_terms(
        t,
        k_path,
        find_branch(branches, t + 1),
        hazard,
        params,
        PremiumRule::Strategic,
    )?;
    Ok(residual_from(t, k_path, &terms, params))
}

struct SpineSystem<'a> {
    params: &'a ModelParams,
    settings: &'a SolverSettings,
    hazards: &'a [f64],
    rule: PremiumRule,
    k_start: f64,
    k_end: f64,
    solver: BranchSolver<'a>,
    /// Most recent branch per arrival year, used for warm starts and reuse.
    cache: Mutex<Vec<Option<PostTaiPath>>>,
}

type BranchSlots = Vec<Option<PostTaiPath>>;

impl SpineSystem<'_> {
    fn full_path(&self, x: &[f64]) -> Vec<f64> {
        let mut k = Vec::with_capacity(x.len() + 2);
        k.push(self.k_start);
        k.extend_from_slice(x);
        k.push(self.k_end);
        k
    }

    /// Solves every branch whose arrival year lies in `1..=last_year` and has a
    /// positive hazard. With `exact`, cached branches are never reused.
    fn solve_branches(&self, k: &[f64], last_year: usize, exact: bool) -> Result<BranchSlots> {
        let snapshot = self.cache.lock().expect("branch cache poisoned").clone();
        let reuse_tol = self.settings.tol / 10.0;
        let solved: Vec<Result<Option<PostTaiPath>>> = (0..=last_year)
            .into_par_iter()
            .map(|year| {
                if year == 0 || self.hazards[year] <= 0.0 {
                    return Ok(None);
                }
                let previous = snapshot.get(year).and_then(Option::as_ref);
                if let Some(prev) = previous {
                    if !exact && (prev.k_hat[0] - k[year]).abs() <= reuse_tol {
                        return Ok(Some(prev.clone()));
                    }
                    if prev.k_hat[0] == k[year] {
                        return Ok(Some(prev.clone()));
                    }
                }
                self.solver.solve(k[year], year, previous).map(Some)
            })
            .collect();
        let mut slots = Vec::with_capacity(solved.len());
        for s in solved {
            slots.push(s.map_err(|e| match e {
                Error::Domain(m) => Error::Infeasible(m),
                other => other,
            })?);
        }
        let mut cache = self.cache.lock().expect("branch cache poisoned");
        let len = slots.len().max(cache.len());
        cache.resize(len, None);
        for (year, slot) in slots.iter().enumerate() {
            if let Some(b) = slot {
                cache[year] = Some(b.clone());
            }
        }
        Ok(slots)
    }

    fn terms(&self, t: usize, k: &[f64], slots: &BranchSlots) -> Result<Terms> {
        let branch = slots.get(t + 1).and_then(Option::as_ref);
        euler_terms(t, k, branch, self.hazards[t + 1], self.params, self.rule)
    }
}

impl System for SpineSystem<'_> {
    type Eval = BranchSlots;

    fn evaluate(&self, x: &[f64]) -> Result<(Vec<f64>, BranchSlots)> {
        let k = self.full_path(x);
        if let Some(j) = k.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Infeasible(format!("spine capital {} at year {j}", k[j])));
        }
        let slots = self.solve_branches(&k, x.len(), false)?;
        let mut r = Vec::with_capacity(x.len());
        for t in 0..x.len() {
            let terms = self.terms(t, &k, &slots)?;
            r.push(residual_from(t, &k, &terms, self.params));
        }
        Ok((r, slots))
    }

    fn jacobian(&self, x: &[f64], slots: &BranchSlots) -> Result<Tridiagonal> {
        let k = self.full_path(x);
        let p = self.params;
        let g = 1.0 + p.g_sq;
        let disc = p.beta * g.powf(-p.eta);
        let n = x.len();
        let mut jac = Tridiagonal::zeros(n);
        for t in 0..n {
            let terms = self.terms(t, &k, slots)?;
            let h = self.hazards[t + 1];
            let k_next = k[t + 1];
            let ret = p.gross_return(k_next);
            let dmu_now = -p.eta * terms.c_now.powf(-p.eta - 1.0);
            let dmu_next = -p.eta * terms.c_next.powf(-p.eta - 1.0);

            // d E[mu_{t+1}] / d k_{t+1}, including the branch's response to arrival capital
            let mut d_expected = (1.0 - h) * dmu_next * ret;
            let mut d_premium = 0.0;
            if h > 0.0 {
                let b = slots[t + 1].as_ref().expect("branch solved for positive hazard");
                d_expected += h * (-p.eta) * b.c_hat[0].powf(-p.eta - 1.0) * b.d_c0;
                if self.rule == PremiumRule::Strategic {
                    d_premium =
                        g.powf(-p.eta) * h * p.lambda * (b.d_labor_value / k_next - b.labor_value / (k_next * k_next));
                }
            }

            if t >= 1 {
                jac.add(t, t - 1, dmu_now * p.gross_return(k[t]));
            }
            let d_self = dmu_now * (-g)
                - disc * (p.gross_return_slope(k_next) * terms.expected_mu + ret * d_expected)
                - d_premium;
            jac.add(t, t, d_self);
            if t + 1 < n {
                jac.add(t, t + 1, -disc * ret * (1.0 - h) * dmu_next * (-g));
            }
        }
        Ok(jac)
    }
}

/// Solves the spine and all branches with the strategic premium active.
pub fn solve_spine(
    params: &ModelParams,
    beliefs: &ArrivalDistribution,
    settings: &SolverSettings,
) -> Result<SpinePath> {
    solve_spine_with(params, beliefs, settings, PremiumRule::Strategic, None)
}

/// Like [`solve_spine`], with an explicit premium rule and an optional
/// previous solution on the same horizon to start from.
pub fn solve_spine_with(
    params: &ModelParams,
    beliefs: &ArrivalDistribution,
    settings: &SolverSettings,
    rule: PremiumRule,
    warm_start: Option<&SpinePath>,
) -> Result<SpinePath> {
    params.validate()?;
    settings.validate(beliefs.horizon())?;
    let sq = econ::stationary_state(params.g_sq, params)?;
    let big_t = settings.terminal_year;
    let hazards = beliefs.hazards(big_t);

    let mut initial = vec![sq.k_hat; big_t - 1];
    let mut cache = vec![None; big_t + 1];
    if let Some(prev) = warm_start.filter(|w| w.terminal_year() == big_t) {
        initial.copy_from_slice(&prev.k_hat[1..big_t]);
        for b in &prev.branches {
            if b.horizon() == settings.branch_horizon {
                cache[b.arrival_year] = Some(b.clone());
            }
        }
    }

    let system = SpineSystem {
        params,
        settings,
        hazards: &hazards,
        rule,
        k_start: sq.k_hat,
        k_end: sq.k_hat,
        solver: BranchSolver::new(params, settings)?,
        cache: Mutex::new(cache),
    };
    let opts = NewtonOptions {
        tol: settings.tol,
        max_iter: settings.max_iter,
        damping: settings.damping,
    };
    let sol = newton::solve(&system, initial, &opts)?;

    // final pass: every branch starts exactly at the converged spine capital
    let k = system.full_path(&sol.x);
    let slots = system.solve_branches(&k, big_t, true)?;
    let mut residuals = Vec::with_capacity(big_t - 1);
    let mut premium = vec![0.0; big_t + 1];
    for t in 0..big_t - 1 {
        let terms = system.terms(t, &k, &slots)?;
        residuals.push(residual_from(t, &k, &terms, params));
        premium[t] = terms.premium;
    }
    let g = 1.0 + params.g_sq;
    if hazards[big_t] > 0.0 && rule == PremiumRule::Strategic {
        let b = slots[big_t].as_ref().expect("terminal branch solved");
        premium[big_t - 1] = g.powf(-params.eta) * strategic_premium(b, k[big_t], hazards[big_t], params)?;
    }

    let branches: Vec<PostTaiPath> = slots.into_iter().flatten().collect();
    if settings.check_branch_terminal {
        if let Some(b) = branches.iter().find(|b| !b.converged) {
            return Err(Error::config(format!(
                "branch_horizon {} too short: branch {} ends {:.3e} from the TAI steady state",
                settings.branch_horizon, b.arrival_year, b.terminal_gap
            )));
        }
    }

    let mut c_hat: Vec<f64> = (0..big_t).map(|t| params.resources(k[t]) - g * k[t + 1]).collect();
    c_hat.push(params.resources(k[big_t]) - g * sq.k_hat);
    Ok(SpinePath {
        y_hat: k.iter().map(|&v| params.detrended_output(v)).collect(),
        w_hat: k.iter().map(|&v| params.detrended_wage(v)).collect(),
        r_k: k.iter().map(|&v| params.gross_return(v) - 1.0).collect(),
        c_hat,
        k_hat: k,
        premium,
        hazards,
        branches,
        residuals,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_beliefs() -> ArrivalDistribution {
        ArrivalDistribution::new(vec![0.05, 0.1, 0.1, 0.05], 0.7, "toy").unwrap()
    }

    fn short_settings() -> SolverSettings {
        SolverSettings {
            terminal_year: 60,
            branch_horizon: 80,
            ..Default::default()
        }
    }

    #[test]
    fn zero_hazards_stay_at_steady_state() {
        let p = ModelParams::default();
        let sq = econ::stationary_state(p.g_sq, &p).unwrap();
        let spine = solve_spine(&p, &ArrivalDistribution::never(60, "none"), &short_settings()).unwrap();
        assert!(spine.branches.is_empty());
        for t in 0..=60 {
            assert!((spine.k_hat[t] - sq.k_hat).abs() < 1e-12);
            assert!((spine.c_hat[t] - sq.c_hat).abs() < 1e-12);
        }
        assert!(spine.max_residual() < 1e-12);
    }

    #[test]
    fn converged_solution_satisfies_public_residual() {
        let p = ModelParams::default();
        let beliefs = toy_beliefs();
        let s = short_settings();
        let spine = solve_spine(&p, &beliefs, &s).unwrap();
        assert!(spine.max_residual() < s.tol);
        for t in 0..s.terminal_year - 1 {
            let r = pre_tai_euler_residual(t, &spine.k_hat, &spine.branches, &beliefs, &p).unwrap();
            assert!(r.abs() < s.tol, "t = {t}: {r}");
        }
        for b in &spine.branches {
            assert_eq!(b.k_hat[0], spine.k_hat[b.arrival_year]);
        }
        assert_eq!(spine.branches.len(), 4);
    }

    #[test]
    fn lambda_zero_residual_has_no_premium() {
        let p = ModelParams::default().with_lambda(0.0);
        let beliefs = toy_beliefs();
        let s = short_settings();
        let spine = solve_spine(&p, &beliefs, &s).unwrap();
        assert!(spine.premium.iter().all(|v| *v == 0.0));
        let disabled = solve_spine_with(&p.with_lambda(1.0), &beliefs, &s, PremiumRule::Disabled, None).unwrap();
        for (a, b) in spine.k_hat.iter().zip(&disabled.k_hat) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn infeasible_path_is_reported_not_clamped() {
        let p = ModelParams::default();
        let beliefs = toy_beliefs();
        let s = short_settings();
        let spine = solve_spine(&p, &beliefs, &s).unwrap();
        let mut k = spine.k_hat.clone();
        // next-year capital larger than all resources
        k[1] = 10.0 * p.resources(k[0]);
        let err = pre_tai_euler_residual(0, &k, &spine.branches, &beliefs, &p).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn rejects_short_terminal_year() {
        let p = ModelParams::default();
        let s = SolverSettings {
            terminal_year: 3,
            ..Default::default()
        };
        assert!(matches!(solve_spine(&p, &toy_beliefs(), &s), Err(Error::Config(_))));
    }
}
