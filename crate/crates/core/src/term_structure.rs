//! Reported quantities along the spine: bond rates at one- and multi-year
//! maturities, rental rates, savings and the strategic wedge.
//!
//! Rates are level rates. Detrended marginal utilities are converted with
//! the TFP growth between the dates involved, `1 + g_sq` per year on the
//! spine and `1 + g_tai` per year on a branch after its arrival year.
//!
//! Year `y` of a report is the decision made at spine index `t = y - 1`:
//! its bond rate runs from `t` to `t + 1` and its rental rate is the
//! marginal product of the capital chosen at `t`.

use serde::Serialize;

use crate::econ::{self, ModelParams, SteadyState};
use crate::error::{Error, Result};
use crate::timeline::{ArrivalDistribution, BeliefState};
use crate::transition::SpinePath;

pub const DEFAULT_REPORT_HORIZON: usize = 30;
pub const LONG_MATURITY: usize = 30;

/// One reported year, conditional on no arrival through that year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub year: usize,
    pub k_hat: f64,
    pub c_hat: f64,
    pub y_hat: f64,
    pub w_hat: f64,
    pub rental: f64,
    pub rate_1y: f64,
    pub rate_30y: f64,
    pub savings: f64,
    pub wedge: f64,
    pub hazard: f64,
}

/// Terms of the decomposition `bond - rental - premium = 0` of the capital
/// and bond Euler equations at one date, in detrended marginal-utility units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeDecomposition {
    /// `r_b * beta * E[u'(c_{t+1})]`
    pub bond: f64,
    /// `beta * E[r_k * u'(c_{t+1})]`
    pub rental: f64,
    pub premium: f64,
    /// `beta * E[u'(c_{t+1})]`, the scale that converts terms to rates.
    pub discounted_mu: f64,
}

impl WedgeDecomposition {
    pub fn residual(&self) -> f64 {
        self.bond - self.rental - self.premium
    }

    /// Bond rate minus rental rate.
    pub fn wedge(&self) -> f64 {
        self.premium / self.discounted_mu
    }
}

/// Probability weights for a bond bought at spine index `t` and maturing
/// `h` years later: entry `j - 1` is arrival in year `t + j`, the last entry
/// is no arrival through `t + h`.
pub fn horizon_weights(t: usize, h: usize, beliefs: &ArrivalDistribution) -> Result<Vec<f64>> {
    let state = BeliefState::at(beliefs.clone(), t)?;
    let mut w = Vec::with_capacity(h + 1);
    for j in 1..=h {
        w.push(state.conditional_hazard(t + j)?);
    }
    w.push(beliefs.survival(t + h) / state.survival_mass());
    Ok(w)
}

/// `E_t[u'(C_{t+h})]` relative to `A_t^-eta`. With `extend`, spine values
/// beyond the terminal year are read from the status-quo steady state.
fn expected_mu(
    t: usize,
    h: usize,
    spine: &SpinePath,
    beliefs: &ArrivalDistribution,
    params: &ModelParams,
    extend: bool,
) -> Result<f64> {
    let big_t = spine.terminal_year();
    if h == 0 || (!extend && t + h > big_t) {
        return Err(Error::domain(format!(
            "maturity {h} from year {t} runs past the terminal year {big_t}"
        )));
    }
    let weights = horizon_weights(t, h, beliefs)?;
    let eta = params.eta;
    let g_sq = 1.0 + params.g_sq;
    let g_tai = 1.0 + params.g_tai;
    let tai_ss = econ::stationary_state(params.g_tai, params)?;
    let sq_ss = econ::stationary_state(params.g_sq, params)?;

    let mut total = 0.0;
    for j in 1..=h {
        let w = weights[j - 1];
        if w == 0.0 {
            continue;
        }
        let branch = spine
            .branch(t + j)
            .ok_or_else(|| Error::domain(format!("no branch for arrival year {} with weight {w}", t + j)))?;
        let growth = g_sq.powi(j as i32) * g_tai.powi((h - j) as i32);
        total += w * growth.powf(-eta) * c_branch(branch, h - j, &tai_ss).powf(-eta);
    }
    let c_end = spine.c_hat.get(t + h).copied().unwrap_or(sq_ss.c_hat);
    total += weights[h] * g_sq.powi(h as i32).powf(-eta) * c_end.powf(-eta);
    Ok(total)
}

fn c_branch(branch: &crate::transition::PostTaiPath, offset: usize, ss: &SteadyState) -> f64 {
    branch.c_hat_at(offset, ss)
}

fn rate_from(
    t: usize,
    h: usize,
    spine: &SpinePath,
    beliefs: &ArrivalDistribution,
    params: &ModelParams,
    extend: bool,
) -> Result<f64> {
    let c_now = *spine
        .c_hat
        .get(t)
        .ok_or_else(|| Error::domain(format!("year {t} is past the terminal year")))?;
    let e = expected_mu(t, h, spine, beliefs, params, extend)?;
    let ratio = c_now.powf(-params.eta) / (params.beta.powi(h as i32) * e);
    Ok(if h == 1 {
        ratio - 1.0
    } else {
        ratio.powf(1.0 / h as f64) - 1.0
    })
}

/// Annualized zero-coupon rate from spine index `t` to `t + h`.
pub fn horizon_rate(
    t: usize,
    h: usize,
    spine: &SpinePath,
    beliefs: &ArrivalDistribution,
    params: &ModelParams,
) -> Result<f64> {
    rate_from(t, h, spine, beliefs, params, false)
}

/// One-year bond rate from spine index `t` to `t + 1`.
pub fn one_year_rate(t: usize, spine: &SpinePath, beliefs: &ArrivalDistribution, params: &ModelParams) -> Result<f64> {
    horizon_rate(t, 1, spine, beliefs, params)
}

pub fn wedge_decomposition(
    t: usize,
    spine: &SpinePath,
    beliefs: &ArrivalDistribution,
    params: &ModelParams,
) -> Result<WedgeDecomposition> {
    let r_b = one_year_rate(t, spine, beliefs, params)?;
    let discounted_mu = params.beta * expected_mu(t, 1, spine, beliefs, params, false)?;
    Ok(WedgeDecomposition {
        bond: r_b * discounted_mu,
        rental: spine.r_k[t + 1] * discounted_mu,
        premium: spine.premium[t],
        discounted_mu,
    })
}

/// Rows for years `1..=min(T, report_horizon)`. The long rate near the
/// terminal year treats the economy as staying at the status-quo steady
/// state after it, as the solver does.
pub fn build_rate_table(
    spine: &SpinePath,
    beliefs: &ArrivalDistribution,
    params: &ModelParams,
    report_horizon: usize,
) -> Result<Vec<RateTable>> {
    let last = spine.terminal_year().min(report_horizon);
    (1..=last)
        .map(|year| {
            let t = year - 1;
            let decomposition = wedge_decomposition(t, spine, beliefs, params)?;
            Ok(RateTable {
                year,
                k_hat: spine.k_hat[t],
                c_hat: spine.c_hat[t],
                y_hat: spine.y_hat[t],
                w_hat: spine.w_hat[t],
                rental: spine.r_k[year],
                rate_1y: one_year_rate(t, spine, beliefs, params)?,
                rate_30y: rate_from(t, LONG_MATURITY, spine, beliefs, params, true)?,
                savings: econ::savings_rate(spine.y_hat[t], spine.c_hat[t]),
                wedge: decomposition.wedge(),
                hazard: spine.hazards[year],
            })
        })
        .collect()
}
