//! Preferences, technology and stationary equilibria.
//!
//! Everything here is a pure function of its inputs. Quantities marked
//! "detrended" are level variables divided by TFP, so that a detrended
//! economy growing at rate `g` has the capital law of motion
//!
//! ```text
//! (1 + g) k[t+1] = (1 - delta) k[t] + y[t] - c[t]
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Structural parameters of preferences and technology.
///
/// Defaults are the baseline calibration: log utility, `beta = 0.99`,
/// `alpha = 0.36`, `delta = 0.025`, 1.8% status-quo growth, 30% growth
/// after TAI and proportional wealth-based allocation (`lambda = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub beta: f64,
    pub eta: f64,
    pub alpha: f64,
    pub delta: f64,
    pub g_sq: f64,
    pub g_tai: f64,
    pub lambda: f64,
    pub labor: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            beta: 0.99,
            eta: 1.0,
            alpha: 0.36,
            delta: 0.025,
            g_sq: 0.018,
            g_tai: 0.30,
            lambda: 1.0,
            labor: 1.0,
        }
    }
}

impl ModelParams {
    pub fn with_lambda(self, lambda: f64) -> Self {
        ModelParams { lambda, ..self }
    }

    /// Checks parameter ranges and the convergence condition
    /// `beta * (1 + g)^(1 - eta) < 1` for both growth regimes.
    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.beta,
            self.eta,
            self.alpha,
            self.delta,
            self.g_sq,
            self.g_tai,
            self.lambda,
            self.labor,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::config("model parameters must be finite"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::config(format!("beta = {} must lie in (0, 1)", self.beta)));
        }
        if self.eta < 0.0 {
            return Err(Error::config(format!("eta = {} must be nonnegative", self.eta)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::config(format!("delta = {} must lie in [0, 1]", self.delta)));
        }
        if self.labor <= 0.0 {
            return Err(Error::config(format!("labor = {} must be positive", self.labor)));
        }
        for (name, g) in [("g_sq", self.g_sq), ("g_tai", self.g_tai)] {
            if g <= -1.0 {
                return Err(Error::config(format!("{name} = {g} must exceed -1")));
            }
            let factor = self.growth_discount(g);
            if factor >= 1.0 {
                return Err(Error::config(format!(
                    "convergence condition beta*(1+{name})^(1-eta) < 1 violated: {factor:.6}"
                )));
            }
        }
        Ok(())
    }

    /// `beta * (1 + g)^(1 - eta)`, the effective discount factor on detrended utility.
    pub fn growth_discount(&self, g: f64) -> f64 {
        self.beta * (1.0 + g).powf(1.0 - self.eta)
    }

    /// Detrended output `k^alpha * labor^(1-alpha)` (TFP normalized to one).
    pub fn detrended_output(&self, k: f64) -> f64 {
        output(k, 1.0, self.labor, self.alpha)
    }

    /// Detrended resources available at the start of a period: output plus undepreciated capital.
    pub(crate) fn resources(&self, k: f64) -> f64 {
        self.detrended_output(k) + (1.0 - self.delta) * k
    }

    /// Gross return on capital `1 + r_k`, i.e. the derivative of [`Self::resources`].
    pub(crate) fn gross_return(&self, k: f64) -> f64 {
        self.alpha * (self.labor / k).powf(1.0 - self.alpha) + 1.0 - self.delta
    }

    /// Second derivative of [`Self::resources`].
    pub(crate) fn gross_return_slope(&self, k: f64) -> f64 {
        self.alpha * (self.alpha - 1.0) * k.powf(self.alpha - 2.0) * self.labor.powf(1.0 - self.alpha)
    }

    /// Detrended wage `(1 - alpha) * y / labor`.
    pub fn detrended_wage(&self, k: f64) -> f64 {
        (1.0 - self.alpha) * self.detrended_output(k) / self.labor
    }
}

/// Detrended stationary equilibrium for a constant growth rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub growth: f64,
    pub k_hat: f64,
    pub c_hat: f64,
    pub y_hat: f64,
    pub w_hat: f64,
    pub r_k: f64,
    pub r_gross: f64,
}

impl SteadyState {
    pub fn savings_rate(&self) -> f64 {
        savings_rate(self.y_hat, self.c_hat)
    }
}

/// CRRA utility; exact logarithm at `eta = 1`.
pub fn utility(c: f64, eta: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::domain(format!("utility of non-positive consumption {c}")));
    }
    if eta == 1.0 {
        Ok(c.ln())
    } else {
        Ok((c.powf(1.0 - eta) - 1.0) / (1.0 - eta))
    }
}

pub fn marginal_utility(c: f64, eta: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::domain(format!(
            "marginal utility of non-positive consumption {c}"
        )));
    }
    Ok(c.powf(-eta))
}

/// Cobb-Douglas output `k^alpha (a l)^(1-alpha)`.
pub fn output(k: f64, a: f64, l: f64, alpha: f64) -> f64 {
    k.powf(alpha) * (a * l).powf(1.0 - alpha)
}

/// Net capital rental rate `alpha (a l / k)^(1-alpha) - delta`.
pub fn rental_rate(k: f64, a: f64, l: f64, params: &ModelParams) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::domain(format!("rental rate at capital {k}")));
    }
    Ok(params.alpha * (a * l / k).powf(1.0 - params.alpha) - params.delta)
}

/// Wage implied by a rental rate: `(1-alpha) a (alpha / (r_k + delta))^(alpha/(1-alpha))`.
pub fn wage(r_k: f64, a: f64, params: &ModelParams) -> Result<f64> {
    let user_cost = r_k + params.delta;
    if !(user_cost > 0.0) {
        return Err(Error::domain(format!("wage requires r_k + delta > 0, got {user_cost}")));
    }
    let alpha = params.alpha;
    Ok((1.0 - alpha) * a * (alpha / user_cost).powf(alpha / (1.0 - alpha)))
}

/// Gross stationary interest factor `(1 + g)^eta / beta`.
pub fn stationary_gross_rate(g: f64, params: &ModelParams) -> f64 {
    (1.0 + g).powf(params.eta) / params.beta
}

pub fn stationary_state(g: f64, params: &ModelParams) -> Result<SteadyState> {
    if params.growth_discount(g) >= 1.0 {
        return Err(Error::config(format!(
            "convergence condition beta*(1+g)^(1-eta) < 1 violated at g = {g}"
        )));
    }
    let r_gross = stationary_gross_rate(g, params);
    let r_k = r_gross - 1.0;
    let user_cost = r_k + params.delta;
    if !(user_cost > 0.0) {
        return Err(Error::config(format!("stationary rate {r_k} does not exceed -delta")));
    }
    let k_hat = params.labor * (params.alpha / user_cost).powf(1.0 / (1.0 - params.alpha));
    let y_hat = params.detrended_output(k_hat);
    let c_hat = y_hat + (1.0 - params.delta) * k_hat - (1.0 + g) * k_hat;
    if !(c_hat > 0.0) {
        return Err(Error::config(format!(
            "stationary consumption {c_hat} is not positive at g = {g}"
        )));
    }
    Ok(SteadyState {
        growth: g,
        k_hat,
        c_hat,
        y_hat,
        w_hat: (1.0 - params.alpha) * y_hat / params.labor,
        r_k,
        r_gross,
    })
}

/// How the household population is described when normalizing AI-labor shares.
#[derive(Debug, Clone, PartialEq)]
pub enum Population {
    /// Every household holds the aggregate capital stock.
    Symmetric,
    /// Finite set of `(mass, capital)` atoms; masses sum to one.
    Mixture(Vec<(f64, f64)>),
}

impl Population {
    /// Aggregate capital implied by a mixture (mass-weighted mean).
    pub fn aggregate(atoms: &[(f64, f64)]) -> f64 {
        atoms.iter().map(|(m, k)| m * k).sum()
    }
}

fn relative_weight(k: f64, k_agg: f64, lambda: f64) -> Result<f64> {
    if k < 0.0 {
        return Err(Error::domain(format!("negative capital {k}")));
    }
    if k == 0.0 {
        return if lambda > 0.0 {
            Ok(0.0)
        } else if lambda == 0.0 {
            Ok(1.0)
        } else {
            Err(Error::domain("zero capital with negative lambda"))
        };
    }
    Ok((k / k_agg).powf(lambda))
}

/// Share of aggregate AI labor allocated to a household holding `k_own`
/// when the aggregate stock is `k_agg`.
pub fn labor_share(k_own: f64, k_agg: f64, lambda: f64, population: &Population) -> Result<f64> {
    if !(k_agg > 0.0) {
        return Err(Error::domain(format!("aggregate capital {k_agg} must be positive")));
    }
    let numerator = relative_weight(k_own, k_agg, lambda)?;
    let denominator = match population {
        Population::Symmetric => 1.0,
        Population::Mixture(atoms) => {
            let mut total = 0.0;
            for &(mass, k) in atoms {
                if mass < 0.0 {
                    return Err(Error::domain(format!("negative population mass {mass}")));
                }
                total += mass * relative_weight(k, k_agg, lambda)?;
            }
            total
        }
    };
    if !(denominator > 0.0) {
        return Err(Error::domain("population normalization is zero"));
    }
    Ok(numerator / denominator)
}

/// Derivative of the own AI-labor share with respect to own capital at the
/// symmetric point, holding the aggregate fixed.
pub fn labor_share_gradient(k_agg: f64, lambda: f64) -> Result<f64> {
    if !(k_agg > 0.0) {
        return Err(Error::domain(format!("aggregate capital {k_agg} must be positive")));
    }
    Ok(lambda / k_agg)
}

/// Fraction of output not consumed. Negative when capital is being run down.
pub fn savings_rate(y: f64, c: f64) -> f64 {
    (y - c) / y
}
