//! Beliefs about the TAI arrival year.
//!
//! Arrival years are 1-based: `annual_probs[0]` is the probability that TAI
//! arrives in year 1, the first year after beliefs form. Whatever mass is not
//! assigned to a year inside the horizon belongs to the never-event.

mod fit;
mod io;
mod nbb;

pub use fit::{fit_to_anchors, Anchor, FitReport, FitSettings};
pub use io::{read_anchors, read_distribution, write_anchors, write_distribution};
pub use nbb::{annualize, monthly_masses, nbb_trial_pmf, NbbSpec};

use crate::error::{Error, Result};

/// Conservation tolerance for `sum(annual_probs) + p_never = 1`.
pub const CONSERVATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalDistribution {
    annual_probs: Vec<f64>,
    p_never: f64,
    source_label: String,
}

impl ArrivalDistribution {
    pub fn new(annual_probs: Vec<f64>, p_never: f64, source_label: impl Into<String>) -> Result<Self> {
        for (i, &p) in annual_probs.iter().enumerate() {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::domain(format!("probability of year {} is {p}", i + 1)));
            }
        }
        if !(p_never.is_finite() && p_never >= 0.0) {
            return Err(Error::domain(format!("never-probability is {p_never}")));
        }
        let total: f64 = annual_probs.iter().sum::<f64>() + p_never;
        if (total - 1.0).abs() > CONSERVATION_TOL {
            return Err(Error::domain(format!("probabilities sum to {total:.15}, expected 1")));
        }
        Ok(ArrivalDistribution {
            annual_probs,
            p_never,
            source_label: source_label.into(),
        })
    }

    /// A distribution in which TAI never arrives.
    pub fn never(horizon: usize, source_label: impl Into<String>) -> Self {
        ArrivalDistribution {
            annual_probs: vec![0.0; horizon],
            p_never: 1.0,
            source_label: source_label.into(),
        }
    }

    pub fn annual_probs(&self) -> &[f64] {
        &self.annual_probs
    }

    pub fn p_never(&self) -> f64 {
        self.p_never
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.source_label = label.into();
        self
    }

    /// Number of years with an explicit probability.
    pub fn horizon(&self) -> usize {
        self.annual_probs.len()
    }

    /// Unconditional probability of arrival in `year` (zero outside `1..=horizon`).
    pub fn prob(&self, year: usize) -> f64 {
        if year == 0 {
            0.0
        } else {
            self.annual_probs.get(year - 1).copied().unwrap_or(0.0)
        }
    }

    /// Probability of arrival in or before `year`.
    pub fn cdf(&self, year: usize) -> f64 {
        self.annual_probs.iter().take(year).sum()
    }

    /// Probability of no arrival through `year`, summed over the remaining
    /// years and the never-event.
    pub fn survival(&self, year: usize) -> f64 {
        self.p_never + self.annual_probs.iter().skip(year).sum::<f64>()
    }

    /// Per-period hazard of arrival in `year` given no arrival before it.
    /// Zero when the surviving mass is already exhausted.
    pub fn period_hazard(&self, year: usize) -> f64 {
        if year == 0 {
            return 0.0;
        }
        let surv = self.survival(year - 1);
        if surv > 0.0 {
            self.prob(year) / surv
        } else {
            0.0
        }
    }

    /// Hazards indexed by year, `hazards[0] = 0` and `hazards[t]` for `t in 1..=last_year`.
    pub fn hazards(&self, last_year: usize) -> Vec<f64> {
        (0..=last_year).map(|t| self.period_hazard(t)).collect()
    }

    /// True when this distribution's CDF is at least `other`'s at every year,
    /// i.e. arrival is (weakly) more front-loaded.
    pub fn cdf_dominates(&self, other: &ArrivalDistribution) -> bool {
        let horizon = self.horizon().max(other.horizon());
        let (mut mine, mut theirs) = (0.0, 0.0);
        for year in 1..=horizon {
            mine += self.prob(year);
            theirs += other.prob(year);
            if mine < theirs - CONSERVATION_TOL {
                return false;
            }
        }
        true
    }
}

/// Beliefs after `elapsed_years` without an arrival (passive learning).
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    base: ArrivalDistribution,
    elapsed_years: usize,
}

impl BeliefState {
    pub fn new(base: ArrivalDistribution) -> Self {
        BeliefState { base, elapsed_years: 0 }
    }

    pub fn at(base: ArrivalDistribution, elapsed_years: usize) -> Result<Self> {
        let state = BeliefState { base, elapsed_years };
        if state.survival_mass() > 0.0 {
            Ok(state)
        } else {
            Err(Error::domain(format!(
                "no surviving probability mass after {elapsed_years} years"
            )))
        }
    }

    pub fn base(&self) -> &ArrivalDistribution {
        &self.base
    }

    pub fn elapsed_years(&self) -> usize {
        self.elapsed_years
    }

    pub fn survival_mass(&self) -> f64 {
        self.base.survival(self.elapsed_years)
    }

    /// Probability that TAI arrives in `year`, given no arrival so far.
    pub fn conditional_hazard(&self, year: usize) -> Result<f64> {
        if year <= self.elapsed_years {
            return Err(Error::domain(format!(
                "year {year} is not after the {} elapsed years",
                self.elapsed_years
            )));
        }
        let surv = self.survival_mass();
        if !(surv > 0.0) {
            return Err(Error::domain("beliefs are degenerate: no surviving mass"));
        }
        Ok(self.base.prob(year) / surv)
    }

    /// Probability of the never-event given no arrival so far.
    pub fn conditional_never(&self) -> Result<f64> {
        let surv = self.survival_mass();
        if !(surv > 0.0) {
            return Err(Error::domain("beliefs are degenerate: no surviving mass"));
        }
        Ok(self.base.p_never() / surv)
    }

    /// Beliefs one year later, after observing no arrival.
    pub fn condition_on_no_arrival(&self) -> Result<BeliefState> {
        BeliefState::at(self.base.clone(), self.elapsed_years + 1)
    }

    /// The remaining years, renormalized and re-indexed so that year 1 is the
    /// year after the elapsed ones.
    pub fn conditional_distribution(&self) -> Result<ArrivalDistribution> {
        let surv = self.survival_mass();
        if !(surv > 0.0) {
            return Err(Error::domain("beliefs are degenerate: no surviving mass"));
        }
        let probs: Vec<f64> = self
            .base
            .annual_probs()
            .iter()
            .skip(self.elapsed_years)
            .map(|p| p / surv)
            .collect();
        let p_never = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        ArrivalDistribution::new(probs, p_never, self.base.source_label())
    }
}
