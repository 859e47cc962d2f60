//! Least-squares fit of an [`NbbSpec`] to cumulative-probability anchors.
//!
//! The beta shapes are searched continuously (Nelder-Mead in log space) and
//! the breakthrough-count support by enumeration over singletons and short
//! uniform ranges.

use argmin::core::{CostFunction, Executor, State, TerminationReason};
use argmin::solver::neldermead::NelderMead;
use rayon::prelude::*;

use super::nbb::NbbSpec;
use crate::error::{Error, Result};

/// A point on the cumulative arrival curve: `P(arrival year <= year) = cumulative`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub year: u32,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    /// Largest breakthrough count considered.
    pub max_n: u32,
    /// Longest uniform range `lo..=hi` of breakthrough counts tried (1 = singletons only).
    pub max_range_len: u32,
    /// Explicit supports to search instead of the generated grid.
    pub supports: Option<Vec<Vec<u32>>>,
    pub months_per_year: u32,
    pub horizon_years: u32,
    pub max_iters: u64,
    /// Simplex standard-deviation tolerance on the loss.
    pub sd_tolerance: f64,
    /// Fits whose loss exceeds this are flagged.
    pub flag_loss: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            max_n: 10,
            max_range_len: 3,
            supports: None,
            months_per_year: 12,
            horizon_years: 60,
            max_iters: 4000,
            sd_tolerance: 1e-18,
            flag_loss: 1e-6,
        }
    }
}

impl FitSettings {
    fn candidate_supports(&self) -> Vec<Vec<u32>> {
        if let Some(s) = &self.supports {
            return s.clone();
        }
        let mut out = Vec::new();
        for len in 1..=self.max_range_len.max(1) {
            for lo in 1..=self.max_n {
                let hi = lo + len - 1;
                if hi <= self.max_n {
                    out.push((lo..=hi).collect());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub spec: NbbSpec,
    pub loss: f64,
    /// `(anchor, fitted cumulative probability)` pairs.
    pub per_anchor: Vec<(Anchor, f64)>,
    /// Set when the loss exceeds `flag_loss` or the search hit its iteration cap.
    pub flagged: bool,
    pub warning: Option<String>,
}

struct AnchorLoss<'a> {
    template: &'a NbbSpec,
    anchors: &'a [Anchor],
    years: usize,
}

impl AnchorLoss<'_> {
    fn spec_at(&self, x: &[f64]) -> NbbSpec {
        NbbSpec {
            a: x[0].exp(),
            b: x[1].exp(),
            ..self.template.clone()
        }
    }

    fn loss(&self, spec: &NbbSpec) -> f64 {
        let cdf = spec.cumulative(self.years);
        self.anchors
            .iter()
            .map(|a| {
                let d = cdf[a.year as usize - 1] - a.cumulative;
                d * d
            })
            .sum()
    }
}

impl CostFunction for AnchorLoss<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        // keep the shapes inside a range where log-space evaluation is accurate
        if x.iter().any(|v| !v.is_finite() || v.abs() > 30.0) {
            return Ok(f64::INFINITY);
        }
        Ok(self.loss(&self.spec_at(x)))
    }
}

fn validate_anchors(anchors: &[Anchor], horizon_years: u32) -> Result<()> {
    if anchors.is_empty() {
        return Err(Error::config("no anchors to fit"));
    }
    for (i, a) in anchors.iter().enumerate() {
        if !(a.cumulative > 0.0 && a.cumulative < 1.0) {
            return Err(Error::config(format!(
                "anchor {} has cumulative probability {} outside (0, 1)",
                i + 1,
                a.cumulative
            )));
        }
        if a.year == 0 || a.year > horizon_years {
            return Err(Error::config(format!(
                "anchor {} has year {} outside 1..={horizon_years}",
                i + 1,
                a.year
            )));
        }
    }
    for (i, w) in anchors.windows(2).enumerate() {
        if w[1].year <= w[0].year {
            return Err(Error::config(format!("anchor years must increase (anchor {})", i + 2)));
        }
        if w[1].cumulative < w[0].cumulative {
            return Err(Error::config(format!(
                "anchor probabilities must not decrease (anchor {})",
                i + 2
            )));
        }
    }
    Ok(())
}

struct Candidate {
    spec: NbbSpec,
    loss: f64,
    capped: bool,
}

fn run_simplex(problem: AnchorLoss<'_>, start: [f64; 2], settings: &FitSettings) -> Result<Candidate> {
    let template = problem.template;
    let simplex = vec![
        start.to_vec(),
        vec![start[0] + 0.5, start[1]],
        vec![start[0], start[1] + 0.5],
    ];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(settings.sd_tolerance)
        .map_err(|e| Error::config(e.to_string()))?;
    let res = Executor::new(problem, solver)
        .configure(|s| s.max_iters(settings.max_iters))
        .run()
        .map_err(|e| Error::config(format!("simplex search failed: {e}")))?;
    let state = res.state();
    let x = state
        .get_best_param()
        .cloned()
        .ok_or_else(|| Error::config("simplex search produced no point"))?;
    let capped = matches!(state.get_termination_reason(), Some(TerminationReason::MaxItersReached));
    Ok(Candidate {
        spec: NbbSpec {
            a: x[0].exp(),
            b: x[1].exp(),
            ..template.clone()
        },
        loss: state.get_best_cost(),
        capped,
    })
}

const STARTS: [[f64; 2]; 4] = [[0.0, 4.0], [0.0, 7.0], [1.5, 6.0], [-1.0, 3.0]];

fn fit_support(support: &[u32], anchors: &[Anchor], settings: &FitSettings) -> Result<Candidate> {
    let w = 1.0 / support.len() as f64;
    let template = NbbSpec {
        n_support: support.to_vec(),
        n_weights: vec![w; support.len()],
        a: 1.0,
        b: 1.0,
        months_per_year: settings.months_per_year,
        horizon_years: settings.horizon_years,
    };
    let years = anchors.last().map(|a| a.year as usize).unwrap_or(1);
    let problem = || AnchorLoss {
        template: &template,
        anchors,
        years,
    };

    let mut best: Option<Candidate> = None;
    for start in STARTS {
        let c = run_simplex(problem(), start, settings)?;
        if best.as_ref().is_none_or(|b| c.loss < b.loss) {
            best = Some(c);
        }
    }
    let mut best = best.expect("at least one start");
    // restart from the best point; a fresh simplex escapes early collapse
    for _ in 0..3 {
        let start = [best.spec.a.ln(), best.spec.b.ln()];
        let c = run_simplex(problem(), start, settings)?;
        if c.loss < best.loss {
            best = c;
        } else {
            break;
        }
    }
    Ok(best)
}

/// Fits anchors by minimizing squared error of cumulative probabilities.
/// The grid over supports runs in parallel; the winner is chosen in grid
/// order so the result does not depend on scheduling.
pub fn fit_to_anchors(anchors: &[Anchor], settings: &FitSettings) -> Result<FitReport> {
    validate_anchors(anchors, settings.horizon_years)?;
    let supports = settings.candidate_supports();
    if supports.is_empty() {
        return Err(Error::config("no breakthrough-count supports to search"));
    }
    let results: Vec<Result<Candidate>> = supports.par_iter().map(|s| fit_support(s, anchors, settings)).collect();

    let mut best: Option<Candidate> = None;
    for r in results {
        let c = r?;
        if best.as_ref().is_none_or(|b| c.loss < b.loss) {
            best = Some(c);
        }
    }
    let best = best.expect("nonempty support grid");

    let cdf = best.spec.cumulative(settings.horizon_years as usize);
    let per_anchor = anchors.iter().map(|a| (*a, cdf[a.year as usize - 1])).collect();
    let mut warning = None;
    if best.loss > settings.flag_loss {
        warning = Some(format!(
            "loss {:.3e} exceeds {:.1e}; anchors are not reproducible by the distribution family",
            best.loss, settings.flag_loss
        ));
    } else if best.capped {
        warning = Some("simplex search stopped at its iteration cap".to_string());
    }
    Ok(FitReport {
        spec: best.spec,
        loss: best.loss,
        per_anchor,
        flagged: warning.is_some(),
        warning,
    })
}
