#![allow(dead_code)]

use std::path::PathBuf;

use tai_core::econ::ModelParams;
use tai_core::timeline::{read_distribution, ArrivalDistribution};

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn shipped(name: &str) -> ArrivalDistribution {
    read_distribution(crate_dir().join("data").join(format!("{name}.csv"))).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Capital solving `alpha k^(alpha-1) + 1 - delta = (1+g)^eta / beta`, with unit labor.
pub fn stationary_capital(p: &ModelParams, g: f64) -> f64 {
    let target = (1.0 + g).powf(p.eta) / p.beta - 1.0 + p.delta;
    (target / p.alpha).powf(1.0 / (p.alpha - 1.0))
}

/// Three-year economy with arrival possible only in year 1, solved without
/// Euler equations: households pick capital by grid search over expected
/// discounted log utility, and aggregates are iterated to a fixed point of
/// the best response.
///
/// Spine capital in years 0 and 3 is the status-quo steady state. After an
/// arrival, capital one year later is free and capital from two years later
/// on is the post-arrival steady state. Returns `(k_1, k_2, kb_1)`.
pub struct Toy {
    pub params: ModelParams,
    pub p_arrival: f64,
}

impl Toy {
    fn wage(&self, k: f64) -> f64 {
        (1.0 - self.params.alpha) * k.powf(self.params.alpha)
    }

    fn gross(&self, k: f64) -> f64 {
        self.params.alpha * k.powf(self.params.alpha - 1.0) + 1.0 - self.params.delta
    }

    /// Household utility of own choices `x = (k_1, k_2, kb_1)` given aggregates `agg`,
    /// dropping terms that do not depend on the choices.
    pub fn utility(&self, x: [f64; 3], agg: [f64; 3]) -> f64 {
        let p = &self.params;
        assert_eq!(p.eta, 1.0, "toy oracle is written for log utility");
        let g = 1.0 + p.g_sq;
        let gt = 1.0 + p.g_tai;
        let k_sq = stationary_capital(p, p.g_sq);
        let k_tai = stationary_capital(p, p.g_tai);
        let [k1, k2, kb1] = x;
        let [a1, a2, ab1] = agg;
        let share = (k1 / a1).powf(p.lambda);

        let c0 = self.wage(k_sq) + self.gross(k_sq) * k_sq - g * k1;
        let c1 = self.wage(a1) + self.gross(a1) * k1 - g * k2;
        let c2 = self.wage(a2) + self.gross(a2) * k2 - g * k_sq;
        let cb0 = share * self.wage(a1) + self.gross(a1) * k1 - gt * kb1;
        let cb1 = share * self.wage(ab1) + self.gross(ab1) * kb1 - gt * k_tai;
        let tail = share * self.wage(k_tai) + self.gross(k_tai) * k_tai - gt * k_tai;
        if [c0, c1, c2, cb0, cb1, tail].iter().any(|c| c.is_nan() || *c <= 0.0) {
            return f64::NEG_INFINITY;
        }
        let b = p.beta;
        c0.ln()
            + b * (1.0 - self.p_arrival) * (c1.ln() + b * c2.ln())
            + b * self.p_arrival * (cb0.ln() + b * cb1.ln() + b * b / (1.0 - b) * tail.ln())
    }

    /// Coarse-to-fine grid search for the household's best response.
    pub fn best_response(&self, agg: [f64; 3], start: [f64; 3]) -> [f64; 3] {
        const POINTS: i32 = 10;
        let mut center = start;
        let mut width = [0.5 * start[0], 0.5 * start[1], 0.5 * start[2]];
        while width.iter().zip(&center).any(|(w, c)| *w > 1e-12 * c) {
            let mut best = (f64::NEG_INFINITY, center);
            for i in -POINTS..=POINTS {
                for j in -POINTS..=POINTS {
                    for l in -POINTS..=POINTS {
                        let x = [
                            center[0] + width[0] * i as f64 / POINTS as f64,
                            center[1] + width[1] * j as f64 / POINTS as f64,
                            center[2] + width[2] * l as f64 / POINTS as f64,
                        ];
                        if x.iter().any(|v| *v <= 0.0) {
                            continue;
                        }
                        let u = self.utility(x, agg);
                        if u > best.0 {
                            best = (u, x);
                        }
                    }
                }
            }
            center = best.1;
            for w in &mut width {
                *w *= 0.3;
            }
        }
        center
    }

    /// Symmetric equilibrium: aggregates equal to the best response to them.
    pub fn equilibrium(&self) -> [f64; 3] {
        let k_sq = stationary_capital(&self.params, self.params.g_sq);
        let mut agg = [k_sq, k_sq, k_sq];
        for _ in 0..400 {
            let br = self.best_response(agg, agg);
            let gap = (0..3).map(|i| rel_err(br[i], agg[i])).fold(0.0, f64::max);
            if gap < 1e-8 {
                return br;
            }
            for i in 0..3 {
                agg[i] = 0.5 * (agg[i] + br[i]);
            }
        }
        panic!("toy best-response iteration did not settle: {agg:?}");
    }
}
