use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use super::ArrivalDistribution;
use crate::error::{Error, Result};

/// Compound negative beta-binomial arrival model.
///
/// TAI arrives on the trial (month) at which the `n`-th breakthrough occurs.
/// Each month succeeds with an unknown probability drawn from `Beta(a, b)`,
/// and `n` itself is drawn from `n_support` with `n_weights`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NbbSpec {
    pub n_support: Vec<u32>,
    pub n_weights: Vec<f64>,
    pub a: f64,
    pub b: f64,
    #[serde(default = "default_months")]
    pub months_per_year: u32,
    #[serde(default = "default_horizon")]
    pub horizon_years: u32,
}

fn default_months() -> u32 {
    12
}

fn default_horizon() -> u32 {
    60
}

impl NbbSpec {
    /// A spec with a single breakthrough count and default trial settings.
    pub fn single(n: u32, a: f64, b: f64) -> Self {
        NbbSpec {
            n_support: vec![n],
            n_weights: vec![1.0],
            a,
            b,
            months_per_year: default_months(),
            horizon_years: default_horizon(),
        }
    }

    /// Uniform weights over `lo..=hi`.
    pub fn uniform_range(lo: u32, hi: u32, a: f64, b: f64) -> Self {
        let n_support: Vec<u32> = (lo..=hi).collect();
        let w = 1.0 / n_support.len() as f64;
        NbbSpec {
            n_weights: vec![w; n_support.len()],
            n_support,
            ..NbbSpec::single(lo, a, b)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_support.is_empty() || self.n_support.len() != self.n_weights.len() {
            return Err(Error::config(
                "n_support and n_weights must be nonempty and of equal length",
            ));
        }
        if self.n_support[0] < 1 || self.n_support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("n_support must be sorted, distinct and at least 1"));
        }
        if self.n_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::config("n_weights must be nonnegative"));
        }
        let total: f64 = self.n_weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!("n_weights sum to {total}, expected 1")));
        }
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::config(format!(
                "beta shapes must be positive, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        if self.months_per_year == 0 || self.horizon_years == 0 {
            return Err(Error::config("months_per_year and horizon_years must be positive"));
        }
        Ok(())
    }

    /// Mixture probability that the arrival trial is `k`.
    pub fn trial_pmf(&self, k: u64) -> f64 {
        self.n_support
            .iter()
            .zip(&self.n_weights)
            .map(|(&n, &w)| w * nbb_trial_pmf(n, self.a, self.b, k))
            .sum()
    }

    /// Mixture masses of trials `1..=months`.
    pub fn monthly(&self, months: usize) -> Vec<f64> {
        let mut monthly = vec![0.0; months];
        for (&n, &w) in self.n_support.iter().zip(&self.n_weights) {
            if w == 0.0 {
                continue;
            }
            for (acc, m) in monthly.iter_mut().zip(monthly_masses(n, self.a, self.b, months)) {
                *acc += w * m;
            }
        }
        monthly
    }

    /// Cumulative arrival probability through each of the first `years` years.
    pub(crate) fn cumulative(&self, years: usize) -> Vec<f64> {
        let monthly = self.monthly(years * self.months_per_year as usize);
        let mut running = 0.0;
        monthly
            .chunks(self.months_per_year as usize)
            .map(|year| {
                running += year.iter().sum::<f64>();
                running
            })
            .collect()
    }
}

/// Probability that the `n`-th success happens on trial `k` when the
/// per-trial success probability is `Beta(a, b)` distributed:
/// `C(k-1, n-1) B(a+n, b+k-n) / B(a, b)`, evaluated in log space.
pub fn nbb_trial_pmf(n: u32, a: f64, b: f64, k: u64) -> f64 {
    let n64 = u64::from(n);
    if n == 0 || k < n64 {
        return 0.0;
    }
    let (n, k) = (n as f64, k as f64);
    let ln_choose = ln_gamma(k) - ln_gamma(n) - ln_gamma(k - n + 1.0);
    (ln_choose + ln_beta(a + n, b + k - n) - ln_beta(a, b)).exp()
}

/// Masses of trials `1..=months` for a single `n`, using the ratio
/// `pmf(k+1)/pmf(k) = k (b+k-n) / ((k-n+1)(a+b+k))` in log space.
pub fn monthly_masses(n: u32, a: f64, b: f64, months: usize) -> Vec<f64> {
    let mut out = vec![0.0; months];
    let first = n as usize;
    if n == 0 || first > months {
        return out;
    }
    let nf = n as f64;
    let mut log_mass = ln_beta(a + nf, b) - ln_beta(a, b);
    out[first - 1] = log_mass.exp();
    for k in first..months {
        let kf = k as f64;
        log_mass += kf.ln() + (b + kf - nf).ln() - (kf - nf + 1.0).ln() - (a + b + kf).ln();
        out[k] = log_mass.exp();
    }
    out
}

/// Aggregates monthly arrival masses into annual probabilities over the
/// horizon; the tail beyond the horizon becomes never-mass.
pub fn annualize(spec: &NbbSpec) -> Result<ArrivalDistribution> {
    spec.validate()?;
    let cumulative = spec.cumulative(spec.horizon_years as usize);
    let mut prev = 0.0;
    let annual: Vec<f64> = cumulative
        .iter()
        .map(|&c| {
            let p = c - prev;
            prev = c;
            p.max(0.0)
        })
        .collect();
    let p_never = (1.0 - annual.iter().sum::<f64>()).max(0.0);
    ArrivalDistribution::new(annual, p_never, "nbb")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_beta_closed_form() {
        // with a = b = 1 and n = 1 the pmf is 1/(k(k+1))
        assert!((nbb_trial_pmf(1, 1.0, 1.0, 1) - 0.5).abs() < 1e-14);
        assert!((nbb_trial_pmf(1, 1.0, 1.0, 3) - 1.0 / 12.0).abs() < 1e-14);
        let masses = monthly_masses(1, 1.0, 1.0, 200);
        for k in 1..=200u64 {
            let exact = 1.0 / (k as f64 * (k as f64 + 1.0));
            assert!((masses[k as usize - 1] - exact).abs() < 1e-13 * exact);
            // log-gamma cancellation limits the direct formula
            assert!((nbb_trial_pmf(1, 1.0, 1.0, k) - exact).abs() < 1e-11 * exact);
        }
        assert_eq!(nbb_trial_pmf(3, 1.0, 1.0, 2), 0.0);
    }

    #[test]
    fn partial_sums_approach_one() {
        let (a, b) = (3.0, 2.0);
        for n in [1u32, 2, 4] {
            let total: f64 = monthly_masses(n, a, b, 1_000_000).iter().sum();
            assert!((total - 1.0).abs() < 1e-9, "n = {n}: {total}");
        }
    }

    /// `C(k-1, n-1) prod(a+i)/(a+b+i) prod(b+j)/(a+b+n+j)` as a running product.
    fn product_form(n: u32, a: f64, b: f64, k: u64) -> f64 {
        let n = n as u64;
        let mut v = 1.0;
        for i in 0..n - 1 {
            v *= (k - 1 - i) as f64 / (i + 1) as f64;
        }
        for i in 0..n {
            v *= (a + i as f64) / (a + b + i as f64);
        }
        for j in 0..k - n {
            v *= (b + j as f64) / (a + b + (n + j) as f64);
        }
        v
    }

    #[test]
    fn recurrence_matches_product_form() {
        for &(n, a, b) in &[(1u32, 0.7, 30.0), (3, 2.0, 400.0), (8, 5.5, 90.0)] {
            let masses = monthly_masses(n, a, b, 720);
            for (i, &m) in masses.iter().enumerate() {
                let k = i as u64 + 1;
                if k < n as u64 {
                    assert_eq!(m, 0.0);
                    continue;
                }
                let exact = product_form(n, a, b, k);
                assert!(
                    (m - exact).abs() <= 1e-12 * exact,
                    "k={k} n={n} {:e}",
                    (m - exact) / exact
                );
                assert!((nbb_trial_pmf(n, a, b, k) - exact).abs() <= 1e-10 * exact, "k={k}");
            }
        }
    }

    #[test]
    fn first_year_of_uniform_beta() {
        let d = annualize(&NbbSpec::single(1, 1.0, 1.0)).unwrap();
        assert!((d.prob(1) - 12.0 / 13.0).abs() < 1e-13);
        assert_eq!(d.horizon(), 60);
        // the tail beyond 720 months is 1/721
        assert!((d.p_never() - 1.0 / 721.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_mixture_matches_single() {
        let single = annualize(&NbbSpec::single(4, 1.5, 300.0)).unwrap();
        let mixture = NbbSpec {
            n_support: vec![2, 4, 6],
            n_weights: vec![0.0, 1.0, 0.0],
            ..NbbSpec::single(2, 1.5, 300.0)
        };
        assert_eq!(annualize(&mixture).unwrap().annual_probs(), single.annual_probs());
    }

    #[test]
    fn validation() {
        let mut spec = NbbSpec::single(1, 1.0, 1.0);
        spec.a = 0.0;
        assert!(spec.validate().is_err());
        let spec = NbbSpec {
            n_support: vec![2, 1],
            n_weights: vec![0.5, 0.5],
            ..NbbSpec::single(1, 1.0, 1.0)
        };
        assert!(spec.validate().is_err());
        let spec = NbbSpec {
            n_weights: vec![0.9],
            ..NbbSpec::single(1, 1.0, 1.0)
        };
        assert!(spec.validate().is_err());
    }

    fn random_spec() -> impl Strategy<Value = NbbSpec> {
        (
            1u32..6,
            1u32..4,
            0.2f64..6.0,
            1.0f64..2000.0,
            prop::collection::vec(0.01f64..1.0, 4),
        )
            .prop_map(|(lo, len, a, b, raw)| {
                let n_support: Vec<u32> = (lo..lo + len).collect();
                let raw = &raw[..n_support.len()];
                let total: f64 = raw.iter().sum();
                NbbSpec {
                    n_weights: raw.iter().map(|w| w / total).collect(),
                    n_support,
                    ..NbbSpec::single(lo, a, b)
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn annualization_conserves_and_partitions(spec in random_spec()) {
            let d = annualize(&spec).unwrap();
            let total: f64 = d.annual_probs().iter().sum::<f64>() + d.p_never();
            prop_assert!((total - 1.0).abs() < 1e-12);

            let months = 12 * spec.horizon_years as usize;
            let monthly: f64 = spec.monthly(months).iter().sum();
            let annual: f64 = d.annual_probs().iter().sum();
            prop_assert!((monthly - annual).abs() < 1e-12);
        }
    }
}
