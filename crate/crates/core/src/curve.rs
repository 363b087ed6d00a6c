//! Exact right-continuous step functions for performance profiles.
//!
//! A curve stores integer counts over a common denominator, so every value is an
//! exact multiple of `1 / denominator`. Averaging `k` curves over `n_p` problems
//! sums the counts and uses the denominator `k * n_p`; no floating accumulation
//! happens before the final division.

use serde::{Deserialize, Serialize};

use crate::profile::ProfileError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub tau: f64,
    pub count: u64,
}

/// `rho(tau) = count(tau) / denominator`, where `count` is the count attached to
/// the largest breakpoint `<= tau`, or zero below the first breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve", into = "RawCurve")]
pub struct ProfileCurve {
    steps: Vec<Step>,
    denominator: u64,
    failure_ratio: Option<f64>,
}

impl ProfileCurve {
    /// Builds the empirical CDF of `ratios`: one breakpoint per distinct ratio.
    ///
    /// `failure_ratio` is metadata only; it lets plots and summaries tell the
    /// failure sentinel apart from finite ratios.
    ///
    /// # Panics
    ///
    /// Panics if `ratios` is empty or contains a NaN.
    pub fn from_ratios(ratios: &[f64], failure_ratio: Option<f64>) -> ProfileCurve {
        assert!(!ratios.is_empty(), "a profile needs at least one problem");
        let mut sorted = ratios.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN ratio"));
        let mut steps: Vec<Step> = Vec::new();
        for (i, &tau) in sorted.iter().enumerate() {
            let count = (i + 1) as u64;
            match steps.last_mut() {
                Some(last) if last.tau == tau => last.count = count,
                _ => steps.push(Step { tau, count }),
            }
        }
        ProfileCurve {
            steps,
            denominator: sorted.len() as u64,
            failure_ratio,
        }
    }

    /// Pointwise arithmetic mean of curves sharing one denominator, stored on the
    /// union of their breakpoints.
    ///
    /// # Panics
    ///
    /// Panics if `curves` is empty or the denominators differ.
    pub fn mean(curves: &[ProfileCurve]) -> ProfileCurve {
        assert!(!curves.is_empty(), "mean of zero curves");
        let denom = curves[0].denominator;
        assert!(
            curves.iter().all(|c| c.denominator == denom),
            "curves must share a denominator"
        );
        let taus = merged_breakpoints(curves.iter());
        let steps = taus
            .into_iter()
            .map(|tau| Step {
                tau,
                count: curves.iter().map(|c| c.count_at(tau)).sum(),
            })
            .collect();
        ProfileCurve {
            steps,
            denominator: denom * curves.len() as u64,
            failure_ratio: curves[0].failure_ratio,
        }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn failure_ratio(&self) -> Option<f64> {
        self.failure_ratio
    }

    /// `(tau, value)` pairs in increasing `tau`.
    pub fn breakpoints(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.steps
            .iter()
            .map(move |s| (s.tau, s.count as f64 / self.denominator as f64))
    }

    pub fn domain_start(&self) -> f64 {
        self.steps[0].tau
    }

    pub fn max_tau(&self) -> f64 {
        self.steps[self.steps.len() - 1].tau
    }

    /// Largest breakpoint strictly below the failure ratio, if any.
    pub fn max_finite_tau(&self) -> Option<f64> {
        let rm = self.failure_ratio.unwrap_or(f64::INFINITY);
        self.steps.iter().rev().map(|s| s.tau).find(|&t| t < rm)
    }

    pub fn count_at(&self, tau: f64) -> u64 {
        let idx = self.steps.partition_point(|s| s.tau <= tau);
        if idx == 0 {
            0
        } else {
            self.steps[idx - 1].count
        }
    }

    pub fn evaluate(&self, tau: f64) -> f64 {
        self.count_at(tau) as f64 / self.denominator as f64
    }

    pub fn final_value(&self) -> f64 {
        self.evaluate(self.max_tau())
    }
}

/// Sorted, de-duplicated union of all breakpoints.
pub fn merged_breakpoints<'a>(curves: impl IntoIterator<Item = &'a ProfileCurve>) -> Vec<f64> {
    let mut taus: Vec<f64> = curves
        .into_iter()
        .flat_map(|c| c.steps.iter().map(|s| s.tau))
        .collect();
    taus.sort_by(|a, b| a.partial_cmp(b).expect("NaN breakpoint"));
    taus.dedup();
    taus
}

/// Exact `integral_lo^hi |a(tau) - b(tau)| dtau`.
///
/// Both curves are constant between consecutive merged breakpoints, so the
/// integral is a finite sum of rectangle areas.
pub fn l1_distance(
    a: &ProfileCurve,
    b: &ProfileCurve,
    lo: f64,
    hi: f64,
) -> Result<f64, ProfileError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(ProfileError::InvalidInterval { lo, hi });
    }
    let mut edges = vec![lo];
    edges.extend(
        merged_breakpoints([a, b])
            .into_iter()
            .filter(|&t| t > lo && t < hi),
    );
    edges.push(hi);
    Ok(edges
        .windows(2)
        .map(|w| (a.evaluate(w[0]) - b.evaluate(w[0])).abs() * (w[1] - w[0]))
        .sum())
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    tau: f64,
    value: f64,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct RawCurve {
    denominator: u64,
    failure_ratio: Option<f64>,
    breakpoints: Vec<RawPoint>,
}

impl From<ProfileCurve> for RawCurve {
    fn from(c: ProfileCurve) -> Self {
        let breakpoints = c
            .steps
            .iter()
            .map(|s| RawPoint {
                tau: s.tau,
                value: s.count as f64 / c.denominator as f64,
                count: s.count,
            })
            .collect();
        RawCurve {
            denominator: c.denominator,
            failure_ratio: c.failure_ratio,
            breakpoints,
        }
    }
}

impl TryFrom<RawCurve> for ProfileCurve {
    type Error = String;

    fn try_from(raw: RawCurve) -> Result<Self, Self::Error> {
        if raw.denominator == 0 {
            return Err("curve denominator must be positive".into());
        }
        if raw.breakpoints.is_empty() {
            return Err("curve has no breakpoints".into());
        }
        let steps: Vec<Step> = raw
            .breakpoints
            .iter()
            .map(|p| Step {
                tau: p.tau,
                count: p.count,
            })
            .collect();
        let ordered = steps
            .windows(2)
            .all(|w| w[0].tau < w[1].tau && w[0].count <= w[1].count);
        if !ordered || steps.iter().any(|s| !s.tau.is_finite()) {
            return Err(
                "breakpoints must be finite, strictly increasing and non-decreasing".into(),
            );
        }
        if steps[steps.len() - 1].count > raw.denominator {
            return Err("curve exceeds 1".into());
        }
        Ok(ProfileCurve {
            steps,
            denominator: raw.denominator,
            failure_ratio: raw.failure_ratio,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_step(at: f64) -> ProfileCurve {
        ProfileCurve::from_ratios(&[at], None)
    }

    #[test]
    fn right_continuous_evaluation() {
        let c = ProfileCurve::from_ratios(&[2.0, 1.0, 1.0, 1.0, 1.0], None);
        assert_eq!(c.evaluate(0.5), 0.0);
        assert_eq!(c.evaluate(1.0), 0.8);
        assert_eq!(c.evaluate(1.999), 0.8);
        assert_eq!(c.evaluate(2.0), 1.0);
        assert_eq!(c.evaluate(1e9), 1.0);
        assert_eq!(c.steps().len(), 2);
        assert_eq!(c.domain_start(), 1.0);
    }

    #[test]
    fn all_failures_jump_at_rm() {
        let c = ProfileCurve::from_ratios(&[10.0; 4], Some(10.0));
        assert_eq!(c.evaluate(9.99), 0.0);
        assert_eq!(c.evaluate(10.0), 1.0);
        assert_eq!(c.max_finite_tau(), None);
    }

    #[test]
    fn mean_uses_breakpoint_union() {
        let a = ProfileCurve::from_ratios(&[1.0, 3.0], None);
        let b = ProfileCurve::from_ratios(&[2.0, 2.0], None);
        let m = ProfileCurve::mean(&[a, b]);
        assert_eq!(m.denominator(), 4);
        let pts: Vec<_> = m.breakpoints().collect();
        assert_eq!(pts, vec![(1.0, 0.25), (2.0, 0.75), (3.0, 1.0)]);
    }

    #[test]
    fn l1_identical_is_zero() {
        let a = ProfileCurve::from_ratios(&[1.0, 1.5, 4.0], None);
        assert_eq!(l1_distance(&a, &a.clone(), 0.0, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn l1_box() {
        let d = l1_distance(&unit_step(1.0), &unit_step(1.5), 1.0, 2.0).unwrap();
        assert_eq!(d, 0.5);
    }

    #[test]
    fn l1_rejects_bad_interval() {
        let a = unit_step(1.0);
        assert!(matches!(
            l1_distance(&a, &a, 2.0, 1.0),
            Err(ProfileError::InvalidInterval { .. })
        ));
        assert!(l1_distance(&a, &a, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let c = ProfileCurve::from_ratios(&[1.0, 5.0 / 3.0, 40.0], Some(40.0));
        let text = serde_json::to_string(&c).unwrap();
        let back: ProfileCurve = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<ProfileCurve>(
            r#"{"denominator":2,"failure_ratio":null,"breakpoints":[{"tau":2,"value":0.5,"count":1},{"tau":1,"value":1,"count":2}]}"#
        )
        .is_err());
    }
}
