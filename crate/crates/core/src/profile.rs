//! Performance ratios and classic performance profiles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::ProfileCurve;
use crate::ingest::TimingMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("active solver set is empty")]
    EmptyActiveSet,
    #[error("unknown solver {0}")]
    UnknownSolver(String),
    #[error("failure ratio {rm} must be finite and exceed the largest finite ratio {max_ratio}")]
    InvalidRM { rm: f64, max_ratio: f64 },
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("solver {0} is not active in this wave")]
    SolverNotActive(String),
    #[error("{requested} waves requested but at most {max} are possible")]
    TooManyWaves { requested: usize, max: usize },
    #[error("need at least {needed} solvers, found {found}")]
    TooFewSolvers { needed: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// How the ratio assigned to failed runs is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FailureRatio {
    /// Twice the largest finite ratio, or 2 when nothing succeeded.
    #[default]
    Auto,
    Fixed(f64),
}

/// One wave's performance ratios.
///
/// Rows are stored per solver. A solver has a row when it is active or was
/// carried over from an earlier wave; compute_ratios on a subset leaves the
/// other solvers without rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioMatrix {
    problems: Vec<String>,
    solvers: Vec<String>,
    active: Vec<bool>,
    rows: Vec<Option<Vec<f64>>>,
    rm: f64,
}

impl RatioMatrix {
    pub(crate) fn from_parts(
        problems: Vec<String>,
        solvers: Vec<String>,
        active: Vec<bool>,
        rows: Vec<Option<Vec<f64>>>,
        rm: f64,
    ) -> RatioMatrix {
        debug_assert_eq!(solvers.len(), active.len());
        debug_assert_eq!(solvers.len(), rows.len());
        RatioMatrix {
            problems,
            solvers,
            active,
            rows,
            rm,
        }
    }

    pub fn problems(&self) -> &[String] {
        &self.problems
    }

    pub fn solvers(&self) -> &[String] {
        &self.solvers
    }

    pub fn n_problems(&self) -> usize {
        self.problems.len()
    }

    pub fn n_solvers(&self) -> usize {
        self.solvers.len()
    }

    /// The failure ratio `r_M` used in this matrix.
    pub fn rm(&self) -> f64 {
        self.rm
    }

    pub fn is_active(&self, solver: usize) -> bool {
        self.active.get(solver).copied().unwrap_or(false)
    }

    pub fn active_solvers(&self) -> Vec<usize> {
        (0..self.solvers.len())
            .filter(|&s| self.active[s])
            .collect()
    }

    pub fn row(&self, solver: usize) -> Option<&[f64]> {
        self.rows.get(solver).and_then(|r| r.as_deref())
    }

    pub fn ratio(&self, problem: usize, solver: usize) -> Option<f64> {
        self.row(solver).map(|r| r[problem])
    }

    pub fn solver_index(&self, label: &str) -> Result<usize, ProfileError> {
        self.solvers
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| ProfileError::UnknownSolver(label.to_string()))
    }

    pub(crate) fn require_row(&self, solver: usize) -> Result<&[f64], ProfileError> {
        self.row(solver)
            .ok_or_else(|| ProfileError::UnknownSolver(self.label(solver)))
    }

    pub(crate) fn label(&self, solver: usize) -> String {
        self.solvers
            .get(solver)
            .cloned()
            .unwrap_or_else(|| format!("#{solver}"))
    }

    /// Largest ratio below `r_M` over every stored row.
    pub fn max_finite_ratio(&self) -> Option<f64> {
        self.rows
            .iter()
            .flatten()
            .flatten()
            .copied()
            .filter(|&r| r < self.rm)
            .reduce(f64::max)
    }
}

/// Per-problem best time over `active`, `None` when every active solver failed.
pub(crate) fn best_times(m: &TimingMatrix, active: &[usize]) -> Vec<Option<f64>> {
    (0..m.n_problems())
        .map(|p| active.iter().filter_map(|&s| m.time(p, s)).reduce(f64::min))
        .collect()
}

pub(crate) fn active_mask(n_solvers: usize, active: &[usize]) -> Result<Vec<bool>, ProfileError> {
    if active.is_empty() {
        return Err(ProfileError::EmptyActiveSet);
    }
    let mut mask = vec![false; n_solvers];
    for &s in active {
        if s >= n_solvers {
            return Err(ProfileError::UnknownSolver(format!("#{s}")));
        }
        mask[s] = true;
    }
    Ok(mask)
}

/// Computes `t[p][s] / min over active of t[p][*]` for every active solver.
///
/// Failed runs, and every active solver on a problem no active solver solved,
/// get the failure ratio.
pub fn compute_ratios(
    m: &TimingMatrix,
    active: &[usize],
    failure_ratio: FailureRatio,
) -> Result<RatioMatrix, ProfileError> {
    let mask = active_mask(m.n_solvers(), active)?;
    let active: Vec<usize> = (0..m.n_solvers()).filter(|&s| mask[s]).collect();
    let best = best_times(m, &active);

    let finite: Vec<Option<Vec<Option<f64>>>> = (0..m.n_solvers())
        .map(|s| {
            mask[s].then(|| {
                (0..m.n_problems())
                    .map(|p| Some(m.time(p, s)? / best[p]?))
                    .collect()
            })
        })
        .collect();
    let max_ratio = finite
        .iter()
        .flatten()
        .flatten()
        .flatten()
        .copied()
        .reduce(f64::max);

    let rm = match failure_ratio {
        FailureRatio::Auto => max_ratio.map_or(2.0, |r| 2.0 * r),
        FailureRatio::Fixed(rm) => {
            let max = max_ratio.unwrap_or(0.0);
            if !(rm.is_finite() && rm > 0.0 && rm > max) {
                return Err(ProfileError::InvalidRM { rm, max_ratio: max });
            }
            rm
        }
    };

    let rows = finite
        .into_iter()
        .map(|row| row.map(|r| r.into_iter().map(|x| x.unwrap_or(rm)).collect()))
        .collect();
    Ok(RatioMatrix::from_parts(
        m.problems().to_vec(),
        m.solvers().to_vec(),
        mask,
        rows,
        rm,
    ))
}

/// The CDF of one solver's ratios over all problems.
pub fn compute_profile(r: &RatioMatrix, solver: usize) -> Result<ProfileCurve, ProfileError> {
    let row = r.require_row(solver)?;
    Ok(ProfileCurve::from_ratios(row, Some(r.rm())))
}

/// Number of problems on which `solver` has ratio exactly 1.
pub fn wins(r: &RatioMatrix, solver: usize) -> Result<usize, ProfileError> {
    Ok(r.require_row(solver)?.iter().filter(|&&x| x == 1.0).count())
}

/// Fraction of problems `solver` solved at all.
pub fn success_fraction(r: &RatioMatrix, solver: usize) -> Result<f64, ProfileError> {
    let row = r.require_row(solver)?;
    let solved = row.iter().filter(|&&x| x < r.rm()).count();
    Ok(solved as f64 / row.len() as f64)
}
