//! Timing tables on which the classic profile reorders the remaining solvers
//! once the best one is removed.
//!
//! Problems are split into partitions `P_1..P_n`; solver `s_i` is strictly
//! fastest on `P_i`. On `P_i` for `i <= n - 2`, solver `s_{i+2}` is faster
//! than `s_{i+1}`, so removing `s_1` hands `P_1` to `s_3` and lifts it above
//! `s_2`.

use serde::Serialize;
use thiserror::Error;

use crate::ingest::{Cell, TimingMatrix};
use crate::nested::{classic_ranking, nested_profiles, ProfileConfig, WaveCount};
use crate::profile::ProfileError;

#[derive(Debug, Error)]
pub enum AdversarialError {
    #[error("adversarial spec invalid: {0}")]
    SpecInvariantViolated(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialSpec {
    pub n_solvers: usize,
    pub partition_sizes: Vec<usize>,
    pub time_base: f64,
}

impl AdversarialSpec {
    pub fn new(partition_sizes: Vec<usize>, time_base: f64) -> AdversarialSpec {
        AdversarialSpec {
            n_solvers: partition_sizes.len(),
            partition_sizes,
            time_base,
        }
    }

    pub fn n_problems(&self) -> usize {
        self.partition_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<(), AdversarialError> {
        let fail = |msg: String| Err(AdversarialError::SpecInvariantViolated(msg));
        let n = self.n_solvers;
        if n < 3 {
            return fail(format!("need at least 3 solvers, got {n}"));
        }
        if self.partition_sizes.len() != n {
            return fail(format!(
                "{} partition sizes for {} solvers",
                self.partition_sizes.len(),
                n
            ));
        }
        if !(self.time_base.is_finite() && self.time_base > 0.0) {
            return fail(format!(
                "time base {} must be finite and > 0",
                self.time_base
            ));
        }
        if let Some(i) = self.partition_sizes.iter().position(|&s| s == 0) {
            return fail(format!("|P_{}| = 0", i + 1));
        }
        sizes_violation(&self.partition_sizes).map_or(Ok(()), fail)
    }
}

/// The first violated inequality, if any.
fn sizes_violation(sizes: &[usize]) -> Option<String> {
    let n = sizes.len();
    let np = sizes.iter().sum::<usize>();
    if n == 3 {
        let (p1, p2) = (sizes[0], sizes[1]);
        if 2 * p1 <= np {
            return Some(format!(
                "|P_1| = {p1} must exceed n_p/2 = {}",
                np as f64 / 2.0
            ));
        }
        if 4 * p2 <= np {
            return Some(format!(
                "|P_2| = {p2} must exceed n_p/4 = {}",
                np as f64 / 4.0
            ));
        }
        if p1 < 2 * p2 {
            return Some(format!("|P_1| = {p1} must be at least 2|P_2| = {}", 2 * p2));
        }
        None
    } else {
        let bound = np as f64 / 2f64.powi(n as i32);
        sizes.iter().position(|&s| s as f64 <= bound).map(|i| {
            format!(
                "|P_{}| = {} must exceed n_p/2^{n} = {bound}",
                i + 1,
                sizes[i]
            )
        })
    }
}

/// Times for one problem of partition `i` (0-based) among `n` solvers, in units
/// of the time base: the owner gets 1, one runner-up gets 2, everyone else 3.
pub(crate) fn partition_row(i: usize, n: usize) -> Vec<usize> {
    let runner_up = if i + 2 < n {
        i + 2
    } else {
        (0..n).find(|&s| s != i).unwrap()
    };
    (0..n)
        .map(|s| {
            if s == i {
                1
            } else if s == runner_up {
                2
            } else {
                3
            }
        })
        .collect()
}

pub fn generate(spec: &AdversarialSpec) -> Result<TimingMatrix, AdversarialError> {
    spec.validate()?;
    let n = spec.n_solvers;
    let solvers = (1..=n).map(|s| format!("s{s}")).collect();
    let mut problems = Vec::with_capacity(spec.n_problems());
    let mut rows = Vec::with_capacity(spec.n_problems());
    for (i, &size) in spec.partition_sizes.iter().enumerate() {
        let row: Vec<Cell> = partition_row(i, n)
            .into_iter()
            .map(|units| Cell::Time(units as f64 * spec.time_base))
            .collect();
        for _ in 0..size {
            problems.push(format!("p{}", problems.len() + 1));
            rows.push(row.clone());
        }
    }
    TimingMatrix::new(problems, solvers, rows)
        .map_err(|e| AdversarialError::SpecInvariantViolated(e.to_string()))
}

/// Smallest-`n_p` partition satisfying the size invariants, taking the first
/// valid composition of `n_p` in lexicographic order.
pub fn default_spec(n: usize) -> Result<AdversarialSpec, AdversarialError> {
    if n < 3 {
        return Err(AdversarialError::SpecInvariantViolated(format!(
            "need at least 3 solvers, got {n}"
        )));
    }
    let mut np = n;
    loop {
        if let Some(sizes) = first_composition(np, n, &mut Vec::with_capacity(n)) {
            return Ok(AdversarialSpec::new(sizes, 1.0));
        }
        np += 1;
    }
}

fn first_composition(
    remaining: usize,
    parts: usize,
    prefix: &mut Vec<usize>,
) -> Option<Vec<usize>> {
    if parts == 1 {
        prefix.push(remaining);
        let found = sizes_violation(prefix).is_none();
        let out = found.then(|| prefix.clone());
        prefix.pop();
        return out;
    }
    for first in 1..=remaining - (parts - 1) {
        prefix.push(first);
        let found = first_composition(remaining - first, parts - 1, prefix);
        prefix.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Classic versus nested rankings before and after removing the classic best.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlipReport {
    pub best: String,
    pub classic_full: Vec<String>,
    pub classic_reduced: Vec<String>,
    pub flipped: bool,
    pub nested_ranking: Vec<String>,
    pub nested_reduced: Vec<String>,
    pub nested_stable: bool,
}

pub fn check_flip(m: &TimingMatrix, cfg: &ProfileConfig) -> Result<FlipReport, ProfileError> {
    if m.n_solvers() < 3 {
        return Err(ProfileError::TooFewSolvers {
            needed: 3,
            found: m.n_solvers(),
        });
    }
    let labels = |m: &TimingMatrix, order: &[usize]| -> Vec<String> {
        order.iter().map(|&s| m.solvers()[s].clone()).collect()
    };
    let full = classic_ranking(m, cfg)?;
    let best = full[0];
    let keep: Vec<usize> = (0..m.n_solvers()).filter(|&s| s != best).collect();
    let reduced = m.select_solvers(&keep);

    let classic_full = labels(m, &full);
    let classic_reduced = labels(&reduced, &classic_ranking(&reduced, cfg)?);
    let best_label = m.solvers()[best].clone();
    let without_best: Vec<String> = classic_full
        .iter()
        .filter(|&s| *s != best_label)
        .cloned()
        .collect();

    let nested = nested_profiles(m, cfg)?;
    let reduced_cfg = ProfileConfig {
        waves: match cfg.waves {
            WaveCount::All => WaveCount::All,
            WaveCount::Fixed(k) => WaveCount::Fixed(k.min(reduced.n_solvers() - 1)),
        },
        ..*cfg
    };
    let nested_reduced_result = nested_profiles(&reduced, &reduced_cfg)?;
    let nested_ranking = nested.ranking_labels();
    let nested_reduced = nested_reduced_result.ranking_labels();
    let restricted: Vec<String> = nested_ranking
        .iter()
        .filter(|&s| *s != best_label)
        .cloned()
        .collect();

    Ok(FlipReport {
        best: best_label,
        flipped: classic_reduced != without_best,
        classic_full,
        classic_reduced,
        nested_stable: restricted == nested_reduced,
        nested_ranking,
        nested_reduced,
    })
}
