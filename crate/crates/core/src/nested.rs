//! Nested performance profiles.
//!
//! Wave 1 is the classic profile over every solver. Each later wave removes the
//! best solver of the previous wave from the active set and recomputes ratios
//! against the best time of the remaining active solvers. Solvers removed
//! earlier keep a ratio of exactly 1 on every problem where they had 1 in the
//! previous wave; their other ratios are recomputed like an active solver's.
//! The overall profile of a solver is the mean of its wave profiles.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::ProfileCurve;
use crate::ingest::TimingMatrix;
use crate::profile::{
    best_times, compute_profile, compute_ratios, wins, FailureRatio, ProfileError, RatioMatrix,
};

/// How the best solver of a wave is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Most problems with ratio exactly 1.
    #[default]
    Wins,
    /// Smallest sum of ratios over all problems, failures included at `r_M`.
    MeanRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Lowest original column index.
    #[default]
    FirstIndex,
    /// Uniform choice among the tied solvers from a seeded generator.
    SeededRandom(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WaveCount {
    /// `n_s - 1` waves, which ranks every solver.
    #[default]
    All,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub failure_ratio: FailureRatio,
    pub rule: SelectionRule,
    pub tie_break: TieBreak,
    pub waves: WaveCount,
    /// The `tau` at which rankings compare profile values.
    pub reporting_tau: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            failure_ratio: FailureRatio::Auto,
            rule: SelectionRule::Wins,
            tie_break: TieBreak::FirstIndex,
            waves: WaveCount::All,
            reporting_tau: 1.0,
        }
    }
}

impl ProfileConfig {
    /// Number of waves for a system with `n_solvers` solvers.
    pub fn wave_count(&self, n_solvers: usize) -> Result<usize, ProfileError> {
        if n_solvers < 2 {
            return Err(ProfileError::TooFewSolvers {
                needed: 2,
                found: n_solvers,
            });
        }
        let max = n_solvers - 1;
        match self.waves {
            WaveCount::All => Ok(max),
            WaveCount::Fixed(0) => Err(ProfileError::InvalidConfig(
                "wave count must be at least 1".into(),
            )),
            WaveCount::Fixed(k) if k > max => Err(ProfileError::TooManyWaves { requested: k, max }),
            WaveCount::Fixed(k) => Ok(k),
        }
    }

    fn validate(&self) -> Result<(), ProfileError> {
        if !self.reporting_tau.is_finite() {
            return Err(ProfileError::InvalidConfig(format!(
                "reporting tau {} is not finite",
                self.reporting_tau
            )));
        }
        Ok(())
    }
}

/// Resolves ties between equally scored solvers.
#[derive(Debug, Clone)]
pub struct TieBreaker {
    rng: Option<ChaCha8Rng>,
}

impl TieBreaker {
    pub fn new(policy: TieBreak) -> TieBreaker {
        let rng = match policy {
            TieBreak::FirstIndex => None,
            TieBreak::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        TieBreaker { rng }
    }

    /// `candidates` must be non-empty and sorted by column index.
    pub fn pick(&mut self, candidates: &[usize]) -> usize {
        match &mut self.rng {
            Some(rng) if candidates.len() > 1 => candidates[rng.gen_range(0..candidates.len())],
            _ => candidates[0],
        }
    }
}

/// The best active solver of a wave.
pub fn select_best(
    r: &RatioMatrix,
    rule: SelectionRule,
    ties: &mut TieBreaker,
) -> Result<usize, ProfileError> {
    let active = r.active_solvers();
    if active.is_empty() {
        return Err(ProfileError::EmptyActiveSet);
    }
    let mut tied = Vec::new();
    match rule {
        SelectionRule::Wins => {
            let scores = active
                .iter()
                .map(|&s| wins(r, s))
                .collect::<Result<Vec<_>, _>>()?;
            let best = *scores.iter().max().unwrap();
            tied.extend(
                active
                    .iter()
                    .zip(&scores)
                    .filter(|(_, &w)| w == best)
                    .map(|(&s, _)| s),
            );
        }
        SelectionRule::MeanRatio => {
            let sums = active
                .iter()
                .map(|&s| r.require_row(s).map(|row| row.iter().sum::<f64>()))
                .collect::<Result<Vec<_>, _>>()?;
            let best = sums.iter().copied().fold(f64::INFINITY, f64::min);
            tied.extend(
                active
                    .iter()
                    .zip(&sums)
                    .filter(|(_, &x)| x == best)
                    .map(|(&s, _)| s),
            );
        }
    }
    Ok(ties.pick(&tied))
}

/// Removes `eliminated` from the active set and derives the next wave.
///
/// The failure ratio of `prev` is reused.
pub fn next_wave(
    prev: &RatioMatrix,
    m: &TimingMatrix,
    eliminated: usize,
) -> Result<RatioMatrix, ProfileError> {
    if !prev.is_active(eliminated) {
        return Err(ProfileError::SolverNotActive(prev.label(eliminated)));
    }
    let active: Vec<usize> = prev
        .active_solvers()
        .into_iter()
        .filter(|&s| s != eliminated)
        .collect();
    if active.is_empty() {
        return Err(ProfileError::EmptyActiveSet);
    }
    let rm = prev.rm();
    let best = best_times(m, &active);

    let mut mask = vec![false; prev.n_solvers()];
    for &s in &active {
        mask[s] = true;
    }
    let rows = (0..prev.n_solvers())
        .map(|s| {
            let prev_row = prev.row(s)?;
            let row = (0..prev.n_problems())
                .map(|p| {
                    let fresh = || match (m.time(p, s), best[p]) {
                        (Some(t), Some(d)) => t / d,
                        _ => rm,
                    };
                    if mask[s] {
                        fresh()
                    } else if prev_row[p] == 1.0 {
                        1.0
                    } else if best[p].is_none() {
                        prev_row[p]
                    } else {
                        fresh()
                    }
                })
                .collect();
            Some(row)
        })
        .collect();
    Ok(RatioMatrix::from_parts(
        prev.problems().to_vec(),
        prev.solvers().to_vec(),
        mask,
        rows,
        rm,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedResult {
    pub solvers: Vec<String>,
    pub waves: Vec<RatioMatrix>,
    /// `wave_profiles[i][s]` is solver `s`'s profile in wave `i + 1`.
    pub wave_profiles: Vec<Vec<ProfileCurve>>,
    pub overall: Vec<ProfileCurve>,
    /// Solvers removed before waves 2..=k, in order.
    pub eliminated: Vec<usize>,
    /// Elimination order, then the remaining solvers by overall value at the
    /// reporting tau (descending, lower index first on ties).
    pub ranking: Vec<usize>,
    pub k: usize,
    pub config: ProfileConfig,
    pub rm: f64,
}

impl NestedResult {
    /// True when part of the ranking rests on the reporting-tau ordering rather
    /// than on eliminations alone (`k < n_s - 1`).
    pub fn ranking_uses_tau_order(&self) -> bool {
        self.k + 1 < self.solvers.len()
    }

    pub fn ranking_labels(&self) -> Vec<String> {
        self.ranking
            .iter()
            .map(|&s| self.solvers[s].clone())
            .collect()
    }
}

/// Runs every wave of the nested algorithm.
pub fn nested_profiles(
    m: &TimingMatrix,
    cfg: &ProfileConfig,
) -> Result<NestedResult, ProfileError> {
    let mut ties = TieBreaker::new(cfg.tie_break);
    run_waves(m, cfg, |r| select_best(r, cfg.rule, &mut ties))
}

/// Runs the nested algorithm with a fixed elimination sequence instead of the
/// selection rule. `order` must contain exactly `k - 1` distinct solvers.
///
/// This is what a sensitivity study needs: the same nested system of solver
/// sets evaluated on two timing tables.
pub fn replay_nested(
    m: &TimingMatrix,
    cfg: &ProfileConfig,
    order: &[usize],
) -> Result<NestedResult, ProfileError> {
    let k = cfg.wave_count(m.n_solvers())?;
    if order.len() + 1 != k {
        return Err(ProfileError::InvalidConfig(format!(
            "{} waves need {} eliminations, got {}",
            k,
            k - 1,
            order.len()
        )));
    }
    let mut next = order.iter().copied();
    run_waves(m, cfg, |_| Ok(next.next().expect("order length checked")))
}

fn run_waves(
    m: &TimingMatrix,
    cfg: &ProfileConfig,
    mut choose: impl FnMut(&RatioMatrix) -> Result<usize, ProfileError>,
) -> Result<NestedResult, ProfileError> {
    cfg.validate()?;
    let k = cfg.wave_count(m.n_solvers())?;
    let all: Vec<usize> = (0..m.n_solvers()).collect();

    let mut waves = vec![compute_ratios(m, &all, cfg.failure_ratio)?];
    let mut eliminated = Vec::with_capacity(k.saturating_sub(1));
    while waves.len() < k {
        let prev = waves.last().unwrap();
        let best = choose(prev)?;
        let wave = next_wave(prev, m, best)?;
        eliminated.push(best);
        waves.push(wave);
    }

    let wave_profiles = waves
        .iter()
        .map(|w| {
            (0..m.n_solvers())
                .map(|s| compute_profile(w, s))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let overall: Vec<ProfileCurve> = (0..m.n_solvers())
        .map(|s| {
            let per_wave: Vec<ProfileCurve> = wave_profiles.iter().map(|w| w[s].clone()).collect();
            ProfileCurve::mean(&per_wave)
        })
        .collect();

    let mut rest: Vec<usize> = all
        .iter()
        .copied()
        .filter(|s| !eliminated.contains(s))
        .collect();
    rest.sort_by_key(|&s| std::cmp::Reverse(overall[s].count_at(cfg.reporting_tau)));
    let ranking = eliminated.iter().copied().chain(rest).collect();

    let rm = waves[0].rm();
    Ok(NestedResult {
        solvers: m.solvers().to_vec(),
        waves,
        wave_profiles,
        overall,
        eliminated,
        ranking,
        k,
        config: *cfg,
        rm,
    })
}

/// Classic ordering: wave-1 profile value at the reporting tau, descending,
/// lower index first on ties.
pub fn classic_ranking(m: &TimingMatrix, cfg: &ProfileConfig) -> Result<Vec<usize>, ProfileError> {
    cfg.validate()?;
    let all: Vec<usize> = (0..m.n_solvers()).collect();
    let r = compute_ratios(m, &all, cfg.failure_ratio)?;
    let counts = all
        .iter()
        .map(|&s| compute_profile(&r, s).map(|c| c.count_at(cfg.reporting_tau)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut order = all;
    order.sort_by_key(|&s| std::cmp::Reverse(counts[s]));
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_timings, Cell, Format};

    fn five_problems() -> TimingMatrix {
        parse_timings(
            "problem,A,B,C\n1,2,1.5,1\n2,1,1.2,2\n3,1,4,2\n4,1,5,20\n5,2,5,20\n".as_bytes(),
            Format::Csv,
        )
        .unwrap()
    }

    fn wave1(m: &TimingMatrix) -> RatioMatrix {
        let all: Vec<usize> = (0..m.n_solvers()).collect();
        compute_ratios(m, &all, FailureRatio::Auto).unwrap()
    }

    #[test]
    fn select_best_five_problems() {
        let r = wave1(&five_problems());
        let mut ties = TieBreaker::new(TieBreak::FirstIndex);
        assert_eq!(select_best(&r, SelectionRule::Wins, &mut ties).unwrap(), 0);
        assert_eq!(
            select_best(&r, SelectionRule::MeanRatio, &mut ties).unwrap(),
            0
        );
        let sums: Vec<f64> = (0..3)
            .map(|s| r.row(s).unwrap().iter().sum::<f64>() / 5.0)
            .collect();
        assert!((sums[0] - 1.2).abs() < 1e-12);
        assert!((sums[1] - 2.84).abs() < 1e-12);
        assert!((sums[2] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn identical_columns_first_index() {
        let m = TimingMatrix::new(
            vec!["p".into(), "q".into()],
            vec!["x".into(), "y".into(), "z".into()],
            vec![
                vec![Cell::Time(3.0), Cell::Time(2.0), Cell::Time(2.0)],
                vec![Cell::Time(3.0), Cell::Time(1.0), Cell::Time(1.0)],
            ],
        )
        .unwrap();
        let r = wave1(&m);
        for rule in [SelectionRule::Wins, SelectionRule::MeanRatio] {
            let mut ties = TieBreaker::new(TieBreak::FirstIndex);
            assert_eq!(select_best(&r, rule, &mut ties).unwrap(), 1);
        }
        // seeded choice stays within the tied pair and is reproducible
        let pick = |seed| {
            let mut ties = TieBreaker::new(TieBreak::SeededRandom(seed));
            select_best(&r, SelectionRule::Wins, &mut ties).unwrap()
        };
        for seed in 0..20 {
            assert!([1, 2].contains(&pick(seed)));
            assert_eq!(pick(seed), pick(seed));
        }
    }

    #[test]
    fn five_problems_wave2() {
        let m = five_problems();
        let r2 = next_wave(&wave1(&m), &m, 0).unwrap();
        assert_eq!(r2.active_solvers(), [1, 2]);
        assert_eq!(r2.row(0).unwrap(), [2.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(r2.row(1).unwrap(), [1.5, 1.0, 2.0, 1.0, 1.0]);
        assert_eq!(r2.row(2).unwrap(), [1.0, 2.0 / 1.2, 1.0, 4.0, 4.0]);
        assert_eq!(r2.rm(), 40.0);
        assert!(matches!(
            next_wave(&r2, &m, 0),
            Err(ProfileError::SolverNotActive(_))
        ));
    }

    #[test]
    fn eliminating_a_non_winner_recomputes_its_row() {
        let m = five_problems();
        let r2 = next_wave(&wave1(&m), &m, 1).unwrap();
        // active {A, C}: minima 1, 1, 1, 1, 2
        assert_eq!(r2.row(1).unwrap(), [1.5, 1.2, 4.0, 5.0, 2.5]);
    }

    #[test]
    fn two_solvers_eliminate_one() {
        let m = TimingMatrix::new(
            vec!["p".into(), "q".into()],
            vec!["x".into(), "y".into()],
            vec![
                vec![Cell::Time(1.0), Cell::Time(7.0)],
                vec![Cell::Time(1.0), Cell::Failure],
            ],
        )
        .unwrap();
        let w1 = wave1(&m);
        let r2 = next_wave(&w1, &m, 0).unwrap();
        assert_eq!(r2.row(1).unwrap(), [1.0, w1.rm()]);
        // x won both problems in wave 1; on q no active solver succeeds
        assert_eq!(r2.row(0).unwrap(), [1.0, 1.0]);
        assert!(matches!(
            next_wave(&r2, &m, 1),
            Err(ProfileError::EmptyActiveSet)
        ));
    }

    #[test]
    fn all_fail_keeps_eliminated_ratios() {
        let m = TimingMatrix::new(
            vec!["p".into(), "q".into()],
            vec!["x".into(), "y".into(), "z".into()],
            vec![
                vec![Cell::Time(1.0), Cell::Time(2.0), Cell::Time(4.0)],
                vec![Cell::Time(2.0), Cell::Time(1.0), Cell::Failure],
            ],
        )
        .unwrap();
        let w1 = wave1(&m);
        let w2 = next_wave(&w1, &m, 1).unwrap();
        let w3 = next_wave(&w2, &m, 0).unwrap();
        // only z is active and fails on q: x carries its wave-2 ratio
        assert_eq!(w3.ratio(1, 2), Some(w1.rm()));
        assert_eq!(w3.ratio(1, 0), w2.ratio(1, 0));
        assert_eq!(w3.ratio(1, 1), Some(1.0));
    }

    #[test]
    fn five_problems_nested_k2() {
        let cfg = ProfileConfig {
            waves: WaveCount::Fixed(2),
            ..Default::default()
        };
        let res = nested_profiles(&five_problems(), &cfg).unwrap();
        let at = |tau| -> Vec<f64> { res.overall.iter().map(|c| c.evaluate(tau)).collect() };
        assert_eq!(at(1.0), [0.8, 0.3, 0.3]);
        assert_eq!(at(2.0), [1.0, 0.7, 0.6]);
        assert_eq!(res.ranking, [0, 1, 2]);
        assert_eq!(res.eliminated, [0]);
        assert!(!res.ranking_uses_tau_order());
    }

    #[test]
    fn single_wave_is_classic() {
        let m = five_problems();
        let cfg = ProfileConfig {
            waves: WaveCount::Fixed(1),
            ..Default::default()
        };
        let res = nested_profiles(&m, &cfg).unwrap();
        let r = wave1(&m);
        for s in 0..3 {
            let classic = compute_profile(&r, s).unwrap();
            assert_eq!(
                res.overall[s].breakpoints().collect::<Vec<_>>(),
                classic.breakpoints().collect::<Vec<_>>()
            );
        }
        assert!(res.ranking_uses_tau_order());
    }

    #[test]
    fn wave_count_errors() {
        let m = five_problems();
        let cfg = ProfileConfig {
            waves: WaveCount::Fixed(3),
            ..Default::default()
        };
        assert_eq!(
            nested_profiles(&m, &cfg).unwrap_err(),
            ProfileError::TooManyWaves {
                requested: 3,
                max: 2
            }
        );
        let cfg = ProfileConfig {
            waves: WaveCount::Fixed(0),
            ..Default::default()
        };
        assert!(matches!(
            nested_profiles(&m, &cfg),
            Err(ProfileError::InvalidConfig(_))
        ));
        let one = m.select_solvers(&[0]);
        assert!(matches!(
            nested_profiles(&one, &ProfileConfig::default()),
            Err(ProfileError::TooFewSolvers { .. })
        ));
    }

    #[test]
    fn classic_rankings() {
        let m = five_problems();
        let cfg = ProfileConfig::default();
        assert_eq!(classic_ranking(&m, &cfg).unwrap(), [0, 2, 1]);
        let bc = m.select_solvers(&[1, 2]);
        assert_eq!(classic_ranking(&bc, &cfg).unwrap(), [0, 1]);
        assert_eq!(classic_ranking(&m.select_solvers(&[2]), &cfg).unwrap(), [0]);
    }

    #[test]
    fn replay_matches_free_run() {
        let m = five_problems();
        let cfg = ProfileConfig::default();
        let free = nested_profiles(&m, &cfg).unwrap();
        let replayed = replay_nested(&m, &cfg, &free.eliminated).unwrap();
        assert_eq!(free, replayed);
        assert!(replay_nested(&m, &cfg, &[]).is_err());
    }
}
