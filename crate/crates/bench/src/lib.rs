//! Workload generators for the criterion benches.

use profbench::{Cell, TimingMatrix};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Random timing table with log-uniform times in `[1, 1000)` and roughly
/// `fail_p` failed runs.
pub fn random_matrix(seed: u64, n_problems: usize, n_solvers: usize, fail_p: f64) -> TimingMatrix {
    let mut rng = StdRng::seed_from_u64(seed);
    let rows = (0..n_problems)
        .map(|_| {
            (0..n_solvers)
                .map(|_| {
                    if rng.gen_bool(fail_p) {
                        Cell::Failure
                    } else {
                        Cell::Time(10f64.powf(rng.gen_range(0.0..3.0)))
                    }
                })
                .collect()
        })
        .collect();
    TimingMatrix::new(
        (0..n_problems).map(|p| format!("p{p}")).collect(),
        (0..n_solvers).map(|s| format!("s{s}")).collect(),
        rows,
    )
    .expect("generated labels are unique")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let a = random_matrix(3, 50, 6, 0.1);
        let b = random_matrix(3, 50, 6, 0.1);
        assert_eq!(a.n_problems(), 50);
        assert_eq!(a.n_solvers(), 6);
        for p in 0..50 {
            for s in 0..6 {
                assert_eq!(a.time(p, s), b.time(p, s));
            }
        }
    }
}
