#![allow(dead_code, clippy::needless_range_loop)]

use profbench::{Cell, TimingMatrix};
use rand::Rng;

pub const FIVE_PROBLEMS_CSV: &str =
    "problem,A,B,C\n1,2,1.5,1\n2,1,1.2,2\n3,1,4,2\n4,1,5,20\n5,2,5,20\n";

pub fn five_problems() -> TimingMatrix {
    profbench::parse_timings(FIVE_PROBLEMS_CSV.as_bytes(), profbench::Format::Csv).unwrap()
}

/// Times are drawn from a small grid so ties (and shared wins) show up often.
pub fn random_time<R: Rng>(rng: &mut R) -> f64 {
    const GRID: [f64; 8] = [1.0, 1.5, 2.0, 3.0, 4.0, 7.5, 10.0, 100.0];
    if rng.gen_bool(0.5) {
        GRID[rng.gen_range(0..GRID.len())]
    } else {
        rng.gen_range(1.0..100.0)
    }
}

pub fn random_row<R: Rng>(rng: &mut R, ns: usize, fail_p: f64) -> Vec<Cell> {
    (0..ns)
        .map(|_| {
            if fail_p > 0.0 && rng.gen_bool(fail_p) {
                Cell::Failure
            } else {
                Cell::Time(random_time(rng))
            }
        })
        .collect()
}

pub fn random_matrix<R: Rng>(rng: &mut R, np: usize, ns: usize, fail_p: f64) -> TimingMatrix {
    let rows = (0..np).map(|_| random_row(rng, ns, fail_p)).collect();
    TimingMatrix::new(
        (0..np).map(|p| format!("p{p}")).collect(),
        (0..ns).map(|s| format!("s{s}")).collect(),
        rows,
    )
    .unwrap()
}

pub fn times(m: &TimingMatrix) -> Vec<Vec<Option<f64>>> {
    (0..m.n_problems())
        .map(|p| (0..m.n_solvers()).map(|s| m.time(p, s)).collect())
        .collect()
}

/// Straightforward re-elimination: delete the winner's column, recompute
/// ratios from the raw times over the surviving columns, and splice in the
/// kept 1s of solvers deleted earlier.
pub struct NaiveNested {
    pub rm: f64,
    /// `ratios[wave][solver][problem]`
    pub ratios: Vec<Vec<Vec<f64>>>,
    pub eliminated: Vec<usize>,
}

pub fn naive_nested(t: &[Vec<Option<f64>>], k: usize) -> NaiveNested {
    let np = t.len();
    let ns = t[0].len();
    let mut columns: Vec<usize> = (0..ns).collect();

    let min_over = |p: usize, cols: &[usize]| -> Option<f64> {
        let mut best: Option<f64> = None;
        for &c in cols {
            if let Some(x) = t[p][c] {
                best = Some(match best {
                    Some(b) if b <= x => b,
                    _ => x,
                });
            }
        }
        best
    };

    let mut max_ratio: Option<f64> = None;
    for p in 0..np {
        if let Some(d) = min_over(p, &columns) {
            for s in 0..ns {
                if let Some(x) = t[p][s] {
                    let r = x / d;
                    if max_ratio.is_none_or(|m| r > m) {
                        max_ratio = Some(r);
                    }
                }
            }
        }
    }
    let rm = max_ratio.map_or(2.0, |m| 2.0 * m);

    let mut first = vec![vec![0.0; np]; ns];
    for p in 0..np {
        let d = min_over(p, &columns);
        for s in 0..ns {
            first[s][p] = match (t[p][s], d) {
                (Some(x), Some(d)) => x / d,
                _ => rm,
            };
        }
    }
    let mut ratios = vec![first];
    let mut eliminated = Vec::new();

    for _ in 1..k {
        let prev = ratios.last().unwrap().clone();
        // most wins among surviving columns, earliest column on ties
        let mut winner = columns[0];
        let mut most = 0;
        for (i, &c) in columns.iter().enumerate() {
            let w = prev[c].iter().filter(|&&r| r == 1.0).count();
            if i == 0 || w > most {
                most = w;
                winner = c;
            }
        }
        columns.retain(|&c| c != winner);
        eliminated.push(winner);

        let mut next = prev.clone();
        for p in 0..np {
            let d = min_over(p, &columns);
            for s in 0..ns {
                let recomputed = match (t[p][s], d) {
                    (Some(x), Some(d)) => x / d,
                    _ => rm,
                };
                next[s][p] = if columns.contains(&s) {
                    recomputed
                } else if prev[s][p] == 1.0 {
                    1.0
                } else if d.is_none() {
                    prev[s][p]
                } else {
                    recomputed
                };
            }
        }
        ratios.push(next);
    }
    NaiveNested {
        rm,
        ratios,
        eliminated,
    }
}

/// `|{p : r_p <= tau}|`
pub fn naive_count(ratios: &[f64], tau: f64) -> usize {
    ratios.iter().filter(|&&r| r <= tau).count()
}
