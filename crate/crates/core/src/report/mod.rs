//! Exporting curves as CSV/JSON and rendering them as SVG step plots.
//!
//! Numbers are written in the shortest decimal form that parses back to the
//! same `f64`, so every exported value round-trips bit for bit.

mod svg;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{merged_breakpoints, ProfileCurve};
use crate::ingest::Format;
use crate::nested::{NestedResult, ProfileConfig};

pub use svg::{render_svg, PlotSpec, TauMax};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no curves to export or plot")]
    EmptyCurves,
    #[error("curve {0:?} has a breakpoint at tau <= 0, which a log scale cannot show")]
    NonPositiveTauOnLogScale(String),
    #[error("invalid plot spec: {0}")]
    InvalidPlotSpec(String),
    #[error("{0} names for {1} curves")]
    LabelMismatch(usize, usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What to export: a plain set of named curves or a full nested run.
#[derive(Debug, Clone, Copy)]
pub enum Curves<'a> {
    Classic {
        solvers: &'a [String],
        curves: &'a [ProfileCurve],
    },
    Nested(&'a NestedResult),
}

impl<'a> Curves<'a> {
    /// The curves a CSV export tabulates: classic curves as given, or the
    /// overall curves of a nested run.
    fn table(&self) -> (&'a [String], &'a [ProfileCurve]) {
        match *self {
            Curves::Classic { solvers, curves } => (solvers, curves),
            Curves::Nested(r) => (&r.solvers, &r.overall),
        }
    }
}

pub fn export_curves<W: Write>(
    curves: Curves<'_>,
    format: Format,
    out: W,
) -> Result<(), ReportError> {
    let (names, list) = curves.table();
    if list.is_empty() {
        return Err(ReportError::EmptyCurves);
    }
    if names.len() != list.len() {
        return Err(ReportError::LabelMismatch(names.len(), list.len()));
    }
    match format {
        Format::Csv => write_curve_table(names, list, &merged_breakpoints(list), out),
        Format::Json => {
            let mut out = out;
            match curves {
                Curves::Classic { solvers, curves } => {
                    let doc = ClassicExport {
                        solvers: solvers.to_vec(),
                        curves: curves.to_vec(),
                    };
                    serde_json::to_writer_pretty(&mut out, &doc)?;
                }
                Curves::Nested(r) => {
                    serde_json::to_writer_pretty(&mut out, &NestedExport::from_result(r))?;
                }
            }
            out.write_all(b"\n")?;
            Ok(())
        }
    }
}

/// `tau,<solver1>,...` with one row per entry of `taus`, values evaluated with
/// right-continuous step semantics.
pub fn write_curve_table<W: Write>(
    names: &[String],
    curves: &[ProfileCurve],
    taus: &[f64],
    out: W,
) -> Result<(), ReportError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = vec!["tau".to_string()];
    header.extend(names.iter().cloned());
    writer.write_record(&header)?;
    for &tau in taus {
        let mut record = vec![tau.to_string()];
        record.extend(curves.iter().map(|c| c.evaluate(tau).to_string()));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicExport {
    pub solvers: Vec<String>,
    pub curves: Vec<ProfileCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveExport {
    pub wave: usize,
    pub active: Vec<String>,
    /// Per solver, ratios by problem.
    pub ratios: Vec<Vec<f64>>,
    pub profiles: Vec<ProfileCurve>,
}

/// JSON document for a nested run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedExport {
    pub solvers: Vec<String>,
    pub problems: Vec<String>,
    pub config: ProfileConfig,
    pub rm: f64,
    pub k: usize,
    pub eliminated: Vec<String>,
    pub ranking: Vec<String>,
    /// How solvers after the eliminated ones were ordered.
    pub ranking_note: String,
    /// More than the final pair was ordered by profile value (`k < n_s - 1`).
    pub ranking_partial: bool,
    pub waves: Vec<WaveExport>,
    pub overall: Vec<ProfileCurve>,
}

impl NestedExport {
    pub fn from_result(r: &NestedResult) -> NestedExport {
        let label = |s: &usize| r.solvers[*s].clone();
        let waves = r
            .waves
            .iter()
            .zip(&r.wave_profiles)
            .enumerate()
            .map(|(i, (w, profiles))| WaveExport {
                wave: i + 1,
                active: w.active_solvers().iter().map(label).collect(),
                ratios: (0..w.n_solvers())
                    .map(|s| w.row(s).map(<[f64]>::to_vec).unwrap_or_default())
                    .collect(),
                profiles: profiles.clone(),
            })
            .collect();
        let ranking_note = format!(
            "elimination order, then remaining solvers by overall value at tau = {} (descending)",
            r.config.reporting_tau
        );
        NestedExport {
            solvers: r.solvers.clone(),
            problems: r.waves[0].problems().to_vec(),
            config: r.config,
            rm: r.rm,
            k: r.k,
            eliminated: r.eliminated.iter().map(label).collect(),
            ranking: r.ranking.iter().map(label).collect(),
            ranking_note,
            ranking_partial: r.ranking_uses_tau_order(),
            waves,
            overall: r.overall.clone(),
        }
    }
}

pub fn read_nested_json<R: Read>(source: R) -> Result<NestedExport, ReportError> {
    Ok(serde_json::from_reader(source)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_timings;
    use crate::nested::{nested_profiles, WaveCount};
    use crate::profile::{compute_profile, compute_ratios, FailureRatio};

    fn five_problems() -> crate::ingest::TimingMatrix {
        parse_timings(
            "problem,A,B,C\n1,2,1.5,1\n2,1,1.2,2\n3,1,4,2\n4,1,5,20\n5,2,5,20\n".as_bytes(),
            Format::Csv,
        )
        .unwrap()
    }

    #[test]
    fn classic_csv_row_at_one() {
        let m = five_problems();
        let r = compute_ratios(&m, &[0, 1, 2], FailureRatio::Auto).unwrap();
        let curves: Vec<_> = (0..3).map(|s| compute_profile(&r, s).unwrap()).collect();
        let mut out = Vec::new();
        export_curves(
            Curves::Classic {
                solvers: m.solvers(),
                curves: &curves,
            },
            Format::Csv,
            &mut out,
        )
        .unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "tau,A,B,C");
        assert_eq!(lines[1], "1,0.8,0,0.2");
        assert_eq!(*lines.last().unwrap(), "20,1,1,1");
    }

    #[test]
    fn single_curve_two_lines() {
        let c = ProfileCurve::from_ratios(&[1.0], None);
        let mut out = Vec::new();
        export_curves(
            Curves::Classic {
                solvers: &["x".to_string()],
                curves: &[c],
            },
            Format::Csv,
            &mut out,
        )
        .unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "tau,x\n1,1\n");
    }

    #[test]
    fn empty_export_is_an_error() {
        let err = export_curves(
            Curves::Classic {
                solvers: &[],
                curves: &[],
            },
            Format::Csv,
            Vec::new(),
        )
        .unwrap_err();
        assert!(matches!(err, ReportError::EmptyCurves));
    }

    #[test]
    fn nested_json_round_trip() {
        let cfg = ProfileConfig {
            waves: WaveCount::Fixed(2),
            ..Default::default()
        };
        let res = nested_profiles(&five_problems(), &cfg).unwrap();
        let mut out = Vec::new();
        export_curves(Curves::Nested(&res), Format::Json, &mut out).unwrap();
        let back = read_nested_json(out.as_slice()).unwrap();
        assert_eq!(back, NestedExport::from_result(&res));
        assert_eq!(back.overall, res.overall);
        assert_eq!(back.ranking, ["A", "B", "C"]);
        assert_eq!(back.rm, 40.0);
        assert_eq!(back.waves[1].active, ["B", "C"]);
    }
}
