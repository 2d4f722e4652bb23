//! Experiment report rows, their CSV serialization, and mode matching.

use crate::csvio::{fmt_f64, parse_f64};
use crate::density::ModeList;
use crate::error::{Error, Result};
use crate::point::{dist, Point};
use std::path::Path;

pub const REPORT_HEADER: &str = "algorithm,param_name,param_value,n_starts,n_resolved,agreement_fraction,mode_hausdorff,violations_monotone,violations_steplaw,violations_angle,wall_time_s";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub algorithm: String,
    pub param_name: String,
    pub param_value: f64,
    pub n_starts: usize,
    pub n_resolved: usize,
    pub agreement_fraction: f64,
    pub mode_hausdorff: f64,
    pub violations_monotone: usize,
    pub violations_steplaw: usize,
    pub violations_angle: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// UTF-8, LF line endings, 17-significant-digit floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.algorithm,
                r.param_name,
                fmt_f64(r.param_value),
                r.n_starts,
                r.n_resolved,
                fmt_f64(r.agreement_fraction),
                fmt_f64(r.mode_hausdorff),
                r.violations_monotone,
                r.violations_steplaw,
                r.violations_angle,
                fmt_f64(r.wall_time_s),
            ));
        }
        out
    }

    pub fn emit(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == REPORT_HEADER => {}
            _ => {
                return Err(Error::Parse { line: 1, reason: "bad or missing report header".into() })
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 11 {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: format!("expected 11 fields, got {}", fields.len()),
                });
            }
            let int = |s: &str| -> Result<usize> {
                s.parse().map_err(|e| Error::Parse {
                    line: i + 1,
                    reason: format!("bad integer {s:?}: {e}"),
                })
            };
            rows.push(ReportRow {
                algorithm: fields[0].to_string(),
                param_name: fields[1].to_string(),
                param_value: parse_f64(fields[2], i + 1)?,
                n_starts: int(fields[3])?,
                n_resolved: int(fields[4])?,
                agreement_fraction: parse_f64(fields[5], i + 1)?,
                mode_hausdorff: parse_f64(fields[6], i + 1)?,
                violations_monotone: int(fields[7])?,
                violations_steplaw: int(fields[8])?,
                violations_angle: int(fields[9])?,
                wall_time_s: parse_f64(fields[10], i + 1)?,
            });
        }
        Ok(ExperimentReport { rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone)]
pub struct ModeMatch {
    /// `(estimated index, truth index)` pairs, one per matched mode.
    pub pairs: Vec<(usize, usize)>,
    pub max_pair_distance: f64,
    pub hausdorff: f64,
    pub cardinality_mismatch: bool,
    /// Whether the assignment is the exhaustive optimum (small lists) or a
    /// greedy fallback.
    pub optimal: bool,
}

/// One-to-one matching of estimated modes to true modes minimizing the
/// maximum pair distance (exhaustive up to 8 modes, greedy beyond), plus the
/// symmetric Hausdorff distance between the two point sets.
pub fn match_modes(estimated: &[Point], truth: &ModeList) -> Result<ModeMatch> {
    if estimated.is_empty() || truth.is_empty() {
        return Err(Error::param("modes", "both mode lists must be nonempty"));
    }
    let te = &truth.modes;
    let d = |i: usize, j: usize| dist(&estimated[i], &te[j]);

    let hausdorff = set_hausdorff(estimated, te);
    let (ne, nt) = (estimated.len(), te.len());
    let small = ne.min(nt);

    let pairs;
    let optimal;
    if small <= 8 {
        // Exhaustive search over injections of the smaller side.
        let mut best: Option<(Vec<(usize, usize)>, f64)> = None;
        let mut used = vec![false; ne.max(nt)];
        let mut current = Vec::with_capacity(small);
        assign(
            0,
            small,
            ne <= nt,
            ne.max(nt),
            &mut used,
            &mut current,
            &mut best,
            &|a, b| if ne <= nt { d(a, b) } else { d(b, a) },
        );
        let (mut p, _) = best.expect("nonempty lists always admit a matching");
        if ne > nt {
            for pair in &mut p {
                *pair = (pair.1, pair.0);
            }
        }
        pairs = p;
        optimal = true;
    } else {
        // Greedy: repeatedly take the globally closest unmatched pair.
        let mut free_e: Vec<usize> = (0..ne).collect();
        let mut free_t: Vec<usize> = (0..nt).collect();
        let mut p = Vec::with_capacity(small);
        while !free_e.is_empty() && !free_t.is_empty() {
            let mut best = (free_e[0], free_t[0], f64::INFINITY);
            for &i in &free_e {
                for &j in &free_t {
                    let dij = d(i, j);
                    if dij < best.2 {
                        best = (i, j, dij);
                    }
                }
            }
            p.push((best.0, best.1));
            free_e.retain(|&i| i != best.0);
            free_t.retain(|&j| j != best.1);
        }
        pairs = p;
        optimal = false;
    }

    let max_pair_distance = pairs.iter().map(|&(i, j)| d(i, j)).fold(0.0, f64::max);
    Ok(ModeMatch {
        pairs,
        max_pair_distance,
        hausdorff,
        cardinality_mismatch: ne != nt,
        optimal,
    })
}

#[allow(clippy::too_many_arguments)]
fn assign(
    k: usize,
    small: usize,
    _e_side: bool,
    large: usize,
    used: &mut Vec<bool>,
    current: &mut Vec<(usize, usize)>,
    best: &mut Option<(Vec<(usize, usize)>, f64)>,
    cost: &dyn Fn(usize, usize) -> f64,
) {
    if k == small {
        let m = current.iter().map(|&(a, b)| cost(a, b)).fold(0.0, f64::max);
        if best.as_ref().map_or(true, |(_, bm)| m < *bm) {
            *best = Some((current.clone(), m));
        }
        return;
    }
    for t in 0..large {
        if used[t] {
            continue;
        }
        // Prune branches that already exceed the incumbent.
        if let Some((_, bm)) = best {
            if cost(k, t) >= *bm {
                continue;
            }
        }
        used[t] = true;
        current.push((k, t));
        assign(k + 1, small, _e_side, large, used, current, best, cost);
        current.pop();
        used[t] = false;
    }
}

/// Symmetric Hausdorff distance between finite point sets.
pub fn set_hausdorff(a: &[Point], b: &[Point]) -> f64 {
    let directed = |xs: &[Point], ys: &[Point]| {
        xs.iter()
            .map(|x| {
                ys.iter()
                    .map(|y| dist(x, y))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode_list(points: Vec<Point>) -> ModeList {
        let n = points.len();
        ModeList {
            modes: points,
            gradient_norms: vec![0.0; n],
            min_separation: 1.0,
        }
    }

    #[test]
    fn identical_sets_match_perfectly() {
        let truth = mode_list(vec![vec![-2.0], vec![2.0]]);
        let m = match_modes(&[vec![-2.0], vec![2.0]], &truth).unwrap();
        assert_eq!(m.hausdorff, 0.0);
        assert_eq!(m.max_pair_distance, 0.0);
        assert!(!m.cardinality_mismatch);
        assert!(m.optimal);
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn hausdorff_is_the_worst_pair_gap() {
        let truth = mode_list(vec![vec![-2.0], vec![2.0]]);
        let m = match_modes(&[vec![-1.9], vec![2.05]], &truth).unwrap();
        assert!((m.hausdorff - 0.1).abs() < 1e-12, "{}", m.hausdorff);
    }

    #[test]
    fn cardinality_mismatch_still_yields_hausdorff() {
        let truth = mode_list(vec![vec![-2.0], vec![2.0], vec![5.0]]);
        let m = match_modes(&[vec![-2.0], vec![2.0]], &truth).unwrap();
        assert!(m.cardinality_mismatch);
        assert!((m.hausdorff - 3.0).abs() < 1e-12);
        assert_eq!(m.pairs.len(), 2);
    }

    #[test]
    fn exhaustive_matching_beats_row_greedy_on_a_crossing() {
        // Greedy row-by-row would pair e0 with its nearest t0 and push e1 far
        // away; the optimum crosses.
        let truth = mode_list(vec![vec![0.0], vec![1.0]]);
        let m = match_modes(&[vec![0.4], vec![-0.1]], &truth).unwrap();
        assert!(m.optimal);
        assert_eq!(m.pairs.iter().map(|p| p.1).collect::<Vec<_>>().len(), 2);
        // Optimal max pair distance: pair 0.4->1.0 (0.6) and -0.1->0.0 (0.1).
        assert!((m.max_pair_distance - 0.6).abs() < 1e-12);
    }

    #[test]
    fn report_roundtrip_is_field_exact() {
        let rep = ExperimentReport {
            rows: vec![ReportRow {
                algorithm: "max_shift".into(),
                param_name: "epsilon".into(),
                param_value: 0.05,
                n_starts: 2000,
                n_resolved: 1987,
                agreement_fraction: 0.993456789,
                mode_hausdorff: 1.25e-3,
                violations_monotone: 0,
                violations_steplaw: 0,
                violations_angle: 0,
                wall_time_s: 0.0,
            }],
        };
        let text = rep.to_csv();
        let back = ExperimentReport::parse(&text).unwrap();
        assert_eq!(rep, back);
        assert!(text.ends_with('\n'));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn empty_report_is_header_only() {
        let rep = ExperimentReport::default();
        let text = rep.to_csv();
        assert_eq!(text, format!("{REPORT_HEADER}\n"));
        assert_eq!(ExperimentReport::parse(&text).unwrap(), rep);
    }
}
