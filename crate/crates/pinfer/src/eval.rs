//! Score evaluation: decoy q-values, entrapment-FDR curves, pAUC, and
//! TSV report emission.
//!
//! Two FDR views coexist. Decoy q-values need no ground truth: at each
//! score threshold the false-discovery rate is estimated as
//! decoys/targets and monotonized into a q-value. Entrapment curves
//! need planted truth: non-decoy groups are flagged true or entrapment,
//! and the curve tracks true positives as a function of the entrapment
//! fraction among accepted groups.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("score table has no target rows")]
    NoTargets,
    #[error("length mismatch: {scores} scores vs {flags} decoy flags")]
    LengthMismatch { scores: usize, flags: usize },
    #[error("non-finite score at {item}")]
    NonFiniteScore { item: String },
    #[error("duplicate group id {group}")]
    DuplicateGroup { group: String },
    #[error("group {group} lacks a ground-truth flag")]
    MissingTruth { group: String },
    #[error("invalid FDR band [{lo}, {hi}]: need 0 <= lo < hi <= 1")]
    BadBand { lo: f64, hi: f64 },
    #[error("curve has no ground-truth positives")]
    NoTruePositives,
    #[error("line {line}: {reason}")]
    BadRow { line: usize, reason: String },
    #[error("I/O error")]
    Io(#[from] std::io::Error),
}

/// Planted-truth status of a non-decoy protein group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthFlag {
    True,
    Entrapment,
    Unknown,
}

impl TruthFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            TruthFlag::True => "true",
            TruthFlag::Entrapment => "entrapment",
            TruthFlag::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub group_id: String,
    pub members: Vec<String>,
    pub score: f64,
    pub is_decoy: bool,
    pub truth: TruthFlag,
    pub q_value: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn validate(&self) -> Result<(), EvalError> {
        let mut seen = BTreeSet::new();
        for row in &self.rows {
            if !row.score.is_finite() {
                return Err(EvalError::NonFiniteScore {
                    item: format!("group {}", row.group_id),
                });
            }
            if !seen.insert(row.group_id.as_str()) {
                return Err(EvalError::DuplicateGroup {
                    group: row.group_id.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Point sequence (entrapment_fdr, true_positive_count), sorted by fdr
/// with non-decreasing counts, restricted to [fdr_lo, fdr_hi].
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, usize)>,
    pub fdr_lo: f64,
    pub fdr_hi: f64,
    pub n_true: usize,
}

/// Decoy-based q-values over parallel score/flag slices.
///
/// At each distinct threshold, FDR is estimated as the plain
/// decoy/target ratio (no +1 correction; switching to the conservative
/// (decoys + 1)/targets variant would be a one-line change here).
/// Q-values monotonize the estimate from the permissive end upward;
/// ties share one threshold, and decoys are assigned the q-value of
/// their threshold like any other row.
pub fn qvalues_from_scores(scores: &[f64], is_decoy: &[bool]) -> Result<Vec<f64>, EvalError> {
    if scores.len() != is_decoy.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            flags: is_decoy.len(),
        });
    }
    for (i, s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(EvalError::NonFiniteScore {
                item: format!("index {i}"),
            });
        }
    }
    if !is_decoy.iter().any(|d| !d) {
        return Err(EvalError::NoTargets);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));

    // One entry per distinct threshold, descending.
    let mut fdr_at = Vec::new();
    let mut thr_of = vec![0usize; scores.len()];
    let (mut d, mut t) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if is_decoy[order[j]] {
                d += 1;
            } else {
                t += 1;
            }
            j += 1;
        }
        let fdr = d as f64 / t.max(1) as f64;
        for &idx in &order[i..j] {
            thr_of[idx] = fdr_at.len();
        }
        fdr_at.push(fdr);
        i = j;
    }
    let mut q_at = fdr_at;
    for k in (0..q_at.len().saturating_sub(1)).rev() {
        q_at[k] = q_at[k].min(q_at[k + 1]);
    }
    Ok(thr_of.into_iter().map(|k| q_at[k]).collect())
}

/// Fill `q_value` on every row from the decoy-based estimate.
pub fn decoy_qvalues(table: &mut ScoreTable) -> Result<(), EvalError> {
    table.validate()?;
    let scores: Vec<f64> = table.rows.iter().map(|r| r.score).collect();
    let decoys: Vec<bool> = table.rows.iter().map(|r| r.is_decoy).collect();
    let q = qvalues_from_scores(&scores, &decoys)?;
    for (row, q) in table.rows.iter_mut().zip(q) {
        row.q_value = Some(q);
    }
    Ok(())
}

/// True-positive count as a function of entrapment FDR, over non-decoy
/// rows only. Every non-decoy row must carry a known truth flag —
/// filter unknowns out first when scoring real data.
///
/// The sweep admits tied scores together; because accepting more true
/// groups lowers the entrapment fraction, raw sweep points are not
/// monotone in fdr, so the curve keeps the envelope: for each fdr, the
/// maximal count achieved at any threshold with entrapment fraction at
/// most that fdr. A leading synthetic point anchors the envelope value
/// at fdr_lo.
pub fn entrapment_curve(
    table: &ScoreTable,
    fdr_lo: f64,
    fdr_hi: f64,
) -> Result<RocCurve, EvalError> {
    if !(0.0 <= fdr_lo && fdr_lo < fdr_hi && fdr_hi <= 1.0) {
        return Err(EvalError::BadBand {
            lo: fdr_lo,
            hi: fdr_hi,
        });
    }
    table.validate()?;
    let mut rows: Vec<&ScoreRow> = table.rows.iter().filter(|r| !r.is_decoy).collect();
    for row in &rows {
        if row.truth == TruthFlag::Unknown {
            return Err(EvalError::MissingTruth {
                group: row.group_id.clone(),
            });
        }
    }
    let n_true = rows.iter().filter(|r| r.truth == TruthFlag::True).count();
    rows.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());

    // Raw sweep, one point per distinct threshold.
    let mut raw = Vec::new();
    let (mut tp, mut ent) = (0usize, 0usize);
    let mut i = 0;
    while i < rows.len() {
        let mut j = i;
        while j < rows.len() && rows[j].score == rows[i].score {
            match rows[j].truth {
                TruthFlag::True => tp += 1,
                TruthFlag::Entrapment => ent += 1,
                TruthFlag::Unknown => unreachable!(),
            }
            j += 1;
        }
        raw.push((ent as f64 / (tp + ent) as f64, tp));
        i = j;
    }
    if raw.is_empty() {
        return Ok(RocCurve {
            points: Vec::new(),
            fdr_lo,
            fdr_hi,
            n_true,
        });
    }

    // Envelope: max tp at entrapment fraction <= f, for every f.
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut env: Vec<(f64, usize)> = Vec::new();
    let mut best = 0usize;
    for (f, tp) in raw {
        if tp > best {
            best = tp;
            match env.last_mut() {
                Some(last) if last.0 == f => last.1 = tp,
                _ => env.push((f, tp)),
            }
        }
    }

    let at_lo = env
        .iter()
        .take_while(|&&(f, _)| f <= fdr_lo)
        .last()
        .map(|&(_, tp)| tp)
        .unwrap_or(0);
    let mut points = vec![(fdr_lo, at_lo)];
    points.extend(env.iter().copied().filter(|&(f, _)| f > fdr_lo && f <= fdr_hi));
    Ok(RocCurve {
        points,
        fdr_lo,
        fdr_hi,
        n_true,
    })
}

/// Area under the step curve over [fdr_lo, fdr_hi], normalized by the
/// perfect curve's area (fdr_hi − fdr_lo) · n_true.
pub fn pauc(curve: &RocCurve) -> Result<f64, EvalError> {
    if curve.n_true == 0 {
        return Err(EvalError::NoTruePositives);
    }
    if curve.points.is_empty() {
        return Ok(0.0);
    }
    let mut area = 0.0;
    for (i, &(f, tp)) in curve.points.iter().enumerate() {
        let next = curve
            .points
            .get(i + 1)
            .map(|&(nf, _)| nf)
            .unwrap_or(curve.fdr_hi)
            .min(curve.fdr_hi);
        let seg = next - f.max(curve.fdr_lo);
        if seg > 0.0 {
            area += tp as f64 * seg;
        }
    }
    Ok(area / ((curve.fdr_hi - curve.fdr_lo) * curve.n_true as f64))
}

/// Assign truth flags to non-decoy rows from a protein-level map. A
/// group counts as a true positive if any member protein is planted
/// true; it counts as entrapment only when every member is known and
/// none is true. Groups with unmapped members stay unknown.
pub fn assign_truth(table: &mut ScoreTable, truth: &BTreeMap<String, TruthFlag>) {
    for row in &mut table.rows {
        if row.is_decoy {
            row.truth = TruthFlag::Unknown;
            continue;
        }
        let flags: Vec<Option<&TruthFlag>> =
            row.members.iter().map(|m| truth.get(m)).collect();
        row.truth = if flags.iter().any(|f| matches!(f, Some(TruthFlag::True))) {
            TruthFlag::True
        } else if flags.iter().all(|f| f.is_some()) {
            TruthFlag::Entrapment
        } else {
            TruthFlag::Unknown
        };
    }
}

/// Parse a ground-truth TSV: `protein_id<TAB>{true|entrapment}`.
pub fn read_ground_truth(path: &Path) -> Result<BTreeMap<String, TruthFlag>, EvalError> {
    let reader = BufReader::new(File::open(path)?);
    let mut map = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (id, flag) = match (parts.next(), parts.next(), parts.next()) {
            (Some(id), Some(flag), None) if !id.is_empty() => (id, flag),
            _ => {
                return Err(EvalError::BadRow {
                    line: lineno + 1,
                    reason: format!("expected `protein<TAB>flag`, got {line:?}"),
                })
            }
        };
        let flag = match flag {
            "true" => TruthFlag::True,
            "entrapment" => TruthFlag::Entrapment,
            other => {
                return Err(EvalError::BadRow {
                    line: lineno + 1,
                    reason: format!("unknown truth flag {other:?}"),
                })
            }
        };
        map.insert(id.to_string(), flag);
    }
    Ok(map)
}

/// One dataset's worth of material for [`emit_report`].
pub struct DatasetReport<'a> {
    pub name: &'a str,
    pub table: &'a ScoreTable,
    pub curve: Option<&'a RocCurve>,
    pub pauc: Option<f64>,
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

/// Write a score table in the 6-column report format (6-decimal
/// fixed-point scores and q-values).
pub fn write_scores_tsv<W: Write>(table: &ScoreTable, mut w: W) -> Result<(), EvalError> {
    writeln!(w, "group_id\tmembers\tscore\tq_value\tis_decoy\ttruth")?;
    for row in &table.rows {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            row.group_id,
            row.members.join(";"),
            fmt6(row.score),
            row.q_value.map(fmt6).unwrap_or_else(|| "NA".into()),
            row.is_decoy as u8,
            row.truth.as_str(),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Write per-dataset scores, curve, and calibration TSVs plus a shared
/// summary, all 6-decimal fixed-point.
pub fn emit_report(datasets: &[DatasetReport<'_>], dir: &Path) -> Result<(), EvalError> {
    std::fs::create_dir_all(dir)?;
    let mut summary = BufWriter::new(File::create(dir.join("summary.tsv"))?);
    writeln!(summary, "dataset\tpauc\tn_true\tn_points")?;
    for ds in datasets {
        let w = BufWriter::new(File::create(dir.join(format!("{}.scores.tsv", ds.name)))?);
        write_scores_tsv(ds.table, w)?;

        if let Some(curve) = ds.curve {
            let mut w = BufWriter::new(File::create(dir.join(format!("{}.curve.tsv", ds.name)))?);
            writeln!(w, "entrapment_fdr\ttrue_positives")?;
            for &(f, tp) in &curve.points {
                writeln!(w, "{}\t{}", fmt6(f), tp)?;
            }
            w.flush()?;
            write_calibration(ds, dir)?;
        }
        writeln!(
            summary,
            "{}\t{}\t{}\t{}",
            ds.name,
            ds.pauc.map(fmt6).unwrap_or_else(|| "NA".into()),
            ds.curve.map(|c| c.n_true.to_string()).unwrap_or_else(|| "NA".into()),
            ds.curve.map(|c| c.points.len().to_string()).unwrap_or_else(|| "NA".into()),
        )?;
    }
    summary.flush()?;
    Ok(())
}

/// Paired decoy-FDR and entrapment-FDR estimates per distinct score
/// threshold, for checking how well the decoy estimate tracks truth.
fn write_calibration(ds: &DatasetReport<'_>, dir: &Path) -> Result<(), EvalError> {
    let mut w = BufWriter::new(File::create(
        dir.join(format!("{}.calibration.tsv", ds.name)),
    )?);
    writeln!(w, "score\tdecoy_fdr\tentrapment_fdr")?;
    let mut rows: Vec<&ScoreRow> = ds.table.rows.iter().collect();
    rows.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
    let (mut d, mut t, mut tp, mut ent) = (0usize, 0usize, 0usize, 0usize);
    let mut i = 0;
    while i < rows.len() {
        let mut j = i;
        while j < rows.len() && rows[j].score == rows[i].score {
            let r = rows[j];
            if r.is_decoy {
                d += 1;
            } else {
                t += 1;
                match r.truth {
                    TruthFlag::True => tp += 1,
                    TruthFlag::Entrapment => ent += 1,
                    TruthFlag::Unknown => {}
                }
            }
            j += 1;
        }
        let decoy_fdr = d as f64 / t.max(1) as f64;
        let ent_fdr = if tp + ent > 0 {
            ent as f64 / (tp + ent) as f64
        } else {
            0.0
        };
        writeln!(
            w,
            "{}\t{}\t{}",
            fmt6(rows[i].score),
            fmt6(decoy_fdr),
            fmt6(ent_fdr)
        )?;
        i = j;
    }
    w.flush()?;
    Ok(())
}

/// Parse a scores TSV written by [`emit_report`].
pub fn read_scores_tsv(path: &Path) -> Result<ScoreTable, EvalError> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            if line != "group_id\tmembers\tscore\tq_value\tis_decoy\ttruth" {
                return Err(EvalError::BadRow {
                    line: 1,
                    reason: format!("unexpected header {line:?}"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(EvalError::BadRow {
                line: lineno + 1,
                reason: format!("expected 6 columns, found {}", cols.len()),
            });
        }
        let bad = |reason: String| EvalError::BadRow {
            line: lineno + 1,
            reason,
        };
        let score: f64 = cols[2]
            .parse()
            .map_err(|_| bad(format!("bad score {:?}", cols[2])))?;
        let q_value = if cols[3] == "NA" {
            None
        } else {
            Some(
                cols[3]
                    .parse()
                    .map_err(|_| bad(format!("bad q-value {:?}", cols[3])))?,
            )
        };
        let is_decoy = match cols[4] {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("bad decoy flag {other:?}"))),
        };
        let truth = match cols[5] {
            "true" => TruthFlag::True,
            "entrapment" => TruthFlag::Entrapment,
            "unknown" => TruthFlag::Unknown,
            other => return Err(bad(format!("bad truth flag {other:?}"))),
        };
        rows.push(ScoreRow {
            group_id: cols[0].to_string(),
            members: if cols[1].is_empty() {
                Vec::new()
            } else {
                cols[1].split(';').map(str::to_string).collect()
            },
            score,
            is_decoy,
            truth,
            q_value,
        });
    }
    Ok(ScoreTable { rows })
}
