//! Percolator PIN-style PSM table ingestion.
//!
//! Parses tab-separated identification tables (header: `SpecId`, `Label`,
//! `ScanNr`, feature columns, `Peptide`, `Proteins`, with any trailing
//! columns treated as additional protein IDs), relabels records from
//! decoy protein prefixes, z-scores feature columns, and derives the
//! peptide↔protein bipartite map the graph builder consumes.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use thiserror::Error;

/// Standard deviations below this are clamped so constant feature
/// columns standardize to zero instead of dividing by zero.
pub const STD_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PsmError {
    #[error("missing mandatory column {name} in header")]
    MissingColumn { name: &'static str },
    #[error("header has no feature columns between ScanNr and Peptide")]
    NoFeatureColumns,
    #[error("line {line}: expected at least {expected} columns, found {found}")]
    ColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: column {column} holds non-numeric value {value:?}")]
    NonNumeric {
        line: usize,
        column: String,
        value: String,
    },
    #[error("line {line}: Label must be 1 or -1, found {value:?}")]
    BadLabel { line: usize, value: String },
    #[error("line {line}: empty protein list")]
    EmptyProteins { line: usize },
    #[error("line {line}: pep value {value} outside [0, 1]")]
    PepOutOfRange { line: usize, value: f64 },
    #[error("decoy prefix must be non-empty")]
    EmptyDecoyPrefix,
    #[error("feature standardization needs at least 2 records, found {found}")]
    InsufficientData { found: usize },
    #[error("feature stats cover {stats} columns but table has {table}")]
    StatsDimMismatch { stats: usize, table: usize },
    #[error("feature column {index} is {table:?} in the table but {stats:?} in the stats")]
    StatsNameMismatch {
        index: usize,
        table: String,
        stats: String,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Target,
    Decoy,
}

impl Label {
    pub fn is_decoy(self) -> bool {
        self == Label::Decoy
    }

    fn from_pin(s: &str) -> Option<Label> {
        match s {
            "1" => Some(Label::Target),
            "-1" => Some(Label::Decoy),
            _ => None,
        }
    }

    fn to_pin(self) -> &'static str {
        match self {
            Label::Target => "1",
            Label::Decoy => "-1",
        }
    }
}

/// One row of the PIN table.
#[derive(Debug, Clone, PartialEq)]
pub struct PsmRecord {
    pub spec_id: String,
    pub label: Label,
    pub scan_nr: i64,
    pub features: Vec<f64>,
    /// Normalized peptide: flanking-residue notation (`K.PEPTIDE.R`)
    /// stripped, modification brackets kept verbatim.
    pub peptide: String,
    /// Duplicate-free, in first-seen order.
    pub proteins: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsmTable {
    pub feature_names: Vec<String>,
    pub records: Vec<PsmRecord>,
    pub decoy_prefix: String,
}

impl PsmTable {
    /// Index of the posterior-error-probability column, matched
    /// case-insensitively as `pep`.
    pub fn pep_index(&self) -> Option<usize> {
        self.feature_names
            .iter()
            .position(|n| n.eq_ignore_ascii_case("pep"))
    }
}

/// Per-column transform learned on training data and replayed on other
/// tables. The `pep` column is stored as the identity (mean 0, std 1)
/// because edge weights are defined from it on the raw [0, 1] scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Peptide↔protein adjacency with its exact transpose.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BipartiteMap {
    pub peptide_to_proteins: BTreeMap<String, BTreeSet<String>>,
    pub protein_to_peptides: BTreeMap<String, BTreeSet<String>>,
}

/// Strip `X.SEQUENCE.X` flanking notation; everything else (including
/// bracketed modifications) passes through untouched.
pub fn normalize_peptide(raw: &str) -> &str {
    let mut s = raw;
    let b = s.as_bytes();
    if b.len() >= 4 && b[1] == b'.' {
        s = &s[2..];
    }
    let b = s.as_bytes();
    if b.len() >= 4 && b[b.len() - 2] == b'.' {
        s = &s[..b.len() - 2];
    }
    s
}

/// Parse a PIN-style TSV. Lines are numbered from 1 including the
/// header, so the first data row is line 2.
pub fn parse_pin<R: BufRead>(source: R, decoy_prefix: &str) -> Result<PsmTable, PsmError> {
    if decoy_prefix.is_empty() {
        return Err(PsmError::EmptyDecoyPrefix);
    }
    let mut lines = source.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(PsmError::MissingColumn { name: "SpecId" }),
    };
    let cols: Vec<&str> = header.split('\t').collect();

    // Positional header contract: SpecId, Label, ScanNr up front,
    // Peptide and Proteins at the end, features in between.
    for (idx, name) in [(0, "SpecId"), (1, "Label"), (2, "ScanNr")] {
        if !cols
            .get(idx)
            .is_some_and(|c| c.eq_ignore_ascii_case(name))
        {
            return Err(PsmError::MissingColumn { name });
        }
    }
    if cols.len() < 5 || !cols[cols.len() - 1].eq_ignore_ascii_case("proteins") {
        return Err(PsmError::MissingColumn { name: "Proteins" });
    }
    if !cols[cols.len() - 2].eq_ignore_ascii_case("peptide") {
        return Err(PsmError::MissingColumn { name: "Peptide" });
    }
    let n_features = cols.len() - 5;
    if n_features == 0 {
        return Err(PsmError::NoFeatureColumns);
    }
    let feature_names: Vec<String> = cols[3..3 + n_features]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let pep_col = feature_names
        .iter()
        .position(|n| n.eq_ignore_ascii_case("pep"));

    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < cols.len() {
            return Err(PsmError::ColumnCount {
                line: lineno,
                expected: cols.len(),
                found: fields.len(),
            });
        }
        let label = Label::from_pin(fields[1]).ok_or_else(|| PsmError::BadLabel {
            line: lineno,
            value: fields[1].to_string(),
        })?;
        let scan_nr: i64 = fields[2].parse().map_err(|_| PsmError::NonNumeric {
            line: lineno,
            column: "ScanNr".to_string(),
            value: fields[2].to_string(),
        })?;
        let mut features = Vec::with_capacity(n_features);
        for (j, cell) in fields[3..3 + n_features].iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| PsmError::NonNumeric {
                line: lineno,
                column: feature_names[j].clone(),
                value: cell.to_string(),
            })?;
            features.push(v);
        }
        if let Some(j) = pep_col {
            let pep = features[j];
            if !(0.0..=1.0).contains(&pep) {
                return Err(PsmError::PepOutOfRange {
                    line: lineno,
                    value: pep,
                });
            }
        }
        let peptide = normalize_peptide(fields[3 + n_features]).to_string();
        // Everything after the Peptide column is a protein ID; decoy
        // tools sometimes emit duplicates, which we drop keeping the
        // first occurrence.
        let mut proteins = Vec::new();
        for p in &fields[4 + n_features..] {
            if p.is_empty() || proteins.iter().any(|q| q == p) {
                continue;
            }
            proteins.push(p.to_string());
        }
        if proteins.is_empty() {
            return Err(PsmError::EmptyProteins { line: lineno });
        }
        records.push(PsmRecord {
            spec_id: fields[0].to_string(),
            label,
            scan_nr,
            features,
            peptide,
            proteins,
        });
    }
    Ok(PsmTable {
        feature_names,
        records,
        decoy_prefix: decoy_prefix.to_string(),
    })
}

/// Write the table back out in the canonical PIN layout. Floats use
/// Rust's shortest round-trip rendering, so `parse ∘ serialize` is the
/// identity on parsed tables.
pub fn serialize_pin<W: Write>(table: &PsmTable, mut w: W) -> Result<(), PsmError> {
    write!(w, "SpecId\tLabel\tScanNr")?;
    for name in &table.feature_names {
        write!(w, "\t{}", name)?;
    }
    writeln!(w, "\tPeptide\tProteins")?;
    for rec in &table.records {
        write!(w, "{}\t{}\t{}", rec.spec_id, rec.label.to_pin(), rec.scan_nr)?;
        for v in &rec.features {
            write!(w, "\t{}", v)?;
        }
        write!(w, "\t{}", rec.peptide)?;
        for p in &rec.proteins {
            write!(w, "\t{}", p)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Relabel every record from its protein list: a PSM is a decoy iff
/// *all* of its proteins carry the decoy prefix. A peptide shared with
/// any real protein is evidence for a target, so mixed membership stays
/// target. Idempotent.
pub fn detect_decoys(table: &mut PsmTable) -> Result<(), PsmError> {
    if table.decoy_prefix.is_empty() {
        return Err(PsmError::EmptyDecoyPrefix);
    }
    let prefix = table.decoy_prefix.clone();
    for rec in &mut table.records {
        let all_decoy = rec.proteins.iter().all(|p| p.starts_with(&prefix));
        rec.label = if all_decoy { Label::Decoy } else { Label::Target };
    }
    Ok(())
}

/// Z-score every feature column in place with population mean/std
/// (divisor n, std floored at [`STD_FLOOR`]) and return the transform.
/// The `pep` column keeps its raw values.
pub fn standardize_features(table: &mut PsmTable) -> Result<FeatureStats, PsmError> {
    let n = table.records.len();
    if n < 2 {
        return Err(PsmError::InsufficientData { found: n });
    }
    let pep_col = table.pep_index();
    let d = table.feature_names.len();
    let mut mean = vec![0.0; d];
    let mut std = vec![1.0; d];
    for j in 0..d {
        if Some(j) == pep_col {
            continue;
        }
        let mut sum = 0.0;
        for rec in &table.records {
            sum += rec.features[j];
        }
        let mu = sum / n as f64;
        let mut var = 0.0;
        for rec in &table.records {
            let dvi = rec.features[j] - mu;
            var += dvi * dvi;
        }
        let sigma = (var / n as f64).sqrt().max(STD_FLOOR);
        mean[j] = mu;
        std[j] = sigma;
    }
    let stats = FeatureStats {
        names: table.feature_names.clone(),
        mean,
        std,
    };
    apply_feature_stats(table, &stats)?;
    Ok(stats)
}

/// Replay a previously learned standardization, e.g. applying training
/// stats to held-out data at inference time.
pub fn apply_feature_stats(table: &mut PsmTable, stats: &FeatureStats) -> Result<(), PsmError> {
    if stats.names.len() != table.feature_names.len() {
        return Err(PsmError::StatsDimMismatch {
            stats: stats.names.len(),
            table: table.feature_names.len(),
        });
    }
    for (j, (a, b)) in table.feature_names.iter().zip(&stats.names).enumerate() {
        if a != b {
            return Err(PsmError::StatsNameMismatch {
                index: j,
                table: a.clone(),
                stats: b.clone(),
            });
        }
    }
    for rec in &mut table.records {
        for j in 0..rec.features.len() {
            rec.features[j] = (rec.features[j] - stats.mean[j]) / stats.std[j];
        }
    }
    Ok(())
}

/// Union of (peptide, protein) pairs over all records, with the exact
/// transpose index.
pub fn peptide_protein_map(table: &PsmTable) -> BipartiteMap {
    let mut map = BipartiteMap::default();
    for rec in &table.records {
        for protein in &rec.proteins {
            map.peptide_to_proteins
                .entry(rec.peptide.clone())
                .or_default()
                .insert(protein.clone());
            map.protein_to_peptides
                .entry(protein.clone())
                .or_default()
                .insert(rec.peptide.clone());
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "SpecId\tLabel\tScanNr\tpep\tlnrSp\tdeltLCn\tdeltCn\tXCorr\tSp\tIonFrac\tMass\tPepLen\tCharge1\tCharge2\tCharge3\tenzN\tenzC\tenzInt\tlnNumSP\tdM\tabsdM\tPeptide\tProteins";

    fn parse(text: &str) -> Result<PsmTable, PsmError> {
        parse_pin(text.as_bytes(), "DECOY_")
    }

    #[test]
    fn parses_single_row_field_by_field() {
        let row = "spec_1\t1\t501\t0.01\t1.5\t0.2\t0.3\t3.8\t120\t0.45\t1500.5\t12\t0\t1\t0\t1\t1\t0\t4.2\t0.002\t0.002\tK.ACDEFGHIKLMR.N\tP1\tP2";
        let table = parse(&format!("{HEADER}\n{row}\n")).unwrap();
        assert_eq!(table.feature_names.len(), 18);
        assert_eq!(table.feature_names[0], "pep");
        assert_eq!(table.feature_names[17], "absdM");
        assert_eq!(table.records.len(), 1);
        let rec = &table.records[0];
        assert_eq!(rec.spec_id, "spec_1");
        assert_eq!(rec.label, Label::Target);
        assert_eq!(rec.scan_nr, 501);
        assert_eq!(rec.features.len(), 18);
        assert_eq!(rec.features[0], 0.01);
        assert_eq!(rec.features[4], 3.8);
        assert_eq!(rec.features[17], 0.002);
        assert_eq!(rec.peptide, "ACDEFGHIKLMR");
        assert_eq!(rec.proteins, vec!["P1", "P2"]);
    }

    #[test]
    fn header_only_is_empty_table() {
        let table = parse(&format!("{HEADER}\n")).unwrap();
        assert!(table.records.is_empty());
        assert_eq!(table.feature_names.len(), 18);
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let row = "s\t1\t1\t0.1\t0\t0\t0\tabc\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0\tPEP\tP1";
        let err = parse(&format!("{HEADER}\n{row}\n")).unwrap_err();
        match err {
            PsmError::NonNumeric { line, column, value } => {
                assert_eq!(line, 2);
                assert_eq!(column, "XCorr");
                assert_eq!(value, "abc");
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn short_row_and_bad_label_and_no_proteins() {
        let short = "s\t1\t1\t0.5\tPEP\tP1";
        assert!(matches!(
            parse(&format!("{HEADER}\n{short}\n")),
            Err(PsmError::ColumnCount { line: 2, .. })
        ));
        let feats = "\t0.1";
        let bad_label = format!("s\t2\t1{}\tPEP\tP1", feats.repeat(18));
        assert!(matches!(
            parse(&format!("{HEADER}\n{bad_label}\n")),
            Err(PsmError::BadLabel { line: 2, .. })
        ));
        let no_prot = format!("s\t1\t1{}\tPEP\t", feats.repeat(18));
        assert!(matches!(
            parse(&format!("{HEADER}\n{no_prot}\n")),
            Err(PsmError::EmptyProteins { line: 2 })
        ));
    }

    #[test]
    fn pep_outside_unit_interval_rejected() {
        let feats = "\t0.1".repeat(17);
        let row = format!("s\t1\t1\t1.5{feats}\tPEP\tP1");
        assert!(matches!(
            parse(&format!("{HEADER}\n{row}\n")),
            Err(PsmError::PepOutOfRange { line: 2, .. })
        ));
    }

    #[test]
    fn missing_mandatory_columns() {
        let err = parse("SpecId\tLabel\tScanNr\tXCorr\tPeptide\n").unwrap_err();
        assert!(matches!(err, PsmError::MissingColumn { name: "Proteins" }));
        let err = parse("Id\tLabel\tScanNr\tXCorr\tPeptide\tProteins\n").unwrap_err();
        assert!(matches!(err, PsmError::MissingColumn { name: "SpecId" }));
        let err = parse("SpecId\tLabel\tScanNr\tPeptide\tProteins\n").unwrap_err();
        assert!(matches!(err, PsmError::NoFeatureColumns));
    }

    #[test]
    fn flanking_residues_stripped_modifications_kept() {
        assert_eq!(normalize_peptide("K.ACDK.R"), "ACDK");
        assert_eq!(normalize_peptide("-.M[15.99]AB.-"), "M[15.99]AB");
        assert_eq!(normalize_peptide("ACDK"), "ACDK");
        assert_eq!(normalize_peptide("A.B"), "A.B");
        // Idempotent on already-normalized output.
        assert_eq!(normalize_peptide(normalize_peptide("K.ACDK.R")), "ACDK");
    }

    fn tiny_table(rows: &[(&str, &[&str])]) -> PsmTable {
        // Rows of (label cell, protein list) with a fixed feature block.
        let mut text = String::from("SpecId\tLabel\tScanNr\tpep\tXCorr\tPeptide\tProteins\n");
        for (i, (label, prots)) in rows.iter().enumerate() {
            text.push_str(&format!("s{i}\t{label}\t{i}\t0.1\t1.0\tPEPTIDE{i}\t"));
            text.push_str(&prots.join("\t"));
            text.push('\n');
        }
        parse(&text).unwrap()
    }

    #[test]
    fn decoy_rule_all_or_nothing() {
        let mut table = tiny_table(&[
            ("1", &["DECOY_P1"]),
            ("-1", &["P1", "DECOY_P2"]),
            ("1", &["DECOY_P1", "DECOY_P2"]),
        ]);
        detect_decoys(&mut table).unwrap();
        assert_eq!(table.records[0].label, Label::Decoy);
        assert_eq!(table.records[1].label, Label::Target);
        assert_eq!(table.records[2].label, Label::Decoy);
        // Idempotent.
        let once = table.clone();
        detect_decoys(&mut table).unwrap();
        assert_eq!(table, once);
    }

    #[test]
    fn empty_decoy_prefix_rejected() {
        assert!(matches!(
            parse_pin(HEADER.as_bytes(), ""),
            Err(PsmError::EmptyDecoyPrefix)
        ));
    }

    #[test]
    fn z_score_hand_values() {
        let mut table = tiny_table(&[("1", &["P1"]), ("1", &["P2"])]);
        table.records[0].features = vec![0.1, 1.0];
        table.records[1].features = vec![0.9, 3.0];
        let stats = standardize_features(&mut table).unwrap();
        // XCorr column [1, 3]: mean 2, population std 1.
        assert_eq!(table.records[0].features[1], -1.0);
        assert_eq!(table.records[1].features[1], 1.0);
        assert_eq!(stats.mean[1], 2.0);
        assert_eq!(stats.std[1], 1.0);
        // pep column passes through with an identity transform.
        assert_eq!(table.records[0].features[0], 0.1);
        assert_eq!(table.records[1].features[0], 0.9);
        assert_eq!(stats.mean[0], 0.0);
        assert_eq!(stats.std[0], 1.0);
    }

    #[test]
    fn constant_column_floors_to_zero() {
        let mut table = tiny_table(&[("1", &["P1"]), ("1", &["P2"]), ("1", &["P3"])]);
        for rec in &mut table.records {
            rec.features = vec![0.5, 5.0];
        }
        let stats = standardize_features(&mut table).unwrap();
        assert_eq!(stats.std[1], STD_FLOOR);
        for rec in &table.records {
            assert_eq!(rec.features[1], 0.0);
        }
    }

    #[test]
    fn standardize_needs_two_records() {
        let mut table = tiny_table(&[("1", &["P1"])]);
        assert!(matches!(
            standardize_features(&mut table),
            Err(PsmError::InsufficientData { found: 1 })
        ));
    }

    #[test]
    fn stats_replay_checks_names() {
        let mut table = tiny_table(&[("1", &["P1"]), ("1", &["P2"])]);
        let mut stats = standardize_features(&mut table).unwrap();
        stats.names[1] = "Sp".to_string();
        assert!(matches!(
            apply_feature_stats(&mut table, &stats),
            Err(PsmError::StatsNameMismatch { index: 1, .. })
        ));
        stats.names.pop();
        stats.mean.pop();
        stats.std.pop();
        assert!(matches!(
            apply_feature_stats(&mut table, &stats),
            Err(PsmError::StatsDimMismatch { stats: 1, table: 2 })
        ));
    }

    #[test]
    fn bipartite_map_matches_pair_enumeration() {
        let mut table = tiny_table(&[("1", &["A", "B"]), ("1", &["B"])]);
        table.records[0].peptide = "PEP1".into();
        table.records[1].peptide = "PEP2".into();
        let map = peptide_protein_map(&table);
        let a: Vec<_> = map.protein_to_peptides["A"].iter().cloned().collect();
        let b: Vec<_> = map.protein_to_peptides["B"].iter().cloned().collect();
        assert_eq!(a, vec!["PEP1"]);
        assert_eq!(b, vec!["PEP1", "PEP2"]);
        assert_eq!(
            map.peptide_to_proteins["PEP1"],
            BTreeSet::from(["A".to_string(), "B".to_string()])
        );
    }

    #[test]
    fn repeated_psms_of_same_peptide_collapse_to_one_edge() {
        let mut table = tiny_table(&[("1", &["P"]), ("1", &["P"])]);
        table.records[0].peptide = "SAME".into();
        table.records[1].peptide = "SAME".into();
        let map = peptide_protein_map(&table);
        assert_eq!(map.peptide_to_proteins.len(), 1);
        assert_eq!(map.protein_to_peptides["P"].len(), 1);
    }

    #[test]
    fn empty_table_gives_empty_map() {
        let table = parse(&format!("{HEADER}\n")).unwrap();
        assert_eq!(peptide_protein_map(&table), BipartiteMap::default());
    }

    proptest! {
        #[test]
        fn round_trip_parse_serialize_parse(
            rows in proptest::collection::vec(
                (
                    "[a-z]{1,8}",                                   // spec id
                    prop::bool::ANY,                                // decoy?
                    0i64..100_000,                                  // scan
                    0.0f64..=1.0,                                   // pep
                    proptest::collection::vec(-1.0e6f64..1.0e6, 2), // other features
                    "[ACDEFGHIKLMNPQRSTVWY]{4,12}",                 // peptide
                    proptest::collection::btree_set("[A-Z][A-Z0-9]{1,6}", 1..4),
                ),
                0..20,
            )
        ) {
            let mut text = String::from("SpecId\tLabel\tScanNr\tpep\tXCorr\tSp\tPeptide\tProteins\n");
            for (id, decoy, scan, pep, feats, peptide, prots) in &rows {
                let label = if *decoy { "-1" } else { "1" };
                text.push_str(&format!("{id}\t{label}\t{scan}\t{pep}\t{}\t{}\t{peptide}\t", feats[0], feats[1]));
                text.push_str(&prots.iter().cloned().collect::<Vec<_>>().join("\t"));
                text.push('\n');
            }
            let table = parse(&text).unwrap();
            let mut out = Vec::new();
            serialize_pin(&table, &mut out).unwrap();
            let reparsed = parse_pin(out.as_slice(), "DECOY_").unwrap();
            prop_assert_eq!(table, reparsed);
        }

        #[test]
        fn standardized_columns_have_zero_mean_unit_std(
            col in proptest::collection::vec(-1.0e3f64..1.0e3, 2..50)
        ) {
            let rows: Vec<(&str, &[&str])> = col.iter().map(|_| ("1", ["P1"].as_slice())).collect();
            let mut table = tiny_table(&rows);
            for (rec, v) in table.records.iter_mut().zip(&col) {
                rec.features = vec![0.1, *v];
            }
            let stats = standardize_features(&mut table).unwrap();
            let n = col.len() as f64;
            let mean: f64 = table.records.iter().map(|r| r.features[1]).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            if stats.std[1] > STD_FLOOR {
                let var: f64 = table.records.iter().map(|r| r.features[1] * r.features[1]).sum::<f64>() / n;
                prop_assert!((var.sqrt() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn bipartite_transpose_consistency(
            pairs in proptest::collection::vec(("[a-z]{2,5}", "[A-Z]{2,5}"), 1..30)
        ) {
            let rows: Vec<(&str, &[&str])> = pairs.iter().map(|_| ("1", ["X"].as_slice())).collect();
            let mut table = tiny_table(&rows);
            for (rec, (pep, prot)) in table.records.iter_mut().zip(&pairs) {
                rec.peptide = pep.clone();
                rec.proteins = vec![prot.clone()];
            }
            let map = peptide_protein_map(&table);
            let forward: usize = map.peptide_to_proteins.values().map(|s| s.len()).sum();
            let reverse: usize = map.protein_to_peptides.values().map(|s| s.len()).sum();
            prop_assert_eq!(forward, reverse);
            for (pep, prots) in &map.peptide_to_proteins {
                for prot in prots {
                    prop_assert!(map.protein_to_peptides[prot].contains(pep));
                }
            }
        }
    }
}
