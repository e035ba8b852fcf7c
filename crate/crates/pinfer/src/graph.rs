//! Protein-group / peptide / PSM tripartite graph construction.
//!
//! Proteins with byte-identical peptide sets collapse into one group.
//! Each peptide→group edge carries a sharing attribute S: among the
//! groups a peptide touches, the one connected to the most high-scoring
//! peptides receives 1/(number of touched groups) and the rest receive
//! 0 (the edges still exist). Each peptide→PSM edge carries that PSM's
//! identification confidence E = 1 − pep.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use thiserror::Error;

use crate::mat::Mat;
use crate::psm::{BipartiteMap, PsmTable};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot build a graph from an empty table")]
    EmptyTable,
    #[error("table has no pep feature column")]
    MissingPepColumn,
    #[error("epsilon must lie in [0, 1], got {value}")]
    EpsilonOutOfRange { value: f64 },
    #[error("decoy prefix must be non-empty")]
    EmptyDecoyPrefix,
    #[error("protein group index {index} out of range (have {count} groups)")]
    UnknownGroup { index: usize, count: usize },
    #[error("no score for peptide {peptide}")]
    MissingPeptideScore { peptide: String },
    #[error("graph invariant violated: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// How equal surrogate scores are resolved when a shared peptide picks
/// its best-supported group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TieBreak {
    /// Deterministic: the lowest group index wins.
    #[default]
    LowestGroupId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphBuildConfig {
    /// Peptides with identification score strictly above this count as
    /// high-scoring when ranking the groups that share a peptide.
    pub epsilon: f64,
    pub decoy_prefix: String,
    pub tie_break: TieBreak,
}

impl Default for GraphBuildConfig {
    fn default() -> Self {
        GraphBuildConfig {
            epsilon: 0.9,
            decoy_prefix: "DECOY_".to_string(),
            tie_break: TieBreak::LowestGroupId,
        }
    }
}

impl GraphBuildConfig {
    fn validate(&self) -> Result<(), GraphError> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(GraphError::EpsilonOutOfRange {
                value: self.epsilon,
            });
        }
        if self.decoy_prefix.is_empty() {
            return Err(GraphError::EmptyDecoyPrefix);
        }
        Ok(())
    }
}

/// Proteins whose peptide sets are identical, treated as one node.
#[derive(Debug, Clone, PartialEq)]
pub struct ProteinGroup {
    /// Member protein IDs, sorted lexicographically.
    pub members: Vec<String>,
    /// True iff every member carries the decoy prefix; a group mixing
    /// targets and decoys counts as target so decoy counts are never
    /// inflated.
    pub is_decoy: bool,
    pub group_id: usize,
}

/// Peptide↔group adjacency after collapsing identical proteins.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupedMap {
    pub peptide_to_groups: BTreeMap<String, BTreeSet<usize>>,
    pub group_to_peptides: Vec<BTreeSet<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProPepEdge {
    pub group: usize,
    pub pep: usize,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PepPsmEdge {
    pub pep: usize,
    pub psm: usize,
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripartiteGraph {
    pub groups: Vec<ProteinGroup>,
    /// Normalized peptide strings in index order (sorted).
    pub peptides: Vec<String>,
    /// Spectrum IDs in index order (table row order).
    pub psm_ids: Vec<String>,
    /// Sorted by (group, pep).
    pub pro_pep_edges: Vec<ProPepEdge>,
    /// Sorted by (pep, psm); exactly one edge per PSM.
    pub pep_psm_edges: Vec<PepPsmEdge>,
    /// One standardized feature row per PSM node.
    pub psm_features: Mat,
    /// Per-peptide maximum identification score, aligned to `peptides`.
    pub pep_max_score: Vec<f64>,
}

impl TripartiteGraph {
    /// One-hot type codes feeding the learned node-type embeddings.
    pub const TYPE_PRO: usize = 0;
    pub const TYPE_PEP: usize = 1;

    pub fn n_pro(&self) -> usize {
        self.groups.len()
    }

    pub fn n_pep(&self) -> usize {
        self.peptides.len()
    }

    pub fn n_psm(&self) -> usize {
        self.psm_ids.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.psm_features.cols()
    }

    /// Check the structural invariants; [`build_graph`] runs this before
    /// returning, so a violation means a construction bug.
    pub fn validate(&self) -> Result<(), GraphError> {
        let fail = |msg: String| Err(GraphError::Invariant(msg));
        let mut psm_degree = vec![0usize; self.n_psm()];
        for e in &self.pep_psm_edges {
            if e.pep >= self.n_pep() || e.psm >= self.n_psm() {
                return fail(format!("pep_psm edge ({}, {}) out of range", e.pep, e.psm));
            }
            if !(0.0..=1.0).contains(&e.e) {
                return fail(format!("edge weight {} outside [0, 1]", e.e));
            }
            psm_degree[e.psm] += 1;
        }
        if let Some(m) = psm_degree.iter().position(|&d| d != 1) {
            return fail(format!("PSM {} has {} peptide edges, want 1", m, psm_degree[m]));
        }
        let mut pep_pro_degree = vec![0usize; self.n_pep()];
        let mut pep_nonzero = vec![0usize; self.n_pep()];
        for e in &self.pro_pep_edges {
            if e.group >= self.n_pro() || e.pep >= self.n_pep() {
                return fail(format!("pro_pep edge ({}, {}) out of range", e.group, e.pep));
            }
            pep_pro_degree[e.pep] += 1;
            if e.s != 0.0 {
                pep_nonzero[e.pep] += 1;
            }
        }
        // Per peptide: at most one nonzero S, equal to 1/degree.
        for e in &self.pro_pep_edges {
            let c = pep_pro_degree[e.pep];
            if e.s != 0.0 && e.s != 1.0 / c as f64 {
                return fail(format!(
                    "peptide {} has S = {} with {} incident groups",
                    e.pep, e.s, c
                ));
            }
        }
        for u in 0..self.n_pep() {
            if pep_pro_degree[u] == 0 {
                return fail(format!("peptide {u} has no protein edge"));
            }
            if pep_nonzero[u] > 1 {
                return fail(format!("peptide {u} has {} nonzero S entries", pep_nonzero[u]));
            }
        }
        let mut pep_psm_degree = vec![0usize; self.n_pep()];
        for e in &self.pep_psm_edges {
            pep_psm_degree[e.pep] += 1;
        }
        if let Some(u) = pep_psm_degree.iter().position(|&d| d == 0) {
            return fail(format!("peptide {u} has no PSM edge"));
        }
        Ok(())
    }

    /// Line-oriented text dump: node sections, then edge sections.
    /// Attributes render with 9 significant digits, so identical graphs
    /// dump to identical bytes.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<(), GraphError> {
        for g in &self.groups {
            writeln!(
                w,
                "PRO {} {} {}",
                g.group_id,
                g.members.join(";"),
                g.is_decoy as u8
            )?;
        }
        for (u, pep) in self.peptides.iter().enumerate() {
            writeln!(w, "PEP {} {}", u, pep)?;
        }
        for (m, id) in self.psm_ids.iter().enumerate() {
            writeln!(w, "PSM {} {}", m, id)?;
        }
        for e in &self.pro_pep_edges {
            writeln!(w, "PRO_PEP {} {} {:.8e}", e.group, e.pep, e.s)?;
        }
        for e in &self.pep_psm_edges {
            writeln!(w, "PEP_PSM {} {} {:.8e}", e.pep, e.psm, e.e)?;
        }
        Ok(())
    }
}

/// Partition proteins by exact peptide-set equality. Groups come back
/// ordered by their lexicographically smallest member, members sorted.
pub fn group_proteins(map: &BipartiteMap, decoy_prefix: &str) -> (Vec<ProteinGroup>, GroupedMap) {
    assert!(!decoy_prefix.is_empty(), "decoy prefix must be non-empty");
    let mut buckets: BTreeMap<&BTreeSet<String>, Vec<&str>> = BTreeMap::new();
    for (protein, peps) in &map.protein_to_peptides {
        // Iteration is in sorted protein order, so members stay sorted.
        buckets.entry(peps).or_default().push(protein);
    }
    let mut raw: Vec<(Vec<&str>, &BTreeSet<String>)> = buckets
        .into_iter()
        .map(|(peps, members)| (members, peps))
        .collect();
    raw.sort_by(|a, b| a.0[0].cmp(b.0[0]));

    let mut groups = Vec::with_capacity(raw.len());
    let mut grouped = GroupedMap::default();
    for (group_id, (members, peps)) in raw.into_iter().enumerate() {
        let is_decoy = members.iter().all(|m| m.starts_with(decoy_prefix));
        for pep in peps.iter() {
            grouped
                .peptide_to_groups
                .entry(pep.clone())
                .or_default()
                .insert(group_id);
        }
        grouped.group_to_peptides.push(peps.clone());
        groups.push(ProteinGroup {
            members: members.into_iter().map(String::from).collect(),
            is_decoy,
            group_id,
        });
    }
    (groups, grouped)
}

/// Per-peptide identification score: the maximum of 1 − pep over the
/// peptide's PSMs.
pub fn peptide_scores(table: &PsmTable) -> Result<BTreeMap<String, f64>, GraphError> {
    let pep_col = table.pep_index().ok_or(GraphError::MissingPepColumn)?;
    let mut d: BTreeMap<String, f64> = BTreeMap::new();
    for rec in &table.records {
        let score = 1.0 - rec.features[pep_col];
        let entry = d.entry(rec.peptide.clone()).or_insert(score);
        if score > *entry {
            *entry = score;
        }
    }
    Ok(d)
}

/// Count of peptides incident to group `k` whose identification score
/// strictly exceeds `epsilon` — a proxy for how well-supported the
/// group is when peptides must pick one owner.
pub fn surrogate_score(
    k: usize,
    grouped: &GroupedMap,
    d: &BTreeMap<String, f64>,
    epsilon: f64,
) -> Result<usize, GraphError> {
    let peps = grouped
        .group_to_peptides
        .get(k)
        .ok_or(GraphError::UnknownGroup {
            index: k,
            count: grouped.group_to_peptides.len(),
        })?;
    let mut f = 0;
    for pep in peps {
        let score = d
            .get(pep)
            .copied()
            .ok_or_else(|| GraphError::MissingPeptideScore {
                peptide: pep.clone(),
            })?;
        if score > epsilon {
            f += 1;
        }
    }
    Ok(f)
}

/// Sharing attribute for every (peptide, group) pair: the incident
/// group with the highest surrogate score gets 1/|C| where C is the
/// peptide's group set; the others get 0. Ties go to the lowest group
/// index.
pub fn edge_attrs(
    grouped: &GroupedMap,
    d: &BTreeMap<String, f64>,
    config: &GraphBuildConfig,
) -> Result<BTreeMap<String, Vec<(usize, f64)>>, GraphError> {
    if !(0.0..=1.0).contains(&config.epsilon) {
        return Err(GraphError::EpsilonOutOfRange {
            value: config.epsilon,
        });
    }
    let n_groups = grouped.group_to_peptides.len();
    let mut f = Vec::with_capacity(n_groups);
    for k in 0..n_groups {
        f.push(surrogate_score(k, grouped, d, config.epsilon)?);
    }
    let mut attrs = BTreeMap::new();
    for (pep, groups) in &grouped.peptide_to_groups {
        let c = groups.len();
        // Ascending group order plus strict > implements the
        // lowest-index tie break.
        let TieBreak::LowestGroupId = config.tie_break;
        let mut winner = None;
        let mut best = 0;
        for &k in groups {
            if winner.is_none() || f[k] > best {
                winner = Some(k);
                best = f[k];
            }
        }
        let winner = winner.expect("peptide with no groups");
        let row: Vec<(usize, f64)> = groups
            .iter()
            .map(|&k| (k, if k == winner { 1.0 / c as f64 } else { 0.0 }))
            .collect();
        attrs.insert(pep.clone(), row);
    }
    Ok(attrs)
}

/// Assemble the full graph from a parsed, decoy-labeled, standardized
/// table.
pub fn build_graph(table: &PsmTable, config: &GraphBuildConfig) -> Result<TripartiteGraph, GraphError> {
    config.validate()?;
    if table.records.is_empty() {
        return Err(GraphError::EmptyTable);
    }
    let pep_col = table.pep_index().ok_or(GraphError::MissingPepColumn)?;
    let map = crate::psm::peptide_protein_map(table);
    let (groups, grouped) = group_proteins(&map, &config.decoy_prefix);
    let d = peptide_scores(table)?;
    let attrs = edge_attrs(&grouped, &d, config)?;

    // Peptide index = rank in sorted order; the grouped map's BTreeMap
    // keys already iterate in exactly that order.
    let peptides: Vec<String> = grouped.peptide_to_groups.keys().cloned().collect();
    let pep_index: BTreeMap<&str, usize> = peptides
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();

    let mut pro_pep_edges = Vec::new();
    for (pep, row) in &attrs {
        let u = pep_index[pep.as_str()];
        for &(k, s) in row {
            pro_pep_edges.push(ProPepEdge { group: k, pep: u, s });
        }
    }
    pro_pep_edges.sort_by_key(|e| (e.group, e.pep));

    let n_psm = table.records.len();
    let dim = table.feature_names.len();
    let mut psm_ids = Vec::with_capacity(n_psm);
    let mut pep_psm_edges = Vec::with_capacity(n_psm);
    let mut features = Mat::zeros(n_psm, dim);
    for (m, rec) in table.records.iter().enumerate() {
        psm_ids.push(rec.spec_id.clone());
        pep_psm_edges.push(PepPsmEdge {
            pep: pep_index[rec.peptide.as_str()],
            psm: m,
            e: 1.0 - rec.features[pep_col],
        });
        features.row_mut(m).copy_from_slice(&rec.features);
    }
    pep_psm_edges.sort_by_key(|e| (e.pep, e.psm));

    let pep_max_score: Vec<f64> = peptides.iter().map(|p| d[p]).collect();

    let graph = TripartiteGraph {
        groups,
        peptides,
        psm_ids,
        pro_pep_edges,
        pep_psm_edges,
        psm_features: features,
        pep_max_score,
    };
    graph.validate()?;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psm::{detect_decoys, Label, PsmRecord};
    use proptest::prelude::*;

    /// Table with a lone `pep` feature column, one row per (peptide,
    /// proteins, pep) triple.
    fn table(rows: &[(&str, &[&str], f64)]) -> PsmTable {
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, (peptide, proteins, pep))| PsmRecord {
                spec_id: format!("s{i}"),
                label: Label::Target,
                scan_nr: i as i64,
                features: vec![*pep],
                peptide: peptide.to_string(),
                proteins: proteins.iter().map(|p| p.to_string()).collect(),
            })
            .collect();
        let mut t = PsmTable {
            feature_names: vec!["pep".to_string()],
            records,
            decoy_prefix: "DECOY_".to_string(),
        };
        detect_decoys(&mut t).unwrap();
        t
    }

    fn grouped_of(rows: &[(&str, &[&str], f64)]) -> (Vec<ProteinGroup>, GroupedMap) {
        let t = table(rows);
        let map = crate::psm::peptide_protein_map(&t);
        group_proteins(&map, "DECOY_")
    }

    #[test]
    fn identical_peptide_sets_merge() {
        let (groups, grouped) = grouped_of(&[
            ("p1", &["A", "B"], 0.1),
            ("p2", &["A", "B", "C"], 0.1),
        ]);
        // A and B see {p1, p2}; C sees only {p2}.
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].members, vec!["A", "B"]);
        assert_eq!(groups[1].members, vec!["C"]);
        assert_eq!(groups[0].group_id, 0);
        assert_eq!(groups[1].group_id, 1);
        assert_eq!(
            grouped.peptide_to_groups["p1"],
            BTreeSet::from([0])
        );
        assert_eq!(
            grouped.peptide_to_groups["p2"],
            BTreeSet::from([0, 1])
        );
    }

    #[test]
    fn distinct_sets_stay_separate() {
        let (groups, _) = grouped_of(&[("p1", &["A"], 0.1), ("p2", &["B"], 0.1)]);
        assert_eq!(groups.len(), 2);
        assert!(groups.iter().all(|g| g.members.len() == 1));
    }

    #[test]
    fn mixed_decoy_group_is_target() {
        let (groups, _) = grouped_of(&[("p1", &["B", "DECOY_A"], 0.1)]);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].members, vec!["B", "DECOY_A"]);
        assert!(!groups[0].is_decoy);
        let (groups, _) = grouped_of(&[("p1", &["DECOY_A", "DECOY_B"], 0.1)]);
        assert!(groups[0].is_decoy);
    }

    #[test]
    fn peptide_score_is_best_psm() {
        let t = table(&[
            ("p1", &["A"], 0.2),
            ("p1", &["A"], 0.05),
            ("p2", &["A"], 0.0),
            ("p3", &["A"], 1.0),
        ]);
        let d = peptide_scores(&t).unwrap();
        assert_eq!(d["p1"], 0.95);
        assert_eq!(d["p2"], 1.0);
        assert_eq!(d["p3"], 0.0);
    }

    #[test]
    fn surrogate_counts_strictly_above_epsilon() {
        let rows = [
            ("p1", ["A"].as_slice(), 0.05),
            ("p2", ["A"].as_slice(), 0.09),
            ("p3", ["A"].as_slice(), 0.5),
        ];
        let t = table(&rows);
        let (_, grouped) = grouped_of(&rows);
        let d = peptide_scores(&t).unwrap();
        // d = {0.95, 0.91, 0.5}, epsilon 0.9 → two count.
        assert_eq!(surrogate_score(0, &grouped, &d, 0.9).unwrap(), 2);
        // d exactly equal to epsilon is excluded by strictness: 0.5 is
        // exact in binary, so only 0.95 and 0.91 count.
        assert_eq!(d["p3"], 0.5);
        assert_eq!(surrogate_score(0, &grouped, &d, 0.5).unwrap(), 2);
        // Nothing clears epsilon = 1.
        assert_eq!(surrogate_score(0, &grouped, &d, 1.0).unwrap(), 0);
        assert!(matches!(
            surrogate_score(7, &grouped, &d, 0.9),
            Err(GraphError::UnknownGroup { index: 7, count: 1 })
        ));
    }

    #[test]
    fn sole_group_takes_full_weight() {
        let rows = [("p1", ["A"].as_slice(), 0.5)];
        let t = table(&rows);
        let (_, grouped) = grouped_of(&rows);
        let d = peptide_scores(&t).unwrap();
        let attrs = edge_attrs(&grouped, &d, &GraphBuildConfig::default()).unwrap();
        assert_eq!(attrs["p1"], vec![(0, 1.0)]);
    }

    #[test]
    fn shared_peptide_goes_to_better_supported_group() {
        // Group A owns three strong private peptides, group B one;
        // the shared peptide s splits its weight to A.
        let rows = [
            ("a1", ["A"].as_slice(), 0.01),
            ("a2", ["A"].as_slice(), 0.01),
            ("a3", ["A"].as_slice(), 0.01),
            ("b1", ["B"].as_slice(), 0.01),
            ("s", ["A", "B"].as_slice(), 0.01),
        ];
        let t = table(&rows);
        let (groups, grouped) = grouped_of(&rows);
        assert_eq!(groups[0].members, vec!["A"]);
        let d = peptide_scores(&t).unwrap();
        // f(A) = 4, f(B) = 2 (shared peptide counts for both).
        assert_eq!(surrogate_score(0, &grouped, &d, 0.9).unwrap(), 4);
        assert_eq!(surrogate_score(1, &grouped, &d, 0.9).unwrap(), 2);
        let attrs = edge_attrs(&grouped, &d, &GraphBuildConfig::default()).unwrap();
        assert_eq!(attrs["s"], vec![(0, 0.5), (1, 0.0)]);
    }

    #[test]
    fn all_tied_groups_give_lowest_id_the_weight() {
        let rows = [
            ("s", ["A", "B", "C"].as_slice(), 0.5), // d = 0.5, below epsilon
        ];
        let t = table(&rows);
        let (_, grouped) = grouped_of(&rows);
        let d = peptide_scores(&t).unwrap();
        let attrs = edge_attrs(&grouped, &d, &GraphBuildConfig::default()).unwrap();
        // With only the shared peptide, A, B, C have identical
        // connectivity and merge into one group.
        assert_eq!(attrs["s"].len(), 1);
        // Private peptides keep them apart; all surrogate scores are 0
        // (every d ≤ epsilon), so the tie goes to group 0 with |C| = 3.
        let rows = [
            ("a", ["A"].as_slice(), 0.5),
            ("b", ["B"].as_slice(), 0.5),
            ("c", ["C"].as_slice(), 0.5),
            ("s", ["A", "B", "C"].as_slice(), 0.5),
        ];
        let t = table(&rows);
        let (_, grouped) = grouped_of(&rows);
        let d = peptide_scores(&t).unwrap();
        let attrs = edge_attrs(&grouped, &d, &GraphBuildConfig::default()).unwrap();
        assert_eq!(attrs["s"], vec![(0, 1.0 / 3.0), (1, 0.0), (2, 0.0)]);
    }

    #[test]
    fn smallest_legal_graph() {
        let g = build_graph(&table(&[("p1", &["A"], 0.1)]), &GraphBuildConfig::default()).unwrap();
        assert_eq!((g.n_pro(), g.n_pep(), g.n_psm()), (1, 1, 1));
        assert_eq!(g.pro_pep_edges, vec![ProPepEdge { group: 0, pep: 0, s: 1.0 }]);
        assert_eq!(g.pep_psm_edges, vec![PepPsmEdge { pep: 0, psm: 0, e: 0.9 }]);
        assert_eq!(g.pep_max_score, vec![0.9]);
    }

    #[test]
    fn one_protein_fan_out_counts() {
        // One protein with three peptides; peptides carry 2, 1, 1 PSMs.
        let g = build_graph(
            &table(&[
                ("p1", &["A"], 0.1),
                ("p1", &["A"], 0.3),
                ("p2", &["A"], 0.2),
                ("p3", &["A"], 0.4),
            ]),
            &GraphBuildConfig::default(),
        )
        .unwrap();
        assert_eq!((g.n_pro(), g.n_pep(), g.n_psm()), (1, 3, 4));
        assert_eq!(g.pro_pep_edges.len(), 3);
        assert_eq!(g.pep_psm_edges.len(), 4);
        // Every peptide owned by the sole group with S = 1.
        assert!(g.pro_pep_edges.iter().all(|e| e.s == 1.0));
        assert_eq!(g.pep_max_score, vec![0.9, 0.8, 0.6]);
    }

    #[test]
    fn decoy_only_table_builds() {
        let g = build_graph(
            &table(&[("p1", &["DECOY_A"], 0.1), ("p2", &["DECOY_B"], 0.2)]),
            &GraphBuildConfig::default(),
        )
        .unwrap();
        assert!(g.groups.iter().all(|gr| gr.is_decoy));
        g.validate().unwrap();
    }

    #[test]
    fn empty_table_is_an_error() {
        assert!(matches!(
            build_graph(&table(&[]), &GraphBuildConfig::default()),
            Err(GraphError::EmptyTable)
        ));
    }

    #[test]
    fn epsilon_bounds_checked() {
        let cfg = GraphBuildConfig {
            epsilon: 1.5,
            ..Default::default()
        };
        assert!(matches!(
            build_graph(&table(&[("p", &["A"], 0.1)]), &cfg),
            Err(GraphError::EpsilonOutOfRange { .. })
        ));
    }

    #[test]
    fn dump_is_deterministic() {
        let rows = [
            ("p1", ["A", "B"].as_slice(), 0.1),
            ("p2", ["B"].as_slice(), 0.02),
            ("p3", ["DECOY_C"].as_slice(), 0.7),
        ];
        let cfg = GraphBuildConfig::default();
        let mut a = Vec::new();
        build_graph(&table(&rows), &cfg).unwrap().dump(&mut a).unwrap();
        let mut b = Vec::new();
        build_graph(&table(&rows), &cfg).unwrap().dump(&mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains("PRO_PEP "));
        assert!(text.contains("PEP_PSM "));
    }

    #[test]
    fn psm_order_does_not_change_structure() {
        let fwd = [
            ("p1", ["A", "B"].as_slice(), 0.1),
            ("p2", ["B"].as_slice(), 0.02),
            ("p1", ["A", "B"].as_slice(), 0.25),
        ];
        let mut rev = fwd;
        rev.reverse();
        let cfg = GraphBuildConfig::default();
        let ga = build_graph(&table(&fwd), &cfg).unwrap();
        let gb = build_graph(&table(&rev), &cfg).unwrap();
        assert_eq!(ga.groups, gb.groups);
        assert_eq!(ga.peptides, gb.peptides);
        assert_eq!(ga.pro_pep_edges, gb.pro_pep_edges);
        // PSM indices move; the multiset of (peptide, weight) pairs
        // must not.
        let key = |g: &TripartiteGraph| {
            let mut v: Vec<(usize, u64)> = g
                .pep_psm_edges
                .iter()
                .map(|e| (e.pep, e.e.to_bits()))
                .collect();
            v.sort_unstable();
            v
        };
        assert_eq!(key(&ga), key(&gb));
    }

    proptest! {
        /// Grouping must agree with brute-force pairwise peptide-set
        /// comparison.
        #[test]
        fn grouping_matches_pairwise_oracle(
            assignments in proptest::collection::vec((0u8..6, 0u8..6), 1..40)
        ) {
            let rows: Vec<(String, Vec<String>, f64)> = assignments
                .iter()
                .map(|(pep, prot)| (format!("pep{pep}"), vec![format!("P{prot}")], 0.1))
                .collect();
            let t = {
                let records = rows
                    .iter()
                    .enumerate()
                    .map(|(i, (peptide, proteins, pep))| PsmRecord {
                        spec_id: format!("s{i}"),
                        label: Label::Target,
                        scan_nr: i as i64,
                        features: vec![*pep],
                        peptide: peptide.clone(),
                        proteins: proteins.clone(),
                    })
                    .collect();
                PsmTable {
                    feature_names: vec!["pep".to_string()],
                    records,
                    decoy_prefix: "DECOY_".to_string(),
                }
            };
            let map = crate::psm::peptide_protein_map(&t);
            let (groups, _) = group_proteins(&map, "DECOY_");
            // Oracle: same group iff identical peptide sets.
            for ga in &groups {
                for gb in &groups {
                    for a in &ga.members {
                        for b in &gb.members {
                            let same_set =
                                map.protein_to_peptides[a] == map.protein_to_peptides[b];
                            let same_group = ga.group_id == gb.group_id;
                            prop_assert_eq!(same_set, same_group,
                                "{} vs {}", a, b);
                        }
                    }
                }
            }
        }

        /// Σ_v S_uv is 1/|C| with at most one nonzero, for every peptide.
        #[test]
        fn s_row_property(
            links in proptest::collection::vec((0u8..8, proptest::collection::btree_set(0u8..6, 1..4), 0.0f64..=0.5), 1..30)
        ) {
            let rows: Vec<(String, Vec<String>, f64)> = links
                .iter()
                .map(|(pep, prots, pepscore)| {
                    (
                        format!("pep{pep}"),
                        prots.iter().map(|p| format!("P{p}")).collect(),
                        *pepscore,
                    )
                })
                .collect();
            let records = rows
                .iter()
                .enumerate()
                .map(|(i, (peptide, proteins, pep))| PsmRecord {
                    spec_id: format!("s{i}"),
                    label: Label::Target,
                    scan_nr: i as i64,
                    features: vec![*pep],
                    peptide: peptide.clone(),
                    proteins: proteins.clone(),
                })
                .collect();
            let t = PsmTable {
                feature_names: vec!["pep".to_string()],
                records,
                decoy_prefix: "DECOY_".to_string(),
            };
            let g = build_graph(&t, &GraphBuildConfig::default()).unwrap();
            for u in 0..g.n_pep() {
                let row: Vec<f64> = g
                    .pro_pep_edges
                    .iter()
                    .filter(|e| e.pep == u)
                    .map(|e| e.s)
                    .collect();
                let nonzero = row.iter().filter(|&&s| s != 0.0).count();
                prop_assert!(nonzero <= 1);
                let sum: f64 = row.iter().sum();
                prop_assert!(sum == 0.0 || sum == 1.0 / row.len() as f64);
            }
        }
    }
}
