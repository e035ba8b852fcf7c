//! Pseudo-label self-training: label generation from score rankings,
//! per-round training with validation-based snapshot selection, and
//! ensemble scoring.
//!
//! Each round trains a freshly initialized model on labels derived
//! from the previous round's scores (round one uses externally
//! supplied base scores); the final score is the mean of all round
//! models' probabilities. Decoy groups are always labeled negative, no
//! matter what any score ranking says.

use thiserror::Error;

use crate::eval::{qvalues_from_scores, EvalError, ScoreRow, ScoreTable, TruthFlag};
use crate::graph::TripartiteGraph;
use crate::nn::{
    adam_step, backward, bce_loss, forward, init_params, AdamState, Adjacency, ModelParams,
    NetConfig, NnError,
};
use crate::psm::FeatureStats;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("no graphs supplied")]
    NoGraphs,
    #[error("{labels} label sets for {graphs} graphs")]
    LabelCount { labels: usize, graphs: usize },
    #[error("label set {index} covers {labels} groups, graph has {groups}")]
    LabelSize {
        index: usize,
        labels: usize,
        groups: usize,
    },
    #[error("graphs disagree on feature dimension: {first} vs {other}")]
    FeatureDim { first: usize, other: usize },
    #[error("no score for group(s): {}", .missing.join(", "))]
    MissingScores { missing: Vec<String> },
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Per-group labels plus the train/validation split for one graph.
/// The two masks partition the groups: a group is either validation
/// or training.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub labels: Vec<u8>,
    pub is_validation: Vec<bool>,
    pub provenance: String,
}

/// Round models with the preprocessing they were trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEnsemble {
    pub net: NetConfig,
    pub stats: FeatureStats,
    pub members: Vec<ModelParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRunConfig {
    pub net: NetConfig,
    pub fdr_threshold: f64,
    pub rounds: usize,
    pub validation_fraction: f64,
    pub patience: usize,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        TrainRunConfig {
            net: NetConfig::default(),
            fdr_threshold: 0.05,
            rounds: 10,
            validation_fraction: 0.1,
            patience: 50,
        }
    }
}

impl TrainRunConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::BadConfig(msg));
        if !(self.fdr_threshold > 0.0 && self.fdr_threshold < 1.0) {
            return bad(format!("FDR threshold {} outside (0, 1)", self.fdr_threshold));
        }
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad(format!(
                "validation fraction {} outside [0, 1)",
                self.validation_fraction
            ));
        }
        if self.net.max_epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.net.layers == 0 || self.net.hidden == 0 {
            return bad("layers and hidden width must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundLogEntry {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Everything one self-training round leaves behind for audit.
#[derive(Debug, Clone)]
pub struct RoundArtifacts {
    pub round: usize,
    pub labels: Vec<LabelSet>,
    pub log: Vec<RoundLogEntry>,
    pub warnings: Vec<String>,
    pub params: ModelParams,
}

#[derive(Debug, Clone)]
pub struct SelfTrainOutput {
    pub ensemble: ModelEnsemble,
    pub rounds: Vec<RoundArtifacts>,
}

/// Stable lookup key for a protein group: its sorted members joined
/// with semicolons. Used to match external score rows to graph groups.
pub fn group_key(graph: &TripartiteGraph, group: usize) -> String {
    graph.groups[group].members.join(";")
}

/// Score table for a graph from per-group scores, keyed by group
/// members. Truth flags start unknown; q-values unset.
pub fn score_table(graph: &TripartiteGraph, scores: &[f64]) -> ScoreTable {
    ScoreTable {
        rows: graph
            .groups
            .iter()
            .zip(scores)
            .map(|(g, &s)| ScoreRow {
                group_id: g.members.join(";"),
                members: g.members.clone(),
                score: s,
                is_decoy: g.is_decoy,
                truth: TruthFlag::Unknown,
                q_value: None,
            })
            .collect(),
    }
}

fn fnv1a64(seed: u64, key: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in seed.to_le_bytes().iter().chain(key.as_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Labels from a score ranking: targets at decoy q-value ≤ threshold
/// become positives, everything else — decoys unconditionally —
/// negative. The validation split hashes group keys with the seed and
/// is nudged so each label class lands on both sides when its count
/// allows.
pub fn pseudo_labels(
    graph: &TripartiteGraph,
    scores: &ScoreTable,
    fdr_threshold: f64,
    validation_fraction: f64,
    seed: u64,
    provenance: &str,
) -> Result<LabelSet, TrainError> {
    let by_key: std::collections::BTreeMap<&str, f64> = scores
        .rows
        .iter()
        .map(|r| (r.group_id.as_str(), r.score))
        .collect();
    let mut group_scores = Vec::with_capacity(graph.n_pro());
    let mut missing = Vec::new();
    for g in 0..graph.n_pro() {
        let key = group_key(graph, g);
        match by_key.get(key.as_str()) {
            Some(&s) => group_scores.push(s),
            None => missing.push(key),
        }
    }
    if !missing.is_empty() {
        return Err(TrainError::MissingScores { missing });
    }
    let decoy: Vec<bool> = graph.groups.iter().map(|g| g.is_decoy).collect();
    let q = qvalues_from_scores(&group_scores, &decoy)?;
    let labels: Vec<u8> = q
        .iter()
        .zip(&decoy)
        .map(|(&q, &d)| (!d && q <= fdr_threshold) as u8)
        .collect();

    let hashes: Vec<u64> = (0..graph.n_pro())
        .map(|g| fnv1a64(seed, &group_key(graph, g)))
        .collect();
    let cut = (validation_fraction * u64::MAX as f64) as u64;
    let mut is_validation: Vec<bool> = hashes.iter().map(|&h| h < cut).collect();
    for class in [0u8, 1u8] {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.iter().all(|&i| is_validation[i]) {
            let pick = members.iter().copied().min_by_key(|&i| (hashes[i], i)).unwrap();
            is_validation[pick] = false;
        }
        if members.len() >= 2 && members.iter().all(|&i| !is_validation[i]) && cut > 0 {
            let pick = members.iter().copied().max_by_key(|&i| (hashes[i], i)).unwrap();
            is_validation[pick] = true;
        }
    }
    Ok(LabelSet {
        labels,
        is_validation,
        provenance: provenance.to_string(),
    })
}

fn check_inputs(graphs: &[TripartiteGraph], labels: &[LabelSet]) -> Result<usize, TrainError> {
    if graphs.is_empty() {
        return Err(TrainError::NoGraphs);
    }
    if labels.len() != graphs.len() {
        return Err(TrainError::LabelCount {
            labels: labels.len(),
            graphs: graphs.len(),
        });
    }
    let feature_dim = graphs[0].feature_dim();
    for (i, (g, l)) in graphs.iter().zip(labels).enumerate() {
        if l.labels.len() != g.n_pro() || l.is_validation.len() != g.n_pro() {
            return Err(TrainError::LabelSize {
                index: i,
                labels: l.labels.len(),
                groups: g.n_pro(),
            });
        }
        if g.feature_dim() != feature_dim {
            return Err(TrainError::FeatureDim {
                first: feature_dim,
                other: g.feature_dim(),
            });
        }
    }
    Ok(feature_dim)
}

/// Train one model: an epoch takes one optimizer step per graph on its
/// training mask, validation loss is measured after each epoch, and
/// the parameters with the best validation loss are returned. Stops
/// once `patience` epochs pass without improvement.
pub fn train_round(
    graphs: &[TripartiteGraph],
    labels: &[LabelSet],
    config: &TrainRunConfig,
    seed: u64,
) -> Result<(ModelParams, Vec<RoundLogEntry>, Vec<String>), TrainError> {
    config.validate()?;
    let feature_dim = check_inputs(graphs, labels)?;

    let mut warnings = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        let train_labels: Vec<u8> = l
            .labels
            .iter()
            .zip(&l.is_validation)
            .filter(|&(_, &v)| !v)
            .map(|(&y, _)| y)
            .collect();
        if train_labels.is_empty() {
            warnings.push(format!("graph {i}: empty training mask, no updates from it"));
        } else if train_labels.iter().all(|&y| y == train_labels[0]) {
            warnings.push(format!(
                "graph {i}: single-class training mask (all {})",
                train_labels[0]
            ));
        }
    }
    let any_validation = labels
        .iter()
        .any(|l| l.is_validation.iter().any(|&v| v));
    if !any_validation {
        warnings.push("no validation groups anywhere; selecting on training loss".to_string());
    }

    let adjacency: Vec<Adjacency> = graphs.iter().map(Adjacency::build).collect();
    let mut params = init_params(&config.net, feature_dim, seed);
    let mut adam = AdamState::new(&params);
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut log = Vec::new();

    for epoch in 1..=config.net.max_epochs {
        let mut train_sum = 0.0;
        let mut train_graphs = 0usize;
        for (g, graph) in graphs.iter().enumerate() {
            let train_mask: Vec<bool> = labels[g].is_validation.iter().map(|&v| !v).collect();
            if !train_mask.iter().any(|&m| m) {
                continue;
            }
            let trace = forward(graph, &params)?;
            let (loss, dlogits) = bce_loss(&trace.logits, &labels[g].labels, &train_mask)?;
            let grads = backward(graph, &adjacency[g], &params, &trace, &dlogits)?;
            adam_step(&mut params, &grads, &mut adam, config.net.learning_rate)?;
            train_sum += loss;
            train_graphs += 1;
        }
        let train_loss = train_sum / train_graphs.max(1) as f64;

        let mut val_sum = 0.0;
        let mut val_graphs = 0usize;
        for (g, graph) in graphs.iter().enumerate() {
            if !labels[g].is_validation.iter().any(|&v| v) {
                continue;
            }
            let trace = forward(graph, &params)?;
            let (loss, _) = bce_loss(&trace.logits, &labels[g].labels, &labels[g].is_validation)?;
            val_sum += loss;
            val_graphs += 1;
        }
        let val_loss = if val_graphs > 0 {
            val_sum / val_graphs as f64
        } else {
            train_loss
        };
        log.push(RoundLogEntry {
            epoch,
            train_loss,
            val_loss,
        });

        let improved = best.as_ref().map_or(true, |&(b, _, _)| val_loss < b);
        if improved {
            best = Some((val_loss, epoch, params.clone()));
        } else if epoch - best.as_ref().unwrap().1 > config.patience {
            break;
        }
    }

    let (_, _, best_params) = best.expect("at least one epoch ran");
    Ok((best_params, log, warnings))
}

/// Protein probabilities from a single model.
pub fn model_scores(params: &ModelParams, graph: &TripartiteGraph) -> Result<Vec<f64>, TrainError> {
    Ok(forward(graph, params)?.probs)
}

/// Mean of member probabilities per group.
pub fn ensemble_score(
    ensemble: &ModelEnsemble,
    graph: &TripartiteGraph,
) -> Result<Vec<f64>, TrainError> {
    if ensemble.members.is_empty() {
        return Err(TrainError::BadConfig("empty ensemble".into()));
    }
    let mut acc = vec![0.0; graph.n_pro()];
    for member in &ensemble.members {
        let probs = model_scores(member, graph)?;
        for (a, p) in acc.iter_mut().zip(probs) {
            *a += p;
        }
    }
    for a in &mut acc {
        *a /= ensemble.members.len() as f64;
    }
    Ok(acc)
}

/// Weak closed-form scorer used when no external base scores exist:
/// per group, one minus the product over its peptides of
/// (1 − S_uv · d_u), i.e. the chance that at least one credited
/// peptide is real if credited weights were independent detection
/// probabilities. A stand-in only — real runs should feed scores from
/// an established inference tool.
pub fn baseline_scores(graph: &TripartiteGraph) -> ScoreTable {
    let mut miss = vec![1.0; graph.n_pro()];
    for e in &graph.pro_pep_edges {
        miss[e.group] *= 1.0 - e.s * graph.pep_max_score[e.pep];
    }
    let scores: Vec<f64> = miss.into_iter().map(|m| 1.0 - m).collect();
    score_table(graph, &scores)
}

/// Run `rounds` rounds of pseudo-label self-training. Round one labels
/// from `base_scores`; each later round relabels every graph with the
/// previous round's model and retrains from a fresh seed. All round
/// artifacts are kept for audit.
pub fn self_train(
    graphs: &[TripartiteGraph],
    base_scores: &[ScoreTable],
    stats: &FeatureStats,
    config: &TrainRunConfig,
) -> Result<SelfTrainOutput, TrainError> {
    config.validate()?;
    if graphs.is_empty() {
        return Err(TrainError::NoGraphs);
    }
    if base_scores.len() != graphs.len() {
        return Err(TrainError::LabelCount {
            labels: base_scores.len(),
            graphs: graphs.len(),
        });
    }

    let label_from = |tables: &[ScoreTable], provenance: &str| -> Result<Vec<LabelSet>, TrainError> {
        graphs
            .iter()
            .zip(tables)
            .map(|(graph, scores)| {
                pseudo_labels(
                    graph,
                    scores,
                    config.fdr_threshold,
                    config.validation_fraction,
                    config.net.seed,
                    provenance,
                )
            })
            .collect()
    };

    let mut labels = label_from(base_scores, "base-model")?;
    let mut rounds = Vec::new();
    let mut members = Vec::new();
    for round in 1..=config.rounds {
        let seed = config.net.seed + round as u64;
        let (params, log, warnings) = train_round(graphs, &labels, config, seed)?;
        if round < config.rounds {
            let tables: Vec<ScoreTable> = graphs
                .iter()
                .map(|graph| Ok(score_table(graph, &model_scores(&params, graph)?)))
                .collect::<Result<_, TrainError>>()?;
            let next = label_from(&tables, &format!("self-round-{round}"))?;
            rounds.push(RoundArtifacts {
                round,
                labels: std::mem::replace(&mut labels, next),
                log,
                warnings,
                params: params.clone(),
            });
        } else {
            rounds.push(RoundArtifacts {
                round,
                labels: labels.clone(),
                log,
                warnings,
                params: params.clone(),
            });
        }
        members.push(params);
    }
    Ok(SelfTrainOutput {
        ensemble: ModelEnsemble {
            net: config.net.clone(),
            stats: stats.clone(),
            members,
        },
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, GraphBuildConfig};
    use crate::psm::standardize_features;
    use crate::synth::{generate, SynthConfig};

    fn planted(seed: u64) -> (TripartiteGraph, FeatureStats) {
        let config = SynthConfig {
            n_true: 12,
            n_entrapment: 12,
            seed,
            ..SynthConfig::default()
        };
        let (mut table, _) = generate(&config).unwrap();
        let stats = standardize_features(&mut table).unwrap();
        let graph = build_graph(&table, &GraphBuildConfig::default()).unwrap();
        (graph, stats)
    }

    fn quick_config(rounds: usize, epochs: usize) -> TrainRunConfig {
        TrainRunConfig {
            net: NetConfig {
                layers: 2,
                hidden: 8,
                learning_rate: 0.01,
                seed: 7,
                max_epochs: epochs,
            },
            rounds,
            ..TrainRunConfig::default()
        }
    }

    #[test]
    fn decoy_with_top_score_still_negative() {
        let (graph, _) = planted(1);
        let mut scores = vec![0.1; graph.n_pro()];
        let decoy = graph.groups.iter().position(|g| g.is_decoy).unwrap();
        scores[decoy] = 0.99;
        let set =
            pseudo_labels(&graph, &score_table(&graph, &scores), 0.5, 0.1, 1, "base-model")
                .unwrap();
        assert_eq!(set.labels[decoy], 0);
    }

    #[test]
    fn confident_targets_above_lone_decoy_labeled_positive() {
        let (graph, _) = planted(2);
        // Rank every target above every decoy: q = 0 for all targets.
        let scores: Vec<f64> = graph
            .groups
            .iter()
            .map(|g| if g.is_decoy { 0.1 } else { 0.99 })
            .collect();
        let set =
            pseudo_labels(&graph, &score_table(&graph, &scores), 0.05, 0.1, 1, "base-model")
                .unwrap();
        for (g, l) in graph.groups.iter().zip(&set.labels) {
            assert_eq!(*l, !g.is_decoy as u8);
        }
    }

    #[test]
    fn all_tied_scores_label_together() {
        let config = SynthConfig {
            n_true: 12,
            n_entrapment: 12,
            decoy_fraction: 0.5,
            seed: 3,
            ..SynthConfig::default()
        };
        let (mut table, _) = generate(&config).unwrap();
        standardize_features(&mut table).unwrap();
        let graph = build_graph(&table, &GraphBuildConfig::default()).unwrap();
        let scores = vec![0.5; graph.n_pro()];
        let table = score_table(&graph, &scores);
        // One shared threshold: q is the overall decoy/target ratio
        // (1/2 here) for every group at once.
        let tight = pseudo_labels(&graph, &table, 0.05, 0.1, 1, "base-model").unwrap();
        assert!(tight.labels.iter().all(|&l| l == 0));
        // A threshold past that ratio flips every target on together.
        let loose = pseudo_labels(&graph, &table, 0.51, 0.1, 1, "base-model").unwrap();
        for (g, l) in graph.groups.iter().zip(&loose.labels) {
            assert_eq!(*l, !g.is_decoy as u8);
        }
    }

    #[test]
    fn missing_group_scores_are_listed() {
        let (graph, _) = planted(4);
        let mut table = score_table(&graph, &vec![0.5; graph.n_pro()]);
        let dropped = table.rows.remove(3);
        let err = pseudo_labels(&graph, &table, 0.05, 0.1, 1, "base-model").unwrap_err();
        match err {
            TrainError::MissingScores { missing } => {
                assert_eq!(missing, vec![dropped.group_id])
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn split_is_stratified_and_partitioned() {
        let (graph, _) = planted(5);
        let scores: Vec<f64> = graph
            .groups
            .iter()
            .map(|g| if g.is_decoy { 0.1 } else { 0.99 })
            .collect();
        let set =
            pseudo_labels(&graph, &score_table(&graph, &scores), 0.05, 0.1, 9, "base-model")
                .unwrap();
        assert_eq!(set.is_validation.len(), graph.n_pro());
        for class in [0u8, 1u8] {
            let idx: Vec<usize> =
                (0..set.labels.len()).filter(|&i| set.labels[i] == class).collect();
            if !idx.is_empty() {
                assert!(idx.iter().any(|&i| !set.is_validation[i]), "class {class} train side");
            }
            if idx.len() >= 2 {
                assert!(idx.iter().any(|&i| set.is_validation[i]), "class {class} val side");
            }
        }
    }

    #[test]
    fn train_round_is_deterministic() {
        let (graph, _) = planted(6);
        let base = baseline_scores(&graph);
        let config = quick_config(1, 5);
        let labels = vec![pseudo_labels(&graph, &base, 0.05, 0.1, 7, "base-model").unwrap()];
        let graphs = vec![graph];
        let run = || train_round(&graphs, &labels, &config, 11).unwrap().0;
        assert_eq!(run(), run());
    }

    #[test]
    fn degenerate_schedule_returns_first_epoch_snapshot() {
        let (graph, _) = planted(7);
        let base = baseline_scores(&graph);
        let mut config = quick_config(1, 1);
        config.patience = 0;
        let labels = vec![pseudo_labels(&graph, &base, 0.05, 0.1, 7, "base-model").unwrap()];
        let graphs = vec![graph];
        let (_, log, _) = train_round(&graphs, &labels, &config, 1).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].epoch, 1);
    }

    #[test]
    fn training_reduces_loss_on_planted_data() {
        let (graph, _) = planted(8);
        let base = baseline_scores(&graph);
        let config = quick_config(1, 60);
        let labels = vec![pseudo_labels(&graph, &base, 0.05, 0.1, 7, "base-model").unwrap()];
        let graphs = vec![graph];
        let (_, log, _) = train_round(&graphs, &labels, &config, 3).unwrap();
        let first = log.first().unwrap().train_loss;
        let last = log.last().unwrap().train_loss;
        assert!(last < first * 0.8, "train loss {first} -> {last}");
    }

    #[test]
    fn single_class_training_mask_warns_but_trains() {
        let (graph, _) = planted(9);
        let n = graph.n_pro();
        let labels = vec![LabelSet {
            labels: vec![0; n],
            is_validation: vec![false; n],
            provenance: "base-model".into(),
        }];
        let graphs = vec![graph];
        let (_, log, warnings) = train_round(&graphs, &labels, &quick_config(1, 3), 1).unwrap();
        assert!(warnings.iter().any(|w| w.contains("single-class")));
        assert_eq!(log.len(), 3);
    }

    #[test]
    fn ensemble_mean_of_half_scores_is_half() {
        let (graph, stats) = planted(10);
        let zero = ModelParams::zeros(4, graph.feature_dim(), 2);
        let ensemble = ModelEnsemble {
            net: NetConfig { hidden: 4, layers: 2, ..NetConfig::default() },
            stats,
            members: vec![zero.clone(), zero],
        };
        let scores = ensemble_score(&ensemble, &graph).unwrap();
        assert!(scores.iter().all(|&s| s == 0.5));
    }

    #[test]
    fn ensemble_mean_bounded_by_members() {
        let (graph, stats) = planted(11);
        let config = NetConfig { hidden: 6, layers: 2, ..NetConfig::default() };
        let members: Vec<ModelParams> = (0..3)
            .map(|i| init_params(&config, graph.feature_dim(), 100 + i))
            .collect();
        let per_member: Vec<Vec<f64>> = members
            .iter()
            .map(|m| model_scores(m, &graph).unwrap())
            .collect();
        let ensemble = ModelEnsemble {
            net: config,
            stats,
            members,
        };
        let mean = ensemble_score(&ensemble, &graph).unwrap();
        for g in 0..graph.n_pro() {
            let lo = per_member.iter().map(|s| s[g]).fold(f64::INFINITY, f64::min);
            let hi = per_member.iter().map(|s| s[g]).fold(f64::NEG_INFINITY, f64::max);
            assert!(lo <= mean[g] && mean[g] <= hi);
        }
    }

    #[test]
    fn baseline_credits_sole_peptide_fully() {
        // One protein, one peptide, one PSM with pep 0.1: S = 1 and
        // d = 0.9, so the baseline score is exactly 0.9.
        let pin = "SpecId\tLabel\tScanNr\tpep\tXCorr\tPeptide\tProteins\n\
                   s1\t1\t1\t0.1\t2.0\tK.AAAAAAA.R\tP1\n";
        let table = crate::psm::parse_pin(pin.as_bytes(), "DECOY_").unwrap();
        let graph = build_graph(&table, &GraphBuildConfig::default()).unwrap();
        let base = baseline_scores(&graph);
        assert_eq!(base.rows.len(), 1);
        assert!((base.rows[0].score - 0.9).abs() < 1e-12);
    }

    #[test]
    fn baseline_zero_weight_means_zero_score() {
        // Two proteins sharing one weak peptide plus a strong unique
        // peptide for the first: the shared group loses the credit
        // race everywhere it appears, leaving the second at zero.
        let pin = "SpecId\tLabel\tScanNr\tpep\tXCorr\tPeptide\tProteins\n\
                   s1\t1\t1\t0.05\t2.0\tK.AAAAAAA.R\tP1\n\
                   s2\t1\t2\t0.05\t2.0\tK.CCCCCCC.R\tP1\tP2\n";
        let table = crate::psm::parse_pin(pin.as_bytes(), "DECOY_").unwrap();
        let graph = build_graph(&table, &GraphBuildConfig::default()).unwrap();
        let base = baseline_scores(&graph);
        let p2 = base.rows.iter().find(|r| r.group_id == "P2").unwrap();
        assert_eq!(p2.score, 0.0);
        assert!(base.rows.iter().all(|r| (0.0..=1.0).contains(&r.score)));
    }

    #[test]
    fn self_train_single_round_matches_direct_training() {
        let (graph, stats) = planted(12);
        let base = baseline_scores(&graph);
        let config = quick_config(1, 5);
        let graphs = vec![graph];
        let out = self_train(&graphs, &[base.clone()], &stats, &config).unwrap();
        assert_eq!(out.ensemble.members.len(), 1);
        let labels = vec![pseudo_labels(
            &graphs[0],
            &base,
            config.fdr_threshold,
            config.validation_fraction,
            config.net.seed,
            "base-model",
        )
        .unwrap()];
        let (direct, _, _) = train_round(&graphs, &labels, &config, config.net.seed + 1).unwrap();
        assert_eq!(out.ensemble.members[0], direct);
    }

    #[test]
    fn self_train_rounds_audit_cleanly() {
        let (graph, stats) = planted(13);
        let base = baseline_scores(&graph);
        let config = quick_config(3, 4);
        let graphs = vec![graph];
        let out = self_train(&graphs, &[base], &stats, &config).unwrap();
        assert_eq!(out.rounds.len(), 3);
        assert_eq!(out.ensemble.members.len(), 3);
        // Distinct parameter sets per round (fresh seeds).
        assert_ne!(out.ensemble.members[0], out.ensemble.members[1]);
        assert_ne!(out.ensemble.members[1], out.ensemble.members[2]);
        // Provenance chains: round 1 from base, round i from round i-1.
        assert_eq!(out.rounds[0].labels[0].provenance, "base-model");
        assert_eq!(out.rounds[1].labels[0].provenance, "self-round-1");
        assert_eq!(out.rounds[2].labels[0].provenance, "self-round-2");
        // Decoys negative in every artifact.
        for round in &out.rounds {
            for (set, graph) in round.labels.iter().zip(&graphs) {
                for (g, &l) in graph.groups.iter().zip(&set.labels) {
                    assert!(!(g.is_decoy && l == 1), "decoy labeled positive");
                }
            }
        }
        // Relabeling audit: round 2's labels equal pseudo-labels from
        // round 1's recorded model, recomputed from scratch.
        let scores = score_table(
            &graphs[0],
            &model_scores(&out.rounds[0].params, &graphs[0]).unwrap(),
        );
        let expect = pseudo_labels(
            &graphs[0],
            &scores,
            config.fdr_threshold,
            config.validation_fraction,
            config.net.seed,
            "self-round-1",
        )
        .unwrap();
        assert_eq!(out.rounds[1].labels[0], expect);
    }

    #[test]
    fn self_train_is_deterministic() {
        let (graph, stats) = planted(14);
        let base = baseline_scores(&graph);
        let config = quick_config(2, 3);
        let graphs = vec![graph];
        let a = self_train(&graphs, &[base.clone()], &stats, &config).unwrap();
        let b = self_train(&graphs, &[base], &stats, &config).unwrap();
        assert_eq!(a.ensemble.members, b.ensemble.members);
    }

    #[test]
    fn zero_rounds_rejected() {
        let (graph, stats) = planted(15);
        let base = baseline_scores(&graph);
        let config = quick_config(0, 3);
        let err = self_train(&[graph], &[base], &stats, &config);
        assert!(matches!(err, Err(TrainError::BadConfig(_))));
    }
}
