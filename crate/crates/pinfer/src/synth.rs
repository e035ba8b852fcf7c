//! Synthetic PSM tables with planted ground truth.
//!
//! Generates a mixture of present ("true") proteins, entrapment
//! proteins absent from the sample, and decoys. Peptides of present
//! proteins draw low posterior error probabilities; entrapment-only
//! and decoy peptides draw high ones. A sharing rate wires a fraction
//! of peptides to a second parent protein so grouping and edge-weight
//! logic get exercised. Output parses as a standard PIN table.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta, Distribution, Normal};
use thiserror::Error;

use crate::eval::TruthFlag;
use crate::psm::{Label, PsmRecord, PsmTable};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthesis config: {0}")]
    BadConfig(String),
    #[error("I/O error")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Table(#[from] crate::psm::PsmError),
}

/// Planted status per generated non-decoy protein.
pub type GroundTruth = BTreeMap<String, TruthFlag>;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_true: usize,
    pub n_entrapment: usize,
    /// Uniform inclusive range of peptides per protein.
    pub peptides_per_protein: (usize, usize),
    /// Probability a peptide gains a second random parent.
    pub p_share: f64,
    /// Uniform inclusive range of PSMs per peptide.
    pub psms_per_peptide: (usize, usize),
    /// Beta(a, b) for pep of peptides with a present parent.
    pub present_pep: (f64, f64),
    /// Beta(a, b) for pep of entrapment-only and decoy peptides.
    pub absent_pep: (f64, f64),
    /// Decoy protein count as a fraction of target protein count.
    pub decoy_fraction: f64,
    pub decoy_prefix: String,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_true: 60,
            n_entrapment: 60,
            peptides_per_protein: (2, 4),
            p_share: 0.3,
            psms_per_peptide: (1, 3),
            present_pep: (1.0, 9.0),
            absent_pep: (9.0, 1.0),
            decoy_fraction: 1.0,
            decoy_prefix: "DECOY_".to_string(),
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::BadConfig(msg));
        if self.n_true + self.n_entrapment == 0 {
            return bad("need at least one non-decoy protein".into());
        }
        let (pmin, pmax) = self.peptides_per_protein;
        if pmax == 0 || pmin > pmax {
            return bad(format!("peptides per protein range {pmin}..={pmax} yields no peptides"));
        }
        let (smin, smax) = self.psms_per_peptide;
        if smin > smax {
            return bad(format!("PSMs per peptide range {smin}..={smax} is empty"));
        }
        if !(0.0..=1.0).contains(&self.p_share) {
            return bad(format!("sharing rate {} outside [0, 1]", self.p_share));
        }
        if !(0.0..=1.0).contains(&self.decoy_fraction) {
            return bad(format!("decoy fraction {} outside [0, 1]", self.decoy_fraction));
        }
        for (a, b) in [self.present_pep, self.absent_pep] {
            if !(a > 0.0 && b > 0.0) {
                return bad(format!("Beta parameters ({a}, {b}) must be positive"));
            }
        }
        if self.decoy_prefix.is_empty() {
            return bad("decoy prefix must be non-empty".into());
        }
        Ok(())
    }
}

pub const FEATURE_NAMES: [&str; 18] = [
    "pep", "lnrSp", "deltLCn", "deltCn", "XCorr", "Sp", "IonFrac", "Mass", "PepLen", "Charge1",
    "Charge2", "Charge3", "enzN", "enzC", "enzInt", "lnNumSP", "dM", "absdM",
];

const AMINO: &[u8] = b"ACDEFGHIKLMNPQRSTVWY";

fn fresh_sequence(rng: &mut ChaCha20Rng, used: &mut BTreeSet<String>) -> String {
    loop {
        let len = rng.gen_range(7..=15usize);
        let seq: String = (0..len)
            .map(|_| AMINO[rng.gen_range(0..AMINO.len())] as char)
            .collect();
        if used.insert(seq.clone()) {
            return seq;
        }
    }
}

struct Peptide {
    flanked: String,
    parents: Vec<usize>,
    present: bool,
}

/// Gaussian correlated with the match quality q = 1 − pep.
fn corr(rng: &mut ChaCha20Rng, q: f64, mu: f64, slope: f64, sigma: f64) -> f64 {
    mu + slope * (q - 0.5) + sigma * Normal::new(0.0, 1.0).unwrap().sample(rng)
}

/// Feature vector in [`FEATURE_NAMES`] order for one PSM of quality
/// q = 1 − pep. Non-pep features are Gaussians shifted with q so the
/// network has signal beyond the edge weights.
fn draw_features(rng: &mut ChaCha20Rng, pep: f64, pep_len: usize) -> Vec<f64> {
    let q = 1.0 - pep;
    let lnr_sp = corr(rng, q, 3.0, -2.0, 0.5);
    let delt_lcn = corr(rng, q, 0.25, 0.3, 0.08).max(0.0);
    let delt_cn = corr(rng, q, 0.2, 0.25, 0.06).max(0.0);
    let xcorr = corr(rng, q, 2.5, 2.0, 0.3);
    let sp = corr(rng, q, 250.0, 300.0, 40.0).max(0.0);
    let ion_frac = corr(rng, q, 0.45, 0.5, 0.08).clamp(0.0, 1.0);
    let mass = corr(rng, q, 800.0 + 110.0 * pep_len as f64, 0.0, 20.0);
    let charge_u: f64 = rng.gen();
    let (c1, c2, c3) = if charge_u < 0.2 {
        (1.0, 0.0, 0.0)
    } else if charge_u < 0.8 {
        (0.0, 1.0, 0.0)
    } else {
        (0.0, 0.0, 1.0)
    };
    let enz_n = (rng.gen::<f64>() < 0.9) as u8 as f64;
    let enz_c = (rng.gen::<f64>() < 0.9) as u8 as f64;
    let enz_int = rng.gen_range(0..3u32) as f64;
    let ln_num_sp = corr(rng, q, 5.0, 0.0, 1.0);
    let dm = (1.3 - q) * 0.008 * Normal::new(0.0, 1.0).unwrap().sample(rng);
    vec![
        pep, lnr_sp, delt_lcn, delt_cn, xcorr, sp, ion_frac, mass, pep_len as f64, c1, c2, c3,
        enz_n, enz_c, enz_int, ln_num_sp, dm, dm.abs(),
    ]
}

/// Synthesize a PSM table plus the planted truth map. Deterministic
/// for a given config: one seeded generator drives every draw in a
/// fixed order.
pub fn generate(config: &SynthConfig) -> Result<(PsmTable, GroundTruth), SynthError> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);

    let n_targets = config.n_true + config.n_entrapment;
    let mut protein_ids: Vec<String> = (0..config.n_true)
        .map(|i| format!("PROT_T{:04}", i + 1))
        .collect();
    protein_ids.extend((0..config.n_entrapment).map(|i| format!("PROT_E{:04}", i + 1)));
    let n_decoys = (config.decoy_fraction * n_targets as f64).round() as usize;
    protein_ids.extend(
        (0..n_decoys).map(|i| format!("{}PROT_D{:04}", config.decoy_prefix, i + 1)),
    );

    let mut truth = GroundTruth::new();
    for (i, id) in protein_ids.iter().take(n_targets).enumerate() {
        let flag = if i < config.n_true {
            TruthFlag::True
        } else {
            TruthFlag::Entrapment
        };
        truth.insert(id.clone(), flag);
    }

    // Peptides, protein by protein; sharing draws a second parent from
    // the same pool (targets share with targets, decoys with decoys).
    let mut used = BTreeSet::new();
    let mut peptides: Vec<Peptide> = Vec::new();
    let (pmin, pmax) = config.peptides_per_protein;
    for owner in 0..protein_ids.len() {
        let is_decoy_owner = owner >= n_targets;
        let pool = if is_decoy_owner {
            n_targets..protein_ids.len()
        } else {
            0..n_targets
        };
        for _ in 0..rng.gen_range(pmin..=pmax) {
            let seq = fresh_sequence(&mut rng, &mut used);
            let flanked = format!(
                "{}.{}.{}",
                AMINO[rng.gen_range(0..AMINO.len())] as char,
                seq,
                AMINO[rng.gen_range(0..AMINO.len())] as char
            );
            let mut parents = vec![owner];
            if pool.len() >= 2 && rng.gen::<f64>() < config.p_share {
                let second = loop {
                    let cand = rng.gen_range(pool.clone());
                    if cand != owner {
                        break cand;
                    }
                };
                parents.push(second);
            }
            let present = parents.iter().any(|&p| p < config.n_true);
            peptides.push(Peptide {
                flanked,
                parents,
                present,
            });
        }
    }

    let present_beta = Beta::new(config.present_pep.0, config.present_pep.1)
        .map_err(|e| SynthError::BadConfig(format!("present pep distribution: {e}")))?;
    let absent_beta = Beta::new(config.absent_pep.0, config.absent_pep.1)
        .map_err(|e| SynthError::BadConfig(format!("absent pep distribution: {e}")))?;

    let (smin, smax) = config.psms_per_peptide;
    let mut records = Vec::new();
    let mut scan = 0i64;
    for pep in &peptides {
        let label = if pep.parents.iter().all(|&p| p >= n_targets) {
            Label::Decoy
        } else {
            Label::Target
        };
        let dist = if pep.present { &present_beta } else { &absent_beta };
        let pep_len = pep.flanked.len() - 4;
        for _ in 0..rng.gen_range(smin..=smax) {
            scan += 1;
            let pep_score = dist.sample(&mut rng);
            records.push(PsmRecord {
                spec_id: format!("spec_{scan:06}"),
                label,
                scan_nr: scan,
                features: draw_features(&mut rng, pep_score, pep_len),
                peptide: pep.flanked.clone(),
                proteins: pep.parents.iter().map(|&p| protein_ids[p].clone()).collect(),
            });
        }
    }

    let table = PsmTable {
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        records,
        decoy_prefix: config.decoy_prefix.clone(),
    };
    // Echo through the serializer and parser so the returned table is
    // exactly what reading the written file would give (flanking
    // notation in the file, normalized peptides in memory).
    let mut buf = Vec::new();
    crate::psm::serialize_pin(&table, &mut buf)?;
    let table = crate::psm::parse_pin(buf.as_slice(), &config.decoy_prefix)?;
    Ok((table, truth))
}

/// Write the truth map in the evaluator's ground-truth TSV format.
pub fn serialize_ground_truth<W: Write>(truth: &GroundTruth, mut w: W) -> Result<(), SynthError> {
    for (id, flag) in truth {
        writeln!(w, "{id}\t{}", flag.as_str())?;
    }
    Ok(())
}
