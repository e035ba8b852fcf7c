//! Ensemble checkpoint persistence.
//!
//! A checkpoint is a line-oriented text file carrying everything
//! inference needs: network shape, graph-building knobs, feature
//! standardization constants, and every member's tensors. Floats are
//! rendered with the shortest representation that parses back to the
//! identical bit pattern, so save → load is lossless, and a trailing
//! SHA-256 line makes truncation or editing detectable.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::nn::{ModelParams, NetConfig};
use crate::psm::FeatureStats;
use crate::train::ModelEnsemble;

const MAGIC: &str = "pinfer-checkpoint v1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file (first line {found:?})")]
    BadMagic { found: String },
    #[error("checkpoint line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("checksum mismatch: file says {stated}, content hashes to {actual}")]
    ChecksumMismatch { stated: String, actual: String },
    #[error("I/O error")]
    Io(#[from] std::io::Error),
}

/// A trained ensemble plus the graph-construction settings it assumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub ensemble: ModelEnsemble,
    pub epsilon: f64,
    pub decoy_prefix: String,
}

/// Render the checkpoint to its canonical byte form (checksum line
/// included). Identical checkpoints render to identical bytes.
pub fn render_checkpoint(ckpt: &Checkpoint) -> String {
    let mut out = String::new();
    let net = &ckpt.ensemble.net;
    let stats = &ckpt.ensemble.stats;
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "layers {}", net.layers).unwrap();
    writeln!(out, "hidden {}", net.hidden).unwrap();
    writeln!(out, "learning_rate {}", net.learning_rate).unwrap();
    writeln!(out, "seed {}", net.seed).unwrap();
    writeln!(out, "max_epochs {}", net.max_epochs).unwrap();
    writeln!(out, "epsilon {}", ckpt.epsilon).unwrap();
    writeln!(out, "decoy_prefix {}", ckpt.decoy_prefix).unwrap();
    writeln!(out, "features {}", stats.names.len()).unwrap();
    for ((name, mean), std) in stats.names.iter().zip(&stats.mean).zip(&stats.std) {
        writeln!(out, "{name}\t{mean}\t{std}").unwrap();
    }
    writeln!(out, "models {}", ckpt.ensemble.members.len()).unwrap();
    for (i, member) in ckpt.ensemble.members.iter().enumerate() {
        writeln!(out, "model {i}").unwrap();
        for (name, tensor) in member.tensors() {
            writeln!(out, "tensor {name} {} {}", tensor.rows(), tensor.cols()).unwrap();
            for r in 0..tensor.rows() {
                let row = tensor.row(r);
                for (c, v) in row.iter().enumerate() {
                    if c > 0 {
                        out.push(' ');
                    }
                    write!(out, "{v}").unwrap();
                }
                out.push('\n');
            }
        }
    }
    let digest = Sha256::digest(out.as_bytes());
    writeln!(out, "sha256 {digest:x}").unwrap();
    out
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    std::fs::write(path, render_checkpoint(ckpt))?;
    Ok(())
}

struct Lines<'a> {
    iter: std::str::Lines<'a>,
    lineno: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, CheckpointError> {
        self.lineno += 1;
        self.iter.next().ok_or(CheckpointError::Corrupt {
            line: self.lineno,
            reason: "unexpected end of file".to_string(),
        })
    }

    fn corrupt(&self, reason: String) -> CheckpointError {
        CheckpointError::Corrupt {
            line: self.lineno,
            reason,
        }
    }

    /// Read `key <value>` and parse the value.
    fn kv<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, CheckpointError> {
        let line = self.next()?;
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.corrupt(format!("expected `{key} ...`, found {line:?}")))?;
        value
            .parse()
            .map_err(|_| self.corrupt(format!("bad value {value:?} for {key}")))
    }
}

pub fn parse_checkpoint(text: &str) -> Result<Checkpoint, CheckpointError> {
    // Verify the trailing checksum over everything before it.
    let body_end = text.trim_end_matches('\n').rfind('\n').map(|i| i + 1);
    let (body, tail) = match body_end {
        Some(i) => text.split_at(i),
        None => ("", text),
    };
    let stated = tail
        .trim_end_matches('\n')
        .strip_prefix("sha256 ")
        .ok_or(CheckpointError::Corrupt {
            line: body.lines().count() + 1,
            reason: "missing trailing `sha256` line".to_string(),
        })?;
    let actual = format!("{:x}", Sha256::digest(body.as_bytes()));
    if stated != actual {
        return Err(CheckpointError::ChecksumMismatch {
            stated: stated.to_string(),
            actual,
        });
    }

    let mut lines = Lines {
        iter: body.lines(),
        lineno: 0,
    };
    let magic = lines.next()?;
    if magic != MAGIC {
        return Err(CheckpointError::BadMagic {
            found: magic.to_string(),
        });
    }
    let net = NetConfig {
        layers: lines.kv("layers")?,
        hidden: lines.kv("hidden")?,
        learning_rate: lines.kv("learning_rate")?,
        seed: lines.kv("seed")?,
        max_epochs: lines.kv("max_epochs")?,
    };
    let epsilon: f64 = lines.kv("epsilon")?;
    let decoy_prefix: String = lines.kv("decoy_prefix")?;
    let n_features: usize = lines.kv("features")?;
    let mut stats = FeatureStats {
        names: Vec::with_capacity(n_features),
        mean: Vec::with_capacity(n_features),
        std: Vec::with_capacity(n_features),
    };
    for _ in 0..n_features {
        let line = lines.next()?;
        let mut parts = line.split('\t');
        match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(name), Some(mean), Some(std), None) => {
                stats.names.push(name.to_string());
                stats.mean.push(
                    mean.parse()
                        .map_err(|_| lines.corrupt(format!("bad mean {mean:?}")))?,
                );
                stats.std.push(
                    std.parse()
                        .map_err(|_| lines.corrupt(format!("bad std {std:?}")))?,
                );
            }
            _ => return Err(lines.corrupt(format!("bad feature stats line {line:?}"))),
        }
    }
    let n_models: usize = lines.kv("models")?;
    let mut members = Vec::with_capacity(n_models);
    for m in 0..n_models {
        let header = lines.next()?;
        if header != format!("model {m}") {
            return Err(lines.corrupt(format!("expected `model {m}`, found {header:?}")));
        }
        let mut params = ModelParams::zeros(net.hidden, n_features, net.layers);
        for (name, tensor) in params.tensors_mut() {
            let decl = lines.next()?;
            let expect = format!("tensor {name} {} {}", tensor.rows(), tensor.cols());
            if decl != expect {
                return Err(lines.corrupt(format!("expected {expect:?}, found {decl:?}")));
            }
            for r in 0..tensor.rows() {
                let line = lines.next()?;
                let row = tensor.row_mut(r);
                let mut fields = line.split(' ');
                for (c, slot) in row.iter_mut().enumerate() {
                    let field = fields
                        .next()
                        .ok_or_else(|| lines.corrupt(format!("row has fewer than {c} values")))?;
                    *slot = field
                        .parse()
                        .map_err(|_| lines.corrupt(format!("bad number {field:?}")))?;
                }
                if fields.next().is_some() {
                    return Err(lines.corrupt("row has extra values".to_string()));
                }
            }
        }
        members.push(params);
    }
    if lines.iter.next().is_some() {
        return Err(CheckpointError::Corrupt {
            line: lines.lineno + 1,
            reason: "trailing content after last model".to_string(),
        });
    }
    Ok(Checkpoint {
        ensemble: ModelEnsemble {
            net,
            stats,
            members,
        },
        epsilon,
        decoy_prefix,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    parse_checkpoint(&std::fs::read_to_string(path)?)
}
