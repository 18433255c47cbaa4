//! Binary model files.
//!
//! Little-endian layout:
//!
//! ```text
//! magic      "VPTF"
//! version    u16
//! target     u8 (0 = SBP, 1 = DBP)
//! features   u8 bit mask over [inv_ptt, v_visco, hr, amp]
//! n_trees u32, max_depth u32, min_samples_leaf u32, mtry u32,
//! rng_seed u64, bootstrap u8
//! train_count u64, y_min f64, y_max f64, split_gains 4 x f64
//! per tree:  node_count u32, then nodes in pre-order
//!   leaf   tag 0, value f64, count u32
//!   split  tag 1, feature u8, threshold f64, right child index u32
//! sha256 of every preceding byte (32 bytes)
//! ```

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::forest::{ForestHyperparams, ForestModel};
use super::tree::{Node, Tree};
use super::{FeatureSet, Target, N_FEATURES};

pub const MODEL_FORMAT_VERSION: u16 = 1;
const MAGIC: &[u8; 4] = b"VPTF";
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model format version {found}, this build reads {expected}")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
}

pub fn encode_model(model: &ForestModel) -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    b.push(match model.target {
        Target::Sbp => 0,
        Target::Dbp => 1,
    });
    b.push(model.features.bits());
    let hp = &model.hyperparams;
    for v in [hp.n_trees, hp.max_depth, hp.min_samples_leaf, hp.mtry] {
        b.extend_from_slice(&(v as u32).to_le_bytes());
    }
    b.extend_from_slice(&hp.rng_seed.to_le_bytes());
    b.push(hp.bootstrap as u8);
    b.extend_from_slice(&(model.train_count as u64).to_le_bytes());
    b.extend_from_slice(&model.y_min.to_le_bytes());
    b.extend_from_slice(&model.y_max.to_le_bytes());
    for g in model.split_gains {
        b.extend_from_slice(&g.to_le_bytes());
    }
    for tree in &model.trees {
        b.extend_from_slice(&(tree.nodes.len() as u32).to_le_bytes());
        for node in &tree.nodes {
            match *node {
                Node::Leaf { value, count } => {
                    b.push(0);
                    b.extend_from_slice(&value.to_le_bytes());
                    b.extend_from_slice(&count.to_le_bytes());
                }
                Node::Split { feature, threshold, right } => {
                    b.push(1);
                    b.push(feature);
                    b.extend_from_slice(&threshold.to_le_bytes());
                    b.extend_from_slice(&right.to_le_bytes());
                }
            }
        }
    }
    let digest = Sha256::digest(&b);
    b.extend_from_slice(&digest);
    b
}

pub fn decode_model(bytes: &[u8]) -> Result<ForestModel, ModelIoError> {
    let corrupt = |m: &str| ModelIoError::CorruptModel(m.to_string());
    if bytes.len() < 6 || &bytes[..4] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != MODEL_FORMAT_VERSION {
        return Err(ModelIoError::VersionMismatch { found: version, expected: MODEL_FORMAT_VERSION });
    }
    if bytes.len() < 6 + CHECKSUM_LEN {
        return Err(corrupt("truncated"));
    }
    let (body, sum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != sum {
        return Err(corrupt("checksum mismatch"));
    }

    let mut r = Reader { buf: body, pos: 6 };
    let target = match r.u8()? {
        0 => Target::Sbp,
        1 => Target::Dbp,
        _ => return Err(corrupt("unknown target")),
    };
    let features = FeatureSet::from_bits(r.u8()?).ok_or_else(|| corrupt("bad feature mask"))?;
    let hyperparams = ForestHyperparams {
        n_trees: r.u32()? as usize,
        max_depth: r.u32()? as usize,
        min_samples_leaf: r.u32()? as usize,
        mtry: r.u32()? as usize,
        rng_seed: r.u64()?,
        bootstrap: r.u8()? != 0,
    };
    let train_count = r.u64()? as usize;
    let y_min = r.f64()?;
    let y_max = r.f64()?;
    let mut split_gains = [0.0; N_FEATURES];
    for g in &mut split_gains {
        *g = r.f64()?;
    }
    let mut trees = Vec::with_capacity(hyperparams.n_trees.min(1 << 16));
    for _ in 0..hyperparams.n_trees {
        let count = r.u32()? as usize;
        if count == 0 {
            return Err(corrupt("empty tree"));
        }
        let mut nodes = Vec::with_capacity(count.min(1 << 20));
        for i in 0..count {
            nodes.push(match r.u8()? {
                0 => Node::Leaf { value: r.f64()?, count: r.u32()? },
                1 => {
                    let feature = r.u8()?;
                    let threshold = r.f64()?;
                    let right = r.u32()?;
                    if feature as usize >= N_FEATURES || right as usize <= i + 1 || right as usize >= count {
                        return Err(corrupt("bad split node"));
                    }
                    Node::Split { feature, threshold, right }
                }
                _ => return Err(corrupt("unknown node tag")),
            });
        }
        trees.push(Tree { nodes });
    }
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes"));
    }
    Ok(ForestModel {
        trees,
        hyperparams,
        target,
        features,
        train_count,
        y_min,
        y_max,
        split_gains,
    })
}

/// Writes the model next to `path` and renames it into place.
pub fn save_model(model: &ForestModel, path: &Path) -> Result<(), ModelIoError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(&encode_model(model))?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ForestModel, ModelIoError> {
    decode_model(&std::fs::read(path)?)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], ModelIoError> {
        let end = self.pos + N;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| ModelIoError::CorruptModel("unexpected end of data".into()))?;
        self.pos = end;
        Ok(s.try_into().unwrap())
    }
    fn u8(&mut self) -> Result<u8, ModelIoError> {
        Ok(self.take::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32, ModelIoError> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64, ModelIoError> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64, ModelIoError> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}
