//! The learned incomplete-factorization network.
//!
//! Three message-passing blocks operate on the lower/upper split of the
//! matrix graph. Each block runs an edge update `φ`, a mean aggregation and a
//! node update `ψ` over the lower-triangle edges, then the same over the
//! upper-triangle edges, sharing one edge slot between `(i, j)` and `(j, i)`.
//! Between blocks the original matrix entry is appended to every edge as a
//! skip connection. The final edge embeddings become the factor, with `exp`
//! applied on the diagonal.
//!
//! Edge networks read `[edge features, x_row, x_col]`: 1 + 8 + 8 = 17 inputs,
//! or 18 for the lower pass of later blocks where the skip entry is present.
//! Edge outputs are scalar, so node networks read `[x_i, m_i]` with 8 + 1 = 9
//! inputs and emit 8. With 16 hidden units everywhere this gives 3 638
//! parameters.

mod mlp;
mod network;

pub use mlp::{Matrix, Mlp};
pub use network::{backward, forward, forward_factor, neuralif_precondition, Tape};

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NODE_FEATURES;

pub const BLOCKS: usize = 3;
pub const HIDDEN: usize = 16;
pub const FORMAT_VERSION: u32 = 1;
/// Bumped whenever the node feature definitions or their order change.
pub const FEATURE_ORDER_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arch {
    pub blocks: usize,
    pub hidden: usize,
    pub node_feat: usize,
}

impl Arch {
    pub const CURRENT: Arch = Arch {
        blocks: BLOCKS,
        hidden: HIDDEN,
        node_feat: NODE_FEATURES,
    };
}

/// Edge-feature width entering block `b`'s lower pass.
pub(crate) fn edge_input_dim(block: usize) -> usize {
    if block == 0 {
        1
    } else {
        2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub phi_lower: Mlp,
    pub psi_lower: Mlp,
    pub phi_upper: Mlp,
    pub psi_upper: Mlp,
}

impl BlockParams {
    fn mlps(&self) -> [&Mlp; 4] {
        [&self.phi_lower, &self.psi_lower, &self.phi_upper, &self.psi_upper]
    }

    fn mlps_mut(&mut self) -> [&mut Mlp; 4] {
        [
            &mut self.phi_lower,
            &mut self.psi_lower,
            &mut self.phi_upper,
            &mut self.psi_upper,
        ]
    }

    fn expected_shapes(block: usize) -> [(usize, usize, usize); 4] {
        let nf = NODE_FEATURES;
        [
            (edge_input_dim(block) + 2 * nf, HIDDEN, 1),
            (nf + 1, HIDDEN, nf),
            (1 + 2 * nf, HIDDEN, 1),
            (nf + 1, HIDDEN, nf),
        ]
    }

    fn build(block: usize, mut make: impl FnMut(usize, usize, usize) -> Mlp) -> Self {
        let [a, b, c, d] = Self::expected_shapes(block);
        Self {
            phi_lower: make(a.0, a.1, a.2),
            psi_lower: make(b.0, b.1, b.2),
            phi_upper: make(c.0, c.1, c.2),
            psi_upper: make(d.0, d.1, d.2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub blocks: Vec<BlockParams>,
    pub seed: u64,
}

/// Gradients share the parameter layout.
pub type ParamGrads = ModelParams;

impl ModelParams {
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocks = (0..BLOCKS)
            .map(|b| BlockParams::build(b, |i, h, o| Mlp::init(i, h, o, &mut rng)))
            .collect();
        let model = Self { blocks, seed };
        log::info!("initialized model with {} parameters", model.parameter_count());
        model
    }

    pub fn zeros() -> Self {
        let blocks = (0..BLOCKS)
            .map(|b| BlockParams::build(b, Mlp::zeros))
            .collect();
        Self { blocks, seed: 0 }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = Self::zeros();
        z.seed = self.seed;
        z
    }

    pub fn parameter_count(&self) -> usize {
        self.blocks
            .iter()
            .flat_map(|b| b.mlps())
            .map(Mlp::parameter_count)
            .sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.blocks.iter().flat_map(|b| b.mlps()).flat_map(|m| m.params())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.blocks
            .iter_mut()
            .flat_map(|b| b.mlps_mut())
            .flat_map(|m| m.params_mut())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.params().copied().collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(),
                found: flat.len(),
            });
        }
        for (p, v) in self.params_mut().zip(flat) {
            *p = *v;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.len() != BLOCKS {
            return Err(Error::ArchMismatch(format!(
                "expected {BLOCKS} blocks, found {}",
                self.blocks.len()
            )));
        }
        for (b, block) in self.blocks.iter().enumerate() {
            let shapes = BlockParams::expected_shapes(b);
            for (m, (i, h, o)) in block.mlps().into_iter().zip(shapes) {
                if !m.has_shape(i, h, o) {
                    return Err(Error::ArchMismatch(format!(
                        "block {b}: expected an MLP {i}->{h}->{o}, found {}->{}->{}",
                        m.input_dim(),
                        m.hidden_dim(),
                        m.output_dim()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    arch: Arch,
    feature_order_version: u32,
    parameter_count: usize,
    seed: u64,
    blocks: Vec<BlockParams>,
    #[serde(default)]
    training: Option<serde_json::Value>,
}

pub fn save_model(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    save_model_with_metadata(params, None, path)
}

/// Saves a checkpoint, optionally embedding training metadata.
pub fn save_model_with_metadata(
    params: &ModelParams,
    training: Option<serde_json::Value>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let ckpt = Checkpoint {
        format_version: FORMAT_VERSION,
        arch: Arch::CURRENT,
        feature_order_version: FEATURE_ORDER_VERSION,
        parameter_count: params.parameter_count(),
        seed: params.seed,
        blocks: params.blocks.clone(),
        training,
    };
    let text = serde_json::to_string(&ckpt)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

pub fn parse_model(text: &str) -> Result<ModelParams> {
    let ckpt: Checkpoint = serde_json::from_str(text)?;
    if ckpt.format_version != FORMAT_VERSION {
        return Err(Error::ArchMismatch(format!(
            "unsupported checkpoint format version {}",
            ckpt.format_version
        )));
    }
    if ckpt.arch != Arch::CURRENT {
        return Err(Error::ArchMismatch(format!(
            "checkpoint arch {:?} differs from {:?}",
            ckpt.arch,
            Arch::CURRENT
        )));
    }
    if ckpt.feature_order_version != FEATURE_ORDER_VERSION {
        return Err(Error::ArchMismatch(format!(
            "checkpoint uses feature order version {}",
            ckpt.feature_order_version
        )));
    }
    let params = ModelParams {
        blocks: ckpt.blocks,
        seed: ckpt.seed,
    };
    params.validate()?;
    if params.parameter_count() != ckpt.parameter_count {
        return Err(Error::ArchMismatch(format!(
            "declared {} parameters, found {}",
            ckpt.parameter_count,
            params.parameter_count()
        )));
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count_matches_architecture() {
        let m = ModelParams::init(0);
        m.validate().unwrap();
        // lower φ: 305 + 321 + 321, upper φ: 3 × 305, ψ: 6 × 296
        assert_eq!(m.parameter_count(), (305 + 321 + 321) + 3 * 305 + 6 * 296);
        assert_eq!(m.parameter_count(), 3638);
    }

    #[test]
    fn flat_roundtrip() {
        let m = ModelParams::init(5);
        let mut z = ModelParams::zeros();
        z.set_flat(&m.to_flat()).unwrap();
        assert_eq!(z.to_flat(), m.to_flat());
        assert!(z.set_flat(&[1.0]).is_err());
    }

    #[test]
    fn init_is_seeded() {
        assert_eq!(ModelParams::init(9), ModelParams::init(9));
        assert_ne!(ModelParams::init(9).to_flat(), ModelParams::init(10).to_flat());
    }

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let m = ModelParams::init(11);
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }

    #[test]
    fn truncated_checkpoint_rejected() {
        let m = ModelParams::init(1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&m, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(matches!(parse_model(&text[..text.len() / 2]), Err(Error::Json(_))));
    }

    #[test]
    fn arch_mismatch_rejected() {
        let m = ModelParams::init(1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&m, &path).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        v["arch"]["blocks"] = 2.into();
        assert!(matches!(parse_model(&v.to_string()), Err(Error::ArchMismatch(_))));

        let mut v2: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        v2["blocks"].as_array_mut().unwrap().pop();
        assert!(matches!(parse_model(&v2.to_string()), Err(Error::ArchMismatch(_))));
    }
}
