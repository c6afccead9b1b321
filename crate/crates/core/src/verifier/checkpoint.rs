//! Model checkpoints: JSON header with the parameters as base64 little-endian `f64`.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{Architecture, EncoderState, VerifierError};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub arch: Architecture,
    pub embed_dim: usize,
    pub seed: u64,
    /// Threshold selected on validation data, when known.
    #[serde(default)]
    pub threshold: Option<f64>,
    pub param_count: usize,
    pub params: String,
}

impl Checkpoint {
    pub fn from_state(state: &EncoderState, threshold: Option<f64>) -> Self {
        let bytes: Vec<u8> = state.params.iter().flat_map(|p| p.to_le_bytes()).collect();
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            arch: state.arch.clone(),
            embed_dim: state.arch.embed_dim,
            seed: state.seed,
            threshold,
            param_count: state.params.len(),
            params: STANDARD.encode(bytes),
        }
    }

    pub fn into_state(self) -> Result<EncoderState, VerifierError> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(VerifierError::Format(format!(
                "unsupported checkpoint version {}",
                self.format_version
            )));
        }
        if self.embed_dim != self.arch.embed_dim {
            return Err(VerifierError::Format("embed_dim disagrees with architecture".into()));
        }
        let bytes = STANDARD
            .decode(self.params.as_bytes())
            .map_err(|e| VerifierError::Format(e.to_string()))?;
        if bytes.len() != self.param_count * 8 {
            return Err(VerifierError::Format("parameter payload length mismatch".into()));
        }
        let params = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        EncoderState::from_params(self.arch, params, self.seed)
    }
}

pub fn save_checkpoint(
    path: &Path,
    state: &EncoderState,
    threshold: Option<f64>,
) -> Result<(), VerifierError> {
    let ckpt = Checkpoint::from_state(state, threshold);
    let mut text = serde_json::to_string_pretty(&ckpt).map_err(|e| VerifierError::Format(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(EncoderState, Option<f64>), VerifierError> {
    let text = fs::read_to_string(path)?;
    let ckpt: Checkpoint =
        serde_json::from_str(&text).map_err(|e| VerifierError::Format(e.to_string()))?;
    let threshold = ckpt.threshold;
    Ok((ckpt.into_state()?, threshold))
}
