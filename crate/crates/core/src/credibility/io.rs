//! JSON container for trained models. Parameter arrays are base64 of
//! little-endian f64 bytes so round trips are bit-exact.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::model::{CredibilityModel, Hyper, Params, PARAM_GROUPS};
use super::vocab::Vocabulary;
use super::CredibilityError;

pub const FORMAT: &str = "rumor-credibility";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Container {
    format: String,
    version: u32,
    seed: u64,
    hyper: Hyper,
    vocab: Vocabulary,
    tensors: Vec<Tensor>,
}

#[derive(Serialize, Deserialize)]
struct Tensor {
    name: String,
    len: usize,
    data: String,
}

fn encode(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode(name: &str, s: &str, len: usize) -> Result<Vec<f64>, CredibilityError> {
    let bad = |m: String| CredibilityError::Format(format!("tensor {name}: {m}"));
    let bytes = STANDARD.decode(s).map_err(|e| bad(e.to_string()))?;
    if bytes.len() != len * 8 {
        return Err(bad(format!("{} bytes for {len} values", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn to_json(model: &CredibilityModel) -> Result<String, CredibilityError> {
    let tensors = PARAM_GROUPS
        .iter()
        .zip(model.params.groups())
        .map(|(name, values)| Tensor {
            name: name.to_string(),
            len: values.len(),
            data: encode(values),
        })
        .collect();
    let c = Container {
        format: FORMAT.into(),
        version: VERSION,
        seed: model.seed,
        hyper: model.hyper.clone(),
        vocab: model.vocab.clone(),
        tensors,
    };
    serde_json::to_string(&c).map_err(|e| CredibilityError::Format(e.to_string()))
}

pub fn from_json(s: &str) -> Result<CredibilityModel, CredibilityError> {
    let c: Container =
        serde_json::from_str(s).map_err(|e| CredibilityError::Format(e.to_string()))?;
    if c.format != FORMAT || c.version != VERSION {
        return Err(CredibilityError::Format(format!(
            "unsupported container {} v{}",
            c.format, c.version
        )));
    }
    c.hyper.validate()?;
    let mut params = Params::zeros(c.vocab.size(), &c.hyper);
    if c.tensors.len() != PARAM_GROUPS.len() {
        return Err(CredibilityError::Format("wrong number of tensors".into()));
    }
    for ((slot, name), t) in params
        .groups_mut()
        .into_iter()
        .zip(PARAM_GROUPS)
        .zip(&c.tensors)
    {
        if t.name != name || t.len != slot.len() {
            return Err(CredibilityError::Format(format!(
                "tensor {} does not match expected {name} of length {}",
                t.name,
                slot.len()
            )));
        }
        *slot = decode(name, &t.data, t.len)?;
    }
    if !params.all_finite() {
        return Err(CredibilityError::Format("non-finite parameter".into()));
    }
    Ok(CredibilityModel {
        hyper: c.hyper,
        vocab: c.vocab,
        params,
        seed: c.seed,
    })
}

pub fn save(model: &CredibilityModel, path: &Path) -> Result<(), CredibilityError> {
    std::fs::write(path, to_json(model)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<CredibilityModel, CredibilityError> {
    from_json(&std::fs::read_to_string(path)?)
}
