//! JSON model specs: `{"family": "...", "params": {...}}`, or
//! `{"family": "custom", "betas": ["3/2", "2", "0"]}` with betas as exact
//! decimal or fraction strings.  A spec is either inline JSON (starts with
//! `{`) or a path to a file containing one.

use std::fs;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qladder_core::model::{self, LadderModel};
use qladder_core::rat;

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<String>>,
}

#[derive(Deserialize)]
struct TwoModeParams {
    m: u32,
    k: u32,
    #[serde(alias = "m_total")]
    #[serde(rename = "M")]
    m_total: u64,
    #[serde(default)]
    ell: u32,
}

#[derive(Deserialize)]
struct MultiModeParams {
    m: u32,
    ks: Vec<u32>,
    ells: Vec<u32>,
    #[serde(alias = "m_total")]
    #[serde(rename = "M")]
    m_total: u64,
}

#[derive(Deserialize)]
struct KPhotonParams {
    k: u32,
    #[serde(rename = "N")]
    n_top: u64,
}

#[derive(Deserialize)]
struct ThreeModeParams {
    #[serde(rename = "N")]
    n_top: u64,
}

/// Accepts inline JSON or a file path.
pub fn load(arg: &str) -> Result<(ModelSpec, LadderModel)> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading model spec {arg}"))?
    };
    let spec: ModelSpec = serde_json::from_str(&text).context("parsing model spec JSON")?;
    let model = build(&spec)?;
    Ok((spec, model))
}

pub fn build(spec: &ModelSpec) -> Result<LadderModel> {
    let params = || {
        spec.params
            .clone()
            .with_context(|| format!("family {:?} needs a \"params\" object", spec.family))
    };
    let model = match spec.family.as_str() {
        "two_mode" => {
            let p: TwoModeParams = serde_json::from_value(params()?)?;
            model::make_two_mode(p.m, p.k, p.m_total, p.ell)?
        }
        "multi_mode" => {
            let p: MultiModeParams = serde_json::from_value(params()?)?;
            model::make_multi_mode(p.m, &p.ks, &p.ells, p.m_total)?
        }
        "k_photon" => {
            let p: KPhotonParams = serde_json::from_value(params()?)?;
            model::make_k_photon(p.k, p.n_top)?
        }
        "three_mode" => {
            let p: ThreeModeParams = serde_json::from_value(params()?)?;
            model::make_three_mode(p.n_top)
        }
        "custom" => {
            let strings = spec
                .betas
                .as_ref()
                .context("custom models need a \"betas\" array of strings")?;
            let betas = strings
                .iter()
                .map(|s| rat::parse_rational(s).map_err(Into::into))
                .collect::<Result<Vec<_>>>()?;
            model::make_custom(betas)?
        }
        other => bail!("unknown family {other:?} (two_mode, multi_mode, k_photon, three_mode, custom)"),
    };
    Ok(model)
}

/// The canonical serialized form used for provenance hashing.
pub fn canonical(spec: &ModelSpec) -> String {
    serde_json::to_string(spec).expect("model specs are serializable")
}

/// First 16 hex digits of the sha256 of the canonical spec.
pub fn short_hash(spec: &ModelSpec) -> String {
    let digest = Sha256::digest(canonical(spec).as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
