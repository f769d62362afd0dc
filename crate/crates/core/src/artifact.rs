//! Versioned JSON artifacts: PMF tables, design tables, quantizer banks
//! and codebooks, cacheable between CLI runs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compress::HuffmanCodebook;
use crate::design::{MiTable, QuantizerBank, StepObjective, GRID_VERSION};
use crate::error::Error;
use crate::stats::{ChannelKind, ChannelModel, LlrPmfTable};
use crate::Result;

/// Bump on any incompatible schema change.
pub const ARTIFACT_VERSION: u32 = 1;

/// One cached PMF with its quantizer parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmfEntry {
    pub bit_index: usize,
    pub width: u32,
    pub step: Option<f64>,
    pub p_cond: [Vec<f64>; 2],
    pub p_marg: Vec<f64>,
}

/// Artifact payload variants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    PmfTable {
        m: usize,
        channel: ChannelModel,
        entries: Vec<PmfEntry>,
    },
    Design {
        m: usize,
        channel: ChannelModel,
        objective: StepObjective,
        table: MiTable,
    },
    Bank {
        m: usize,
        channel: ChannelModel,
        total_bits: usize,
        bank: QuantizerBank,
        pmfs: LlrPmfTable,
        codebook: Option<HuffmanCodebook>,
    },
}

/// Envelope with schema and search-grid versions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact {
    pub version: u32,
    pub grid_version: u32,
    pub payload: Payload,
}

impl Artifact {
    pub fn new(payload: Payload) -> Self {
        Artifact {
            version: ARTIFACT_VERSION,
            grid_version: GRID_VERSION,
            payload,
        }
    }
}

/// Serialize an artifact to pretty JSON.
pub fn to_json(artifact: &Artifact) -> Result<String> {
    serde_json::to_string_pretty(artifact).map_err(|e| Error::Artifact(e.to_string()))
}

/// Parse and version-check an artifact.
pub fn from_json(json: &str) -> Result<Artifact> {
    let artifact: Artifact =
        serde_json::from_str(json).map_err(|e| Error::Artifact(e.to_string()))?;
    if artifact.version != ARTIFACT_VERSION {
        return Err(Error::Artifact(format!(
            "unsupported artifact version {} (expected {ARTIFACT_VERSION})",
            artifact.version
        )));
    }
    Ok(artifact)
}

pub fn save(path: &Path, artifact: &Artifact) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::Artifact(e.to_string()))?;
    }
    fs::write(path, to_json(artifact)?).map_err(|e| Error::Artifact(e.to_string()))
}

pub fn load(path: &Path) -> Result<Artifact> {
    let json = fs::read_to_string(path).map_err(|e| Error::Artifact(e.to_string()))?;
    from_json(&json)
}

/// Cache file name for a design table; includes everything the table
/// depends on, so stale entries can never be confused for fresh ones.
pub fn design_cache_name(
    m: usize,
    channel: &ChannelModel,
    w_max: u32,
    objective: StepObjective,
) -> String {
    let kind = match channel.kind {
        ChannelKind::Awgn => "awgn",
        ChannelKind::RayleighBlock => "rayleigh",
    };
    let obj = match objective {
        StepObjective::MutualInformation => "mi",
        StepObjective::UniformReconGmi => "urgmi",
    };
    let cn = format!("{:.2}", channel.cn_db).replace('.', "p").replace('-', "m");
    format!("design_m{m}_{kind}_cn{cn}_w{w_max}_{obj}_g{GRID_VERSION}.json")
}

/// Load a cached design table if one matches, else build it with `make`
/// and store the result.
pub fn design_cached(
    cache_dir: Option<&Path>,
    m: usize,
    channel: &ChannelModel,
    w_max: u32,
    objective: StepObjective,
    make: impl FnOnce() -> Result<MiTable>,
) -> Result<MiTable> {
    let path = cache_dir.map(|d| d.join(design_cache_name(m, channel, w_max, objective)));
    if let Some(p) = &path {
        if let Ok(artifact) = load(p) {
            if artifact.grid_version == GRID_VERSION {
                if let Payload::Design { table, .. } = artifact.payload {
                    if table.w_max == w_max && table.objective == objective {
                        return Ok(table);
                    }
                }
            }
        }
    }
    let table = make()?;
    if let Some(p) = &path {
        save(
            p,
            &Artifact::new(Payload::Design {
                m,
                channel: *channel,
                objective,
                table: table.clone(),
            }),
        )?;
    }
    Ok(table)
}
