//! Run configuration: a JSON document whose physical keys carry their units.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hom::HomExperimentConfig;
use crate::overlap::{FilterParams, SourcePair};
use crate::units::{Frequency, TimeGrid};
use crate::wavepacket::{classical_overlap, emitter_profile, EmitterParams};

/// The two sources of a run. A missing classical overlap is computed from
/// the emitters' temporal profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub a: EmitterParams,
    pub b: EmitterParams,
    #[serde(rename = "mean_detuning_rad_per_ns", default)]
    pub mean_detuning: Frequency,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_classical: Option<f64>,
    /// Individual indistinguishabilities M_a, M_b, when measured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub individual_m: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub pair: PairSpec,
    #[serde(default)]
    pub experiment: HomExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterParams>,
    pub seed: u64,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |e: Error| match e {
            Error::Domain(msg) => Error::Config(msg),
            other => other,
        };
        self.pair.a.validate().map_err(invalid)?;
        self.pair.b.validate().map_err(invalid)?;
        self.experiment.validate().map_err(invalid)?;
        if let Some(f) = &self.filter {
            f.validate().map_err(invalid)?;
        }
        if let Some(s) = self.pair.s_classical {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Config(format!("s_classical must lie in [0, 1], got {s}")));
            }
        }
        if let Some(m) = self.pair.individual_m {
            if m.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Config("individual_m values must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of everything that affects results
    /// (the output directory is excluded).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.outputs = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Resolves the source pair, computing the classical overlap from the
    /// emitter profiles when it is not given.
    pub fn source_pair(&self) -> Result<SourcePair> {
        let s = match self.pair.s_classical {
            Some(s) => s,
            None => profile_overlap(&self.pair.a, &self.pair.b)?,
        };
        let pair = SourcePair {
            a: self.pair.a.clone(),
            b: self.pair.b.clone(),
            mean_detuning: self.pair.mean_detuning,
            s_classical: s,
            filter: self.filter.clone(),
        };
        pair.validate()?;
        Ok(pair)
    }
}

/// Classical overlap of the two emitters' profiles on the default grid.
pub fn profile_overlap(a: &EmitterParams, b: &EmitterParams) -> Result<f64> {
    let grid = TimeGrid::for_lifetimes_ps(&[a.t1_ps, b.t1_ps])?;
    classical_overlap(&emitter_profile(a, &grid)?, &emitter_profile(b, &grid)?)
}
