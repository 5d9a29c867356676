//! Source catalogs and the search for pairs that can be tuned into mutual
//! resonance.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Wavelength;
use crate::wavepacket::EmitterParams;

/// Micropillar cavity of one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    #[serde(rename = "x_c_nm")]
    pub x_c: Wavelength,
    pub q: f64,
    /// Emitter-cavity detuning.
    #[serde(default)]
    pub detuning_pm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub label: String,
    /// Sample the source sits on; defaults to the label up to its first `_`.
    #[serde(default)]
    pub sample: Option<String>,
    pub emitter: EmitterParams,
    pub cavity: CavityParams,
    pub tuning_range_nm: [f64; 2],
    #[serde(default)]
    pub peak_brightness: f64,
}

impl CatalogEntry {
    pub fn sample(&self) -> &str {
        self.sample
            .as_deref()
            .unwrap_or_else(|| self.label.split('_').next().unwrap_or(&self.label))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceCatalog {
    pub sources: Vec<CatalogEntry>,
}

impl SourceCatalog {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.sources {
            if !seen.insert(s.label.as_str()) {
                return Err(Error::Config(format!("duplicate source label `{}`", s.label)));
            }
            let [lo, hi] = s.tuning_range_nm;
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("`{}`: tuning range needs min < max", s.label)));
            }
            if !(s.cavity.q > 0.0) {
                return Err(Error::Config(format!("`{}`: cavity Q must be > 0", s.label)));
            }
            s.emitter.validate()?;
        }
        Ok(())
    }
}

/// Two sources from different samples with overlapping tuning ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMatch {
    pub first: String,
    pub second: String,
    pub common_range_nm: [f64; 2],
}

impl PairMatch {
    pub fn width_nm(&self) -> f64 {
        self.common_range_nm[1] - self.common_range_nm[0]
    }
}

/// All cross-sample pairs whose tuning ranges overlap, widest common range
/// first (ties broken by label). Labels within a pair are in lexical order.
pub fn match_pairs(catalog: &SourceCatalog) -> Result<Vec<PairMatch>> {
    if catalog.sources.is_empty() {
        return Err(Error::Config("catalog is empty".into()));
    }
    catalog.validate()?;
    let mut out = Vec::new();
    for (i, a) in catalog.sources.iter().enumerate() {
        for b in &catalog.sources[i + 1..] {
            if a.sample() == b.sample() {
                continue;
            }
            let lo = a.tuning_range_nm[0].max(b.tuning_range_nm[0]);
            let hi = a.tuning_range_nm[1].min(b.tuning_range_nm[1]);
            if lo < hi {
                let (first, second) = if a.label <= b.label { (a, b) } else { (b, a) };
                out.push(PairMatch {
                    first: first.label.clone(),
                    second: second.label.clone(),
                    common_range_nm: [lo, hi],
                });
            }
        }
    }
    out.sort_by(|x, y| {
        y.width_nm()
            .total_cmp(&x.width_nm())
            .then_with(|| x.first.cmp(&y.first))
            .then_with(|| x.second.cmp(&y.second))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(label: &str, range: [f64; 2]) -> CatalogEntry {
        CatalogEntry {
            label: label.into(),
            sample: None,
            emitter: EmitterParams::ideal(150.0),
            cavity: CavityParams {
                x_c: Wavelength::new(924.7).unwrap(),
                q: 2000.0,
                detuning_pm: 0.0,
            },
            tuning_range_nm: range,
            peak_brightness: 0.1,
        }
    }

    #[test]
    fn intersection_example() {
        let cat = SourceCatalog {
            sources: vec![entry("I_A", [924.6, 924.9]), entry("II_A", [924.847, 925.1])],
        };
        let m = match_pairs(&cat).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].common_range_nm, [924.847, 924.9]);
    }

    #[test]
    fn disjoint_and_same_sample() {
        let cat = SourceCatalog {
            sources: vec![entry("I_A", [924.0, 924.2]), entry("II_A", [924.5, 924.7])],
        };
        assert!(match_pairs(&cat).unwrap().is_empty());
        let cat = SourceCatalog {
            sources: vec![entry("I_A", [924.0, 924.6]), entry("I_B", [924.5, 924.7])],
        };
        assert!(match_pairs(&cat).unwrap().is_empty());
    }

    #[test]
    fn validation() {
        assert!(match_pairs(&SourceCatalog { sources: vec![] }).is_err());
        let dup = SourceCatalog {
            sources: vec![entry("I_A", [1.0, 2.0]), entry("I_A", [1.0, 2.0])],
        };
        assert!(dup.validate().is_err());
        let inverted = SourceCatalog {
            sources: vec![entry("I_A", [2.0, 1.0])],
        };
        assert!(inverted.validate().is_err());
    }

    #[test]
    fn explicit_sample_overrides_label() {
        let mut e = entry("alpha", [924.0, 925.0]);
        assert_eq!(e.sample(), "alpha");
        e.sample = Some("I".into());
        assert_eq!(e.sample(), "I");
    }
}
