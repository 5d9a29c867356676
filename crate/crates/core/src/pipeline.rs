//! End-to-end run: analytic overlaps, simulated histograms, the visibility
//! estimate and the bound check, written as report files.

use std::path::PathBuf;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::hom::{analytic_prediction, filtered_pair, simulate_hom, VisibilityEstimate};
use crate::io::{write_columns, write_histogram, write_json};
use crate::overlap::{mwo_no_dephasing, mwo_voigt_averaged, mwo_with_dephasing, remote_upper_bound, SourcePair};
use crate::parallel::Execution;

/// Closed-form overlaps of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticReport {
    pub s_classical: f64,
    pub m_lifetime_limited: f64,
    pub m_dephased: f64,
    pub m_voigt_averaged: f64,
    /// Voigt average behind the filter, reduced by sideband emission.
    pub m_predicted: f64,
    pub upper_bound: f64,
    pub within_bound: bool,
}

impl AnalyticReport {
    pub fn new(pair: &SourcePair, individual_m: Option<[f64; 2]>) -> Result<Self> {
        let seen = filtered_pair(pair)?;
        let m_lifetime_limited = mwo_no_dephasing(seen.a.gamma(), seen.b.gamma(), seen.mean_detuning)?;
        let m_dephased = mwo_with_dephasing(&seen)?;
        let m_voigt_averaged = mwo_voigt_averaged(&seen)?;
        let m_predicted = analytic_prediction(pair)?;
        let upper_bound = match individual_m {
            Some([mi, mj]) => remote_upper_bound(pair.s_classical, mi, mj)?,
            None => pair.s_classical,
        };
        Ok(Self {
            s_classical: pair.s_classical,
            m_lifetime_limited,
            m_dephased,
            m_voigt_averaged,
            m_predicted,
            upper_bound,
            within_bound: m_predicted <= upper_bound,
        })
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub v_tpi: f64,
    pub sigma: f64,
    pub a_par: f64,
    pub a_perp: f64,
    pub config_hash: String,
    pub seed: u64,
}

impl Summary {
    fn new(est: &VisibilityEstimate, config_hash: &str, seed: u64) -> Self {
        Self {
            v_tpi: est.v_tpi,
            sigma: est.sigma,
            a_par: est.a_par,
            a_perp: est.a_perp,
            config_hash: config_hash.to_owned(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config_hash: String,
    pub seed: u64,
    pub n_pulses: u64,
    pub analytic: AnalyticReport,
    pub simulated: VisibilityEstimate,
    /// Simulated visibility within three standard errors of the bound.
    pub simulated_within_bound: bool,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

/// Runs the pipeline and writes `report.json`, `summary.json`,
/// `hist_parallel.csv`, `hist_perpendicular.csv` and `plot_data.csv` into
/// the configured output directory.
pub fn run_pipeline(config: &RunConfig, exec: Execution) -> Result<Report> {
    config.validate()?;
    let hash = config.hash();
    let pair = config.source_pair()?;
    let analytic = AnalyticReport::new(&pair, config.pair.individual_m)?;
    let run = simulate_hom(&pair, &config.experiment, config.seed, exec)?;
    let est = run.estimate;

    let dir = &config.outputs;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files: Vec<PathBuf> = [
        "report.json",
        "summary.json",
        "hist_parallel.csv",
        "hist_perpendicular.csv",
        "plot_data.csv",
    ]
    .iter()
    .map(|f| dir.join(f))
    .collect();

    let report = Report {
        config_hash: hash.clone(),
        seed: config.seed,
        n_pulses: config.experiment.n_pulses,
        analytic,
        simulated: est,
        simulated_within_bound: est.v_tpi <= analytic.upper_bound + 3.0 * est.sigma,
        files: files.clone(),
    };
    write_json(&files[0], &report)?;
    write_json(&files[1], &Summary::new(&est, &hash, config.seed))?;
    write_histogram(&files[2], &run.parallel, Some(&hash))?;
    write_histogram(&files[3], &run.perpendicular, Some(&hash))?;
    let par: Vec<f64> = run.parallel.counts.iter().map(|&c| c as f64).collect();
    let perp: Vec<f64> = run.perpendicular.counts.iter().map(|&c| c as f64).collect();
    write_columns(
        &files[4],
        &[
            ("delay_ns", &run.parallel.bin_centers),
            ("parallel", &par),
            ("perpendicular", &perp),
        ],
        Some(&hash),
    )?;
    Ok(report)
}
