//! Pulse-train Monte-Carlo synthesis of Hong-Ou-Mandel coincidence
//! histograms and the central-peak visibility estimator.
//!
//! Each excitation pulse, both sources independently: blink (two-state
//! Markov chain), emit with their brightness, draw an emission time from
//! their temporal profile, and mark the photon as a phonon-sideband photon
//! with the sideband probability. With probability g2 an emitted photon is
//! accompanied by an extra, fully distinguishable photon. For parallel
//! polarization two zero-phonon photons of the same pulse bunch with
//! probability equal to their overlap at the instantaneous detuning of the
//! two wandering lines; every other photon leaves the beam splitter at
//! random. Detection times get Gaussian jitter and every (D1, D2) click
//! pair within the window is histogrammed.
//!
//! Pulses are processed in fixed blocks of [`BLOCK_PULSES`]. Block `i` of a
//! run draws only from its own random streams, so merged histograms are
//! bit-identical whatever the number of workers. Blinking and wandering
//! restart from their stationary distributions at every block boundary, and
//! click pairs straddling a boundary are not counted.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::overlap::{apply_filter, dephased_overlap, mwo_voigt_averaged, SourcePair};
use crate::parallel::{map_indexed, Execution};
use crate::spectral::OuState;
use crate::units::{derive_seed, stream_rng, TimeGrid};
use crate::wavepacket::{emitter_profile, EmitterParams, WavepacketProfile};

/// Pulses per independently seeded block.
pub const BLOCK_PULSES: u64 = 65_536;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Parallel,
    Perpendicular,
}

impl Polarization {
    fn tag(self) -> u64 {
        match self {
            Polarization::Parallel => 1,
            Polarization::Perpendicular => 2,
        }
    }
}

fn default_rep_period() -> f64 {
    12.2
}
fn default_pulses() -> u64 {
    1_000_000
}
fn default_jitter() -> f64 {
    12.0
}
fn default_blink_on() -> f64 {
    0.9
}
fn default_dwell() -> f64 {
    100.0
}
fn default_bin_width() -> f64 {
    50.0
}
fn default_window_peaks() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomExperimentConfig {
    #[serde(default = "default_rep_period")]
    pub rep_period_ns: f64,
    #[serde(default = "default_pulses")]
    pub n_pulses: u64,
    #[serde(default = "default_jitter")]
    pub jitter_sigma_ps: f64,
    #[serde(default)]
    pub g2: f64,
    #[serde(default = "default_blink_on")]
    pub blink_on_prob: f64,
    #[serde(default = "default_dwell")]
    pub blink_dwell_ns: f64,
    #[serde(default = "default_bin_width")]
    pub bin_width_ps: f64,
    /// Side peaks recorded on each side of the central peak.
    #[serde(default = "default_window_peaks")]
    pub window_peaks: u32,
}

impl Default for HomExperimentConfig {
    fn default() -> Self {
        Self {
            rep_period_ns: default_rep_period(),
            n_pulses: default_pulses(),
            jitter_sigma_ps: default_jitter(),
            g2: 0.0,
            blink_on_prob: default_blink_on(),
            blink_dwell_ns: default_dwell(),
            bin_width_ps: default_bin_width(),
            window_peaks: default_window_peaks(),
        }
    }
}

impl HomExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("rep_period_ns", self.rep_period_ns)?;
        positive("bin_width_ps", self.bin_width_ps)?;
        positive("blink_dwell_ns", self.blink_dwell_ns)?;
        if !(self.jitter_sigma_ps.is_finite() && self.jitter_sigma_ps >= 0.0) {
            return Err(Error::domain("jitter_sigma_ps must be >= 0"));
        }
        if self.bin_width_ps * 1e-3 >= self.rep_period_ns {
            return Err(Error::domain("bins must be narrower than the repetition period"));
        }
        if !(0.0..1.0).contains(&self.g2) {
            return Err(Error::domain(format!("g2 must lie in [0, 1), got {}", self.g2)));
        }
        if !(0.0..=1.0).contains(&self.blink_on_prob) {
            return Err(Error::domain("blink_on_prob must lie in [0, 1]"));
        }
        if self.n_pulses == 0 || self.window_peaks == 0 {
            return Err(Error::domain("n_pulses and window_peaks must be >= 1"));
        }
        if self.n_pulses < 10_000 {
            log::warn!("{} pulses are too few for statistical statements", self.n_pulses);
        }
        Ok(())
    }

    /// Half width of the recorded delay window, (window_peaks + ½)·T.
    pub fn half_window_ns(&self) -> f64 {
        (self.window_peaks as f64 + 0.5) * self.rep_period_ns
    }

    /// Number of bins tiling the window; the bin width is adjusted so the
    /// bins tile it exactly.
    fn n_bins(&self) -> usize {
        ((2.0 * self.half_window_ns() / (self.bin_width_ps * 1e-3)).round() as usize).max(1)
    }
}

/// Coincidence counts against detector-time difference t(D2) − t(D1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub polarization: Polarization,
    pub rep_period_ns: f64,
    pub bin_centers: Vec<f64>,
    pub counts: Vec<u64>,
}

impl CoincidenceHistogram {
    pub fn bin_width(&self) -> f64 {
        match self.bin_centers.as_slice() {
            [a, b, ..] => b - a,
            _ => 0.0,
        }
    }

    /// Counts in the peak at delay `n·T`, integrated over a full period.
    pub fn peak_area(&self, n: i64) -> u64 {
        let center = n as f64 * self.rep_period_ns;
        let half = 0.5 * self.rep_period_ns;
        self.bin_centers
            .iter()
            .zip(&self.counts)
            .filter(|(c, _)| (*c - center).abs() < half)
            .map(|(_, k)| k)
            .sum()
    }

    pub fn central_area(&self) -> u64 {
        self.peak_area(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn same_binning(&self, other: &Self) -> bool {
        self.rep_period_ns == other.rep_period_ns && self.bin_centers == other.bin_centers
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityEstimate {
    pub v_tpi: f64,
    pub sigma: f64,
    pub a_par: f64,
    pub a_perp: f64,
}

/// V = 1 − A∥/A⊥ from the central peaks, with Poisson error propagation.
pub fn estimate_visibility(h_par: &CoincidenceHistogram, h_perp: &CoincidenceHistogram) -> Result<VisibilityEstimate> {
    if !h_par.same_binning(h_perp) {
        return Err(Error::GridMismatch("histograms use different binning".into()));
    }
    let a = h_par.central_area() as f64;
    let b = h_perp.central_area() as f64;
    if b == 0.0 {
        return Err(Error::Estimation("perpendicular central peak is empty".into()));
    }
    Ok(VisibilityEstimate {
        v_tpi: 1.0 - a / b,
        sigma: (a / (b * b) + a * a / (b * b * b)).sqrt(),
        a_par: a,
        a_perp: b,
    })
}

/// Voigt-averaged overlap reduced by the sideband fractions; a filter is
/// applied to both sources first.
pub fn analytic_prediction(pair: &SourcePair) -> Result<f64> {
    let pair = filtered_pair(pair)?;
    let m = mwo_voigt_averaged(&pair)?;
    Ok((1.0 - pair.a.sideband_fraction) * (1.0 - pair.b.sideband_fraction) * m)
}

/// The pair as seen behind its filter (unchanged when there is none).
pub fn filtered_pair(pair: &SourcePair) -> Result<SourcePair> {
    pair.validate()?;
    let Some(filter) = &pair.filter else {
        return Ok(pair.clone());
    };
    Ok(SourcePair {
        a: apply_filter(&pair.a, filter)?.params,
        b: apply_filter(&pair.b, filter)?.params,
        filter: None,
        ..pair.clone()
    })
}

/// Inverse-CDF sampler of emission times.
#[derive(Debug, Clone)]
struct EmissionSampler {
    start: f64,
    step: f64,
    cdf: Vec<f64>,
}

impl EmissionSampler {
    fn new(profile: &WavepacketProfile) -> Self {
        let grid = profile.grid();
        let intensity: Vec<f64> = profile.intensity().collect();
        let mut cdf = Vec::with_capacity(intensity.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in intensity.windows(2) {
            acc += 0.5 * (w[0] + w[1]);
            cdf.push(acc);
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Self {
            start: grid.start(),
            step: grid.step(),
            cdf,
        }
    }

    fn sample(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let (lo, hi) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.0 };
        self.start + self.step * ((i - 1) as f64 + frac)
    }
}

#[derive(Debug, Clone)]
struct SourceModel {
    brightness: f64,
    sideband: f64,
    sigma: f64,
    tau_c: f64,
    sampler: EmissionSampler,
}

impl SourceModel {
    fn new(params: &EmitterParams, grid: &TimeGrid) -> Result<Self> {
        Ok(Self {
            brightness: params.brightness,
            sideband: params.sideband_fraction,
            sigma: params.delta_omega.value(),
            tau_c: params.tau_c_ns,
            sampler: EmissionSampler::new(&emitter_profile(params, grid)?),
        })
    }
}

/// Everything one block needs; shared read-only between workers.
struct Run<'a> {
    cfg: &'a HomExperimentConfig,
    pol: Polarization,
    seed: u64,
    sources: [SourceModel; 2],
    s: f64,
    gamma_sum: f64,
    width_sum: f64,
    mean_detuning: f64,
    n_bins: usize,
}

#[derive(Clone, Copy)]
struct Photon {
    time: f64,
    zero_phonon: bool,
}

// Purposes of the per-block random streams.
const STREAM_EMIT: u64 = 1;
const STREAM_BLINK: u64 = 2;
const STREAM_WANDER: u64 = 3;
const STREAM_ROUTE: u64 = 4;

impl Run<'_> {
    fn block(&self, index: u64) -> Vec<u64> {
        let seed = |purpose| derive_seed(self.seed, purpose);
        let mut emit = stream_rng(seed(STREAM_EMIT), index);
        let mut blink = stream_rng(seed(STREAM_BLINK), index);
        let mut wander = stream_rng(seed(STREAM_WANDER), index);
        let mut route = stream_rng(seed(STREAM_ROUTE), index);

        let cfg = self.cfg;
        let period = cfg.rep_period_ns;
        let jitter = cfg.jitter_sigma_ps * 1e-3;
        let first = index * BLOCK_PULSES;
        let last = (first + BLOCK_PULSES).min(cfg.n_pulses);
        let t_first = first as f64 * period;

        let p_on = cfg.blink_on_prob;
        let blinking = p_on < 1.0;
        let keep = (-period / cfg.blink_dwell_ns).exp();
        let mut on = [true; 2];
        if blinking {
            for state in &mut on {
                *state = blink.random::<f64>() < p_on;
            }
        }
        let mut lines = self
            .sources
            .each_ref()
            .map(|src| OuState::stationary(src.sigma, src.tau_c, t_first, &mut wander));

        let capacity = ((last - first) as f64 * 0.6) as usize + 16;
        let mut d1 = Vec::with_capacity(capacity);
        let mut d2 = Vec::with_capacity(capacity);
        let mut click = |time: f64, to_d1: bool, route: &mut ChaCha8Rng| {
            let z: f64 = route.sample(StandardNormal);
            if to_d1 {
                d1.push(time + jitter * z);
            } else {
                d2.push(time + jitter * z);
            }
        };

        for k in first..last {
            let t0 = k as f64 * period;
            if blinking && k > first {
                for state in &mut on {
                    if blink.random::<f64>() >= keep {
                        *state = blink.random::<f64>() < p_on;
                    }
                }
            }

            // Emission draws happen whether or not the source is on, so runs
            // differing only in blinking see the same photons.
            let mut main: [Option<Photon>; 2] = [None, None];
            let mut extra: [Option<f64>; 2] = [None, None];
            for (s, src) in self.sources.iter().enumerate() {
                if emit.random::<f64>() < src.brightness {
                    let time = src.sampler.sample(emit.random());
                    let zero_phonon = emit.random::<f64>() >= src.sideband;
                    if cfg.g2 > 0.0 && emit.random::<f64>() < cfg.g2 {
                        extra[s] = Some(src.sampler.sample(emit.random()));
                    }
                    if on[s] {
                        main[s] = Some(Photon { time, zero_phonon });
                    } else {
                        extra[s] = None;
                    }
                }
            }

            match main {
                [Some(a), Some(b)] => {
                    let bunch = if self.pol == Polarization::Parallel && a.zero_phonon && b.zero_phonon {
                        let [la, lb] = &mut lines;
                        let detuning =
                            self.mean_detuning + la.advance_to(t0, &mut wander) - lb.advance_to(t0, &mut wander);
                        let m = dephased_overlap(self.s, self.gamma_sum, self.width_sum, detuning);
                        route.random::<f64>() < m
                    } else {
                        false
                    };
                    if bunch {
                        let to_d1 = route.random::<bool>();
                        click(t0 + a.time, to_d1, &mut route);
                        click(t0 + b.time, to_d1, &mut route);
                    } else {
                        let (ra, rb) = (route.random::<bool>(), route.random::<bool>());
                        click(t0 + a.time, ra, &mut route);
                        click(t0 + b.time, rb, &mut route);
                    }
                }
                [Some(p), None] | [None, Some(p)] => {
                    let r = route.random::<bool>();
                    click(t0 + p.time, r, &mut route);
                }
                [None, None] => {}
            }
            for t in extra.into_iter().flatten() {
                let r = route.random::<bool>();
                click(t0 + t, r, &mut route);
            }
        }

        d1.sort_unstable_by(f64::total_cmp);
        d2.sort_unstable_by(f64::total_cmp);
        self.correlate(&d1, &d2)
    }

    /// Histogram of t2 − t1 over all click pairs within the window.
    fn correlate(&self, d1: &[f64], d2: &[f64]) -> Vec<u64> {
        let half = self.cfg.half_window_ns();
        let width = 2.0 * half / self.n_bins as f64;
        let mut counts = vec![0u64; self.n_bins];
        let mut lo = 0;
        for &t1 in d1 {
            while lo < d2.len() && d2[lo] < t1 - half {
                lo += 1;
            }
            for &t2 in &d2[lo..] {
                let delay = t2 - t1;
                if delay >= half {
                    break;
                }
                let bin = ((delay + half) / width) as usize;
                if bin < self.n_bins {
                    counts[bin] += 1;
                }
            }
        }
        counts
    }
}

/// Simulates one polarization setting with the default execution strategy.
pub fn simulate_histogram(
    pair: &SourcePair,
    cfg: &HomExperimentConfig,
    pol: Polarization,
    seed: u64,
) -> Result<CoincidenceHistogram> {
    simulate_histogram_with(pair, cfg, pol, seed, Execution::default())
}

/// Simulates one polarization setting. Output is independent of `exec`.
pub fn simulate_histogram_with(
    pair: &SourcePair,
    cfg: &HomExperimentConfig,
    pol: Polarization,
    seed: u64,
    exec: Execution,
) -> Result<CoincidenceHistogram> {
    cfg.validate()?;
    let pair = filtered_pair(pair)?;
    let grid = TimeGrid::for_lifetimes_ps(&[pair.a.t1_ps, pair.b.t1_ps])?;
    let run = Run {
        cfg,
        pol,
        seed: derive_seed(seed, pol.tag()),
        sources: [SourceModel::new(&pair.a, &grid)?, SourceModel::new(&pair.b, &grid)?],
        s: pair.s_classical,
        gamma_sum: pair.a.gamma().value() + pair.b.gamma().value(),
        width_sum: pair.a.total_width().value() + pair.b.total_width().value(),
        mean_detuning: pair.mean_detuning.value(),
        n_bins: cfg.n_bins(),
    };
    let blocks = cfg.n_pulses.div_ceil(BLOCK_PULSES);
    let partial = map_indexed(exec, blocks, |i| run.block(i))?;
    let mut counts = vec![0u64; run.n_bins];
    for block in partial {
        for (c, k) in counts.iter_mut().zip(block) {
            *c += k;
        }
    }
    let half = cfg.half_window_ns();
    let width = 2.0 * half / run.n_bins as f64;
    let bin_centers = (0..run.n_bins).map(|i| -half + (i as f64 + 0.5) * width).collect();
    Ok(CoincidenceHistogram {
        polarization: pol,
        rep_period_ns: cfg.rep_period_ns,
        bin_centers,
        counts,
    })
}

/// Both polarization settings and the resulting visibility.
#[derive(Debug, Clone, PartialEq)]
pub struct HomRun {
    pub parallel: CoincidenceHistogram,
    pub perpendicular: CoincidenceHistogram,
    pub estimate: VisibilityEstimate,
}

pub fn simulate_hom(pair: &SourcePair, cfg: &HomExperimentConfig, seed: u64, exec: Execution) -> Result<HomRun> {
    let parallel = simulate_histogram_with(pair, cfg, Polarization::Parallel, seed, exec)?;
    let perpendicular = simulate_histogram_with(pair, cfg, Polarization::Perpendicular, seed, exec)?;
    let estimate = estimate_visibility(&parallel, &perpendicular)?;
    Ok(HomRun {
        parallel,
        perpendicular,
        estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{Frequency, Rate};

    fn identical_pair(t1: f64) -> SourcePair {
        let mut a = EmitterParams::ideal(t1);
        a.brightness = 0.3;
        SourcePair {
            a: a.clone(),
            b: a,
            mean_detuning: Frequency::ZERO,
            s_classical: 1.0,
            filter: None,
        }
    }

    fn quiet_cfg(n_pulses: u64) -> HomExperimentConfig {
        HomExperimentConfig {
            n_pulses,
            blink_on_prob: 1.0,
            ..HomExperimentConfig::default()
        }
    }

    fn hist(counts: Vec<u64>, centers: Vec<f64>) -> CoincidenceHistogram {
        CoincidenceHistogram {
            polarization: Polarization::Parallel,
            rep_period_ns: 12.2,
            bin_centers: centers,
            counts,
        }
    }

    #[test]
    fn estimator_examples() {
        let centers = vec![-12.2, 0.0, 12.2];
        let par = hist(vec![10, 40, 10], centers.clone());
        let perp = hist(vec![10, 40, 10], centers.clone());
        assert_eq!(estimate_visibility(&par, &perp).unwrap().v_tpi, 0.0);
        let par = hist(vec![10, 0, 10], centers.clone());
        let est = estimate_visibility(&par, &perp).unwrap();
        assert_eq!(est.v_tpi, 1.0);
        assert_eq!(est.sigma, 0.0);
        let empty = hist(vec![10, 0, 10], centers.clone());
        assert!(matches!(estimate_visibility(&par, &empty), Err(Error::Estimation(_))));
        let other = hist(vec![1, 1], vec![0.0, 1.0]);
        assert!(estimate_visibility(&par, &other).is_err());
    }

    #[test]
    fn estimator_error_propagation() {
        let centers = vec![0.0];
        let est = estimate_visibility(&hist(vec![400], centers.clone()), &hist(vec![1000], centers)).unwrap();
        let want = (400.0 / 1e6 + 400.0f64.powi(2) / 1e9).sqrt();
        assert!((est.sigma - want).abs() < 1e-15);
    }

    #[test]
    fn sampler_reproduces_exponential_mean() {
        let p = EmitterParams::ideal(200.0);
        let grid = TimeGrid::for_lifetimes_ps(&[200.0]).unwrap();
        let sampler = EmissionSampler::new(&emitter_profile(&p, &grid).unwrap());
        let n = 100_000;
        let mut rng = stream_rng(1, 0);
        let mean = (0..n).map(|_| sampler.sample(rng.random())).sum::<f64>() / n as f64;
        assert!((mean - 0.2).abs() < 4.0 * 0.2 / (n as f64).sqrt(), "{mean}");
        assert_eq!(sampler.sample(0.0), 0.0);
        assert!(sampler.sample(1.0 - 1e-16) <= grid.end());
    }

    #[test]
    fn perfect_sources_suppress_central_peak() {
        let h = simulate_histogram(&identical_pair(150.0), &quiet_cfg(200_000), Polarization::Parallel, 3).unwrap();
        assert_eq!(h.central_area(), 0);
        assert!(h.peak_area(1) > 1000);
    }

    #[test]
    fn perpendicular_central_peak_is_half_a_side_peak() {
        // Two independent single-photon sources of equal brightness:
        // same-pulse pairs split with probability ½, whereas side peaks also
        // collect pairs from a single source.
        let h = simulate_histogram(
            &identical_pair(150.0),
            &quiet_cfg(400_000),
            Polarization::Perpendicular,
            5,
        )
        .unwrap();
        let c = h.central_area() as f64;
        let side = 0.5 * (h.peak_area(1) + h.peak_area(-1)) as f64;
        let sigma = (c + 0.125 * side).sqrt();
        assert!((c - 0.5 * side).abs() < 3.0 * sigma, "{c} vs {side}");
    }

    #[test]
    fn execution_strategy_does_not_change_counts() {
        let mut pair = identical_pair(162.0);
        pair.a.delta_omega = Rate::new(3.0).unwrap();
        pair.a.tau_c_ns = 50.0;
        let cfg = HomExperimentConfig {
            n_pulses: 3 * BLOCK_PULSES + 17,
            g2: 0.01,
            ..HomExperimentConfig::default()
        };
        let seq = simulate_histogram_with(&pair, &cfg, Polarization::Parallel, 9, Execution::Sequential).unwrap();
        let par = simulate_histogram_with(
            &pair,
            &cfg,
            Polarization::Parallel,
            9,
            Execution::Parallel { threads: Some(3) },
        )
        .unwrap();
        assert_eq!(seq, par);
        let other = simulate_histogram_with(&pair, &cfg, Polarization::Parallel, 10, Execution::Sequential).unwrap();
        assert_ne!(seq, other);
    }

    #[test]
    fn histogram_bins_tile_window() {
        let cfg = quiet_cfg(10_000);
        let h = simulate_histogram(&identical_pair(150.0), &cfg, Polarization::Perpendicular, 1).unwrap();
        let w = h.bin_width();
        assert!((w * h.bin_centers.len() as f64 - 2.0 * cfg.half_window_ns()).abs() < 1e-9);
        assert!((h.bin_centers[0] + cfg.half_window_ns() - 0.5 * w).abs() < 1e-12);
    }

    #[test]
    fn prediction_without_sideband_is_voigt_average() {
        let pair = identical_pair(150.0);
        assert_eq!(analytic_prediction(&pair).unwrap(), mwo_voigt_averaged(&pair).unwrap());
        let mut pair = pair;
        pair.a.sideband_fraction = 0.1;
        pair.b.sideband_fraction = 0.2;
        let want = 0.9 * 0.8 * mwo_voigt_averaged(&pair).unwrap();
        assert!((analytic_prediction(&pair).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(HomExperimentConfig::default().validate().is_ok());
        for bad in [
            HomExperimentConfig {
                g2: 1.0,
                ..Default::default()
            },
            HomExperimentConfig {
                rep_period_ns: 0.0,
                ..Default::default()
            },
            HomExperimentConfig {
                bin_width_ps: 20_000.0,
                ..Default::default()
            },
            HomExperimentConfig {
                blink_on_prob: 1.5,
                ..Default::default()
            },
            HomExperimentConfig {
                n_pulses: 0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
