//! Time-resolved photoluminescence decay fits.

use serde::{Deserialize, Serialize};

use super::lm::{least_squares, Bound, FitResult, Model, Observation};
use crate::error::{Error, Result};
use crate::units::HBAR_UEV_NS;

/// Photon counts against time, with a known constant background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeTrace {
    pub time_ps: Vec<f64>,
    pub counts: Vec<f64>,
    #[serde(default)]
    pub background: f64,
}

impl LifetimeTrace {
    pub fn new(time_ps: Vec<f64>, counts: Vec<f64>, background: f64) -> Result<Self> {
        let t = Self {
            time_ps,
            counts,
            background,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_ps.len() != self.counts.len() {
            return Err(Error::domain("time and count columns differ in length"));
        }
        if self.counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::domain("counts must be finite and >= 0"));
        }
        if self.time_ps.iter().any(|t| !t.is_finite()) {
            return Err(Error::domain("times must be finite"));
        }
        if !(self.background.is_finite() && self.background >= 0.0) {
            return Err(Error::domain("background must be finite and >= 0"));
        }
        Ok(())
    }

    /// Points sorted by time, weighted with Poisson uncertainties.
    fn observations(&self) -> Vec<Observation<f64>> {
        let mut obs: Vec<_> = self
            .time_ps
            .iter()
            .zip(&self.counts)
            .map(|(&t, &c)| Observation::weighted(t, c, c.max(1.0).sqrt()))
            .collect();
        obs.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        obs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LifetimeModel {
    MonoExp,
    FssBeating,
}

/// A·exp(−t/T1) + background (known) for t ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonoExpModel {
    pub background: f64,
}

impl Model for MonoExpModel {
    type X = f64;

    fn names(&self) -> &[&'static str] {
        &["amplitude", "t1_ps"]
    }

    fn value(&self, t: f64, p: &[f64]) -> f64 {
        if t < 0.0 {
            self.background
        } else {
            p[0] * (-t / p[1]).exp() + self.background
        }
    }

    fn gradient(&self, t: f64, p: &[f64], g: &mut [f64]) {
        if t < 0.0 {
            g.fill(0.0);
            return;
        }
        let e = (-t / p[1]).exp();
        g[0] = e;
        g[1] = p[0] * e * t / (p[1] * p[1]);
    }
}

/// A·sin²(Δ_FSS(t − t0)/2ħ)·exp(−(t − t0)/T1) + B for t ≥ t0, B before.
/// The dipole-angle factor sin²(2θ) is absorbed into A.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FssBeatingModel;

/// Converts μeV·ps into radians of the half beat phase: Δ·t/2ħ.
const HALF_BEAT: f64 = 1e-3 / (2.0 * HBAR_UEV_NS);

impl Model for FssBeatingModel {
    type X = f64;

    fn names(&self) -> &[&'static str] {
        &["amplitude_sin2_2theta", "t1_ps", "fss_uev", "t0_ps", "background"]
    }

    fn value(&self, t: f64, p: &[f64]) -> f64 {
        let x = t - p[3];
        if x < 0.0 {
            return p[4];
        }
        p[0] * (HALF_BEAT * p[2] * x).sin().powi(2) * (-x / p[1]).exp() + p[4]
    }

    fn gradient(&self, t: f64, p: &[f64], g: &mut [f64]) {
        let x = t - p[3];
        g[4] = 1.0;
        if x < 0.0 {
            g[..4].fill(0.0);
            return;
        }
        let phase = HALF_BEAT * p[2] * x;
        let (s, c) = phase.sin_cos();
        let e = (-x / p[1]).exp();
        let sin2 = s * s;
        // d sin²(φ)/dφ = sin(2φ)
        let dsin2 = 2.0 * s * c;
        g[0] = sin2 * e;
        g[1] = p[0] * sin2 * e * x / (p[1] * p[1]);
        g[2] = p[0] * dsin2 * HALF_BEAT * x * e;
        g[3] = -p[0] * e * (dsin2 * HALF_BEAT * p[2] - sin2 / p[1]);
    }
}

const MIN_POINTS: usize = 100;
const MIN_SPAN_LIFETIMES: f64 = 3.0;

/// Fits a decay trace; see [`MonoExpModel`] and [`FssBeatingModel`] for
/// the parameters returned.
pub fn fit_lifetime(trace: &LifetimeTrace, model: LifetimeModel) -> Result<FitResult> {
    trace.validate()?;
    if trace.time_ps.len() < MIN_POINTS {
        return Err(Error::UnderDetermined(format!(
            "lifetime fits need at least {MIN_POINTS} points, got {}",
            trace.time_ps.len()
        )));
    }
    let obs = trace.observations();
    let fit = match model {
        LifetimeModel::MonoExp => {
            let m = MonoExpModel {
                background: trace.background,
            };
            let init = mono_initial_guess(&obs, trace.background)?;
            least_squares(&m, &obs, &init, &[Bound::at_least(0.0), Bound::new(1e-3, 1e9)])?
        }
        LifetimeModel::FssBeating => {
            let init = fss_initial_guess(&obs)?;
            let bounds = [
                Bound::at_least(0.0),
                Bound::new(1e-3, 1e9),
                Bound::at_least(0.0),
                Bound::FREE,
                Bound::at_least(0.0),
            ];
            least_squares(&FssBeatingModel, &obs, &init, &bounds)?
        }
    };
    let t1 = fit.param("t1_ps");
    let span = obs.last().map_or(0.0, |o| o.x) - obs.first().map_or(0.0, |o| o.x);
    if span < MIN_SPAN_LIFETIMES * t1 {
        log::warn!("trace spans {span:.1} ps, less than {MIN_SPAN_LIFETIMES} fitted lifetimes ({t1:.1} ps)");
    }
    Ok(fit)
}

/// Weighted log-linear regression of the tail between the peak and the
/// point where the signal falls to 1% of it.
fn mono_initial_guess(obs: &[Observation<f64>], background: f64) -> Result<Vec<f64>> {
    let (peak_idx, peak) = obs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.y.total_cmp(&b.1.y))
        .map(|(i, o)| (i, o.y - background))
        .ok_or_else(|| Error::Estimation("empty trace".into()))?;
    if peak <= 0.0 {
        return Err(Error::Estimation("no signal above background".into()));
    }
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for o in &obs[peak_idx..] {
        let signal = o.y - background;
        if signal < 0.01 * peak {
            break;
        }
        let (x, y, w) = (o.x, signal.ln(), signal);
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let denom = sw * sxx - sx * sx;
    if !(denom > 0.0) {
        return Err(Error::Estimation("tail too short for an initial lifetime".into()));
    }
    let slope = (sw * sxy - sx * sy) / denom;
    if !(slope < 0.0) {
        return Err(Error::Estimation("trace does not decay".into()));
    }
    let intercept = (sy - slope * sx) / sw;
    Ok(vec![intercept.exp(), -1.0 / slope])
}

fn moving_average(y: &[f64], half: usize) -> Vec<f64> {
    let mut prefix = vec![0.0; y.len() + 1];
    for (i, v) in y.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(y.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Background from the pre-rise samples, t0 from the rise, Δ_FSS from the
/// first minimum after the peak and T1 from the peak position.
fn fss_initial_guess(obs: &[Observation<f64>]) -> Result<Vec<f64>> {
    let n = obs.len();
    let y: Vec<f64> = obs.iter().map(|o| o.y).collect();
    let smooth = moving_average(&y, (n / 200).max(1));
    let (peak_idx, &peak) = smooth
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Estimation("empty trace".into()))?;
    let tail = &smooth[n - n / 20..];
    let mut background = tail.iter().sum::<f64>() / tail.len() as f64;
    let rise = (0..peak_idx)
        .find(|&i| smooth[i] - background > 0.02 * (peak - background))
        .unwrap_or(0);
    if rise >= 5 {
        background = smooth[..rise].iter().sum::<f64>() / rise as f64;
    }
    let t0 = obs[rise].x;

    let mut minimum = None;
    let mut best = peak_idx;
    for i in peak_idx + 1..n {
        if smooth[i] < smooth[best] {
            best = i;
        } else if smooth[i] - smooth[best] > 3.0 * smooth[best].max(1.0).sqrt() {
            minimum = Some(best);
            break;
        }
    }
    let min_idx = minimum.ok_or_else(|| {
        Error::Estimation("no beating minimum found in the trace; fit a mono-exponential instead".into())
    })?;
    let period = obs[min_idx].x - t0;
    if !(period > 0.0) {
        return Err(Error::Estimation("beating minimum precedes the rise".into()));
    }
    let fss = std::f64::consts::PI / (HALF_BEAT * period);
    let a = HALF_BEAT * fss;
    let x_peak = (obs[peak_idx].x - t0).max(1e-3);
    // The peak of sin²(a·x)·exp(−x/T1) solves 2a·cot(a·x) = 1/T1.
    let t1 = ((a * x_peak).tan() / (2.0 * a)).clamp(1.0, 10.0 * period);
    let shape = (a * x_peak).sin().powi(2) * (-x_peak / t1).exp();
    let amplitude = ((peak - background) / shape).max(1.0);
    Ok(vec![amplitude, t1, fss, t0, background.max(0.0)])
}
