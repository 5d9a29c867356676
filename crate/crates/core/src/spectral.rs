//! Spectral wandering as a stationary Ornstein-Uhlenbeck process and the
//! delay dependence of the two-photon visibility from a single source.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::overlap::voigt;
use crate::units::{stream_rng, Frequency, Rate};

/// Gauss-Markov frequency wandering with stationary spread `sigma` and
/// correlation time `tau_c_ns`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WanderingProcess {
    #[serde(rename = "sigma_ns_inv")]
    pub sigma: Rate,
    pub tau_c_ns: f64,
    pub seed: u64,
}

impl WanderingProcess {
    pub fn new(sigma: Rate, tau_c_ns: f64, seed: u64) -> Result<Self> {
        if !(tau_c_ns.is_finite() && tau_c_ns > 0.0) {
            return Err(Error::domain(format!("tau_c_ns must be > 0, got {tau_c_ns}")));
        }
        Ok(Self { sigma, tau_c_ns, seed })
    }
}

/// Current value of one Ornstein-Uhlenbeck path. Advancing uses the exact
/// conditional transition, so any step size is allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuState {
    sigma: f64,
    tau_c: f64,
    time: f64,
    value: f64,
}

impl OuState {
    /// Draws the starting value at `time` from the stationary distribution.
    pub fn stationary<R: Rng + ?Sized>(sigma: f64, tau_c: f64, time: f64, rng: &mut R) -> Self {
        let z: f64 = rng.sample(StandardNormal);
        Self {
            sigma,
            tau_c,
            time,
            value: sigma * z,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Moves the path forward to `time` and returns its value there. Times
    /// at or before the current one return the current value unchanged.
    pub fn advance_to<R: Rng + ?Sized>(&mut self, time: f64, rng: &mut R) -> f64 {
        let dt = time - self.time;
        if dt > 0.0 {
            if self.sigma > 0.0 {
                let rho = (-dt / self.tau_c).exp();
                let z: f64 = rng.sample(StandardNormal);
                self.value = self.value * rho + self.sigma * (1.0 - rho * rho).sqrt() * z;
            }
            self.time = time;
        }
        self.value
    }
}

/// Samples the wandering detuning at increasing `times_ns`.
pub fn sample_frequency_path(p: &WanderingProcess, times_ns: &[f64]) -> Result<Vec<Frequency>> {
    if times_ns.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("sample times must be strictly increasing"));
    }
    let Some(&first) = times_ns.first() else {
        return Ok(Vec::new());
    };
    let mut rng = stream_rng(p.seed, 0);
    let mut state = OuState::stationary(p.sigma.value(), p.tau_c_ns, first, &mut rng);
    times_ns
        .iter()
        .map(|&t| Frequency::new(state.advance_to(t, &mut rng)))
        .collect()
}

/// V(Δτ) = V₀ / [1 + 2δω_r²(1 − e^{−Δτ/τ_c})].
pub fn visibility_vs_delay(v0: f64, delta_omega_r: f64, tau_c_ns: f64, delay_ns: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v0) {
        return Err(Error::domain(format!("v0 must lie in [0, 1], got {v0}")));
    }
    if !(delta_omega_r >= 0.0 && tau_c_ns > 0.0 && delay_ns >= 0.0) {
        return Err(Error::domain("need delta_omega_r >= 0, tau_c > 0 and delay >= 0"));
    }
    Ok(v0 / (1.0 + 2.0 * delta_omega_r.powi(2) * (1.0 - (-delay_ns / tau_c_ns).exp())))
}

/// V(0) = γ/(γ + γ*).
pub fn intrinsic_visibility(gamma: Rate, gamma_star: Rate) -> Result<f64> {
    if gamma.value() <= 0.0 {
        return Err(Error::domain("gamma must be > 0"));
    }
    Ok(gamma.value() / (gamma.value() + gamma_star.value()))
}

/// Exact Gaussian average of the single-source overlap at photon separation
/// `delay_ns`: the detuning between the two photons is Normal(0, 2σ²(1 − e^{−Δτ/τ_c})).
///
/// [`visibility_vs_delay`] is the first-order expansion of this average in
/// the detuning variance; the two agree as δω_r → 0.
pub fn averaged_visibility_vs_delay(
    gamma: Rate,
    gamma_star: Rate,
    delta_omega: Rate,
    tau_c_ns: f64,
    delay_ns: f64,
) -> Result<f64> {
    let v0 = intrinsic_visibility(gamma, gamma_star)?;
    if !(tau_c_ns > 0.0 && delay_ns >= 0.0) {
        return Err(Error::domain("need tau_c > 0 and delay >= 0"));
    }
    let width = gamma.value() + gamma_star.value();
    let spread = delta_omega.value() * (2.0 * (1.0 - (-delay_ns / tau_c_ns).exp())).sqrt();
    if spread == 0.0 {
        return Ok(v0);
    }
    Ok(v0 * PI * width * voigt(0.0, width, spread)?)
}

/// Uncertainty assigned to a point flagged as a possible outlier, unless
/// its own uncertainty is already larger.
pub const OUTLIER_SIGMA: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayPoint {
    pub delay_ns: f64,
    pub visibility: f64,
    pub sigma_v: f64,
    #[serde(default)]
    pub outlier: bool,
}

impl DelayPoint {
    pub fn new(delay_ns: f64, visibility: f64, sigma_v: f64) -> Self {
        Self {
            delay_ns,
            visibility,
            sigma_v,
            outlier: false,
        }
    }

    /// Uncertainty used for weighting, inflated for flagged points.
    pub fn effective_sigma(&self) -> f64 {
        if self.outlier {
            self.sigma_v.max(OUTLIER_SIGMA)
        } else {
            self.sigma_v
        }
    }
}

/// Visibility measured at several photon separations for one source and
/// one filter setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayVisibilitySeries {
    entries: Vec<DelayPoint>,
    pub source_label: String,
    pub filtered: bool,
}

impl DelayVisibilitySeries {
    /// Entries are sorted by delay; delays must be distinct.
    pub fn new(mut entries: Vec<DelayPoint>, source_label: impl Into<String>, filtered: bool) -> Result<Self> {
        for p in &entries {
            if !(p.delay_ns.is_finite() && p.delay_ns >= 0.0) {
                return Err(Error::domain(format!(
                    "delay must be finite and >= 0, got {}",
                    p.delay_ns
                )));
            }
            if !(0.0..=1.0).contains(&p.visibility) {
                return Err(Error::domain(format!(
                    "visibility must lie in [0, 1], got {}",
                    p.visibility
                )));
            }
            if !(p.sigma_v.is_finite() && p.sigma_v >= 0.0) {
                return Err(Error::domain(format!(
                    "sigma_v must be finite and >= 0, got {}",
                    p.sigma_v
                )));
            }
        }
        entries.sort_by(|a, b| a.delay_ns.total_cmp(&b.delay_ns));
        if entries.windows(2).any(|w| w[0].delay_ns == w[1].delay_ns) {
            return Err(Error::domain("delays must be distinct"));
        }
        Ok(Self {
            entries,
            source_label: source_label.into(),
            filtered,
        })
    }

    pub fn entries(&self) -> &[DelayPoint] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Flags the point closest to `delay_ns` as a possible outlier.
    pub fn flag_outlier(&mut self, delay_ns: f64) -> Result<()> {
        let p = self
            .entries
            .iter_mut()
            .min_by(|a, b| (a.delay_ns - delay_ns).abs().total_cmp(&(b.delay_ns - delay_ns).abs()))
            .ok_or_else(|| Error::domain("cannot flag a point in an empty series"))?;
        p.outlier = true;
        Ok(())
    }
}
