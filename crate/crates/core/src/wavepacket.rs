//! Temporal amplitude profiles of single photons and their classical overlap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{energy_to_angular_rate, lifetime_to_rate, EnergySplitting, Frequency, Rate, TimeGrid};

/// Exciton charge configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ChargeState {
    /// Neutral exciton (fine-structure split).
    #[default]
    X,
    /// Charged exciton (trion), single-exponential decay.
    CX,
}

fn default_tau_c_ns() -> f64 {
    1400.0
}
fn default_brightness() -> f64 {
    0.15
}
fn default_sideband() -> f64 {
    0.05
}

/// Parameters of one quantum-emitter source. Keys carry their units when
/// serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterParams {
    pub t1_ps: f64,
    #[serde(rename = "gamma_star_ns_inv", default)]
    pub gamma_star: Rate,
    /// Standard deviation of the wandering centre frequency.
    #[serde(rename = "delta_omega_ns_inv", default)]
    pub delta_omega: Rate,
    #[serde(default = "default_tau_c_ns")]
    pub tau_c_ns: f64,
    #[serde(rename = "omega0_rad_per_ns", default)]
    pub omega0: Frequency,
    #[serde(rename = "fss_uev", default)]
    pub fss: EnergySplitting,
    /// Dipole angle; enters only absolute intensities, never normalized profiles.
    #[serde(rename = "theta_rad", default)]
    pub theta: f64,
    #[serde(default)]
    pub charge: ChargeState,
    #[serde(default = "default_brightness")]
    pub brightness: f64,
    #[serde(default = "default_sideband")]
    pub sideband_fraction: f64,
}

impl EmitterParams {
    /// A trion-like emitter with lifetime `t1_ps` and no noise.
    pub fn ideal(t1_ps: f64) -> Self {
        Self {
            t1_ps,
            gamma_star: Rate::ZERO,
            delta_omega: Rate::ZERO,
            tau_c_ns: default_tau_c_ns(),
            omega0: Frequency::ZERO,
            fss: EnergySplitting::ZERO,
            theta: 0.0,
            charge: ChargeState::CX,
            brightness: default_brightness(),
            sideband_fraction: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1_ps.is_finite() && self.t1_ps > 0.0) {
            return Err(Error::domain(format!("t1_ps must be > 0, got {}", self.t1_ps)));
        }
        if !(self.tau_c_ns.is_finite() && self.tau_c_ns > 0.0) {
            return Err(Error::domain(format!("tau_c_ns must be > 0, got {}", self.tau_c_ns)));
        }
        for (name, p) in [
            ("brightness", self.brightness),
            ("sideband_fraction", self.sideband_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::domain(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    /// Radiative rate γ = 1/T1.
    pub fn gamma(&self) -> Rate {
        lifetime_to_rate(self.t1_ps).unwrap_or(Rate::ZERO)
    }

    /// Total Lorentzian width Γ = γ + γ*.
    pub fn total_width(&self) -> Rate {
        Rate::new(self.gamma().value() + self.gamma_star.value()).unwrap_or(Rate::ZERO)
    }

    /// Uses the beating profile when the emitter is a split neutral exciton.
    pub fn shows_beating(&self) -> bool {
        self.charge == ChargeState::X && self.fss.value() > 0.0
    }
}

/// Normalized temporal amplitude magnitude f(t) ≥ 0 with ∫f² dt = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WavepacketProfile {
    grid: TimeGrid,
    f: Vec<f64>,
}

impl WavepacketProfile {
    /// Builds a profile from an (unnormalized) intensity |ψ(t)|² sampled on `grid`.
    pub fn from_intensity(grid: TimeGrid, intensity: Vec<f64>) -> Result<Self> {
        if intensity.len() != grid.len() {
            return Err(Error::domain("intensity and grid lengths differ"));
        }
        if intensity.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain("intensity samples must be finite and >= 0"));
        }
        let norm = grid.integrate(&intensity);
        if !(norm > 0.0) {
            return Err(Error::domain("intensity integrates to zero"));
        }
        let f = intensity.into_iter().map(|i| (i / norm).sqrt()).collect();
        Ok(Self { grid, f })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.f
    }

    pub fn intensity(&self) -> impl Iterator<Item = f64> + '_ {
        self.f.iter().map(|v| v * v)
    }

    /// ∫f² dt on the profile grid.
    pub fn norm(&self) -> f64 {
        let sq: Vec<f64> = self.intensity().collect();
        self.grid.integrate(&sq)
    }

    /// Linear interpolation of f, zero outside the grid.
    pub fn value_at(&self, t: f64) -> f64 {
        let x = (t - self.grid.start()) / self.grid.step();
        if x < 0.0 || x > (self.f.len() - 1) as f64 {
            return 0.0;
        }
        let i = x.floor() as usize;
        if i + 1 >= self.f.len() {
            return self.f[self.f.len() - 1];
        }
        let w = x - i as f64;
        self.f[i] * (1.0 - w) + self.f[i + 1] * w
    }

    fn resample(&self, grid: &TimeGrid) -> Vec<f64> {
        grid.times().map(|t| self.value_at(t)).collect()
    }
}

const MIN_SAMPLES: usize = 2000;
const MIN_SPAN_LIFETIMES: f64 = 5.0;

fn check_grid(params: &EmitterParams, grid: &TimeGrid) -> Result<()> {
    params.validate()?;
    let required = MIN_SPAN_LIFETIMES * params.t1_ps * 1e-3;
    if grid.end() < required {
        return Err(Error::Truncation {
            span_ns: grid.end(),
            required_ns: required,
        });
    }
    if grid.len() < MIN_SAMPLES {
        return Err(Error::domain(format!(
            "profile grids need at least {MIN_SAMPLES} samples, got {}",
            grid.len()
        )));
    }
    Ok(())
}

/// f(t) ∝ exp(−γt/2) for t ≥ 0.
pub fn mono_exponential_profile(params: &EmitterParams, grid: &TimeGrid) -> Result<WavepacketProfile> {
    check_grid(params, grid)?;
    let gamma = params.gamma().value();
    let intensity = grid
        .times()
        .map(|t| if t < 0.0 { 0.0 } else { (-gamma * t).exp() })
        .collect();
    WavepacketProfile::from_intensity(*grid, intensity)
}

/// f²(t) ∝ sin²(Δ_FSS·t/2ħ)·exp(−t/T1) for t ≥ 0.
///
/// The sin²(2θ) prefactor drops out under normalization. A zero splitting
/// falls back to the mono-exponential profile.
pub fn fss_beating_profile(params: &EmitterParams, grid: &TimeGrid) -> Result<WavepacketProfile> {
    if params.charge != ChargeState::X {
        return Err(Error::domain("fine-structure beating requires a neutral exciton (X)"));
    }
    if params.fss.value() == 0.0 {
        return mono_exponential_profile(params, grid);
    }
    check_grid(params, grid)?;
    let gamma = params.gamma().value();
    let half_beat = 0.5 * energy_to_angular_rate(params.fss).value();
    let intensity = grid
        .times()
        .map(|t| {
            if t < 0.0 {
                0.0
            } else {
                (half_beat * t).sin().powi(2) * (-gamma * t).exp()
            }
        })
        .collect();
    WavepacketProfile::from_intensity(*grid, intensity)
}

/// The profile matching the emitter: beating for split neutral excitons,
/// mono-exponential otherwise.
pub fn emitter_profile(params: &EmitterParams, grid: &TimeGrid) -> Result<WavepacketProfile> {
    if params.shows_beating() {
        fss_beating_profile(params, grid)
    } else {
        mono_exponential_profile(params, grid)
    }
}

/// Maximum mass a profile may lose when resampled onto another grid.
const RESAMPLE_TOLERANCE: f64 = 1e-4;

/// Generalised classical overlap s = [∫ f_p f_q dt]².
///
/// Profiles on different grids are interpolated onto the finer one; the
/// result is symmetric in its arguments.
pub fn classical_overlap(p: &WavepacketProfile, q: &WavepacketProfile) -> Result<f64> {
    let inner = if p.grid == q.grid {
        let prod: Vec<f64> = p.f.iter().zip(&q.f).map(|(a, b)| a * b).collect();
        p.grid.integrate(&prod)
    } else {
        let target = finer_grid(&p.grid, &q.grid);
        let fp = p.resample(&target);
        let fq = q.resample(&target);
        for (name, f) in [("first", &fp), ("second", &fq)] {
            let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
            let kept = target.integrate(&sq);
            if (kept - 1.0).abs() > RESAMPLE_TOLERANCE {
                return Err(Error::GridMismatch(format!(
                    "{name} profile keeps {kept:.6} of its norm on the common grid"
                )));
            }
        }
        let prod: Vec<f64> = fp.iter().zip(&fq).map(|(a, b)| a * b).collect();
        target.integrate(&prod)
    };
    Ok((inner * inner).clamp(0.0, 1.0))
}

fn finer_grid(a: &TimeGrid, b: &TimeGrid) -> TimeGrid {
    let key = |g: &TimeGrid| (g.step(), g.start(), -(g.len() as f64));
    if key(a).partial_cmp(&key(b)) == Some(std::cmp::Ordering::Greater) {
        *b
    } else {
        *a
    }
}

/// Closed-form temporal overlap of two mono-exponential photons, 4γᵢγⱼ/(γᵢ+γⱼ)².
pub fn closed_form_temporal_overlap(gamma_i: Rate, gamma_j: Rate) -> Result<f64> {
    let (a, b) = (gamma_i.value(), gamma_j.value());
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::domain("temporal overlap needs strictly positive rates"));
    }
    Ok(4.0 * a * b / ((a + b) * (a + b)))
}
