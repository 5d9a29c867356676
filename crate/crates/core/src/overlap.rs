//! Closed-form mean wavepacket overlaps, the Voigt evaluator, the
//! indistinguishability bounds and the spectral-filter model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faddeeva::faddeeva;
use crate::units::{integrate_fn, stream_rng, Frequency, Rate, Wavelength};
use crate::wavepacket::EmitterParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FilterShape {
    #[default]
    Lorentzian,
}

/// Spectral filter placed in front of the interferometer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    #[serde(rename = "center_nm")]
    pub center: Wavelength,
    pub fwhm_pm: f64,
    #[serde(default)]
    pub shape: FilterShape,
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_pm.is_finite() && self.fwhm_pm > 0.0) {
            return Err(Error::domain(format!(
                "filter fwhm must be > 0 pm, got {}",
                self.fwhm_pm
            )));
        }
        Ok(())
    }

    /// Full width at half maximum in rad/ns.
    pub fn fwhm_angular(&self) -> Rate {
        self.center.width_pm_to_angular(self.fwhm_pm)
    }
}

/// Two sources brought to mutual resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcePair {
    pub a: EmitterParams,
    pub b: EmitterParams,
    /// Mean detuning ω_a − ω_b.
    #[serde(rename = "mean_detuning_rad_per_ns", default)]
    pub mean_detuning: Frequency,
    /// Classical temporal overlap of the two wavepackets.
    pub s_classical: f64,
    #[serde(default)]
    pub filter: Option<FilterParams>,
}

impl SourcePair {
    pub fn validate(&self) -> Result<()> {
        self.a.validate()?;
        self.b.validate()?;
        if !(0.0..=1.0).contains(&self.s_classical) {
            return Err(Error::domain(format!(
                "s_classical must lie in [0, 1], got {}",
                self.s_classical
            )));
        }
        if let Some(f) = &self.filter {
            f.validate()?;
        }
        Ok(())
    }

    /// Standard deviation of the detuning, √(δω_a² + δω_b²).
    pub fn delta_omega(&self) -> f64 {
        self.a.delta_omega.value().hypot(self.b.delta_omega.value())
    }

    /// Mean Lorentzian width Γ̄ = (Γ_a + Γ_b)/2.
    pub fn mean_width(&self) -> f64 {
        0.5 * (self.a.total_width().value() + self.b.total_width().value())
    }

    fn check_rates(&self) -> Result<()> {
        if self.a.total_width().value() <= 0.0 || self.b.total_width().value() <= 0.0 {
            return Err(Error::domain("total widths must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverlapMethod {
    /// Lifetime-limited overlap, see [`mwo_no_dephasing`].
    Eq1,
    /// Pure dephasing at the mean detuning, see [`mwo_with_dephasing`].
    Eq5,
    /// Voigt average over spectral wandering, see [`mwo_voigt_averaged`].
    Eq6Voigt,
    /// Sampled average over spectral wandering.
    MonteCarloAvg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapResult {
    pub m: f64,
    pub upper_bound: f64,
    pub method: OverlapMethod,
}

impl OverlapResult {
    /// Evaluates `method` for the pair. The bound uses the individual
    /// indistinguishabilities when known, otherwise the classical overlap.
    pub fn evaluate(pair: &SourcePair, method: OverlapMethod, individual: Option<(f64, f64)>) -> Result<Self> {
        let m = match method {
            OverlapMethod::Eq1 => mwo_no_dephasing(pair.a.gamma(), pair.b.gamma(), pair.mean_detuning)?,
            OverlapMethod::Eq5 => mwo_with_dephasing(pair)?,
            OverlapMethod::Eq6Voigt => mwo_voigt_averaged(pair)?,
            OverlapMethod::MonteCarloAvg => mwo_monte_carlo_average(pair, 1_000_000, 0)?.mean,
        };
        let upper_bound = match individual {
            Some((mi, mj)) => remote_upper_bound(pair.s_classical, mi, mj)?,
            None => pair.s_classical,
        };
        Ok(Self { m, upper_bound, method })
    }

    pub fn within_bound(&self) -> bool {
        self.m <= self.upper_bound
    }
}

/// Mean wavepacket overlap of two pure Lorentzian photons,
/// 4γᵢγⱼ / [(γᵢ+γⱼ)² + Δ²].
pub fn mwo_no_dephasing(gamma_i: Rate, gamma_j: Rate, delta: Frequency) -> Result<f64> {
    let (gi, gj) = (gamma_i.value(), gamma_j.value());
    if gi <= 0.0 || gj <= 0.0 {
        return Err(Error::domain("emission rates must be > 0"));
    }
    let d = delta.value();
    Ok(4.0 * gi * gj / ((gi + gj).powi(2) + d * d))
}

/// s·(Γᵢ+Γⱼ)(γᵢ+γⱼ) / [(Γᵢ+Γⱼ)² + 4Δ²] for explicit rates.
#[inline]
pub fn dephased_overlap(s: f64, gamma_sum: f64, width_sum: f64, detuning: f64) -> f64 {
    s * width_sum * gamma_sum / (width_sum * width_sum + 4.0 * detuning * detuning)
}

/// Mean wavepacket overlap with pure dephasing at the pair's mean detuning.
pub fn mwo_with_dephasing(pair: &SourcePair) -> Result<f64> {
    pair.check_rates()?;
    Ok(dephased_overlap(
        pair.s_classical,
        pair.a.gamma().value() + pair.b.gamma().value(),
        pair.a.total_width().value() + pair.b.total_width().value(),
        pair.mean_detuning.value(),
    ))
}

/// Normalized Voigt profile: Lorentzian of half width `lorentz_hwhm`
/// convolved with a Gaussian of standard deviation `gauss_sigma`.
pub fn voigt(x: f64, lorentz_hwhm: f64, gauss_sigma: f64) -> Result<f64> {
    if !(lorentz_hwhm >= 0.0 && gauss_sigma >= 0.0) {
        return Err(Error::domain("Voigt widths must be >= 0"));
    }
    if lorentz_hwhm == 0.0 && gauss_sigma == 0.0 {
        return Err(Error::domain("Voigt profile needs a non-zero width"));
    }
    if gauss_sigma == 0.0 {
        return Ok(lorentz_hwhm / (PI * (x * x + lorentz_hwhm * lorentz_hwhm)));
    }
    let scale = gauss_sigma * std::f64::consts::SQRT_2;
    if lorentz_hwhm == 0.0 {
        return Ok((-(x / scale).powi(2)).exp() / (scale * PI.sqrt()));
    }
    let w = faddeeva(Complex64::new(x / scale, lorentz_hwhm / scale));
    Ok(w.re / (scale * PI.sqrt()))
}

/// Overlap averaged over Gaussian spectral wandering,
/// (π/2)·s²·(γᵢ+γⱼ)·V(Δ̄; Γ̄, δωᵢⱼ).
///
/// Note the s² here against the single s of [`mwo_with_dephasing`]; the two
/// conventions are kept deliberately.
pub fn mwo_voigt_averaged(pair: &SourcePair) -> Result<f64> {
    pair.check_rates()?;
    let s = pair.s_classical;
    let gamma_sum = pair.a.gamma().value() + pair.b.gamma().value();
    let v = voigt(pair.mean_detuning.value(), pair.mean_width(), pair.delta_omega())?;
    let m = 0.5 * PI * s * s * gamma_sum * v;
    if m > 1.0 + 1e-9 {
        log::warn!("Voigt-averaged overlap {m} exceeds 1; clamping");
    }
    Ok(m.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

/// Monte-Carlo average of the dephased overlap over Δ ~ Normal(Δ̄, δωᵢⱼ).
/// Deterministic for a given seed.
pub fn mwo_monte_carlo_average(pair: &SourcePair, samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    pair.check_rates()?;
    if samples < 2 {
        return Err(Error::domain("need at least two Monte-Carlo samples"));
    }
    let gamma_sum = pair.a.gamma().value() + pair.b.gamma().value();
    let width_sum = pair.a.total_width().value() + pair.b.total_width().value();
    let sigma = pair.delta_omega();
    let mean_det = pair.mean_detuning.value();
    let mut rng = stream_rng(seed, 0);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let z: f64 = StandardNormal.sample(&mut rng);
        let m = dephased_overlap(pair.s_classical, gamma_sum, width_sum, mean_det + sigma * z);
        sum += m;
        sum_sq += m * m;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(MonteCarloEstimate {
        mean,
        std_err: (var / n).sqrt(),
        samples,
    })
}

/// min(s, √(MᵢMⱼ)).
pub fn remote_upper_bound(s: f64, m_i: f64, m_j: f64) -> Result<f64> {
    for v in [s, m_i, m_j] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("bound inputs must lie in [0, 1], got {v}")));
        }
    }
    Ok(s.min((m_i * m_j).sqrt()))
}

/// Single-photon indistinguishability M = (V_HOM + g²)/(1 − g²).
pub fn indistinguishability_from_hom(v_hom: f64, g2: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&g2) {
        return Err(Error::domain(format!("g2 must lie in [0, 1), got {g2}")));
    }
    let m = (v_hom + g2) / (1.0 - g2);
    if m > 1.0 + 1e-12 {
        return Err(Error::Inconsistent(format!(
            "V_HOM = {v_hom} with g2 = {g2} implies M = {m} > 1"
        )));
    }
    Ok(m)
}

/// Effect of a spectral filter on one source.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSource {
    pub params: EmitterParams,
    /// Absolute brightness after the filter.
    pub transmitted_brightness: f64,
    /// Fraction of the zero-phonon line passed, averaged over wandering.
    pub zpl_transmission: f64,
}

impl FilteredSource {
    /// Transmitted over incident brightness.
    pub fn brightness_ratio(&self, original: &EmitterParams) -> f64 {
        if original.brightness > 0.0 {
            self.transmitted_brightness / original.brightness
        } else {
            0.0
        }
    }
}

const FILTER_QUAD_SIGMAS: f64 = 12.0;
const FILTER_QUAD_INTERVALS: usize = 4000;

/// Passes one source through a Lorentzian filter.
///
/// The wandering frequency is treated as static during each emission, so
/// the filter acts as a post-selection on the instantaneous detuning: a
/// Lorentzian line of half width Γ/2 at offset Δ is transmitted with
/// probability h(h + Γ/2)/[Δ² + (h + Γ/2)²], h being the filter half width.
/// The phonon sideband is removed entirely. An `omega0` of zero means the
/// filter is centered on the source.
pub fn apply_filter(params: &EmitterParams, filter: &FilterParams) -> Result<FilteredSource> {
    params.validate()?;
    filter.validate()?;
    let fwhm = filter.fwhm_angular().value();
    let gamma = params.gamma().value();
    if fwhm <= gamma {
        return Err(Error::UnsupportedRegime(format!(
            "filter width {fwhm:.3} rad/ns does not exceed the radiative linewidth {gamma:.3} rad/ns"
        )));
    }
    let h = 0.5 * fwhm;
    let line_hwhm = 0.5 * params.total_width().value();
    let reach = h + line_hwhm;
    let offset = if params.omega0.value() == 0.0 {
        0.0
    } else {
        params.omega0.value() - filter.center.to_angular_frequency().value()
    };
    let transmission = |d: f64| h * reach / ((d + offset).powi(2) + reach * reach);

    let sigma = params.delta_omega.value();
    let (zpl, new_sigma, shift) = if sigma == 0.0 {
        (transmission(0.0), 0.0, 0.0)
    } else {
        let gauss = |d: f64| (-0.5 * (d / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt());
        let lim = FILTER_QUAD_SIGMAS * sigma;
        let w0 = integrate_fn(|d| gauss(d) * transmission(d), -lim, lim, FILTER_QUAD_INTERVALS);
        let w1 = integrate_fn(|d| d * gauss(d) * transmission(d), -lim, lim, FILTER_QUAD_INTERVALS);
        let w2 = integrate_fn(|d| d * d * gauss(d) * transmission(d), -lim, lim, FILTER_QUAD_INTERVALS);
        let mean = w1 / w0;
        let var = (w2 / w0 - mean * mean).max(0.0);
        (w0, var.sqrt(), mean)
    };

    let transmitted = params.brightness * (1.0 - params.sideband_fraction) * zpl;
    let mut out = params.clone();
    out.sideband_fraction = 0.0;
    out.delta_omega = Rate::new(new_sigma)?;
    out.brightness = transmitted;
    if params.omega0.value() != 0.0 {
        out.omega0 = Frequency::new(params.omega0.value() + shift)?;
    }
    Ok(FilteredSource {
        params: out,
        transmitted_brightness: transmitted,
        zpl_transmission: zpl,
    })
}
