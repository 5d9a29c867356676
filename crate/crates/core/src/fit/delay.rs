//! Joint fit of the delay-dependent visibility of one source, measured
//! with and without spectral filtering.

use super::lm::{least_squares, Bound, FitResult, Model, Observation};
use crate::error::{Error, Result};
use crate::spectral::DelayVisibilitySeries;
use crate::units::Rate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelaySeriesKind {
    Filtered,
    Unfiltered,
}

/// V(Δτ) = V₀/[1 + 2(δω/(γ+γ*))²(1 − e^{−Δτ/τ_c})] with V₀ = γ/(γ+γ*).
///
/// Parameters: γ*, δω of the filtered series, δω of the unfiltered series
/// and τ_c. γ* and τ_c are shared, so both curves start at the same V₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayModel {
    pub gamma: f64,
}

const GAMMA_STAR: usize = 0;
const DW_FILTERED: usize = 1;
const DW_UNFILTERED: usize = 2;
const TAU_C: usize = 3;

impl DelayModel {
    fn spread_index(kind: DelaySeriesKind) -> usize {
        match kind {
            DelaySeriesKind::Filtered => DW_FILTERED,
            DelaySeriesKind::Unfiltered => DW_UNFILTERED,
        }
    }
}

impl Model for DelayModel {
    type X = (DelaySeriesKind, f64);

    fn names(&self) -> &[&'static str] {
        &[
            "gamma_star_ns_inv",
            "delta_omega_filtered_ns_inv",
            "delta_omega_unfiltered_ns_inv",
            "tau_c_ns",
        ]
    }

    fn value(&self, (kind, delay): Self::X, p: &[f64]) -> f64 {
        let width = self.gamma + p[GAMMA_STAR];
        let r = p[Self::spread_index(kind)] / width;
        let e = 1.0 - (-delay / p[TAU_C]).exp();
        self.gamma / width / (1.0 + 2.0 * r * r * e)
    }

    fn gradient(&self, (kind, delay): Self::X, p: &[f64], g: &mut [f64]) {
        let idx = Self::spread_index(kind);
        let width = self.gamma + p[GAMMA_STAR];
        let v0 = self.gamma / width;
        let spread = p[idx];
        let r = spread / width;
        let decay = (-delay / p[TAU_C]).exp();
        let e = 1.0 - decay;
        let d = 1.0 + 2.0 * r * r * e;
        g.fill(0.0);
        g[GAMMA_STAR] = -v0 / (width * d) + v0 * 4.0 * r * r * e / (width * d * d);
        g[idx] = -v0 * 4.0 * r * e / (width * d * d);
        g[TAU_C] = v0 * 2.0 * r * r * decay * delay / (p[TAU_C] * p[TAU_C] * d * d);
    }
}

/// Starting τ_c for every delay fit.
pub const INITIAL_TAU_C_NS: f64 = 1000.0;
const MIN_RELATIVE_SPREAD: f64 = 0.1;
const TAU_C_RANGE_NS: (f64, f64) = (1.0, 1e5);

fn observations(series: &DelayVisibilitySeries, kind: DelaySeriesKind) -> Vec<Observation<(DelaySeriesKind, f64)>> {
    series
        .entries()
        .iter()
        .map(|p| {
            let sigma = p.effective_sigma();
            let x = (kind, p.delay_ns);
            if sigma > 0.0 {
                Observation::weighted(x, p.visibility, sigma)
            } else {
                Observation::new(x, p.visibility)
            }
        })
        .collect()
}

/// Initial δω from the ratio of the last to the first visibility, floored
/// at a tenth of the linewidth so the fit can move off zero.
fn initial_spread(series: &DelayVisibilitySeries, v0: f64, width: f64) -> f64 {
    let last = series.entries().last().expect("checked length");
    let e = 1.0 - (-last.delay_ns / INITIAL_TAU_C_NS).exp();
    let ratio = v0 / last.visibility.max(1e-6);
    let r = if e > 0.0 && ratio > 1.0 {
        ((ratio - 1.0) / (2.0 * e)).sqrt()
    } else {
        0.0
    };
    r.max(MIN_RELATIVE_SPREAD) * width
}

/// Fits both series of one source with shared V₀ (hence γ*) and τ_c.
/// Points need uncertainties on all entries or on none.
pub fn fit_delay_visibility(
    filtered: &DelayVisibilitySeries,
    unfiltered: &DelayVisibilitySeries,
    gamma: Rate,
) -> Result<FitResult> {
    for s in [filtered, unfiltered] {
        if s.len() < 3 {
            return Err(Error::UnderDetermined(format!(
                "series `{}` has {} delay points; at least 3 are needed",
                s.source_label,
                s.len()
            )));
        }
    }
    let g = gamma.value();
    if g <= 0.0 {
        return Err(Error::domain("gamma must be > 0"));
    }
    let mut obs = observations(filtered, DelaySeriesKind::Filtered);
    obs.extend(observations(unfiltered, DelaySeriesKind::Unfiltered));
    let weighted = obs.iter().filter(|o| o.sigma.is_some()).count();
    if weighted != 0 && weighted != obs.len() {
        return Err(Error::domain("either all or no delay points must carry uncertainties"));
    }

    let v_max = obs.iter().map(|o| o.y).fold(0.0, f64::max);
    let v0 = v_max.clamp(1e-3, 1.0);
    let gamma_star = g * (1.0 / v0 - 1.0);
    let width = g + gamma_star;
    let init = [
        gamma_star,
        initial_spread(filtered, v0, width),
        initial_spread(unfiltered, v0, width),
        INITIAL_TAU_C_NS,
    ];
    let bounds = [
        Bound::at_least(0.0),
        Bound::at_least(0.0),
        Bound::at_least(0.0),
        Bound::new(TAU_C_RANGE_NS.0, TAU_C_RANGE_NS.1),
    ];
    let mut fit = least_squares(&DelayModel { gamma: g }, &obs, &init, &bounds)?;
    let v0_fit = g / (g + fit.values[GAMMA_STAR]);
    fit.derived.insert("v0".into(), v0_fit);
    Ok(fit)
}
