//! Lorentzian cavity-mode fits of reflectivity spectra.

use serde::{Deserialize, Serialize};

use super::lm::{least_squares, Bound, FitResult, Model, Observation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectivityPoint {
    pub wavelength_nm: f64,
    pub reflectivity: f64,
}

/// R(λ) = baseline − depth·h²/((λ − x_c)² + h²), h = FWHM/2.
///
/// The mode center is parameterized as an offset from `reference_nm`, which
/// keeps it well scaled next to a sub-nanometer linewidth.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReflectivityModel {
    pub reference_nm: f64,
}

impl Model for ReflectivityModel {
    type X = f64;

    fn names(&self) -> &[&'static str] {
        &["x_c_offset_nm", "fwhm_nm", "depth", "baseline"]
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        let h = 0.5 * p[1];
        let d = x - self.reference_nm - p[0];
        p[3] - p[2] * h * h / (d * d + h * h)
    }

    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) {
        let h = 0.5 * p[1];
        let d = x - self.reference_nm - p[0];
        let q = d * d + h * h;
        let l = h * h / q;
        g[0] = -p[2] * 2.0 * d * h * h / (q * q);
        // ∂L/∂h = 2h·d²/q², and ∂h/∂fwhm = ½.
        g[1] = -p[2] * h * d * d / (q * q);
        g[2] = -l;
        g[3] = 1.0;
    }
}

/// Fits the cavity dip. The result reports `x_c_nm`, `fwhm_nm`, `depth`
/// and `baseline`, plus the quality factor `q = x_c/FWHM` and its
/// propagated uncertainty `q_sigma` among the derived values.
pub fn fit_reflectivity(spectrum: &[ReflectivityPoint]) -> Result<FitResult> {
    if spectrum.len() < 8 {
        return Err(Error::UnderDetermined(format!(
            "reflectivity fits need at least 8 points, got {}",
            spectrum.len()
        )));
    }
    if spectrum
        .iter()
        .any(|p| !(p.wavelength_nm.is_finite() && p.wavelength_nm > 0.0 && p.reflectivity.is_finite()))
    {
        return Err(Error::domain(
            "spectrum values must be finite with positive wavelengths",
        ));
    }
    let mut obs: Vec<_> = spectrum
        .iter()
        .map(|p| Observation::new(p.wavelength_nm, p.reflectivity))
        .collect();
    obs.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));

    let reference_nm = 0.5 * (obs[0].x + obs[obs.len() - 1].x);
    let model = ReflectivityModel { reference_nm };
    let mut init = initial_guess(&obs)?;
    init[0] -= reference_nm;
    let span = obs[obs.len() - 1].x - obs[0].x;
    if span < 3.0 * init[1] {
        log::warn!(
            "spectrum spans {span:.4} nm, less than three linewidths ({:.4} nm)",
            init[1]
        );
    }
    let bounds = [
        Bound::new(obs[0].x - reference_nm, obs[obs.len() - 1].x - reference_nm),
        Bound::at_least(f64::MIN_POSITIVE),
        Bound::FREE,
        Bound::FREE,
    ];
    let mut fit = least_squares(&model, &obs, &init, &bounds)?;

    fit.values[0] += reference_nm;
    fit.names[0] = "x_c_nm".into();
    let offset = fit.params.remove("x_c_offset_nm").expect("fitted parameter");
    fit.params.insert("x_c_nm".into(), offset + reference_nm);
    let sigma = fit.sigmas.remove("x_c_offset_nm").expect("fitted parameter");
    fit.sigmas.insert("x_c_nm".into(), sigma);

    let (xc, w) = (fit.values[0], fit.values[1]);
    let q = xc / w;
    let c = &fit.covariance;
    // Gradient of Q with respect to (x_c, FWHM).
    let (dq_dx, dq_dw) = (1.0 / w, -xc / (w * w));
    let var = dq_dx * dq_dx * c[(0, 0)] + 2.0 * dq_dx * dq_dw * c[(0, 1)] + dq_dw * dq_dw * c[(1, 1)];
    fit.derived.insert("q".into(), q);
    fit.derived.insert("q_sigma".into(), var.max(0.0).sqrt());
    Ok(fit)
}

/// Baseline from the outer tenth of the spectrum on each side, x_c at the
/// minimum and the FWHM from the half-depth crossing.
fn initial_guess(obs: &[Observation<f64>]) -> Result<Vec<f64>> {
    let n = obs.len();
    let edge = (n / 10).max(1);
    let baseline = obs[..edge].iter().chain(&obs[n - edge..]).map(|o| o.y).sum::<f64>() / (2 * edge) as f64;
    let (min_idx, min) = obs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.y.total_cmp(&b.1.y))
        .map(|(i, o)| (i, o.y))
        .expect("non-empty spectrum");
    let depth = baseline - min;
    if !(depth > 0.0) {
        return Err(Error::Estimation("spectrum shows no dip".into()));
    }
    let half = baseline - 0.5 * depth;
    let left = obs[..=min_idx]
        .iter()
        .rev()
        .find(|o| o.y > half)
        .map_or(obs[0].x, |o| o.x);
    let right = obs[min_idx..].iter().find(|o| o.y > half).map_or(obs[n - 1].x, |o| o.x);
    let step = (obs[n - 1].x - obs[0].x) / (n - 1) as f64;
    let fwhm = (right - left).max(2.0 * step);
    Ok(vec![obs[min_idx].x, fwhm, depth, baseline])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::lm::finite_difference_gradient;

    fn spectrum(xc: f64, q: f64, n: usize) -> Vec<ReflectivityPoint> {
        let fwhm = xc / q;
        let p = [0.0, fwhm, 0.6, 0.95];
        let model = ReflectivityModel { reference_nm: xc };
        (0..n)
            .map(|i| {
                let x = xc - 5.0 * fwhm + 10.0 * fwhm * i as f64 / (n - 1) as f64;
                ReflectivityPoint {
                    wavelength_nm: x,
                    reflectivity: model.value(x, &p),
                }
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let model = ReflectivityModel { reference_nm: 924.7 };
        let p = [0.034, 924.734 / 2900.0, 0.6, 0.95];
        for x in [924.5, 924.7, 924.7345, 924.8, 925.0] {
            let fd = finite_difference_gradient(&model, x, &p, 1e-6);
            let mut g = [0.0; 4];
            model.gradient(x, &p, &mut g);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() <= 1e-5 * a.abs().max(1e-9), "x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn noiseless_recovery() {
        for (xc, q) in [(924.734, 2900.0), (924.817, 1700.0)] {
            let fit = fit_reflectivity(&spectrum(xc, q, 201)).unwrap();
            assert!(fit.converged, "{}", fit.message);
            assert!((fit.param("x_c_nm") / xc - 1.0).abs() < 1e-6);
            assert!((fit.derived["q"] / q - 1.0).abs() < 1e-6);
            assert!((fit.param("depth") / 0.6 - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn flat_spectrum_is_rejected() {
        let flat: Vec<_> = (0..20)
            .map(|i| ReflectivityPoint {
                wavelength_nm: 924.0 + i as f64 * 0.01,
                reflectivity: 0.9,
            })
            .collect();
        assert!(fit_reflectivity(&flat).is_err());
    }
}
