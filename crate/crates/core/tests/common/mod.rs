//! Independent numerical oracles and synthetic data shared by the test
//! targets.
#![allow(dead_code)]

use std::f64::consts::PI;

use homsim::fit::{finite_difference_gradient, Model, ReflectivityModel, ReflectivityPoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Lorentzian (half width `hwhm`) ⊗ Gaussian (standard deviation `sigma`)
/// by direct quadrature over the Gaussian variable.
pub fn convolution_oracle(x: f64, hwhm: f64, sigma: f64) -> f64 {
    let gauss = |y: f64| (-0.5 * (y / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt());
    let lorentz = |u: f64| hwhm / (PI * (u * u + hwhm * hwhm));
    let f = |y: f64| gauss(y) * lorentz(x - y);
    let lim = 14.0 * sigma;
    // Split at the Lorentzian peak so a narrow line is always resolved.
    let peak = x.clamp(-lim, lim);
    adaptive_simpson(&f, -lim, peak, 1e-15) + adaptive_simpson(&f, peak, lim, 1e-15)
}

/// The (x, Lorentzian HWHM, Gaussian σ) sweep used for the lineshape checks.
pub fn voigt_sweep() -> Vec<(f64, f64, f64)> {
    (0..50)
        .map(|i| {
            let hwhm = 0.05 * 1.15_f64.powi(i % 25);
            let sigma = 0.1 + 0.2 * (i / 5) as f64;
            let x = -6.0 + 12.0 * (i as f64) / 49.0;
            (x, hwhm, sigma)
        })
        .collect()
}

/// Worst relative deviation of a model's analytic gradient from central
/// differences, measured against the largest component at each point so
/// exact zeros do not blow up.
pub fn worst_gradient_error<M: Model>(model: &M, xs: &[M::X], p: &[f64]) -> f64 {
    let mut g = vec![0.0; p.len()];
    let mut worst: f64 = 0.0;
    for &x in xs {
        model.gradient(x, p, &mut g);
        let fd = finite_difference_gradient(model, x, p, 1e-6);
        let scale = g.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        for (a, n) in g.iter().zip(&fd) {
            worst = worst.max((a - n).abs() / a.abs().max(1e-3 * scale));
        }
    }
    worst
}

/// `n` delays log-spaced from one repetition period to 5 μs.
pub fn log_delays(n: usize) -> Vec<f64> {
    let (lo, hi) = (12.2_f64.ln(), 5000.0_f64.ln());
    (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Cavity dip of quality factor `q` at 924.8 nm with 1% Gaussian noise.
pub fn noisy_spectrum(q: f64, seed: u64) -> Vec<ReflectivityPoint> {
    let center = 924.8;
    let fwhm = center / q;
    let model = ReflectivityModel { reference_nm: center };
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..201)
        .map(|i| {
            let x = center + fwhm * (-5.0 + 10.0 * i as f64 / 200.0);
            ReflectivityPoint {
                wavelength_nm: x,
                reflectivity: model.value(x, &[0.0, fwhm, 0.5, 0.95]) + noise.sample(&mut rng),
            }
        })
        .collect()
}
