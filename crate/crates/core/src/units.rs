//! Physical quantities and the shared numeric plumbing (grids, quadrature,
//! seeded random streams).
//!
//! Canonical internal units: time in ns, rates and angular frequencies in
//! rad·ns⁻¹. Decay rates and angular frequencies share one unit because the
//! overlap formulas add them directly.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in μeV·ns.
pub const HBAR_UEV_NS: f64 = 0.6582119;

/// Speed of light in nm·ns⁻¹.
pub const C_NM_PER_NS: f64 = 2.997_924_58e8;

macro_rules! scalar_newtype {
    ($name:ident, $check:expr, $what:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
        #[serde(try_from = "f64", into = "f64")]
        pub struct $name(f64);

        impl $name {
            pub fn new(value: f64) -> Result<Self> {
                let ok: fn(f64) -> bool = $check;
                if ok(value) {
                    Ok(Self(value))
                } else {
                    Err(Error::domain(format!(concat!($what, " got {}"), value)))
                }
            }

            #[inline]
            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl TryFrom<f64> for $name {
            type Error = Error;
            fn try_from(value: f64) -> Result<Self> {
                Self::new(value)
            }
        }

        impl From<$name> for f64 {
            fn from(v: $name) -> f64 {
                v.0
            }
        }
    };
}

scalar_newtype!(Frequency, |v| v.is_finite(), "angular frequency must be finite,");
scalar_newtype!(Rate, |v| v.is_finite() && v >= 0.0, "rate must be finite and >= 0,");
scalar_newtype!(
    EnergySplitting,
    |v| v.is_finite() && v >= 0.0,
    "energy splitting must be finite and >= 0 μeV,"
);
scalar_newtype!(Wavelength, |v| v.is_finite() && v > 0.0, "wavelength must be > 0 nm,");

impl Frequency {
    pub const ZERO: Frequency = Frequency(0.0);

    /// Wavelength of light at this (absolute) angular frequency.
    pub fn to_wavelength(self) -> Result<Wavelength> {
        Wavelength::new(2.0 * PI * C_NM_PER_NS / self.0)
    }
}

impl Rate {
    pub const ZERO: Rate = Rate(0.0);
}

impl EnergySplitting {
    pub const ZERO: EnergySplitting = EnergySplitting(0.0);
}

impl Wavelength {
    /// Absolute angular optical frequency ω = 2πc/λ.
    pub fn to_angular_frequency(self) -> Frequency {
        Frequency(2.0 * PI * C_NM_PER_NS / self.0)
    }

    /// Converts a spectral width in pm around this wavelength into an angular
    /// width in rad/ns (first order in Δλ/λ).
    pub fn width_pm_to_angular(self, width_pm: f64) -> Rate {
        let dl_nm = width_pm * 1e-3;
        Rate(2.0 * PI * C_NM_PER_NS * dl_nm / (self.0 * self.0))
    }
}

/// Angular rate corresponding to an energy splitting, Δ/ħ.
pub fn energy_to_angular_rate(e: EnergySplitting) -> Rate {
    Rate(e.0 / HBAR_UEV_NS)
}

/// Inverse of [`energy_to_angular_rate`].
pub fn angular_rate_to_energy(r: Rate) -> EnergySplitting {
    EnergySplitting(r.0 * HBAR_UEV_NS)
}

/// Emission rate γ = 1/T1 in ns⁻¹ for a lifetime given in ps.
pub fn lifetime_to_rate(t1_ps: f64) -> Result<Rate> {
    if !(t1_ps.is_finite() && t1_ps > 0.0) {
        return Err(Error::domain(format!("lifetime must be > 0 ps, got {t1_ps}")));
    }
    Ok(Rate(1000.0 / t1_ps))
}

/// Lifetime in ps for a rate in ns⁻¹.
pub fn rate_to_lifetime(r: Rate) -> Result<f64> {
    if r.0 <= 0.0 {
        return Err(Error::domain("rate must be > 0 to define a lifetime"));
    }
    Ok(1000.0 / r.0)
}

/// Uniformly spaced sample times `start + i·step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl TimeGrid {
    /// Number of samples used by default profile grids (odd, for Simpson).
    pub const DEFAULT_SAMPLES: usize = 4097;
    /// Default span in units of the longest lifetime involved.
    pub const DEFAULT_SPAN_LIFETIMES: f64 = 20.0;

    /// `len` samples from `start` to `end` inclusive.
    pub fn linspace(start: f64, end: f64, len: usize) -> Result<Self> {
        if len < 2 || !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::domain(format!(
                "grid needs len >= 2 and end > start, got [{start}, {end}] with {len} samples"
            )));
        }
        Ok(Self {
            start,
            step: (end - start) / (len - 1) as f64,
            len,
        })
    }

    /// Default grid for a set of lifetimes: [0, 20·max T1] with 4097 samples.
    pub fn for_lifetimes_ps(t1s_ps: &[f64]) -> Result<Self> {
        let max_t1 = t1s_ps.iter().copied().fold(0.0, f64::max);
        if max_t1 <= 0.0 {
            return Err(Error::domain("need at least one positive lifetime"));
        }
        Self::linspace(0.0, Self::DEFAULT_SPAN_LIFETIMES * max_t1 * 1e-3, Self::DEFAULT_SAMPLES)
    }

    pub fn start(&self) -> f64 {
        self.start
    }
    pub fn step(&self) -> f64 {
        self.step
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn end(&self) -> f64 {
        self.start + self.step * (self.len - 1) as f64
    }
    pub fn span(&self) -> f64 {
        self.end() - self.start
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.time(i))
    }

    /// Integral of samples on this grid, see [`simpson`].
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.len);
        simpson(samples, self.step)
    }
}

/// Composite Simpson rule on uniformly spaced samples. An even sample count
/// closes the last three intervals with Simpson's 3/8 rule.
pub fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (y[0] + y[1]),
        3 => h / 3.0 * (y[0] + 4.0 * y[1] + y[2]),
        _ => {
            let simpson_end = if n % 2 == 1 { n - 1 } else { n - 4 };
            if simpson_end == 0 {
                return 3.0 * h / 8.0 * (y[0] + 3.0 * y[1] + 3.0 * y[2] + y[3]);
            }
            let mut acc = y[0] + y[simpson_end];
            for (i, v) in y.iter().enumerate().take(simpson_end).skip(1) {
                acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = acc * h / 3.0;
            if n.is_multiple_of(2) {
                let k = simpson_end;
                total += 3.0 * h / 8.0 * (y[k] + 3.0 * y[k + 1] + 3.0 * y[k + 2] + y[k + 3]);
            }
            total
        }
    }
}

/// Simpson integral of `f` over `[a, b]` with `n` (rounded up to even) intervals.
pub fn integrate_fn(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// SplitMix64 finalizer; used to derive independent seeds from a master seed.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream `stream` of the ChaCha8 generator keyed by `seed`.
///
/// Streams of one seed never overlap, so shard `i` of a simulation always
/// draws from `stream_rng(seed, i)` whatever thread runs it.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
