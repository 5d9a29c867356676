//! Property tests for the overlap algebra, the lineshape and the fit
//! primitives.

use homsim::overlap::{dephased_overlap, mwo_no_dephasing, mwo_voigt_averaged, remote_upper_bound, voigt, SourcePair};
use homsim::spectral::visibility_vs_delay;
use homsim::units::{derive_seed, lifetime_to_rate, simpson, EnergySplitting, Frequency, Rate, TimeGrid};
use homsim::wavepacket::{classical_overlap, emitter_profile, ChargeState, EmitterParams};
use proptest::prelude::*;

fn rate(v: f64) -> Rate {
    Rate::new(v).unwrap()
}

proptest! {
    #[test]
    fn lorentzian_overlap_is_a_symmetric_probability(
        gi in 0.1f64..20.0,
        gj in 0.1f64..20.0,
        d in -50.0f64..50.0,
    ) {
        let m = mwo_no_dephasing(rate(gi), rate(gj), Frequency::new(d).unwrap()).unwrap();
        let swapped = mwo_no_dephasing(rate(gj), rate(gi), Frequency::new(-d).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&m));
        prop_assert!((m - swapped).abs() < 1e-15);
        // Detuning can only lower the overlap.
        let resonant = mwo_no_dephasing(rate(gi), rate(gj), Frequency::ZERO).unwrap();
        prop_assert!(m <= resonant + 1e-15);
    }

    #[test]
    fn dephasing_never_exceeds_the_classical_overlap(
        s in 0.0f64..=1.0,
        gamma_sum in 0.1f64..20.0,
        extra in 0.0f64..10.0,
        d in -20.0f64..20.0,
    ) {
        let m = dephased_overlap(s, gamma_sum, gamma_sum + extra, d);
        prop_assert!(m >= 0.0 && m <= s + 1e-15);
    }

    #[test]
    fn voigt_is_positive_symmetric_and_peaked(
        x in 0.0f64..30.0,
        hwhm in 0.0f64..5.0,
        sigma in 0.01f64..5.0,
    ) {
        let v = voigt(x, hwhm, sigma).unwrap();
        prop_assert!(v > 0.0 || x > 20.0 * sigma);
        prop_assert!((v - voigt(-x, hwhm, sigma).unwrap()).abs() <= 1e-15 * v.max(1e-300) + 1e-300);
        prop_assert!(v <= voigt(0.0, hwhm, sigma).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn wandering_only_reduces_the_resonant_overlap(
        t1a in 80.0f64..400.0,
        t1b in 80.0f64..400.0,
        gs in 0.0f64..2.0,
        dw in 0.0f64..8.0,
    ) {
        let mk = |t1: f64, dw: f64| EmitterParams {
            gamma_star: rate(gs),
            delta_omega: rate(dw),
            ..EmitterParams::ideal(t1)
        };
        let quiet = SourcePair { a: mk(t1a, 0.0), b: mk(t1b, 0.0), mean_detuning: Frequency::ZERO, s_classical: 1.0, filter: None };
        let noisy = SourcePair { a: mk(t1a, dw), b: mk(t1b, 0.5 * dw), ..quiet.clone() };
        prop_assume!(dw > 0.0 || gs > 0.0);
        let m_quiet = mwo_voigt_averaged(&quiet).unwrap();
        let m_noisy = mwo_voigt_averaged(&noisy).unwrap();
        prop_assert!(m_noisy <= m_quiet + 1e-12);
        prop_assert!((0.0..=1.0).contains(&m_noisy));
    }

    #[test]
    fn remote_bound_is_the_tightest_input(s in 0.0f64..=1.0, mi in 0.0f64..=1.0, mj in 0.0f64..=1.0) {
        let b = remote_upper_bound(s, mi, mj).unwrap();
        prop_assert!(b <= s && b <= (mi * mj).sqrt() + 1e-15);
        prop_assert!(b == s || b == (mi * mj).sqrt());
    }

    #[test]
    fn classical_overlap_is_symmetric_and_bounded(
        t1a in 60.0f64..600.0,
        t1b in 60.0f64..600.0,
        fss in 0.0f64..15.0,
    ) {
        let grid = TimeGrid::for_lifetimes_ps(&[t1a, t1b]).unwrap();
        let x = EmitterParams {
            charge: ChargeState::X,
            fss: EnergySplitting::new(fss).unwrap(),
            ..EmitterParams::ideal(t1a)
        };
        let p = emitter_profile(&x, &grid).unwrap();
        let q = emitter_profile(&EmitterParams::ideal(t1b), &grid).unwrap();
        let pq = classical_overlap(&p, &q).unwrap();
        let qp = classical_overlap(&q, &p).unwrap();
        prop_assert!((pq - qp).abs() < 1e-14);
        prop_assert!((0.0..=1.0).contains(&pq));
        prop_assert!((classical_overlap(&p, &p).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn visibility_decays_monotonically_with_delay(
        v0 in 0.1f64..=1.0,
        r in 0.0f64..3.0,
        tau in 10.0f64..5000.0,
        d1 in 0.0f64..10_000.0,
        d2 in 0.0f64..10_000.0,
    ) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let v_lo = visibility_vs_delay(v0, r, tau, lo).unwrap();
        let v_hi = visibility_vs_delay(v0, r, tau, hi).unwrap();
        prop_assert!(v_hi <= v_lo + 1e-15);
        prop_assert!(v_lo <= v0);
        // The long-delay floor is v0/(1 + 2r²).
        prop_assert!(v_hi >= v0 / (1.0 + 2.0 * r * r) - 1e-15);
    }

    #[test]
    fn simpson_integrates_cubics_exactly(
        c in prop::array::uniform4(-5.0f64..5.0),
        n in 4usize..60,
    ) {
        let h = 2.0 / (n - 1) as f64;
        let f = |x: f64| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x;
        let y: Vec<f64> = (0..n).map(|i| f(-1.0 + h * i as f64)).collect();
        // ∫₋₁¹ of the cubic keeps only the even terms.
        let exact = 2.0 * c[0] + 2.0 * c[2] / 3.0;
        prop_assert!((simpson(&y, h) - exact).abs() < 1e-11);
    }

    #[test]
    fn derived_seeds_separate_tags(master in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        prop_assume!(a != b);
        prop_assert_ne!(derive_seed(master, a), derive_seed(master, b));
    }

    #[test]
    fn lifetime_conversion_round_trips(t1 in 1.0f64..1e5) {
        let g = lifetime_to_rate(t1).unwrap();
        let back = homsim::units::rate_to_lifetime(g).unwrap();
        prop_assert!(((back - t1) / t1).abs() < 1e-14);
    }
}
