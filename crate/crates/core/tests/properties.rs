mod common;

use proptest::prelude::*;

use common::*;
use toa::arrival::{covariance_check, kijowski_auto};
use toa::extensions::{alpha_distribution, alpha_time_grid, constant_field_distribution, unfold, AlphaExtensionSpec};
use toa::numerics::{derivative, half_fourier, principal_value, ComplexSamples, Grid};
use toa::states::{evolve_free, from_energy_channels, to_energy_channels, Channel, GaussianSpec};
use toa::C64;

fn packet() -> impl Strategy<Value = GaussianSpec> {
    (prop::bool::ANY, 3.0..6.0f64, 0.15..0.3f64, 4.0..12.0f64, 0.3..1.0f64, 0.0..std::f64::consts::TAU).prop_map(
        |(pos, p, sigma, d, r, phi)| {
            let s = if pos { 1.0 } else { -1.0 };
            GaussianSpec::new(s * p, sigma, -s * d).with_weight(C64::from_polar(r, phi))
        },
    )
}

fn packets() -> impl Strategy<Value = Vec<GaussianSpec>> {
    prop::collection::vec(packet(), 1..=3)
}

fn smooth_samples() -> impl Strategy<Value = ComplexSamples> {
    (0.5..3.0f64, 0.2..1.5f64, -2.0..2.0f64).prop_map(|(c, w, k)| {
        let grid = Grid::new(0.0, 20.0, 2001).unwrap();
        ComplexSamples::from_fn(grid, move |e| {
            C64::from_polar((-(e - c).powi(2) / (2.0 * w * w)).exp(), k * e)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn half_fourier_is_linear(f in smooth_samples(), g in smooth_samples(), t in -20.0..20.0f64,
                              a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let (a, b) = (C64::new(a, 0.5), C64::new(-0.3, b));
        let combo = ComplexSamples::new(
            f.grid().clone(),
            f.values().iter().zip(g.values()).map(|(x, y)| a * x + b * y).collect(),
        ).unwrap();
        let lhs = half_fourier(&combo, t, 1.0).unwrap();
        let rhs = a * half_fourier(&f, t, 1.0).unwrap() + b * half_fourier(&g, t, 1.0).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn half_fourier_conjugation(f in smooth_samples(), t in -20.0..20.0f64) {
        let conj = f.map(|_, v| v.conj());
        let a = half_fourier(&conj, -t, 1.0).unwrap();
        let b = half_fourier(&f, t, 1.0).unwrap().conj();
        prop_assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn derivative_is_exact_for_sextics(c in prop::collection::vec(-1.0..1.0f64, 7)) {
        let poly = |x: f64| c.iter().rev().fold(0.0, |acc, a| acc * x + a);
        let dpoly = |x: f64| c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, a)| acc * x + k as f64 * a);
        let grid = Grid::new(-1.0, 1.0, 41).unwrap();
        let d = derivative(&ComplexSamples::from_fn(grid, |x| C64::new(poly(x), 0.0))).unwrap();
        for (x, v) in d.grid().nodes().iter().zip(d.values()) {
            prop_assert!((v.re - dpoly(*x)).abs() < 1e-9);
        }
    }

    #[test]
    fn principal_value_of_affine(s in -3.0..3.0f64, a in -2.0..2.0f64, b in -2.0..2.0f64, half in 0.5..4.0f64) {
        // P∫_{s-L}^{s+L} (a + bx)/(x - s) dx = 2bL
        let grid = Grid::new(s - half, s + half, 401).unwrap();
        let f = ComplexSamples::from_fn(grid, |x| C64::new(a + b * x, 0.0));
        let pv = principal_value(&f, s).unwrap();
        prop_assert!((pv.re - 2.0 * b * half).abs() < 1e-10);
    }

    #[test]
    fn alpha_wraps_into_period(alpha in -100.0..100.0f64) {
        let a = AlphaExtensionSpec::new(alpha).unwrap().alpha();
        prop_assert!((0.0..std::f64::consts::TAU).contains(&a));
        prop_assert!((C64::from_polar(1.0, -a) - C64::from_polar(1.0, -alpha)).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn isomorphism_is_unitary_and_invertible(specs in packets()) {
        let s = state_of(&specs);
        let ch = to_energy_channels(&s).unwrap();
        prop_assert!((ch.norm_sqr() - s.norm_sqr()).abs() < 1e-6);
        let (plus, minus) = s.channel_masses();
        prop_assert!((ch.channel_norm_sqr(Channel::Plus) - plus).abs() < 1e-6);
        prop_assert!((ch.channel_norm_sqr(Channel::Minus) - minus).abs() < 1e-6);
        let back = from_energy_channels(&ch, s.grid()).unwrap();
        prop_assert!(l2_distance(back.values(), s.values(), &s.grid().weights()) < 1e-6);
    }

    #[test]
    fn unfolding_preserves_norm(specs in packets(), alpha in 0.0..std::f64::consts::TAU) {
        let ch = to_energy_channels(&state_of(&specs)).unwrap();
        let chi = unfold(&ch, alpha).unwrap();
        prop_assert!((chi.norm_sqr() - ch.norm_sqr()).abs() < 1e-8);
    }

    #[test]
    fn free_evolution_commutes_with_isomorphism(specs in packets(), tau in -2.0..2.0f64) {
        let s = state_of(&specs);
        let a = to_energy_channels(&evolve_free(&s, tau)).unwrap();
        let b = to_energy_channels(&s).unwrap().evolved(tau);
        for c in [Channel::Plus, Channel::Minus] {
            for (x, y) in a.channel(c).iter().zip(b.channel(c)) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_field_mean_scales_inversely(specs in packets(), g in prop_oneof![-5.0..-0.2f64, 0.2..5.0f64]) {
        let s = state_of(&specs);
        let d = constant_field_distribution(&s, g).unwrap();
        prop_assert!((d.total - 1.0).abs() < 1e-6);
        prop_assert!((d.raw_moment(1) - s.mean_momentum() / g).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn arrival_density_is_normalized_and_split(specs in packets()) {
        let d = kijowski_auto(&state_of(&specs)).unwrap();
        prop_assert!((d.total - 1.0).abs() < 2e-3);
        let split = d.meta.channels.as_ref().unwrap();
        for ((v, p), m) in d.density.iter().zip(&split.plus).zip(&split.minus) {
            prop_assert!(*v >= 0.0);
            prop_assert!((v - p - m).abs() <= 1e-15 * v.abs());
        }
    }

    #[test]
    fn arrival_density_is_covariant(specs in packets(), steps in 1usize..400) {
        let s = state_of(&specs);
        let grid = toa::arrival::auto_time_grid(&s).unwrap();
        let r = covariance_check(&s, steps as f64 * grid.spacing(), Some(&grid)).unwrap();
        prop_assert!(r.passed, "{}", r.summary());
    }

    #[test]
    fn extension_reverses_under_channel_swap(specs in packets(), alpha in 0.0..std::f64::consts::TAU) {
        let ch = to_energy_channels(&state_of(&specs)).unwrap();
        let swapped = ch
            .with_channels(ch.channel(Channel::Minus).to_vec(), ch.channel(Channel::Plus).to_vec())
            .unwrap();
        let grid = alpha_time_grid(&ch, alpha).unwrap();
        let reflected = Grid::new(-grid.stop(), -grid.start(), grid.len()).unwrap();
        let a = alpha_distribution(&ch, alpha, &grid).unwrap();
        let b = alpha_distribution(&swapped, -alpha, &reflected).unwrap();
        let n = a.density.len();
        for k in 0..n {
            prop_assert!((a.density[k] - b.density[n - 1 - k]).abs() < 1e-10 * a.max());
        }
    }
}
