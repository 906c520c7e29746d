use leocov::bounds::{check_kappa, kappa_upper};
use leocov::montecarlo::{realize_trial, simulate, sinr_sample, Satellite};
use leocov::{
    laplace_derivatives, nakagami_ccdf, Association, BeamGainModel, ChannelModel, ConstellationSpec, LosModel,
    MonteCarloConfig, ShellGeometry, SirGrid,
};
use proptest::prelude::*;

fn wide_config(h: f64, beta: f64, m: u32) -> leocov::AnalyticConfig {
    let geom = ShellGeometry::earth(h).unwrap();
    let ch = ChannelModel::new(LosModel::ExponentialBlockage { beta }, 2.5, 4.0, m).unwrap();
    let beam = BeamGainModel::bessel(100.0, 10f64.to_radians()).unwrap();
    leocov::AnalyticConfig::with_visible_count(geom, ch, beam, 10.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn slant_limits_are_ordered(h in 150.0f64..3000.0) {
        let g = ShellGeometry::earth(h).unwrap();
        prop_assert!(g.min_slant() < g.max_slant());
        prop_assert!((g.offnadir_sine(g.max_slant()).unwrap() - g.earth_radius() / g.shell_radius()).abs() < 1e-12);
        prop_assert!(g.offnadir_sine(g.min_slant()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn elevation_and_offnadir_round_trip(h in 200.0f64..2000.0, t in 0.0f64..1.0) {
        let g = ShellGeometry::earth(h).unwrap();
        let r = g.min_slant() + t * (g.max_slant() - g.min_slant());
        let el = g.elevation_sine(r).unwrap().asin();
        let back = g.slant_at_elevation(el).unwrap();
        prop_assert!((back - r).abs() < 1e-6 * r);
        let s = g.offnadir_sine(r).unwrap();
        let back = g.slant_at_offnadir(s).unwrap();
        prop_assert!((back - r).abs() < 1e-6 * r);
    }

    #[test]
    fn cap_area_within_is_monotone(h in 200.0f64..2000.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let g = ShellGeometry::earth(h).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        let r = |t: f64| g.min_slant() + t * (g.max_slant() - g.min_slant());
        prop_assert!(g.cap_area_within(r(lo)) <= g.cap_area_within(r(hi)) + 1e-6);
        prop_assert!(g.cap_area_within(g.max_slant()) <= g.cap_area() * (1.0 + 1e-12));
    }

    #[test]
    fn los_probability_is_a_probability(h in 300.0f64..1500.0, beta in 0.0f64..1.0, t in 0.0f64..1.0) {
        let g = ShellGeometry::earth(h).unwrap();
        let ch = ChannelModel::new(LosModel::ExponentialBlockage { beta }, 2.0, 3.0, 2).unwrap();
        let r = g.min_slant() + t * (g.max_slant() - g.min_slant());
        let p = ch.los_probability(r, &g).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn nakagami_tail_is_a_decreasing_probability(m in 1u32..8, x in 0.0f64..20.0, dx in 0.0f64..5.0) {
        let a = nakagami_ccdf(x, m).unwrap();
        let b = nakagami_ccdf(x + dx, m).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b <= a + 1e-15);
    }

    #[test]
    fn alzer_bounds_hold(m in 1u32..9, x in 0.0f64..30.0) {
        let k = kappa_upper(m);
        prop_assert!(check_kappa(k, m).is_ok());
        let mf = m as f64;
        let lo = 1.0 - (1.0 - (-mf * x).exp()).powi(m as i32);
        let hi = 1.0 - (1.0 - (-mf * k * x).exp()).powi(m as i32);
        let p = nakagami_ccdf(x, m).unwrap();
        prop_assert!(lo <= p + 1e-13 && p <= hi + 1e-13, "{} {} {}", lo, p, hi);
    }

    #[test]
    fn bessel_gain_is_bounded(theta_deg in 0.5f64..30.0, t in 0.0f64..1.0) {
        let g = ShellGeometry::earth(700.0).unwrap();
        let beam = BeamGainModel::bessel(100.0, theta_deg.to_radians()).unwrap();
        let r = g.min_slant() + t * (g.max_slant() - g.min_slant());
        let v = beam.beam_gain(r, &g).unwrap();
        prop_assert!((0.0..=100.0 * (1.0 + 1e-12)).contains(&v));
    }

    #[test]
    fn strongest_sir_dominates_nearest(
        sats in prop::collection::vec((700.0f64..3000.0, any::<bool>(), 0.01f64..5.0, 0.0f64..100.0), 1..12)
    ) {
        let ch = ChannelModel::new(LosModel::ExponentialBlockage { beta: 0.2 }, 2.0, 3.0, 3).unwrap();
        let sats: Vec<Satellite> = sats
            .into_iter()
            .map(|(r, los, fading, gain)| Satellite { r, los, fading, gain })
            .collect();
        let a = sinr_sample(&sats, &ch, Association::Strongest, 0.0).sir.unwrap();
        let b = sinr_sample(&sats, &ch, Association::Nearest, 0.0).sir.unwrap();
        prop_assert!(a >= b);
        prop_assert!(a >= 0.0 && b >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn laplace_derivatives_alternate_in_sign(h in 400.0f64..1200.0, beta in 0.02f64..0.6, m in 1u32..5, ls in -12.0f64..-2.0) {
        let cfg = wide_config(h, beta, m);
        let s = 10f64.powf(ls);
        let d = laplace_derivatives(s, m - 1, &cfg).unwrap();
        for (k, v) in d.iter().enumerate() {
            let signed = if k % 2 == 0 { *v } else { -*v };
            prop_assert!(signed >= -1e-300, "k={} v={}", k, v);
        }
        prop_assert!(d[0] > 0.0 && d[0] <= 1.0);
    }

    #[test]
    fn realizations_stay_inside_the_visible_cap(seed in any::<u64>(), trial in 0u64..1000, el in 0.0f64..60.0) {
        let geom = ShellGeometry::earth(550.0).unwrap();
        let ch = ChannelModel::new(LosModel::ExponentialBlockage { beta: 0.3 }, 2.0, 3.0, 2).unwrap();
        let beam = BeamGainModel::bessel(100.0, 5f64.to_radians()).unwrap();
        let mut cfg = MonteCarloConfig::new(geom, ch, beam).unwrap();
        cfg.min_elevation = Some(el.to_radians());
        let cut = cfg.visible_slant_limit();
        let spec = ConstellationSpec::Sppp { density: cfg.density_for_count(6.0) };
        let real = realize_trial(&spec, &cfg, seed, trial).unwrap();
        for s in &real.sats {
            prop_assert!(s.r >= geom.min_slant() && s.r <= cut);
            prop_assert!(s.fading >= 0.0 && s.gain >= 0.0);
        }
    }

    #[test]
    fn coverage_estimates_are_monotone_in_threshold(seed in any::<u64>(), k in 1.0f64..20.0) {
        let geom = ShellGeometry::earth(700.0).unwrap();
        let ch = ChannelModel::new(LosModel::ExponentialBlockage { beta: 0.2 }, 2.0, 3.0, 3).unwrap();
        let beam = BeamGainModel::bessel(100.0, 10f64.to_radians()).unwrap();
        let cfg = MonteCarloConfig::new(geom, ch, beam).unwrap();
        let grid = SirGrid::db_range(-10.0, 25.0, 15).unwrap();
        let spec = ConstellationSpec::Sppp { density: cfg.density_for_count(k) };
        let est = simulate(&spec, &grid, 2000, &cfg, seed).unwrap();
        prop_assert!(est.curve.values.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(est.curve.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
