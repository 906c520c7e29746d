#![cfg(feature = "parallel")]

use leocov::montecarlo::simulate;
use leocov::{
    coverage_exact, AnalyticConfig, BeamGainModel, ChannelModel, ConstellationSpec, LosModel, MonteCarloConfig,
    ShellGeometry, SirGrid, WalkerStar,
};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn setup() -> (ShellGeometry, ChannelModel, BeamGainModel) {
    let geom = ShellGeometry::earth(550.0).unwrap();
    let ch = ChannelModel::new(LosModel::ExponentialBlockage { beta: 0.35 }, 2.5, 4.0, 2).unwrap();
    let beam = BeamGainModel::bessel(100.0, 8f64.to_radians()).unwrap();
    (geom, ch, beam)
}

#[test]
fn monte_carlo_is_bit_identical_across_worker_counts() {
    let (geom, ch, beam) = setup();
    let mut cfg = MonteCarloConfig::new(geom, ch, beam).unwrap();
    cfg.min_elevation = Some(20f64.to_radians());
    let grid = SirGrid::db_range(-5.0, 20.0, 26).unwrap();
    let specs = [
        ConstellationSpec::Sppp { density: cfg.density_for_count(6.0) },
        ConstellationSpec::Bpp { n_visible: 5 },
        ConstellationSpec::Walker { pattern: WalkerStar::new(24, 20, 12).unwrap(), freq_groups: 2 },
    ];
    for spec in &specs {
        let one = in_pool(1, || simulate(spec, &grid, 20_000, &cfg, 99).unwrap());
        for threads in [2, 4, 7] {
            let many = in_pool(threads, || simulate(spec, &grid, 20_000, &cfg, 99).unwrap());
            assert_eq!(one, many, "{} with {threads} threads", spec.name());
        }
    }
}

#[test]
fn seeds_select_independent_streams() {
    let (geom, ch, beam) = setup();
    let cfg = MonteCarloConfig::new(geom, ch, beam).unwrap();
    let grid = SirGrid::db_range(0.0, 10.0, 3).unwrap();
    let spec = ConstellationSpec::Sppp { density: cfg.density_for_count(6.0) };
    let a = simulate(&spec, &grid, 5_000, &cfg, 1).unwrap();
    let b = simulate(&spec, &grid, 5_000, &cfg, 2).unwrap();
    assert_ne!(a.curve.values, b.curve.values);
    assert_eq!(a, simulate(&spec, &grid, 5_000, &cfg, 1).unwrap());
}

#[test]
fn analytic_curves_do_not_depend_on_worker_count() {
    let (geom, ch, beam) = setup();
    let cfg = AnalyticConfig::with_visible_count(geom, ch, beam, 8.0).unwrap();
    let grid = SirGrid::db_range(-5.0, 15.0, 9).unwrap();
    let one = in_pool(1, || coverage_exact(&grid, &cfg).unwrap());
    let many = in_pool(4, || coverage_exact(&grid, &cfg).unwrap());
    assert_eq!(one, many);
}
