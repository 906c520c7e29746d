//! Bounds and closed-form approximations of the coverage probability.
//!
//! The LOS Nakagami tail is sandwiched by Alzer's inequality,
//! `1 - (1 - e^{-m kappa x})^m`, with `kappa = 1` giving a lower bound and
//! `kappa = (m!)^{-1/m}` an upper one. Expanding the power turns the LOS
//! part of the coverage integral into an alternating sum of Laplace
//! transforms, so no derivatives are needed.
//!
//! With step LOS/gain models and `alpha_N = 2 alpha_L` the Laplace exponent
//! collapses to `c (r^{2a/a_L} rho_L + r^{2a/a_N} rho_N)` and the radial
//! integral has a closed form in terms of `erf`, which is then replaced by a
//! two-exponential approximation.
//!
//! # Why the closed form mixes `R` and `R^2`
//!
//! For a LOS serving link (`a = a_L`) the exponent is
//! `c (rho_L r^2 + rho_N r)` and the radial integral is taken in `r`
//! directly, so the block boundaries are `R_min` and `R_los`. For an NLOS
//! serving link (`a = a_N`) it is `c (rho_L r^4 + rho_N r^2)`; substituting
//! `t = r^2` gives the same quadratic form in `t`, with boundaries
//! `R_los^2` and `R_max^2`. Both blocks are then `int exp(-c Psi_1)`
//! with `Psi_1(R) = R (rho_N + R rho_L)`, completed to a square.

use crate::analytic::{integrate_serving, threshold_scale, AnalyticConfig, EtaTable, LaplaceCache};
use crate::channel::{BeamGainModel, ChannelModel, LosModel};
use crate::curve::{CoverageCurve, MethodTag, SirGrid};
use crate::error::{Error, Result};
use crate::geometry::ShellGeometry;
use crate::parallel;
use crate::quadrature::{integrate_scalar, Tolerance};
use crate::special::{binomial, erfc_scaled, ln_gamma};

/// Tolerance for the one-dimensional `rho` integrals.
const RHO_TOL: Tolerance = Tolerance { rel: 1e-11, abs: 1e-300, max_subdivisions: 2000 };

/// Slack when comparing `kappa` and `epsilon` against their admissible ranges.
const RANGE_SLACK: f64 = 1e-12;

/// Value of `kappa` giving the upper bound, `(m!)^{-1/m}`.
pub fn kappa_upper(m: u32) -> f64 {
    let m = m.max(1) as f64;
    (-ln_gamma(m + 1.0) / m).exp()
}

/// Checks `kappa` against the admissible interval `[(m!)^{-1/m}, 1]`.
pub fn check_kappa(kappa: f64, m: u32) -> Result<()> {
    let lo = kappa_upper(m);
    if kappa >= lo * (1.0 - RANGE_SLACK) && kappa <= 1.0 + RANGE_SLACK {
        Ok(())
    } else {
        Err(Error::domain("check_kappa", format!("kappa {kappa} outside [{lo}, 1] for m = {m}")))
    }
}

fn kappa_tag(kappa: f64, m: u32) -> MethodTag {
    if (kappa - 1.0).abs() <= RANGE_SLACK {
        MethodTag::BoundLower
    } else if (kappa - kappa_upper(m)).abs() <= RANGE_SLACK {
        MethodTag::BoundUpper
    } else {
        MethodTag::BoundInterpolated
    }
}

/// Step LOS probability and step beam gain, both switching at `r_los`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepModelConfig {
    pub geom: ShellGeometry,
    pub r_los: f64,
    pub g_los: f64,
    pub g_nlos: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub m: u32,
    pub density: f64,
}

impl StepModelConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        geom: ShellGeometry,
        r_los: f64,
        g_los: f64,
        g_nlos: f64,
        alpha_los: f64,
        alpha_nlos: f64,
        m: u32,
        density: f64,
    ) -> Result<Self> {
        let cfg = Self { geom, r_los, g_los, g_nlos, alpha_los, alpha_nlos, m, density };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.analytic().map(|_| ())
    }

    /// The same network as a general analytic configuration.
    pub fn analytic(&self) -> Result<AnalyticConfig> {
        let channel = ChannelModel::new(
            LosModel::Step { r_los: self.r_los },
            self.alpha_los,
            self.alpha_nlos,
            self.m,
        )?;
        let beam = BeamGainModel::Step { g_los: self.g_los, g_nlos: self.g_nlos, r_los: self.r_los };
        AnalyticConfig::new(self.geom, channel, beam, self.density)
    }

    /// `c = pi lambda R_S / R_E`.
    pub fn c(&self) -> f64 {
        std::f64::consts::PI * self.density * self.geom.shell_radius() / self.geom.earth_radius()
    }

    fn require_closed_form(&self, op: &'static str) -> Result<()> {
        self.validate()?;
        if (self.alpha_nlos / self.alpha_los - 2.0).abs() > 1e-12 {
            return Err(Error::unsupported(
                op,
                format!(
                    "closed form needs alpha_nlos = 2 alpha_los, got {} and {}",
                    self.alpha_los, self.alpha_nlos
                ),
            ));
        }
        Ok(())
    }

    /// Smallest `epsilon` for which every `rho` integration range is
    /// non-empty, over both path-loss exponents.
    pub fn epsilon_min(&self) -> f64 {
        let (rmin, rmax, rlos) = (self.geom.min_slant(), self.geom.max_slant(), self.r_los);
        let (al, an) = (self.alpha_los, self.alpha_nlos);
        [al, an]
            .iter()
            .map(|&a| {
                let los = rmin.powf((a + al) / (2.0 * a)) / (rmax.sqrt() * rlos.powf(al / (2.0 * a)));
                let nlos = rmin.sqrt() * rlos.powf(an / (2.0 * a)) / rmax.powf((a + an) / (2.0 * a));
                los.max(nlos)
            })
            .fold(0.0, f64::max)
    }
}

/// Tightness parameters of the closed form: `kappa` selects the Alzer bound
/// and `epsilon` narrows the `rho` integration ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    kappa: f64,
    epsilon: f64,
}

impl BoundParams {
    /// Default `epsilon` for the approximation.
    pub const DEFAULT_EPSILON: f64 = 0.6;

    pub fn new(kappa: f64, epsilon: f64, cfg: &StepModelConfig) -> Result<Self> {
        let p = Self { kappa, epsilon };
        p.check(cfg)?;
        Ok(p)
    }

    /// `kappa = epsilon = 1`, always admissible.
    pub fn lower() -> Self {
        Self { kappa: 1.0, epsilon: 1.0 }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn check(&self, cfg: &StepModelConfig) -> Result<()> {
        check_kappa(self.kappa, cfg.m)?;
        let lo = cfg.epsilon_min();
        let eps = self.epsilon;
        let inside = eps <= 1.0 + RANGE_SLACK && (eps > lo || eps == 1.0);
        if !inside {
            return Err(Error::domain("BoundParams", format!("epsilon {eps} outside ({lo}, 1]")));
        }
        Ok(())
    }
}

/// `int_lo^hi f(u) du` computed in `t = ln u`, which keeps the wide,
/// many-decade ranges of the `rho` integrals well resolved.
fn log_integral<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, op: &'static str) -> Result<f64> {
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(Error::domain(op, format!("integration range [{lo}, {hi}] not positive and finite")));
    }
    if hi <= lo {
        return Ok(0.0);
    }
    integrate_scalar(|t| t.exp() * f(t), lo.ln(), hi.ln(), &[], RHO_TOL)
}

fn check_x(op: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("argument must be positive, got {x}")))
    }
}

/// LOS interference coefficient `rho_L(x, alpha; epsilon)`.
pub fn rho_los(x: f64, alpha: f64, params: &BoundParams, cfg: &StepModelConfig) -> Result<f64> {
    const OP: &str = "rho_los";
    check_x(OP, x)?;
    params.check(cfg)?;
    let (al, eps) = (cfg.alpha_los, params.epsilon);
    let m = cfg.m as f64;
    let a = x * cfg.g_los / m;
    let scale = a.powf(-2.0 / al);
    let p = 2.0 * alpha / al;
    let lo = scale * cfg.geom.min_slant().powi(2) / (eps * cfg.geom.max_slant()).powf(p);
    let hi = scale * cfg.r_los.powi(2) / (cfg.geom.min_slant() / eps).powf(p);
    // 1 - (1 + u^{-a_L/2})^{-m}
    let f = |t: f64| -(-m * (-0.5 * al * t).exp().ln_1p()).exp_m1();
    Ok(log_integral(f, lo, hi, OP)? / scale)
}

/// NLOS interference coefficient `rho_N(x, alpha; epsilon)`.
pub fn rho_nlos(x: f64, alpha: f64, params: &BoundParams, cfg: &StepModelConfig) -> Result<f64> {
    const OP: &str = "rho_nlos";
    check_x(OP, x)?;
    params.check(cfg)?;
    let (an, eps) = (cfg.alpha_nlos, params.epsilon);
    let scale = (x * cfg.g_nlos).powf(-2.0 / an);
    let p = 2.0 * alpha / an;
    let lo = scale * cfg.r_los.powi(2) / (eps * cfg.geom.max_slant()).powf(p);
    let hi = scale * cfg.geom.max_slant().powi(2) / (cfg.geom.min_slant() / eps).powf(p);
    // 1 - 1/(1 + u^{-a_N/2}) = 1/(1 + u^{a_N/2})
    let f = |t: f64| 1.0 / (1.0 + (0.5 * an * t).exp());
    Ok(log_integral(f, lo, hi, OP)? / scale)
}

/// The pair `(rho_L, rho_N)` for one block.
#[derive(Debug, Clone, Copy)]
struct Rho {
    los: f64,
    nlos: f64,
}

impl Rho {
    fn at(x: f64, alpha: f64, params: &BoundParams, cfg: &StepModelConfig) -> Result<Self> {
        Ok(Self { los: rho_los(x, alpha, params, cfg)?, nlos: rho_nlos(x, alpha, params, cfg)? })
    }

    fn psi1(&self, r: f64) -> f64 {
        r * (self.nlos + r * self.los)
    }

    fn psi2(&self, r: f64) -> f64 {
        4.0 / 3.0 * self.psi1(r) + self.nlos * self.nlos / (12.0 * self.los)
    }

    /// `(1/2) sqrt(pi/(c rho_L)) [erf(X(b)) - erf(X(a))] e^{A}`, i.e. the
    /// integral of `exp(-c Psi_1(R))` over `[a, b]`, in either the exact
    /// (`erfc` based) or two-exponential form.
    fn gaussian_block(&self, c: f64, a: f64, b: f64, exact: bool) -> f64 {
        let pre = 0.5 * (std::f64::consts::PI / (c * self.los)).sqrt();
        if exact {
            let x = |r: f64| c.sqrt() * (self.nlos + 2.0 * r * self.los) / (2.0 * self.los.sqrt());
            let tail = |r: f64| erfc_scaled(x(r)) * (-c * self.psi1(r)).exp();
            pre * (tail(a) - tail(b))
        } else {
            let tail = |r: f64| (-c * self.psi1(r)).exp() / 6.0 + 0.5 * (-c * self.psi2(r)).exp();
            pre * (tail(a) - tail(b))
        }
    }
}

/// One threshold of the closed form. `exact` keeps `erf` instead of the
/// two-exponential approximation.
fn closed_form_value(gamma: f64, cfg: &StepModelConfig, params: &BoundParams, exact: bool) -> Result<f64> {
    check_threshold("coverage_closed_form", gamma)?;
    let c = cfg.c();
    let (rmin, rmax, rlos) = (cfg.geom.min_slant(), cfg.geom.max_slant(), cfg.r_los);

    // NLOS serving link, in t = r^2: int 2c r e^{-c Psi_1(r^2)} dr = c int e^{-c Psi_1(t)} dt
    let nlos = if rlos < rmax {
        let rho = Rho::at(gamma / cfg.g_nlos, cfg.alpha_nlos, params, cfg)?;
        c * rho.gaussian_block(c, rlos * rlos, rmax * rmax, exact)
    } else {
        0.0
    };

    // LOS serving link: int 2c r e^{-c Psi_1(r)} dr, integrated by parts into
    // boundary terms plus the same Gaussian block.
    let mut los = 0.0;
    if rlos > rmin {
        for l in 1..=cfg.m {
            let z = (l * cfg.m) as f64 * gamma * params.kappa / cfg.g_los;
            let rho = Rho::at(z, cfg.alpha_los, params, cfg)?;
            let edge = ((-c * rho.psi1(rmin)).exp() - (-c * rho.psi1(rlos)).exp()) / rho.los;
            let term = edge - c * rho.nlos / rho.los * rho.gaussian_block(c, rmin, rlos, exact);
            let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
            los += sign * binomial(cfg.m, l) * term;
        }
    }
    Ok(nlos + los)
}

fn closed_form_curve(
    op: &'static str,
    grid: &SirGrid,
    cfg: &StepModelConfig,
    params: &BoundParams,
    exact: bool,
    tag: MethodTag,
) -> Result<CoverageCurve> {
    cfg.require_closed_form(op)?;
    params.check(cfg)?;
    let values = parallel::map_slice(grid.linear(), |&g| closed_form_value(g, cfg, params, exact))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageCurve::new(grid.clone(), values, tag))
}

/// Closed-form coverage approximation for step LOS and gain models.
///
/// Requires `alpha_nlos = 2 alpha_los`.
pub fn coverage_closed_form(
    grid: &SirGrid,
    cfg: &StepModelConfig,
    params: &BoundParams,
) -> Result<CoverageCurve> {
    closed_form_curve("coverage_closed_form", grid, cfg, params, false, MethodTag::ClosedForm)
}

/// The closed form before the two-exponential step, with `erf` evaluated
/// to machine precision. Mostly useful as a reference for
/// [`coverage_closed_form`].
pub fn coverage_closed_form_erf(
    grid: &SirGrid,
    cfg: &StepModelConfig,
    params: &BoundParams,
) -> Result<CoverageCurve> {
    closed_form_curve("coverage_closed_form_erf", grid, cfg, params, true, MethodTag::ClosedForm)
}

/// Closed-form lower bound: the closed form at `kappa = epsilon = 1`.
pub fn coverage_lower_closed(grid: &SirGrid, cfg: &StepModelConfig) -> Result<CoverageCurve> {
    closed_form_curve("coverage_lower_closed", grid, cfg, &BoundParams::lower(), false, MethodTag::BoundLower)
}

fn check_threshold(op: &'static str, gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("threshold must be positive, got {gamma}")))
    }
}

fn bound_with(gamma: f64, cfg: &AnalyticConfig, kappa: f64, table: &EtaTable) -> Result<f64> {
    check_threshold("coverage_bound", gamma)?;
    let cache = LaplaceCache::new(cfg, Some(table));
    let m = cfg.channel.nakagami_m;
    let coef: Vec<(f64, f64)> = (1..=m)
        .map(|l| {
            let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
            (sign * binomial(m, l), (l * m) as f64 * kappa)
        })
        .collect();
    integrate_serving(cfg, "coverage_bound", |r| {
        let p = cfg.channel.los_probability_in_range(r, &cfg.geom);
        let g = cfg.beam.gain_in_range(r, &cfg.geom);
        let mut total = 0.0;
        if p > 0.0 {
            let base = gamma * threshold_scale(r, cfg.channel.alpha_los, g);
            let mut sum = 0.0;
            for &(w, k) in &coef {
                sum += w * cache.laplace(k * base)?;
            }
            total += p * sum;
        }
        if p < 1.0 {
            let s = gamma * threshold_scale(r, cfg.channel.alpha_nlos, g);
            total += (1.0 - p) * cache.laplace(s)?;
        }
        Ok(total)
    })
}

/// Coverage with the LOS Nakagami tail replaced by Alzer's bound.
///
/// `kappa = 1` gives a lower bound on the exact coverage and
/// `kappa = (m!)^{-1/m}` an upper bound (for thresholds above 0 dB);
/// values in between interpolate monotonically.
pub fn coverage_bound(grid: &SirGrid, cfg: &AnalyticConfig, kappa: f64) -> Result<CoverageCurve> {
    let m = cfg.channel.nakagami_m;
    check_kappa(kappa, m)?;
    // l m kappa >= 1, so every argument stays above the lower end of the span
    let (lo, hi) = EtaTable::span(cfg, grid.linear()[0]);
    let table = EtaTable::build(cfg, lo, hi * (m * m) as f64)?;
    let values = parallel::map_slice(grid.linear(), |&g| bound_with(g, cfg, kappa, &table))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageCurve::new(grid.clone(), values, kappa_tag(kappa, m)))
}

/// `rho^hm(gamma; alpha)` for homogeneous Rayleigh channels.
pub fn rho_homogeneous(gamma: f64, alpha: f64, geom: &ShellGeometry) -> Result<f64> {
    const OP: &str = "rho_homogeneous";
    check_threshold(OP, gamma)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(OP, format!("path-loss exponent must be positive, got {alpha}")));
    }
    let scale = gamma.powf(-2.0 / alpha);
    let ratio = (geom.max_slant() / geom.min_slant()).powi(2);
    let f = |t: f64| 1.0 / (1.0 + (0.5 * alpha * t).exp());
    Ok(log_integral(f, scale / ratio, scale * ratio, OP)? / scale)
}

/// Lower bound on coverage with homogeneous Rayleigh channels at a single
/// threshold.
pub fn homogeneous_lower_bound(gamma: f64, density: f64, geom: &ShellGeometry, alpha: f64) -> Result<f64> {
    if !(density > 0.0 && density.is_finite()) {
        return Err(Error::domain(
            "homogeneous_lower_bound",
            format!("density must be positive, got {density}"),
        ));
    }
    let rho = rho_homogeneous(gamma, alpha, geom)?;
    let c = std::f64::consts::PI * density * geom.shell_radius() / geom.earth_radius();
    let near = -c * rho * geom.min_slant().powi(2);
    let far = -c * rho * geom.max_slant().powi(2);
    // e^{near} - e^{far} = e^{near} (1 - e^{far - near})
    Ok(-near.exp() * (far - near).exp_m1() / rho)
}

pub fn coverage_lower_homogeneous(
    grid: &SirGrid,
    density: f64,
    geom: &ShellGeometry,
    alpha: f64,
) -> Result<CoverageCurve> {
    let values = parallel::map_slice(grid.linear(), |&g| homogeneous_lower_bound(g, density, geom, alpha))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageCurve::new(grid.clone(), values, MethodTag::HomogeneousLowerBound))
}

/// Density maximising the homogeneous lower bound, and the matching mean
/// number of visible satellites.
pub fn optimal_density(gamma: f64, alpha: f64, geom: &ShellGeometry) -> Result<(f64, f64)> {
    let rho = rho_homogeneous(gamma, alpha, geom)?;
    let (re, h) = (geom.earth_radius(), geom.altitude());
    let log_ratio = (2.0 * re / h).ln_1p();
    let lambda = re * log_ratio / (2.0 * std::f64::consts::PI * geom.shell_radius() * h * re * rho);
    Ok((lambda, geom.visible_count(lambda)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::coverage_exact;
    use crate::channel::nakagami_ccdf;
    use crate::quadrature::integrate_scalar;
    use crate::units::db_to_linear;

    fn fig5(r_los: f64) -> StepModelConfig {
        let geom = ShellGeometry::earth(700.0).unwrap();
        StepModelConfig::new(geom, r_los, 1.0, 1.0, 2.0, 4.0, 3, geom.density_for_count(10.0)).unwrap()
    }

    fn upper(cfg: &StepModelConfig, eps: f64) -> BoundParams {
        BoundParams::new(kappa_upper(cfg.m), eps, cfg).unwrap()
    }

    #[test]
    fn kappa_range() {
        assert_eq!(kappa_upper(1), 1.0);
        assert!((kappa_upper(3) - 6f64.powf(-1.0 / 3.0)).abs() < 1e-15);
        // large m without factorial overflow
        assert!(kappa_upper(400).is_finite() && kappa_upper(400) > 0.0);
        assert!(check_kappa(0.7, 3).is_ok());
        assert!(check_kappa(1.01, 3).is_err());
        assert!(check_kappa(0.5, 3).is_err());
        assert!(check_kappa(1.0, 1).is_ok());
        assert!(check_kappa(0.9, 1).is_err());
    }

    #[test]
    fn alzer_sandwich_on_grid() {
        for m in 2..=4u32 {
            let k = kappa_upper(m);
            for i in 1..=400 {
                let x = i as f64 * 0.025;
                let lo = 1.0 - (1.0 - (-(m as f64) * x).exp()).powi(m as i32);
                let hi = 1.0 - (1.0 - (-(m as f64) * k * x).exp()).powi(m as i32);
                let p = nakagami_ccdf(x, m).unwrap();
                assert!(lo <= p + 1e-14 && p <= hi + 1e-14, "m={m} x={x}: {lo} {p} {hi}");
            }
        }
    }

    #[test]
    fn epsilon_window() {
        let cfg = fig5(1500.0);
        let lo = cfg.epsilon_min();
        assert!(lo > 0.0 && lo < 0.6);
        assert!(BoundParams::new(1.0, 0.6, &cfg).is_ok());
        assert!(BoundParams::new(1.0, 1.0, &cfg).is_ok());
        assert!(BoundParams::new(1.0, 1.2, &cfg).is_err());
        assert!(BoundParams::new(1.0, 0.5 * lo, &cfg).is_err());
        // at the boundary one of the ranges just closes
        let p = BoundParams { kappa: 1.0, epsilon: lo * (1.0 + 1e-9) };
        let x = 1.0;
        let r: Vec<f64> = [cfg.alpha_los, cfg.alpha_nlos]
            .iter()
            .flat_map(|&a| [rho_los(x, a, &p, &cfg).unwrap(), rho_nlos(x, a, &p, &cfg).unwrap()])
            .collect();
        let smallest = r.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(smallest < 1e-6 * r.iter().cloned().fold(0.0, f64::max), "{r:?}");
    }

    #[test]
    fn rho_matches_direct_quadrature() {
        let cfg = fig5(1700.0);
        let p = upper(&cfg, 0.6);
        let (x, a) = (0.7, cfg.alpha_los);
        let b = x * cfg.g_los / 3.0;
        let lo = b.powf(-2.0 / 2.0) * cfg.geom.min_slant().powi(2) / (0.6 * cfg.geom.max_slant()).powf(2.0 * a / 2.0);
        let hi = b.powf(-2.0 / 2.0) * 1700f64.powi(2) / (cfg.geom.min_slant() / 0.6).powf(2.0 * a / 2.0);
        let direct = b
            * integrate_scalar(|u| 1.0 - (1.0 + 1.0 / u).powi(-3), lo, hi, &[], Tolerance::new(1e-12, 1e-300))
                .unwrap();
        let got = rho_los(x, a, &p, &cfg).unwrap();
        assert!((got - direct).abs() < 1e-9 * direct, "{got} vs {direct}");
    }

    #[test]
    fn rho_vanishes_for_small_argument() {
        let cfg = fig5(1500.0);
        let p = BoundParams::lower();
        let mut prev = f64::INFINITY;
        for k in 0..8 {
            let x = 10f64.powi(-2 * k);
            let v = rho_los(x, cfg.alpha_los, &p, &cfg).unwrap() + rho_nlos(x, cfg.alpha_los, &p, &cfg).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn rho_forms_agree_for_rayleigh() {
        // with m = 1 the LOS integrand is the NLOS one with a_L in place of a_N
        let geom = ShellGeometry::earth(700.0).unwrap();
        let cfg = StepModelConfig::new(geom, 1500.0, 1.0, 1.0, 3.0, 3.0, 1, 1e-4).unwrap();
        let p = BoundParams::lower();
        let l = rho_los(0.5, 3.0, &p, &cfg).unwrap();
        // same limits only when r_los sits at both ends; compare integrands instead
        let f_l = |t: f64| -(-(-1.5 * t).exp().ln_1p()).exp_m1();
        let f_n = |t: f64| 1.0 / (1.0 + (1.5 * t).exp());
        for t in [-5.0, -1.0, 0.0, 0.3, 2.0, 9.0] {
            assert!((f_l(t) - f_n(t)).abs() < 1e-15);
        }
        assert!(l > 0.0);
    }

    /// Radial integral of the approximate Laplace transform, the step before
    /// the closed form is taken.
    fn approx_by_quadrature(gamma: f64, cfg: &StepModelConfig, params: &BoundParams) -> f64 {
        let c = cfg.c();
        let tol = Tolerance::new(1e-12, 1e-300);
        let (rmin, rmax, rlos) = (cfg.geom.min_slant(), cfg.geom.max_slant(), cfg.r_los);
        let rho = Rho::at(gamma / cfg.g_nlos, cfg.alpha_nlos, params, cfg).unwrap();
        let mut total = integrate_scalar(
            |r| 2.0 * c * r * (-c * (rho.los * r.powi(4) + rho.nlos * r * r)).exp(),
            rlos,
            rmax,
            &[],
            tol,
        )
        .unwrap();
        for l in 1..=cfg.m {
            let z = (l * cfg.m) as f64 * gamma * params.kappa / cfg.g_los;
            let rho = Rho::at(z, cfg.alpha_los, params, cfg).unwrap();
            let v = integrate_scalar(
                |r| 2.0 * c * r * (-c * (rho.los * r * r + rho.nlos * r)).exp(),
                rmin,
                rlos,
                &[],
                tol,
            )
            .unwrap();
            total += if l % 2 == 1 { 1.0 } else { -1.0 } * binomial(cfg.m, l) * v;
        }
        total
    }

    #[test]
    fn erf_form_matches_radial_quadrature() {
        let grid = SirGrid::from_db(&[0.5, 3.0, 8.0, 15.0, 20.0]).unwrap();
        for r_los in [1500.0, 2300.0] {
            let cfg = fig5(r_los);
            for params in [upper(&cfg, 0.6), BoundParams::lower()] {
                let curve = coverage_closed_form_erf(&grid, &cfg, &params).unwrap();
                for (g, v) in grid.linear().iter().zip(&curve.values) {
                    let want = approx_by_quadrature(*g, &cfg, &params);
                    assert!((v - want).abs() < 1e-8, "r_los={r_los} g={g}: {v} vs {want}");
                }
            }
        }
    }

    #[test]
    fn two_exponential_form_is_close_to_erf_form() {
        let cfg = fig5(1700.0);
        let grid = SirGrid::db_range(0.5, 20.0, 8).unwrap();
        let p = upper(&cfg, 0.6);
        let a = coverage_closed_form(&grid, &cfg, &p).unwrap();
        let b = coverage_closed_form_erf(&grid, &cfg, &p).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 0.05, "{x} vs {y}");
        }
        assert_eq!(a.method, MethodTag::ClosedForm);
    }

    #[test]
    fn closed_form_requires_doubled_exponent() {
        let geom = ShellGeometry::earth(700.0).unwrap();
        let cfg = StepModelConfig::new(geom, 1500.0, 1.0, 1.0, 2.0, 3.0, 3, 1e-4).unwrap();
        let grid = SirGrid::from_db(&[3.0]).unwrap();
        let err = coverage_closed_form(&grid, &cfg, &BoundParams::lower()).unwrap_err();
        assert!(matches!(err, Error::Unsupported { .. }));
        assert!(StepModelConfig::new(geom, 100.0, 1.0, 1.0, 2.0, 4.0, 3, 1e-4).is_err());
    }

    #[test]
    fn lower_closed_is_kappa_one_epsilon_one() {
        let cfg = fig5(1500.0);
        let grid = SirGrid::db_range(0.5, 20.0, 6).unwrap();
        let lower = coverage_lower_closed(&grid, &cfg).unwrap();
        let same = coverage_closed_form(&grid, &cfg, &BoundParams::lower()).unwrap();
        assert_eq!(lower.values, same.values);
        assert_eq!(lower.method, MethodTag::BoundLower);
        let up = coverage_closed_form(&grid, &cfg, &upper(&cfg, 1.0)).unwrap();
        for (l, u) in lower.values.iter().zip(&up.values) {
            assert!(l <= u);
        }
    }

    #[test]
    fn closed_form_orders_by_los_radius_and_vanishes_when_dense() {
        let grid = SirGrid::db_range(1.0, 20.0, 5).unwrap();
        let a = coverage_closed_form(&grid, &fig5(1500.0), &upper(&fig5(1500.0), 0.6)).unwrap();
        let b = coverage_closed_form(&grid, &fig5(2300.0), &upper(&fig5(2300.0), 0.6)).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!(x >= y, "{x} < {y}");
        }
        let mut dense = fig5(1500.0);
        dense.density *= 1e4;
        let v = coverage_closed_form(&grid, &dense, &upper(&dense, 0.6)).unwrap();
        assert!(v.values.iter().all(|x| x.abs() < 1e-3), "{:?}", v.values);
    }

    fn fig4(beta: f64) -> AnalyticConfig {
        let geom = ShellGeometry::earth(700.0).unwrap();
        let ch = ChannelModel::new(LosModel::ExponentialBlockage { beta }, 2.0, 3.0, 3).unwrap();
        let beam = BeamGainModel::bessel(100.0, 10f64.to_radians()).unwrap();
        AnalyticConfig::with_visible_count(geom, ch, beam, 10.0).unwrap()
    }

    #[test]
    fn bounds_sandwich_exact_and_are_monotone_in_kappa() {
        let cfg = fig4(0.048);
        let grid = SirGrid::from_db(&[1.0, 5.0, 10.0, 20.0]).unwrap();
        let exact = coverage_exact(&grid, &cfg).unwrap();
        let ku = kappa_upper(3);
        let lo = coverage_bound(&grid, &cfg, 1.0).unwrap();
        let mid = coverage_bound(&grid, &cfg, 0.5 * (1.0 + ku)).unwrap();
        let hi = coverage_bound(&grid, &cfg, ku).unwrap();
        assert_eq!(lo.method, MethodTag::BoundLower);
        assert_eq!(mid.method, MethodTag::BoundInterpolated);
        assert_eq!(hi.method, MethodTag::BoundUpper);
        for i in 0..grid.len() {
            let (l, m, e, u) = (lo.values[i], mid.values[i], exact.values[i], hi.values[i]);
            assert!(l <= e + 1e-6 && e <= u + 1e-6, "{l} {e} {u}");
            assert!(l <= m + 1e-9 && m <= u + 1e-9);
        }
    }

    #[test]
    fn bound_collapses_for_rayleigh() {
        let geom = ShellGeometry::earth(550.0).unwrap();
        let ch = ChannelModel::new(LosModel::ExponentialBlockage { beta: 0.2 }, 2.5, 3.5, 1).unwrap();
        let beam = BeamGainModel::bessel(50.0, 8f64.to_radians()).unwrap();
        let cfg = AnalyticConfig::with_visible_count(geom, ch, beam, 6.0).unwrap();
        let grid = SirGrid::from_db(&[0.0, 4.0, 12.0]).unwrap();
        let a = coverage_bound(&grid, &cfg, 1.0).unwrap();
        let b = coverage_exact(&grid, &cfg).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn homogeneous_rho_matches_riemann_sum() {
        let geom = ShellGeometry::earth(700.0).unwrap();
        let (gamma, alpha) = (1.0, 4.0);
        let ratio = (geom.max_slant() / geom.min_slant()).powi(2);
        // midpoint rule in t = ln u, 10^6 points
        let (a, b) = (-ratio.ln(), ratio.ln());
        let n = 1_000_000;
        let h = (b - a) / n as f64;
        let sum: f64 = (0..n)
            .map(|i| {
                let t = a + (i as f64 + 0.5) * h;
                t.exp() / (1.0 + (0.5 * alpha * t).exp())
            })
            .sum();
        let got = rho_homogeneous(gamma, alpha, &geom).unwrap();
        assert!((got - sum * h).abs() < 1e-6 * got, "{got} vs {}", sum * h);
    }

    #[test]
    fn homogeneous_rho_increases_with_threshold() {
        let geom = ShellGeometry::earth(700.0).unwrap();
        let mut prev = 0.0;
        for db in [-5.0, 0.0, 3.0, 7.0, 12.0, 20.0] {
            let v = rho_homogeneous(db_to_linear(db), 3.0, &geom).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(rho_homogeneous(0.0, 3.0, &geom).is_err());
    }

    #[test]
    fn homogeneous_bound_is_unimodal_in_density() {
        let geom = ShellGeometry::earth(700.0).unwrap();
        let gamma = db_to_linear(3.0);
        let n = 500;
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let lam = 10f64.powf(-11.0 + 9.0 * i as f64 / (n - 1) as f64);
                homogeneous_lower_bound(gamma, lam, &geom, 3.0).unwrap()
            })
            .collect();
        // far above the optimum the bound underflows to exactly zero
        let steps: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).filter(|d| *d != 0.0).collect();
        let changes = steps.windows(2).filter(|d| d[0].signum() != d[1].signum()).count();
        assert_eq!(changes, 1);
        assert!(vals[0] < 1e-3 && vals[n - 1] < 1e-3);
    }

    #[test]
    fn optimal_density_identity_and_argmax() {
        for h in [400.0, 700.0, 1000.0] {
            let geom = ShellGeometry::earth(h).unwrap();
            let mut prev = f64::INFINITY;
            for db in [0.0, 3.0, 5.0] {
                let gamma = db_to_linear(db);
                let (lam, k) = optimal_density(gamma, 3.0, &geom).unwrap();
                let rho = rho_homogeneous(gamma, 3.0, &geom).unwrap();
                let want = (2.0 * geom.earth_radius() / h).ln_1p() / rho;
                assert!((k - want).abs() < 1e-10 * want);
                assert!(lam < prev);
                prev = lam;

                let best = (0..200)
                    .map(|i| lam * 10f64.powf(-1.0 + 2.0 * i as f64 / 199.0))
                    .map(|l| (l, homogeneous_lower_bound(gamma, l, &geom, 3.0).unwrap()))
                    .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
                assert!((best.0 / lam - 1.0).abs() < 0.02, "h={h} db={db}: {} vs {lam}", best.0);
            }
        }
    }
}
