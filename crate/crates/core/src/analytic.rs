//! Exact coverage analysis under strongest-satellite association.
//!
//! Conditioned on a serving satellite at slant range `r`, the interference
//! from the rest of the cap has Laplace transform `L(s) = exp(-eta(s))` with
//!
//! ```text
//! eta(s) = 2 pi lambda (R_S/R_E) int_{R_min}^{R_max}
//!          [1 - p_L(v) (1 + s v^{-a_L} G(v)/m)^{-m} - (1 - p_L(v)) / (1 + s v^{-a_N} G(v))] v dv.
//! ```
//!
//! Coverage then integrates, over the serving range, the probability that
//! the serving link beats `gamma` times the interference: a Nakagami tail
//! for LOS links (which brings in derivatives of `L` up to order `m - 1`)
//! and an exponential tail for NLOS links.
//!
//! Derivatives are never taken numerically. With `x = s v^{-a_L} G/m` and
//! `y = s v^{-a_N} G`, the scaled derivatives
//! `E_j = (-1)^{j+1} s^j eta^{(j)}(s)` have the non-negative integrands
//! `p_L (m)_j x^j (1+x)^{-m-j} + (1 - p_L) j! y^j (1+y)^{-j-1}`, and
//! `T_k = s^k (-1)^k L^{(k)}(s)` follows from
//! `T_k = sum_{j<k} C(k-1, j) E_{k-j} T_j` with `T_0 = L(s)`. Everything
//! stays positive, so no cancellation occurs even when `s` is huge (serving
//! satellite in a deep side lobe).

use std::cell::RefCell;
use std::collections::HashMap;

use crate::channel::{BeamGainModel, ChannelModel};
use crate::curve::{CoverageCurve, MethodTag, SirGrid};
use crate::error::{Error, Result};
use crate::geometry::ShellGeometry;
use crate::parallel;
use crate::quadrature::{integrate, Tolerance};
use crate::special::{binomial, factorial, rising_factorial};

/// Everything the analytic pipeline needs: shell, channel, beam, density and
/// quadrature tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticConfig {
    pub geom: ShellGeometry,
    pub channel: ChannelModel,
    pub beam: BeamGainModel,
    /// Satellites per square kilometre of shell.
    pub density: f64,
    pub tol: Tolerance,
}

impl AnalyticConfig {
    pub fn new(
        geom: ShellGeometry,
        channel: ChannelModel,
        beam: BeamGainModel,
        density: f64,
    ) -> Result<Self> {
        Self::with_tolerance(geom, channel, beam, density, Tolerance::default())
    }

    pub fn with_tolerance(
        geom: ShellGeometry,
        channel: ChannelModel,
        beam: BeamGainModel,
        density: f64,
        tol: Tolerance,
    ) -> Result<Self> {
        const OP: &str = "AnalyticConfig";
        if !(density > 0.0 && density.is_finite()) {
            return Err(Error::domain(OP, format!("density must be positive, got {density}")));
        }
        for (name, t) in [("relative", tol.rel), ("absolute", tol.abs)] {
            if !(t > 0.0 && t <= 1e-3) {
                return Err(Error::domain(OP, format!("{name} tolerance {t} outside (0, 1e-3]")));
            }
        }
        channel.validate(&geom)?;
        beam.validate(&geom)?;
        Ok(Self { geom, channel, beam, density, tol })
    }

    /// Configuration with `count` satellites on the visible cap on average.
    pub fn with_visible_count(
        geom: ShellGeometry,
        channel: ChannelModel,
        beam: BeamGainModel,
        count: f64,
    ) -> Result<Self> {
        Self::new(geom, channel, beam, geom.density_for_count(count))
    }

    /// Mean number of visible satellites `K = lambda |A|`.
    pub fn visible_count(&self) -> f64 {
        self.geom.visible_count(self.density)
    }

    /// Quadrature tolerance for raw radial integrals that are multiplied by
    /// `weight` afterwards; the absolute part applies to the weighted result.
    pub(crate) fn radial_tolerance(&self, weight: f64) -> Tolerance {
        Tolerance { abs: self.tol.abs / weight, ..self.tol }
    }

    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.channel.breakpoints();
        b.extend(self.beam.breakpoints(&self.geom));
        b
    }

    /// Gain nulls with the curvature `g2` of `G(r) ~ g2 (r - r0)^2` and the
    /// distance to the nearest neighbouring null or cap edge.
    fn null_profile(&self) -> Vec<NullProfile> {
        let nulls = self.beam.nulls(&self.geom);
        let (lo, hi) = (self.geom.min_slant(), self.geom.max_slant());
        nulls
            .iter()
            .enumerate()
            .filter_map(|(i, &r0)| {
                let prev = if i == 0 { lo } else { nulls[i - 1] };
                let next = nulls.get(i + 1).copied().unwrap_or(hi);
                let gap = (r0 - prev).min(next - r0);
                let d = 1e-6 * gap;
                let g = |r: f64| self.beam.gain_in_range(r, &self.geom);
                let g2 = 0.5 * (g(r0 + d) + g(r0 - d)) / (d * d);
                (g2 > 0.0 && g2.is_finite()).then_some(NullProfile { r0, g2, gap })
            })
            .collect()
    }

    fn nakagami_m(&self) -> u32 {
        self.channel.nakagami_m
    }
}

struct NullProfile {
    r0: f64,
    g2: f64,
    gap: f64,
}

/// Next to a gain null the integrands for large `s` have a spike of width
/// `delta = sqrt(m' r0^a / (s g2))`, where `s v^{-a} G(v) / m'` crosses 1.
/// Once the spike is much narrower than the panel no quadrature node sees
/// it, so the ranges `r0 +- delta * {1/8, 1, 8}` are added as breakpoints.
fn spike_breakpoints(cfg: &AnalyticConfig, profile: &[NullProfile], s: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let links = [
        (cfg.channel.alpha_los, cfg.nakagami_m() as f64),
        (cfg.channel.alpha_nlos, 1.0),
    ];
    for n in profile {
        for &(alpha, scale) in &links {
            let delta = (scale * n.r0.powf(alpha) / (s * n.g2)).sqrt();
            if 8.0 * delta < 0.5 * n.gap {
                for f in [0.125, 1.0, 8.0] {
                    out.push(n.r0 - f * delta);
                    out.push(n.r0 + f * delta);
                }
            }
        }
    }
    out
}

/// Integrand pieces that do not depend on `s`.
struct LinkTerms {
    p_los: f64,
    /// `v^{-a_L} G(v)`
    los_gain: f64,
    /// `v^{-a_N} G(v)`
    nlos_gain: f64,
}

impl LinkTerms {
    fn at(cfg: &AnalyticConfig, v: f64) -> Self {
        let v = v.clamp(cfg.geom.min_slant(), cfg.geom.max_slant());
        let g = cfg.beam.gain_in_range(v, &cfg.geom);
        Self {
            p_los: cfg.channel.los_probability_in_range(v, &cfg.geom),
            los_gain: v.powf(-cfg.channel.alpha_los) * g,
            nlos_gain: v.powf(-cfg.channel.alpha_nlos) * g,
        }
    }
}

/// `x^j (1+x)^{-n}` evaluated in log space.
fn power_ratio(x: f64, j: u32, n: f64) -> f64 {
    if x == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    if x.is_infinite() {
        return if (j as f64) < n { 0.0 } else { 1.0 };
    }
    (j as f64 * x.ln() - n * x.ln_1p()).exp()
}

/// Scaled derivatives `E_0..=E_k` of the Laplace exponent at `s`.
pub(crate) fn eta_scaled(cfg: &AnalyticConfig, s: f64, k_max: u32) -> Result<Vec<f64>> {
    let dim = k_max as usize + 1;
    if s == 0.0 {
        return Ok(vec![0.0; dim]);
    }
    let m = cfg.nakagami_m();
    let mf = m as f64;
    let weight = cfg.geom.radial_weight(cfg.density);
    if s.is_infinite() {
        // every interferer is infinitely strong relative to the threshold
        let mut out = vec![0.0; dim];
        out[0] = cfg.visible_count();
        return Ok(out);
    }
    let rising: Vec<f64> = (0..=k_max).map(|j| rising_factorial(mf, j)).collect();
    let fact: Vec<f64> = (0..=k_max).map(factorial).collect();
    let integrand = |v: f64, out: &mut [f64]| {
        let t = LinkTerms::at(cfg, v);
        let x = s * t.los_gain / mf;
        let y = s * t.nlos_gain;
        let los0 = -(-mf * x.ln_1p()).exp_m1();
        let nlos0 = y / (1.0 + y);
        out[0] = v * (t.p_los * los0 + (1.0 - t.p_los) * nlos0);
        for j in 1..=k_max {
            let los = rising[j as usize] * power_ratio(x, j, mf + j as f64);
            let nlos = fact[j as usize] * power_ratio(y, j, j as f64 + 1.0);
            out[j as usize] = v * (t.p_los * los + (1.0 - t.p_los) * nlos);
        }
    };
    let mut breakpoints = cfg.breakpoints();
    breakpoints.extend(spike_breakpoints(cfg, &cfg.null_profile(), s));
    let res = integrate(
        integrand,
        cfg.geom.min_slant(),
        cfg.geom.max_slant(),
        dim,
        &breakpoints,
        cfg.radial_tolerance(weight),
    )
    .map_err(|e| with_op(e, "laplace_eta"))?;
    Ok(res.value.into_iter().map(|x| x * weight).collect())
}

fn with_op(e: Error, op: &'static str) -> Error {
    match e {
        Error::Quadrature { estimate, error, lower, upper, intervals, .. } => {
            Error::Quadrature { op, estimate, error, lower, upper, intervals }
        }
        other => other,
    }
}

/// `T_k = s^k (-1)^k L^{(k)}(s)` for `k = 0..=k_max` from the scaled exponent
/// derivatives.
fn scaled_laplace_derivatives(e: &[f64]) -> Vec<f64> {
    let n = e.len();
    let mut t = vec![0.0; n];
    t[0] = (-e[0]).exp();
    for k in 1..n {
        let mut acc = 0.0;
        for j in 0..k {
            acc += binomial(k as u32 - 1, j as u32) * e[k - j] * t[j];
        }
        t[k] = acc;
    }
    t
}

/// Laplace exponent `eta(s)`, so that `L(s) = exp(-eta(s))`.
pub fn laplace_eta(s: f64, cfg: &AnalyticConfig) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::domain("laplace_eta", format!("s must be non-negative, got {s}")));
    }
    Ok(eta_scaled(cfg, s, 0)?[0])
}

/// Interference Laplace transform `L(s)`.
pub fn laplace(s: f64, cfg: &AnalyticConfig) -> Result<f64> {
    Ok((-laplace_eta(s, cfg)?).exp())
}

/// Raw derivatives `L^{(0)}(s), ..., L^{(k_max)}(s)` for `k_max <= m - 1`.
pub fn laplace_derivatives(s: f64, k_max: u32, cfg: &AnalyticConfig) -> Result<Vec<f64>> {
    const OP: &str = "laplace_derivatives";
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::domain(OP, format!("s must be positive and finite, got {s}")));
    }
    if k_max + 1 > cfg.nakagami_m() {
        return Err(Error::domain(
            OP,
            format!("order {k_max} exceeds m - 1 = {}", cfg.nakagami_m() - 1),
        ));
    }
    let e = eta_scaled(cfg, s, k_max)?;
    let t = scaled_laplace_derivatives(&e);
    Ok(t.iter()
        .enumerate()
        .map(|(k, &tk)| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * tk / s.powi(k as i32)
        })
        .collect())
}

/// Table nodes per decade of `s`.
const TABLE_NODES_PER_DECADE: f64 = 16.0;
/// Decades covered by a table above the smallest `s` a curve can request.
const TABLE_DECADES: f64 = 30.0;

/// Exponent and its scaled derivatives tabulated on a uniform grid in
/// `t = ln s`, interpolated by quintic Hermite polynomials.
///
/// Every node is a full-accuracy quadrature. The `t`-derivatives are exact
/// rather than fitted: `dE_0/dt = E_1` and `dE_j/dt = j E_j - E_{j+1}` for
/// `j >= 1`, so storing `E_0..=E_{m+1}` gives values, slopes and curvatures
/// for `E_0..E_{m-1}`. The table depends on the configuration only, so one
/// table serves every threshold of a curve.
pub(crate) struct EtaTable {
    ln_lo: f64,
    step: f64,
    /// Number of interpolated components (`E_0..order`).
    order: usize,
    nodes: Vec<Vec<f64>>,
}

impl EtaTable {
    pub(crate) fn build(cfg: &AnalyticConfig, s_lo: f64, s_hi: f64) -> Result<Self> {
        let order = cfg.nakagami_m() as usize;
        let ln_lo = s_lo.ln();
        let ln_hi = s_hi.ln();
        let step = std::f64::consts::LN_10 / TABLE_NODES_PER_DECADE;
        let n = ((ln_hi - ln_lo) / step).ceil().max(1.0) as usize + 1;
        let nodes = parallel::map_indexed(n, |i| {
            eta_scaled(cfg, (ln_lo + step * i as f64).exp(), order as u32 + 1)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self { ln_lo, step, order, nodes })
    }

    /// Range of `s` the table spans for thresholds in `[gamma_lo, gamma_hi]`.
    pub(crate) fn span(cfg: &AnalyticConfig, gamma_lo: f64) -> (f64, f64) {
        let alpha = cfg.channel.alpha_los.min(cfg.channel.alpha_nlos);
        let lo = gamma_lo * cfg.geom.min_slant().powf(alpha) / cfg.beam.peak_gain();
        (lo, lo * 10f64.powf(TABLE_DECADES))
    }

    /// `E_0..=E_k` at `s`, or `None` outside the table.
    pub(crate) fn lookup(&self, s: f64, k_max: u32) -> Option<Vec<f64>> {
        let k = k_max as usize;
        if k >= self.order || !(s > 0.0 && s.is_finite()) {
            return None;
        }
        let x = (s.ln() - self.ln_lo) / self.step;
        let last = self.nodes.len() - 1;
        if !(x >= 0.0 && x <= last as f64) {
            return None;
        }
        let i = (x.floor() as usize).min(last.saturating_sub(1));
        if last == 0 {
            return Some(self.nodes[0][..=k].to_vec());
        }
        let u = x - i as f64;
        let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
        let h = self.step;
        let u2 = u * u;
        let u3 = u2 * u;
        let u4 = u3 * u;
        let u5 = u4 * u;
        let h0 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
        let h1 = 1.0 - h0;
        let d0 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
        let d1 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
        let c0 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
        let c1 = 0.5 * (u3 - 2.0 * u4 + u5);
        Some(
            (0..=k)
                .map(|j| {
                    h0 * a[j]
                        + h1 * b[j]
                        + h * (d0 * slope(a, j) + d1 * slope(b, j))
                        + h * h * (c0 * curvature(a, j) + c1 * curvature(b, j))
                })
                .collect(),
        )
    }
}

fn slope(e: &[f64], j: usize) -> f64 {
    if j == 0 {
        e[1]
    } else {
        j as f64 * e[j] - e[j + 1]
    }
}

fn curvature(e: &[f64], j: usize) -> f64 {
    if j == 0 {
        slope(e, 1)
    } else {
        j as f64 * slope(e, j) - slope(e, j + 1)
    }
}

/// Exponent lookups for one curve point: the shared table where it applies,
/// otherwise direct quadrature memoised on the exact bits of `s`. One
/// instance belongs to one curve point, so results do not depend on
/// scheduling.
pub(crate) struct LaplaceCache<'a> {
    cfg: &'a AnalyticConfig,
    table: Option<&'a EtaTable>,
    map: RefCell<HashMap<(u64, u32), Vec<f64>>>,
}

impl<'a> LaplaceCache<'a> {
    pub(crate) fn new(cfg: &'a AnalyticConfig, table: Option<&'a EtaTable>) -> Self {
        Self { cfg, table, map: RefCell::new(HashMap::new()) }
    }

    pub(crate) fn eta_scaled(&self, s: f64, k_max: u32) -> Result<Vec<f64>> {
        if let Some(v) = self.table.and_then(|t| t.lookup(s, k_max)) {
            return Ok(v);
        }
        let key = (s.to_bits(), k_max);
        if let Some(v) = self.map.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = eta_scaled(self.cfg, s, k_max)?;
        self.map.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    pub(crate) fn laplace(&self, s: f64) -> Result<f64> {
        Ok((-self.eta_scaled(s, 0)?[0]).exp())
    }
}

/// Integrates `weight * r * f(r)` over the serving range, propagating the
/// first error raised inside `f`.
pub(crate) fn integrate_serving<F>(cfg: &AnalyticConfig, op: &'static str, f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let weight = cfg.geom.radial_weight(cfg.density);
    let res = integrate(
        |r, out: &mut [f64]| {
            if failure.borrow().is_some() {
                out[0] = 0.0;
                return;
            }
            match f(r) {
                Ok(v) => out[0] = r * v,
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    out[0] = 0.0;
                }
            }
        },
        cfg.geom.min_slant(),
        cfg.geom.max_slant(),
        1,
        &cfg.breakpoints(),
        cfg.radial_tolerance(weight),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let res = res.map_err(|e| with_op(e, op))?;
    Ok(weight * res.value[0])
}

/// Threshold scale `r^a / G(r)` at the serving range, `+inf` at a pattern null.
pub(crate) fn threshold_scale(r: f64, alpha: f64, gain: f64) -> f64 {
    if gain > 0.0 {
        r.powf(alpha) / gain
    } else {
        f64::INFINITY
    }
}

fn check_threshold(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("coverage_exact", format!("threshold must be positive, got {gamma}")))
    }
}

fn coverage_with(gamma: f64, cfg: &AnalyticConfig, table: Option<&EtaTable>) -> Result<f64> {
    check_threshold(gamma)?;
    let cache = LaplaceCache::new(cfg, table);
    let m = cfg.nakagami_m();
    let mf = m as f64;
    let fact: Vec<f64> = (0..m).map(factorial).collect();
    integrate_serving(cfg, "coverage_exact", |r| {
        let p = cfg.channel.los_probability_in_range(r, &cfg.geom);
        let g = cfg.beam.gain_in_range(r, &cfg.geom);
        let mut total = 0.0;
        if p > 0.0 {
            let s = mf * gamma * threshold_scale(r, cfg.channel.alpha_los, g);
            let e = cache.eta_scaled(s, m - 1)?;
            let t = scaled_laplace_derivatives(&e);
            let tail: f64 = t.iter().zip(&fact).map(|(tk, f)| tk / f).sum();
            total += p * tail;
        }
        if p < 1.0 {
            let s = gamma * threshold_scale(r, cfg.channel.alpha_nlos, g);
            total += (1.0 - p) * cache.laplace(s)?;
        }
        Ok(total)
    })
}

/// Exact coverage probability at a single threshold `gamma` (linear).
pub fn coverage_exact_at(gamma: f64, cfg: &AnalyticConfig) -> Result<f64> {
    check_threshold(gamma)?;
    let (lo, hi) = EtaTable::span(cfg, gamma);
    let table = EtaTable::build(cfg, lo, hi)?;
    coverage_with(gamma, cfg, Some(&table))
}

/// Nested quadrature without the interpolation table; every exponent value
/// is its own quadrature. Much slower, kept as a reference.
pub fn coverage_exact_direct_at(gamma: f64, cfg: &AnalyticConfig) -> Result<f64> {
    coverage_with(gamma, cfg, None)
}

/// Exact coverage over a threshold grid. One exponent table is shared by all
/// thresholds and the points are evaluated in parallel.
///
/// Values are exact above 0 dB and an upper bound at or below it.
pub fn coverage_exact(grid: &SirGrid, cfg: &AnalyticConfig) -> Result<CoverageCurve> {
    let (lo, hi) = EtaTable::span(cfg, grid.linear()[0]);
    let table = EtaTable::build(cfg, lo, hi)?;
    let values = parallel::map_slice(grid.linear(), |&g| coverage_with(g, cfg, Some(&table)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageCurve::new(grid.clone(), values, MethodTag::Exact))
}
