//! Experiment files: TOML with one experiment per file.
//!
//! Parsing happens in two steps. `serde` turns the text into [`RawConfig`]
//! (unknown keys are rejected there), then [`Experiment::from_raw`] checks
//! the cross-field rules and builds every model once so that a config that
//! validates can only fail later for numerical reasons.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use leocov::bounds::{kappa_upper, BoundParams, StepModelConfig};
use leocov::montecarlo::{Snapshot, WalkerStar};
use leocov::{
    AnalyticConfig, Association, BeamGainModel, ChannelModel, LosModel, MonteCarloConfig, ShellGeometry,
    EARTH_RADIUS_KM,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }

    fn is_list(&self) -> bool {
        matches!(self, OneOrMany::Many(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Sir,
    Density,
    Altitude,
    OptimalDensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    BoundLower,
    BoundUpper,
    BoundKappa,
    ClosedForm,
    ClosedFormLower,
    HomogeneousLb,
    MonteCarlo,
    OptimalDensity,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::BoundLower => "bound_lower",
            Method::BoundUpper => "bound_upper",
            Method::BoundKappa => "bound_kappa",
            Method::ClosedForm => "closed_form",
            Method::ClosedFormLower => "closed_form_lower",
            Method::HomogeneousLb => "homogeneous_lb",
            Method::MonteCarlo => "monte_carlo",
            Method::OptimalDensity => "optimal_density",
        }
    }

    fn needs_analytic(self) -> bool {
        matches!(self, Method::Exact | Method::BoundLower | Method::BoundUpper | Method::BoundKappa)
    }

    fn needs_step(self) -> bool {
        matches!(self, Method::ClosedForm | Method::ClosedFormLower)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub description: String,
    pub sweep: SweepKind,
    pub methods: Vec<Method>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub sir: Option<SirSection>,
    pub geometry: GeometrySection,
    pub channel: Option<ChannelSection>,
    pub beam: Option<BeamSection>,
    #[serde(default)]
    pub network: NetworkSection,
    pub constellation: Option<ConstellationSection>,
    #[serde(default)]
    pub bound: BoundSection,
    pub density: Option<DensitySection>,
    pub altitude: Option<AltitudeSection>,
    pub homogeneous: Option<HomogeneousSection>,
}

fn default_seed() -> u64 {
    1
}

fn default_trials() -> usize {
    100_000
}

/// Thresholds either listed or as an evenly stepped range, all in dB.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SirSection {
    pub values_db: Option<Vec<f64>>,
    pub from_db: Option<f64>,
    pub to_db: Option<f64>,
    pub step_db: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub altitude_km: Option<f64>,
    #[serde(default = "default_earth_radius")]
    pub earth_radius_km: f64,
}

fn default_earth_radius() -> f64 {
    EARTH_RADIUS_KM
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LosKind {
    Exponential,
    Step,
    Always,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub los: LosKind,
    pub beta: Option<OneOrMany<f64>>,
    pub r_los_km: Option<OneOrMany<f64>>,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub nakagami_m: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamKind {
    Bessel,
    Step,
    Constant,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    pub model: BeamKind,
    pub g_max_db: Option<f64>,
    pub theta_3db_deg: Option<f64>,
    pub g_los_db: Option<f64>,
    pub g_nlos_db: Option<f64>,
    pub g_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationName {
    Strongest,
    Nearest,
}

impl From<AssociationName> for Association {
    fn from(a: AssociationName) -> Self {
        match a {
            AssociationName::Strongest => Association::Strongest,
            AssociationName::Nearest => Association::Nearest,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// Mean number of satellites above the horizon (or above the elevation
    /// mask, for Monte Carlo runs that set one).
    pub visible_count: Option<f64>,
    pub density_per_km2: Option<f64>,
    #[serde(default = "default_association")]
    pub association: OneOrMany<AssociationName>,
    pub min_elevation_deg: Option<f64>,
    #[serde(default)]
    pub noise_power: f64,
}

fn default_association() -> OneOrMany<AssociationName> {
    OneOrMany::One(AssociationName::Strongest)
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            visible_count: None,
            density_per_km2: None,
            association: default_association(),
            min_elevation_deg: None,
            noise_power: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstellationKind {
    Ppp,
    Bpp,
    Walker,
    Snapshot,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSection {
    pub models: Vec<ConstellationKind>,
    /// Visible count for the binomial model; defaults to the rounded mean.
    pub bpp_visible: Option<u32>,
    /// `walker-star:P/S/F[@inclination_deg]`.
    pub walker: Option<String>,
    #[serde(default = "one")]
    pub walker_freq_groups: u32,
    /// Path of a snapshot CSV, relative to the config file.
    pub snapshot: Option<String>,
    pub snapshot_altitude_band_km: Option<[f64; 2]>,
    #[serde(default = "one")]
    pub snapshot_freq_groups: u32,
    #[serde(default)]
    pub snapshot_user_latitude_deg: f64,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaName {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum KappaValue {
    Named(KappaName),
    Value(f64),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    #[serde(default = "default_kappa")]
    pub kappa: KappaValue,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_kappa() -> KappaValue {
    KappaValue::Named(KappaName::Upper)
}

fn default_epsilon() -> f64 {
    BoundParams::DEFAULT_EPSILON
}

impl Default for BoundSection {
    fn default() -> Self {
        Self { kappa: default_kappa(), epsilon: default_epsilon() }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub visible_counts: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AltitudeSection {
    pub altitudes_km: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct HomogeneousSection {
    pub alpha: f64,
}

/// Line number (1-based) of `key` inside `[section]`, or of the section
/// header when the key is absent. The empty section is the top level.
pub fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some(rest) = t.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

/// Mean load of the network: either a visible count or a raw density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Load {
    VisibleCount(f64),
    Density(f64),
}

impl Load {
    pub fn analytic_density(&self, geom: &ShellGeometry) -> f64 {
        match *self {
            Load::VisibleCount(k) => geom.density_for_count(k),
            Load::Density(d) => d,
        }
    }

    pub fn mc_density(&self, cfg: &MonteCarloConfig) -> f64 {
        match *self {
            Load::VisibleCount(k) => cfg.density_for_count(k),
            Load::Density(d) => d,
        }
    }

    pub fn mc_count(&self, cfg: &MonteCarloConfig) -> f64 {
        match *self {
            Load::VisibleCount(k) => k,
            Load::Density(d) => cfg.visible_count(d),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    Sir,
    Density(Vec<f64>),
    Altitude(Vec<f64>),
    OptimalDensity(Vec<f64>),
}

#[derive(Debug, Clone)]
pub enum Constellation {
    Ppp,
    Bpp(Option<u32>),
    Walker(WalkerStar, u32),
    Snapshot(Arc<Snapshot>),
}

impl Constellation {
    pub fn name(&self) -> &'static str {
        match self {
            Constellation::Ppp => "ppp",
            Constellation::Bpp(_) => "bpp",
            Constellation::Walker(..) => "walker",
            Constellation::Snapshot(_) => "snapshot",
        }
    }
}

/// One setting of the list-valued channel parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    pub beta: Option<f64>,
    pub r_los: Option<f64>,
}

/// Everything for one variant at one sweep point.
#[derive(Debug, Clone)]
pub struct Point {
    /// `name=value` pairs identifying the point, without the threshold.
    pub key: Vec<(String, String)>,
    pub geom: ShellGeometry,
    pub load: Load,
    pub channel: Option<ChannelModel>,
    pub beam: Option<BeamGainModel>,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub path: PathBuf,
    pub source: String,
    pub raw: RawConfig,
    pub methods: Vec<Method>,
    pub sweep: Sweep,
    pub gammas_db: Vec<f64>,
    pub seed: u64,
    pub trials: usize,
    pub variants: Vec<Variant>,
    pub associations: Vec<Association>,
    pub constellations: Vec<Constellation>,
    pub kappa: KappaValue,
    pub epsilon: f64,
    pub homogeneous_alpha: Option<f64>,
    /// Which channel parameters were given as lists, in key order.
    beta_listed: bool,
    r_los_listed: bool,
}

struct Ctx<'a> {
    path: &'a Path,
    src: &'a str,
}

impl Ctx<'_> {
    fn err(&self, section: &str, key: &str, msg: impl Into<String>) -> CliError {
        CliError::Config { path: self.path.display().to_string(), line: locate(self.src, section, key), msg: msg.into() }
    }

    /// Attributes a library error to the key of `section` that it mentions,
    /// falling back to the section header.
    /// Attributes a library error to the first key whose phrase appears in
    /// the message, falling back to the section header.
    fn lib(&self, section: &str, keys: &[(&str, &str)], e: leocov::Error) -> CliError {
        let msg = e.to_string();
        let key = keys.iter().find(|(_, phrase)| msg.contains(phrase)).map_or("", |(k, _)| k);
        self.err(section, key, msg)
    }
}

pub fn format_number(x: f64) -> String {
    let r = (x * 1e9).round() / 1e9;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

const CHANNEL_KEYS: &[(&str, &str)] = &[
    ("alpha_los", "LOS path-loss exponent"),
    ("alpha_nlos", "NLOS exponent"),
    ("nakagami_m", "Nakagami"),
    ("beta", "beta"),
    ("r_los_km", "LOS radius"),
];
const BEAM_KEYS: &[(&str, &str)] = &[
    ("g_max_db", "g_max"),
    ("theta_3db_deg", "theta_3db"),
    ("g_nlos_db", "g_nlos"),
    ("g_los_db", "g_los"),
];

impl Experiment {
    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            line: None,
            msg: format!("cannot read config: {e}"),
        })?;
        Self::parse(path, &src)
    }

    pub fn parse(path: &Path, src: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            line: e.span().map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1),
            msg: e.message().to_string(),
        })?;
        Self::from_raw(path, src, raw)
    }

    fn from_raw(path: &Path, src: &str, raw: RawConfig) -> Result<Self> {
        let ctx = Ctx { path, src };
        if raw.methods.is_empty() {
            return Err(ctx.err("", "methods", "at least one method is required"));
        }
        if raw.trials == 0 {
            return Err(ctx.err("", "trials", "trials must be positive"));
        }

        let sweep = match raw.sweep {
            SweepKind::Sir => Sweep::Sir,
            SweepKind::Density => {
                let d = raw.density.as_ref().ok_or_else(|| ctx.err("", "sweep", "density sweep needs a [density] section"))?;
                if d.visible_counts.is_empty() || d.visible_counts.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
                    return Err(ctx.err("density", "visible_counts", "visible counts must be a non-empty list of positive numbers"));
                }
                Sweep::Density(d.visible_counts.clone())
            }
            SweepKind::Altitude | SweepKind::OptimalDensity => {
                let a = raw
                    .altitude
                    .as_ref()
                    .ok_or_else(|| ctx.err("", "sweep", "this sweep needs an [altitude] section"))?;
                if a.altitudes_km.is_empty() {
                    return Err(ctx.err("altitude", "altitudes_km", "altitudes must be a non-empty list"));
                }
                if raw.sweep == SweepKind::Altitude {
                    Sweep::Altitude(a.altitudes_km.clone())
                } else {
                    Sweep::OptimalDensity(a.altitudes_km.clone())
                }
            }
        };
        if !matches!(sweep, Sweep::Altitude(_) | Sweep::OptimalDensity(_)) && raw.geometry.altitude_km.is_none() {
            return Err(ctx.err("geometry", "altitude_km", "altitude_km is required"));
        }

        let gammas_db = Self::thresholds(&ctx, raw.sir.as_ref())?;

        let optimal = matches!(sweep, Sweep::OptimalDensity(_));
        if optimal != raw.methods.contains(&Method::OptimalDensity) || (optimal && raw.methods.len() > 1) {
            return Err(ctx.err("", "methods", "optimal_density is the only method of, and only allowed in, an optimal_density sweep"));
        }

        let homogeneous_alpha = raw.homogeneous.as_ref().map(|h| h.alpha);
        if (optimal || raw.methods.contains(&Method::HomogeneousLb)) && homogeneous_alpha.is_none() {
            return Err(ctx.err("", "methods", "homogeneous_lb and optimal_density need [homogeneous] alpha"));
        }

        let net = &raw.network;
        let load = match (net.visible_count, net.density_per_km2) {
            (Some(k), None) => Some(Load::VisibleCount(k)),
            (None, Some(d)) => Some(Load::Density(d)),
            (None, None) => None,
            (Some(_), Some(_)) => {
                return Err(ctx.err("network", "density_per_km2", "give visible_count or density_per_km2, not both"))
            }
        };
        if let Some(Load::VisibleCount(v) | Load::Density(v)) = load {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ctx.err("network", "visible_count", format!("network load must be positive, got {v}")));
            }
        }
        if load.is_none() && !matches!(sweep, Sweep::Density(_) | Sweep::OptimalDensity(_)) {
            return Err(ctx.err("network", "visible_count", "visible_count or density_per_km2 is required"));
        }
        if net.min_elevation_deg.is_some() || net.noise_power != 0.0 {
            if let Some(m) = raw.methods.iter().find(|m| **m != Method::MonteCarlo) {
                let key = if net.min_elevation_deg.is_some() { "min_elevation_deg" } else { "noise_power" };
                return Err(ctx.err(
                    "network",
                    key,
                    format!("{key} is only supported by monte_carlo; method {} does not model it", m.name()),
                ));
            }
        }
        if !(net.noise_power >= 0.0 && net.noise_power.is_finite()) {
            return Err(ctx.err("network", "noise_power", "noise power must be non-negative"));
        }

        let needs_channel = raw.methods.iter().any(|m| m.needs_analytic() || m.needs_step() || *m == Method::MonteCarlo);
        let (variants, beta_listed, r_los_listed) = match &raw.channel {
            Some(ch) => {
                let betas = ch.beta.as_ref().map(|b| b.to_vec().into_iter().map(Some).collect()).unwrap_or(vec![None]);
                let radii = ch.r_los_km.as_ref().map(|r| r.to_vec().into_iter().map(Some).collect()).unwrap_or(vec![None]);
                match ch.los {
                    LosKind::Exponential if ch.beta.is_none() => {
                        return Err(ctx.err("channel", "los", "exponential LOS model needs beta"))
                    }
                    LosKind::Step if ch.r_los_km.is_none() => return Err(ctx.err("channel", "los", "step LOS model needs r_los_km")),
                    _ => {}
                }
                let mut v = Vec::new();
                for &beta in &betas {
                    for &r_los in &radii {
                        v.push(Variant { beta, r_los });
                    }
                }
                let listed = |o: &Option<OneOrMany<f64>>| o.as_ref().is_some_and(|x| x.is_list());
                (v, listed(&ch.beta), listed(&ch.r_los_km))
            }
            None if needs_channel => return Err(ctx.err("", "methods", "these methods need a [channel] section")),
            None => (vec![Variant { beta: None, r_los: None }], false, false),
        };
        if needs_channel && raw.beam.is_none() {
            return Err(ctx.err("", "methods", "these methods need a [beam] section"));
        }

        let associations: Vec<Association> = net.association.to_vec().into_iter().map(Association::from).collect();
        let constellations = Self::constellations(&ctx, raw.constellation.as_ref())?;
        if raw.constellation.is_some() && !raw.methods.contains(&Method::MonteCarlo) {
            return Err(ctx.err("constellation", "models", "constellation models only apply to monte_carlo"));
        }

        let exp = Experiment {
            path: path.to_path_buf(),
            source: src.to_string(),
            methods: raw.methods.clone(),
            sweep,
            gammas_db,
            seed: raw.seed,
            trials: raw.trials,
            variants,
            associations,
            constellations,
            kappa: raw.bound.kappa,
            epsilon: raw.bound.epsilon,
            homogeneous_alpha,
            beta_listed,
            r_los_listed,
            raw,
        };
        exp.check_points(&ctx)?;
        Ok(exp)
    }

    fn thresholds(ctx: &Ctx, sir: Option<&SirSection>) -> Result<Vec<f64>> {
        let sir = sir.ok_or_else(|| ctx.err("", "sweep", "a [sir] section with thresholds is required"))?;
        let values = match (&sir.values_db, sir.from_db, sir.to_db, sir.step_db) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(from), Some(to), Some(step)) => {
                if !(step > 0.0) || !(to >= from) {
                    return Err(ctx.err("sir", "step_db", "need from_db <= to_db and step_db > 0"));
                }
                let n = ((to - from) / step + 1e-9).floor() as usize + 1;
                if n > 10_000 {
                    return Err(ctx.err("sir", "step_db", format!("{n} thresholds is too many")));
                }
                (0..n).map(|i| from + step * i as f64).collect()
            }
            _ => return Err(ctx.err("sir", "values_db", "give values_db, or from_db, to_db and step_db")),
        };
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ctx.err("sir", "values_db", "thresholds must be finite and strictly increasing"));
        }
        Ok(values)
    }

    fn constellations(ctx: &Ctx, section: Option<&ConstellationSection>) -> Result<Vec<Constellation>> {
        let Some(c) = section else { return Ok(vec![Constellation::Ppp]) };
        if c.models.is_empty() {
            return Err(ctx.err("constellation", "models", "at least one model is required"));
        }
        let mut out = Vec::new();
        for kind in &c.models {
            out.push(match kind {
                ConstellationKind::Ppp => Constellation::Ppp,
                ConstellationKind::Bpp => {
                    if c.bpp_visible == Some(0) {
                        return Err(ctx.err("constellation", "bpp_visible", "bpp_visible must be positive"));
                    }
                    Constellation::Bpp(c.bpp_visible)
                }
                ConstellationKind::Walker => {
                    let text = c.walker.as_ref().ok_or_else(|| ctx.err("constellation", "models", "walker model needs `walker`"))?;
                    let w: WalkerStar = text.parse().map_err(|e: leocov::Error| ctx.err("constellation", "walker", e.to_string()))?;
                    if c.walker_freq_groups == 0 {
                        return Err(ctx.err("constellation", "walker_freq_groups", "frequency groups must be positive"));
                    }
                    Constellation::Walker(w, c.walker_freq_groups)
                }
                ConstellationKind::Snapshot => {
                    let file = c.snapshot.as_ref().ok_or_else(|| ctx.err("constellation", "models", "snapshot model needs `snapshot`"))?;
                    let band = c.snapshot_altitude_band_km.unwrap_or([0.0, f64::MAX]);
                    let full = ctx.path.parent().unwrap_or(Path::new(".")).join(file);
                    let snap = Snapshot::load(
                        &full,
                        EARTH_RADIUS_KM,
                        (band[0], band[1]),
                        c.snapshot_freq_groups,
                        c.snapshot_user_latitude_deg.to_radians(),
                    )
                    .map_err(|e| ctx.err("constellation", "snapshot", e.to_string()))?;
                    if snap.is_empty() {
                        return Err(ctx.err("constellation", "snapshot_altitude_band_km", "no satellite inside the altitude band"));
                    }
                    Constellation::Snapshot(Arc::new(snap))
                }
            });
        }
        Ok(out)
    }

    fn earth_radius(&self) -> f64 {
        self.raw.geometry.earth_radius_km
    }

    /// The sweep points in output order: variants outermost, then the
    /// swept parameter.
    pub fn points(&self) -> Vec<(Variant, Option<f64>)> {
        let swept: Vec<Option<f64>> = match &self.sweep {
            Sweep::Sir => vec![None],
            Sweep::Density(v) | Sweep::Altitude(v) | Sweep::OptimalDensity(v) => v.iter().map(|&x| Some(x)).collect(),
        };
        self.variants.iter().flat_map(|&v| swept.iter().map(move |&s| (v, s))).collect()
    }

    fn sweep_name(&self) -> &'static str {
        match self.sweep {
            Sweep::Sir => "",
            Sweep::Density(_) => "visible_count",
            Sweep::Altitude(_) | Sweep::OptimalDensity(_) => "altitude_km",
        }
    }

    /// Builds the models of one point. Errors carry the config line.
    fn build_point(&self, ctx: &Ctx, variant: Variant, swept: Option<f64>) -> Result<Point> {
        let mut key = Vec::new();
        if self.beta_listed {
            key.push(("beta".to_string(), format_number(variant.beta.unwrap())));
        }
        if self.r_los_listed {
            key.push(("r_los_km".to_string(), format_number(variant.r_los.unwrap())));
        }
        if let Some(x) = swept {
            key.push((self.sweep_name().to_string(), format_number(x)));
        }
        let (altitude, load) = match (&self.sweep, swept) {
            (Sweep::Density(_), Some(k)) => (self.raw.geometry.altitude_km.unwrap(), Load::VisibleCount(k)),
            (Sweep::Altitude(_) | Sweep::OptimalDensity(_), Some(h)) => (h, self.base_load().unwrap_or(Load::VisibleCount(1.0))),
            _ => (self.raw.geometry.altitude_km.unwrap(), self.base_load().unwrap()),
        };
        let geom = ShellGeometry::new(self.earth_radius(), altitude).map_err(|e| {
            if swept.is_some() && self.sweep_name() == "altitude_km" {
                ctx.err("altitude", "altitudes_km", e.to_string())
            } else {
                ctx.lib("geometry", &[("altitude_km", "altitude"), ("earth_radius_km", "earth radius")], e)
            }
        })?;
        let mut point = Point { key, geom, load, channel: None, beam: None };
        if let (Some(ch), Some(beam)) = (&self.raw.channel, &self.raw.beam) {
            let los = match ch.los {
                LosKind::Exponential => LosModel::ExponentialBlockage { beta: variant.beta.unwrap() },
                LosKind::Step => LosModel::Step { r_los: variant.r_los.unwrap() },
                LosKind::Always => LosModel::AlwaysLos,
            };
            let channel = ChannelModel::new(los, ch.alpha_los, ch.alpha_nlos, ch.nakagami_m)
                .and_then(|c| c.validate(&geom).map(|_| c))
                .map_err(|e| ctx.lib("channel", CHANNEL_KEYS, e))?;
            let need = |v: Option<f64>, k: &str| v.ok_or_else(|| ctx.err("beam", "model", format!("this beam model needs {k}")));
            let beam = match beam.model {
                BeamKind::Bessel => leocov::BeamGainModel::bessel(
                    db(need(beam.g_max_db, "g_max_db")?),
                    need(beam.theta_3db_deg, "theta_3db_deg")?.to_radians(),
                ),
                BeamKind::Step => {
                    let r_los = variant.r_los.ok_or_else(|| ctx.err("beam", "model", "step beam needs channel r_los_km"))?;
                    Ok(BeamGainModel::Step {
                        g_los: db(need(beam.g_los_db, "g_los_db")?),
                        g_nlos: db(need(beam.g_nlos_db, "g_nlos_db")?),
                        r_los,
                    })
                }
                BeamKind::Constant => Ok(BeamGainModel::Constant { g: db(need(beam.g_db, "g_db")?) }),
            }
            .and_then(|b| b.validate(&geom).map(|_| b))
            .map_err(|e| ctx.lib("beam", BEAM_KEYS, e))?;
            point.channel = Some(channel);
            point.beam = Some(beam);
        }
        Ok(point)
    }

    fn base_load(&self) -> Option<Load> {
        match (self.raw.network.visible_count, self.raw.network.density_per_km2) {
            (Some(k), _) => Some(Load::VisibleCount(k)),
            (_, Some(d)) => Some(Load::Density(d)),
            _ => None,
        }
    }

    /// Builds every point and the method-specific models once.
    fn check_points(&self, ctx: &Ctx) -> Result<()> {
        for (variant, swept) in self.points() {
            let p = self.build_point(ctx, variant, swept)?;
            for &m in &self.methods {
                if m.needs_analytic() {
                    let cfg = self.analytic(&p).map_err(|e| ctx.lib("network", &[("visible_count", "count"), ("density_per_km2", "density")], e))?;
                    if m == Method::BoundKappa || m == Method::BoundUpper || m == Method::BoundLower {
                        self.kappa_for(m, cfg.channel.nakagami_m).map_err(|e| ctx.lib("bound", &[("kappa", "kappa")], e))?;
                    }
                }
                if m.needs_step() {
                    let step = self.step(ctx, &p)?;
                    if m == Method::ClosedForm {
                        self.bound_params(&step).map_err(|e| ctx.lib("bound", &[("kappa", "kappa"), ("epsilon", "epsilon")], e))?;
                    }
                    step.analytic().map_err(|e| ctx.lib("channel", CHANNEL_KEYS, e))?;
                    if step.alpha_nlos != 2.0 * step.alpha_los {
                        return Err(ctx.err("channel", "alpha_nlos", "closed forms need alpha_nlos = 2 alpha_los"));
                    }
                }
                if m == Method::HomogeneousLb || m == Method::OptimalDensity {
                    let alpha = self.homogeneous_alpha.unwrap();
                    if !(alpha > 2.0 && alpha.is_finite()) {
                        return Err(ctx.err("homogeneous", "alpha", format!("alpha must exceed 2, got {alpha}")));
                    }
                }
                if m == Method::MonteCarlo {
                    self.mc_config(&p, self.associations[0]).map_err(|e| ctx.lib("network", &[("min_elevation_deg", "elevation"), ("noise_power", "noise")], e))?;
                }
            }
        }
        Ok(())
    }

    pub fn point(&self, variant: Variant, swept: Option<f64>) -> Point {
        let ctx = Ctx { path: &self.path, src: &self.source };
        self.build_point(&ctx, variant, swept).expect("points were validated")
    }

    pub fn analytic(&self, p: &Point) -> leocov::Result<AnalyticConfig> {
        AnalyticConfig::new(p.geom, p.channel.unwrap(), p.beam.unwrap(), p.load.analytic_density(&p.geom))
    }

    pub fn mc_config(&self, p: &Point, association: Association) -> leocov::Result<MonteCarloConfig> {
        let mut cfg = MonteCarloConfig::new(p.geom, p.channel.unwrap(), p.beam.unwrap())?;
        cfg.association = association;
        cfg.min_elevation = self.raw.network.min_elevation_deg.map(f64::to_radians);
        cfg.noise_power = self.raw.network.noise_power;
        cfg.validate()?;
        Ok(cfg)
    }

    fn step(&self, ctx: &Ctx, p: &Point) -> Result<StepModelConfig> {
        let (Some(ch), Some(BeamGainModel::Step { g_los, g_nlos, r_los })) = (p.channel, p.beam) else {
            return Err(ctx.err("beam", "model", "closed forms need the step beam model"));
        };
        if !matches!(ch.los, LosModel::Step { .. }) {
            return Err(ctx.err("channel", "los", "closed forms need the step LOS model"));
        }
        StepModelConfig::new(
            p.geom,
            r_los,
            g_los,
            g_nlos,
            ch.alpha_los,
            ch.alpha_nlos,
            ch.nakagami_m,
            p.load.analytic_density(&p.geom),
        )
        .map_err(|e| ctx.lib("channel", CHANNEL_KEYS, e))
    }

    pub fn step_config(&self, p: &Point) -> StepModelConfig {
        let ctx = Ctx { path: &self.path, src: &self.source };
        self.step(&ctx, p).expect("step models were validated")
    }

    pub fn bound_params(&self, cfg: &StepModelConfig) -> leocov::Result<BoundParams> {
        BoundParams::new(self.kappa_for(Method::ClosedForm, cfg.m)?, self.epsilon, cfg)
    }

    pub fn kappa_for(&self, method: Method, m: u32) -> leocov::Result<f64> {
        let k = match (method, self.kappa) {
            (Method::BoundLower, _) => 1.0,
            (Method::BoundUpper, _) => kappa_upper(m),
            (_, KappaValue::Named(KappaName::Lower)) => 1.0,
            (_, KappaValue::Named(KappaName::Upper)) => kappa_upper(m),
            (_, KappaValue::Value(k)) => k,
        };
        leocov::bounds::check_kappa(k, m)?;
        Ok(k)
    }
}
