//! Executes a validated experiment and writes the result table.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use leocov::bounds::{coverage_closed_form, coverage_lower_closed};
use leocov::montecarlo::simulate;
use leocov::{
    coverage_bound, coverage_exact, coverage_lower_homogeneous, optimal_density, ConstellationSpec, CoverageCurve,
    SirGrid,
};
use serde::Serialize;

use crate::config::{format_number, Constellation, Experiment, Method, Point};
use crate::error::{CliError, Result};

/// One line of the result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub sweep: String,
    pub method: &'static str,
    /// Coverage clamped to [0, 1]; the optimal visible count for
    /// `optimal_density` rows.
    pub value: f64,
    pub ci: Option<f64>,
    /// Unclamped coverage; the optimal density in satellites per km^2 for
    /// `optimal_density` rows.
    pub raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McStat {
    pub series: String,
    pub constellation: String,
    pub association: String,
    pub mean_visible: f64,
    pub empty_fraction: f64,
}

#[derive(Debug, Default)]
pub struct Output {
    pub rows: Vec<Row>,
    pub mc_stats: Vec<McStat>,
}

fn join_key(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

impl Output {
    fn push_curve(&mut self, key: &[(String, String)], method: &'static str, gammas_db: &[f64], curve: &CoverageCurve) {
        let clamped = curve.clamped();
        for (i, g) in gammas_db.iter().enumerate() {
            let mut pairs = key.to_vec();
            pairs.push(("gamma_db".into(), format_number(*g)));
            self.rows.push(Row {
                sweep: join_key(&pairs),
                method,
                value: clamped[i],
                ci: curve.ci_halfwidth.as_ref().map(|c| c[i]),
                raw: curve.values[i],
            });
        }
    }
}

pub fn execute(exp: &Experiment) -> Result<Output> {
    let grid = SirGrid::from_db(&exp.gammas_db).expect("thresholds were validated");
    let mut out = Output::default();
    for (variant, swept) in exp.points() {
        let p = exp.point(variant, swept);
        for &method in &exp.methods {
            let start = Instant::now();
            let label = if p.key.is_empty() { "base".to_string() } else { join_key(&p.key) };
            let fail = |source| CliError::Numerical { method: method.name().into(), series: label.clone(), source };
            run_method(exp, method, &p, &grid, &mut out).map_err(fail)?;
            eprintln!("{} [{label}] done in {:.1} s", method.name(), start.elapsed().as_secs_f64());
        }
    }
    Ok(out)
}

fn run_method(exp: &Experiment, method: Method, p: &Point, grid: &SirGrid, out: &mut Output) -> leocov::Result<()> {
    let name = method.name();
    match method {
        Method::Exact => {
            let curve = coverage_exact(grid, &exp.analytic(p)?)?;
            out.push_curve(&p.key, name, &exp.gammas_db, &curve);
        }
        Method::BoundLower | Method::BoundUpper | Method::BoundKappa => {
            let cfg = exp.analytic(p)?;
            let kappa = exp.kappa_for(method, cfg.channel.nakagami_m)?;
            let curve = coverage_bound(grid, &cfg, kappa)?;
            out.push_curve(&p.key, name, &exp.gammas_db, &curve);
        }
        Method::ClosedForm => {
            let step = exp.step_config(p);
            let curve = coverage_closed_form(grid, &step, &exp.bound_params(&step)?)?;
            out.push_curve(&p.key, name, &exp.gammas_db, &curve);
        }
        Method::ClosedFormLower => {
            let curve = coverage_lower_closed(grid, &exp.step_config(p))?;
            out.push_curve(&p.key, name, &exp.gammas_db, &curve);
        }
        Method::HomogeneousLb => {
            let alpha = exp.homogeneous_alpha.unwrap();
            let curve = coverage_lower_homogeneous(grid, p.load.analytic_density(&p.geom), &p.geom, alpha)?;
            out.push_curve(&p.key, name, &exp.gammas_db, &curve);
        }
        Method::OptimalDensity => {
            let alpha = exp.homogeneous_alpha.unwrap();
            for (&g_db, &g) in exp.gammas_db.iter().zip(grid.linear()) {
                let (lambda, k) = optimal_density(g, alpha, &p.geom)?;
                let mut pairs = p.key.clone();
                pairs.push(("gamma_db".into(), format_number(g_db)));
                out.rows.push(Row { sweep: join_key(&pairs), method: name, value: k, ci: None, raw: lambda });
            }
        }
        Method::MonteCarlo => {
            for c in &exp.constellations {
                for &assoc in &exp.associations {
                    let cfg = exp.mc_config(p, assoc)?;
                    let spec = match c {
                        Constellation::Ppp => ConstellationSpec::Sppp { density: p.load.mc_density(&cfg) },
                        Constellation::Bpp(n) => ConstellationSpec::Bpp {
                            n_visible: n.unwrap_or_else(|| (p.load.mc_count(&cfg).round() as u32).max(1)),
                        },
                        Constellation::Walker(pattern, groups) => {
                            ConstellationSpec::Walker { pattern: *pattern, freq_groups: *groups }
                        }
                        Constellation::Snapshot(s) => ConstellationSpec::Snapshot(s.clone()),
                    };
                    let est = simulate(&spec, grid, exp.trials, &cfg, exp.seed)?;
                    let mut key = p.key.clone();
                    if exp.constellations.len() > 1 {
                        key.push(("constellation".into(), c.name().into()));
                    }
                    if exp.associations.len() > 1 {
                        key.push(("association".into(), assoc.as_str().into()));
                    }
                    out.push_curve(&key, name, &exp.gammas_db, &est.curve);
                    out.mc_stats.push(McStat {
                        series: if key.is_empty() { "base".into() } else { join_key(&key) },
                        constellation: c.name().into(),
                        association: assoc.as_str().into(),
                        mean_visible: est.mean_visible,
                        empty_fraction: est.empty_fraction,
                    });
                }
            }
        }
    }
    Ok(())
}

pub fn write_csv(path: &Path, rows: &[Row]) -> Result<()> {
    let io = |e: std::io::Error| CliError::Io { path: path.to_path_buf(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(["sweep", "method", "value", "ci", "raw"]).map_err(|e| io(e.into()))?;
    for r in rows {
        let ci = r.ci.map(|c| c.to_string()).unwrap_or_default();
        w.write_record([r.sweep.as_str(), r.method, &r.value.to_string(), &ci, &r.raw.to_string()])
            .map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

/// `results.csv` becomes `results.meta.toml`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.toml")
}

#[derive(Serialize)]
struct Meta<'a> {
    leocov_version: &'a str,
    config_path: String,
    seed: u64,
    trials: usize,
    rows: usize,
    /// The configuration file as it was read.
    config: &'a str,
    monte_carlo: &'a [McStat],
}

fn relative_to_cwd(path: &Path) -> &Path {
    std::env::current_dir().ok().and_then(|cwd| path.strip_prefix(cwd).ok()).unwrap_or(path)
}

pub fn write_sidecar(path: &Path, exp: &Experiment, out: &Output) -> Result<()> {
    let meta = Meta {
        leocov_version: env!("CARGO_PKG_VERSION"),
        config_path: relative_to_cwd(&exp.path).display().to_string(),
        seed: exp.seed,
        trials: exp.trials,
        rows: out.rows.len(),
        config: &exp.source,
        monte_carlo: &out.mc_stats,
    };
    let text = toml::to_string(&meta).expect("metadata serialises");
    let io = |e| CliError::Io { path: path.to_path_buf(), source: e };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)
}
