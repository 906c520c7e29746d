//! Distance-dependent propagation: LOS probability, LOS/NLOS fading laws and
//! satellite beam gain, each as a function of the slant range `r`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::geometry::ShellGeometry;
use crate::special::{bessel_pattern, pattern_nulls};

/// `u = U_3DB * sin(theta) / sin(theta_3dB)` puts the half-power point of
/// the Bessel pattern at `theta_3dB`.
pub const U_3DB: f64 = 2.07123;

/// Probability that a link of slant range `r` is line-of-sight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LosModel {
    /// `exp(-beta cot(elevation))`; larger `beta` means a denser environment.
    ExponentialBlockage { beta: f64 },
    /// LOS exactly when `r < r_los`.
    Step { r_los: f64 },
    AlwaysLos,
}

/// LOS model together with the path-loss exponents and the Nakagami
/// parameter of the LOS fading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub los: LosModel,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub nakagami_m: u32,
}

impl ChannelModel {
    pub fn new(los: LosModel, alpha_los: f64, alpha_nlos: f64, nakagami_m: u32) -> Result<Self> {
        const OP: &str = "ChannelModel::new";
        if !(alpha_los > 0.0 && alpha_los.is_finite()) {
            return Err(Error::domain(OP, format!("LOS path-loss exponent must be positive, got {alpha_los}")));
        }
        if !(alpha_nlos.is_finite() && alpha_nlos >= alpha_los) {
            return Err(Error::domain(
                OP,
                format!("NLOS exponent {alpha_nlos} must be at least the LOS exponent {alpha_los}"),
            ));
        }
        if nakagami_m < 1 {
            return Err(Error::domain(OP, "Nakagami m must be a positive integer"));
        }
        match los {
            LosModel::ExponentialBlockage { beta } if !(beta >= 0.0 && beta.is_finite()) => {
                return Err(Error::domain(OP, format!("blockage beta must be non-negative, got {beta}")));
            }
            LosModel::Step { r_los } if !(r_los > 0.0 && r_los.is_finite()) => {
                return Err(Error::domain(OP, format!("LOS radius must be positive, got {r_los}")));
            }
            _ => {}
        }
        Ok(Self { los, alpha_los, alpha_nlos, nakagami_m })
    }

    /// Checks the parts of the model that depend on the shell.
    pub fn validate(&self, geom: &ShellGeometry) -> Result<()> {
        if let LosModel::Step { r_los } = self.los {
            check_r_los("ChannelModel", r_los, geom)?;
        }
        Ok(())
    }

    /// Slant ranges where the LOS probability jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.los {
            LosModel::Step { r_los } => vec![r_los],
            _ => Vec::new(),
        }
    }

    pub fn los_probability(&self, r: f64, geom: &ShellGeometry) -> Result<f64> {
        let r = geom.check_slant("los_probability", r)?;
        if let LosModel::ExponentialBlockage { .. } = self.los {
            let arg = elevation_argument(r, geom);
            if !(-1e-12..=1.0 + 1e-12).contains(&arg) {
                return Err(Error::domain(
                    "los_probability",
                    format!("arcsin argument {arg} outside [0, 1] at r = {r}"),
                ));
            }
        }
        Ok(self.los_probability_in_range(r, geom))
    }

    /// LOS probability for `r` already known to lie in `[R_min, R_max]`.
    pub(crate) fn los_probability_in_range(&self, r: f64, geom: &ShellGeometry) -> f64 {
        match self.los {
            LosModel::AlwaysLos => 1.0,
            LosModel::Step { r_los } => {
                if r < r_los {
                    1.0
                } else {
                    0.0
                }
            }
            LosModel::ExponentialBlockage { beta } => {
                if beta == 0.0 {
                    return 1.0;
                }
                let sin_el = elevation_argument(r, geom).clamp(0.0, 1.0);
                if sin_el == 0.0 {
                    return 0.0;
                }
                // cot(asin(x)) = sqrt(1 - x^2) / x
                let cot = (1.0 - sin_el * sin_el).max(0.0).sqrt() / sin_el;
                (-beta * cot).exp()
            }
        }
    }

    /// Path-loss exponent for a link in the given state.
    pub fn exponent(&self, los: bool) -> f64 {
        if los {
            self.alpha_los
        } else {
            self.alpha_nlos
        }
    }

    /// Draws the LOS state and the unit-mean power fading of one link.
    ///
    /// LOS links get `Gamma(m, 1/m)` power (squared Nakagami-m amplitude),
    /// NLOS links unit-mean exponential power (Rayleigh amplitude).
    pub fn sample_fading<R: Rng + ?Sized>(
        &self,
        r: f64,
        geom: &ShellGeometry,
        rng: &mut R,
    ) -> Result<(f64, bool)> {
        let r = geom.check_slant("sample_fading", r)?;
        Ok(self.sample_fading_in_range(r, geom, rng))
    }

    pub(crate) fn sample_fading_in_range<R: Rng + ?Sized>(
        &self,
        r: f64,
        geom: &ShellGeometry,
        rng: &mut R,
    ) -> (f64, bool) {
        let p = self.los_probability_in_range(r, geom);
        let los = p >= 1.0 || (p > 0.0 && rng.random::<f64>() < p);
        let h = if los { sample_gamma_unit_mean(self.nakagami_m, rng) } else { rng.sample(Exp1) };
        (h, los)
    }
}

/// Sum of `m` unit exponentials divided by `m`: exactly `Gamma(m, 1/m)`.
fn sample_gamma_unit_mean<R: Rng + ?Sized>(m: u32, rng: &mut R) -> f64 {
    let sum: f64 = (0..m).map(|_| rng.sample::<f64, _>(Exp1)).sum();
    sum / m as f64
}

fn elevation_argument(r: f64, geom: &ShellGeometry) -> f64 {
    let re = geom.earth_radius();
    let rs = geom.shell_radius();
    (rs * rs - re * re) / (2.0 * r * re) - r / (2.0 * re)
}

fn check_r_los(op: &'static str, r_los: f64, geom: &ShellGeometry) -> Result<()> {
    if r_los < geom.min_slant() || r_los > geom.max_slant() {
        return Err(Error::domain(
            op,
            format!(
                "LOS radius {r_los} km outside [{}, {}] km",
                geom.min_slant(),
                geom.max_slant()
            ),
        ));
    }
    Ok(())
}

/// `P[H >= x]` for unit-mean Nakagami-m power fading:
/// `e^{-mx} sum_{k<m} (mx)^k / k!`. With `m = 1` this is the Rayleigh
/// power tail `e^{-x}`.
pub fn nakagami_ccdf(x: f64, m: u32) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain("nakagami_ccdf", format!("argument must be non-negative, got {x}")));
    }
    if m < 1 {
        return Err(Error::domain("nakagami_ccdf", "m must be a positive integer"));
    }
    let mx = m as f64 * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..m {
        term *= mx / k as f64;
        sum += term;
    }
    Ok((-mx).exp() * sum)
}

/// Transmit beam gain towards the typical user (linear power gain).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamGainModel {
    /// `g_max (J_1(u)/(2u) + 36 J_3(u)/u^3)^2` with `u` set by the off-nadir
    /// angle; `theta_3db` in radians.
    Bessel { g_max: f64, theta_3db: f64 },
    /// `g_los` below `r_los`, `g_nlos` from `r_los` on.
    Step { g_los: f64, g_nlos: f64, r_los: f64 },
    Constant { g: f64 },
}

impl BeamGainModel {
    pub fn bessel(g_max: f64, theta_3db: f64) -> Result<Self> {
        let m = BeamGainModel::Bessel { g_max, theta_3db };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        const OP: &str = "BeamGainModel";
        let positive = |name: &str, g: f64| {
            if g > 0.0 && g.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(OP, format!("{name} must be positive, got {g}")))
            }
        };
        match *self {
            BeamGainModel::Bessel { g_max, theta_3db } => {
                positive("g_max", g_max)?;
                if !(theta_3db > 0.0 && theta_3db < PI / 2.0) {
                    return Err(Error::domain(OP, format!("theta_3db must lie in (0, pi/2), got {theta_3db}")));
                }
            }
            BeamGainModel::Step { g_los, g_nlos, r_los } => {
                positive("g_los", g_los)?;
                positive("g_nlos", g_nlos)?;
                positive("r_los", r_los)?;
            }
            BeamGainModel::Constant { g } => positive("g", g)?,
        }
        Ok(())
    }

    /// Validates gains and, for the step model, the LOS radius against `geom`.
    pub fn validate(&self, geom: &ShellGeometry) -> Result<()> {
        self.check()?;
        if let BeamGainModel::Step { r_los, .. } = *self {
            check_r_los("BeamGainModel", r_los, geom)?;
        }
        Ok(())
    }

    /// Ranges where the gain is not smooth: the step edge, or the nulls of
    /// the Bessel pattern (so every side lobe gets its own panel).
    pub fn breakpoints(&self, geom: &ShellGeometry) -> Vec<f64> {
        match *self {
            BeamGainModel::Step { r_los, .. } => vec![r_los],
            BeamGainModel::Bessel { .. } => self.nulls(geom),
            BeamGainModel::Constant { .. } => Vec::new(),
        }
    }

    /// Slant ranges inside the cap where the gain vanishes, ascending.
    ///
    /// The pattern zeros are mapped to slant range and then polished by
    /// bisection on the signed field in `r`, so they coincide with the zeros
    /// of [`BeamGainModel::beam_gain`] to rounding.
    pub fn nulls(&self, geom: &ShellGeometry) -> Vec<f64> {
        let BeamGainModel::Bessel { theta_3db, .. } = *self else {
            return Vec::new();
        };
        let scale = theta_3db.sin() / U_3DB;
        let field = |r: f64| {
            let sin_theta = geom.offnadir_sine(r).unwrap_or(0.0);
            bessel_pattern(U_3DB * sin_theta / theta_3db.sin())
        };
        let (lo, hi) = (geom.min_slant(), geom.max_slant());
        let rough: Vec<f64> = pattern_nulls()
            .iter()
            .map_while(|&u| geom.slant_at_offnadir(u * scale))
            .filter(|&r| r > lo && r < hi)
            .collect();
        rough
            .iter()
            .enumerate()
            .map(|(i, &r0)| {
                let prev = if i == 0 { lo } else { rough[i - 1] };
                let next = rough.get(i + 1).copied().unwrap_or(hi);
                let w = 0.25 * (r0 - prev).min(next - r0);
                let (mut a, mut b) = ((r0 - w).max(lo), (r0 + w).min(hi));
                let fa = field(a);
                if fa * field(b) > 0.0 {
                    return r0;
                }
                let positive_left = fa > 0.0;
                while b - a > 2.0 * f64::EPSILON * b {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    let fm = field(mid);
                    if fm == 0.0 {
                        return mid;
                    }
                    if (fm > 0.0) == positive_left {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    }

    /// Largest gain the model can produce.
    pub fn peak_gain(&self) -> f64 {
        match *self {
            BeamGainModel::Bessel { g_max, .. } => g_max,
            BeamGainModel::Step { g_los, g_nlos, .. } => g_los.max(g_nlos),
            BeamGainModel::Constant { g } => g,
        }
    }

    pub fn beam_gain(&self, r: f64, geom: &ShellGeometry) -> Result<f64> {
        let r = geom.check_slant("beam_gain", r)?;
        Ok(self.gain_in_range(r, geom))
    }

    pub(crate) fn gain_in_range(&self, r: f64, geom: &ShellGeometry) -> f64 {
        match *self {
            BeamGainModel::Constant { g } => g,
            BeamGainModel::Step { g_los, g_nlos, r_los } => {
                if r < r_los {
                    g_los
                } else {
                    g_nlos
                }
            }
            BeamGainModel::Bessel { g_max, theta_3db } => {
                // in range by construction, so the radicand check cannot fail
                let sin_theta = geom.offnadir_sine(r).unwrap_or(0.0);
                let u = U_3DB * sin_theta / theta_3db.sin();
                let f = bessel_pattern(u);
                g_max * f * f
            }
        }
    }
}
