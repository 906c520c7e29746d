//! Coverage curves: SIR threshold grids with coverage values and the method that produced them.

use std::fmt;

use crate::error::{Error, Result};
use crate::units::{db_to_linear, linear_to_db};

/// Which computation produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodTag {
    Exact,
    BoundLower,
    BoundUpper,
    /// Bound family evaluated at an intermediate `kappa`.
    BoundInterpolated,
    ClosedForm,
    HomogeneousLowerBound,
    MonteCarlo,
}

impl MethodTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodTag::Exact => "exact",
            MethodTag::BoundLower => "bound_lower",
            MethodTag::BoundUpper => "bound_upper",
            MethodTag::BoundInterpolated => "bound_kappa",
            MethodTag::ClosedForm => "closed_form",
            MethodTag::HomogeneousLowerBound => "homogeneous_lb",
            MethodTag::MonteCarlo => "monte_carlo",
        }
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Strictly increasing grid of linear SIR thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct SirGrid(Vec<f64>);

impl SirGrid {
    pub fn from_linear(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("SirGrid", "grid is empty"));
        }
        if values.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(Error::domain("SirGrid", "thresholds must be positive and finite"));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("SirGrid", "thresholds must be strictly increasing"));
        }
        Ok(Self(values))
    }

    pub fn from_db(values_db: &[f64]) -> Result<Self> {
        Self::from_linear(values_db.iter().map(|&d| db_to_linear(d)).collect())
    }

    /// `points` thresholds evenly spaced in dB over `[from_db, to_db]`.
    pub fn db_range(from_db: f64, to_db: f64, points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::domain("SirGrid", "need at least one point"));
        }
        if points == 1 {
            return Self::from_db(&[from_db]);
        }
        let step = (to_db - from_db) / (points - 1) as f64;
        Self::from_db(&(0..points).map(|i| from_db + step * i as f64).collect::<Vec<_>>())
    }

    pub fn linear(&self) -> &[f64] {
        &self.0
    }

    pub fn db(&self) -> Vec<f64> {
        self.0.iter().map(|&g| linear_to_db(g)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Coverage probability over a threshold grid.
///
/// `values` keeps the raw numbers, which for analytic expressions may exceed
/// 1 at low thresholds; [`CoverageCurve::clamped`] gives the presentation
/// values `min(P, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCurve {
    pub grid: SirGrid,
    pub values: Vec<f64>,
    pub method: MethodTag,
    /// 95% confidence half-widths, Monte Carlo only.
    pub ci_halfwidth: Option<Vec<f64>>,
}

impl CoverageCurve {
    pub fn new(grid: SirGrid, values: Vec<f64>, method: MethodTag) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values, method, ci_halfwidth: None }
    }

    pub fn clamped(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v.clamp(0.0, 1.0)).collect()
    }

    /// Per point: true where the threshold is at most 0 dB and an analytic
    /// value is only an upper bound rather than exact.
    pub fn upper_bound_only(&self) -> Vec<bool> {
        let analytic = self.method != MethodTag::MonteCarlo;
        self.grid.linear().iter().map(|&g| analytic && g <= 1.0).collect()
    }
}
