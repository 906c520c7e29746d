//! Globally adaptive Gauss-Kronrod quadrature (15-point panels) for
//! vector-valued integrands.
//!
//! Every component of the integrand is integrated over the same panels, so a
//! family of related integrals (here: the Laplace exponent and its
//! derivatives) costs one set of integrand evaluations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// 7-point Gauss weights for the nodes `XGK[1], XGK[3], XGK[5]` and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Stopping rule for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    /// Subdivision budget for an interval without breakpoints; every
    /// breakpoint adds [`BUDGET_PER_BREAKPOINT`] more.
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel: 1e-8, abs: 1e-12, max_subdivisions: 2000 }
    }
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs, ..Self::default() }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

/// Extra subdivisions granted per interior breakpoint, enough to bisect a
/// sharp feature at each panel edge down to roughly `1e-15` of the width.
pub const BUDGET_PER_BREAKPOINT: usize = 100;

/// Result of an adaptive integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Integral {
    pub value: Vec<f64>,
    pub error: Vec<f64>,
    pub intervals: usize,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
    priority: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

struct Workspace {
    dim: usize,
    fc: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    evaluations: usize,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        Self { dim, fc: vec![0.0; dim], f1: vec![0.0; dim], f2: vec![0.0; dim], evaluations: 0 }
    }

    /// One 15-point Kronrod panel with the embedded 7-point Gauss estimate.
    fn panel<F>(&mut self, f: &mut F, a: f64, b: f64) -> (Vec<f64>, Vec<f64>)
    where
        F: FnMut(f64, &mut [f64]),
    {
        let dim = self.dim;
        let centre = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut kronrod = vec![0.0; dim];
        let mut gauss = vec![0.0; dim];
        let mut abs_sum = vec![0.0; dim];
        let mut asc = vec![0.0; dim];
        let mut stash: Vec<f64> = Vec::with_capacity(15 * dim);

        f(centre, &mut self.fc);
        self.evaluations += 1;
        for i in 0..dim {
            kronrod[i] = self.fc[i] * WGK[7];
            gauss[i] = self.fc[i] * WG[3];
            abs_sum[i] = (self.fc[i] * WGK[7]).abs();
        }
        for (j, &x) in XGK.iter().take(7).enumerate() {
            let dx = half * x;
            f(centre - dx, &mut self.f1);
            f(centre + dx, &mut self.f2);
            self.evaluations += 2;
            for i in 0..dim {
                let s = self.f1[i] + self.f2[i];
                kronrod[i] += WGK[j] * s;
                abs_sum[i] += WGK[j] * (self.f1[i].abs() + self.f2[i].abs());
                if j % 2 == 1 {
                    gauss[i] += WG[j / 2] * s;
                }
            }
            stash.extend_from_slice(&self.f1);
            stash.extend_from_slice(&self.f2);
        }
        for i in 0..dim {
            let mean = kronrod[i] * 0.5;
            let mut a_c = WGK[7] * (self.fc[i] - mean).abs();
            for j in 0..7 {
                let lo = stash[(2 * j) * dim + i];
                let hi = stash[(2 * j + 1) * dim + i];
                a_c += WGK[j] * ((lo - mean).abs() + (hi - mean).abs());
            }
            asc[i] = a_c;
        }

        let h = half.abs();
        let mut err = vec![0.0; dim];
        for i in 0..dim {
            let result = kronrod[i] * half;
            let res_abs = abs_sum[i] * h;
            let res_asc = asc[i] * h;
            err[i] = rescale_error((kronrod[i] - gauss[i]) * half, res_abs, res_asc);
            kronrod[i] = result;
        }
        (kronrod, err)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / res_asc).powf(1.5);
        e = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * res_abs);
    }
    e
}

/// Integrates a `dim`-component integrand over `[a, b]`, splitting first at
/// every breakpoint strictly inside the interval.
///
/// `f(x, out)` must write all `dim` components into `out`. Convergence is
/// norm-wise: every component's summed error estimate must be within
/// `max(abs, rel * max_i |value_i|)`, so a component that is tiny next to the
/// others is not held to its own relative accuracy.
pub fn integrate<F>(
    mut f: F,
    a: f64,
    b: f64,
    dim: usize,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Result<Integral>
where
    F: FnMut(f64, &mut [f64]),
{
    assert!(dim > 0, "integrand needs at least one component");
    if a == b {
        return Ok(Integral { value: vec![0.0; dim], error: vec![0.0; dim], intervals: 0, evaluations: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut cuts = vec![lo];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    let budget = tol.max_subdivisions + BUDGET_PER_BREAKPOINT * inner.len();
    cuts.extend(inner);
    cuts.push(hi);

    let mut ws = Workspace::new(dim);
    let mut panels: Vec<Panel> = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let (value, error) = ws.panel(&mut f, w[0], w[1]);
        panels.push(Panel { a: w[0], b: w[1], value, error, priority: 0.0 });
    }

    let mut total = vec![0.0; dim];
    let mut total_err = vec![0.0; dim];
    for p in &panels {
        for i in 0..dim {
            total[i] += p.value[i];
            total_err[i] += p.error[i];
        }
    }
    // Fixed per-component scales for ranking panels; they only order the
    // work, the stopping test below uses the running totals.
    let scale = tol.target(max_abs(&total)).max(f64::MIN_POSITIVE);
    let priority = |err: &[f64]| max_abs(err) / scale;

    let mut heap = BinaryHeap::new();
    for mut p in panels {
        p.priority = priority(&p.error);
        heap.push(p);
    }
    // Panels too narrow to split further; their error is accepted as is.
    let mut frozen: Vec<Panel> = Vec::new();
    let mut intervals = heap.len();

    let converged = |total: &[f64], total_err: &[f64]| {
        max_abs(total_err) <= tol.target(max_abs(total))
    };

    while !converged(&total, &total_err) {
        let Some(worst) = heap.pop() else { break };
        if intervals >= budget {
            heap.push(worst);
            let (i, _) = total_err
                .iter()
                .zip(&total)
                .enumerate()
                .map(|(i, (e, v))| (i, e / tol.target(*v).max(f64::MIN_POSITIVE)))
                .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            return Err(Error::Quadrature {
                op: "integrate",
                estimate: sign * total[i],
                error: total_err[i],
                lower: a,
                upper: b,
                intervals,
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        let width = worst.b - worst.a;
        if width <= 4.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs()).max(f64::MIN_POSITIVE)
            || mid <= worst.a
            || mid >= worst.b
        {
            frozen.push(worst);
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = ws.panel(&mut f, worst.a, mid);
        let (v2, e2) = ws.panel(&mut f, mid, worst.b);
        for i in 0..dim {
            total[i] += v1[i] + v2[i] - worst.value[i];
            total_err[i] += e1[i] + e2[i] - worst.error[i];
        }
        let p1 = priority(&e1);
        let p2 = priority(&e2);
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1, priority: p1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2, priority: p2 });
        intervals += 1;
    }

    // Re-sum from the panels to shed the drift of incremental updates.
    let mut value = vec![0.0; dim];
    let mut error = vec![0.0; dim];
    for p in heap.iter().chain(frozen.iter()) {
        for i in 0..dim {
            value[i] += p.value[i];
            error[i] += p.error[i];
        }
    }
    for v in &mut value {
        *v *= sign;
    }
    Ok(Integral { value, error, intervals, evaluations: ws.evaluations })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, breakpoints: &[f64], tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let out = integrate(|x, out: &mut [f64]| out[0] = f(x), a, b, 1, breakpoints, tol)?;
    Ok(out.value[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact_on_one_panel() {
        // Kronrod 15 integrates degree 22 exactly
        let v = integrate_scalar(|x| x.powi(10) - 3.0 * x.powi(3), -1.0, 2.0, &[], Tolerance::default())
            .unwrap();
        let want = (2f64.powi(11) + 1.0) / 11.0 - 3.0 * (16.0 - 1.0) / 4.0;
        assert!((v - want).abs() < 1e-12 * want.abs());
    }

    #[test]
    fn smooth_and_peaked_integrands() {
        let tol = Tolerance::default();
        let v = integrate_scalar(f64::exp, 0.0, 1.0, &[], tol).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
        // narrow Lorentzian, integral = 2 atan(1/eps)/eps ... scaled
        let eps = 1e-4;
        let v = integrate_scalar(|x| eps / (x * x + eps * eps), -1.0, 1.0, &[], tol).unwrap();
        let want = 2.0 * (1.0 / eps).atan();
        assert!((v - want).abs() < 1e-8 * want);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let tol = Tolerance::default();
        let fwd = integrate_scalar(|x| x.sin(), 0.0, 2.0, &[], tol).unwrap();
        let back = integrate_scalar(|x| x.sin(), 2.0, 0.0, &[], tol).unwrap();
        assert!((fwd + back).abs() < 1e-15);
    }

    #[test]
    fn breakpoints_handle_jumps() {
        let tol = Tolerance::default();
        let step = |x: f64| if x < 0.3 { 1.0 } else { 5.0 };
        let v = integrate_scalar(step, 0.0, 1.0, &[0.3], tol).unwrap();
        assert!((v - (0.3 + 3.5)).abs() < 1e-13);
    }

    #[test]
    fn vector_components_share_panels() {
        let out = integrate(
            |x, o: &mut [f64]| {
                o[0] = x;
                o[1] = x.cos();
                o[2] = 1.0 / (1.0 + x * x);
            },
            0.0,
            3.0,
            3,
            &[],
            Tolerance::default(),
        )
        .unwrap();
        assert!((out.value[0] - 4.5).abs() < 1e-13);
        assert!((out.value[1] - 3f64.sin()).abs() < 1e-12);
        assert!((out.value[2] - 3f64.atan()).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let tol = Tolerance { rel: 1e-14, abs: 0.0, max_subdivisions: 3 };
        let err = integrate_scalar(|x| (1.0 / (x + 1e-9)).sin(), 0.0, 1.0, &[], tol).unwrap_err();
        assert!(err.is_numerical());
    }
}
