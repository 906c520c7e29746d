//! Special functions: Bessel functions of the first kind for small integer
//! orders, the error function, and a few combinatorial helpers.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::OnceLock;

/// Arguments above this use the Hankel asymptotic expansion; below, Miller's
/// backward recurrence. At 25 the asymptotic remainder is below 1e-20.
const ASYMPTOTIC_FROM: f64 = 25.0;

/// `J_n(x)` for `n` in `0..=3` and `x >= 0`.
///
/// Absolute accuracy is close to machine precision for all `x`; relative
/// accuracy degrades only next to the zeros of `J_n`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    assert!(n <= 3, "bessel_j supports orders 0..=3");
    let x = x.abs();
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < 1e-3 {
        return power_series(n, x);
    }
    if x < ASYMPTOTIC_FROM {
        return miller(n, x);
    }
    let j0 = hankel(0, x);
    if n == 0 {
        return j0;
    }
    let j1 = hankel(1, x);
    // upward recurrence is stable while the order stays below x
    let mut prev = j0;
    let mut cur = j1;
    for k in 1..n {
        let next = 2.0 * k as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn power_series(n: u32, x: f64) -> f64 {
    let t = -0.25 * x * x;
    let mut term = (0.5 * x).powi(n as i32) / factorial(n);
    let mut sum = term;
    for k in 1..30 {
        term *= t / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller(n: u32, x: f64) -> f64 {
    let start = 2 * ((x as usize + 20 + (40.0 * x).sqrt() as usize) / 2);
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0;
    let mut want = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // cur now holds the unnormalised J_{k-1}
        let order = k - 1;
        if order == n as usize {
            want = cur;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            want *= 1e-250;
        }
    }
    norm += cur;
    want / norm
}

fn hankel(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if a.abs() >= last || a == 0.0 {
            break;
        }
        last = a.abs();
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        if a.abs() < 1e-18 {
            break;
        }
    }
    let chi = x - (0.5 * n as f64 * PI + FRAC_PI_4);
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Field pattern `J_1(u)/(2u) + 36 J_3(u)/u^3`, equal to 1 at `u = 0`.
pub fn bessel_pattern(u: f64) -> f64 {
    let u = u.abs();
    if u <= 8.0 {
        // Ascending series of J_1(u)/u and J_3(u)/u^3 summed together, which
        // removes the singularity at 0 and avoids cancellation.
        let t = -0.25 * u * u;
        let mut a = 0.25; // term of J_1(u)/(2u)
        let mut b = 0.75; // term of 36 J_3(u)/u^3
        let mut sum = a + b;
        for k in 1..60 {
            let kf = k as f64;
            a *= t / (kf * (kf + 1.0));
            b *= t / (kf * (kf + 3.0));
            sum += a + b;
            if (a + b).abs() < 1e-17 {
                break;
            }
        }
        sum
    } else {
        bessel_j(1, u) / (2.0 * u) + 36.0 * bessel_j(3, u) / (u * u * u)
    }
}

/// Largest argument covered by [`pattern_nulls`].
pub const PATTERN_NULL_LIMIT: f64 = 5000.0;

/// Zeros of [`bessel_pattern`] on `(0, PATTERN_NULL_LIMIT]`, ascending.
pub fn pattern_nulls() -> &'static [f64] {
    static NULLS: OnceLock<Vec<f64>> = OnceLock::new();
    NULLS.get_or_init(|| {
        // zeros are roughly pi apart; a 0.1 step cannot skip a pair
        let step = 0.1;
        let mut nulls = Vec::new();
        let mut a = step;
        let mut fa = bessel_pattern(a);
        while a < PATTERN_NULL_LIMIT {
            let b = a + step;
            let fb = bessel_pattern(b);
            if fa == 0.0 {
                nulls.push(a);
            } else if fa * fb < 0.0 {
                let (mut lo, mut hi, mut flo) = (a, b, fa);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let fm = bessel_pattern(mid);
                    if fm * flo <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                nulls.push(0.5 * (lo + hi));
            }
            a = b;
            fa = fb;
        }
        nulls
    })
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `exp(x^2) erfc(x)` for `x >= 0`,
/// finite where `erfc` alone underflows.
pub fn erfc_scaled(x: f64) -> f64 {
    if x < 25.0 {
        (x * x).exp() * erfc(x)
    } else {
        // asymptotic series; at x >= 25 the fourth term is below 1e-11
        let t = 1.0 / (2.0 * x * x);
        (1.0 - t + 3.0 * t * t - 15.0 * t * t * t) / (x * PI.sqrt())
    }
}

/// Two-exponential approximation `erfc(x) ~ e^{-x^2}/6 + e^{-4x^2/3}/2`
/// for `x > 0`.
pub fn erfc_two_exp(x: f64) -> f64 {
    let x2 = x * x;
    (-x2).exp() / 6.0 + 0.5 * (-4.0 / 3.0 * x2).exp()
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Rising factorial `(m)_j = m (m+1) ... (m+j-1)`.
pub fn rising_factorial(m: f64, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (m + i as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt`. The integrand is
    /// smooth and periodic, so the trapezoid rule converges geometrically.
    fn bessel_integral(n: u32, x: f64) -> f64 {
        let steps = 4000;
        let h = PI / steps as f64;
        let mut s = 0.0;
        for i in 0..=steps {
            let t = i as f64 * h;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            s += w * (n as f64 * t - x * t.sin()).cos();
        }
        s * h / PI
    }

    #[test]
    fn bessel_against_integral_representation() {
        let xs = [
            1e-4, 0.01, 0.3, 1.0, 2.07123, 3.8, 7.5, 8.0, 12.0, 19.9, 24.99, 25.01, 31.0, 50.0,
            120.0, 257.0,
        ];
        for n in 0..=3 {
            for &x in &xs {
                let got = bessel_j(n, x);
                let want = bessel_integral(n, x);
                let err = (got - want).abs();
                let tol = 1e-13_f64.max(1e-10 * want.abs());
                assert!(err < tol, "J{n}({x}) = {got}, want {want}, err {err:e}");
            }
        }
    }

    #[test]
    fn bessel_known_values() {
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j(3, 10.0) - 0.058_379_379_305_186_81).abs() < 1e-14);
        // first zero of J_1
        assert!(bessel_j(1, 3.831_705_970_207_512).abs() < 1e-14);
    }

    #[test]
    fn pattern_series_and_direct_agree_near_switch() {
        for u in [6.0, 7.9, 8.0, 8.1, 10.0] {
            let direct = bessel_j(1, u) / (2.0 * u) + 36.0 * bessel_j(3, u) / (u * u * u);
            assert!((bessel_pattern(u) - direct).abs() < 1e-13, "u = {u}");
        }
        let below = bessel_pattern(8.0 - 1e-12);
        let above = bessel_pattern(8.0 + 1e-12);
        assert!((below - above).abs() < 1e-12);
    }

    #[test]
    fn pattern_small_argument_limit() {
        assert_eq!(bessel_pattern(0.0), 1.0);
        // leading correction is -(1/32 + 3/64) u^2 = -(5/64) u^2
        for u in [1e-6, 1e-5, 1e-4, 1e-3] {
            let want = 1.0 - 5.0 / 64.0 * u * u;
            assert!((bessel_pattern(u) - want).abs() < 1e-9 * want);
        }
    }

    #[test]
    fn half_power_point() {
        let g = bessel_pattern(2.07123).powi(2);
        assert!((g - 0.5).abs() < 0.005, "normalised gain at u = 2.07123 is {g}");
    }

    #[test]
    fn erfc_approximation_is_close() {
        for x in [0.1, 0.5, 1.0, 2.0, 3.0, 4.0] {
            let exact = erfc(x);
            // the approximation is coarse: about 26% off near the origin
            assert!(((erfc_two_exp(x) - exact) / exact).abs() < 0.3, "x = {x}");
        }
        assert!((erf(0.5) - 0.520_499_877_813_046_5).abs() < 1e-15);
    }

    #[test]
    fn pattern_nulls_are_zeros() {
        let z = pattern_nulls();
        assert!(z.len() > 1500);
        // first null lies past the main lobe, spacing tends to pi
        assert!(z[0] > 3.0 && z[0] < 6.0, "first null {}", z[0]);
        for w in z.windows(2) {
            assert!(w[1] - w[0] > 2.0 && w[1] - w[0] < 4.5);
        }
        for &u in &z[..50] {
            assert!(bessel_pattern(u).abs() < 1e-12, "{u}: {}", bessel_pattern(u));
        }
    }

    #[test]
    fn scaled_erfc_is_continuous_and_matches() {
        for x in [0.0f64, 0.3, 2.0, 10.0, 24.0] {
            let want = (x * x).exp() * erfc(x);
            assert!((erfc_scaled(x) - want).abs() < 1e-12 * want);
        }
        let (a, b) = (erfc_scaled(25.0 - 1e-9), erfc_scaled(25.0));
        assert!(((a - b) / b).abs() < 1e-10);
        // x erfcx(x) -> 1/sqrt(pi)
        assert!((1e6 * erfc_scaled(1e6) * PI.sqrt() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn combinatorics() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(3, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(rising_factorial(3.0, 3), 60.0);
        assert_eq!(factorial(5), 120.0);
        assert!((ln_gamma(7.0) - 720f64.ln()).abs() < 1e-12);
    }
}
