//! Normal and F distribution helpers.

use libm::erfc;
use statrs::function::beta::beta_reg;

pub const Z_975: f64 = 1.959_963_984_540_054;

/// `P(Z > z)` for a standard normal.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Two-sided normal p-value `P(|Z| > |z|)`.
pub fn two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// CDF of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_cdf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    beta_reg(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2))
}

/// Upper tail `P(F > x)`, evaluated directly for precision in the far tail.
pub fn f_sf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x))
}

/// Quantile of the F distribution by bisection on the CDF.
pub fn f_quantile(p: f64, d1: f64, d2: f64) -> f64 {
    assert!((0.0..1.0).contains(&p) && d1 > 0.0 && d2 > 0.0, "invalid F quantile arguments");
    if p == 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while f_cdf(hi, d1, d2) < p {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f_cdf(mid, d1, d2) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}
