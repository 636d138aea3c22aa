//! Dickman's function and the standard Dickman law.
//!
//! `rho` solves `x rho'(x) = -rho(x - 1)` with `rho = 1` on `[0, 1]`. On each unit
//! interval `[k, k + 1]` it is a power series in `s = k + 1 - x` whose coefficients
//! follow from those of the previous interval. All coefficients are positive, and
//! the constant term comes from `x rho(x) = int_{x-1}^x rho`, so no step subtracts
//! nearly equal quantities and the relative accuracy holds far into the tail.

use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Right end of the represented range; `rho(100) < 1e-200`.
pub const RHO_XMAX: usize = 100;

const TERMS: usize = 90;

struct RhoTable {
    // coefficients on [k, k + 1] in powers of s = k + 1 - x, for k = 0..RHO_XMAX
    coef: Vec<[f64; TERMS]>,
    // int_0^k t^m rho(t) dt for m = 0, 1, 2 and k = 0..=RHO_XMAX
    cum: [Vec<f64>; 3],
}

fn table() -> &'static RhoTable {
    static TABLE: OnceLock<RhoTable> = OnceLock::new();
    TABLE.get_or_init(build_table)
}

fn build_table() -> RhoTable {
    let mut coef = Vec::with_capacity(RHO_XMAX);
    let mut c = [0.0; TERMS];
    c[0] = 1.0;
    coef.push(c);
    for k in 1..RHO_XMAX {
        let kf = k as f64;
        let mut d = [0.0; TERMS];
        for i in 0..TERMS - 1 {
            d[i + 1] = (c[i] + i as f64 * d[i]) / ((kf + 1.0) * (i as f64 + 1.0));
        }
        // (k + 1) rho(k + 1) = int_k^{k+1} rho = rho(k + 1) + sum_{i >= 1} d_i / (i + 1)
        let mut acc = 0.0;
        for i in (1..TERMS).rev() {
            acc += d[i] / (i as f64 + 1.0);
        }
        d[0] = acc / kf;
        coef.push(d);
        c = d;
    }
    let mut cum = [vec![0.0; RHO_XMAX + 1], vec![0.0; RHO_XMAX + 1], vec![0.0; RHO_XMAX + 1]];
    for k in 0..RHO_XMAX {
        let full = interval_moments(&coef[k], k, 1.0);
        for m in 0..3 {
            cum[m][k + 1] = cum[m][k] + full[m];
        }
    }
    RhoTable { coef, cum }
}

/// `int_{k+1-s}^{k+1} t^m rho(t) dt` for `m = 0, 1, 2`, with `u = k + 1 - t`.
fn interval_moments(d: &[f64; TERMS], k: usize, s: f64) -> [f64; 3] {
    let big = k as f64 + 1.0;
    // a[p] = sum_i d_i s^{i+p} / (i + p)
    let mut a = [0.0; 4];
    for p in 1..=3usize {
        let mut acc = 0.0;
        for i in (0..TERMS).rev() {
            acc = acc * s + d[i] / (i + p) as f64;
        }
        a[p] = acc * s.powi(p as i32);
    }
    [a[1], big * a[1] - a[2], big * big * a[1] - 2.0 * big * a[2] + a[3]]
}

fn horner(d: &[f64; TERMS], s: f64) -> f64 {
    d.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

/// Interval index and local coordinate `s` for `0 <= x <= RHO_XMAX`, intervals closed on the right.
fn locate(x: f64) -> (usize, f64) {
    let k = if x <= 1.0 { 0 } else { (x.ceil() as usize - 1).min(RHO_XMAX - 1) };
    (k, k as f64 + 1.0 - x)
}

fn rho_unchecked(x: f64) -> f64 {
    if x < 0.0 || x > RHO_XMAX as f64 {
        return 0.0;
    }
    let (k, s) = locate(x);
    horner(&table().coef[k], s)
}

/// Dickman's function `rho(x)`.
pub fn dickman_rho(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("Dickman's function needs x >= 0, got {x}")));
    }
    Ok(rho_unchecked(x))
}

/// Density `e^{-gamma} rho(x)` of the standard Dickman law (zero for `x < 0`).
pub fn dickman_density(x: f64) -> f64 {
    (-EULER_GAMMA).exp() * rho_unchecked(x)
}

/// `e^{-gamma} * int_0^x t^k rho(t) dt` for `k` in `0..=2`.
pub fn dickman_partial_moment(k: usize, x: f64) -> f64 {
    assert!(k <= 2, "partial moments are provided up to order 2");
    if x <= 0.0 {
        return 0.0;
    }
    let t = table();
    let scale = (-EULER_GAMMA).exp();
    if x >= RHO_XMAX as f64 {
        return scale * t.cum[k][RHO_XMAX];
    }
    let (j, s) = locate(x);
    // int_j^x = int over the whole interval minus the part from x to j + 1
    let whole = t.cum[k][j + 1] - t.cum[k][j];
    let right = interval_moments(&t.coef[j], j, s)[k];
    scale * (t.cum[k][j] + (whole - right))
}

/// CDF of the standard Dickman law.
pub fn dickman_cdf(x: f64) -> f64 {
    dickman_partial_moment(0, x).min(1.0)
}

/// Quantile of the standard Dickman law by bisection on the CDF.
pub fn dickman_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return RHO_XMAX as f64;
    }
    crate::numeric::bisect(|x| dickman_cdf(x) - u, 0.0, RHO_XMAX as f64, 1e-14)
}

/// One draw of `D` from the recursion `D = U (1 + D')`, unrolled `depth` times from `D' = 0`.
///
/// The truncation underestimates `D` by at most `2^{-depth}` in mean.
pub fn sample_dickman<R: Rng + ?Sized>(rng: &mut R, depth: usize) -> f64 {
    let mut d = 0.0;
    for _ in 0..depth {
        let u: f64 = rng.random();
        d = u * (1.0 + d);
    }
    d
}

/// Smallest integer `x` with `rho(x) < eps` (capped at the represented range).
pub fn rho_tail_point(eps: f64) -> usize {
    (1..=RHO_XMAX).find(|&x| rho_unchecked(x as f64) < eps).unwrap_or(RHO_XMAX)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_on_first_intervals() {
        assert_eq!(dickman_rho(0.5).unwrap(), 1.0);
        for &x in &[1.25, 1.5, 2.0] {
            let exact = 1.0 - f64::ln(x);
            assert!((dickman_rho(x).unwrap() - exact).abs() < 1e-14, "x = {x}");
        }
        assert!(dickman_rho(-0.1).is_err());
    }

    #[test]
    fn reference_values() {
        let cases = [
            (3.0, 0.048_608_388_291_131_57),
            (4.0, 4.910_925_647_760_83e-3),
            (5.0, 3.547_247_004_560_40e-4),
            (6.0, 1.964_969_635_395_53e-5),
            (10.0, 2.770_171_837_725_959e-11),
        ];
        for (x, v) in cases {
            let r = dickman_rho(x).unwrap();
            assert!(((r - v) / v).abs() < 1e-9, "rho({x}) = {r}, expected {v}");
        }
    }

    #[test]
    fn density_is_normalized_with_unit_mean() {
        assert!((dickman_partial_moment(0, 1e9) - 1.0).abs() < 1e-12);
        assert!((dickman_partial_moment(1, 1e9) - 1.0).abs() < 1e-12);
        let var = dickman_partial_moment(2, 1e9) - 1.0;
        assert!((var - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &u in &[0.1, 0.5, 0.9, 0.999] {
            assert!((dickman_cdf(dickman_quantile(u)) - u).abs() < 1e-12);
        }
    }
}
