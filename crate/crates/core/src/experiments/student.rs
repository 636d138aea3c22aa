use rand_distr::{Distribution, StudentT};

use super::parallel_draws;
use crate::error::{Error, Result};
use crate::numeric::{integrate_pieces, ln_gamma};

fn check(m: f64) -> Result<()> {
    if !(m > 2.0 && m.is_finite()) {
        return Err(Error::domain(format!("unit-variance scaling needs more than 2 degrees of freedom, got {m}")));
    }
    Ok(())
}

/// Density of `W = sqrt((m - 2)/m) T`, the unit-variance Student's t law.
pub fn student_t_density(m: f64, w: f64) -> f64 {
    let s = (m / (m - 2.0)).sqrt();
    let t = s * w;
    let ln_c = ln_gamma(0.5 * (m + 1.0)) - ln_gamma(0.5 * m) - 0.5 * (m * std::f64::consts::PI).ln();
    s * (ln_c - 0.5 * (m + 1.0) * (t * t / m).ln_1p()).exp()
}

/// `E f(W)` by adaptive quadrature over dyadic shells out to `|w| = 2^40`.
pub fn student_t_expectation<F: Fn(f64) -> f64>(m: f64, f: F, tol: f64) -> Result<f64> {
    check(m)?;
    let mut breaks: Vec<f64> = (-2..=40).map(|j| 2f64.powi(j)).collect();
    let neg: Vec<f64> = breaks.iter().rev().map(|x| -x).collect();
    breaks = neg.into_iter().chain(std::iter::once(0.0)).chain(breaks).collect();
    let q = integrate_pieces(|w| f(w) * student_t_density(m, w), &breaks, tol)?;
    Ok(q.value)
}

/// `count` draws of the unit-variance Student's t law.
pub fn student_t_samples(m: f64, seed: u64, count: usize) -> Result<Vec<f64>> {
    check(m)?;
    let t = StudentT::new(m).map_err(|e| Error::domain(e.to_string()))?;
    let scale = ((m - 2.0) / m).sqrt();
    Ok(parallel_draws(seed, 0x57d, count, |rng| scale * t.sample(rng)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_by_quadrature() {
        for m in [5.0, 8.0, 20.0] {
            let one = student_t_expectation(m, |_| 1.0, 1e-13).unwrap();
            let two = student_t_expectation(m, |w| w * w, 1e-13).unwrap();
            assert!((one - 1.0).abs() < 1e-11);
            assert!((two - 1.0).abs() < 1e-9);
        }
        let four = student_t_expectation(8.0, |w| w.powi(4), 1e-13).unwrap();
        assert!((four - 4.5).abs() < 1e-8);
    }
}
