use crate::error::{Error, Result};
use crate::numeric::std_normal_cdf;

/// `P(N(mean, variance) <= x)`.
pub fn gaussian_cdf(x: f64, mean: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::domain(format!("Gaussian variance must be positive, got {variance}")));
    }
    Ok(std_normal_cdf((x - mean) / variance.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        assert_eq!(gaussian_cdf(0.0, 0.0, 1.0).unwrap(), 0.5);
        assert!((gaussian_cdf(1.96, 0.0, 1.0).unwrap() - 0.975_002_104_851_780).abs() < 1e-12);
        assert_eq!(gaussian_cdf(3.5, 3.5, 7.0).unwrap(), 0.5);
        assert!(gaussian_cdf(0.0, 0.0, 0.0).is_err());
    }
}
