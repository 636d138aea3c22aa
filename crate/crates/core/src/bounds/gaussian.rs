use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::{BoundReport, MomentSummary, TheoremId};
use crate::error::{Error, Result};
use crate::experiments::CountMode;
use crate::numeric::{ln_factorial, NeumaierSum};
use crate::stein_factors::gaussian_stein_factors;

/// Urn moments are evaluated in exact rational arithmetic up to this many balls.
pub const RATIONAL_URN_MAX_N: u64 = 30;

/// Slack for the sign conditions on the covariance sum.
const COV_SIGN_SLACK: f64 = 1e-10;

fn sqrt_8_over_pi() -> f64 {
    (8.0 / std::f64::consts::PI).sqrt()
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {x}")))
    }
}

#[derive(Serialize)]
struct GenericInputs {
    moment3_abs: f64,
    moment2: f64,
    lambda: f64,
    sigma2: f64,
    stein_residual: f64,
}

/// `d_W(W, N(theta, sigma^2)) <= E|xi|^3 / E xi^2 + sqrt(2/pi) sigma^{-1} |sigma^2 - lambda E xi^2| + residual`
/// for any `xi` independent of `W` with `E xi = theta / lambda`; `residual` bounds the
/// Stein discrepancy `sup_h |lambda E[xi f(W + xi)] - E[W f(W)]|`.
pub fn gauss_generic_bound(
    moment3_abs: f64,
    moment2: f64,
    lambda: f64,
    sigma2: f64,
    stein_residual: f64,
) -> Result<BoundReport> {
    positive("lambda", lambda)?;
    positive("sigma^2", sigma2)?;
    positive("E xi^2", moment2)?;
    if !(moment3_abs >= 0.0 && moment3_abs.is_finite()) {
        return Err(Error::domain("E|xi|^3 must be non-negative"));
    }
    if !(stein_residual >= 0.0 && stein_residual.is_finite()) {
        return Err(Error::domain("the Stein residual bound must be non-negative"));
    }
    let g = gaussian_stein_factors(sigma2)?;
    let inputs = GenericInputs { moment3_abs, moment2, lambda, sigma2, stein_residual };
    Ok(BoundReport::assemble(
        TheoremId::GaussGeneric,
        &inputs,
        &[
            ("third_moment_term", moment3_abs / moment2),
            ("variance_term", g.sup_f1 * (sigma2 - lambda * moment2).abs()),
            ("stein_residual", stein_residual),
        ],
        &[],
    ))
}

fn clt_bound(m: &MomentSummary, sign: f64, theorem: TheoremId) -> Result<BoundReport> {
    m.require_spread()?;
    positive("sum of second moments", m.sum_m2)?;
    let sigma = m.sigma2.sqrt();
    let cov_ok = sign * m.cov_cross >= -COV_SIGN_SLACK;
    let name = if sign < 0.0 { "negative_association" } else { "association" };
    Ok(BoundReport::assemble(
        theorem,
        m,
        &[
            ("third_moment_term", m.sum_m3 / (sigma * m.sum_m2)),
            ("covariance_term", sqrt_8_over_pi() / m.sigma2 * (sign * m.cov_cross + m.sum_sq_means)),
        ],
        &[(name, cov_ok)],
    ))
}

/// Wasserstein bound for the standardized sum of negatively associated, non-negative integer summands.
pub fn clt_neg_assoc_bound(m: &MomentSummary) -> Result<BoundReport> {
    clt_bound(m, -1.0, TheoremId::CltNa)
}

/// Wasserstein bound for the standardized sum of associated, non-negative integer summands.
pub fn clt_assoc_bound(m: &MomentSummary) -> Result<BoundReport> {
    clt_bound(m, 1.0, TheoremId::CltA)
}

fn rat(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Power sums `sum c_j^a` for `a = 1, 2, 3` and `sum_{i != j} c_i c_j`.
fn srs_power_sums(values: &[u64]) -> [BigRational; 4] {
    let mut s = [BigRational::zero(), BigRational::zero(), BigRational::zero()];
    for &c in values {
        let c = rat(c);
        s[0] += &c;
        s[1] += &c * &c;
        s[2] += &c * &c * &c;
    }
    let cross = &s[0] * &s[0] - &s[1];
    [s[0].clone(), s[1].clone(), s[2].clone(), cross]
}

fn check_srs(values: &[u64], n: usize) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::domain("need at least two population values"));
    }
    if n == 0 || n >= values.len() {
        return Err(Error::domain(format!("sample size must satisfy 1 <= n < m = {}, got {n}", values.len())));
    }
    Ok(())
}

/// Exact moment sums for the total of a simple random sample of size `n` from `values`.
pub fn srs_moment_summary(values: &[u64], n: usize) -> Result<MomentSummary> {
    check_srs(values, n)?;
    let [s1, s2, s3, cross] = srs_power_sums(values);
    let m = rat(values.len() as u64);
    let nr = rat(n as u64);
    let one = BigRational::one();
    let frac = &nr / &m;
    let pair = &nr * (&nr - &one) / (&m * (&m - &one));
    let mean = &s1 / &m;
    let sum_sq_means = &nr * &mean * &mean;
    let cov = &pair * &cross - &nr * (&nr - &one) * &mean * &mean;
    let sum_m2 = &frac * &s2;
    let sigma2 = &sum_m2 - &sum_sq_means + &cov;
    Ok(MomentSummary {
        theta: to_f64(&(&frac * &s1)),
        sigma2: to_f64(&sigma2),
        sum_m1: to_f64(&(&frac * &s1)),
        sum_m2: to_f64(&sum_m2),
        sum_m3: to_f64(&(&frac * &s3)),
        sum_sq_means: to_f64(&sum_sq_means),
        cov_cross: to_f64(&cov),
    })
}

#[derive(Serialize)]
struct SrsInputs<'a> {
    values: &'a [u64],
    n: usize,
}

/// Bound for the standardized total of a simple random sample without replacement.
pub fn srs_bound(values: &[u64], n: usize) -> Result<BoundReport> {
    let summary = srs_moment_summary(values, n)?;
    summary.require_spread()?;
    let [_, s2, s3, cross] = srs_power_sums(values);
    let [s1, ..] = srs_power_sums(values);
    let m = values.len() as f64;
    let nf = n as f64;
    let sigma2 = summary.sigma2;
    let sigma = sigma2.sqrt();
    let s1 = to_f64(&s1);
    let inner = nf / m * s1 * s1 - (nf - 1.0) / (m - 1.0) * to_f64(&cross);
    let report = BoundReport::assemble(
        TheoremId::Srs,
        &SrsInputs { values, n },
        &[
            ("third_moment_term", to_f64(&s3) / (sigma * to_f64(&s2))),
            ("covariance_term", sqrt_8_over_pi() * nf / m / sigma2 * inner),
        ],
        &[("negative_association", summary.cov_cross <= COV_SIGN_SLACK)],
    );
    Ok(report.with_diagnostic("theta", summary.theta).with_diagnostic("sigma2", sigma2))
}

/// Moments of one summand `Y_1 = y(S_1)` of the urn statistic and the cross moment
/// `E[Y_1 Y_2]`, for `n` balls in `m` equally likely urns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UrnSummandLaw {
    /// `P(Y_1 = l)` for `l = 0, 1, ...`.
    pub pmf: Vec<f64>,
    pub mean: f64,
    pub second: f64,
    pub third: f64,
    pub cross: f64,
    pub cov: f64,
    /// `Var W`, assembled before rounding on the rational path.
    pub sigma2: f64,
    pub exact_rational: bool,
}

fn y_value(mode: CountMode, k: u64, s: u64) -> u64 {
    if s < k {
        0
    } else {
        match mode {
            CountMode::Excess => s - k + 1,
            CountMode::Urns => 1,
        }
    }
}

fn check_urn(m: u64, n: u64, k: u64) -> Result<()> {
    if m < 2 {
        return Err(Error::domain("need at least two urns"));
    }
    if k < 1 {
        return Err(Error::domain("capacity threshold k must be at least 1"));
    }
    if k > n {
        return Err(Error::Degenerate(format!("k = {k} > n = {n}: no urn can overflow, W is identically zero")));
    }
    Ok(())
}

fn binom_big(n: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn urn_rational(m: u64, n: u64, k: u64, mode: CountMode) -> UrnSummandLaw {
    let p = BigRational::new(BigInt::one(), BigInt::from(m));
    let q = BigRational::one() - &p;
    let r = BigRational::one() - &p - &p;
    let pw = |b: &BigRational, e: u64| -> BigRational {
        let mut acc = BigRational::one();
        for _ in 0..e {
            acc *= b;
        }
        acc
    };
    let top = y_value(mode, k, n) as usize;
    let mut pmf = vec![BigRational::zero(); top + 1];
    for s in 0..=n {
        let w = BigRational::from_integer(binom_big(n, s)) * pw(&p, s) * pw(&q, n - s);
        pmf[y_value(mode, k, s) as usize] += w;
    }
    let moment = |a: u32| -> BigRational {
        pmf.iter().enumerate().fold(BigRational::zero(), |acc, (l, w)| acc + w * rat((l as u64).pow(a)))
    };
    let (m1, m2, m3) = (moment(1), moment(2), moment(3));
    let mut cross = BigRational::zero();
    for i in k..=n {
        for j in k..=(n - i) {
            let coef = binom_big(n, i) * binom_big(n - i, j);
            let w = BigRational::from_integer(coef) * pw(&p, i + j) * pw(&r, n - i - j);
            cross += w * rat(y_value(mode, k, i) * y_value(mode, k, j));
        }
    }
    let cov = &cross - &m1 * &m1;
    let mr = rat(m);
    let sigma2 = &mr * (&m2 - &m1 * &m1) + &mr * (&mr - BigRational::one()) * &cov;
    UrnSummandLaw {
        pmf: pmf.iter().map(to_f64).collect(),
        mean: to_f64(&m1),
        second: to_f64(&m2),
        third: to_f64(&m3),
        cross: to_f64(&cross),
        cov: to_f64(&cov),
        sigma2: to_f64(&sigma2),
        exact_rational: true,
    }
}

fn urn_float(m: u64, n: u64, k: u64, mode: CountMode) -> UrnSummandLaw {
    let mf = m as f64;
    let (lp, lq) = (-(mf.ln()), ((mf - 1.0) / mf).ln());
    let lr = ((mf - 2.0) / mf).ln();
    let top = y_value(mode, k, n) as usize;
    let mut pmf = vec![0.0; top + 1];
    for s in 0..=n {
        let ln = ln_factorial(n) - ln_factorial(s) - ln_factorial(n - s) + s as f64 * lp + (n - s) as f64 * lq;
        pmf[y_value(mode, k, s) as usize] += ln.exp();
    }
    let moment = |a: i32| {
        let mut acc = NeumaierSum::default();
        for (l, w) in pmf.iter().enumerate() {
            acc.add(w * (l as f64).powi(a));
        }
        acc.total()
    };
    let (m1, m2, m3) = (moment(1), moment(2), moment(3));
    let mut cross = NeumaierSum::default();
    for i in k..=n {
        for j in k..=(n - i) {
            let rest = n - i - j;
            if m == 2 && rest > 0 {
                continue;
            }
            let lr_term = if rest == 0 { 0.0 } else { rest as f64 * lr };
            let ln = ln_factorial(n) - ln_factorial(i) - ln_factorial(j) - ln_factorial(rest) + (i + j) as f64 * lp + lr_term;
            cross.add((y_value(mode, k, i) * y_value(mode, k, j)) as f64 * ln.exp());
        }
    }
    let cross = cross.total();
    let cov = cross - m1 * m1;
    let sigma2 = mf * (m2 - m1 * m1) + mf * (mf - 1.0) * cov;
    UrnSummandLaw { pmf, mean: m1, second: m2, third: m3, cross, cov, sigma2, exact_rational: false }
}

/// Law and moments of one urn summand for `n` balls in `m` urns with threshold `k`.
pub fn urn_summand_law(m: u64, n: u64, k: u64, mode: CountMode) -> Result<UrnSummandLaw> {
    check_urn(m, n, k)?;
    Ok(if n <= RATIONAL_URN_MAX_N { urn_rational(m, n, k, mode) } else { urn_float(m, n, k, mode) })
}

pub fn urn_moment_summary(m: u64, n: u64, k: u64, mode: CountMode) -> Result<MomentSummary> {
    let law = urn_summand_law(m, n, k, mode)?;
    let mf = m as f64;
    Ok(MomentSummary {
        theta: mf * law.mean,
        sigma2: law.sigma2,
        sum_m1: mf * law.mean,
        sum_m2: mf * law.second,
        sum_m3: mf * law.third,
        sum_sq_means: mf * law.mean * law.mean,
        cov_cross: mf * (mf - 1.0) * law.cov,
    })
}

#[derive(Serialize)]
struct UrnInputs {
    m: u64,
    n: u64,
    k: u64,
    p: f64,
    mode: CountMode,
}

/// Bound for the standardized urn overflow statistic with equal urn probabilities `p = 1/m`.
pub fn urn_overflow_bound(m: u64, n: u64, k: u64, p: f64, mode: CountMode) -> Result<BoundReport> {
    check_urn(m, n, k)?;
    if (p - 1.0 / m as f64).abs() > 1e-12 {
        return Err(Error::domain(format!("urn probabilities must all equal 1/m = {}, got {p}", 1.0 / m as f64)));
    }
    let law = urn_summand_law(m, n, k, mode)?;
    if !(law.sigma2 > 0.0) {
        return Err(Error::Degenerate(format!("Var W = {} for m = {m}, n = {n}, k = {k}", law.sigma2)));
    }
    let mf = m as f64;
    let sigma = law.sigma2.sqrt();
    let report = BoundReport::assemble(
        TheoremId::Urn,
        &UrnInputs { m, n, k, p, mode },
        &[
            ("third_moment_term", law.third / (sigma * law.second)),
            ("covariance_term", sqrt_8_over_pi() * mf / law.sigma2 * ((1.0 - mf) * law.cov + law.mean * law.mean)),
        ],
        &[("negative_association", law.cov <= COV_SIGN_SLACK)],
    );
    Ok(report
        .with_diagnostic("mean_y1", law.mean)
        .with_diagnostic("cov_y1_y2", law.cov)
        .with_diagnostic("sigma2", law.sigma2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generic_unit_severity() {
        let r = gauss_generic_bound(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(r.value, Some(1.0));
        assert!(gauss_generic_bound(1.0, 1.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn srs_example() {
        let s = srs_moment_summary(&[1, 2, 3, 4], 2).unwrap();
        assert!((s.theta - 5.0).abs() < 1e-15);
        assert!((s.sigma2 - 5.0 / 3.0).abs() < 1e-15);
        let r = srs_bound(&[1, 2, 3, 4], 2).unwrap();
        assert!((r.component("third_moment_term") - 2.581_988_897_471_611).abs() < 1e-12);
        assert!((r.value.unwrap() - 15.348).abs() < 1e-3);
        assert!(srs_bound(&[3, 3, 3], 1).is_err());
    }

    #[test]
    fn urn_example() {
        let law = urn_summand_law(2, 3, 2, CountMode::Excess).unwrap();
        assert!((law.pmf[1] - 0.375).abs() < 1e-15);
        assert!((law.pmf[2] - 0.125).abs() < 1e-15);
        assert!((law.mean - 0.625).abs() < 1e-15);
        assert!(matches!(urn_summand_law(3, 2, 3, CountMode::Excess), Err(Error::Degenerate(_))));
    }

    #[test]
    fn urn_float_path_agrees() {
        for mode in [CountMode::Excess, CountMode::Urns] {
            let a = urn_rational(5, 20, 3, mode);
            let b = urn_float(5, 20, 3, mode);
            assert!((a.cov - b.cov).abs() < 1e-13);
            assert!((a.sigma2 - b.sigma2).abs() < 1e-11);
        }
    }
}
