use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist_core::{dickman_density, CompoundPoissonParams, TruncatedPmf};
use crate::error::{Error, Result};
use crate::numeric::{integrate_pieces, stable_sum, std_normal_pdf};

pub type Pdf = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real law that can be integrated against test functions.
#[derive(Clone)]
pub enum Law {
    Lattice(TruncatedPmf),
    Atoms { points: Vec<f64>, probs: Vec<f64> },
    /// Density with the listed breakpoints; the support is `[breaks[0], breaks[last]]`.
    Density { pdf: Pdf, breaks: Vec<f64> },
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Independent sum.
    Sum(Box<Law>, Box<Law>),
}

impl fmt::Debug for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Law::Lattice(p) => f.debug_tuple("Lattice").field(&p.probs().len()).finish(),
            Law::Atoms { points, .. } => f.debug_struct("Atoms").field("n", &points.len()).finish(),
            Law::Density { breaks, .. } => f.debug_struct("Density").field("breaks", &breaks.len()).finish(),
            Law::Normal { mean, sd } => f.debug_struct("Normal").field("mean", mean).field("sd", sd).finish(),
            Law::Uniform { lo, hi } => f.debug_struct("Uniform").field("lo", lo).field("hi", hi).finish(),
            Law::Sum(a, b) => f.debug_tuple("Sum").field(a).field(b).finish(),
        }
    }
}

impl Law {
    pub fn sum(a: Law, b: Law) -> Law {
        Law::Sum(Box::new(a), Box::new(b))
    }

    /// `scale * D` for `D` standard Dickman.
    pub fn dickman(scale: f64) -> Law {
        let top = crate::dist_core::rho_tail_point(1e-20) + 1;
        Law::Density {
            pdf: Arc::new(move |x| dickman_density(x / scale) / scale),
            breaks: (0..=top).map(|k| k as f64 * scale).collect(),
        }
    }

    /// `U * X2` with `X2` the square-biased version of the atoms: the
    /// generalised-zero-biased law of a discrete `X`.
    pub fn gen_zero_biased_atoms(points: &[f64], probs: &[f64]) -> Result<Law> {
        let m2 = stable_sum(points.iter().zip(probs).map(|(x, p)| p * x * x));
        if !(m2 > 0.0) {
            return Err(Error::domain("generalised zero bias needs E[X^2] > 0"));
        }
        let parts: Vec<(f64, f64)> = points
            .iter()
            .zip(probs)
            .filter(|(x, p)| **x != 0.0 && **p > 0.0)
            .map(|(&x, &p)| (x, p * x * x / m2 / x.abs()))
            .collect();
        let mut breaks: Vec<f64> = parts.iter().map(|(x, _)| *x).chain(std::iter::once(0.0)).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let pdf = move |t: f64| {
            parts
                .iter()
                .filter(|(x, _)| if *x > 0.0 { t >= 0.0 && t < *x } else { t < 0.0 && t >= *x })
                .map(|(_, h)| h)
                .sum()
        };
        Ok(Law::Density { pdf: Arc::new(pdf), breaks })
    }

    pub fn from_pmf(pmf: &TruncatedPmf) -> Law {
        Law::Lattice(pmf.clone())
    }

    fn is_discrete(&self) -> bool {
        matches!(self, Law::Lattice(_) | Law::Atoms { .. })
    }

    /// `E f(X)`.
    pub fn expect(&self, f: &dyn Fn(f64) -> f64, tol: f64) -> Result<f64> {
        self.expect_kinked(f, &[], tol)
    }

    /// `E f(X)` for `f` smooth away from `kinks`, which are added to the quadrature breaks.
    pub fn expect_kinked(&self, f: &dyn Fn(f64) -> f64, kinks: &[f64], tol: f64) -> Result<f64> {
        match self {
            Law::Lattice(p) => Ok(p.expect(f)),
            Law::Atoms { points, probs } => Ok(stable_sum(points.iter().zip(probs).map(|(&x, &p)| p * f(x)))),
            Law::Density { pdf, breaks } => {
                Ok(integrate_pieces(|x| pdf(x) * f(x), &with_kinks(breaks, kinks), tol)?.value)
            }
            Law::Normal { mean, sd } => {
                let breaks: Vec<f64> = (-12..=12).map(|k| mean + k as f64 * sd).collect();
                let q = integrate_pieces(|x| std_normal_pdf((x - mean) / sd) / sd * f(x), &with_kinks(&breaks, kinks), tol)?;
                Ok(q.value)
            }
            Law::Uniform { lo, hi } => {
                let w = hi - lo;
                Ok(integrate_pieces(f, &with_kinks(&[*lo, 0.5 * (lo + hi), *hi], kinks), tol * w)?.value / w)
            }
            Law::Sum(a, b) => {
                let (outer, inner) = if b.is_discrete() && !a.is_discrete() { (b, a) } else { (a, b) };
                // x -> E f(x + Y) bends where a kink of f meets an edge of Y
                let outer_kinks: Vec<f64> = if outer.is_discrete() {
                    Vec::new()
                } else {
                    kinks.iter().flat_map(|k| inner.edges().into_iter().map(move |e| k - e)).collect()
                };
                let failure: RefCell<Option<Error>> = RefCell::new(None);
                let v = outer.expect_kinked(
                    &|x| {
                        let shifted: Vec<f64> = kinks.iter().map(|k| k - x).collect();
                        match inner.expect_kinked(&|y| f(x + y), &shifted, tol) {
                            Ok(v) => v,
                            Err(e) => {
                                failure.borrow_mut().get_or_insert(e);
                                f64::NAN
                            }
                        }
                    },
                    &outer_kinks,
                    tol,
                )?;
                match failure.into_inner() {
                    Some(e) => Err(e),
                    None => Ok(v),
                }
            }
        }
    }

    /// Points where the density jumps or bends.
    fn edges(&self) -> Vec<f64> {
        match self {
            Law::Lattice(_) | Law::Atoms { .. } | Law::Normal { .. } | Law::Sum(..) => Vec::new(),
            Law::Density { breaks, .. } => breaks.clone(),
            Law::Uniform { lo, hi } => vec![*lo, *hi],
        }
    }
}

/// `breaks` refined by the kinks strictly inside them.
fn with_kinks(breaks: &[f64], kinks: &[f64]) -> Vec<f64> {
    let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
    let mut all: Vec<f64> = breaks.iter().copied().chain(kinks.iter().copied().filter(|k| *k > lo && *k < hi)).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

/// Test functions used by the identity oracles, with their derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFn {
    One,
    Linear,
    Square,
    Cube,
    Cos,
    ExpNeg,
    /// Linear interpolation through `(knots[i], values[i])`, constant outside.
    PiecewiseLinear { knots: Vec<f64>, values: Vec<f64> },
}

impl TestFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFn::One => 1.0,
            TestFn::Linear => x,
            TestFn::Square => x * x,
            TestFn::Cube => x * x * x,
            TestFn::Cos => x.cos(),
            TestFn::ExpNeg => (-x).exp(),
            TestFn::PiecewiseLinear { knots, values } => {
                if x <= knots[0] {
                    return values[0];
                }
                let last = knots.len() - 1;
                if x >= knots[last] {
                    return values[last];
                }
                let i = knots.partition_point(|&k| k <= x) - 1;
                let t = (x - knots[i]) / (knots[i + 1] - knots[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            TestFn::One => 0.0,
            TestFn::Linear => 1.0,
            TestFn::Square => 2.0 * x,
            TestFn::Cube => 3.0 * x * x,
            TestFn::Cos => -x.sin(),
            TestFn::ExpNeg => -(-x).exp(),
            TestFn::PiecewiseLinear { knots, values } => {
                let last = knots.len() - 1;
                if x < knots[0] || x >= knots[last] {
                    return 0.0;
                }
                let i = knots.partition_point(|&k| k <= x) - 1;
                (values[i + 1] - values[i]) / (knots[i + 1] - knots[i])
            }
        }
    }

    /// Points where the function or its derivative is not smooth.
    pub fn kinks(&self) -> &[f64] {
        match self {
            TestFn::PiecewiseLinear { knots, .. } => knots,
            _ => &[],
        }
    }

    /// `{1, x, x^2, x^3, cos x, e^{-x}}`.
    pub fn standard() -> Vec<TestFn> {
        vec![TestFn::One, TestFn::Linear, TestFn::Square, TestFn::Cube, TestFn::Cos, TestFn::ExpNeg]
    }

    /// Seeded piecewise-linear functions with 9 equally spaced knots on `[lo, hi]` and values in `[-1, 1]`.
    pub fn random_piecewise(seed: u64, count: usize, lo: f64, hi: f64) -> Vec<TestFn> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let knots: Vec<f64> = (0..9).map(|i| lo + (hi - lo) * i as f64 / 8.0).collect();
                let values = (0..9).map(|_| rng.random_range(-1.0..=1.0)).collect();
                TestFn::PiecewiseLinear { knots, values }
            })
            .collect()
    }

    /// Standard battery plus `count` seeded piecewise-linear functions.
    pub fn battery(seed: u64, count: usize, lo: f64, hi: f64) -> Vec<TestFn> {
        let mut v = Self::standard();
        v.extend(Self::random_piecewise(seed, count, lo, hi));
        v
    }
}

/// Bias transforms with their defining identities:
///
/// * size: `E f(X^s) = E[X f(X)] / E X`
/// * zero: `E f'(X^z) = E[X f(X)] / E[X^2]` for mean-zero `X`
/// * non-zero: `E f'(X^nz) = E[(X - E X) f(X)] / Var X`
/// * generalised zero: `E f'(X^gz) = E[X (f(X) - f(0))] / E[X^2]`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Size,
    Zero,
    NonZero,
    GenZero,
}

/// Largest residual of the defining identity of `transform`, with `biased` as
/// the proposed transformed law of `law`, over the test functions.
pub fn check_bias_identity(law: &Law, biased: &Law, transform: Transform, test_fns: &[TestFn], tol: f64) -> Result<f64> {
    let m1 = law.expect(&|x| x, tol)?;
    let m2 = law.expect(&|x| x * x, tol)?;
    match transform {
        Transform::Size if m1 == 0.0 => return Err(Error::domain("size bias needs E X != 0")),
        Transform::Zero if m1.abs() > 1e-9 * m2.sqrt().max(1.0) => {
            return Err(Error::domain(format!("zero bias needs E X = 0, got {m1}")))
        }
        Transform::Zero | Transform::GenZero if !(m2 > 0.0) => {
            return Err(Error::domain("zero-type bias needs E[X^2] > 0"))
        }
        Transform::NonZero if !(m2 - m1 * m1 > 0.0) => return Err(Error::domain("non-zero bias needs Var X > 0")),
        _ => {}
    }
    let var = m2 - m1 * m1;
    let mut worst: f64 = 0.0;
    for t in test_fns {
        let k = t.kinks();
        let (lhs, rhs) = match transform {
            Transform::Size => (law.expect_kinked(&|x| x * t.eval(x), k, tol)? / m1, biased.expect_kinked(&|x| t.eval(x), k, tol)?),
            Transform::Zero => (law.expect_kinked(&|x| x * t.eval(x), k, tol)? / m2, biased.expect_kinked(&|x| t.deriv(x), k, tol)?),
            Transform::NonZero => {
                (law.expect_kinked(&|x| (x - m1) * t.eval(x), k, tol)? / var, biased.expect_kinked(&|x| t.deriv(x), k, tol)?)
            }
            Transform::GenZero => {
                let f0 = t.eval(0.0);
                (law.expect_kinked(&|x| x * (t.eval(x) - f0), k, tol)? / m2, biased.expect_kinked(&|x| t.deriv(x), k, tol)?)
            }
        };
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// `|sum_i i lambda_i E f(X + i) - E[X f(X)]|` for `X` with the given pmf.
pub fn stein_characterization_residual(params: &CompoundPoissonParams, pmf: &TruncatedPmf, f: &dyn Fn(usize) -> f64) -> f64 {
    let probs = pmf.probs();
    let lhs = stable_sum(params.rates().iter().enumerate().map(|(idx, &lam)| {
        let i = idx + 1;
        i as f64 * lam * stable_sum(probs.iter().enumerate().map(|(k, &p)| p * f(k + i)))
    }));
    let rhs = stable_sum(probs.iter().enumerate().map(|(k, &p)| k as f64 * p * f(k)));
    (lhs - rhs).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_is_zero_bias_fixed_point() {
        let z = Law::Normal { mean: 0.0, sd: 1.0 };
        let r = check_bias_identity(&z, &z, Transform::Zero, &TestFn::battery(3, 4, -3.0, 3.0), 1e-12).unwrap();
        assert!(r < 1e-9, "residual {r}");
    }

    #[test]
    fn dickman_size_bias_adds_uniform() {
        let d = Law::dickman(1.0);
        let sb = Law::sum(Law::dickman(1.0), Law::Uniform { lo: 0.0, hi: 1.0 });
        let fns = [TestFn::Linear, TestFn::Square, TestFn::Cos];
        let r = check_bias_identity(&d, &sb, Transform::Size, &fns, 1e-11).unwrap();
        assert!(r < 1e-7, "residual {r}");
    }

    #[test]
    fn preconditions_are_enforced() {
        let pm = Law::Atoms { points: vec![1.0], probs: vec![1.0] };
        assert!(check_bias_identity(&pm, &pm, Transform::Zero, &TestFn::standard(), 1e-10).is_err());
        assert!(check_bias_identity(&pm, &pm, Transform::NonZero, &TestFn::standard(), 1e-10).is_err());
    }

    #[test]
    fn piecewise_linear_derivative() {
        let f = TestFn::PiecewiseLinear { knots: vec![0.0, 1.0, 3.0], values: vec![0.0, 1.0, 0.0] };
        assert_eq!(f.eval(2.0), 0.5);
        assert_eq!(f.deriv(2.0), -0.5);
        assert_eq!(f.deriv(-1.0), 0.0);
    }
}
