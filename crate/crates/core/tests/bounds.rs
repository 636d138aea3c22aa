use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use steinbounds::bounds::*;
use steinbounds::dist_core::{GriddedLaw, MixingLaw};
use steinbounds::experiments::*;
use steinbounds::{Error, Metric};

fn sum_of_components(r: &BoundReport) -> f64 {
    r.components.values().sum()
}

#[test]
fn student_t_examples() {
    assert!((student_t_bound(8.0).unwrap().value.unwrap() - 0.5).abs() < 1e-12);
    assert!((student_t_fourth_moment(8.0).unwrap() - 4.5).abs() < 1e-12);
    assert!(matches!(student_t_bound(4.0), Err(Error::Domain(_))));
}

#[test]
fn dickman_example() {
    let r = dickman_bound(12, 1.0, Metric::TotalVariation).unwrap();
    assert!((r.value.unwrap() - 5.0 / 24.0).abs() < 1e-12);
    // the exact increment pipeline is sharper
    assert!(r.diagnostics["exact_increment_value"] <= r.value.unwrap());
    for n in [4, 16, 64] {
        let v = dickman_bound(n, 1.0, Metric::Kolmogorov).unwrap().value.unwrap();
        assert!((v - 2.5 / n as f64).abs() < 1e-12);
    }
}

#[test]
fn dickman_factor_regimes() {
    // beta = c e^{-c} <= 1/e, so the min always picks 1
    for c in [0.1, 0.5, 1.0, 2.0, 5.0] {
        assert_eq!(dickman_proposition_factor(c).unwrap(), 1.0);
    }
}

#[test]
fn harmonic_exact_parts() {
    for n in 2..=200u64 {
        let (a, b) = harmonic_decomposition(n).unwrap();
        assert_eq!(a, BigRational::new(1.into(), (2 * n).into()));
        let d = overflow_harmonic_dw(n).unwrap();
        assert!(d <= a.to_f64().unwrap() + b.to_f64().unwrap() + 1e-15);
        let r = harmonic_bound(n).unwrap();
        assert!((r.value.unwrap() - 2.5 / n as f64).abs() < 1e-15);
        assert!(d <= r.value.unwrap());
    }
}

#[test]
fn srs_example() {
    let r = srs_bound(&[1, 2, 3, 4], 2).unwrap();
    assert!((r.value.unwrap() - 15.348).abs() < 1e-3);
    assert!((r.component("third_moment_term") - 2.581_988_897_471_6).abs() < 1e-10);
    let (law, m) = srs_exact_law(&[1, 2, 3, 4], 2).unwrap();
    assert!((law.variance() - 5.0 / 3.0).abs() < 1e-13);
    assert!((m.sigma2 - 5.0 / 3.0).abs() < 1e-13);
}

#[test]
fn urn_examples() {
    let y = urn_summand_law(2, 3, 2, CountMode::Excess).unwrap();
    assert!((y.mean - 0.625).abs() < 1e-15);
    let p = urn_exact_pmf(2, 3, 2, CountMode::Excess).unwrap();
    assert!((p.get(1) - 0.75).abs() < 1e-15 && (p.get(2) - 0.25).abs() < 1e-15);
    assert!(matches!(urn_overflow_bound(3, 6, 2, 0.4, CountMode::Excess), Err(Error::Domain(_))));
    assert!(matches!(urn_overflow_bound(3, 2, 3, 1.0 / 3.0, CountMode::Excess), Err(Error::Degenerate(_))));
}

#[test]
fn bps_two_summands() {
    let p = bps_exact_pmf(2, 1.0, 1e-15).unwrap();
    let want = 0.5 * ((-0.5f64).exp() + (-1.5f64).exp());
    assert!((p.get(0) - want).abs() < 1e-15);
    let one = bps_exact_pmf(1, 1.7, 1e-15).unwrap();
    assert!((one.get(2) - 1.7f64.powi(2) / 2.0 * (-1.7f64).exp()).abs() < 1e-15);
}

#[test]
fn moment_matched_example() {
    // Poisson(1) against a point mass at 1: first moments agree
    let w = MixingLaw::poisson(1.0).unwrap();
    let z = MixingLaw::point_mass(1.0).unwrap();
    let r = moment_matched_mp_bound(&w, &z, 1, None, Metric::Wasserstein).unwrap();
    assert!(r.is_applicable());
    assert!((r.value.unwrap() - r.diagnostics["coupling_moment"]).abs() < 1e-12);
}

#[test]
fn mp_swap_gives_valid_bounds() {
    let a = MixingLaw::gamma(2.0, 2.0).unwrap();
    let b = MixingLaw::gamma(3.0, 3.0).unwrap();
    let ab = mp_distance_bound(&a, &b, Metric::TotalVariation, 1e-10).unwrap();
    let ba = mp_distance_bound(&b, &a, Metric::TotalVariation, 1e-10).unwrap();
    let pa = steinbounds::dist_core::mixed_poisson_pmf(&a, 10_000, 1e-13).unwrap();
    let pb = steinbounds::dist_core::mixed_poisson_pmf(&b, 10_000, 1e-13).unwrap();
    let truth = steinbounds::distances::tv_discrete(&pa, &pb).value;
    assert!(truth <= ab.value.unwrap() && truth <= ba.value.unwrap());
}

#[test]
fn binomial_is_not_infinitely_divisible() {
    let w = MixingLaw::binomial(5, 0.4).unwrap();
    let z = MixingLaw::poisson(2.0).unwrap();
    let r = mp_distance_bound(&w, &z, Metric::TotalVariation, 1e-10).unwrap();
    assert!(!r.is_applicable());
    assert!(r.value.is_none() && !r.components.is_empty());
}

#[test]
fn srs_law_invariant_under_permutation() {
    let v = [3u64, 0, 7, 7, 2, 9];
    let mut rev = v;
    rev.reverse();
    for n in 1..v.len() {
        let (a, _) = srs_exact_law(&v, n).unwrap();
        let (b, _) = srs_exact_law(&rev, n).unwrap();
        assert_eq!(a.atoms(), b.atoms());
    }
}

fn srs_values() -> impl Strategy<Value = (Vec<u64>, usize)> {
    prop::collection::vec(0u64..20, 3..=8)
        .prop_filter("not constant", |v| v.iter().any(|x| *x != v[0]))
        .prop_flat_map(|v| {
            let m = v.len();
            (Just(v), 1..m)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn value_is_sum_of_components((v, n) in srs_values()) {
        let r = srs_bound(&v, n).unwrap();
        prop_assert!((r.value.unwrap() - sum_of_components(&r)).abs() <= 1e-12 * r.value.unwrap());
    }

    #[test]
    fn srs_sigma2_matches_enumeration((v, n) in srs_values()) {
        let (law, m) = srs_exact_law(&v, n).unwrap();
        prop_assert!((law.variance() - m.sigma2).abs() <= 1e-9 * (1.0 + m.sigma2));
        prop_assert!(m.cov_cross <= 1e-12);
    }

    #[test]
    fn associated_and_negatively_associated_agree_when_independent(
        ms in prop::collection::vec((0.0f64..2.0, 0.1f64..1.0), 2..10)
    ) {
        // Bernoulli-type summands y * Bern(q)
        let moments: Vec<(f64, f64, f64)> = ms.iter().map(|&(y, q)| (y * q, y * y * q, y * y * y * q)).collect();
        prop_assume!(moments.iter().any(|m| m.1 - m.0 * m.0 > 1e-6));
        let s = MomentSummary::independent(&moments).unwrap();
        let a = clt_assoc_bound(&s).unwrap().value.unwrap();
        let b = clt_neg_assoc_bound(&s).unwrap().value.unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn third_moment_composes_with_t(dof in 4.001f64..1e6) {
        let m4 = student_t_fourth_moment(dof).unwrap();
        let via = third_moment_bound(m4, 1.0).unwrap().value.unwrap();
        let direct = student_t_bound(dof).unwrap().value.unwrap();
        prop_assert!((via - direct).abs() <= 1e-9 * direct.max(1e-12));
    }

    #[test]
    fn urn_summands_negatively_correlated(m in 2u64..=6, n in 1u64..=12, k in 1u64..=4) {
        prop_assume!(k <= n);
        for mode in [CountMode::Excess, CountMode::Urns] {
            let y = urn_summand_law(m, n, k, mode).unwrap();
            prop_assert!(y.cov <= 1e-12, "cov {}", y.cov);
        }
    }

    #[test]
    fn urn_mean_matches_summands(m in 2u64..=5, n in 1u64..=9, k in 1u64..=3) {
        prop_assume!(k <= n);
        let p = urn_exact_pmf(m, n, k, CountMode::Excess).unwrap();
        let y = urn_summand_law(m, n, k, CountMode::Excess).unwrap();
        prop_assert!((p.mean() - m as f64 * y.mean).abs() < 1e-12);
        prop_assert!((p.variance() - y.sigma2).abs() < 1e-9);
    }

    #[test]
    fn bps_mean_is_c(n in 1u64..=14, c in 0.1f64..3.0) {
        let p = bps_exact_pmf(n, c, 1e-14).unwrap();
        prop_assert!((p.mean() - c).abs() < 1e-9);
    }
}

#[test]
fn harmonic_law_is_a_law() {
    let law: GriddedLaw = harmonic_increment_law(7).unwrap();
    assert!((law.cdf(1.0) - 1.0).abs() < 1e-15);
}
