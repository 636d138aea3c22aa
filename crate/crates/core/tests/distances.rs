use proptest::prelude::*;
use steinbounds::dist_core::{GriddedLaw, MixingLaw, TruncatedPmf};
use steinbounds::distances::*;
use steinbounds::stein_factors::{mp_stein_factors, Regime};
use steinbounds::Metric;

fn pmf_strategy(len: usize) -> impl Strategy<Value = TruncatedPmf> {
    prop::collection::vec(0.0f64..1.0, 1..=len)
        .prop_filter("some mass", |w| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|w| TruncatedPmf::from_weights(w).unwrap())
}

#[test]
fn grid_examples() {
    let a = GriddedLaw::from_atoms(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
    let u = GriddedLaw::uniform(0.0, 1.0).unwrap();
    assert!((wasserstein_grid(&a, &u).value - 0.25).abs() < 1e-12);
    assert!((kolmogorov_grid(&a, &u).value - 0.5).abs() < 1e-12);
    let h = GriddedLaw::from_atoms(&[0.0, 1.0], &[0.75, 0.25]).unwrap();
    // the two-point overflow law at n = 2
    assert!((wasserstein_grid(&h, &u).value - 0.3125).abs() < 1e-12);
}

#[test]
fn point_masses() {
    let a = TruncatedPmf::point_mass(2);
    let b = TruncatedPmf::point_mass(5);
    assert_eq!(tv_discrete(&a, &b).value, 1.0);
    assert_eq!(kolmogorov_discrete(&a, &b).value, 1.0);
    assert_eq!(wasserstein_discrete(&a, &b).value, 3.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn metric_ordering(a in pmf_strategy(12), b in pmf_strategy(12)) {
        let tv = tv_discrete(&a, &b).value;
        let k = kolmogorov_discrete(&a, &b).value;
        let w = wasserstein_discrete(&a, &b).value;
        prop_assert!(k <= tv + 1e-15);
        prop_assert!(tv <= w + 1e-15);
    }

    #[test]
    fn metric_axioms(a in pmf_strategy(10), b in pmf_strategy(10), c in pmf_strategy(10)) {
        type Dist = fn(&TruncatedPmf, &TruncatedPmf) -> DistanceResult;
        let fs: [Dist; 3] = [tv_discrete, kolmogorov_discrete, wasserstein_discrete];
        for d in fs {
            prop_assert!((d(&a, &b).value - d(&b, &a).value).abs() < 1e-14);
            prop_assert!(d(&a, &a).value <= 1e-15);
            prop_assert!(d(&a, &c).value <= d(&a, &b).value + d(&b, &c).value + 1e-14);
        }
    }

    #[test]
    fn discrete_and_grid_agree(a in pmf_strategy(8), b in pmf_strategy(8)) {
        let atoms = |p: &TruncatedPmf| {
            let (pts, ps): (Vec<f64>, Vec<f64>) =
                p.probs().iter().enumerate().filter(|(_, &x)| x > 0.0).map(|(j, &x)| (j as f64, x)).unzip();
            GriddedLaw::from_atoms(&pts, &ps).unwrap()
        };
        let (ga, gb) = (atoms(&a), atoms(&b));
        prop_assert!((wasserstein_grid(&ga, &gb).value - wasserstein_discrete(&a, &b).value).abs() < 1e-12);
        prop_assert!((kolmogorov_grid(&ga, &gb).value - kolmogorov_discrete(&a, &b).value).abs() < 1e-12);
    }

    #[test]
    fn stein_factor_caps(mean in 0.05f64..6.0, shape in 0.2f64..5.0) {
        for mixing in [MixingLaw::poisson(mean).unwrap(), MixingLaw::gamma(shape, shape / mean).unwrap()] {
            let tv = mp_stein_factors(&mixing, Metric::TotalVariation, 1e-12).unwrap();
            let k = mp_stein_factors(&mixing, Metric::Kolmogorov, 1e-12).unwrap();
            prop_assert!(k.m0 <= tv.m0 + 1e-15 && k.m1 <= tv.m1 + 1e-15);
            if let Some(g) = k.candidate(Regime::Monotone) {
                prop_assert!(g.m0 <= 1.0 && g.m1 <= 0.5);
            }
        }
    }
}
