use proptest::prelude::*;
use steinbounds::biasing::*;
use steinbounds::dist_core::{mixed_poisson_pmf, MixingLaw, TruncatedPmf};
use steinbounds::distances::tv_discrete;
use steinbounds::experiments::bps_exact_pmf;
use steinbounds::numeric::poisson_pmf;

#[test]
fn steutel_increment_mean() {
    for mixing in [
        MixingLaw::poisson(0.7).unwrap(),
        MixingLaw::gamma(2.0, 0.5).unwrap(),
        MixingLaw::gamma(0.4, 3.0).unwrap(),
        MixingLaw::dickman(1.0).unwrap(),
        MixingLaw::dickman(2.5).unwrap(),
        MixingLaw::point_mass(3.0).unwrap(),
    ] {
        let inc = steutel_increment(&mixing).unwrap();
        let want = mixing.variance() / mixing.mean();
        assert!((inc.mean() - want).abs() < 1e-8, "{}: {} vs {want}", mixing.descriptor(), inc.mean());
    }
}

#[test]
fn size_bias_twice_moves_the_law() {
    let law = TruncatedPmf::from_unit_mass(vec![0.2, 0.5, 0.3]).unwrap();
    let once = size_bias_pmf(&law).unwrap();
    let twice = size_bias_pmf(&once).unwrap();
    assert!(tv_discrete(&once, &twice).value > 0.0);
    let point = TruncatedPmf::point_mass(3);
    assert!(tv_discrete(&size_bias_pmf(&point).unwrap(), &point).value < 1e-15);
}

/// `MP(xi^s) + 1` with `xi^s` built by enumeration: pick `I` uniform on `1..=n`,
/// force `B_I = 1` and keep the other Bernoulli switches.
fn sizebiased_by_construction(n: u64, c: f64, top: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut pmf = vec![0.0; top + 1];
    for i in 1..=n {
        for mask in 0u32..(1 << n) {
            if mask & (1 << (i - 1)) == 0 {
                continue;
            }
            let mut p = 1.0 / nf;
            let mut s = 0.0;
            for k in 1..=n {
                let on = mask & (1 << (k - 1)) != 0;
                if k != i {
                    p *= if on { 1.0 / k as f64 } else { 1.0 - 1.0 / k as f64 };
                }
                if on {
                    s += k as f64;
                }
            }
            for j in 1..=top {
                pmf[j] += p * poisson_pmf(c * s / nf, j as u64 - 1);
            }
        }
    }
    pmf
}

#[test]
fn bps_size_bias_structure() {
    for c in [0.5, 1.0, 2.0] {
        let w = bps_exact_pmf(3, c, 1e-15).unwrap();
        let ws = size_bias_pmf(&w).unwrap();
        let want = sizebiased_by_construction(3, c, ws.max_index());
        let tv: f64 = 0.5 * want.iter().enumerate().map(|(j, p)| (ws.get(j) - p).abs()).sum::<f64>();
        assert!(tv <= 1e-8, "c = {c}: tv {tv}");
    }
}

#[test]
fn poisson_size_bias_is_shift() {
    let p = mixed_poisson_pmf(&MixingLaw::point_mass(2.0).unwrap(), 10_000, 1e-15).unwrap();
    let s = size_bias_pmf(&p).unwrap();
    assert!(tv_discrete(&s, &p.shift(1)).value < 1e-12);
}

#[test]
fn stein_residual_catalog() {
    for mixing in [MixingLaw::poisson(1.2).unwrap(), MixingLaw::gamma(1.5, 2.0).unwrap(), MixingLaw::dickman(1.0).unwrap()] {
        let inc = steutel_increment(&mixing).unwrap();
        let params = steinbounds::dist_core::mp_cp_params(&mixing, &inc, 60).unwrap();
        let x = steinbounds::dist_core::compound_poisson_pmf(&params, 10_000, 1e-16).unwrap();
        for shift in 0..5 {
            let f = |k: usize| ((k + shift) as f64 * 0.7).sin();
            assert!(stein_characterization_residual(&params, &x, &f) < 1e-8);
        }
    }
}

#[test]
fn gaussian_fixed_point_with_kinked_functions() {
    let n = Law::Normal { mean: 0.0, sd: 1.0 };
    let fns = TestFn::battery(5, 4, -3.0, 3.0);
    assert!(check_bias_identity(&n, &n, Transform::Zero, &fns, 1e-12).unwrap() < 1e-9);
}

#[test]
fn exponential_size_bias_is_gamma_two() {
    let exp = Law::Density { pdf: std::sync::Arc::new(|x: f64| (-x).exp()), breaks: (0..=60).map(f64::from).collect() };
    let g2 = Law::sum(exp.clone(), exp.clone());
    let fns = TestFn::battery(9, 4, 0.0, 5.0);
    assert!(check_bias_identity(&exp, &g2, Transform::Size, &fns, 1e-12).unwrap() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn size_bias_identity_on_pmfs(raw in prop::collection::vec(0.01f64..1.0, 2..8), j in 0usize..6) {
        let law = TruncatedPmf::from_weights(raw).unwrap();
        let sb = size_bias_pmf(&law).unwrap();
        let f = |x: f64| (x * 1.3 + j as f64).cos();
        let lhs = law.expect(|x| x * f(x)) / law.mean();
        prop_assert!((lhs - sb.expect(f)).abs() < 1e-12);
    }

    #[test]
    fn two_point_zero_bias(a in 0.2f64..3.0, b in 0.2f64..3.0) {
        // mean zero law on {-a, b}
        let (pts, ps) = (vec![-a, b], vec![b / (a + b), a / (a + b)]);
        let law = Law::Atoms { points: pts.clone(), probs: ps.clone() };
        let z = Law::gen_zero_biased_atoms(&pts, &ps).unwrap();
        let r = check_bias_identity(&law, &z, Transform::Zero, &TestFn::standard(), 1e-12).unwrap();
        prop_assert!(r < 1e-9);
    }
}
