use proptest::prelude::*;
use steinbounds::dist_core::*;
use steinbounds::distances::tv_discrete;
use steinbounds::numeric::{integrate_pieces, poisson_pmf};

// Reference values of rho from a 30-digit mpmath quadrature of the delay equation.
const RHO_REF: [(f64, f64); 6] = [
    (1.5, 0.594_534_891_891_835_6),
    (2.0, 0.306_852_819_440_054_7),
    (2.5, 0.130_319_561_832_250_75),
    (3.0, 0.048_608_388_291_131_567),
    (4.0, 0.004_910_925_647_760_832),
    (5.0, 0.000_354_724_700_456_039_7),
];

#[test]
fn rho_matches_reference() {
    for (u, want) in RHO_REF {
        let got = dickman_rho(u).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.max(1e-3), "rho({u}) = {got}, want {want}");
    }
}

#[test]
fn rho_closed_form_below_two() {
    for i in 0..=40 {
        let u = 1.0 + i as f64 / 40.0;
        assert!((dickman_rho(u).unwrap() - (1.0 - u.ln())).abs() < 1e-13);
    }
}

#[test]
fn rho_solves_delay_equation() {
    // u rho'(u) = -rho(u - 1), by central differences
    let h = 1e-5;
    for i in 0..40 {
        let u = 1.13 + 0.21 * i as f64;
        let d = (dickman_rho(u + h).unwrap() - dickman_rho(u - h).unwrap()) / (2.0 * h);
        let rhs = -dickman_rho(u - 1.0).unwrap() / u;
        assert!((d - rhs).abs() < 1e-7 * (1.0 + rhs.abs()), "u = {u}: {d} vs {rhs}");
    }
}

#[test]
fn rho_integrates_to_exp_gamma() {
    let breaks: Vec<f64> = (0..=40).map(|k| k as f64).collect();
    let q = integrate_pieces(|x| dickman_rho(x).unwrap(), &breaks, 1e-13).unwrap();
    assert!((q.value - EULER_GAMMA.exp()).abs() < 1e-10);
    // density integrates to one and has mean one
    let m1 = integrate_pieces(|x| x * dickman_density(x), &breaks, 1e-13).unwrap();
    assert!((m1.value - 1.0).abs() < 1e-10);
}

#[test]
fn rho_non_increasing() {
    let mut prev = 1.0;
    for i in 0..600 {
        let r = dickman_rho(1.0 + i as f64 * 0.025).unwrap();
        assert!(r <= prev);
        prev = r;
    }
}

#[test]
fn mixed_poisson_moments_catalog() {
    let catalog = [
        MixingLaw::point_mass(2.5).unwrap(),
        MixingLaw::poisson(1.5).unwrap(),
        MixingLaw::gamma(2.0, 1.5).unwrap(),
        MixingLaw::gamma(0.5, 0.8).unwrap(),
        MixingLaw::dickman(1.0).unwrap(),
        MixingLaw::dickman(2.0).unwrap(),
        MixingLaw::binomial(6, 0.3).unwrap(),
    ];
    for mixing in &catalog {
        let pmf = mixed_poisson_pmf(mixing, 10_000, 1e-13).unwrap();
        let (m, v) = (mixing.mean(), mixing.variance());
        assert!((pmf.mean() - m).abs() < 1e-6, "{}", mixing.descriptor());
        assert!((pmf.variance() - (m + v)).abs() < 1e-6, "{}", mixing.descriptor());
    }
}

#[test]
fn poisson_window_example() {
    let a = TruncatedPmf::poisson(1.0, 1e-16).unwrap();
    let b = TruncatedPmf::poisson(1.1, 1e-16).unwrap();
    let tv = tv_discrete(&a, &b).value;
    assert!((tv - 0.036_729_606_576_917_58).abs() < 1e-14);
}

/// Compound Poisson pmf by summing over the counts of each jump size.
fn brute_compound(rates: &[f64], top: usize) -> Vec<f64> {
    let mut pmf = vec![0.0; top + 1];
    pmf[0] = 1.0;
    for (idx, &lam) in rates.iter().enumerate() {
        let i = idx + 1;
        let mut next = vec![0.0; top + 1];
        for n in 0..=30u64 {
            let w = poisson_pmf(lam, n);
            let shift = n as usize * i;
            if shift > top {
                break;
            }
            for s in 0..=top - shift {
                next[s + shift] += w * pmf[s];
            }
        }
        pmf = next;
    }
    pmf
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn panjer_matches_enumeration(raw in prop::collection::vec(0.0f64..1.0, 1..=4), total in 0.05f64..2.0) {
        let s: f64 = raw.iter().sum::<f64>().max(1e-9);
        let rates: Vec<f64> = raw.iter().map(|r| r / s * total).collect();
        let params = CompoundPoissonParams::new(rates.clone()).unwrap();
        let pmf = compound_poisson_pmf(&params, 10_000, 1e-15).unwrap();
        let top = 40;
        let brute = brute_compound(&rates, top);
        let tv: f64 = 0.5 * (0..=top).map(|j| (pmf.get(j) - brute[j]).abs()).sum::<f64>();
        prop_assert!(tv <= 1e-9, "tv {}", tv);
    }

    #[test]
    fn pmfs_are_normalized(mean in 0.01f64..30.0) {
        let p = TruncatedPmf::poisson(mean, 1e-14).unwrap();
        let total: f64 = p.probs().iter().sum::<f64>() + p.tail_mass();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(p.probs().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn gamma_mixture_is_negative_binomial(shape in 0.3f64..4.0, rate in 0.3f64..4.0) {
        let pmf = mixed_poisson_pmf(&MixingLaw::gamma(shape, rate).unwrap(), 10_000, 1e-13).unwrap();
        let q = rate / (1.0 + rate);
        let mut want = q.powf(shape);
        for j in 0..30 {
            prop_assert!((pmf.get(j) - want).abs() < 1e-9, "j = {}: {} vs {}", j, pmf.get(j), want);
            want *= (shape + j as f64) / (j as f64 + 1.0) * (1.0 - q);
        }
    }
}
