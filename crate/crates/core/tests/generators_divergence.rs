use kfbd::divergence::{
    deformed_divergence, operator_g_divergence, sandwich_check, OperatorG, QuadratureGrid, ScalarMap,
};
use kfbd::rng::{seeded, StdRng};
use kfbd::{embed, mmd_sq_biased, Kernel, PointCloud, RadialGenerator, SampleSet};
use proptest::prelude::*;
use rand::RngExt;

fn profiles() -> Vec<RadialGenerator> {
    vec![
        RadialGenerator::square(),
        RadialGenerator::exp_centered(),
        RadialGenerator::logcosh(),
        RadialGenerator::sqrtplus(),
        RadialGenerator::quartic(0.3).unwrap(),
        RadialGenerator::power(3.0).unwrap(),
    ]
}

fn random_set(rng: &mut StdRng, dim: usize, max_n: usize) -> SampleSet {
    let n = rng.random_range(1..=max_n);
    let spread = rng.random_range(0.1..3.0);
    let coords = (0..n * dim).map(|_| rng.random_range(-spread..spread)).collect();
    let weights = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    SampleSet::normalized(PointCloud::from_flat(dim, coords).unwrap(), weights).unwrap()
}

fn random_kernel(rng: &mut StdRng) -> Kernel {
    let w = rng.random_range(0.3..2.0);
    match rng.random_range(0..3) {
        0 => Kernel::gaussian(w),
        1 => Kernel::laplace(w),
        _ => Kernel::inverse_multiquadric(w),
    }
    .unwrap()
}

#[test]
fn finite_differences_match_derivatives() {
    let h = 1e-5;
    for g in profiles() {
        for i in 1..=50 {
            let r = 0.1 * i as f64;
            let d1 = (g.phi(r + h) - g.phi(r - h)) / (2.0 * h);
            let d2 = (g.dphi(r + h) - g.dphi(r - h)) / (2.0 * h);
            assert!(
                (d1 - g.dphi(r)).abs() <= 1e-6 * g.dphi(r).abs().max(1.0),
                "{} {r}",
                g.name()
            );
            assert!(
                (d2 - g.d2phi(r)).abs() <= 1e-6 * g.d2phi(r).abs().max(1.0),
                "{} {r}",
                g.name()
            );
        }
    }
}

#[test]
fn constants_bracket_both_eigenvalues_and_profiles_are_convex() {
    let mut rng = seeded(5);
    for g in profiles() {
        let c = g.sandwich_constants(1.0).unwrap();
        for _ in 0..1000 {
            let r: f64 = rng.random_range(0.0..=1.0);
            for lam in [g.lambda_par(r), g.lambda_perp(r)] {
                assert!(
                    c.curvature_min - 1e-12 <= lam && lam <= c.curvature_max + 1e-12,
                    "{} {r}",
                    g.name()
                );
            }
            let (a, b, t): (f64, f64, f64) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0), rng.random());
            let mid = g.phi(t * a + (1.0 - t) * b);
            assert!(mid <= t * g.phi(a) + (1.0 - t) * g.phi(b) + 1e-12, "{}", g.name());
        }
    }
}

#[test]
fn numeric_constants_agree_with_closed_forms() {
    for g in profiles() {
        for radius in [0.5, 1.0, 2.0] {
            let (a, b) = (
                g.sandwich_constants(radius).unwrap(),
                g.sandwich_constants_numeric(radius).unwrap(),
            );
            assert!(
                (a.curvature_min - b.curvature_min).abs() <= 1e-8,
                "{} {radius}",
                g.name()
            );
            assert!(
                (a.curvature_max - b.curvature_max).abs() <= 1e-8,
                "{} {radius}",
                g.name()
            );
        }
    }
}

#[test]
fn square_profile_is_the_biased_mmd() {
    let mut rng = seeded(17);
    let g = RadialGenerator::square();
    for _ in 0..1000 {
        let dim = rng.random_range(1..=3);
        let k = random_kernel(&mut rng);
        let (p, q) = (random_set(&mut rng, dim, 100), random_set(&mut rng, dim, 100));
        let (ep, eq) = (embed(&k, &p), embed(&k, &q));
        let d = deformed_divergence(&g, &ep, &eq).unwrap();
        assert!((d.value - mmd_sq_biased(&ep, &eq).unwrap()).abs() <= 1e-12);
        assert_eq!(d.lower, d.upper);
    }
}

#[test]
fn quartic_is_square_plus_scaled_power_four() {
    let mut rng = seeded(23);
    let lambda = 0.7;
    let (quartic, power4) = (
        RadialGenerator::quartic(lambda).unwrap(),
        RadialGenerator::power(4.0).unwrap(),
    );
    for _ in 0..200 {
        let k = random_kernel(&mut rng);
        let (p, q) = (random_set(&mut rng, 2, 20), random_set(&mut rng, 2, 20));
        let (ep, eq) = (embed(&k, &p), embed(&k, &q));
        let sq = mmd_sq_biased(&ep, &eq).unwrap();
        let lhs = deformed_divergence(&quartic, &ep, &eq).unwrap().value;
        let rhs = sq + lambda * deformed_divergence(&power4, &ep, &eq).unwrap().value;
        assert!((lhs - rhs).abs() <= 1e-12, "{lhs} {rhs}");
    }
}

#[test]
fn non_quadratic_profiles_are_asymmetric() {
    let k = Kernel::gaussian(1.0).unwrap();
    let p = SampleSet::from_scalars(&[0.0]).unwrap();
    let q = SampleSet::from_scalars(&[0.0, 3.0]).unwrap();
    let (ep, eq) = (embed(&k, &p), embed(&k, &q));
    for g in profiles().into_iter().filter(|g| !g.is_quadratic()) {
        let fwd = deformed_divergence(&g, &ep, &eq).unwrap().value;
        let bwd = deformed_divergence(&g, &eq, &ep).unwrap().value;
        assert!((fwd - bwd).abs() > 1e-6, "{}", g.name());
    }
}

#[test]
fn sandwich_holds_on_random_pairs() {
    let mut rng = seeded(29);
    for g in profiles() {
        for _ in 0..1000 {
            let dim = rng.random_range(1..=3);
            let k = random_kernel(&mut rng);
            let (p, q) = (random_set(&mut rng, dim, 20), random_set(&mut rng, dim, 20));
            let (ep, eq) = (embed(&k, &p), embed(&k, &q));
            let s = sandwich_check(&g, &ep, &eq).unwrap();
            assert!(s.ok, "{} {:?}", g.name(), s);
            assert!(s.value >= -1e-10);
            assert!(deformed_divergence(&g, &ep, &eq).unwrap().within_bounds());
        }
    }
}

fn mixture_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    let v = || prop::collection::vec(-2.0f64..2.0, 1..8);
    (v(), v(), v(), 0.0f64..1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn convex_in_the_first_argument((a, b, c, t) in mixture_strategy()) {
        let k = Kernel::gaussian(0.8).unwrap();
        let (a, b, c) = (
            SampleSet::from_scalars(&a).unwrap(),
            SampleSet::from_scalars(&b).unwrap(),
            SampleSet::from_scalars(&c).unwrap(),
        );
        let mix = SampleSet::mixture(&a, t, &b).unwrap();
        let ec = embed(&k, &c);
        for g in profiles() {
            let d = |s: &SampleSet| deformed_divergence(&g, &embed(&k, s), &ec).unwrap().value;
            prop_assert!(d(&mix) <= t * d(&a) + (1.0 - t) * d(&b) + 1e-12);
        }
    }

    #[test]
    fn identity_of_indiscernibles(a in prop::collection::vec(-2.0f64..2.0, 1..10)) {
        let k = Kernel::laplace(1.0).unwrap();
        let p = SampleSet::from_scalars(&a).unwrap();
        let ep = embed(&k, &p);
        for g in profiles() {
            prop_assert!(deformed_divergence(&g, &ep, &ep).unwrap().value.abs() <= 1e-12);
        }
    }
}

#[test]
fn operator_reductions() {
    let mut rng = seeded(31);
    for _ in 0..100 {
        let k = random_kernel(&mut rng);
        let (p, q) = (random_set(&mut rng, 2, 15), random_set(&mut rng, 2, 15));
        let (ep, eq) = (embed(&k, &p), embed(&k, &q));
        let mmd = mmd_sq_biased(&ep, &eq).unwrap();
        let id = operator_g_divergence(&OperatorG::Identity, &k, &p, &q).unwrap();
        assert!((id - mmd).abs() <= 1e-12);
        let one = operator_g_divergence(&OperatorG::Deformed(ScalarMap::Constant(1.0)), &k, &p, &q).unwrap();
        assert!((one - mmd).abs() <= 1e-12);
        for g in profiles() {
            let op = OperatorG::Deformed(ScalarMap::RadialQuotient(g));
            let got = operator_g_divergence(&op, &k, &p, &q).unwrap();
            let want = deformed_divergence(&g, &ep, &eq).unwrap().value;
            assert!((got - want).abs() <= 1e-10, "{} {got} {want}", g.name());
        }
    }
}

// Bregman divergence of u -> int log(u(x)) u(x) dx on a dense trapezoid grid
fn dense_grid_oracle(k: &Kernel, p: &SampleSet, q: &SampleSet, lo: f64, hi: f64, n: usize) -> f64 {
    let (ep, eq) = (embed(k, p), embed(k, q));
    let h = (hi - lo) / (n - 1) as f64;
    let mut total = 0.0;
    for i in 0..n {
        let x = lo + h * i as f64;
        let w = if i == 0 || i == n - 1 { h / 2.0 } else { h };
        let (up, uq) = (ep.eval_at(&[x]).unwrap(), eq.eval_at(&[x]).unwrap());
        let grad = uq.ln() + 1.0;
        total += w * (up * up.ln() - uq * uq.ln() - grad * (up - uq));
    }
    total
}

#[test]
fn pointwise_log_matches_dense_grid_oracle() {
    let k = Kernel::gaussian(1.0).unwrap();
    let cases = [
        (vec![0.0, 0.5, 1.0], vec![0.2, 1.5]),
        (vec![-1.0, 0.3], vec![0.0, 0.4, 0.9, 2.0]),
        (vec![0.0], vec![1.0]),
    ];
    for (a, b) in cases {
        let (p, q) = (
            SampleSet::from_scalars(&a).unwrap(),
            SampleSet::from_scalars(&b).unwrap(),
        );
        let grid = QuadratureGrid::covering(&p, &q, 3.0 * k.width(), 2001).unwrap();
        let op = OperatorG::Pointwise {
            sigma: ScalarMap::Log,
            grid,
        };
        let got = operator_g_divergence(&op, &k, &p, &q).unwrap();
        let want = dense_grid_oracle(&k, &p, &q, grid.lo, grid.hi, 10_000);
        assert!((got - want).abs() <= 1e-4, "{got} {want}");
        assert!(got > 0.0);
        let same = operator_g_divergence(&op, &k, &p, &p).unwrap();
        assert!(same.abs() <= 1e-12);
    }
}
