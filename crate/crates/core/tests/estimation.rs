use kfbd::estimation::{
    bound_audit, generate, infimum_term, min_divergence_fit, prefix, rho_estimate, triangle_study, AuditConfig,
    ContaminationSpec, DependenceSpec, FitObjective, FitOptions, LocationModel, RhoOptions,
};
use kfbd::rng::seeded;
use kfbd::{Kernel, KernelFamily, RadialGenerator, RadialProfile};

// Kolmogorov distribution tail, P(K > lambda)
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_p_value(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)
}

#[test]
fn samplers_agree_with_their_distribution_functions() {
    for model in [
        LocationModel::gaussian(1.0, 1).unwrap(),
        LocationModel::laplace(0.5, 1).unwrap(),
    ] {
        let s = model.sample_iid(&[0.7], 10_000, &mut seeded(1)).unwrap();
        let p = ks_p_value(s.points().coords().to_vec(), |x| model.cdf(x, 0.7));
        assert!(p > 0.01, "{model} {p}");
    }
    // a shifted sample must be rejected
    let model = LocationModel::gaussian(1.0, 1).unwrap();
    let s = model.sample_iid(&[0.2], 10_000, &mut seeded(2)).unwrap();
    assert!(ks_p_value(s.points().coords().to_vec(), |x| model.cdf(x, 0.0)) < 0.01);
}

#[test]
fn clean_fit_recovers_the_location() {
    let model = LocationModel::gaussian(1.0, 1).unwrap();
    let kernel = Kernel::gaussian(1.0).unwrap();
    let data = generate(
        &model,
        &ContaminationSpec::none(vec![0.0]),
        &DependenceSpec::Iid,
        500,
        &mut seeded(9),
    )
    .unwrap();
    let opts = FitOptions {
        seed: 9,
        ..FitOptions::default()
    };
    for g in [RadialGenerator::square(), RadialGenerator::exp_centered()] {
        let fit = min_divergence_fit(&model, &data, &g, &kernel, &opts).unwrap();
        assert!(fit.theta_hat[0].abs() <= 0.2, "{g} {:?}", fit.theta_hat);
        let base = model
            .crn_base(opts.model_sample_size, &mut kfbd::rng::substream(opts.seed, "model"))
            .unwrap();
        let obj = FitObjective::new(&kernel, &g, &model, base, &data).unwrap();
        assert!((obj.value(&fit.theta_hat).unwrap() - fit.objective).abs() <= 1e-12);
        assert!(fit.objective <= obj.value(&[0.0]).unwrap() + 1e-3);
        let again = min_divergence_fit(&model, &data, &g, &kernel, &opts).unwrap();
        assert_eq!(fit, again);
    }
}

#[test]
fn robust_to_point_mass_contamination() {
    let model = LocationModel::gaussian(1.0, 1).unwrap();
    let kernel = Kernel::gaussian(1.0).unwrap();
    let cont = ContaminationSpec::point_mass(0.1, vec![10.0], vec![0.0]).unwrap();
    let data = generate(&model, &cont, &DependenceSpec::Iid, 500, &mut seeded(4)).unwrap();
    let fit = min_divergence_fit(
        &model,
        &data,
        &RadialGenerator::square(),
        &kernel,
        &FitOptions::default(),
    )
    .unwrap();
    assert!(fit.theta_hat[0].abs() < 0.25, "{:?}", fit.theta_hat);
    assert!(data.mean()[0] > 0.5);
}

fn rho_opts() -> RhoOptions {
    RhoOptions {
        n: 400,
        replicates: 20,
        reference_size: 2000,
        max_lag: 20,
    }
}

#[test]
fn rho_vanishes_for_iid_and_grows_with_dependence() {
    let model = LocationModel::gaussian(1.0, 1).unwrap();
    let kernel = Kernel::gaussian(1.0).unwrap();
    let cont = ContaminationSpec::none(vec![0.0]);
    let iid = rho_estimate(&kernel, &model, &cont, &DependenceSpec::Iid, &rho_opts(), 5).unwrap();
    assert!(iid.sum.abs() <= 3.0 * iid.se + 1e-3, "{iid:?}");
    let mut last = iid.sum;
    for a in [0.2, 0.5, 0.8] {
        let r = rho_estimate(
            &kernel,
            &model,
            &cont,
            &DependenceSpec::Ar1 { coefficient: a },
            &rho_opts(),
            5,
        )
        .unwrap();
        assert!(r.sum > 0.0 && r.sum > last, "{a} {r:?}");
        assert!(
            r.per_lag[0] > r.per_lag[1] && r.per_lag[1] > r.per_lag[2],
            "{a} {:?}",
            &r.per_lag[..3]
        );
        last = r.sum;
    }
}

#[test]
fn infimum_term_is_linear_in_contamination() {
    let model = LocationModel::gaussian(1.0, 1).unwrap();
    let kernel = Kernel::gaussian(1.0).unwrap();
    let eps = [0.0, 0.05, 0.1, 0.15, 0.2];
    let ys: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let c = ContaminationSpec::point_mass(e, vec![10.0], vec![0.0]).unwrap();
            infimum_term(&kernel, &model, &c, 500, 2000, 101, 3).unwrap().mmd
        })
        .collect();
    let n = eps.len() as f64;
    let (mx, my) = (eps.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = eps.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = eps.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    assert!(r2 >= 0.9 && sxy > 0.0, "{ys:?} {r2}");
}

fn audit_config(generator: RadialProfile<f64>) -> AuditConfig {
    AuditConfig {
        generator,
        kernel: KernelFamily::Gaussian { bandwidth: 1.0 },
        model: LocationModel::gaussian(1.0, 1).unwrap(),
        contamination: ContaminationSpec::none(vec![0.0]),
        dependence: DependenceSpec::Iid,
        n_grid: vec![50, 200],
        replicates: 4,
        model_sample_size: 100,
        eval_sample_size: 300,
        reference_size: 1000,
        rho: rho_opts(),
        grid_points: 41,
        grid_halfwidth: 3.0,
        seed: 2,
    }
}

#[test]
fn small_bound_audit_passes() {
    let report = bound_audit(&audit_config(RadialProfile::Square)).unwrap();
    assert!(report.pass, "{report:?}");
    assert_eq!(report.rows.len(), 2);
    for row in &report.rows {
        assert!(row.rhs >= row.rhs_mmd - 1e-12);
        assert!(row.envelope_pass);
    }
}

#[test]
fn audit_refuses_vacuous_generators() {
    let err = bound_audit(&audit_config(RadialProfile::Power { p: 3.0 })).unwrap_err();
    assert!(err.is_input(), "{err}");
    let mut cfg = audit_config(RadialProfile::Square);
    cfg.replicates = 0;
    assert!(bound_audit(&cfg).is_err());
}

#[test]
fn triangle_inequality_per_instance() {
    let model = LocationModel::gaussian(1.0, 1).unwrap();
    let kernel = Kernel::gaussian(1.0).unwrap();
    let cont = ContaminationSpec::point_mass(0.1, vec![5.0], vec![0.0]).unwrap();
    let study = triangle_study(&RadialGenerator::exp_centered(), &kernel, &model, &cont, 10, 1000, 8).unwrap();
    assert_eq!(study.violations, 0, "{study:?}");
}

#[test]
fn nested_prefixes() {
    let model = LocationModel::laplace(1.0, 1).unwrap();
    let s = generate(
        &model,
        &ContaminationSpec::none(vec![1.0]),
        &DependenceSpec::Ar1 { coefficient: 0.5 },
        20,
        &mut seeded(3),
    )
    .unwrap();
    let p = prefix(&s, 5).unwrap();
    assert_eq!(p.points().coords(), &s.points().coords()[..5]);
    assert!(prefix(&s, 21).is_err());
}
