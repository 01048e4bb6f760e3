use qcond::exactthermo::DEFAULT_DENSE_LIMIT;
use qcond::modelfile::{ModelFile, PartitionSource};
use qcond::models::{grover_critical_gamma, GroverSpec};
use qcond::phasediagram::{
    critical_curve, dense_ground_pair, gamma_asymptote, t0_crossing, Axis, GroverFamily,
    RootOptions,
};
use qcond::{Error, Partition};

#[test]
fn critical_temperature_inverts_boundary_formula() {
    let fam = GroverFamily::<f64>::closed_form(10, 1.0);
    let t_c = fam
        .critical_temperature(1.0, 0.5, &RootOptions::default())
        .unwrap()
        .x;
    assert!((grover_critical_gamma(1.0, t_c, 1.0).unwrap() - 0.5).abs() < 1e-8);
    let err = fam
        .critical_temperature(1.0, 1.2, &RootOptions::default())
        .unwrap_err();
    assert!(matches!(err, Error::NoBracket { .. }));
}

#[test]
fn both_routes_describe_the_same_surface() {
    let opts = RootOptions::default();
    let fam = GroverFamily::closed_form(10, 1.0);
    for i in 1..=20 {
        let gamma = 0.95 * f64::from(i) / 20.0;
        let t_c = fam.critical_temperature(1.0, gamma, &opts).unwrap().x;
        let back = fam.critical_gamma(1.0, t_c, &opts).unwrap().x;
        assert!(
            (back - gamma).abs() < 1e-8,
            "Γ={gamma}: T_c={t_c}, back={back}"
        );
    }
}

#[test]
fn low_temperature_end_of_curve_meets_ground_crossing() {
    let opts = RootOptions::default();
    let n = 8;
    let fam = GroverFamily::<f64>::spectral(n, 1.0, DEFAULT_DENSE_LIMIT).unwrap();
    let t0 = t0_crossing(
        |g| Ok(fam.ground_pair(1.0, g)),
        &[0.5, 1.0, 1.5, 2.0],
        1e-12,
    )
    .unwrap();
    let curve = critical_curve(&fam, Axis::T, 1.0, &[0.0, 1e-3], &opts).unwrap();
    let low: Vec<(f64, f64)> = curve.solved().collect();
    assert_eq!(low.len(), 2);
    assert!((low[0].1 - t0.gamma_c).abs() < 1e-4);
    assert!((low[1].1 - t0.gamma_c).abs() < 1e-4);
}

#[test]
fn spectral_ground_pair_agrees_with_dense_blocks() {
    let n = 8;
    let fam = GroverFamily::<f64>::spectral(n, 1.0, DEFAULT_DENSE_LIMIT).unwrap();
    let spectral = t0_crossing(
        |g| Ok(fam.ground_pair(1.0, g)),
        &[0.5, 1.0, 1.5, 2.0],
        1e-12,
    )
    .unwrap();
    let dense = t0_crossing(
        |g| {
            let spec = GroverSpec::new(n, 1.0, g)?;
            dense_ground_pair(&spec.model()?, &spec.partition()?, DEFAULT_DENSE_LIMIT)
        },
        &[0.5, 1.0, 1.5, 2.0],
        1e-12,
    )
    .unwrap();
    assert!((spectral.gamma_c - dense.gamma_c).abs() < 1e-9);
    assert!(spectral.gamma_c > 1.0);
}

#[test]
fn finite_size_curves_approach_closed_form() {
    let opts = RootOptions::default();
    let sweep = [0.2, 0.4, 0.6, 0.8];
    let reference = critical_curve(
        &GroverFamily::closed_form(10, 1.0),
        Axis::Gamma,
        1.0,
        &sweep,
        &opts,
    )
    .unwrap();
    let mut devs = Vec::new();
    for n in [6u32, 8, 10] {
        let fam = GroverFamily::<f64>::spectral(n, 1.0, DEFAULT_DENSE_LIMIT).unwrap();
        let curve = critical_curve(&fam, Axis::Gamma, 1.0, &sweep, &opts).unwrap();
        let dev = curve
            .solved()
            .zip(reference.solved())
            .map(|(a, b)| (a.1 - b.1).abs())
            .fold(0.0, f64::max);
        devs.push(dev);
    }
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
}

#[test]
fn asymptote_tightens_with_coupling() {
    let fam = GroverFamily::closed_form(10, 1.0);
    let est = gamma_asymptote(&fam, 1.0, &[10.0, 100.0], &RootOptions::default()).unwrap();
    let dev: Vec<f64> = est
        .iter()
        .map(|e| (e.gamma_estimate * std::f64::consts::LN_2 - 1.0).abs())
        .collect();
    assert!(dev[1] < dev[0]);
    assert!(dev[1] < 0.01);
}

#[test]
fn model_file_round_trip() {
    let file =
        ModelFile::parse("model = \"grover\"\nn_qubits = 5\nJ = 2.0\ngamma = 0.3\n").unwrap();
    let (spec, p, source) = file.resolve().unwrap();
    assert_eq!(spec.n_qubits(), 5);
    assert_eq!(spec.v(31), -10.0);
    assert_eq!(p.cond_members(), &[31]);
    assert_eq!(source, PartitionSource::ModelDefault);

    let json = p.to_json();
    assert_eq!(Partition::from_json(&json).unwrap(), p);

    let err = ModelFile::parse("model = \"grover\"\nn_qubits = 5\nbogus = 1\n").unwrap_err();
    assert_eq!(err.code(), "models.parse");
}
