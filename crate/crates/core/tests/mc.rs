use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qcond::eprmc::{
    crossing_probability_report, decompose, estimate_constrained, estimate_diagonal,
    sample_trajectory, Constraint, SamplingOptions,
};
use qcond::exactthermo::{build_hamiltonian, diagonalize, Restriction, DEFAULT_DENSE_LIMIT};
use qcond::models::GroverSpec;
use qcond::{Configuration, Error, ModelSpec, Potential, Side};

fn spectral_diagonal(spec: &ModelSpec, n0: u64, t: f64) -> f64 {
    let h = build_hamiltonian(spec, None, Restriction::Full, DEFAULT_DENSE_LIMIT).unwrap();
    let cache = diagonalize(&h, true).unwrap();
    let v = cache.eigenvectors().unwrap();
    let row = h.basis().iter().position(|&b| b == n0).unwrap();
    cache
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(k, &e)| (-t * e).exp() * v[(row, k)] * v[(row, k)])
        .sum()
}

#[test]
fn jump_count_is_poisson() {
    let n = 4;
    let (gamma, t) = (0.5, 1.5);
    let spec = ModelSpec::new(
        n,
        gamma,
        Potential::Table {
            values: vec![0.0; 16],
        },
    )
    .unwrap();
    let start = Configuration::new(5, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples = 40_000;
    let counts: Vec<f64> = (0..samples)
        .map(|_| {
            sample_trajectory(&spec, start, t, &mut rng)
                .unwrap()
                .n_jumps() as f64
        })
        .collect();
    let mean = counts.iter().sum::<f64>() / samples as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    let lambda = gamma * f64::from(n) * t;
    let se = (lambda / samples as f64).sqrt();
    assert!((mean - lambda).abs() < 4.0 * se, "mean {mean} vs {lambda}");
    assert!((var / lambda - 1.0).abs() < 0.05, "var {var} vs {lambda}");
}

#[test]
fn grover_three_qubits_matches_dense() {
    let spec = GroverSpec::new(3, 1.0, 0.8).unwrap().model().unwrap();
    for (bits, seed) in [(0u64, 1u64), (7, 2), (3, 3)] {
        let exact = spectral_diagonal(&spec, bits, 1.0);
        let est = estimate_diagonal(
            &spec,
            Configuration::new(bits, 3).unwrap(),
            1.0,
            100_000,
            seed,
        )
        .unwrap();
        assert!(
            est.agrees_with(exact, 4.0),
            "{bits}: {} ± {} vs {exact}",
            est.mean,
            est.std_error
        );
    }
}

#[test]
fn decomposition_parts_add_up() {
    let g = GroverSpec::new(4, 1.0, 0.6).unwrap();
    let (spec, p) = (g.model().unwrap(), g.partition().unwrap());
    let n0 = Configuration::new(14, 4).unwrap();
    let d = decompose(&spec, &p, n0, 1.5, 20_000, 4, SamplingOptions::default()).unwrap();
    assert_eq!(d.side, Side::Norm);
    assert!(d.additive_per_trajectory);
    assert!(d.mean_additivity_residual <= 1e-12 * d.total.mean);
    assert!(d.p_some_transit > 0.0 && d.p_some_transit < 1.0);
    let exact = spectral_diagonal(&spec, 14, 1.5);
    assert!(d.total.agrees_with(exact, 4.0));

    let no = estimate_constrained(
        &spec,
        &p,
        n0,
        1.5,
        Constraint::NoTransit,
        Some(Side::Norm),
        20_000,
        4,
    )
    .unwrap();
    assert_eq!(no, d.no_transit);
    let wrong = estimate_constrained(
        &spec,
        &p,
        n0,
        1.5,
        Constraint::NoTransit,
        Some(Side::Cond),
        10,
        4,
    );
    assert!(matches!(wrong, Err(Error::WrongSide { .. })));
}

#[test]
fn crossing_bound_example() {
    let g = GroverSpec::new(6, 1.0, 0.5).unwrap();
    let (spec, p) = (g.model().unwrap(), g.partition().unwrap());
    let r = crossing_probability_report(
        &spec,
        &p,
        Side::Norm,
        2.0,
        20_000,
        6,
        SamplingOptions::default(),
    )
    .unwrap();
    assert_eq!(r.a_norm_out, 1);
    assert!((r.bound - 0.632_120_6).abs() < 1e-7);
    assert_eq!(r.boundary_size, 6);
    assert!(r.holds());
    r.check().unwrap();
}

#[test]
fn sign_problem_is_rejected() {
    let spec = ModelSpec::new(
        2,
        0.5,
        Potential::Table {
            values: vec![0.0; 4],
        },
    )
    .unwrap()
    .with_hopping(qcond::Hopping::PositiveSingleFlip);
    let c = Configuration::new(0, 2).unwrap();
    let err = estimate_diagonal(&spec, c, 1.0, 10, 0).unwrap_err();
    assert_eq!(err.code(), "eprmc.sign_problem");
}
