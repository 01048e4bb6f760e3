use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qcond::configspace::{hop_neighbors, partition_from_threshold};
use qcond::eprmc::{sample_trajectory, transit_counters};
use qcond::exactthermo::{
    build_hamiltonian, diagonalize, thermo_point, Restriction, DEFAULT_DENSE_LIMIT,
};
use qcond::models::GroverSpec;
use qcond::phasediagram::{critical_curve, Axis, GroverFamily, PointStatus, RootOptions};
use qcond::{Configuration, ModelSpec, Partition, Potential, Side};

fn table_model(n: u32, gamma: f64, values: &[f64]) -> ModelSpec {
    let values = values[..1 << n].to_vec();
    ModelSpec::new(n, gamma, Potential::Table { values }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn thermo_relations(levels in proptest::collection::vec(-10.0f64..10.0, 1..40), beta in 0.01f64..20.0, k_b in 0.1f64..3.0) {
        let p = thermo_point(&levels, beta, k_b).unwrap();
        let t = 1.0 / (k_b * beta);
        let scale = p.free_energy.abs().max(p.internal_energy.abs()).max(1.0);
        prop_assert!((p.free_energy - (p.internal_energy - t * p.entropy)).abs() <= 1e-9 * scale);
        prop_assert!(p.entropy >= -1e-12 * k_b);
        prop_assert!(p.entropy <= k_b * (levels.len() as f64).ln() + 1e-9 * k_b);
        prop_assert!(p.specific_heat >= -1e-12);
        let e0 = levels.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(p.free_energy <= e0 + 1e-12 * e0.abs().max(1.0));
    }

    #[test]
    fn hopping_neighbours_are_single_flips(n in 1u32..=16, seed in any::<u64>()) {
        let spec = ModelSpec::new(n, 1.0, Potential::IsingChain { j: 1.0 }).unwrap();
        let c = Configuration::new(seed % (1 << n), n).unwrap();
        let nb = hop_neighbors(c, &spec);
        prop_assert_eq!(nb.len(), n as usize);
        for (i, m) in nb.iter().enumerate() {
            prop_assert_eq!(m.bits() ^ c.bits(), 1u64 << i);
        }
    }

    #[test]
    fn hamiltonian_blocks(n in 1u32..=6, gamma in 0.0f64..2.0, values in proptest::collection::vec(-3.0f64..3.0, 64), cut in 0usize..63) {
        let spec = table_model(n, gamma, &values);
        let mut sorted = values[..1 << n].to_vec();
        sorted.sort_by(f64::total_cmp);
        let p = partition_from_threshold(&spec, sorted[cut % ((1 << n) - 1)], DEFAULT_DENSE_LIMIT);
        prop_assume!(p.is_ok());
        let p = p.unwrap();
        for r in [Restriction::Full, Restriction::Cond, Restriction::Norm] {
            let h = build_hamiltonian(&spec, Some(&p), r, DEFAULT_DENSE_LIMIT).unwrap();
            let basis = h.basis().to_vec();
            for (i, &a) in basis.iter().enumerate() {
                prop_assert_eq!(h.get(i, i), spec.v(a));
                for (j, &b) in basis.iter().enumerate() {
                    prop_assert_eq!(h.get(i, j), h.get(j, i));
                    if i != j {
                        let expected = if (a ^ b).count_ones() == 1 { -gamma } else { 0.0 };
                        prop_assert_eq!(h.get(i, j), expected);
                    }
                }
            }
            let cache = diagonalize(&h, true).unwrap();
            prop_assert_eq!(cache.eigenvalues().len(), basis.len());
            prop_assert!(cache.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(cache.max_residual(&h).unwrap() <= 1e-10 * h.norm_inf().max(1.0));
        }
    }

    #[test]
    fn partition_sides_and_boundaries(n in 2u32..=8, mask in proptest::collection::vec(any::<bool>(), 256)) {
        let members: Vec<u64> = (0..1u64 << n).filter(|&b| mask[b as usize]).collect();
        let p = Partition::new(n, members.clone());
        prop_assume!(!members.is_empty() && members.len() < 1 << n);
        let p = p.unwrap();
        prop_assert_eq!(p.dim_cond() + p.dim_norm(), 1u64 << n);
        for side in [Side::Cond, Side::Norm] {
            let expected: Vec<u64> = (0..1u64 << n)
                .filter(|&b| p.side(b) == side && (0..n).any(|i| p.side(b ^ (1 << i)) != side))
                .collect();
            let got: Vec<u64> = p.boundary(side).iter().map(|&(b, _)| b).collect();
            prop_assert_eq!(&got, &expected);
            let max = p.boundary(side).iter().map(|&(_, a)| a).max().unwrap_or(0);
            prop_assert_eq!(p.max_out(side), max);
        }
    }

    #[test]
    fn trajectory_structure(n in 1u32..=6, gamma in 0.0f64..2.0, t in 0.0f64..3.0, values in proptest::collection::vec(-2.0f64..2.0, 64), seed in any::<u64>()) {
        let spec = table_model(n, gamma, &values);
        let start = Configuration::new(seed % (1 << n), n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let traj = sample_trajectory(&spec, start, t, &mut rng).unwrap();
        let mut last_time = 0.0;
        let mut prev = start;
        let mut log_w = 0.0;
        for &(s, c) in &traj.jumps {
            prop_assert!(s > last_time && s < t);
            prop_assert_eq!((c.bits() ^ prev.bits()).count_ones(), 1);
            log_w += (gamma * f64::from(n) - spec.v(prev.bits())) * (s - last_time);
            last_time = s;
            prev = c;
        }
        log_w += (gamma * f64::from(n) - spec.v(prev.bits())) * (t - last_time);
        prop_assert!((traj.log_weight - log_w).abs() <= 1e-10 * log_w.abs().max(1.0));
        prop_assert_eq!(traj.final_config(), prev);
    }

    #[test]
    fn transit_counts(n in 2u32..=6, mask in proptest::collection::vec(any::<bool>(), 64), seed in any::<u64>(), t in 0.0f64..4.0) {
        let members: Vec<u64> = (0..1u64 << n).filter(|&b| mask[b as usize]).collect();
        prop_assume!(!members.is_empty() && members.len() < 1 << n);
        let p = Partition::new(n, members).unwrap();
        let spec = ModelSpec::new(n, 1.0, Potential::Table { values: vec![0.0; 1 << n] }).unwrap();
        let start = Configuration::new(seed % (1 << n), n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let traj = sample_trajectory(&spec, start, t, &mut rng).unwrap();
        let k = transit_counters(&traj, &p);
        let crossings = traj
            .configurations()
            .collect::<Vec<_>>()
            .windows(2)
            .filter(|w| p.side(w[0].bits()) != p.side(w[1].bits()))
            .count() as u32;
        if k.k_t > 0 || k.l_t > 0 {
            prop_assert!(crossings >= 2);
        }
        prop_assert_eq!(k.k_t + k.l_t, crossings.saturating_sub(1));
        prop_assert!(k.q_t <= crossings);
    }

    #[test]
    fn curve_points_sorted_and_balanced(n in 4u32..=20, j in 0.2f64..5.0, mut sweep in proptest::collection::vec(0.0f64..1.0, 1..12)) {
        let family = GroverFamily::closed_form(n, 1.0);
        for x in sweep.iter_mut() {
            *x *= j;
        }
        let opts = RootOptions::default();
        let curve = critical_curve(&family, Axis::Gamma, j, &sweep, &opts).unwrap();
        prop_assert!(curve.points.windows(2).all(|w| w[0].sweep_value <= w[1].sweep_value));
        for pt in &curve.points {
            if let (PointStatus::Solved(_), Some(t)) = (pt.status, pt.critical_value) {
                if t > 0.0 {
                    let (fc, fnorm) = family.pair(j, pt.sweep_value, t).unwrap();
                    prop_assert!((fc - fnorm).abs() <= opts.tol * fnorm.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn generalized_grover_targets_need_distance_three(n in 3u32..=10, a in any::<u64>(), b in any::<u64>()) {
        let a = a % (1 << n);
        let b = b % (1 << n);
        prop_assume!(a != b);
        let ok = GroverSpec::with_targets(n, 1.0, 0.5, vec![a, b]).is_ok();
        prop_assert_eq!(ok, (a ^ b).count_ones() >= 3);
    }
}

#[test]
fn estimator_is_reproducible() {
    let spec = GroverSpec::new(4, 1.0, 0.5).unwrap().model().unwrap();
    let n0 = Configuration::new(0, 4).unwrap();
    let a = qcond::eprmc::estimate_diagonal(&spec, n0, 1.0, 5000, 9).unwrap();
    let b = qcond::eprmc::estimate_diagonal(&spec, n0, 1.0, 5000, 9).unwrap();
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
}
