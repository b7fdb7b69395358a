mod common;

use proptest::prelude::*;
use vnlkit::curriculum::{build_schedule, pacing, rank_part, CurriculumConfig, DataPart};
use vnlkit::sphere::{make_noisy_sphere, sphere_experiment, SphereExpConfig};
use vnlkit::{Error, SamplingConstraints};

proptest! {
    #[test]
    fn pacing_is_monotone_and_bounded(p in 0.01f64..=1.0, n in 1usize..5000, k in 0usize..200) {
        let a = pacing(k, p, n);
        prop_assert!(a >= 1 && a <= n);
        prop_assert!(pacing(k + 1, p, n) >= a);
        if (k + 1) as f64 * p >= 1.0 {
            prop_assert_eq!(a, n);
        }
    }

    #[test]
    fn batches_come_from_the_prefix(
        scores in prop::collection::vec(-5.0f64..5.0, 2..80),
        p in 0.05f64..=1.0,
        seed in any::<u64>(),
    ) {
        let part = DataPart::new("a", scores).unwrap();
        let cfg = CurriculumConfig { p: vec![p], step_length: 2, batch_per_part: 1, total_iterations: 30, seed };
        let sched = build_schedule(std::slice::from_ref(&part), &cfg).unwrap();
        let ranking = rank_part(&part);
        for it in &sched.iterations {
            let size = it.subset_sizes[0];
            prop_assert_eq!(size, pacing(it.step, p, part.n_samples()));
            prop_assert!(it.batch[0].iter().all(|i| ranking[..size].contains(i)));
        }
    }
}

#[test]
fn reversed_part_starts_from_the_hardest() {
    let part = DataPart::new("a", vec![0.1, 0.9, 0.5, 0.7]).unwrap();
    assert_eq!(rank_part(&part), vec![0, 2, 3, 1]);
    assert_eq!(rank_part(&part.reversed()), vec![1, 3, 2, 0]);
    let cfg = CurriculumConfig { p: vec![0.25], step_length: 1, batch_per_part: 1, total_iterations: 1, seed: 3 };
    let sched = build_schedule(&[part.reversed()], &cfg).unwrap();
    assert_eq!(sched.iterations[0].batch[0], vec![1]);
}

#[test]
fn schedule_rejects_bad_configs() {
    let part = DataPart::new("a", vec![0.0; 10]).unwrap();
    let base = CurriculumConfig { p: vec![0.2], step_length: 1, batch_per_part: 2, total_iterations: 3, seed: 0 };
    assert!(build_schedule(std::slice::from_ref(&part), &base).is_ok());
    for cfg in [
        CurriculumConfig { p: vec![0.0], ..base.clone() },
        CurriculumConfig { p: vec![1.5], ..base.clone() },
        CurriculumConfig { p: vec![0.2, 0.2], ..base.clone() },
        CurriculumConfig { batch_per_part: 3, ..base.clone() },
        CurriculumConfig { step_length: 0, ..base.clone() },
    ] {
        assert!(matches!(build_schedule(std::slice::from_ref(&part), &cfg), Err(Error::Config(_))), "{cfg:?}");
    }
    assert!(DataPart::new("e", vec![]).is_err());
}

fn small_config(seed: u64) -> SphereExpConfig {
    SphereExpConfig {
        n_points: 4000,
        n_vn_groups: 5000,
        n_sn_points: 3000,
        sigmas: vec![0.0, 0.001, 0.01],
        vn_constraints: SamplingConstraints { n_samples: 5000, theta: 0.5, ..Default::default() },
        seed,
        ..Default::default()
    }
}

#[test]
fn sphere_radius_does_not_change_angles() {
    let base = sphere_experiment(&small_config(2)).unwrap();
    for radius in [0.01, 3.0, 250.0] {
        let rows = sphere_experiment(&SphereExpConfig { radius, ..small_config(2) }).unwrap();
        for (a, b) in base.iter().zip(&rows) {
            assert_eq!(a.sigma, b.sigma);
            assert!((a.vn_mean_deg - b.vn_mean_deg).abs() < 1e-9, "radius {radius}: {a:?} vs {b:?}");
            assert!((a.sn_mean_deg - b.sn_mean_deg).abs() < 1e-9, "radius {radius}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn sphere_rows_are_sorted_and_deterministic() {
    let cfg = SphereExpConfig { sigmas: vec![0.01, 0.0, 0.001], ..small_config(5) };
    let rows = sphere_experiment(&cfg).unwrap();
    assert_eq!(rows.iter().map(|r| r.sigma).collect::<Vec<_>>(), vec![0.0, 0.001, 0.01]);
    assert_eq!(rows, sphere_experiment(&cfg).unwrap());
}

#[test]
fn noisy_sphere_points_lie_near_the_surface() {
    let (ideal, noisy) = make_noisy_sphere(2000, 0.01, 1).unwrap();
    assert!(ideal.points.iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
    let mean_dev = noisy.points.iter().zip(&ideal.points).map(|(a, b)| (a - b).norm()).sum::<f64>() / 2000.0;
    // mean length of an isotropic 3D Gaussian is sigma * sqrt(8 / pi)
    assert!((mean_dev / 0.01 - (8.0 / std::f64::consts::PI).sqrt()).abs() < 0.05, "{mean_dev}");
}
