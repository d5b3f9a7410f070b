//! Whole-pipeline runs at realistic problem sizes.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shapespline::fit::{
    fit_shape_spline, information_criteria, predict_shape, FitConfig, LambdaChoice, Model,
};
use shapespline::geometry::{
    exp_map, landmarks_from_reduced, shape_distance, to_preshape, Configuration, HorizontalVector,
    PreShape,
};
use shapespline::sim::{
    random_preshape, random_unit_horizontal, run_simulation_study, NoiseSpec, SimulationSpec,
};
use shapespline::transport::TransportConfig;

/// A random-walk trajectory on the shape space: successive shapes at
/// prescribed distances in fresh random directions.
fn random_walk_configurations(
    seed: u64,
    k: usize,
    m: usize,
    steps: &[f64],
) -> Vec<Configuration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = random_preshape(&mut rng, k, m);
    let mut out = vec![Configuration::new(
        landmarks_from_reduced(current.matrix()),
        1.0,
    )
    .unwrap()];
    for (i, &len) in steps.iter().enumerate() {
        let dir = random_unit_horizontal(&mut rng, &current);
        let step = HorizontalVector::new(current.clone(), dir.matrix() * len).unwrap();
        current = exp_map(&current, &step).unwrap();
        out.push(
            Configuration::new(landmarks_from_reduced(current.matrix()), (i + 2) as f64).unwrap(),
        );
    }
    out
}

#[test]
fn large_landmark_trajectory_fits_and_predicts() {
    // 30 configurations of 29 landmarks in 3D with substantial shape changes
    let mut rng = ChaCha8Rng::seed_from_u64(140);
    let steps: Vec<f64> = (0..29).map(|_| 0.25 + 0.5 * rng.gen::<f64>()).collect();
    let data = random_walk_configurations(141, 29, 3, &steps);
    assert_eq!(data.len(), 30);

    let cfg = FitConfig {
        lambda: LambdaChoice::Fixed(1e-4),
        epsilon: 1e-3,
        transport: TransportConfig::with_steps(60, 15),
        ..Default::default()
    };
    let fit = fit_shape_spline(&data, &cfg).unwrap();
    assert!(fit.converged, "history: {:?}", fit.displacement_history);
    assert!(fit.iterations <= 20);

    // the near-interpolating fit stays close to the data
    let points: Vec<PreShape> = data.iter().map(|c| to_preshape(c).unwrap()).collect();
    let fitted = fit.fitted_at_data_times();
    let mean_gap: f64 = points
        .iter()
        .zip(&fitted)
        .map(|(x, f)| {
            shape_distance(x, &PreShape::from_unnormalized((*f).clone()).unwrap()).unwrap()
        })
        .sum::<f64>()
        / 30.0;
    assert!(mean_gap < 0.05, "mean fit-data gap {mean_gap}");

    // predictions between observed times stay between the neighbouring shapes
    let p = predict_shape(&fit, 22.33, &cfg.transport).unwrap();
    let p = PreShape::from_unnormalized(p).unwrap();
    let d_left = shape_distance(&p, &points[21]).unwrap();
    let d_right = shape_distance(&p, &points[22]).unwrap();
    let gap = shape_distance(&points[21], &points[22]).unwrap();
    assert!(d_left < gap && d_right < gap);

    // model comparison runs at this scale with the documented dimensions
    let geo_cfg = FitConfig {
        model: Model::Geodesic,
        ..cfg.clone()
    };
    let geo = fit_shape_spline(&data, &geo_cfg).unwrap();
    let rows = information_criteria(&[&geo, &fit]).unwrap();
    assert_eq!(rows[0].tangent_dim, 80);
    assert_eq!(rows[0].parameter_count, 240.0);
    // the wiggly trajectory is explained far better by the spline
    assert!(rows[1].aic < rows[0].aic);
}

#[test]
fn student_t_noise_study_runs_end_to_end() {
    let spec = SimulationSpec {
        noise: NoiseSpec::StudentT {
            df: 3.0,
            sigma: 0.02,
        },
        points_per_segment: 2,
        seed: 4,
        ..Default::default()
    };
    let cfg = FitConfig {
        lambda: LambdaChoice::Fixed(1e-3),
        grid_points_between: 1,
        transport: TransportConfig::with_steps(60, 15),
        ..Default::default()
    };
    let report = run_simulation_study(&spec, &cfg).unwrap();
    assert!(report.converged);
    assert_eq!(report.unrolled_data.len(), 10);
    assert_eq!(report.data_pca.scores.nrows(), 10);
    // proportions are a distribution over components
    let total: f64 = report.data_pca.proportions.iter().sum();
    assert!(total <= 1.0 + 1e-12);
    assert!(report.mean_fit_truth_distance.is_finite());
}

#[test]
fn size_and_shape_pipeline_handles_scale_trends() {
    // shapes drift along a geodesic while the size grows linearly
    let base = shapespline::sim::configurations_on_geodesic(150, 8, 3, 6, 0.8);
    let data: Vec<Configuration> = base
        .iter()
        .enumerate()
        .map(|(i, c)| {
            Configuration::new(c.landmarks() * (1.0 + 0.15 * i as f64), c.time()).unwrap()
        })
        .collect();
    let cfg = FitConfig {
        mode: shapespline::geometry::SpaceMode::SizeAndShape,
        lambda: LambdaChoice::Fixed(1e-8),
        grid_points_between: 1,
        transport: TransportConfig::with_steps(60, 15),
        ..Default::default()
    };
    let fit = fit_shape_spline(&data, &cfg).unwrap();
    assert!(fit.converged);
    // fitted sizes at interior grid times interpolate between the data sizes
    let sizes: Vec<f64> = fit.fitted_knots().iter().map(|m| m.norm()).collect();
    for w in sizes.windows(2) {
        assert!(w[1] > w[0] - 1e-3, "sizes should trend upward: {sizes:?}");
    }
    // information criteria work in size-and-shape mode too
    let rows = information_criteria(&[&fit]).unwrap();
    let expected_dim = shapespline::geometry::horizontal_dim(
        3,
        8,
        shapespline::geometry::SpaceMode::SizeAndShape,
    );
    assert_eq!(rows[0].tangent_dim, expected_dim);
}

#[test]
fn unconverged_fit_is_flagged_not_failed() {
    // a single iteration cannot reach the tolerance on wiggly data
    let mut rng = ChaCha8Rng::seed_from_u64(160);
    let steps: Vec<f64> = (0..6).map(|_| 0.4 + 0.4 * rng.gen::<f64>()).collect();
    let data = random_walk_configurations(161, 8, 3, &steps);
    let cfg = FitConfig {
        lambda: LambdaChoice::Fixed(1e-1),
        max_iterations: 1,
        epsilon: 1e-12,
        transport: TransportConfig::with_steps(40, 10),
        ..Default::default()
    };
    let fit = fit_shape_spline(&data, &cfg).unwrap();
    assert!(!fit.converged);
    assert_eq!(fit.iterations, 1);
    assert_eq!(fit.displacement_history.len(), 1);
}
