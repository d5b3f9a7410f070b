//! The six subcommands: fit, cv, predict, simulate, pca, compare.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use nalgebra::DMatrix;

use shapespline::fit::{
    cross_validate, fit_shape_spline, information_criteria, predict_shape, procrustes_mean,
    procrustes_tangent_coordinates, tangent_pca, CvEntry, LambdaChoice, PcaResult, ShapeSplineFit,
};
use shapespline::geometry::{centroid_size, landmarks_from_reduced, to_preshape, Configuration};
use shapespline::io::{
    parse_trajectory, write_trajectory_csv, write_trajectory_json, RunManifest, Trajectory,
};
use shapespline::rolling::unroll;
use shapespline::sim::{generate_truth, perturb, NoiseSpec, SimulationSpec};
use shapespline::spline::{fit_linear_knotted, ScatterData};

use crate::args::{parse_float_list, parse_model, SharedFitArgs};
use crate::outputs::{write_table, Cell};

fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn trajectory_from_points(points: &[DMatrix<f64>], times: &[f64]) -> Result<Trajectory> {
    let frames = points
        .iter()
        .zip(times)
        .map(|(p, t)| Ok(Configuration::new(landmarks_from_reduced(p), *t)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory::new(frames, None)?)
}

fn cv_table_rows(table: &[CvEntry]) -> Vec<Vec<Cell>> {
    table
        .iter()
        .map(|e| {
            vec![
                Cell::from(e.lambda),
                e.score.map(Cell::from).unwrap_or(Cell::Empty),
                e.failure.as_deref().map(Cell::from).unwrap_or(Cell::Empty),
            ]
        })
        .collect()
}

fn tangent_header(dim: usize) -> Vec<String> {
    let mut header = vec!["series".to_string(), "time".to_string()];
    header.extend((1..=dim).map(|i| format!("c{i}")));
    header
}

fn pca_scores_rows(series: &str, times: &[f64], pca: &PcaResult) -> Vec<Vec<Cell>> {
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut row = vec![Cell::from(series), Cell::from(t)];
            for c in 0..pca.scores.ncols() {
                row.push(Cell::from(pca.scores[(i, c)]));
            }
            row
        })
        .collect()
}

/// `fit`: fit the shape spline and emit the fitted shapes, tangent-space
/// data, principal component scores and diagnostics.
pub fn cmd_fit(args: &SharedFitArgs) -> Result<()> {
    let started = Instant::now();
    prepare_output_dir(&args.output)?;
    let traj = parse_trajectory(&args.input)?;
    let configs = traj.frames().to_vec();
    let cfg = args.fit_config()?;
    let fit = fit_shape_spline(&configs, &cfg)?;

    let fit_unrolled = unroll(&fit.fitted_path, &cfg.transport)?;
    let fit_pca = tangent_pca(fit_unrolled.knot_images(), fit.fitted_path.knot(0), 3)?;
    let data_pca = tangent_pca(&fit.data_tangent, fit.base_path.knot(0), 3)?;

    let size_fit = if args.with_size {
        let times = fit.data_times.clone();
        let sizes: Vec<f64> = configs.iter().map(centroid_size).collect();
        let scatter = ScatterData::new(times, DMatrix::from_fn(sizes.len(), 1, |i, _| sizes[i]))?;
        Some((sizes, fit_linear_knotted(&scatter, 4)?))
    } else {
        None
    };

    let mut manifest = RunManifest::new("fit", args.parameters());
    manifest.seed = args.seed;
    if let LambdaChoice::CrossValidate(grid) = cfg.lambda.clone() {
        manifest.lambda_grid = Some(grid);
    }
    manifest.lambda_chosen = fit.lambda_used;
    manifest.iterations = Some(fit.iterations);
    manifest.converged = Some(fit.converged);
    manifest.displacement_history = Some(fit.displacement_history.clone());
    manifest.results = Some(serde_json::json!({
        "data_pc_proportions": data_pca.proportions,
        "fit_pc_proportions": fit_pca.proportions,
    }));
    manifest.outputs = vec![
        "fitted_shapes.csv".into(),
        "unrolled.csv".into(),
        "pc_scores.csv".into(),
        "manifest.json".into(),
    ];
    if fit.cv_table.is_some() {
        manifest.outputs.push("cv_table.csv".into());
    }
    if size_fit.is_some() {
        manifest.outputs.push("size_fit.csv".into());
    }
    let manifest = manifest.finalize(started.elapsed().as_secs_f64());
    let hash = manifest.manifest_sha256.clone().expect("finalized");

    let fitted = trajectory_from_points(fit.fitted_knots(), &fit.grid_times)?;
    write_trajectory_csv(&args.output.join("fitted_shapes.csv"), &fitted, Some(&hash))?;

    // tangent-space picture: unwrapped data and the fitted spline on the grid
    let dim = fit.base_path.knot(0).len();
    let header = tangent_header(dim);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::new();
    for (v, &t) in fit.data_tangent.iter().zip(&fit.data_times) {
        let mut row = vec![Cell::from("data"), Cell::from(t)];
        row.extend(v.iter().map(|&x| Cell::from(x)));
        rows.push(row);
    }
    let grid_values = fit.spline.evaluate_many(&fit.grid_times);
    for (i, &t) in fit.grid_times.iter().enumerate() {
        let mut row = vec![Cell::from("fit"), Cell::from(t)];
        row.extend((0..dim).map(|j| Cell::from(grid_values[(i, j)])));
        rows.push(row);
    }
    write_table(&args.output.join("unrolled.csv"), &hash, &header_refs, rows)?;

    let mut pc_rows = pca_scores_rows("data", &fit.data_times, &data_pca);
    pc_rows.extend(pca_scores_rows("fit", &fit.grid_times, &fit_pca));
    write_table(
        &args.output.join("pc_scores.csv"),
        &hash,
        &["series", "time", "pc1", "pc2", "pc3"],
        pc_rows,
    )?;

    if let Some(table) = &fit.cv_table {
        write_table(
            &args.output.join("cv_table.csv"),
            &hash,
            &["lambda", "cv", "note"],
            cv_table_rows(table),
        )?;
    }

    if let Some((sizes, spline)) = &size_fit {
        let mut rows = Vec::new();
        for (i, &t) in fit.grid_times.iter().enumerate() {
            let observed = fit
                .data_grid_indices
                .iter()
                .position(|&g| g == i)
                .map(|d| Cell::from(sizes[d]))
                .unwrap_or(Cell::Empty);
            rows.push(vec![
                Cell::from(t),
                observed,
                Cell::from(spline.evaluate(t)[0]),
            ]);
        }
        write_table(
            &args.output.join("size_fit.csv"),
            &hash,
            &["time", "observed_size", "fitted_size"],
            rows,
        )?;
    }

    manifest.write(&args.output.join("manifest.json"))?;
    println!(
        "fit: {} iterations, converged = {}, lambda = {:?}",
        fit.iterations, fit.converged, fit.lambda_used
    );
    Ok(())
}

/// `cv`: leave-one-out cross-validation table without the final fit.
pub fn cmd_cv(args: &SharedFitArgs) -> Result<()> {
    let started = Instant::now();
    prepare_output_dir(&args.output)?;
    let traj = parse_trajectory(&args.input)?;
    let cfg = args.fit_config()?;
    let grid = args.lambda_grid()?;
    let outcome = cross_validate(traj.frames(), &cfg, &grid)?;

    let mut manifest = RunManifest::new("cv", args.parameters());
    manifest.seed = args.seed;
    manifest.lambda_grid = Some(grid);
    manifest.lambda_chosen = Some(outcome.best_lambda);
    manifest.outputs = vec!["cv_table.csv".into(), "manifest.json".into()];
    let manifest = manifest.finalize(started.elapsed().as_secs_f64());
    let hash = manifest.manifest_sha256.clone().expect("finalized");

    write_table(
        &args.output.join("cv_table.csv"),
        &hash,
        &["lambda", "cv", "note"],
        cv_table_rows(&outcome.table),
    )?;
    manifest.write(&args.output.join("manifest.json"))?;
    println!("cv: best lambda = {:e}", outcome.best_lambda);
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub shared: SharedFitArgs,
    /// Comma-separated prediction times (within the fitted range)
    #[arg(long)]
    pub times: Option<String>,
    /// Insert this many equally spaced prediction times between
    /// consecutive data times
    #[arg(long)]
    pub between: Option<usize>,
}

/// `predict`: fit, then wrap spline values back at the requested times.
pub fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let started = Instant::now();
    prepare_output_dir(&args.shared.output)?;
    let traj = parse_trajectory(&args.shared.input)?;
    let cfg = args.shared.fit_config()?;
    let data_times: Vec<f64> = traj.frames().iter().map(|c| c.time()).collect();

    let mut times: Vec<f64> = match (&args.times, args.between) {
        (Some(list), None) => parse_float_list(list)?,
        (None, Some(g)) => {
            let mut out = Vec::new();
            for w in data_times.windows(2) {
                out.push(w[0]);
                for j in 1..=g {
                    out.push(w[0] + (w[1] - w[0]) * j as f64 / (g + 1) as f64);
                }
            }
            out.push(*data_times.last().expect("nonempty"));
            out
        }
        _ => bail!("predict needs exactly one of --times or --between"),
    };
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times.dedup();

    let fit = fit_shape_spline(traj.frames(), &cfg)?;
    let predictions: Vec<DMatrix<f64>> = times
        .iter()
        .map(|&t| Ok(predict_shape(&fit, t, &cfg.transport)?))
        .collect::<Result<_>>()?;

    let mut manifest = RunManifest::new("predict", args.shared.parameters());
    manifest.seed = args.shared.seed;
    manifest.lambda_chosen = fit.lambda_used;
    manifest.iterations = Some(fit.iterations);
    manifest.converged = Some(fit.converged);
    manifest.results = Some(serde_json::json!({ "times": times }));
    manifest.outputs = vec!["predictions.csv".into(), "manifest.json".into()];
    let manifest = manifest.finalize(started.elapsed().as_secs_f64());
    let hash = manifest.manifest_sha256.clone().expect("finalized");

    let out = trajectory_from_points(&predictions, &times)?;
    write_trajectory_csv(
        &args.shared.output.join("predictions.csv"),
        &out,
        Some(&hash),
    )?;
    manifest.write(&args.shared.output.join("manifest.json"))?;
    println!("predict: {} shapes written", times.len());
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Output directory
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Landmarks per configuration
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    /// Spatial dimension
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    /// Target shape distances between successive vertex shapes
    #[arg(long, default_value = "0.47,0.75,0.54")]
    pub distances: String,
    /// Interior shapes per geodesic segment
    #[arg(long = "points-per-segment", default_value_t = 4)]
    pub points_per_segment: usize,
    /// Noise family: gaussian | student-t
    #[arg(long, default_value = "gaussian")]
    pub noise: String,
    /// Noise standard deviation per landmark coordinate
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    /// Degrees of freedom for student-t noise
    #[arg(long, default_value_t = 3.0)]
    pub df: f64,
}

/// `simulate`: generate the piecewise-geodesic truth and its perturbation.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let started = Instant::now();
    prepare_output_dir(&args.output)?;
    let noise = match args.noise.as_str() {
        "gaussian" => NoiseSpec::Gaussian { sigma: args.sigma },
        "student-t" => NoiseSpec::StudentT {
            df: args.df,
            sigma: args.sigma,
        },
        other => bail!("unknown --noise `{other}` (expected gaussian or student-t)"),
    };
    let spec = SimulationSpec {
        k: args.k,
        m: args.m,
        segment_distances: parse_float_list(&args.distances)?,
        points_per_segment: args.points_per_segment,
        noise,
        seed: args.seed,
    };
    let truth = generate_truth(&spec)?;
    let data = perturb(&truth.configurations, &spec.noise, spec.seed);

    let mut manifest = RunManifest::new(
        "simulate",
        serde_json::json!({
            "spec": spec,
            "measured_distances": truth.measured_distances,
            "vertex_indices": truth.vertex_indices,
        }),
    );
    manifest.seed = Some(args.seed);
    manifest.outputs = vec![
        "truth.json".into(),
        "data.json".into(),
        "data.csv".into(),
        "manifest.json".into(),
    ];
    let manifest = manifest.finalize(started.elapsed().as_secs_f64());
    let hash = manifest.manifest_sha256.clone().expect("finalized");

    let truth_traj = Trajectory::new(truth.configurations.clone(), None)?;
    let data_traj = Trajectory::new(data, None)?;
    write_trajectory_json(&args.output.join("truth.json"), &truth_traj, Some(&hash))?;
    write_trajectory_json(&args.output.join("data.json"), &data_traj, Some(&hash))?;
    write_trajectory_csv(&args.output.join("data.csv"), &data_traj, Some(&hash))?;
    manifest.write(&args.output.join("manifest.json"))?;
    println!(
        "simulate: {} shapes (k = {}, m = {}), noise {:?}",
        truth.configurations.len(),
        args.k,
        args.m,
        spec.noise
    );
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct PcaArgs {
    /// Input trajectory file
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory
    #[arg(long)]
    pub output: PathBuf,
    /// Number of component scores to keep
    #[arg(long, default_value_t = 3)]
    pub components: usize,
}

/// `pca`: principal component scores in the Procrustes tangent space at the
/// mean shape.
pub fn cmd_pca(args: &PcaArgs) -> Result<()> {
    let started = Instant::now();
    prepare_output_dir(&args.output)?;
    let traj = parse_trajectory(&args.input)?;
    let shapes = traj
        .frames()
        .iter()
        .map(to_preshape)
        .collect::<shapespline::Result<Vec<_>>>()?;
    let times: Vec<f64> = traj.frames().iter().map(|c| c.time()).collect();
    let mean = procrustes_mean(&shapes, 100, 1e-12)?;
    let coords = procrustes_tangent_coordinates(&shapes, &mean)?;
    let pca = tangent_pca(&coords, mean.matrix(), args.components)?;

    let mut manifest = RunManifest::new(
        "pca",
        serde_json::json!({
            "input": args.input.display().to_string(),
            "components": args.components,
        }),
    );
    manifest.results = Some(serde_json::json!({ "proportions": pca.proportions }));
    manifest.outputs = vec!["pc_scores.csv".into(), "manifest.json".into()];
    let manifest = manifest.finalize(started.elapsed().as_secs_f64());
    let hash = manifest.manifest_sha256.clone().expect("finalized");

    let mut header = vec!["time".to_string()];
    header.extend((1..=pca.scores.ncols()).map(|i| format!("pc{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut row = vec![Cell::from(t)];
            for c in 0..pca.scores.ncols() {
                row.push(Cell::from(pca.scores[(i, c)]));
            }
            row
        })
        .collect();
    write_table(
        &args.output.join("pc_scores.csv"),
        &hash,
        &header_refs,
        rows,
    )?;
    manifest.write(&args.output.join("manifest.json"))?;
    println!(
        "pca: first proportions {:?}",
        pca.proportions.iter().take(3).collect::<Vec<_>>()
    );
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub shared: SharedFitArgs,
    /// Comma-separated models to compare, e.g. geodesic,linear:3,cubic
    #[arg(long, default_value = "geodesic,linear:3,linear:4,cubic")]
    pub models: String,
}

/// `compare`: fit several mean models and tabulate AIC/BIC.
pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let started = Instant::now();
    prepare_output_dir(&args.shared.output)?;
    let traj = parse_trajectory(&args.shared.input)?;
    let mut fits: Vec<ShapeSplineFit> = Vec::new();
    for name in args.models.split(',') {
        let model = parse_model(name.trim())?;
        let mut cfg = args.shared.fit_config()?;
        cfg.model = model;
        fits.push(fit_shape_spline(traj.frames(), &cfg)?);
    }
    let refs: Vec<&ShapeSplineFit> = fits.iter().collect();
    let rows_data = information_criteria(&refs)?;

    let mut manifest = RunManifest::new("compare", args.shared.parameters());
    manifest.results = Some(serde_json::json!({
        "models": rows_data.iter().map(|r| &r.model).collect::<Vec<_>>(),
        "aic": rows_data.iter().map(|r| r.aic).collect::<Vec<_>>(),
        "bic": rows_data.iter().map(|r| r.bic).collect::<Vec<_>>(),
    }));
    manifest.outputs = vec!["ic_table.csv".into(), "manifest.json".into()];
    let manifest = manifest.finalize(started.elapsed().as_secs_f64());
    let hash = manifest.manifest_sha256.clone().expect("finalized");

    let rows = rows_data
        .iter()
        .map(|r| {
            vec![
                Cell::from(r.model.clone()),
                Cell::from(r.mean_df),
                Cell::from(r.tangent_dim as f64),
                Cell::from(r.parameter_count),
                Cell::from(r.sum_log_sigma2),
                Cell::from(r.aic),
                Cell::from(r.bic),
                Cell::from(if r.interpolating { "interpolating" } else { "" }),
            ]
        })
        .collect();
    write_table(
        &args.shared.output.join("ic_table.csv"),
        &hash,
        &[
            "model",
            "mean_df",
            "tangent_dim",
            "p",
            "sum_log_sigma2",
            "aic",
            "bic",
            "note",
        ],
        rows,
    )?;
    manifest.write(&args.shared.output.join("manifest.json"))?;
    for r in &rows_data {
        println!("{}: aic = {:.1}, bic = {:.1}", r.model, r.aic, r.bic);
    }
    Ok(())
}
