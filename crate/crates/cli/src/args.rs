//! Shared flag definitions and their translation into core configurations.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use shapespline::fit::{FitConfig, LambdaChoice, Model};
use shapespline::geometry::SpaceMode;
use shapespline::transport::TransportConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Shape,
    #[value(name = "size-and-shape")]
    SizeAndShape,
}

impl From<ModeArg> for SpaceMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Shape => SpaceMode::Shape,
            ModeArg::SizeAndShape => SpaceMode::SizeAndShape,
        }
    }
}

/// Flags shared by every fitting-style command.
#[derive(Debug, Clone, Args)]
pub struct SharedFitArgs {
    /// Input trajectory file (.csv long form or .json envelope)
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory (created if missing)
    #[arg(long)]
    pub output: PathBuf,
    /// Quotient geometry to fit in
    #[arg(long, value_enum, default_value_t = ModeArg::Shape)]
    pub mode: ModeArg,
    /// Interpolation points between consecutive data times
    #[arg(long = "grid-points", default_value_t = 2)]
    pub grid_points: usize,
    /// Convergence tolerance on the maximum shape displacement
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    /// Iteration cap; unconverged fits are returned flagged
    #[arg(long = "max-iter", default_value_t = 20)]
    pub max_iter: usize,
    /// Smoothing parameter: a number, or `cv` for leave-one-out selection
    #[arg(long, default_value = "cv")]
    pub lambda: String,
    /// Candidate smoothing parameters for cross-validation
    #[arg(long = "lambda-grid", default_value = "1e-9,1e-7,1e-5,1e-3,1e-1")]
    pub lambda_grid: String,
    /// Mean model: geodesic | linear:K | cubic
    #[arg(long, default_value = "cubic")]
    pub model: String,
    /// Transport integration steps per unit arc length
    #[arg(long = "steps-per-unit", default_value_t = 200)]
    pub steps_per_unit: u32,
    /// Lower bound on integration steps per segment
    #[arg(long = "min-steps-per-segment", default_value_t = 50)]
    pub min_steps_per_segment: u32,
    /// Seed recorded in the manifest (simulation inputs only)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also fit a 4-knot linear spline to the centroid sizes
    #[arg(long = "with-size", default_value_t = false)]
    pub with_size: bool,
}

pub fn parse_model(s: &str) -> Result<Model> {
    match s {
        "geodesic" => Ok(Model::Geodesic),
        "cubic" => Ok(Model::Cubic),
        other => {
            if let Some(k) = other.strip_prefix("linear:") {
                let knots: usize = k
                    .parse()
                    .with_context(|| format!("bad knot count in --model {other}"))?;
                return Ok(Model::Linear { knots });
            }
            bail!("unknown --model `{other}` (expected geodesic, linear:K or cubic)")
        }
    }
}

pub fn parse_float_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number `{v}` in list"))
        })
        .collect()
}

impl SharedFitArgs {
    pub fn lambda_grid(&self) -> Result<Vec<f64>> {
        let grid = parse_float_list(&self.lambda_grid)?;
        if grid.is_empty() {
            bail!("--lambda-grid is empty");
        }
        Ok(grid)
    }

    pub fn lambda_choice(&self) -> Result<LambdaChoice> {
        if self.lambda == "cv" {
            Ok(LambdaChoice::CrossValidate(self.lambda_grid()?))
        } else {
            let v: f64 = self
                .lambda
                .parse()
                .with_context(|| format!("bad --lambda `{}`", self.lambda))?;
            Ok(LambdaChoice::Fixed(v))
        }
    }

    pub fn fit_config(&self) -> Result<FitConfig> {
        Ok(FitConfig {
            grid_points_between: self.grid_points,
            epsilon: self.epsilon,
            max_iterations: self.max_iter,
            lambda: self.lambda_choice()?,
            model: parse_model(&self.model)?,
            transport: TransportConfig::with_steps(self.steps_per_unit, self.min_steps_per_segment),
            mode: self.mode.into(),
        })
    }

    /// Echo of the flags for the manifest.
    pub fn parameters(&self) -> serde_json::Value {
        serde_json::json!({
            "input": self.input.display().to_string(),
            "output": self.output.display().to_string(),
            "mode": match self.mode { ModeArg::Shape => "shape", ModeArg::SizeAndShape => "size-and-shape" },
            "grid_points": self.grid_points,
            "epsilon": self.epsilon,
            "max_iter": self.max_iter,
            "lambda": self.lambda,
            "lambda_grid": self.lambda_grid,
            "model": self.model,
            "steps_per_unit": self.steps_per_unit,
            "min_steps_per_segment": self.min_steps_per_segment,
            "seed": self.seed,
            "with_size": self.with_size,
        })
    }
}
