//! Trajectory file formats (long-form CSV and a JSON envelope) and the run
//! manifest that makes every output reproducible.
//!
//! CSV numbers are written with 17 significant digits and JSON numbers with
//! the shortest exact representation, so both encodings round-trip `f64`
//! values bit-identically.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::Configuration;

/// Full-precision decimal rendering (17 significant digits).
pub fn fmt_full(v: f64) -> String {
    format!("{v:.16e}")
}

/// A validated time-stamped landmark trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    k: usize,
    m: usize,
    units: Option<String>,
    frames: Vec<Configuration>,
}

impl Trajectory {
    pub fn new(frames: Vec<Configuration>, units: Option<String>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Validation {
                message: "trajectory has no frames".into(),
            });
        }
        let (k, m) = (frames[0].k(), frames[0].m());
        for (i, f) in frames.iter().enumerate() {
            if f.k() != k || f.m() != m {
                return Err(Error::Validation {
                    message: format!(
                        "frame {i} has dimensions {}x{}, expected {k}x{m}",
                        f.k(),
                        f.m()
                    ),
                });
            }
            if i > 0 && f.time() <= frames[i - 1].time() {
                return Err(Error::Validation {
                    message: format!(
                        "frame {i} (t = {}) does not increase over frame {} (t = {})",
                        f.time(),
                        i - 1,
                        frames[i - 1].time()
                    ),
                });
            }
        }
        Ok(Trajectory {
            k,
            m,
            units,
            frames,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn units(&self) -> Option<&str> {
        self.units.as_deref()
    }

    pub fn frames(&self) -> &[Configuration] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Configuration> {
        self.frames
    }
}

fn coordinate_names(m: usize) -> Vec<String> {
    if m <= 3 {
        ["x", "y", "z"][..m].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=m).map(|i| format!("c{i}")).collect()
    }
}

/// Write the long-form CSV encoding (`time,landmark_index,x,...`), embedding
/// the manifest hash as a leading comment when given.
pub fn write_trajectory_csv(
    path: &Path,
    traj: &Trajectory,
    manifest_sha256: Option<&str>,
) -> Result<()> {
    let mut out = String::new();
    if let Some(h) = manifest_sha256 {
        writeln!(out, "# manifest_sha256={h}").expect("string write");
    }
    writeln!(
        out,
        "time,landmark_index,{}",
        coordinate_names(traj.m).join(",")
    )
    .expect("string write");
    for frame in &traj.frames {
        for row in 0..traj.k {
            let coords: Vec<String> = (0..traj.m)
                .map(|c| fmt_full(frame.landmarks()[(row, c)]))
                .collect();
            writeln!(out, "{},{row},{}", fmt_full(frame.time()), coords.join(","))
                .expect("string write");
        }
    }
    atomic_write(path, out.as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonFrame {
    time: f64,
    landmarks: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonTrajectory {
    kind: String,
    k: usize,
    m: usize,
    n: usize,
    #[serde(default)]
    units: Option<String>,
    #[serde(default)]
    manifest_sha256: Option<String>,
    frames: Vec<JsonFrame>,
}

/// Write the JSON envelope (the canonical encoding for metadata).
pub fn write_trajectory_json(
    path: &Path,
    traj: &Trajectory,
    manifest_sha256: Option<&str>,
) -> Result<()> {
    let body = JsonTrajectory {
        kind: "shape-trajectory".into(),
        k: traj.k,
        m: traj.m,
        n: traj.frames.len(),
        units: traj.units.clone(),
        manifest_sha256: manifest_sha256.map(|s| s.to_string()),
        frames: traj
            .frames
            .iter()
            .map(|f| JsonFrame {
                time: f.time(),
                landmarks: (0..traj.k)
                    .map(|r| (0..traj.m).map(|c| f.landmarks()[(r, c)]).collect())
                    .collect(),
            })
            .collect(),
    };
    atomic_write(path, serde_json::to_string_pretty(&body)?.as_bytes())
}

/// Parse a trajectory, dispatching on the extension (`.json` or `.csv`).
pub fn parse_trajectory(path: &Path) -> Result<Trajectory> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_trajectory_json(path),
        _ => read_trajectory_csv(path),
    }
}

pub fn read_trajectory_json(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path)?;
    let body: JsonTrajectory = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let frames = body
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            if f.landmarks.len() != body.k || f.landmarks.iter().any(|r| r.len() != body.m) {
                return Err(Error::Validation {
                    message: format!("frame {i}: landmark block is not {}x{}", body.k, body.m),
                });
            }
            let lm = DMatrix::from_fn(body.k, body.m, |r, c| f.landmarks[r][c]);
            Configuration::new(lm, f.time).map_err(|e| Error::Validation {
                message: format!("frame {i}: {e}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(frames, body.units)
}

pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path)?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.display().to_string(),
        line,
        message,
    };

    let mut m: Option<usize> = None;
    // (time, rows, first line of the frame)
    let mut frames_raw: Vec<(f64, Vec<Vec<f64>>, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if m.is_none() {
            if fields.len() < 3 || fields[0] != "time" {
                return Err(parse_err(
                    line_no,
                    "expected header `time,landmark_index,<coordinates>`".into(),
                ));
            }
            m = Some(fields.len() - 2);
            continue;
        }
        let m = m.expect("header parsed");
        if fields.len() != m + 2 {
            return Err(parse_err(
                line_no,
                format!("expected {} fields, found {}", m + 2, fields.len()),
            ));
        }
        let time: f64 = fields[0]
            .parse()
            .map_err(|e| parse_err(line_no, format!("bad time `{}`: {e}", fields[0])))?;
        let landmark: usize = fields[1]
            .parse()
            .map_err(|e| parse_err(line_no, format!("bad landmark index `{}`: {e}", fields[1])))?;
        let mut coords = Vec::with_capacity(m);
        for f in &fields[2..] {
            let v: f64 = f
                .parse()
                .map_err(|e| parse_err(line_no, format!("bad coordinate `{f}`: {e}")))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite coordinate `{f}`")));
            }
            coords.push(v);
        }

        let same_frame = frames_raw
            .last()
            .map(|(t, _, _)| *t == time)
            .unwrap_or(false);
        if same_frame {
            let (_, rows, _) = frames_raw.last_mut().expect("nonempty");
            if landmark != rows.len() {
                return Err(parse_err(
                    line_no,
                    format!(
                        "landmark index {landmark} out of order (expected {})",
                        rows.len()
                    ),
                ));
            }
            rows.push(coords);
        } else {
            if let Some((prev, _, first_line)) = frames_raw.last() {
                if time <= *prev {
                    return Err(parse_err(
                        line_no,
                        format!(
                            "time {time} does not increase over the frame at line {first_line} (t = {prev})"
                        ),
                    ));
                }
            }
            if landmark != 0 {
                return Err(parse_err(
                    line_no,
                    format!("new frame must start at landmark 0, found {landmark}"),
                ));
            }
            frames_raw.push((time, vec![coords], line_no));
        }
    }

    let m = m.ok_or_else(|| parse_err(1, "missing header".into()))?;
    if frames_raw.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    let k = frames_raw[0].1.len();
    let frames = frames_raw
        .into_iter()
        .map(|(time, rows, first_line)| {
            if rows.len() != k {
                return Err(parse_err(
                    first_line,
                    format!("frame has {} landmarks, expected {k}", rows.len()),
                ));
            }
            let lm = DMatrix::from_fn(k, m, |r, c| rows[r][c]);
            Configuration::new(lm, time).map_err(|e| parse_err(first_line, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(frames, None)
}

/// Metadata sufficient to reproduce a run bit-identically (modulo the
/// recorded wall-clock time, which is excluded from the hash).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub rng_algorithm: String,
    pub lambda_grid: Option<Vec<f64>>,
    pub lambda_chosen: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub displacement_history: Option<Vec<f64>>,
    /// Command-specific result summary (PCA proportions, table digests).
    pub results: Option<serde_json::Value>,
    pub outputs: Vec<String>,
    pub manifest_sha256: Option<String>,
    pub wall_clock_seconds: Option<f64>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, parameters: serde_json::Value) -> Self {
        RunManifest {
            tool: "shapespline".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            parameters,
            seed: None,
            rng_algorithm: crate::sim::RNG_ALGORITHM.into(),
            lambda_grid: None,
            lambda_chosen: None,
            iterations: None,
            converged: None,
            displacement_history: None,
            results: None,
            outputs: Vec::new(),
            manifest_sha256: None,
            wall_clock_seconds: None,
        }
    }

    /// Hash of the deterministic content (everything except the hash field
    /// and the wall clock).
    pub fn compute_hash(&self) -> String {
        let mut stripped = self.clone();
        stripped.manifest_sha256 = None;
        stripped.wall_clock_seconds = None;
        let bytes = serde_json::to_vec(&stripped).expect("manifest serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().fold(String::new(), |mut acc, b| {
            write!(acc, "{b:02x}").expect("string write");
            acc
        })
    }

    /// Set the hash and wall-clock fields.
    pub fn finalize(mut self, wall_clock_seconds: f64) -> Self {
        self.manifest_sha256 = Some(self.compute_hash());
        self.wall_clock_seconds = Some(wall_clock_seconds);
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, serde_json::to_string_pretty(self)?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Write through a temporary sibling file and rename into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::invalid("path", "missing file name"))?;
    let tmp = path.with_file_name(format!("{file_name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
