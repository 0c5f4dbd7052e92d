//! Pipeline orchestration and the command-line interface.
//!
//! A pipeline run samples a set `S ⊂ ℝᴰ` and a target `f`, embeds `S` with a
//! JL map `A`, extends `f ∘ A⁻¹` from the embedded training points to the cube
//! `[−M, M]^d`, samples the extension on the grid, builds the cube
//! approximator and composes it with the ReLU prefix realizing `A`. The
//! result is audited on held-out points of `S`, which can only under-estimate
//! the sup over `S`.

use crate::complexity::{
    gaussian_width_mc, log_covering_profile, unit_secants, CoveringProfile, WidthEstimate,
};
use crate::constructor::{
    build_approximator_from_values, choose_n, measure_sup_error, predicted_sizes, sample_grid,
    ApproximatorSpec, SupError, DEFAULT_GRID_CAP,
};
use crate::domain::{dist, norm, transform_modulus, FunctionSamples, Modulus, PointCloud};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::extension::ExtensionOracle;
use crate::jl::{
    build_jl_prefix, distortion_audit, gen_circulant, gen_gaussian, infinity_radius, op_norm,
    required_dim_finite, required_dim_set, DistortionAudit, JlMap, OP_NORM_ITERS, OP_NORM_TOL,
};
use crate::models::{sample_deconv, sample_lowrank_masked, sample_sparse, ModelSet};
use crate::relu_ir::NetSize;
use crate::rng;
use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::time::Instant;

const STREAM_CURVE: u64 = 0x41;
const STREAM_SPHERE: u64 = 0x42;
const STREAM_JL_SEED: u64 = 0x43;
const STREAM_AUDIT: u64 = 0x44;

/// Where point clouds come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Observations `Φx ∈ ℝᵐ` of `s`-sparse `x ∈ ℝᴺ`.
    Sparse { n: usize, s: usize, m: usize },
    /// Observations `k ⊛ x ∈ ℝᴺ` with `x` in an `n`-dim and `k` in an
    /// `m`-dim random subspace.
    Deconv { big_n: usize, n: usize, m: usize },
    /// Masked `m × n` matrices of rank `r`, vectorized.
    Lowrank {
        m: usize,
        n: usize,
        r: usize,
        omega_size: usize,
    },
    /// Smooth closed curve in `ℝ^dim`.
    Curve { dim: usize },
    /// Uniform points on the unit sphere of `ℝ^dim`.
    Sphere { dim: usize },
    /// Function samples read from a file (the [`FunctionSamples`] schema).
    File { path: String },
}

/// Target functions on `ℝᴰ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Norm2,
    /// `scale·‖x‖₁`.
    Norm1 {
        scale: f64,
    },
    Constant {
        value: f64,
    },
    Coordinate {
        index: usize,
    },
}

impl FunctionSpec {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            FunctionSpec::Norm2 => norm(x),
            FunctionSpec::Norm1 { scale } => scale * x.iter().map(|v| v.abs()).sum::<f64>(),
            FunctionSpec::Constant { value } => *value,
            FunctionSpec::Coordinate { index } => x[*index],
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        match self {
            FunctionSpec::Coordinate { index } if *index >= dim => Err(Error::domain(format!(
                "coordinate {index} out of range for dimension {dim}"
            ))),
            FunctionSpec::Norm1 { scale } | FunctionSpec::Constant { value: scale }
                if !scale.is_finite() =>
            {
                Err(Error::domain("function parameter is not finite"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    #[default]
    Gaussian,
    Circulant,
}

/// Smooth closed curve `t ↦ Σⱼ aⱼ(cos((j+1)t + φⱼ), sin((j+1)t + φⱼ))` with
/// `aⱼ ∝ 1/(j+1)` normalized to unit norm; `t` uniform from the seed. An odd
/// last coordinate stays 0.
pub fn synthetic_curve(dim: usize, count: usize, seed: u64) -> Result<PointCloud> {
    if dim < 2 {
        return Err(Error::domain("a curve needs dimension at least 2"));
    }
    let k = dim / 2;
    let mut r = rng::stream(seed, STREAM_CURVE, u64::MAX);
    let phase: Vec<f64> = (0..k)
        .map(|_| r.random_range(0.0..std::f64::consts::TAU))
        .collect();
    let total: f64 = (1..=k).map(|j| 1.0 / (j * j) as f64).sum::<f64>().sqrt();
    let points = (0..count)
        .map(|i| {
            let t =
                rng::stream(seed, STREAM_CURVE, i as u64).random_range(0.0..std::f64::consts::TAU);
            let mut x = vec![0.0; dim];
            for j in 0..k {
                let a = 1.0 / ((j + 1) as f64 * total);
                let w = (j + 1) as f64 * t + phase[j];
                x[2 * j] = a * w.cos();
                x[2 * j + 1] = a * w.sin();
            }
            x
        })
        .collect();
    PointCloud::new(dim, points, seed)
}

pub fn unit_sphere(dim: usize, count: usize, seed: u64) -> Result<PointCloud> {
    let points = (0..count)
        .map(|i| {
            let g = rng::gaussian_vec(&mut rng::stream(seed, STREAM_SPHERE, i as u64), dim);
            let n = norm(&g);
            g.iter().map(|v| v / n).collect()
        })
        .collect();
    PointCloud::new(dim, points, seed)
}

/// Generated samples: the set points and, for file input, their values.
pub struct Generated {
    pub set: ModelSet,
    pub cloud: PointCloud,
    pub values: Option<Vec<Vec<f64>>>,
}

/// Draws `count` points of the model. Sample `i` depends only on
/// `(seed, i)`, so a longer draw extends a shorter one.
pub fn generate(model: &ModelSpec, count: usize, seed: u64, exec: Exec) -> Result<Generated> {
    let plain = |name: &str, params: serde_json::Value, cloud: PointCloud| {
        let samples = cloud
            .points
            .iter()
            .map(|p| crate::models::InverseProblemSample {
                y: p.clone(),
                x: p.clone(),
            })
            .collect();
        Generated {
            set: ModelSet {
                model: name.into(),
                params,
                seed,
                samples,
            },
            cloud,
            values: None,
        }
    };
    let from_set = |set: ModelSet| -> Result<Generated> {
        let cloud = crate::models::observations(&set.samples)?;
        Ok(Generated {
            cloud: PointCloud { seed, ..cloud },
            set,
            values: None,
        })
    };
    match model {
        ModelSpec::Sparse { n, s, m } => {
            from_set(sample_sparse(*n, *s, *m, count, seed, exec)?.to_model_set())
        }
        ModelSpec::Deconv { big_n, n, m } => {
            from_set(sample_deconv(*big_n, *n, *m, count, seed, exec)?.to_model_set())
        }
        ModelSpec::Lowrank {
            m,
            n,
            r,
            omega_size,
        } => from_set(
            sample_lowrank_masked(*m, *n, *r, *omega_size, count, seed, None, exec)?.to_model_set(),
        ),
        ModelSpec::Curve { dim } => Ok(plain(
            "curve",
            serde_json::json!({ "dim": dim }),
            synthetic_curve(*dim, count, seed)?,
        )),
        ModelSpec::Sphere { dim } => Ok(plain(
            "sphere",
            serde_json::json!({ "dim": dim }),
            unit_sphere(*dim, count, seed)?,
        )),
        ModelSpec::File { path } => {
            let text = std::fs::read_to_string(path)?;
            let fs: FunctionSamples =
                serde_json::from_str(&text).map_err(|e| Error::parse(None, e.to_string()))?;
            let fs = FunctionSamples::new(
                PointCloud::new(fs.inputs.dim, fs.inputs.points, fs.inputs.seed)?,
                fs.values,
                fs.output_dim,
            )?;
            if fs.len() < count {
                return Err(Error::domain(format!(
                    "{path} holds {} samples, {count} requested",
                    fs.len()
                )));
            }
            let cloud = PointCloud::new(fs.inputs.dim, fs.inputs.points[..count].to_vec(), seed)?;
            let mut g = plain("file", serde_json::json!({ "path": path }), cloud);
            g.values = Some(fs.values[..count].to_vec());
            Ok(g)
        }
    }
}

fn default_train() -> usize {
    1000
}
fn default_holdout() -> usize {
    500
}
fn default_c() -> f64 {
    1.0
}
fn default_deltas() -> Vec<f64> {
    vec![1.0, 0.5, 0.25, 0.125, 0.0625]
}
fn default_max_secants() -> usize {
    20_000
}
fn default_max_pairs() -> usize {
    200_000
}
fn default_retries() -> usize {
    5
}
fn default_safety() -> f64 {
    1.0
}
fn default_cap() -> usize {
    DEFAULT_GRID_CAP
}

/// Pipeline configuration; the structured-text form uses these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub model: ModelSpec,
    /// Target function; ignored for file input, which carries its values.
    pub function: FunctionSpec,
    #[serde(default = "default_train")]
    pub train_count: usize,
    #[serde(default = "default_holdout")]
    pub holdout_count: usize,
    pub rho: f64,
    #[serde(default)]
    pub embedding: EmbeddingKind,
    pub epsilon: f64,
    /// Modulus of continuity of the target on `S`.
    pub modulus: Modulus,
    /// Fixed embedding dimension; when absent it is derived from a covering
    /// estimate of the training secants.
    #[serde(default)]
    pub dim: Option<usize>,
    /// Constant in the dimension formulas.
    #[serde(default = "default_c")]
    pub c_const: f64,
    /// Scales of the covering profile, strictly decreasing.
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    /// Rows of the profile used for the slope fit; all rows when absent.
    #[serde(default)]
    pub fit_range: Option<[usize; 2]>,
    #[serde(default = "default_max_secants")]
    pub max_secants: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_pairs")]
    pub max_pairs: usize,
    /// Fresh JL draws allowed after the first one fails its audit.
    #[serde(default = "default_retries")]
    pub jl_retries: usize,
    /// Factor applied to the sampled `sup ‖Ax‖_∞` and `sup ‖x‖_∞`.
    #[serde(default = "default_safety")]
    pub safety_factor: f64,
    #[serde(default = "default_cap")]
    pub grid_cap: usize,
    /// Include wall-clock times; they make reports run-dependent.
    #[serde(default)]
    pub include_timings: bool,
    #[serde(default)]
    pub report_path: Option<String>,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<PipelineConfig> {
        let c: PipelineConfig =
            serde_json::from_str(text).map_err(|e| Error::parse(None, e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::domain(format!(
                "rho must lie in (0, 1), got {}",
                self.rho
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::domain("epsilon must be positive"));
        }
        if self.train_count < 2 || self.holdout_count == 0 {
            return Err(Error::domain(
                "need at least 2 training and 1 held-out point",
            ));
        }
        if !(self.safety_factor >= 1.0 && self.safety_factor.is_finite()) {
            return Err(Error::domain("safety_factor must be at least 1"));
        }
        if !(self.c_const > 0.0 && self.c_const.is_finite()) {
            return Err(Error::domain("c_const must be positive"));
        }
        if self.dim == Some(0) {
            return Err(Error::domain("dim must be positive"));
        }
        self.modulus.validate()
    }
}

/// A number together with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity<T> {
    pub value: T,
    pub source: String,
}

fn q<T>(value: T, source: impl Into<String>) -> Quantity<T> {
    Quantity {
        value,
        source: source.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringEstimate {
    pub profile: CoveringProfile,
    /// Scale at which the log-covering number is needed.
    pub target_scale: f64,
    pub log_covering: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingStage {
    pub kind: EmbeddingKind,
    pub attempts: usize,
    pub seed: u64,
    pub audit: DistortionAudit,
    pub rho_target: f64,
    pub spectral_norm_lower: f64,
    pub frobenius_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sizes {
    pub approximator: NetSize,
    pub approximator_predicted_bound: NetSize,
    pub prefix: NetSize,
    /// Node counts include the `D` inputs.
    pub composed_with_inputs: NetSize,
    /// Dense prefix: `(D, Dd, 1)` over the approximator with its inputs.
    pub expected_increment: Option<NetSize>,
    pub increment_matches: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeldOut {
    pub points: usize,
    pub max_error: f64,
    pub mean_error: f64,
    /// Held-out images outside `[−M, M]^d`.
    pub outside_cube: usize,
    /// Held-out points with `‖x‖_∞ > T` (circulant prefix only).
    pub outside_prefix_range: usize,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub seed: u64,
    pub ambient_dim: usize,
    pub output_dim: usize,
    pub covering: Option<CoveringEstimate>,
    pub d: Quantity<usize>,
    pub embedding: EmbeddingStage,
    pub m: Quantity<f64>,
    pub prefix_t: Quantity<f64>,
    pub coordinate_modulus: Modulus,
    pub budget_modulus: Modulus,
    pub n: Quantity<usize>,
    pub grid_size: usize,
    pub anchors: usize,
    pub sizes: Sizes,
    pub held_out: HeldOut,
    pub theory_bound: Quantity<f64>,
    pub epsilon: f64,
    pub pass: bool,
    pub timings: Option<Vec<(String, f64)>>,
}

impl PipelineReport {
    /// Pretty JSON with keys in declaration order.
    pub fn to_json(&self) -> String {
        let mut s =
            serde_json::to_string_pretty(self).expect("reports contain only finite numbers");
        s.push('\n');
        s
    }
}

struct Clock {
    on: bool,
    last: Instant,
    laps: Vec<(String, f64)>,
}

impl Clock {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        if self.on {
            self.laps
                .push((stage.into(), (now - self.last).as_secs_f64()));
        }
        self.last = now;
    }
}

fn values_for(
    config: &PipelineConfig,
    g: &Generated,
    range: std::ops::Range<usize>,
) -> Vec<Vec<f64>> {
    match &g.values {
        Some(v) => v[range].to_vec(),
        None => g.cloud.points[range]
            .iter()
            .map(|x| vec![config.function.eval(x)])
            .collect(),
    }
}

/// Runs the full pipeline. Deterministic given the config: the report is
/// identical across runs unless `include_timings` is set.
pub fn run_pipeline(config: &PipelineConfig, exec: Exec) -> Result<PipelineReport> {
    config.validate()?;
    let mut clock = Clock {
        on: config.include_timings,
        last: Instant::now(),
        laps: Vec::new(),
    };
    let total = config.train_count + config.holdout_count;
    let generated = generate(&config.model, total, config.seed, exec)?;
    let big_d = generated.cloud.dim;
    if generated.values.is_none() {
        config.function.check(big_d)?;
    }
    let train = PointCloud::new(
        big_d,
        generated.cloud.points[..config.train_count].to_vec(),
        config.seed,
    )?;
    let holdout = &generated.cloud.points[config.train_count..];
    let train_values = values_for(config, &generated, 0..config.train_count);
    let holdout_values = values_for(config, &generated, config.train_count..total);
    let p = train_values[0].len();
    clock.lap("generate");

    let circulant = config.embedding == EmbeddingKind::Circulant;
    let (d, covering) = match config.dim {
        Some(d) => (q(d.min(big_d), "configured"), None),
        None => {
            let secants = unit_secants(&train, config.max_secants, config.seed)?;
            let rows = config.deltas.len();
            let range = config.fit_range.map_or(0..rows, |[a, b]| a..b);
            let profile = log_covering_profile(
                &secants.vectors,
                &config.deltas,
                range,
                Some(config.seed),
                exec,
            )?;
            let target_scale = config.rho / (4.0 * (3.0 * big_d as f64).sqrt());
            let last = profile.rows.last().expect("nonempty profile");
            let log_covering = (last.log_count
                + profile.slope.max(0.0) * (last.delta / target_scale).ln())
            .max(0.0);
            let raw = required_dim_set(config.rho, log_covering, big_d, circulant, config.c_const)?;
            let source = format!(
                "required_dim_set(rho, log_covering, D, {circulant}, C = {}) = {raw}, clamped to [1, D]",
                config.c_const
            );
            (
                q(raw.clamp(1, big_d), source),
                Some(CoveringEstimate {
                    profile,
                    target_scale,
                    log_covering,
                    source: "greedy secant packing at the finest scale, extended to rho/(4 sqrt(3D)) along the fitted slope"
                        .into(),
                }),
            )
        }
    };
    clock.lap("dimension");

    let mut attempt = 0;
    let (a, audit) = loop {
        let seed = rng::derive(config.seed, STREAM_JL_SEED, attempt as u64);
        let a = if circulant {
            gen_circulant(d.value, big_d, seed)?
        } else {
            gen_gaussian(d.value, big_d, seed, exec)?
        };
        let audit = distortion_audit(
            &a,
            &train,
            config.max_pairs,
            rng::derive(config.seed, STREAM_AUDIT, 0),
            exec,
        )?;
        attempt += 1;
        if audit.within(config.rho) {
            break (a, audit);
        }
        if attempt > config.jl_retries {
            return Err(Error::Stage {
                stage: "embed".into(),
                msg: format!(
                    "{attempt} draws at d = {} all exceed rho = {}; last audit distortion {:.4}",
                    d.value,
                    config.rho,
                    audit.distortion()
                ),
            });
        }
    };
    let norms = op_norm(&a, OP_NORM_ITERS, OP_NORM_TOL)?;
    let embedding = EmbeddingStage {
        kind: config.embedding,
        attempts: attempt,
        seed: a.seed,
        audit,
        rho_target: config.rho,
        spectral_norm_lower: norms.spectral_lower,
        frobenius_norm: norms.frobenius,
    };
    clock.lap("embed");

    let radius = infinity_radius(&a, &train, exec)?;
    let m = q(
        (radius * config.safety_factor).max(f64::MIN_POSITIVE),
        format!(
            "safety_factor {} x max over training points of |Ax|_inf = {radius}",
            config.safety_factor
        ),
    );
    let t_raw = train
        .points
        .iter()
        .flat_map(|x| x.iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    let prefix_t = q(
        (t_raw * config.safety_factor).max(f64::MIN_POSITIVE),
        format!(
            "safety_factor {} x max over training points of |x|_inf = {t_raw}",
            config.safety_factor
        ),
    );
    let coordinate_modulus = transform_modulus(&config.modulus, config.rho, 1, true)?;
    let budget_modulus = transform_modulus(&config.modulus, config.rho, p, false)?;
    let images = a.apply_batch(&train.points, exec)?;
    let anchors = FunctionSamples::new(
        PointCloud::new(d.value, images, config.seed)?,
        train_values,
        p,
    )?;
    let oracle = ExtensionOracle::new(anchors, coordinate_modulus.clone(), exec).map_err(|e| {
        Error::Stage {
            stage: "extend".into(),
            msg: e.to_string(),
        }
    })?;
    clock.lap("extend");

    let n = choose_n(&budget_modulus, m.value, d.value, config.epsilon)?;
    let spec = ApproximatorSpec::new(d.value, n, m.value, p)?.with_grid_cap(config.grid_cap);
    let grid_size = spec.grid_size()?;
    let values = sample_grid(
        &spec,
        |y| oracle.eval_pruned(y).expect("grid point has dimension d"),
        exec,
    )?;
    let ghat = build_approximator_from_values(&spec, &values)?;
    drop(values);
    clock.lap("approximate");

    let prefix = build_jl_prefix(&a, prefix_t.value)?;
    let composed = prefix.compose(&ghat)?;
    let approx_size = ghat.size_with_inputs();
    let composed_size = composed.size_with_inputs();
    let expected_increment = (!circulant).then(|| NetSize {
        nodes: big_d,
        edges: prefix.size().edges,
        layers: 1,
    });
    let increment_matches = expected_increment.map(|inc| {
        composed_size.nodes == approx_size.nodes + inc.nodes
            && composed_size.edges == approx_size.edges + inc.edges
            && composed_size.layers == approx_size.layers + inc.layers
    });
    let sizes = Sizes {
        approximator: ghat.size(),
        approximator_predicted_bound: predicted_sizes(&spec)?,
        prefix: prefix.size(),
        composed_with_inputs: composed_size,
        expected_increment,
        increment_matches,
    };
    clock.lap("compose");

    let out = composed.evaluate_batch(holdout, exec)?;
    let errors: Vec<f64> = out
        .iter()
        .zip(&holdout_values)
        .map(|(o, v)| dist(o, v))
        .collect();
    let held_images = a.apply_batch(holdout, exec)?;
    let held_out = HeldOut {
        points: holdout.len(),
        max_error: errors.iter().copied().fold(0.0, f64::max),
        mean_error: errors.iter().sum::<f64>() / errors.len() as f64,
        outside_cube: held_images
            .iter()
            .filter(|y| y.iter().any(|v| v.abs() > m.value))
            .count(),
        outside_prefix_range: if circulant {
            holdout
                .iter()
                .filter(|x| x.iter().any(|v| v.abs() > prefix_t.value))
                .count()
        } else {
            0
        },
        method: "max over held-out samples of S; a lower bound on the sup over S".into(),
    };
    let bound = budget_modulus.eval(m.value * (d.value as f64).sqrt() / n as f64)?;
    let theory_bound = q(
        bound,
        "sqrt(p) Delta((M sqrt(d)/N)/(1 - rho)) with the configured modulus",
    );
    let pass = held_out.max_error <= config.epsilon;
    clock.lap("audit");

    Ok(PipelineReport {
        seed: config.seed,
        ambient_dim: big_d,
        output_dim: p,
        covering,
        d,
        embedding,
        m,
        prefix_t,
        coordinate_modulus,
        budget_modulus,
        n: q(
            n,
            format!(
                "choose_n(budget_modulus, M, d, epsilon = {})",
                config.epsilon
            ),
        ),
        grid_size,
        anchors: config.train_count,
        sizes,
        held_out,
        theory_bound,
        epsilon: config.epsilon,
        pass,
        timings: config.include_timings.then_some(clock.laps),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Configuration file (JSON).
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Parser)]
#[command(
    name = "jlnet",
    version,
    about = "ReLU approximators on JL-embedded sets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a cube approximator and measure its sup error.
    Approximate(CommonArgs),
    /// Draw a JL map and audit its distortion on a sampled set.
    Embed(CommonArgs),
    /// Covering profile and Gaussian width of a sampled set.
    Complexity(CommonArgs),
    /// Generate a model sample set.
    Models(CommonArgs),
    /// Run the end-to-end pipeline.
    Pipeline(CommonArgs),
}

fn default_mc() -> usize {
    100_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproximateConfig {
    pub d: usize,
    pub m: f64,
    pub function: FunctionSpec,
    /// Grid resolution; when absent it is chosen from `modulus` and `epsilon`.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub modulus: Option<Modulus>,
    #[serde(default = "default_cap")]
    pub grid_cap: usize,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproximateReport {
    pub spec: ApproximatorSpec,
    pub grid_size: usize,
    pub size: NetSize,
    pub predicted_bound: NetSize,
    pub sup_error: SupError,
    pub bound: Option<Quantity<f64>>,
    pub pass: bool,
}

pub fn run_approximate(c: &ApproximateConfig, exec: Exec) -> Result<ApproximateReport> {
    c.function.check(c.d)?;
    let n = match (c.n, &c.modulus, c.epsilon) {
        (Some(n), _, _) => n,
        (None, Some(md), Some(eps)) => choose_n(md, c.m, c.d, eps)?,
        _ => return Err(Error::domain("give either n or both modulus and epsilon")),
    };
    let spec = ApproximatorSpec::new(c.d, n, c.m, 1)?.with_grid_cap(c.grid_cap);
    let grid_size = spec.grid_size()?;
    let g = |y: &[f64]| vec![c.function.eval(y)];
    let values = sample_grid(&spec, g, exec)?;
    let net = build_approximator_from_values(&spec, &values)?;
    let sup_error = measure_sup_error(&net, &spec, g, c.mc_samples, c.seed, exec)?;
    let bound = match &c.modulus {
        Some(md) => Some(q(
            md.eval(c.m * (c.d as f64).sqrt() / n as f64)?,
            "Delta(M sqrt(d)/N)",
        )),
        None => None,
    };
    let pass = bound.as_ref().is_none_or(|b| sup_error.max <= b.value);
    Ok(ApproximateReport {
        spec,
        grid_size,
        size: net.size(),
        predicted_bound: predicted_sizes(&spec)?,
        sup_error,
        bound,
        pass,
    })
}

fn default_beta() -> f64 {
    0.05
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedConfig {
    pub model: ModelSpec,
    pub count: usize,
    #[serde(default)]
    pub embedding: EmbeddingKind,
    pub rho: f64,
    /// Target dimension; when absent, `required_dim_finite(rho, count, beta, c_const)`.
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_c")]
    pub c_const: f64,
    #[serde(default = "default_max_pairs")]
    pub max_pairs: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbedReport {
    pub ambient_dim: usize,
    pub d: Quantity<usize>,
    pub audit: DistortionAudit,
    pub rho: f64,
    pub within_rho: bool,
    pub spectral_norm_lower: f64,
    pub frobenius_norm: f64,
    pub infinity_radius: f64,
}

pub fn run_embed(c: &EmbedConfig, exec: Exec) -> Result<(EmbedReport, JlMap)> {
    let g = generate(&c.model, c.count, c.seed, exec)?;
    let big_d = g.cloud.dim;
    let d = match c.d {
        Some(d) => q(d, "configured"),
        None => {
            let raw = required_dim_finite(c.rho, c.count as f64, c.beta, c.c_const)?;
            q(
                raw.min(big_d),
                format!("required_dim_finite = {raw}, clamped to D"),
            )
        }
    };
    let jl_seed = rng::derive(c.seed, STREAM_JL_SEED, 0);
    let a = match c.embedding {
        EmbeddingKind::Gaussian => gen_gaussian(d.value, big_d, jl_seed, exec)?,
        EmbeddingKind::Circulant => gen_circulant(d.value, big_d, jl_seed)?,
    };
    let audit = distortion_audit(
        &a,
        &g.cloud,
        c.max_pairs,
        rng::derive(c.seed, STREAM_AUDIT, 0),
        exec,
    )?;
    let norms = op_norm(&a, OP_NORM_ITERS, OP_NORM_TOL)?;
    let report = EmbedReport {
        ambient_dim: big_d,
        d,
        within_rho: audit.within(c.rho),
        audit,
        rho: c.rho,
        spectral_norm_lower: norms.spectral_lower,
        frobenius_norm: norms.frobenius,
        infinity_radius: infinity_radius(&a, &g.cloud, exec)?,
    };
    Ok((report, a))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexityConfig {
    pub model: ModelSpec,
    pub count: usize,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub fit_range: Option<[usize; 2]>,
    /// Profile the unit secants instead of the points.
    #[serde(default)]
    pub secants: bool,
    #[serde(default = "default_max_secants")]
    pub max_secants: usize,
    /// Gaussian width trials over the unit secants; skipped when absent.
    #[serde(default)]
    pub width_trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexityReport {
    pub profile: CoveringProfile,
    pub width: Option<WidthEstimate>,
}

pub fn run_complexity(c: &ComplexityConfig, exec: Exec) -> Result<ComplexityReport> {
    let g = generate(&c.model, c.count, c.seed, exec)?;
    let need_secants = c.secants || c.width_trials.is_some();
    let secants = if need_secants {
        Some(unit_secants(&g.cloud, c.max_secants, c.seed)?)
    } else {
        None
    };
    let points = match (&secants, c.secants) {
        (Some(s), true) => &s.vectors,
        _ => &g.cloud.points,
    };
    let range = c.fit_range.map_or(0..c.deltas.len(), |[a, b]| a..b);
    let profile = log_covering_profile(points, &c.deltas, range, Some(c.seed), exec)?;
    let width = match (c.width_trials, &secants) {
        (Some(t), Some(s)) => Some(gaussian_width_mc(s, t, c.seed, exec)?),
        _ => None,
    };
    Ok(ComplexityReport { profile, width })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelsConfig {
    pub model: ModelSpec,
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Outcome of a CLI command, before it becomes an exit code.
enum Outcome {
    Pass(String),
    BudgetExceeded(String),
}

fn read_config<T: serde::de::DeserializeOwned>(args: &CommonArgs) -> Result<T> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| Error::domain("missing --config PATH"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::domain(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(None, format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports contain only finite numbers");
    s.push('\n');
    s
}

fn csv_unsupported(args: &CommonArgs, what: &str) -> Result<()> {
    if args.format == Format::Csv {
        return Err(Error::domain(format!("{what} has no CSV form")));
    }
    Ok(())
}

fn dispatch(command: &Command, exec: Exec) -> Result<(Outcome, &CommonArgs)> {
    let outcome = match command {
        Command::Approximate(args) => {
            csv_unsupported(args, "approximate")?;
            let mut c: ApproximateConfig = read_config(args)?;
            c.seed = args.seed.unwrap_or(c.seed);
            let r = run_approximate(&c, exec)?;
            let text = to_json(&r);
            (
                if r.pass {
                    Outcome::Pass(text)
                } else {
                    Outcome::BudgetExceeded(text)
                },
                args,
            )
        }
        Command::Embed(args) => {
            csv_unsupported(args, "embed")?;
            let mut c: EmbedConfig = read_config(args)?;
            c.seed = args.seed.unwrap_or(c.seed);
            let (r, _) = run_embed(&c, exec)?;
            let text = to_json(&r);
            (
                if r.within_rho {
                    Outcome::Pass(text)
                } else {
                    Outcome::BudgetExceeded(text)
                },
                args,
            )
        }
        Command::Complexity(args) => {
            let mut c: ComplexityConfig = read_config(args)?;
            c.seed = args.seed.unwrap_or(c.seed);
            let r = run_complexity(&c, exec)?;
            let text = match args.format {
                Format::Csv => r.profile.to_csv(),
                Format::Json => to_json(&r),
            };
            (Outcome::Pass(text), args)
        }
        Command::Models(args) => {
            csv_unsupported(args, "models")?;
            let mut c: ModelsConfig = read_config(args)?;
            c.seed = args.seed.unwrap_or(c.seed);
            let g = generate(&c.model, c.count, c.seed, exec)?;
            (Outcome::Pass(g.set.to_json() + "\n"), args)
        }
        Command::Pipeline(args) => {
            csv_unsupported(args, "pipeline")?;
            let mut c: PipelineConfig = read_config(args)?;
            c.seed = args.seed.unwrap_or(c.seed);
            c.validate()?;
            let r = run_pipeline(&c, exec)?;
            let text = r.to_json();
            if args.out.is_none() {
                if let Some(path) = &c.report_path {
                    std::fs::write(path, &text)?;
                }
            }
            (
                if r.pass {
                    Outcome::Pass(text)
                } else {
                    Outcome::BudgetExceeded(text)
                },
                args,
            )
        }
    };
    Ok(outcome)
}

fn emit(text: &str, args: &CommonArgs) -> Result<()> {
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Parses `argv` (program name first) and runs the command. Returns 0 on
/// success, 1 on invalid input or a refused run, 2 when a run completes but
/// misses its budget or a pipeline stage exhausts its retries.
pub fn cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let parsed = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&parsed.command, Exec::auto()) {
        Ok((outcome, args)) => {
            let (text, code) = match outcome {
                Outcome::Pass(t) => (t, 0),
                Outcome::BudgetExceeded(t) => (t, 2),
            };
            if let Err(e) = emit(&text, args) {
                eprintln!("error: {e}");
                return 1;
            }
            if code == 2 {
                eprintln!("error budget exceeded");
            }
            code
        }
        Err(e @ Error::Stage { .. }) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_is_smooth_and_bounded() {
        let c = synthetic_curve(8, 50, 3).unwrap();
        for p in &c.points {
            assert!((norm(p) - 1.0).abs() < 1e-12);
        }
        assert!(synthetic_curve(1, 5, 0).is_err());
    }

    #[test]
    fn sphere_points_are_unit() {
        let s = unit_sphere(5, 20, 1).unwrap();
        assert!(s.points.iter().all(|p| (norm(p) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn generation_extends_prefixes() {
        let spec = ModelSpec::Sparse { n: 10, s: 2, m: 5 };
        let a = generate(&spec, 5, 4, Exec::auto()).unwrap();
        let b = generate(&spec, 9, 4, Exec::auto()).unwrap();
        assert_eq!(a.cloud.points[..], b.cloud.points[..5]);
    }

    #[test]
    fn config_rejects_unknown_fields() {
        let text = r#"{"model":{"kind":"curve","dim":4},"function":{"kind":"norm2"},
            "rho":0.5,"epsilon":0.3,"modulus":{"kind":"holder","l":1.0,"alpha":1.0},"bogus":1}"#;
        assert!(PipelineConfig::from_json(text).is_err());
        let ok = text.replace(",\"bogus\":1", "");
        assert!(PipelineConfig::from_json(&ok).is_ok());
    }
}
