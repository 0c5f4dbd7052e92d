//! Johnson–Lindenstrauss maps: generation, application, distortion audits,
//! dimension calculators and exact ReLU prefixes.

use crate::domain::{dist, PointCloud};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fmt;
use crate::relu_ir::{Activation, Layer, ReluNetwork};
use crate::rng;
use rand::Rng as _;
use serde::Serialize;

const STREAM_GAUSS: u64 = 0x11;
const STREAM_CIRC_G: u64 = 0x12;
const STREAM_CIRC_S: u64 = 0x13;
const STREAM_PAIRS: u64 = 0x14;
const STREAM_POWER: u64 = 0x15;

pub const OP_NORM_ITERS: usize = 200;
pub const OP_NORM_TOL: f64 = 1e-10;

/// Relative slack on dimension ceilings so that `⌈100.000000000000001⌉` is 100.
const CEIL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum JlKind {
    /// Row-major `d × D` entries before scaling.
    DenseGaussian { matrix: Vec<f64> },
    /// Row `k` of the circulant part is `generator` shifted right by
    /// `row_offsets[k]`; column `j` is then multiplied by `signs[j]`.
    CirculantSigned {
        generator: Vec<f64>,
        row_offsets: Vec<usize>,
        signs: Vec<f64>,
    },
}

/// A linear map `ℝᴰ → ℝᵈ`, `A = scale·(matrix)` or `A = scale·M·diag(signs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JlMap {
    pub d: usize,
    pub big_d: usize,
    pub scale: f64,
    pub seed: u64,
    pub kind: JlKind,
}

fn check_dims(d: usize, big_d: usize) -> Result<()> {
    if d == 0 || big_d == 0 {
        return Err(Error::domain("dimensions must be positive"));
    }
    if d > big_d {
        return Err(Error::domain(format!(
            "target dimension {d} exceeds ambient dimension {big_d}"
        )));
    }
    Ok(())
}

/// Dense `d × D` standard normal matrix scaled by `1/√d`.
pub fn gen_gaussian(d: usize, big_d: usize, seed: u64, exec: Exec) -> Result<JlMap> {
    check_dims(d, big_d)?;
    let rows = exec.map(d, |r| {
        rng::gaussian_vec(&mut rng::stream(seed, STREAM_GAUSS, r as u64), big_d)
    });
    Ok(JlMap {
        d,
        big_d,
        scale: 1.0 / (d as f64).sqrt(),
        seed,
        kind: JlKind::DenseGaussian {
            matrix: rows.concat(),
        },
    })
}

/// First `d` rows of a Gaussian circulant matrix times a Rademacher
/// diagonal, scaled by `1/√d`.
pub fn gen_circulant(d: usize, big_d: usize, seed: u64) -> Result<JlMap> {
    check_dims(d, big_d)?;
    let generator = rng::gaussian_vec(&mut rng::stream(seed, STREAM_CIRC_G, 0), big_d);
    let mut r = rng::stream(seed, STREAM_CIRC_S, 0);
    let signs = (0..big_d)
        .map(|_| if r.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    Ok(JlMap {
        d,
        big_d,
        scale: 1.0 / (d as f64).sqrt(),
        seed,
        kind: JlKind::CirculantSigned {
            generator,
            row_offsets: (0..d).collect(),
            signs,
        },
    })
}

impl JlMap {
    /// `A = scale·matrix` for a given row-major matrix.
    pub fn from_dense(d: usize, big_d: usize, matrix: Vec<f64>, scale: f64) -> Result<JlMap> {
        if d == 0 || big_d == 0 || matrix.len() != d * big_d {
            return Err(Error::shape(format!(
                "matrix has {} entries, expected {d}×{big_d}",
                matrix.len()
            )));
        }
        if !scale.is_finite() || matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("non-finite matrix entry"));
        }
        Ok(JlMap {
            d,
            big_d,
            scale,
            seed: 0,
            kind: JlKind::DenseGaussian { matrix },
        })
    }

    pub fn identity(n: usize) -> Result<JlMap> {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
        }
        Self::from_dense(n, n, m, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.big_d == 0 || !self.scale.is_finite() {
            return Err(Error::domain("invalid map header"));
        }
        match &self.kind {
            JlKind::DenseGaussian { matrix } => {
                if matrix.len() != self.d * self.big_d {
                    return Err(Error::shape("matrix size does not match d×D"));
                }
            }
            JlKind::CirculantSigned {
                generator,
                row_offsets,
                signs,
            } => {
                if generator.len() != self.big_d
                    || signs.len() != self.big_d
                    || row_offsets.len() != self.d
                {
                    return Err(Error::shape("circulant payload does not match d and D"));
                }
                if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
                    return Err(Error::domain("signs must be ±1"));
                }
                if row_offsets.iter().any(|&k| k >= self.big_d) {
                    return Err(Error::domain("row offset out of range"));
                }
            }
        }
        Ok(())
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            JlKind::DenseGaussian { .. } => "dense_gaussian",
            JlKind::CirculantSigned { .. } => "circulant_signed",
        }
    }

    /// `Ax`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.big_d {
            return Err(Error::shape(format!(
                "input has length {}, map expects {}",
                x.len(),
                self.big_d
            )));
        }
        Ok(self.apply_unchecked(x))
    }

    fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let n = self.big_d;
        match &self.kind {
            JlKind::DenseGaussian { matrix } => (0..self.d)
                .map(|r| {
                    self.scale
                        * matrix[r * n..(r + 1) * n]
                            .iter()
                            .zip(x)
                            .map(|(a, b)| a * b)
                            .sum::<f64>()
                })
                .collect(),
            JlKind::CirculantSigned {
                generator,
                row_offsets,
                signs,
            } => {
                let sx: Vec<f64> = x.iter().zip(signs).map(|(a, s)| a * s).collect();
                row_offsets
                    .iter()
                    .map(|&k| {
                        // row k holds g[(j − k) mod D] in column j
                        let head: f64 = generator[..n - k]
                            .iter()
                            .zip(&sx[k..])
                            .map(|(g, v)| g * v)
                            .sum();
                        let tail: f64 = generator[n - k..]
                            .iter()
                            .zip(&sx[..k])
                            .map(|(g, v)| g * v)
                            .sum();
                        self.scale * (head + tail)
                    })
                    .collect()
            }
        }
    }

    /// `Aᵀy`.
    pub fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.d {
            return Err(Error::shape(format!(
                "input has length {}, transpose expects {}",
                y.len(),
                self.d
            )));
        }
        let n = self.big_d;
        let mut out = vec![0.0; n];
        match &self.kind {
            JlKind::DenseGaussian { matrix } => {
                for (r, &yr) in y.iter().enumerate() {
                    for (o, a) in out.iter_mut().zip(&matrix[r * n..(r + 1) * n]) {
                        *o += a * yr;
                    }
                }
            }
            JlKind::CirculantSigned {
                generator,
                row_offsets,
                signs,
            } => {
                for (&k, &yr) in row_offsets.iter().zip(y) {
                    for (j, o) in out.iter_mut().enumerate() {
                        *o += generator[(j + n - k) % n] * yr;
                    }
                }
                for (o, s) in out.iter_mut().zip(signs) {
                    *o *= s;
                }
            }
        }
        for o in &mut out {
            *o *= self.scale;
        }
        Ok(out)
    }

    pub fn apply_batch(&self, xs: &[Vec<f64>], exec: Exec) -> Result<Vec<Vec<f64>>> {
        if let Some(x) = xs.iter().find(|x| x.len() != self.big_d) {
            return Err(Error::shape(format!(
                "input has length {}, map expects {}",
                x.len(),
                self.big_d
            )));
        }
        Ok(exec.map_slice(xs, |x| self.apply_unchecked(x)))
    }

    /// Row-major dense `d × D` matrix of `A`, scale included.
    pub fn materialize(&self) -> Vec<f64> {
        let n = self.big_d;
        match &self.kind {
            JlKind::DenseGaussian { matrix } => matrix.iter().map(|a| a * self.scale).collect(),
            JlKind::CirculantSigned {
                generator,
                row_offsets,
                signs,
            } => {
                let mut m = vec![0.0; self.d * n];
                for (r, &k) in row_offsets.iter().enumerate() {
                    for j in 0..n {
                        m[r * n + j] = self.scale * generator[(j + n - k) % n] * signs[j];
                    }
                }
                m
            }
        }
    }

    /// Structured-text form `{kind, d, D, scale, seed, payload}`. Circulant
    /// maps store only the generator, offsets and signs.
    pub fn serialize(&self) -> Result<String> {
        self.validate()?;
        let mut s = format!(
            "{{\"kind\":\"{}\",\"d\":{},\"D\":{},\"scale\":",
            self.kind_name(),
            self.d,
            self.big_d
        );
        fmt::push_f64(&mut s, self.scale)?;
        s.push_str(&format!(",\"seed\":{},\"payload\":{{", self.seed));
        match &self.kind {
            JlKind::DenseGaussian { matrix } => {
                s.push_str("\"matrix\":");
                fmt::push_f64_array(&mut s, matrix)?;
            }
            JlKind::CirculantSigned {
                generator,
                row_offsets,
                signs,
            } => {
                s.push_str("\"generator\":");
                fmt::push_f64_array(&mut s, generator)?;
                s.push_str(",\"row_offsets\":");
                fmt::push_usize_array(&mut s, row_offsets.iter().copied());
                s.push_str(",\"signs\":");
                fmt::push_f64_array(&mut s, signs)?;
            }
        }
        s.push_str("}}\n");
        Ok(s)
    }

    pub fn deserialize(text: &str) -> Result<JlMap> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::parse(None, e.to_string()))?;
        let d = fmt::read_usize(&v, "d", None)?;
        let big_d = fmt::read_usize(&v, "D", None)?;
        let scale = fmt::read_f64(&v, "scale", None)?;
        let seed = v
            .get("seed")
            .and_then(|s| s.as_u64())
            .ok_or_else(|| Error::parse(None, "missing or invalid `seed`"))?;
        let payload = v
            .get("payload")
            .ok_or_else(|| Error::parse(None, "missing `payload`"))?;
        let get = |k: &str| payload.get(k).unwrap_or(&serde_json::Value::Null);
        let kind = match v.get("kind").and_then(|k| k.as_str()) {
            Some("dense_gaussian") => JlKind::DenseGaussian {
                matrix: fmt::read_f64_array(get("matrix"), "matrix", None)?,
            },
            Some("circulant_signed") => JlKind::CirculantSigned {
                generator: fmt::read_f64_array(get("generator"), "generator", None)?,
                row_offsets: fmt::read_usize_array(get("row_offsets"), "row_offsets", None)?,
                signs: fmt::read_f64_array(get("signs"), "signs", None)?,
            },
            _ => return Err(Error::parse(None, "missing or unknown `kind`")),
        };
        let map = JlMap {
            d,
            big_d,
            scale,
            seed,
            kind,
        };
        map.validate()
            .map_err(|e| Error::parse(None, e.to_string()))?;
        Ok(map)
    }
}

/// Extremes of `‖Ax − Ax′‖/‖x − x′‖` over the audited pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionAudit {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub pairs_checked: usize,
    /// Pair whose ratio is farthest from 1.
    pub worst_pair: (usize, usize),
    pub exhaustive: bool,
}

impl DistortionAudit {
    /// Smallest `ρ` with all audited ratios inside `[1 − ρ, 1 + ρ]`.
    pub fn distortion(&self) -> f64 {
        (1.0 - self.min_ratio).max(self.max_ratio - 1.0)
    }

    pub fn within(&self, rho: f64) -> bool {
        self.min_ratio >= 1.0 - rho && self.max_ratio <= 1.0 + rho
    }
}

#[derive(Clone, Copy)]
struct PairStat {
    min: f64,
    max: f64,
    count: usize,
    worst: (usize, usize),
    worst_dev: f64,
}

impl PairStat {
    fn empty() -> Self {
        PairStat {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            count: 0,
            worst: (0, 0),
            worst_dev: -1.0,
        }
    }

    fn push(&mut self, i: usize, j: usize, ratio: f64) {
        self.min = self.min.min(ratio);
        self.max = self.max.max(ratio);
        self.count += 1;
        let dev = (ratio - 1.0).abs();
        if dev > self.worst_dev {
            self.worst_dev = dev;
            self.worst = (i, j);
        }
    }

    fn merge(mut self, o: PairStat) -> Self {
        self.min = self.min.min(o.min);
        self.max = self.max.max(o.max);
        self.count += o.count;
        if o.worst_dev > self.worst_dev {
            self.worst_dev = o.worst_dev;
            self.worst = o.worst;
        }
        self
    }
}

/// Audits `A` on pairs of `cloud`: every pair when there are at most
/// `max_pairs`, otherwise `max_pairs` pairs drawn uniformly with `seed`.
/// Coincident pairs are skipped.
pub fn distortion_audit(
    a: &JlMap,
    cloud: &PointCloud,
    max_pairs: usize,
    seed: u64,
    exec: Exec,
) -> Result<DistortionAudit> {
    if cloud.dim != a.big_d {
        return Err(Error::shape(format!(
            "cloud lives in ℝ^{}, map expects ℝ^{}",
            cloud.dim, a.big_d
        )));
    }
    let n = cloud.len();
    if n < 2 {
        return Err(Error::domain("an audit needs at least two points"));
    }
    let pts = &cloud.points;
    let img = a.apply_batch(pts, exec)?;
    let ratio = |i: usize, j: usize| -> Option<f64> {
        let den = dist(&pts[i], &pts[j]);
        (den > 0.0).then(|| dist(&img[i], &img[j]) / den)
    };
    let total = n * (n - 1) / 2;
    let exhaustive = total <= max_pairs;
    let stat = if exhaustive {
        exec.map(n, |i| {
            let mut s = PairStat::empty();
            for j in i + 1..n {
                if let Some(r) = ratio(i, j) {
                    s.push(i, j, r);
                }
            }
            s
        })
        .into_iter()
        .fold(PairStat::empty(), PairStat::merge)
    } else {
        let mut r = rng::stream(seed, STREAM_PAIRS, 0);
        let pairs: Vec<(usize, usize)> = (0..max_pairs)
            .map(|_| {
                let i = r.random_range(0..n);
                let mut j = r.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                (i.min(j), i.max(j))
            })
            .collect();
        exec.map_chunks(pairs.len(), 1024, |range| {
            let mut s = PairStat::empty();
            for &(i, j) in &pairs[range] {
                if let Some(r) = ratio(i, j) {
                    s.push(i, j, r);
                }
            }
            s
        })
        .into_iter()
        .fold(PairStat::empty(), PairStat::merge)
    };
    if stat.count == 0 {
        return Err(Error::domain("all audited pairs are coincident"));
    }
    Ok(DistortionAudit {
        min_ratio: stat.min,
        max_ratio: stat.max,
        pairs_checked: stat.count,
        worst_pair: stat.worst,
        exhaustive,
    })
}

fn ceil_dim(x: f64) -> usize {
    (x * (1.0 - CEIL_SLACK)).ceil().max(0.0) as usize
}

/// `⌈Cρ⁻² ln(n/β)⌉` for a finite set of `n` points.
pub fn required_dim_finite(rho: f64, n: f64, beta: f64, c: f64) -> Result<usize> {
    if !(rho > 0.0 && rho < 0.5) {
        return Err(Error::domain(format!("ρ must lie in (0, 1/2), got {rho}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!("β must lie in (0, 1), got {beta}")));
    }
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::domain(format!("n must be at least 1, got {n}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain("C must be positive"));
    }
    Ok(ceil_dim(c * (n / beta).ln() / (rho * rho)))
}

/// Embedding dimension from a log-covering number of the unit secants.
///
/// Plain: `⌈Cρ⁻²·log_cov⌉`. Circulant: the least `d` with
/// `d ≥ Cρ⁻² ln(4D + 4d)·log_cov`, found by iterating from `d = 1`. Both are
/// clamped to at least 1.
pub fn required_dim_set(
    rho: f64,
    log_cov: f64,
    big_d: usize,
    circulant: bool,
    c: f64,
) -> Result<usize> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::domain(format!("ρ must lie in (0, 1), got {rho}")));
    }
    if !(log_cov >= 0.0 && log_cov.is_finite()) {
        return Err(Error::domain(format!(
            "log covering number must be nonnegative, got {log_cov}"
        )));
    }
    if !(c > 0.0 && c.is_finite()) || big_d == 0 {
        return Err(Error::domain("C and D must be positive"));
    }
    let k = c * log_cov / (rho * rho);
    if !circulant {
        return Ok(ceil_dim(k).max(1));
    }
    let step = |d: usize| ceil_dim(k * (4.0 * (big_d + d) as f64).ln()).max(1);
    let mut d = 1;
    for _ in 0..10_000 {
        let next = step(d);
        if next <= d {
            return Ok(d);
        }
        d = next;
    }
    Err(Error::domain(
        "circulant dimension iteration did not settle",
    ))
}

/// The exponent `α = ln ln|S₁| / ln ln(4D + 4d)` with `|S₁| = 2·exp(log_cov)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CirculantAlpha {
    pub alpha: f64,
    /// False when `|S₁| ≤ e`, where `ln ln|S₁|` is not positive; `alpha` is
    /// then clamped to 0.
    pub well_defined: bool,
}

pub fn circulant_alpha(log_cov: f64, big_d: usize, d: usize) -> Result<CirculantAlpha> {
    if !(log_cov >= 0.0) || big_d == 0 || d == 0 {
        return Err(Error::domain("invalid arguments to circulant_alpha"));
    }
    let ln_s1 = std::f64::consts::LN_2 + log_cov;
    let denom = (4.0 * (big_d + d) as f64).ln().ln();
    if ln_s1 <= 1.0 {
        return Ok(CirculantAlpha {
            alpha: 0.0,
            well_defined: false,
        });
    }
    Ok(CirculantAlpha {
        alpha: ln_s1.ln() / denom,
        well_defined: true,
    })
}

/// `ρ_net + 2‖A‖δ`: the distortion on a set whose secants lie within `δ` of
/// a net on which `A` has distortion `ρ_net`.
pub fn net_to_set_distortion(rho_net: f64, op_norm_a: f64, delta: f64) -> Result<f64> {
    for (name, v) in [("ρ", rho_net), ("‖A‖", op_norm_a), ("δ", delta)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::domain(format!(
                "{name} must be finite and nonnegative, got {v}"
            )));
        }
    }
    Ok(rho_net + 2.0 * op_norm_a * delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpNorm {
    /// Power-iteration estimate; a lower bound on the spectral norm.
    pub spectral_lower: f64,
    pub frobenius: f64,
    pub iterations: usize,
}

/// Spectral norm by power iteration on `AᵀA` (seeded start, stops when the
/// estimate changes by less than `tol` relative), plus the exact Frobenius norm.
pub fn op_norm(a: &JlMap, iters: usize, tol: f64) -> Result<OpNorm> {
    if iters == 0 {
        return Err(Error::domain("need at least one iteration"));
    }
    let frobenius = match &a.kind {
        JlKind::DenseGaussian { matrix } => {
            a.scale.abs() * matrix.iter().map(|x| x * x).sum::<f64>().sqrt()
        }
        JlKind::CirculantSigned {
            generator,
            row_offsets,
            ..
        } => {
            let g2: f64 = generator.iter().map(|x| x * x).sum();
            a.scale.abs() * (g2 * row_offsets.len() as f64).sqrt()
        }
    };
    let mut v = rng::gaussian_vec(&mut rng::stream(a.seed, STREAM_POWER, 0), a.big_d);
    let mut est = 0.0;
    let mut it = 0;
    while it < iters {
        it += 1;
        let nv = crate::domain::norm(&v);
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let av = a.apply(&v)?;
        let next = crate::domain::norm(&av);
        v = a.apply_transpose(&av)?;
        let done = (next - est).abs() <= tol * next.max(f64::MIN_POSITIVE);
        est = next;
        if done {
            break;
        }
    }
    Ok(OpNorm {
        spectral_lower: est,
        frobenius,
        iterations: it,
    })
}

/// `max ‖Ax‖_∞` over the cloud: a sample lower bound on `sup_S ‖Ax‖_∞`.
pub fn infinity_radius(a: &JlMap, cloud: &PointCloud, exec: Exec) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::domain("empty cloud"));
    }
    let img = a.apply_batch(&cloud.points, exec)?;
    Ok(img
        .iter()
        .flat_map(|y| y.iter().map(|v| v.abs()))
        .fold(0.0, f64::max))
}

/// ReLU network computing `x ↦ Ax`.
///
/// Dense maps become one linear stage with `dD` edges. Signed circulant maps
/// first realize the sign flip with the gadget
/// `relu(2xᵢ + bᵢ) − relu(bᵢ) − xᵢ`, `bᵢ = 2T·signᵢ`, which equals `signᵢ·xᵢ`
/// whenever `|xᵢ| ≤ T`, then apply the scaled circulant part. The stages are
/// `relu` (units `relu(2x+b)`, `relu(x)`, `relu(−x)`), linear (`Dx`), linear
/// (`scale·M`). Outside `[−T, T]^D` the output is not `Ax`.
pub fn build_jl_prefix(a: &JlMap, t: f64) -> Result<ReluNetwork> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("T must be positive, got {t}")));
    }
    a.validate()?;
    let n = a.big_d;
    match &a.kind {
        JlKind::DenseGaussian { .. } => ReluNetwork::linear(a.d, n, &a.materialize()),
        JlKind::CirculantSigned {
            generator,
            row_offsets,
            signs,
        } => {
            let mut rows = Vec::with_capacity(3 * n);
            let mut bias = Vec::with_capacity(3 * n);
            for (i, s) in signs.iter().enumerate() {
                rows.push(vec![(i, 2.0)]);
                bias.push(2.0 * t * s);
                rows.push(vec![(i, 1.0)]);
                bias.push(0.0);
                rows.push(vec![(i, -1.0)]);
                bias.push(0.0);
            }
            let flip_in = Layer::from_rows(n, rows, bias, Activation::Relu)?;
            let rows = (0..n)
                .map(|i| vec![(3 * i, 1.0), (3 * i + 1, -1.0), (3 * i + 2, 1.0)])
                .collect();
            let bias = signs.iter().map(|s| -(2.0 * t * s).max(0.0)).collect();
            let flip_out = Layer::from_rows(3 * n, rows, bias, Activation::Linear)?;
            let rows = row_offsets
                .iter()
                .map(|&k| {
                    (0..n)
                        .map(|j| (j, a.scale * generator[(j + n - k) % n]))
                        .collect()
                })
                .collect();
            let conv = Layer::from_rows(n, rows, vec![0.0; a.d], Activation::Linear)?;
            ReluNetwork::new(n, vec![flip_in, flip_out, conv])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_is_deterministic_and_scaled() {
        let a = gen_gaussian(3, 5, 9, Exec::auto()).unwrap();
        assert_eq!(a, gen_gaussian(3, 5, 9, Exec::Sequential).unwrap());
        let one = gen_gaussian(1, 1, 4, Exec::auto()).unwrap();
        assert_eq!(one.scale, 1.0);
        assert!(gen_gaussian(6, 5, 0, Exec::auto()).is_err());
    }

    #[test]
    fn circulant_rows_are_shifts() {
        let a = gen_circulant(4, 7, 3).unwrap();
        let m = a.materialize();
        if let JlKind::CirculantSigned {
            generator, signs, ..
        } = &a.kind
        {
            for k in 0..4 {
                for j in 0..7 {
                    let want = a.scale * generator[(j + 7 - k) % 7] * signs[j];
                    assert_eq!(m[k * 7 + j], want);
                }
            }
        }
    }

    #[test]
    fn circulant_apply_matches_dense_on_basis() {
        for big_d in 1..=8 {
            for d in 1..=big_d {
                let a = gen_circulant(d, big_d, (big_d * 10 + d) as u64).unwrap();
                let m = a.materialize();
                for j in 0..big_d {
                    let mut e = vec![0.0; big_d];
                    e[j] = 1.0;
                    let y = a.apply(&e).unwrap();
                    for r in 0..d {
                        assert!((y[r] - m[r * big_d + j]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn transpose_is_adjoint() {
        for a in [
            gen_gaussian(3, 8, 1, Exec::auto()).unwrap(),
            gen_circulant(3, 8, 1).unwrap(),
        ] {
            let x: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
            let y = vec![0.3, -1.0, 2.0];
            let lhs = crate::domain::dot(&a.apply(&x).unwrap(), &y);
            let rhs = crate::domain::dot(&x, &a.apply_transpose(&y).unwrap());
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn audit_of_identity_and_double() {
        let cloud =
            PointCloud::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 3.0]], 0).unwrap();
        let id = JlMap::identity(2).unwrap();
        let au = distortion_audit(&id, &cloud, 100, 0, Exec::auto()).unwrap();
        assert_eq!((au.min_ratio, au.max_ratio), (1.0, 1.0));
        let two = JlMap::from_dense(2, 2, vec![1.0, 0.0, 0.0, 1.0], 2.0).unwrap();
        let au = distortion_audit(&two, &cloud, 100, 0, Exec::auto()).unwrap();
        assert_eq!((au.min_ratio, au.max_ratio), (2.0, 2.0));
        let same = PointCloud::new(2, vec![vec![1.0, 1.0]; 3], 0).unwrap();
        assert!(distortion_audit(&id, &same, 100, 0, Exec::auto()).is_err());
    }

    #[test]
    fn finite_dimension_examples() {
        assert!(required_dim_finite(0.5, 10.0, 0.1, 1.0).is_err());
        let beta = 0.05;
        let n = 100f64.exp() * beta;
        assert_eq!(required_dim_finite(0.1, n, beta, 1.0).unwrap(), 10_000);
        let mut last = 0;
        for n in 1..200 {
            let d = required_dim_finite(0.2, n as f64, 0.1, 1.0).unwrap();
            assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn set_dimension_examples() {
        assert_eq!(required_dim_set(0.5, 0.0, 10, false, 1.0).unwrap(), 1);
        assert_eq!(required_dim_set(0.5, 25.0, 10, false, 1.0).unwrap(), 100);
        for (rho, lc, big_d) in [(0.5, 3.0, 100), (0.3, 10.0, 1000), (0.9, 0.5, 4)] {
            let d = required_dim_set(rho, lc, big_d, true, 1.0).unwrap();
            let need = |d: usize| lc / (rho * rho) * (4.0 * (big_d + d) as f64).ln();
            assert!(d as f64 >= need(d) * (1.0 - 1e-12));
            assert!(d == 1 || ((d - 1) as f64) < need(d - 1));
        }
    }

    #[test]
    fn alpha_flags_small_sets() {
        assert!(!circulant_alpha(0.0, 10, 2).unwrap().well_defined);
        let a = circulant_alpha(50.0, 100, 10).unwrap();
        assert!(a.well_defined && a.alpha > 0.0);
    }

    #[test]
    fn net_to_set_examples() {
        assert!((net_to_set_distortion(0.1, 2.0, 0.05).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(net_to_set_distortion(0.1, 2.0, 0.0).unwrap(), 0.1);
    }

    #[test]
    fn op_norm_examples() {
        let id = op_norm(&JlMap::identity(4).unwrap(), OP_NORM_ITERS, OP_NORM_TOL).unwrap();
        assert!((id.spectral_lower - 1.0).abs() < 1e-12);
        assert_eq!(id.frobenius, 2.0);
        let u = [0.6, 0.8];
        let v = [0.0, 1.0, 0.0];
        let m: Vec<f64> = u
            .iter()
            .flat_map(|a| v.iter().map(move |b| a * b))
            .collect();
        let r1 = op_norm(
            &JlMap::from_dense(2, 3, m, 1.0).unwrap(),
            OP_NORM_ITERS,
            OP_NORM_TOL,
        )
        .unwrap();
        assert!((r1.spectral_lower - 1.0).abs() < 1e-8);
    }

    #[test]
    fn infinity_radius_examples() {
        let a = JlMap::from_dense(2, 2, vec![1.0, 0.0, 0.0, 1.0], 1.0).unwrap();
        let c = PointCloud::new(2, vec![vec![0.3, -0.9]], 0).unwrap();
        assert_eq!(infinity_radius(&a, &c, Exec::auto()).unwrap(), 0.9);
    }

    #[test]
    fn sign_flip_gadget_values() {
        let relu = |x: f64| x.max(0.0);
        assert_eq!(relu(2.0 * 0.5 + 2.0) - relu(2.0) - 0.5, 0.5);
        assert_eq!(relu(2.0 * 0.5 - 2.0) - relu(-2.0) - 0.5, -0.5);
    }

    #[test]
    fn prefix_matches_map() {
        let a = gen_circulant(3, 6, 5).unwrap();
        let net = build_jl_prefix(&a, 1.0).unwrap();
        let x = [0.5, -1.0, 1.0, 0.0, -0.25, 0.75];
        let got = net.evaluate(&x).unwrap();
        let want = a.apply(&x).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
        assert!(build_jl_prefix(&a, 0.0).is_err());
    }

    #[test]
    fn serialization_round_trips() {
        for a in [
            gen_gaussian(2, 5, 77, Exec::auto()).unwrap(),
            gen_circulant(2, 5, u64::MAX).unwrap(),
        ] {
            let back = JlMap::deserialize(&a.serialize().unwrap()).unwrap();
            assert_eq!(back, a);
        }
        assert!(JlMap::deserialize("{\"kind\":\"dense_gaussian\"}").is_err());
    }
}
