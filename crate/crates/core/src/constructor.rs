//! Explicit ReLU approximators on the cube `[−M, M]^d`.
//!
//! The approximator is `ĝ(y) = Σₙ g(Mn/N)·φ(Ny/M − n)` over the grid
//! `n ∈ {−N,…,N}^d`, where `φ(z) = max{1 + min{z₁,…,z_d,0} − max{z₁,…,z_d,0}, 0}`.
//! Grid indices are enumerated lexicographically in `(n₁,…,n_d)` with `n₁`
//! most significant and every `nᵢ` ascending; flat index `k` has digits
//! `nᵢ + N` in base `2N+1`.
//!
//! The min/max of the `d + 1` numbers `{z₁,…,z_d,0}` are computed by a
//! halving tree: a node holding `c` entries sends the first `⌈c/2⌉`
//! coordinates left and the rest (with the trailing zero) right, then
//! combines the two halves with one ReLU stage using
//! `min(a,b) = a − relu(a−b)` and `max(a,b) = b + relu(a−b)`. The tree has
//! `H = ⌈log₂(d+1)⌉` ReLU stages, the spike stage adds one, and the weighted
//! readout one more.
//!
//! Networks are assembled symbolically. Every gadget gets its own unit, one
//! per pair of child instances. Values that skip a stage are carried through
//! pass-through units (inputs via `relu(s·y) − relu(−s·y)`, hidden units via
//! `relu(u)`); a pass-through reuses any unit of its stage with the same
//! pre-activation, and a gadget reuses an identical pass-through. Units that
//! do not reach the output are pruned before the layers are emitted.

use crate::domain::{FunctionSamples, Modulus};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::relu_ir::{Activation, Layer, NetSize, ReluNetwork};
use crate::rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub const DEFAULT_GRID_CAP: usize = 10_000_000;

/// Dense-grid refinement per axis used by [`measure_sup_error`] in `d ≤ 2`.
pub const SUP_REFINE: usize = 20;
pub const SUP_MC_SAMPLES: usize = 1_000_000;

const STREAM_SUP: u64 = 0x5u64;
const SUP_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproximatorSpec {
    pub d: usize,
    /// Grid half-resolution `N`.
    pub n: usize,
    /// Cube half-width `M`.
    pub m: f64,
    pub p: usize,
    #[serde(default = "default_cap")]
    pub grid_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_GRID_CAP
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

impl ApproximatorSpec {
    pub fn new(d: usize, n: usize, m: f64, p: usize) -> Result<Self> {
        let s = ApproximatorSpec {
            d,
            n,
            m,
            p,
            grid_cap: DEFAULT_GRID_CAP,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_grid_cap(mut self, cap: usize) -> Self {
        self.grid_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n == 0 || self.p == 0 {
            return Err(Error::domain("d, N and p must be positive"));
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::domain(format!(
                "cube half-width must be positive, got {}",
                self.m
            )));
        }
        Ok(())
    }

    /// `2N + 1`.
    pub fn side(&self) -> usize {
        2 * self.n + 1
    }

    /// `(2N+1)^d`, refusing when it exceeds the grid cap.
    pub fn grid_size(&self) -> Result<usize> {
        self.validate()?;
        let g = (self.side() as u128)
            .checked_pow(self.d as u32)
            .unwrap_or(u128::MAX);
        if g > self.grid_cap as u128 {
            return Err(Error::Refused(format!(
                "grid has (2N+1)^d = {}^{} = {} nodes, above the cap of {}",
                self.side(),
                self.d,
                if g == u128::MAX {
                    "overflow".to_string()
                } else {
                    g.to_string()
                },
                self.grid_cap
            )));
        }
        Ok(g as usize)
    }

    /// `⌈log₂(d+1)⌉`.
    pub fn tree_depth(&self) -> usize {
        ceil_log2(self.d + 1)
    }

    /// Affine stages of the full approximator.
    pub fn approximator_layers(&self) -> usize {
        self.tree_depth() + 2
    }

    /// Grid multi-index `n` of flat index `k`.
    pub fn grid_index(&self, mut k: usize) -> Vec<i64> {
        let side = self.side();
        let mut n = vec![0i64; self.d];
        for i in (0..self.d).rev() {
            n[i] = (k % side) as i64 - self.n as i64;
            k /= side;
        }
        n
    }

    /// The grid point `Mn/N` of flat index `k`.
    pub fn grid_point(&self, k: usize) -> Vec<f64> {
        self.grid_index(k)
            .into_iter()
            .map(|ni| ni as f64 * self.m / self.n as f64)
            .collect()
    }

    /// All grid points in canonical order.
    pub fn grid_points(&self) -> Result<Vec<Vec<f64>>> {
        let g = self.grid_size()?;
        Ok((0..g).map(|k| self.grid_point(k)).collect())
    }
}

pub(crate) fn ceil_log2(x: usize) -> usize {
    assert!(x >= 1);
    (usize::BITS - (x - 1).leading_zeros()) as usize
}

/// Closed-form spike `φ(z)`.
pub fn spike(z: &[f64]) -> f64 {
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for &v in z {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (1.0 + lo - hi).max(0.0)
}

// ---------------------------------------------------------------------------
// Symbolic builder

/// `Σ wᵤ·uᵤ + c` over the units of one stage (stage 0 = network inputs).
#[derive(Debug, Clone, Default)]
struct Form {
    terms: Vec<(u32, f64)>,
    c: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Key {
    terms: Vec<(u32, u64)>,
    c: u64,
}

fn bits(x: f64) -> u64 {
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

impl Form {
    fn constant(c: f64) -> Self {
        Form { terms: vec![], c }
    }

    fn var(u: u32, w: f64) -> Self {
        Form {
            terms: vec![(u, w)],
            c: 0.0,
        }
    }

    /// `self + s·other`, dropping terms that cancel.
    fn plus(&self, other: &Form, s: f64) -> Form {
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (a, b) = (&self.terms, &other.terms);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let t = if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                i += 1;
                a[i - 1]
            } else if i == a.len() || b[j].0 < a[i].0 {
                j += 1;
                (b[j - 1].0, s * b[j - 1].1)
            } else {
                i += 1;
                j += 1;
                (a[i - 1].0, a[i - 1].1 + s * b[j - 1].1)
            };
            if t.1 != 0.0 {
                terms.push(t);
            }
        }
        Form {
            terms,
            c: self.c + s * other.c,
        }
    }

    fn key(&self) -> Key {
        Key {
            terms: self.terms.iter().map(|&(u, w)| (u, bits(w))).collect(),
            c: bits(self.c),
        }
    }
}

#[derive(Default)]
struct Stage {
    pre: Vec<Form>,
    pass: Vec<bool>,
    index: HashMap<Key, u32>,
}

struct Builder {
    input_dim: usize,
    /// `N/M`, the scale used when carrying inputs through a ReLU stage.
    scale: f64,
    /// `stages[s-1]` holds the units of stage `s`.
    stages: Vec<Stage>,
}

struct Node {
    stage: usize,
    leaf: bool,
    min: Vec<Form>,
    max: Vec<Form>,
}

impl Builder {
    fn new(input_dim: usize, scale: f64) -> Self {
        Builder {
            input_dim,
            scale,
            stages: vec![],
        }
    }

    /// Unit `relu(pre)` at stage `s ≥ 1`. A pass-through reuses any
    /// identical unit; a gadget reuses only an identical pass-through.
    fn unit(&mut self, s: usize, pre: Form, pass: bool) -> u32 {
        while self.stages.len() < s {
            self.stages.push(Stage::default());
        }
        let st = &mut self.stages[s - 1];
        let key = pre.key();
        if let Some(&u) = st.index.get(&key) {
            if pass || st.pass[u as usize] {
                return u;
            }
        }
        let u = st.pre.len() as u32;
        st.pre.push(pre);
        st.pass.push(pass);
        st.index.entry(key).or_insert(u);
        u
    }

    /// Re-expresses a stage-`from` form over the units of stage `from + 1`.
    fn carry_once(&mut self, f: &Form, from: usize) -> Form {
        let mut out = Form::constant(f.c);
        for &(u, w) in &f.terms {
            let g = if from == 0 {
                let s = self.scale;
                let p = self.unit(1, Form::var(u, s), true);
                let q = self.unit(1, Form::var(u, -s), true);
                let mut g = Form::var(p, w / s);
                g = g.plus(&Form::var(q, w / s), -1.0);
                g
            } else {
                let v = self.unit(from + 1, Form::var(u, 1.0), true);
                Form::var(v, w)
            };
            out = out.plus(&g, 1.0);
        }
        out
    }

    fn carry(&mut self, f: &Form, from: usize, to: usize) -> Form {
        let mut f = f.clone();
        for s in from..to {
            f = self.carry_once(&f, s);
        }
        f
    }

    fn carry_all(&mut self, fs: &[Form], from: usize, to: usize) -> Vec<Form> {
        fs.iter().map(|f| self.carry(f, from, to)).collect()
    }

    /// Min and max over coordinates `lo..hi` (and the constant 0 when
    /// `zero`), one form per grid instance of those coordinates.
    fn node(&mut self, lo: usize, hi: usize, zero: bool, n: usize) -> Node {
        let c = hi - lo + zero as usize;
        debug_assert!(c >= 1);
        if c == 1 {
            let leaf: Vec<Form> = if zero {
                vec![Form::constant(0.0)]
            } else {
                let n = n as i64;
                (-n..=n)
                    .map(|ni| Form {
                        terms: vec![(lo as u32, self.scale)],
                        c: -(ni as f64),
                    })
                    .collect()
            };
            return Node {
                stage: 0,
                leaf: true,
                min: leaf.clone(),
                max: leaf,
            };
        }
        let k = c.div_ceil(2);
        let left = self.node(lo, lo + k, false, n);
        let right = self.node(lo + k, hi, zero, n);
        let s = left.stage.max(right.stage) + 1;
        let rc = right.min.len();
        let count = left.min.len() * rc;
        let mut min = Vec::with_capacity(count);
        let mut max = Vec::with_capacity(count);

        if left.leaf && right.leaf {
            let a = self.carry_all(&left.min, 0, 1);
            let b = self.carry_all(&right.min, 0, 1);
            for i in 0..left.min.len() {
                for j in 0..rc {
                    let r = self.unit(1, left.min[i].plus(&right.min[j], -1.0), false);
                    let r = Form::var(r, 1.0);
                    min.push(a[i].plus(&r, -1.0));
                    max.push(b[j].plus(&r, 1.0));
                }
            }
            return Node {
                stage: 1,
                leaf: false,
                min,
                max,
            };
        }

        let carry_left = if left.leaf != right.leaf {
            left.leaf
        } else {
            left.min.len() < rc
        };
        let lmin = self.carry_all(&left.min, left.stage, s - 1);
        let lmax = self.carry_all(&left.max, left.stage, s - 1);
        let rmin = self.carry_all(&right.min, right.stage, s - 1);
        let rmax = self.carry_all(&right.max, right.stage, s - 1);
        let (cmin, cmax) = if carry_left {
            (&lmin, &lmax)
        } else {
            (&rmin, &rmax)
        };
        let cmin_up = self.carry_all(cmin, s - 1, s);
        let cmax_up = self.carry_all(cmax, s - 1, s);
        for i in 0..left.min.len() {
            for j in 0..rc {
                let (ci, oi) = if carry_left { (i, j) } else { (j, i) };
                let (omin, omax) = if carry_left {
                    (&rmin, &rmax)
                } else {
                    (&lmin, &lmax)
                };
                let r = self.unit(s, cmin[ci].plus(&omin[oi], -1.0), false);
                min.push(cmin_up[ci].plus(&Form::var(r, 1.0), -1.0));
                let r = self.unit(s, omax[oi].plus(&cmax[ci], -1.0), false);
                max.push(cmax_up[ci].plus(&Form::var(r, 1.0), 1.0));
            }
        }
        Node {
            stage: s,
            leaf: false,
            min,
            max,
        }
    }

    /// Emits the network whose last stage computes `act(rows)` over the
    /// units of the current top stage, dropping units the output never reads.
    fn finish(self, rows: Vec<Form>, act: Activation) -> Result<ReluNetwork> {
        let depth = self.stages.len();
        let mut live: Vec<Vec<bool>> = self
            .stages
            .iter()
            .map(|s| vec![false; s.pre.len()])
            .collect();
        let mark = |live: &mut Vec<bool>, f: &Form| {
            for &(u, _) in &f.terms {
                live[u as usize] = true;
            }
        };
        if depth > 0 {
            for f in &rows {
                mark(&mut live[depth - 1], f);
            }
            for s in (1..depth).rev() {
                let (below, above) = live.split_at_mut(s);
                for (u, f) in self.stages[s].pre.iter().enumerate() {
                    if above[0][u] {
                        mark(&mut below[s - 1], f);
                    }
                }
            }
        }
        let renum: Vec<Vec<u32>> = live
            .iter()
            .map(|l| {
                let mut next = 0u32;
                l.iter()
                    .map(|&alive| {
                        let id = next;
                        if alive {
                            next += 1;
                        }
                        id
                    })
                    .collect()
            })
            .collect();

        let to_row = |f: &Form, map: Option<&Vec<u32>>| -> Vec<(usize, f64)> {
            f.terms
                .iter()
                .map(|&(u, w)| (map.map_or(u, |m| m[u as usize]) as usize, w))
                .collect()
        };
        let mut layers = Vec::with_capacity(depth + 1);
        let mut width = self.input_dim;
        for s in 0..depth {
            let below = if s == 0 { None } else { Some(&renum[s - 1]) };
            let mut rows = Vec::new();
            let mut bias = Vec::new();
            for (u, f) in self.stages[s].pre.iter().enumerate() {
                if live[s][u] {
                    rows.push(to_row(f, below));
                    bias.push(f.c);
                }
            }
            if rows.is_empty() {
                return Err(Error::domain(format!("stage {} has no live units", s + 1)));
            }
            let n = rows.len();
            layers.push(Layer::from_rows(width, rows, bias, Activation::Relu)?);
            width = n;
        }
        let below = if depth == 0 {
            None
        } else {
            Some(&renum[depth - 1])
        };
        let bias = rows.iter().map(|f| f.c).collect();
        let rows = rows.iter().map(|f| to_row(f, below)).collect();
        layers.push(Layer::from_rows(width, rows, bias, act)?);
        ReluNetwork::new(self.input_dim, layers)
    }
}

fn root(spec: &ApproximatorSpec) -> Result<(Builder, Node)> {
    spec.grid_size()?;
    let mut b = Builder::new(spec.d, spec.n as f64 / spec.m);
    let node = b.node(0, spec.d, true, spec.n);
    debug_assert_eq!(node.stage, spec.tree_depth());
    Ok((b, node))
}

/// Network `ℝᵈ → ℝ^{(2N+1)^d}` whose entry `n` is the min (or max) of
/// `{Ny₁/M − n₁, …, Ny_d/M − n_d, 0}`. It has `⌈log₂(d+1)⌉` ReLU stages
/// followed by a linear readout.
pub fn build_minmax_net(spec: &ApproximatorSpec, kind: Extremum) -> Result<ReluNetwork> {
    let (b, node) = root(spec)?;
    let rows = match kind {
        Extremum::Min => node.min,
        Extremum::Max => node.max,
    };
    b.finish(rows, Activation::Linear)
}

fn spike_rows(node: &Node) -> Vec<Form> {
    node.min
        .iter()
        .zip(&node.max)
        .map(|(lo, hi)| lo.plus(hi, -1.0).plus(&Form::constant(1.0), 1.0))
        .collect()
}

/// Network `ℝᵈ → ℝ^{(2N+1)^d}` with entry `n` equal to `φ(Ny/M − n)`;
/// `⌈log₂(d+1)⌉ + 1` ReLU stages.
pub fn build_spike_net(spec: &ApproximatorSpec) -> Result<ReluNetwork> {
    let (b, node) = root(spec)?;
    let rows = spike_rows(&node);
    b.finish(rows, Activation::Relu)
}

/// `ĝ(y) = Σₙ values[n]·φ(Ny/M − n)` with `values` in canonical grid order.
pub fn build_approximator_from_values(
    spec: &ApproximatorSpec,
    values: &[Vec<f64>],
) -> Result<ReluNetwork> {
    let g = spec.grid_size()?;
    if values.len() != g {
        return Err(Error::domain(format!(
            "{} grid values for {g} grid nodes",
            values.len()
        )));
    }
    if let Some(k) = values.iter().position(|v| v.len() != spec.p) {
        return Err(Error::domain(format!(
            "grid value {k} has length {}, expected {}",
            values[k].len(),
            spec.p
        )));
    }
    let (mut b, node) = root(spec)?;
    let top = spec.tree_depth() + 1;
    let phi: Vec<u32> = spike_rows(&node)
        .into_iter()
        .map(|f| b.unit(top, f, false))
        .collect();
    let rows = (0..spec.p)
        .map(|j| {
            let mut terms: Vec<(u32, f64)> = phi
                .iter()
                .zip(values)
                .filter(|(_, v)| v[j] != 0.0)
                .map(|(&u, v)| (u, v[j]))
                .collect();
            terms.sort_by_key(|t| t.0);
            Form { terms, c: 0.0 }
        })
        .collect();
    b.finish(rows, Activation::Linear)
}

/// As [`build_approximator_from_values`], checking that the samples sit on
/// the grid points in canonical order.
pub fn build_approximator(
    spec: &ApproximatorSpec,
    grid_values: &FunctionSamples,
) -> Result<ReluNetwork> {
    let g = spec.grid_size()?;
    if grid_values.len() != g {
        return Err(Error::domain(format!(
            "{} samples for {g} grid nodes",
            grid_values.len()
        )));
    }
    if grid_values.inputs.dim != spec.d || grid_values.output_dim != spec.p {
        return Err(Error::domain("sample dimensions do not match the spec"));
    }
    let tol = 1e-12 * spec.m;
    for (k, x) in grid_values.inputs.points.iter().enumerate() {
        let want = spec.grid_point(k);
        if x.iter().zip(&want).any(|(a, b)| (a - b).abs() > tol) {
            return Err(Error::domain(format!(
                "sample {k} is not grid point {want:?}"
            )));
        }
    }
    build_approximator_from_values(spec, &grid_values.values)
}

/// Samples `g` on the grid in canonical order.
pub fn sample_grid<F>(spec: &ApproximatorSpec, g: F, exec: Exec) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync + Send,
{
    let n = spec.grid_size()?;
    Ok(exec.map(n, |k| g(&spec.grid_point(k))))
}

/// Smallest `N` with `Δ(M√d/N) ≤ ε`. For a Hölder modulus this is
/// `⌈M√d/(ε/L)^{1/α}⌉`.
pub fn choose_n(delta: &Modulus, m: f64, d: usize, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("ε must be positive, got {eps}")));
    }
    if !(m > 0.0) || d == 0 {
        return Err(Error::domain("M and d must be positive"));
    }
    delta.validate()?;
    let diam = m * (d as f64).sqrt();
    let ok = |n: usize| delta.eval_unchecked(diam / n as f64) <= eps;
    let mut n = match delta.as_holder() {
        Some((l, alpha)) => {
            let x = diam / (eps / l).powf(1.0 / alpha);
            // absorb last-bit rounding in the closed form; `ok` has the final say
            ((x * (1.0 - 1e-12)).ceil() as usize).max(1)
        }
        None => {
            let mut hi = 1usize;
            while !ok(hi) {
                hi = hi
                    .checked_mul(2)
                    .ok_or_else(|| Error::domain("no grid resolution reaches ε"))?;
            }
            let mut lo = hi / 2;
            while lo + 1 < hi {
                let mid = lo + (hi - lo) / 2;
                if ok(mid) {
                    hi = mid
                } else {
                    lo = mid
                }
            }
            hi
        }
    };
    while !ok(n) {
        n += 1;
    }
    Ok(n)
}

/// Per-grid-node construction constants of this builder, measured on the
/// `N = 1` and `N = 2` grids of dimension `d` (the largest ratios over `N`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeConstants {
    /// Hidden edges per grid node, excluding the readout.
    pub c1: f64,
    /// Hidden nodes per grid node.
    pub c2: f64,
}

pub fn size_constants(d: usize) -> Result<SizeConstants> {
    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    for n in [1, 2] {
        let spec = ApproximatorSpec::new(d, n, 1.0, 1)?;
        let g = spec.grid_size()? as f64;
        let net = build_spike_net(&spec)?;
        // every bias counts as a potential edge, since zero biases depend on N
        let biases: usize = net.layers().iter().map(|l| l.out_dim()).sum();
        let nnz: usize = net.layers().iter().map(|l| l.nnz()).sum();
        c1 = c1.max((nnz + biases) as f64 / g);
        c2 = c2.max(net.size().nodes as f64 / g);
    }
    Ok(SizeConstants { c1, c2 })
}

/// Upper bounds `(C₂(2N+1)^d + p, (p + C₁)(2N+1)^d, ⌈log₂(d+1)⌉ + 2)` with the
/// constants from [`size_constants`]. The layer count is exact.
pub fn predicted_sizes(spec: &ApproximatorSpec) -> Result<NetSize> {
    let g = spec.grid_size()? as f64;
    let c = size_constants(spec.d)?;
    Ok(NetSize {
        nodes: (c.c2 * g).ceil() as usize + spec.p,
        edges: ((spec.p as f64 + c.c1) * g).ceil() as usize,
        layers: spec.approximator_layers(),
    })
}

/// Largest `‖net(y) − g(y)‖₂` found over the cube.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupError {
    pub max: f64,
    pub argmax: Vec<f64>,
    pub points: usize,
    /// `dense_grid` or `monte_carlo`; either way a lower bound on the true sup.
    pub method: String,
}

/// Sup-error of `net` against `g` on `[−M, M]^d`: a dense grid refined
/// [`SUP_REFINE`]× per axis when `d ≤ 2`, otherwise `mc_samples` uniform
/// points drawn from `seed`.
pub fn measure_sup_error<F>(
    net: &ReluNetwork,
    spec: &ApproximatorSpec,
    g: F,
    mc_samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<SupError>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync + Send,
{
    let d = spec.d;
    let m = spec.m;
    let (total, dense) = if d <= 2 {
        let per = 2 * SUP_REFINE * spec.n + 1;
        (per.pow(d as u32), Some(per))
    } else {
        (mc_samples, None)
    };
    if total == 0 {
        return Err(Error::domain("no evaluation points"));
    }
    let point = |k: usize, r: &mut rng::Rng| -> Vec<f64> {
        match dense {
            Some(per) => {
                let mut k = k;
                let mut y = vec![0.0; d];
                for yi in y.iter_mut().rev() {
                    let j = k % per;
                    k /= per;
                    *yi = -m + 2.0 * m * j as f64 / (per - 1) as f64;
                }
                y
            }
            None => (0..d).map(|_| r.random_range(-m..=m)).collect(),
        }
    };
    let parts = exec.map_chunks(total, SUP_CHUNK, |range| -> Result<(f64, Vec<f64>)> {
        let mut r = rng::stream(seed, STREAM_SUP, (range.start / SUP_CHUNK) as u64);
        let ys: Vec<Vec<f64>> = range.map(|k| point(k, &mut r)).collect();
        let out = net.evaluate_batch(&ys, Exec::Sequential)?;
        let mut best = (-1.0, vec![]);
        for (y, o) in ys.iter().zip(&out) {
            let want = g(y);
            let e = o
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if e > best.0 {
                best = (e, y.clone());
            }
        }
        Ok(best)
    });
    let mut best = (-1.0, vec![]);
    for p in parts {
        let p = p?;
        if p.0 > best.0 {
            best = p;
        }
    }
    Ok(SupError {
        max: best.0,
        argmax: best.1,
        points: total,
        method: if dense.is_some() {
            "dense_grid"
        } else {
            "monte_carlo"
        }
        .into(),
    })
}
