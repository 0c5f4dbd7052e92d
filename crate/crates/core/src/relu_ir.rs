//! Layered feedforward ReLU networks with exact size accounting.
//!
//! Weights are stored in compressed sparse rows. Structural zeros are never
//! stored, so the edge count of a layer is the number of stored weights plus
//! the number of nonzero biases.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fmt;
use serde::Serialize;

/// Points per block in batched evaluation.
const BLOCK: usize = 32;

/// Above this many entries a layer is serialized in sparse form.
const DENSE_LIMIT: usize = 1 << 20;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Linear => x,
        }
    }
}

/// One affine stage `x ↦ act(Wx + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    in_dim: usize,
    out_dim: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl Layer {
    /// Builds a layer from a row-major dense matrix. Zero entries are dropped.
    pub fn from_dense(
        out_dim: usize,
        in_dim: usize,
        weights: &[f64],
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if weights.len() != out_dim * in_dim {
            return Err(Error::shape(format!(
                "weight matrix has {} entries, expected {out_dim}×{in_dim}",
                weights.len()
            )));
        }
        let rows = (0..out_dim)
            .map(|r| {
                weights[r * in_dim..(r + 1) * in_dim]
                    .iter()
                    .enumerate()
                    .map(|(c, &w)| (c, w))
                    .collect()
            })
            .collect();
        Self::from_rows(in_dim, rows, bias, activation)
    }

    /// Builds a layer from per-row `(column, weight)` lists. Entries are sorted,
    /// duplicate columns are summed, and zeros are dropped.
    pub fn from_rows(
        in_dim: usize,
        rows: Vec<Vec<(usize, f64)>>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        let out_dim = rows.len();
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::shape(
                "layers must have positive input and output width",
            ));
        }
        if in_dim > u32::MAX as usize {
            return Err(Error::shape("input width exceeds the index range"));
        }
        if bias.len() != out_dim {
            return Err(Error::shape(format!(
                "bias has length {}, expected {out_dim}",
                bias.len()
            )));
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::domain("non-finite bias"));
        }
        let mut row_ptr = Vec::with_capacity(out_dim + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                let mut w = 0.0;
                while i < row.len() && row[i].0 == c {
                    w += row[i].1;
                    i += 1;
                }
                if c >= in_dim {
                    return Err(Error::shape(format!(
                        "column {c} out of range for width {in_dim}"
                    )));
                }
                if !w.is_finite() {
                    return Err(Error::domain("non-finite weight"));
                }
                if w != 0.0 {
                    col.push(c as u32);
                    val.push(w);
                }
            }
            row_ptr.push(col.len());
        }
        Ok(Layer {
            in_dim,
            out_dim,
            row_ptr,
            col,
            val,
            bias,
            activation,
        })
    }

    /// The `n × n` identity as a linear stage.
    pub fn identity(n: usize) -> Result<Self> {
        let rows = (0..n).map(|i| vec![(i, 1.0)]).collect();
        Self::from_rows(n, rows, vec![0.0; n], Activation::Linear)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Stored `(column, weight)` entries of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col[span.clone()]
            .iter()
            .zip(&self.val[span])
            .map(|(&c, &w)| (c as usize, w))
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn edges(&self) -> usize {
        self.nnz() + self.bias.iter().filter(|&&b| b != 0.0).count()
    }

    /// Row-major dense copy of the weights.
    pub fn dense_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.out_dim * self.in_dim];
        for r in 0..self.out_dim {
            for (c, v) in self.row(r) {
                w[r * self.in_dim + c] = v;
            }
        }
        w
    }

    /// An upper bound on the spectral norm: `min(‖W‖_F, √(‖W‖₁‖W‖_∞))`.
    pub fn norm_bound(&self) -> f64 {
        let frob = self.val.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut col_sums = vec![0.0; self.in_dim];
        let mut max_row = 0.0f64;
        for r in 0..self.out_dim {
            let mut s = 0.0;
            for (c, v) in self.row(r) {
                s += v.abs();
                col_sums[c] += v.abs();
            }
            max_row = max_row.max(s);
        }
        let max_col = col_sums.iter().cloned().fold(0.0, f64::max);
        frob.min((max_col * max_row).sqrt())
    }

    fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.out_dim {
            let mut s = self.bias[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.val[k] * x[self.col[k] as usize];
            }
            out.push(self.activation.apply(s));
        }
    }

    /// Block version of `apply_into`; `x` and `out` are laid out `[unit][point]`
    /// with `b` points per unit.
    fn apply_block(&self, x: &[f64], b: usize, out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.out_dim * b, 0.0);
        for r in 0..self.out_dim {
            let acc = &mut out[r * b..(r + 1) * b];
            acc.fill(self.bias[r]);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let w = self.val[k];
                let src = &x[self.col[k] as usize * b..][..b];
                for (a, s) in acc.iter_mut().zip(src) {
                    *a += w * s;
                }
            }
            if self.activation == Activation::Relu {
                for a in acc.iter_mut() {
                    *a = a.max(0.0);
                }
            }
        }
    }
}

/// Node, edge and layer counts of a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NetSize {
    pub nodes: usize,
    pub edges: usize,
    pub layers: usize,
}

impl std::ops::Add for NetSize {
    type Output = NetSize;
    fn add(self, o: NetSize) -> NetSize {
        NetSize {
            nodes: self.nodes + o.nodes,
            edges: self.edges + o.edges,
            layers: self.layers + o.layers,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReluNetwork {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl ReluNetwork {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::shape("input dimension must be positive"));
        }
        if layers.is_empty() {
            return Err(Error::domain("a network needs at least one layer"));
        }
        let mut width = input_dim;
        for (k, l) in layers.iter().enumerate() {
            if l.in_dim != width {
                return Err(Error::shape(format!(
                    "layer {k} expects width {}, previous stage has {width}",
                    l.in_dim
                )));
            }
            width = l.out_dim;
        }
        Ok(ReluNetwork { input_dim, layers })
    }

    /// A single linear identity stage on `ℝⁿ`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, vec![Layer::identity(n)?])
    }

    /// A single linear stage computing `Wx` with row-major `W`.
    pub fn linear(out_dim: usize, in_dim: usize, weights: &[f64]) -> Result<Self> {
        let l = Layer::from_dense(
            out_dim,
            in_dim,
            weights,
            vec![0.0; out_dim],
            Activation::Linear,
        )?;
        Self::new(in_dim, vec![l])
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").out_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// `nodes` counts non-input units; `layers` counts affine stages.
    pub fn size(&self) -> NetSize {
        NetSize {
            nodes: self.layers.iter().map(|l| l.out_dim).sum(),
            edges: self.layers.iter().map(|l| l.edges()).sum(),
            layers: self.layers.len(),
        }
    }

    /// Node count including the input units.
    pub fn size_with_inputs(&self) -> NetSize {
        let mut s = self.size();
        s.nodes += self.input_dim;
        s
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::shape(format!(
                "input has length {}, network expects {}",
                x.len(),
                self.input_dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("input has a non-finite entry"));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for (k, l) in self.layers.iter().enumerate() {
            l.apply_into(&cur, &mut next);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    layer: k,
                    msg: "non-finite activation".into(),
                });
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Evaluates many inputs. Bitwise identical to calling [`Self::evaluate`]
    /// on each input.
    pub fn evaluate_batch(&self, xs: &[Vec<f64>], exec: Exec) -> Result<Vec<Vec<f64>>> {
        for x in xs {
            self.check_input(x)?;
        }
        let blocks = exec.map_chunks(xs.len(), BLOCK, |range| self.eval_block(&xs[range]));
        let mut out = Vec::with_capacity(xs.len());
        for b in blocks {
            out.extend(b?);
        }
        Ok(out)
    }

    fn eval_block(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let b = xs.len();
        let mut cur = vec![0.0; self.input_dim * b];
        for (j, x) in xs.iter().enumerate() {
            for (i, v) in x.iter().enumerate() {
                cur[i * b + j] = *v;
            }
        }
        let mut next = Vec::new();
        for (k, l) in self.layers.iter().enumerate() {
            l.apply_block(&cur, b, &mut next);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    layer: k,
                    msg: "non-finite activation".into(),
                });
            }
            std::mem::swap(&mut cur, &mut next);
        }
        let p = self.output_dim();
        Ok((0..b)
            .map(|j| (0..p).map(|i| cur[i * b + j]).collect())
            .collect())
    }

    /// `x ↦ second(self(x))`. Sizes add exactly.
    pub fn compose(&self, second: &ReluNetwork) -> Result<ReluNetwork> {
        if self.output_dim() != second.input_dim {
            return Err(Error::shape(format!(
                "cannot feed width {} into a network expecting {}",
                self.output_dim(),
                second.input_dim
            )));
        }
        let mut layers = self.layers.clone();
        layers.extend(second.layers.iter().cloned());
        ReluNetwork::new(self.input_dim, layers)
    }

    /// Runs networks side by side and concatenates their outputs in order.
    ///
    /// With `shared_input` every part reads the same input; otherwise the
    /// inputs are concatenated. Shorter parts are padded at the end with
    /// identity linear stages, which count toward the size.
    pub fn parallel(nets: &[ReluNetwork], shared_input: bool) -> Result<ReluNetwork> {
        let first = nets
            .first()
            .ok_or_else(|| Error::domain("parallel needs at least one network"))?;
        if shared_input && nets.iter().any(|n| n.input_dim != first.input_dim) {
            return Err(Error::shape(
                "shared-input parts must have equal input widths",
            ));
        }
        let depth = nets.iter().map(|n| n.layers.len()).max().unwrap_or(0);
        let input_dim = if shared_input {
            first.input_dim
        } else {
            nets.iter().map(|n| n.input_dim).sum()
        };

        // A pad after a relu stage sees nonnegative values, so it is exact
        // under either activation and may adopt whatever the stage uses.
        let mut padded: Vec<Vec<(Layer, bool)>> = Vec::with_capacity(nets.len());
        for n in nets {
            let flexible = n.layers.last().expect("nonempty").activation == Activation::Relu;
            let mut ls: Vec<(Layer, bool)> = n.layers.iter().map(|l| (l.clone(), false)).collect();
            while ls.len() < depth {
                ls.push((Layer::identity(n.output_dim())?, flexible));
            }
            padded.push(ls);
        }

        let mut layers = Vec::with_capacity(depth);
        for k in 0..depth {
            let fixed: Vec<Activation> = padded
                .iter()
                .filter(|ls| !ls[k].1)
                .map(|ls| ls[k].0.activation)
                .collect();
            let act = fixed.first().copied().unwrap_or(Activation::Linear);
            if fixed.iter().any(|&a| a != act) {
                return Err(Error::domain(format!(
                    "parallel parts disagree on the activation of stage {k}"
                )));
            }
            let mut rows = Vec::new();
            let mut bias = Vec::new();
            let mut col_off = 0;
            for ls in &padded {
                let l = &ls[k].0;
                for r in 0..l.out_dim {
                    rows.push(l.row(r).map(|(c, w)| (c + col_off, w)).collect::<Vec<_>>());
                    bias.push(l.bias[r]);
                }
                if k > 0 || !shared_input {
                    col_off += l.in_dim;
                }
            }
            let in_dim = if k == 0 {
                input_dim
            } else {
                padded.iter().map(|ls| ls[k].0.in_dim).sum()
            };
            layers.push(Layer::from_rows(in_dim, rows, bias, act)?);
        }
        ReluNetwork::new(input_dim, layers)
    }

    /// Upper bound on the Lipschitz constant: the product of per-stage
    /// spectral-norm bounds.
    pub fn lipschitz_bound(&self) -> f64 {
        self.layers.iter().map(|l| l.norm_bound()).product()
    }

    /// Versioned JSON text; floats carry 17 significant digits.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "{{\"format_version\":{FORMAT_VERSION},\"input_dim\":{},\"layers\":[",
            self.input_dim
        ));
        for (k, l) in self.layers.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            s.push_str(&format!(
                "\n{{\"in_dim\":{},\"out_dim\":{},\"activation\":\"{}\",",
                l.in_dim,
                l.out_dim,
                l.activation.name()
            ));
            if l.in_dim * l.out_dim <= DENSE_LIMIT {
                s.push_str("\"weights\":");
                fmt::push_f64_array(&mut s, &l.dense_weights()).expect("weights are finite");
            } else {
                s.push_str("\"weights_sparse\":{\"row_ptr\":");
                fmt::push_usize_array(&mut s, l.row_ptr.iter().copied());
                s.push_str(",\"col\":");
                fmt::push_usize_array(&mut s, l.col.iter().map(|&c| c as usize));
                s.push_str(",\"val\":");
                fmt::push_f64_array(&mut s, &l.val).expect("weights are finite");
                s.push('}');
            }
            s.push_str(",\"bias\":");
            fmt::push_f64_array(&mut s, &l.bias).expect("biases are finite");
            s.push('}');
        }
        s.push_str("\n]}\n");
        s
    }

    pub fn deserialize(text: &str) -> Result<ReluNetwork> {
        let doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::parse(None, e.to_string()))?;
        let version = doc
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::parse(None, "missing `format_version`"))?;
        if version != FORMAT_VERSION {
            return Err(Error::parse(
                None,
                format!("unsupported format_version {version}"),
            ));
        }
        let input_dim = fmt::read_usize(&doc, "input_dim", None)?;
        let raw = doc
            .get("layers")
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::parse(None, "missing `layers`"))?;
        if raw.is_empty() {
            return Err(Error::parse(None, "network has no layers"));
        }
        let mut width = input_dim;
        let mut layers = Vec::with_capacity(raw.len());
        for (k, v) in raw.iter().enumerate() {
            let at = Some(k);
            let in_dim = fmt::read_usize(v, "in_dim", at)?;
            let out_dim = fmt::read_usize(v, "out_dim", at)?;
            if in_dim != width {
                return Err(Error::parse(
                    at,
                    format!("in_dim {in_dim} does not match previous width {width}"),
                ));
            }
            let activation = match v.get("activation").and_then(|a| a.as_str()) {
                Some("relu") => Activation::Relu,
                Some("linear") => Activation::Linear,
                _ => return Err(Error::parse(at, "missing or unknown activation")),
            };
            let bias = fmt::read_f64_array(
                v.get("bias").unwrap_or(&serde_json::Value::Null),
                "bias",
                at,
            )?;
            if bias.len() != out_dim {
                return Err(Error::parse(
                    at,
                    format!("bias has length {}, expected {out_dim}", bias.len()),
                ));
            }
            let layer = if let Some(w) = v.get("weights") {
                let w = fmt::read_f64_array(w, "weights", at)?;
                if w.len() != out_dim * in_dim {
                    return Err(Error::parse(
                        at,
                        format!(
                            "weights have {} entries, expected {}",
                            w.len(),
                            out_dim * in_dim
                        ),
                    ));
                }
                Layer::from_dense(out_dim, in_dim, &w, bias, activation)
            } else if let Some(sp) = v.get("weights_sparse") {
                let get = |key: &str| sp.get(key).unwrap_or(&serde_json::Value::Null);
                let row_ptr = fmt::read_usize_array(get("row_ptr"), "row_ptr", at)?;
                let col = fmt::read_usize_array(get("col"), "col", at)?;
                let val = fmt::read_f64_array(get("val"), "val", at)?;
                if row_ptr.len() != out_dim + 1
                    || col.len() != val.len()
                    || row_ptr[0] != 0
                    || *row_ptr.last().unwrap() != val.len()
                    || row_ptr.windows(2).any(|w| w[0] > w[1])
                {
                    return Err(Error::parse(at, "inconsistent sparse weight arrays"));
                }
                let rows = (0..out_dim)
                    .map(|r| {
                        (row_ptr[r]..row_ptr[r + 1])
                            .map(|i| (col[i], val[i]))
                            .collect()
                    })
                    .collect();
                Layer::from_rows(in_dim, rows, bias, activation)
            } else {
                return Err(Error::parse(at, "missing weights"));
            }
            .map_err(|e| Error::parse(at, e.to_string()))?;
            width = out_dim;
            layers.push(layer);
        }
        ReluNetwork::new(input_dim, layers).map_err(|e| Error::parse(None, e.to_string()))
    }
}
