//! Coordinatewise inf-convolution (McShane) extension of sampled functions.
//!
//! For anchors `zⱼ` with values `vⱼ ∈ ℝᵖ` and a modulus `Δ`, the extension is
//! `gᵢ(y) = minⱼ vⱼᵢ + Δ(‖y − zⱼ‖₂)`. It agrees with the samples at the anchors
//! when they are coordinatewise `Δ`-consistent, and each coordinate admits `Δ`
//! as a modulus of continuity, so the vector extension admits `√p·Δ`.
//!
//! The minimum runs over the finite anchor set, so the result extends the
//! restriction of the sampled function to the anchors.

use crate::domain::{dist, FunctionSamples, Modulus};
use crate::error::{Error, Result};
use crate::exec::Exec;
use serde::Serialize;

/// Relative slack used when the oracle checks its anchors, so that pairs
/// that are consistent up to rounding are accepted.
pub const CONSISTENCY_SLACK: f64 = 1e-12;

/// A pair of samples whose coordinate difference exceeds the modulus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub coord: usize,
    /// `|vᵢ − vⱼ| − Δ(‖zᵢ − zⱼ‖)`, positive.
    pub gap: f64,
}

fn violations(
    samples: &FunctionSamples,
    modulus: &Modulus,
    slack: f64,
    exec: Exec,
) -> Vec<Violation> {
    let z = &samples.inputs.points;
    let v = &samples.values;
    exec.map(z.len(), |i| {
        let mut out = Vec::new();
        for j in i + 1..z.len() {
            let allowed = modulus.eval_unchecked(dist(&z[i], &z[j]));
            for c in 0..samples.output_dim {
                let gap = (v[i][c] - v[j][c]).abs() - allowed;
                if gap > slack * allowed.max(1.0) {
                    out.push(Violation {
                        i,
                        j,
                        coord: c,
                        gap,
                    });
                }
            }
        }
        out
    })
    .concat()
}

/// Every pair `(i, j)`, `i < j`, and coordinate where the samples are not
/// `Δ`-consistent. Empty exactly when the samples are consistent.
pub fn check_consistency(
    samples: &FunctionSamples,
    modulus: &Modulus,
    exec: Exec,
) -> Result<Vec<Violation>> {
    modulus.validate()?;
    Ok(violations(samples, modulus, 0.0, exec))
}

#[derive(Debug, Clone)]
pub struct ExtensionOracle {
    anchors: FunctionSamples,
    modulus: Modulus,
    /// Per coordinate, anchor indices sorted by value.
    order: Vec<Vec<usize>>,
}

impl ExtensionOracle {
    /// Builds the oracle after checking anchor consistency. `modulus` is used
    /// as given: pass the transformed modulus when anchors are embedded points.
    pub fn new(anchors: FunctionSamples, modulus: Modulus, exec: Exec) -> Result<Self> {
        modulus.validate()?;
        if anchors.is_empty() {
            return Err(Error::domain("extension needs at least one anchor"));
        }
        if let Some(v) = violations(&anchors, &modulus, CONSISTENCY_SLACK, exec).first() {
            return Err(Error::domain(format!(
                "anchors {} and {} are inconsistent in coordinate {} by {:e}",
                v.i, v.j, v.coord, v.gap
            )));
        }
        let order = (0..anchors.output_dim)
            .map(|c| {
                let mut idx: Vec<usize> = (0..anchors.len()).collect();
                idx.sort_by(|&a, &b| anchors.values[a][c].total_cmp(&anchors.values[b][c]));
                idx
            })
            .collect();
        Ok(ExtensionOracle {
            anchors,
            modulus,
            order,
        })
    }

    pub fn anchors(&self) -> &FunctionSamples {
        &self.anchors
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn input_dim(&self) -> usize {
        self.anchors.inputs.dim
    }

    pub fn output_dim(&self) -> usize {
        self.anchors.output_dim
    }

    fn check(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.input_dim() {
            return Err(Error::shape(format!(
                "query has length {}, expected {}",
                y.len(),
                self.input_dim()
            )));
        }
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("query is not finite"));
        }
        Ok(())
    }

    /// Brute-force evaluation over all anchors.
    pub fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check(y)?;
        let z = &self.anchors.inputs.points;
        let mut out = vec![f64::INFINITY; self.output_dim()];
        for (zj, vj) in z.iter().zip(&self.anchors.values) {
            let lift = self.modulus.eval_unchecked(dist(y, zj));
            for (o, v) in out.iter_mut().zip(vj) {
                *o = o.min(v + lift);
            }
        }
        Ok(out)
    }

    /// Same values as [`eval`](Self::eval), scanning anchors by increasing
    /// value and stopping once the value alone reaches the running minimum.
    pub fn eval_pruned(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check(y)?;
        let z = &self.anchors.inputs.points;
        let vals = &self.anchors.values;
        let mut lift = vec![f64::NAN; z.len()];
        let mut out = Vec::with_capacity(self.output_dim());
        for (c, order) in self.order.iter().enumerate() {
            let mut best = f64::INFINITY;
            for &j in order {
                let v = vals[j][c];
                if v >= best {
                    break;
                }
                if lift[j].is_nan() {
                    lift[j] = self.modulus.eval_unchecked(dist(y, &z[j]));
                }
                best = best.min(v + lift[j]);
            }
            out.push(best);
        }
        Ok(out)
    }

    pub fn eval_batch(&self, ys: &[Vec<f64>], exec: Exec) -> Result<Vec<Vec<f64>>> {
        exec.map_slice(ys, |y| self.eval_pruned(y))
            .into_iter()
            .collect()
    }
}

/// Extension value at `y`; see [`ExtensionOracle::eval`].
pub fn extend_eval(oracle: &ExtensionOracle, y: &[f64]) -> Result<Vec<f64>> {
    oracle.eval_pruned(y)
}
