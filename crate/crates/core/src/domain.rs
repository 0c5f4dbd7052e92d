//! Shared domain types: moduli of continuity, point clouds, sampled functions.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A nondecreasing `Δ: [0, ∞) → [0, ∞)` with `Δ(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulus {
    /// `Δ(r) = L·r^α`.
    Holder { l: f64, alpha: f64 },
    /// Piecewise-linear through the knots `(r[i], delta[i])`, extended past the
    /// last knot with the last segment's slope. The first knot is `(0, 0)`.
    Tabulated { r: Vec<f64>, delta: Vec<f64> },
}

impl Modulus {
    pub fn holder(l: f64, alpha: f64) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::domain(format!(
                "Hölder constant must be positive, got {l}"
            )));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain(format!(
                "Hölder exponent must lie in (0,1], got {alpha}"
            )));
        }
        Ok(Modulus::Holder { l, alpha })
    }

    pub fn lipschitz(l: f64) -> Result<Self> {
        Self::holder(l, 1.0)
    }

    pub fn tabulated(r: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        let m = Modulus::Tabulated { r, delta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Modulus::Holder { l, alpha } => Self::holder(*l, *alpha).map(|_| ()),
            Modulus::Tabulated { r, delta } => {
                if r.len() != delta.len() || r.len() < 2 {
                    return Err(Error::domain(
                        "tabulated modulus needs at least two (r, Δ) knots",
                    ));
                }
                if r[0] != 0.0 || delta[0] != 0.0 {
                    return Err(Error::domain("tabulated modulus must start at (0, 0)"));
                }
                for w in r.windows(2) {
                    if !(w[1] > w[0]) || !w[1].is_finite() {
                        return Err(Error::domain(
                            "tabulated radii must be finite and strictly increasing",
                        ));
                    }
                }
                for w in delta.windows(2) {
                    if !(w[1] >= w[0]) || !w[1].is_finite() {
                        return Err(Error::domain(
                            "tabulated values must be finite and nondecreasing",
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// `(L, α)` if this is a Hölder modulus.
    pub fn as_holder(&self) -> Option<(f64, f64)> {
        match *self {
            Modulus::Holder { l, alpha } => Some((l, alpha)),
            _ => None,
        }
    }

    /// Evaluates `Δ(r)`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::domain(format!(
                "modulus evaluated at negative or NaN radius {r}"
            )));
        }
        Ok(self.eval_unchecked(r))
    }

    /// Evaluates `Δ(r)` for a radius already known to be nonnegative.
    #[inline]
    pub fn eval_unchecked(&self, r: f64) -> f64 {
        match self {
            Modulus::Holder { l, alpha } => {
                if *alpha == 1.0 {
                    l * r
                } else {
                    l * r.powf(*alpha)
                }
            }
            Modulus::Tabulated { r: rs, delta } => {
                let k = rs.partition_point(|&x| x <= r);
                let i = k.clamp(1, rs.len() - 1) - 1;
                let slope = (delta[i + 1] - delta[i]) / (rs[i + 1] - rs[i]);
                delta[i] + slope * (r - rs[i])
            }
        }
    }
}

/// The modulus that `g̃ = f ∘ A⁻¹` inherits on `A(S)` when `A` is a ρ-JL map.
///
/// With `holder_tight` and a Hölder input this is `(L/(1−ρ)^α, α)`; otherwise
/// it is `r ↦ √p·Δ(r/(1−ρ))`. `ρ = 0` is accepted and gives the isometric case.
pub fn transform_modulus(
    delta: &Modulus,
    rho: f64,
    p: usize,
    holder_tight: bool,
) -> Result<Modulus> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::domain(format!(
            "distortion ρ must lie in [0,1), got {rho}"
        )));
    }
    if p == 0 {
        return Err(Error::domain("output dimension p must be positive"));
    }
    delta.validate()?;
    let shrink = 1.0 - rho;
    let sp = (p as f64).sqrt();
    Ok(match delta {
        Modulus::Holder { l, alpha } => {
            let base = l / shrink.powf(*alpha);
            let l = if holder_tight { base } else { sp * base };
            Modulus::Holder { l, alpha: *alpha }
        }
        Modulus::Tabulated { r, delta } => Modulus::Tabulated {
            r: r.iter().map(|x| x * shrink).collect(),
            delta: delta.iter().map(|x| x * sp).collect(),
        },
    })
}

/// A finite sample of a set `S ⊂ ℝᴰ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    /// Seed the cloud was generated from, kept for provenance.
    pub seed: u64,
}

impl PointCloud {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("ambient dimension must be positive"));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::shape(format!(
                    "point {i} has length {}, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::domain(format!(
                    "point {i} has a non-finite coordinate"
                )));
            }
        }
        Ok(PointCloud { dim, points, seed })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Samples of `f: S → ℝᵖ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSamples {
    pub inputs: PointCloud,
    pub values: Vec<Vec<f64>>,
    pub output_dim: usize,
}

impl FunctionSamples {
    pub fn new(inputs: PointCloud, values: Vec<Vec<f64>>, output_dim: usize) -> Result<Self> {
        if output_dim == 0 {
            return Err(Error::domain("output dimension must be positive"));
        }
        if values.len() != inputs.len() {
            return Err(Error::shape(format!(
                "{} values for {} inputs",
                values.len(),
                inputs.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if v.len() != output_dim {
                return Err(Error::shape(format!(
                    "value {i} has length {}, expected {output_dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::domain(format!("value {i} is not finite")));
            }
        }
        Ok(FunctionSamples {
            inputs,
            values,
            output_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holder_examples() {
        assert_eq!(Modulus::holder(2.0, 1.0).unwrap().eval(0.0).unwrap(), 0.0);
        assert_eq!(Modulus::holder(2.0, 0.5).unwrap().eval(4.0).unwrap(), 4.0);
        assert_eq!(Modulus::holder(1.0, 1.0).unwrap().eval(0.3).unwrap(), 0.3);
    }

    #[test]
    fn negative_radius_rejected() {
        let m = Modulus::lipschitz(1.0).unwrap();
        assert!(matches!(m.eval(-1e-9), Err(Error::Domain(_))));
        assert!(m.eval(f64::NAN).is_err());
    }

    #[test]
    fn tabulated_interpolates_and_extrapolates() {
        let m = Modulus::tabulated(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.eval(0.5).unwrap(), 1.0);
        assert_eq!(m.eval(1.0).unwrap(), 2.0);
        assert_eq!(m.eval(2.0).unwrap(), 2.5);
        assert_eq!(m.eval(5.0).unwrap(), 4.0);
    }

    #[test]
    fn tabulated_rejects_bad_tables() {
        assert!(Modulus::tabulated(vec![0.0, 1.0], vec![0.0, -1.0]).is_err());
        assert!(Modulus::tabulated(vec![0.1, 1.0], vec![0.0, 1.0]).is_err());
        assert!(Modulus::tabulated(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn transform_examples() {
        let m = transform_modulus(&Modulus::holder(1.0, 1.0).unwrap(), 0.5, 1, true).unwrap();
        assert_eq!(m, Modulus::Holder { l: 2.0, alpha: 1.0 });
        let m = transform_modulus(&Modulus::holder(1.0, 0.5).unwrap(), 0.75, 1, true).unwrap();
        assert_eq!(m, Modulus::Holder { l: 2.0, alpha: 0.5 });
        let m = transform_modulus(&Modulus::holder(1.0, 1.0).unwrap(), 0.0, 4, false).unwrap();
        for r in [0.0, 0.25, 1.0, 7.0] {
            assert_eq!(m.eval(r).unwrap(), 2.0 * r);
        }
    }

    #[test]
    fn transform_rejects_rho_out_of_range() {
        let m = Modulus::lipschitz(1.0).unwrap();
        assert!(transform_modulus(&m, 1.0, 1, false).is_err());
        assert!(transform_modulus(&m, -0.1, 1, false).is_err());
    }

    #[test]
    fn cloud_validation() {
        assert!(PointCloud::new(2, vec![vec![0.0, 1.0], vec![1.0]], 0).is_err());
        assert!(PointCloud::new(1, vec![vec![f64::INFINITY]], 0).is_err());
        let c = PointCloud::new(1, vec![vec![0.0]], 0).unwrap();
        assert!(FunctionSamples::new(c.clone(), vec![], 1).is_err());
        assert!(FunctionSamples::new(c, vec![vec![1.0, 2.0]], 1).is_err());
    }
}
