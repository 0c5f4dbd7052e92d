//! Sample generators for three inverse-problem set models: sparse vectors
//! seen through a Gaussian matrix, blind circular deconvolution, and masked
//! low-rank matrices.
//!
//! Convolution is circular throughout: for length-`N` vectors,
//! `(k ⊛ x)ₜ = Σⱼ xⱼ k₍ₜ₋ⱼ₎ mod N`.

use crate::domain::{dist, PointCloud};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng;
use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

const STREAM_OPERATOR: u64 = 0x31;
const STREAM_SAMPLE: u64 = 0x32;
const STREAM_MASK: u64 = 0x33;
const STREAM_PAIRS: u64 = 0x34;

/// Resampling attempts per matrix when an incoherence cap is set.
pub const MAX_RESAMPLES: usize = 100;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Dense {
    fn gaussian(rows: usize, cols: usize, std: f64, seed: u64, stream: u64) -> Dense {
        let mut r = rng::stream(seed, STREAM_OPERATOR, stream);
        let data = (0..rows * cols)
            .map(|_| std * rng::gaussian(&mut r))
            .collect();
        Dense { rows, cols, data }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// One sample: observation `y` and the quantity to recover, `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseProblemSample {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
}

/// Serialized sample set: `{model, params, seed, samples: [{y, x}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSet {
    pub model: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub samples: Vec<InverseProblemSample>,
}

impl ModelSet {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model sets contain only finite numbers")
    }

    pub fn from_json(text: &str) -> Result<ModelSet> {
        serde_json::from_str(text).map_err(|e| Error::parse(None, e.to_string()))
    }
}

/// Observations of a sample list as a cloud.
pub fn observations(samples: &[InverseProblemSample]) -> Result<PointCloud> {
    let dim = samples.first().map_or(0, |s| s.y.len());
    PointCloud::new(dim, samples.iter().map(|s| s.y.clone()).collect(), 0)
}

/// Signals of a sample list as a cloud.
pub fn signals(samples: &[InverseProblemSample]) -> Result<PointCloud> {
    let dim = samples.first().map_or(0, |s| s.x.len());
    PointCloud::new(dim, samples.iter().map(|s| s.x.clone()).collect(), 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSet {
    pub n: usize,
    pub s: usize,
    pub m: usize,
    pub seed: u64,
    /// `m × N`, entries `N(0, 1/m)`.
    pub phi: Dense,
    pub samples: Vec<InverseProblemSample>,
}

/// `count` pairs `(Φx, x)` with `x` `s`-sparse: uniform support, Gaussian
/// coefficients.
pub fn sample_sparse(
    n: usize,
    s: usize,
    m: usize,
    count: usize,
    seed: u64,
    exec: Exec,
) -> Result<SparseSet> {
    if n == 0 || s == 0 || m == 0 || s > n || m > n {
        return Err(Error::domain(format!(
            "need 0 < s ≤ N and 0 < m ≤ N, got N={n}, s={s}, m={m}"
        )));
    }
    let phi = Dense::gaussian(m, n, 1.0 / (m as f64).sqrt(), seed, 0);
    let samples = exec.map(count, |i| {
        let mut r = rng::stream(seed, STREAM_SAMPLE, i as u64);
        let mut x = vec![0.0; n];
        for j in index::sample(&mut r, n, s) {
            x[j] = rng::gaussian(&mut r);
        }
        InverseProblemSample {
            y: phi.matvec(&x),
            x,
        }
    });
    Ok(SparseSet {
        n,
        s,
        m,
        seed,
        phi,
        samples,
    })
}

impl SparseSet {
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.phi.matvec(x)
    }

    pub fn to_model_set(&self) -> ModelSet {
        ModelSet {
            model: "sparse".into(),
            params: serde_json::json!({"N": self.n, "s": self.s, "m": self.m}),
            seed: self.seed,
            samples: self.samples.clone(),
        }
    }
}

/// `(k ⊛ x)ₜ = Σⱼ xⱼ k₍ₜ₋ⱼ₎ mod N`.
pub fn circular_convolution(x: &[f64], k: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if k.len() != n {
        return Err(Error::shape(format!(
            "lengths {} and {} differ",
            n,
            k.len()
        )));
    }
    Ok((0..n)
        .map(|t| (0..n).map(|j| x[j] * k[(t + n - j) % n]).sum())
        .collect())
}

/// Row-major `N × N` outer product `x kᵀ`.
pub fn outer(x: &[f64], k: &[f64]) -> Vec<f64> {
    x.iter()
        .flat_map(|a| k.iter().map(move |b| a * b))
        .collect()
}

/// Convolution read off the outer product: `yₜ = Σⱼ Oⱼ,₍ₜ₋ⱼ₎ mod N`.
pub fn convolution_from_outer(o: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|t| (0..n).map(|j| o[j * n + (t + n - j) % n]).sum())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvSample {
    pub signal: Vec<f64>,
    pub kernel: Vec<f64>,
    /// `y = kernel ⊛ signal`, `x = signal·kernelᵀ` (row-major).
    pub sample: InverseProblemSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvSet {
    pub big_n: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    /// `N × n`, entries `N(0, 1/N)`.
    pub phi: Dense,
    /// `N × m`, entries `N(0, 1/N)`.
    pub psi: Dense,
    pub samples: Vec<DeconvSample>,
}

/// Signals `x = Φu`, kernels `k = Ψv` with Gaussian `u`, `v`; observations
/// `k ⊛ x`; targets the outer products `x kᵀ`, which do not change under
/// `(x, k) ↦ (αx, k/α)`.
pub fn sample_deconv(
    big_n: usize,
    n: usize,
    m: usize,
    count: usize,
    seed: u64,
    exec: Exec,
) -> Result<DeconvSet> {
    if n == 0 || m == 0 || n >= big_n || m >= big_n {
        return Err(Error::domain(format!(
            "need 0 < n, m < N, got N={big_n}, n={n}, m={m}"
        )));
    }
    let std = 1.0 / (big_n as f64).sqrt();
    let phi = Dense::gaussian(big_n, n, std, seed, 0);
    let psi = Dense::gaussian(big_n, m, std, seed, 1);
    let samples = exec.map(count, |i| {
        let mut r = rng::stream(seed, STREAM_SAMPLE, i as u64);
        let u = rng::gaussian_vec(&mut r, n);
        let v = rng::gaussian_vec(&mut r, m);
        let signal = phi.matvec(&u);
        let kernel = psi.matvec(&v);
        let y = circular_convolution(&signal, &kernel).expect("equal lengths");
        let x = outer(&signal, &kernel);
        DeconvSample {
            signal,
            kernel,
            sample: InverseProblemSample { y, x },
        }
    });
    Ok(DeconvSet {
        big_n,
        n,
        m,
        seed,
        phi,
        psi,
        samples,
    })
}

impl DeconvSet {
    pub fn plain_samples(&self) -> Vec<InverseProblemSample> {
        self.samples.iter().map(|s| s.sample.clone()).collect()
    }

    /// Forward map applied to a stored outer product.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        convolution_from_outer(x, self.big_n)
    }

    pub fn to_model_set(&self) -> ModelSet {
        ModelSet {
            model: "deconv".into(),
            params: serde_json::json!({"N": self.big_n, "n": self.n, "m": self.m}),
            seed: self.seed,
            samples: self.plain_samples(),
        }
    }
}

/// Observed entries of an `m × n` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub m: usize,
    pub n: usize,
    pub omega: Vec<(usize, usize)>,
}

impl MaskSpec {
    pub fn new(m: usize, n: usize, mut omega: Vec<(usize, usize)>) -> Result<MaskSpec> {
        if omega.iter().any(|&(i, j)| i >= m || j >= n) {
            return Err(Error::domain("mask index out of range"));
        }
        omega.sort_unstable();
        if omega.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("duplicate mask index"));
        }
        Ok(MaskSpec { m, n, omega })
    }

    /// `P_Ω X` for a row-major `m × n` matrix: entries outside `Ω` set to 0.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.m * self.n];
        for &(i, j) in &self.omega {
            y[i * self.n + j] = x[i * self.n + j];
        }
        y
    }
}

/// Incoherence constants of a rank-`r` matrix: the least `μ₀`, `μ₁` with
/// `maxᵢ ‖Uᵀeᵢ‖ ≤ √(μ₀r/m)`, `maxⱼ ‖Vᵀeⱼ‖ ≤ √(μ₀r/n)` and
/// `maxᵢⱼ |(UVᵀ)ᵢⱼ| ≤ √(μ₁r/(mn))`, where `U`, `V` hold the top `r`
/// singular vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Incoherence {
    pub mu0: f64,
    pub mu1: f64,
}

/// Singular values of a row-major `m × n` matrix, descending.
pub fn singular_values(m: usize, n: usize, x: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = DMatrix::from_row_slice(m, n, x)
        .singular_values()
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn incoherence(m: usize, n: usize, r: usize, x: &[f64]) -> Result<Incoherence> {
    if r == 0 || r > m.min(n) || x.len() != m * n {
        return Err(Error::domain("invalid rank or matrix size"));
    }
    let svd = DMatrix::from_row_slice(m, n, x).svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let top = &idx[..r];
    let rf = r as f64;
    let row_u = (0..m)
        .map(|i| top.iter().map(|&k| u[(i, k)] * u[(i, k)]).sum::<f64>())
        .fold(0.0, f64::max);
    let row_v = (0..n)
        .map(|j| top.iter().map(|&k| vt[(k, j)] * vt[(k, j)]).sum::<f64>())
        .fold(0.0, f64::max);
    let mut uv = 0.0f64;
    for i in 0..m {
        for j in 0..n {
            let e: f64 = top.iter().map(|&k| u[(i, k)] * vt[(k, j)]).sum();
            uv = uv.max(e * e);
        }
    }
    Ok(Incoherence {
        mu0: (row_u * m as f64 / rf).max(row_v * n as f64 / rf),
        mu1: uv * (m * n) as f64 / rf,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowRankSet {
    pub r: usize,
    pub seed: u64,
    pub mask: MaskSpec,
    /// `y = P_Ω X`, `x = X`, both row-major `m × n`.
    pub samples: Vec<InverseProblemSample>,
    pub incoherence: Vec<Incoherence>,
}

/// `X = ABᵀ` with Gaussian `A: m × r`, `B: n × r`, observed on one mask of
/// `omega_size` entries drawn without replacement. With `mu0_cap`, matrices
/// whose `μ₀` exceeds the cap are redrawn up to [`MAX_RESAMPLES`] times.
pub fn sample_lowrank_masked(
    m: usize,
    n: usize,
    r: usize,
    omega_size: usize,
    count: usize,
    seed: u64,
    mu0_cap: Option<f64>,
    exec: Exec,
) -> Result<LowRankSet> {
    if m == 0 || n == 0 || r == 0 || r > m.min(n) || omega_size > m * n {
        return Err(Error::domain(format!(
            "need 0 < r ≤ min(m, n) and |Ω| ≤ mn, got m={m}, n={n}, r={r}, |Ω|={omega_size}"
        )));
    }
    let mut mr = rng::stream(seed, STREAM_MASK, 0);
    let omega = index::sample(&mut mr, m * n, omega_size)
        .into_iter()
        .map(|k| (k / n, k % n))
        .collect();
    let mask = MaskSpec::new(m, n, omega)?;
    let drawn = exec.map(count, |i| {
        let mut rr = rng::stream(seed, STREAM_SAMPLE, i as u64);
        for _ in 0..MAX_RESAMPLES {
            let a = rng::gaussian_vec(&mut rr, m * r);
            let b = rng::gaussian_vec(&mut rr, n * r);
            let x: Vec<f64> = (0..m * n)
                .map(|k| {
                    (0..r)
                        .map(|l| a[(k / n) * r + l] * b[(k % n) * r + l])
                        .sum()
                })
                .collect();
            let inc = incoherence(m, n, r, &x)?;
            if mu0_cap.is_none_or(|cap| inc.mu0 <= cap) {
                return Ok((x, inc));
            }
        }
        Err(Error::domain(format!(
            "sample {i}: μ₀ cap not met after {MAX_RESAMPLES} draws"
        )))
    });
    let mut samples = Vec::with_capacity(count);
    let mut inc = Vec::with_capacity(count);
    for d in drawn {
        let (x, c) = d?;
        samples.push(InverseProblemSample {
            y: mask.project(&x),
            x,
        });
        inc.push(c);
    }
    Ok(LowRankSet {
        r,
        seed,
        mask,
        samples,
        incoherence: inc,
    })
}

impl LowRankSet {
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.mask.project(x)
    }

    pub fn to_model_set(&self) -> ModelSet {
        ModelSet {
            model: "lowrank".into(),
            params: serde_json::json!({
                "m": self.mask.m,
                "n": self.mask.n,
                "r": self.r,
                "omega": self.mask.omega,
            }),
            seed: self.seed,
            samples: self.samples.clone(),
        }
    }
}

/// `max ‖x₁ − x₂‖/‖y₁ − y₂‖` over all pairs when there are at most
/// `max_pairs`, otherwise over `max_pairs` pairs drawn with `seed`.
///
/// This lower-bounds the Lipschitz constant of the inverse map. Pairs with
/// equal observations and different signals give `+∞`.
pub fn empirical_inverse_lipschitz(
    samples: &[InverseProblemSample],
    max_pairs: usize,
    seed: u64,
    exec: Exec,
) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::domain("need at least two samples"));
    }
    let ratio = |i: usize, j: usize| -> Option<f64> {
        let dx = dist(&samples[i].x, &samples[j].x);
        let dy = dist(&samples[i].y, &samples[j].y);
        match (dx > 0.0, dy > 0.0) {
            (_, true) => Some(dx / dy),
            (true, false) => Some(f64::INFINITY),
            (false, false) => None,
        }
    };
    let total = n * (n - 1) / 2;
    let best = if total <= max_pairs {
        exec.map(n, |i| {
            (i + 1..n)
                .filter_map(|j| ratio(i, j))
                .fold(None, |a: Option<f64>, r| Some(a.map_or(r, |a| a.max(r))))
        })
    } else {
        let mut r = rng::stream(seed, STREAM_PAIRS, 0);
        let pairs: Vec<(usize, usize)> = (0..max_pairs)
            .map(|_| {
                let i = r.random_range(0..n);
                let mut j = r.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                (i, j)
            })
            .collect();
        exec.map_slice(&pairs, |&(i, j)| ratio(i, j))
    };
    best.into_iter()
        .flatten()
        .reduce(f64::max)
        .ok_or_else(|| Error::domain("every pair of samples is identical"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_supports_and_forward() {
        let set = sample_sparse(20, 3, 10, 30, 5, Exec::auto()).unwrap();
        for s in &set.samples {
            assert!(s.x.iter().filter(|v| **v != 0.0).count() <= 3);
            assert_eq!(set.forward(&s.x), s.y);
        }
        let dense = sample_sparse(6, 6, 6, 4, 5, Exec::auto()).unwrap();
        assert!(dense.samples.iter().all(|s| s.x.iter().all(|v| *v != 0.0)));
        assert!(sample_sparse(5, 6, 3, 1, 0, Exec::auto()).is_err());
    }

    #[test]
    fn convolution_against_circulant_matrix() {
        let x = [1.0, 2.0, -1.0, 0.5];
        let k = [0.3, -0.2, 0.0, 1.5];
        let y = circular_convolution(&x, &k).unwrap();
        for t in 0..4 {
            let mut want = 0.0;
            for s in 0..4 {
                // row t of the circulant matrix of k
                want += k[(4 + t - s) % 4] * x[s];
            }
            assert!((y[t] - want).abs() < 1e-12);
        }
        let o = outer(&x, &k);
        let from_outer = convolution_from_outer(&o, 4);
        for (a, b) in y.iter().zip(&from_outer) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn deconv_gauge_and_regeneration() {
        let set = sample_deconv(16, 3, 4, 10, 2, Exec::auto()).unwrap();
        for s in &set.samples {
            let scaled = outer(
                &s.signal.iter().map(|v| v * 2.5).collect::<Vec<_>>(),
                &s.kernel.iter().map(|v| v / 2.5).collect::<Vec<_>>(),
            );
            for (a, b) in scaled.iter().zip(&s.sample.x) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
            for (a, b) in set.forward(&s.sample.x).iter().zip(&s.sample.y) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        assert!(sample_deconv(4, 4, 1, 1, 0, Exec::auto()).is_err());
    }

    #[test]
    fn lowrank_rank_and_full_mask() {
        let set = sample_lowrank_masked(6, 5, 2, 30, 4, 9, None, Exec::auto()).unwrap();
        for (s, inc) in set.samples.iter().zip(&set.incoherence) {
            assert_eq!(s.y, s.x);
            let sv = singular_values(6, 5, &s.x);
            assert!(sv[2] < 1e-8 * sv[0]);
            assert_eq!(*inc, incoherence(6, 5, 2, &s.x).unwrap());
            assert!(inc.mu0 >= 1.0 - 1e-12);
        }
        assert!(sample_lowrank_masked(3, 3, 4, 1, 1, 0, None, Exec::auto()).is_err());
        assert!(sample_lowrank_masked(8, 8, 1, 10, 1, 0, Some(0.5), Exec::auto()).is_err());
    }

    #[test]
    fn inverse_lipschitz_of_scalings() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let id: Vec<_> = xs
            .iter()
            .map(|x| InverseProblemSample {
                y: x.clone(),
                x: x.clone(),
            })
            .collect();
        assert_eq!(
            empirical_inverse_lipschitz(&id, 1000, 0, Exec::auto()).unwrap(),
            1.0
        );
        let half: Vec<_> = xs
            .iter()
            .map(|x| InverseProblemSample {
                y: x.iter().map(|v| v / 2.0).collect(),
                x: x.clone(),
            })
            .collect();
        assert_eq!(
            empirical_inverse_lipschitz(&half, 1000, 0, Exec::auto()).unwrap(),
            2.0
        );
        let clash = vec![
            InverseProblemSample {
                y: vec![0.0],
                x: vec![0.0],
            },
            InverseProblemSample {
                y: vec![0.0],
                x: vec![1.0],
            },
        ];
        assert!(empirical_inverse_lipschitz(&clash, 10, 0, Exec::auto())
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn model_set_round_trip() {
        let set = sample_lowrank_masked(3, 3, 1, 4, 2, 1, None, Exec::auto())
            .unwrap()
            .to_model_set();
        assert_eq!(ModelSet::from_json(&set.to_json()).unwrap(), set);
    }
}
