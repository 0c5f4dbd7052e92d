//! Set-complexity estimates: unit secants, greedy packings as covering
//! estimates, and Monte Carlo Gaussian width.
//!
//! A greedy `δ`-packing `P` found by a maximal scan is also a `δ`-cover, so
//! `N(δ) ≤ |P| ≤ N(δ/2)`. The count is reported as the covering estimate at
//! `δ`; it may overstate the covering number, never understate it.

use crate::domain::{dist, dist2, dot, PointCloud};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;
use std::ops::Range;

const STREAM_SECANTS: u64 = 0x21;
const STREAM_PACKING: u64 = 0x22;
const STREAM_WIDTH: u64 = 0x23;

/// Unit vectors `(x − x′)/‖x − x′‖₂` of a point cloud.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecantSet {
    pub ambient_dim: usize,
    pub vectors: Vec<Vec<f64>>,
    /// `(i, j)` such that the vector is the secant from point `j` to point `i`.
    pub source_pairs: Vec<(usize, usize)>,
}

impl SecantSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

fn secant(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = dist(a, b);
    (n > 0.0).then(|| a.iter().zip(b).map(|(x, y)| (x - y) / n).collect())
}

/// Secants of every ordered pair when there are at most `max_count` of them
/// (so both `u` and `−u` appear), otherwise `max_count` ordered pairs drawn
/// uniformly with `seed`. Coincident pairs are skipped.
pub fn unit_secants(cloud: &PointCloud, max_count: usize, seed: u64) -> Result<SecantSet> {
    let pts = &cloud.points;
    let n = pts.len();
    let distinct = (1..n).any(|i| pts[i] != pts[0]);
    if n < 2 || !distinct {
        return Err(Error::domain(
            "unit secants need at least two distinct points",
        ));
    }
    let mut vectors = Vec::new();
    let mut source_pairs = Vec::new();
    let mut push = |i: usize, j: usize| {
        if let Some(u) = secant(&pts[i], &pts[j]) {
            vectors.push(u);
            source_pairs.push((i, j));
        }
    };
    if n.saturating_mul(n - 1) <= max_count {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    push(i, j);
                }
            }
        }
    } else {
        let mut r = rng::stream(seed, STREAM_SECANTS, 0);
        for _ in 0..max_count {
            let i = r.random_range(0..n);
            let mut j = r.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            push(i, j);
        }
    }
    Ok(SecantSet {
        ambient_dim: cloud.dim,
        vectors,
        source_pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Packing {
    pub count: usize,
    /// Indices of the chosen centers, in scan order.
    pub centers: Vec<usize>,
}

/// Greedy maximal `δ`-separated subset (pairwise distances `> δ`).
///
/// Points are scanned in index order when `seed` is `None`, otherwise in a
/// shuffled order drawn from the seed. The result depends on the order.
pub fn greedy_packing(points: &[Vec<f64>], delta: f64, seed: Option<u64>) -> Result<Packing> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!("δ must be positive, got {delta}")));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    if let Some(s) = seed {
        order.shuffle(&mut rng::stream(s, STREAM_PACKING, 0));
    }
    let d2 = delta * delta;
    let mut centers: Vec<usize> = Vec::new();
    for i in order {
        if centers.iter().all(|&c| dist2(&points[i], &points[c]) > d2) {
            centers.push(i);
        }
    }
    Ok(Packing {
        count: centers.len(),
        centers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub delta: f64,
    pub count: usize,
    pub log_count: f64,
}

/// Greedy packing counts over a range of scales with a fitted slope of
/// `log count` against `log(1/δ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringProfile {
    pub rows: Vec<ProfileRow>,
    pub fit_range: Range<usize>,
    pub slope: f64,
}

/// Least-squares slope of `ys` against `xs`; 0 when the `xs` are all equal.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Runs [`greedy_packing`] at each `δ` (positive, strictly decreasing) and
/// fits the slope over the rows in `fit_range`, which must hold at least two.
pub fn log_covering_profile(
    points: &[Vec<f64>],
    deltas: &[f64],
    fit_range: Range<usize>,
    seed: Option<u64>,
    exec: Exec,
) -> Result<CoveringProfile> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::domain("scales must be positive"));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::domain("scales must be strictly decreasing"));
    }
    if fit_range.end > deltas.len() || fit_range.len() < 2 {
        return Err(Error::domain(format!(
            "fit range {fit_range:?} must select at least two of {} scales",
            deltas.len()
        )));
    }
    let packs = exec.map_slice(deltas, |&d| greedy_packing(points, d, seed));
    let rows = packs
        .into_iter()
        .zip(deltas)
        .map(|(p, &delta)| {
            let count = p?.count;
            Ok(ProfileRow {
                delta,
                count,
                log_count: (count.max(1) as f64).ln(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sel = &rows[fit_range.clone()];
    let xs: Vec<f64> = sel.iter().map(|r| -r.delta.ln()).collect();
    let ys: Vec<f64> = sel.iter().map(|r| r.log_count).collect();
    let slope = ls_slope(&xs, &ys);
    Ok(CoveringProfile {
        rows,
        fit_range,
        slope,
    })
}

impl CoveringProfile {
    /// `delta,count,log_count` with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,count,log_count\n");
        for r in &self.rows {
            s.push_str(&format!("{:e},{},{:e}\n", r.delta, r.count, r.log_count));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "rows": self.rows,
            "fit_range": [self.fit_range.start, self.fit_range.end],
            "slope": self.slope,
        })
        .to_string()
    }

    /// Log-count at the finest scale.
    pub fn finest_log_count(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.log_count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WidthEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Monte Carlo estimate of `E maxᵤ ⟨u, z⟩`, `z ~ N(0, I)`.
///
/// Trial `t` draws `z` from a stream fixed by `(seed, t)` alone, so two
/// secant sets in the same dimension see identical draws.
pub fn gaussian_width_mc(
    secants: &SecantSet,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<WidthEstimate> {
    if secants.is_empty() {
        return Err(Error::domain("empty secant set"));
    }
    if trials < 2 {
        return Err(Error::domain("need at least two trials"));
    }
    let dim = secants.ambient_dim;
    let sup = exec.map(trials, |t| {
        let z = rng::gaussian_vec(&mut rng::stream(seed, STREAM_WIDTH, t as u64), dim);
        secants
            .vectors
            .iter()
            .map(|u| dot(u, &z))
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let n = trials as f64;
    let mean = sup.iter().sum::<f64>() / n;
    let var = sup.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    Ok(WidthEstimate {
        mean,
        stderr: (var / n).sqrt(),
        trials,
    })
}
