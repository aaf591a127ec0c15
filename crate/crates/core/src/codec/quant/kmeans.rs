//! One-dimensional k-means.
//!
//! The default engine is exact: in one dimension an optimal clustering
//! consists of contiguous runs of the sorted values, so the minimum
//! within-cluster sum of squares follows from a dynamic program over
//! prefixes. Each DP layer is filled by divide and conquer on the monotone
//! optimal split point, giving O(k · n log n) for n distinct values.
//!
//! The Lloyd engine (k-means++ seeding, restarts, inertia tolerance) mirrors
//! common library defaults and is kept for comparison runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LloydConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when inertia improves by less than this fraction.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LloydConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
            tol: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "engine", rename_all = "lowercase")]
pub enum KMeansEngine {
    #[default]
    Exact,
    Lloyd(LloydConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// Strictly ascending.
    pub centroids: Vec<f64>,
    /// Sum of squared distances to the nearest centroid.
    pub sse: f64,
}

/// Sorted distinct values with multiplicities.
struct Weighted {
    xs: Vec<f64>,
    ws: Vec<f64>,
}

impl Weighted {
    fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("k-means fit"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("k-means input contains {bad}")));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut xs: Vec<f64> = Vec::new();
        let mut ws: Vec<f64> = Vec::new();
        for v in sorted {
            match xs.last() {
                Some(&last) if last == v => *ws.last_mut().unwrap() += 1.0,
                _ => {
                    xs.push(v);
                    ws.push(1.0);
                }
            }
        }
        Ok(Self { xs, ws })
    }

    fn len(&self) -> usize {
        self.xs.len()
    }
}

fn effective_k(k: usize, distinct: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidParameter("k-means needs k >= 1".into()));
    }
    if k > distinct {
        log::warn!("k = {k} exceeds {distinct} distinct values; using k = {distinct}");
        return Ok(distinct);
    }
    Ok(k)
}

/// Sum of squared distances from each value to its nearest centroid.
pub fn sse(values: &[f64], centroids: &[f64]) -> f64 {
    values
        .iter()
        .map(|&v| {
            let c = centroids[nearest(centroids, v)];
            (v - c) * (v - c)
        })
        .sum()
}

/// Index of the centroid nearest to `x` in an ascending list; ties go to the
/// lower index.
pub fn nearest(centroids: &[f64], x: f64) -> usize {
    let hi = centroids.partition_point(|&c| c < x);
    if hi == 0 {
        return 0;
    }
    if hi == centroids.len() {
        return hi - 1;
    }
    let lo = hi - 1;
    if x - centroids[lo] <= centroids[hi] - x {
        lo
    } else {
        hi
    }
}

/// Exact fit; returns ascending centroids.
pub fn kmeans1d_fit(values: &[f64], k: usize) -> Result<Vec<f64>> {
    Ok(kmeans1d_fit_with(values, k, KMeansEngine::Exact)?.centroids)
}

pub fn kmeans1d_fit_with(values: &[f64], k: usize, engine: KMeansEngine) -> Result<KMeansFit> {
    let data = Weighted::new(values)?;
    let k = effective_k(k, data.len())?;
    let centroids = match engine {
        KMeansEngine::Exact => exact(&data, k),
        KMeansEngine::Lloyd(cfg) => lloyd(&data, k, &cfg)?,
    };
    let sse = sse(values, &centroids);
    Ok(KMeansFit { centroids, sse })
}

/// Prefix sums over centered values for O(1) interval costs.
struct Prefix {
    w: Vec<f64>,
    s: Vec<f64>,
    q: Vec<f64>,
}

impl Prefix {
    fn new(data: &Weighted) -> Self {
        let total_w: f64 = data.ws.iter().sum();
        let shift = data.xs.iter().zip(&data.ws).map(|(x, w)| x * w).sum::<f64>() / total_w;
        let n = data.len();
        let (mut w, mut s, mut q) = (vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]);
        for i in 0..n {
            let x = data.xs[i] - shift;
            let wi = data.ws[i];
            w[i + 1] = w[i] + wi;
            s[i + 1] = s[i] + wi * x;
            q[i + 1] = q[i] + wi * x * x;
        }
        Self { w, s, q }
    }

    /// Within-cluster SSE of points `from..to`.
    fn cost(&self, from: usize, to: usize) -> f64 {
        let w = self.w[to] - self.w[from];
        let s = self.s[to] - self.s[from];
        let q = self.q[to] - self.q[from];
        (q - s * s / w).max(0.0)
    }
}

fn exact(data: &Weighted, k: usize) -> Vec<f64> {
    let n = data.len();
    let prefix = Prefix::new(data);
    // best[i]: optimal cost of the first i points with the current cluster count
    let mut best: Vec<f64> = (0..=n).map(|i| if i == 0 { 0.0 } else { prefix.cost(0, i) }).collect();
    // split[c][i]: start of the last cluster in the optimum for i points, c + 1 clusters
    let mut split = vec![vec![0usize; n + 1]];
    for c in 1..k {
        let mut next = vec![f64::INFINITY; n + 1];
        let mut arg = vec![0usize; n + 1];
        fill_layer(&prefix, &best, &mut next, &mut arg, c + 1, n, c, n - 1);
        best = next;
        split.push(arg);
    }
    let mut bounds = Vec::with_capacity(k);
    let mut end = n;
    for c in (0..k).rev() {
        let start = split[c][end];
        bounds.push((start, end));
        end = start;
    }
    bounds.reverse();
    bounds
        .into_iter()
        .map(|(a, b)| {
            let w: f64 = data.ws[a..b].iter().sum();
            data.xs[a..b].iter().zip(&data.ws[a..b]).map(|(x, wi)| x * wi).sum::<f64>() / w
        })
        .collect()
}

/// Fills `next[i]` for `i in lo..=hi` where the last cluster starts in
/// `opt_lo..=opt_hi`; the optimal start is non-decreasing in `i`.
#[allow(clippy::too_many_arguments)]
fn fill_layer(
    prefix: &Prefix,
    prev: &[f64],
    next: &mut [f64],
    arg: &mut [usize],
    lo: usize,
    hi: usize,
    opt_lo: usize,
    opt_hi: usize,
) {
    if lo > hi {
        return;
    }
    let mid = (lo + hi) / 2;
    let mut best = f64::INFINITY;
    let mut best_j = opt_lo;
    for (j, &p) in prev.iter().enumerate().take(opt_hi.min(mid - 1) + 1).skip(opt_lo) {
        let cand = p + prefix.cost(j, mid);
        if cand < best {
            best = cand;
            best_j = j;
        }
    }
    next[mid] = best;
    arg[mid] = best_j;
    if mid > lo {
        fill_layer(prefix, prev, next, arg, lo, mid - 1, opt_lo, best_j);
    }
    fill_layer(prefix, prev, next, arg, mid + 1, hi, best_j, opt_hi);
}

fn weighted_sse(data: &Weighted, centroids: &[f64]) -> f64 {
    data.xs
        .iter()
        .zip(&data.ws)
        .map(|(&x, &w)| {
            let d = x - centroids[nearest(centroids, x)];
            w * d * d
        })
        .sum()
}

fn lloyd(data: &Weighted, k: usize, cfg: &LloydConfig) -> Result<Vec<f64>> {
    if cfg.restarts == 0 || cfg.max_iter == 0 {
        return Err(Error::InvalidParameter(
            "Lloyd engine needs at least one restart and one iteration".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..cfg.restarts {
        let mut centroids = plus_plus_seed(data, k, &mut rng);
        let mut inertia = weighted_sse(data, &centroids);
        for _ in 0..cfg.max_iter {
            let mut sum = vec![0.0; centroids.len()];
            let mut weight = vec![0.0; centroids.len()];
            for (&x, &w) in data.xs.iter().zip(&data.ws) {
                let j = nearest(&centroids, x);
                sum[j] += w * x;
                weight[j] += w;
            }
            for j in 0..centroids.len() {
                // empty clusters keep their previous position
                if weight[j] > 0.0 {
                    centroids[j] = sum[j] / weight[j];
                }
            }
            centroids.sort_by(f64::total_cmp);
            centroids.dedup();
            let updated = weighted_sse(data, &centroids);
            let improvement = inertia - updated;
            inertia = updated;
            if improvement <= cfg.tol * inertia.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, centroids));
        }
    }
    Ok(best.map(|(_, c)| c).unwrap_or_default())
}

fn plus_plus_seed(data: &Weighted, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let n = data.len();
    let pick = |weights: &[f64], rng: &mut dyn rand::RngCore| -> usize {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return rng.random_range(0..weights.len());
        }
        let mut r = rng.random::<f64>() * total;
        for (i, &w) in weights.iter().enumerate() {
            if r < w {
                return i;
            }
            r -= w;
        }
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(n - 1)
    };
    let mut chosen = vec![data.xs[pick(&data.ws, rng)]];
    let mut d2: Vec<f64> = data.xs.iter().map(|&x| (x - chosen[0]).powi(2)).collect();
    while chosen.len() < k {
        let weights: Vec<f64> = d2.iter().zip(&data.ws).map(|(d, w)| d * w).collect();
        let c = data.xs[pick(&weights, rng)];
        chosen.push(c);
        for (d, &x) in d2.iter_mut().zip(&data.xs) {
            *d = d.min((x - c).powi(2));
        }
    }
    chosen.sort_by(f64::total_cmp);
    chosen.dedup();
    chosen
}
