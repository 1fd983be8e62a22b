//! ν-one-class support vector machine with a Gaussian kernel.
//!
//! The dual `min ½αᵀKα` subject to `0 ≤ αᵢ ≤ 1/(νN)`, `Σα = 1` is solved by
//! projected gradient descent. The offset is the smaller of the usual
//! free-support-vector estimate and the `⌈(1−ν)N⌉`-th largest training score,
//! so at least that many training points are always accepted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POSITIVES: usize = 5;
const ITERATIONS: usize = 500;

/// Fitted acceptance region `g(s) = Σ αᵢ k(s, sᵢ) − ρ ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitiationClassifier {
    /// Observation components the classifier looks at; empty means all.
    pub features: Vec<usize>,
    pub nu: f64,
    pub sigma: f64,
    pub rho: f64,
    pub dim: usize,
    /// Support vectors, row-major `(n_support, dim)`.
    pub support: Vec<f64>,
    pub alpha: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median of all pairwise distances; 1 when the cloud is degenerate.
pub fn median_bandwidth(points: &[Vec<f64>]) -> f64 {
    let mut d = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d.push(sq_dist(&points[i], &points[j]).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    let m = if n % 2 == 1 { d[n / 2] } else { 0.5 * (d[n / 2 - 1] + d[n / 2]) };
    if m > 1e-12 {
        m
    } else {
        1.0
    }
}

/// Euclidean projection onto `{0 ≤ αᵢ ≤ c, Σα = 1}` by bisection on the shift.
fn project_capped_simplex(v: &[f64], c: f64) -> Vec<f64> {
    let total = |lambda: f64| v.iter().map(|x| (x - lambda).clamp(0.0, c)).sum::<f64>();
    let lo0 = v.iter().copied().fold(f64::INFINITY, f64::min) - c - 1.0;
    let hi0 = v.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    v.iter().map(|x| (x - lambda).clamp(0.0, c)).collect()
}

impl InitiationClassifier {
    /// Fits on full observations, restricted to `features` (empty = all).
    pub fn fit(positives: &[Vec<f64>], nu: f64, features: &[usize]) -> Result<Self> {
        if positives.len() < MIN_POSITIVES {
            return Err(Error::InsufficientPositives { needed: MIN_POSITIVES, available: positives.len() });
        }
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::InvalidConfig(format!("nu {nu} outside (0, 1)")));
        }
        let points: Vec<Vec<f64>> = positives.iter().map(|p| select(p, features)).collect::<Result<_>>()?;
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Shape("positives have different lengths".into()));
        }
        let n = points.len();
        let sigma = median_bandwidth(&points);
        let gamma = 1.0 / (2.0 * sigma * sigma);
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = (-gamma * sq_dist(&points[i], &points[j])).exp();
            }
        }
        let cap = 1.0 / (nu * n as f64);
        let max_row = (0..n).map(|i| k[i * n..(i + 1) * n].iter().sum::<f64>()).fold(0.0, f64::max);
        let step = 1.0 / (n as f64 * max_row);
        let mut alpha = project_capped_simplex(&vec![1.0 / n as f64; n], cap);
        for _ in 0..ITERATIONS {
            let grad: Vec<f64> = (0..n).map(|i| k[i * n..(i + 1) * n].iter().zip(&alpha).map(|(a, b)| a * b).sum()).collect();
            let moved: Vec<f64> = alpha.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
            alpha = project_capped_simplex(&moved, cap);
        }
        let mut support = Vec::new();
        let mut kept = Vec::new();
        let mut free = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if a > 0.0 {
                support.extend_from_slice(&points[i]);
                kept.push(a);
                if a < cap * (1.0 - 1e-9) {
                    free.push(i);
                }
            }
        }
        let mut model = Self { features: features.to_vec(), nu, sigma, rho: 0.0, dim, support, alpha: kept };
        let scores: Vec<f64> = points.iter().map(|p| model.score_selected(p)).collect();
        let mut sorted = scores.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let required = ((1.0 - nu) * n as f64).ceil() as usize;
        let quantile = sorted[required.clamp(1, n) - 1];
        let rho = if free.is_empty() {
            quantile
        } else {
            let mean = free.iter().map(|&i| scores[i]).sum::<f64>() / free.len() as f64;
            mean.min(quantile)
        };
        model.rho = rho;
        Ok(model)
    }

    fn score_selected(&self, x: &[f64]) -> f64 {
        let gamma = 1.0 / (2.0 * self.sigma * self.sigma);
        self.support
            .chunks(self.dim)
            .zip(&self.alpha)
            .map(|(sv, a)| a * (-gamma * sq_dist(x, sv)).exp())
            .sum()
    }

    /// `g(s)`; non-negative inside the region.
    pub fn decision(&self, s: &[f64]) -> f64 {
        match select(s, &self.features) {
            Ok(x) if x.len() == self.dim => self.score_selected(&x) - self.rho,
            _ => f64::NEG_INFINITY,
        }
    }

    /// `f(s)/ρ − 1`: same sign as [`Self::decision`] but comparable across
    /// classifiers with different offsets.
    pub fn relative_decision(&self, s: &[f64]) -> f64 {
        self.decision(s) / self.rho
    }

    pub fn contains(&self, s: &[f64]) -> bool {
        self.decision(s) >= 0.0
    }

    pub fn n_support(&self) -> usize {
        self.alpha.len()
    }

    /// Flat encoding: `[ν, σ, ρ, dim, n_features, features…, n_support, support…, α…]`.
    pub fn to_values(&self) -> Vec<f64> {
        let mut v = vec![self.nu, self.sigma, self.rho, self.dim as f64, self.features.len() as f64];
        v.extend(self.features.iter().map(|&f| f as f64));
        v.push(self.n_support() as f64);
        v.extend_from_slice(&self.support);
        v.extend_from_slice(&self.alpha);
        v
    }

    pub fn from_values(v: &[f64]) -> Option<Self> {
        let count = |x: f64| (x >= 0.0 && x.fract() == 0.0).then_some(x as usize);
        let (nu, sigma, rho) = (*v.first()?, *v.get(1)?, *v.get(2)?);
        let dim = count(*v.get(3)?)?;
        let nf = count(*v.get(4)?)?;
        let features: Vec<usize> = v.get(5..5 + nf)?.iter().map(|&x| count(x)).collect::<Option<_>>()?;
        let mut at = 5 + nf;
        let ns = count(*v.get(at)?)?;
        at += 1;
        let support = v.get(at..at + ns * dim)?.to_vec();
        at += ns * dim;
        let alpha = v.get(at..at + ns)?.to_vec();
        (at + ns == v.len()).then_some(Self { features, nu, sigma, rho, dim, support, alpha })
    }
}

fn select(s: &[f64], features: &[usize]) -> Result<Vec<f64>> {
    if features.is_empty() {
        return Ok(s.to_vec());
    }
    features
        .iter()
        .map(|&i| s.get(i).copied().ok_or_else(|| Error::Shape(format!("feature {i} missing from a {}-vector", s.len()))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(0.0..0.5), rng.gen_range(2.0..3.0)]).collect()
    }

    #[test]
    fn accepts_at_least_one_minus_nu() {
        let pts = cloud(100, 1);
        let c = InitiationClassifier::fit(&pts, 0.1, &[]).unwrap();
        let accepted = pts.iter().filter(|p| c.contains(p)).count();
        assert!(accepted >= 90, "accepted {accepted}");
    }

    #[test]
    fn far_points_are_rejected() {
        let pts = cloud(60, 2);
        let c = InitiationClassifier::fit(&pts, 0.1, &[]).unwrap();
        let q = vec![10.0 * c.sigma + 1.0, 10.0 * c.sigma + 0.5, 10.0 * c.sigma + 3.0];
        assert!(pts.iter().all(|p| sq_dist(p, &q).sqrt() >= 10.0 * c.sigma));
        assert!(!c.contains(&q));
    }

    #[test]
    fn degenerate_cloud_accepts_its_point() {
        let pts = vec![vec![0.3, -0.2]; 8];
        let c = InitiationClassifier::fit(&pts, 0.1, &[]).unwrap();
        assert!(c.contains(&[0.3, -0.2]));
    }

    #[test]
    fn too_few_positives() {
        let pts = cloud(4, 3);
        assert!(matches!(
            InitiationClassifier::fit(&pts, 0.1, &[]),
            Err(Error::InsufficientPositives { needed: 5, available: 4 })
        ));
    }

    #[test]
    fn feature_mask_ignores_other_components() {
        let pts = cloud(40, 4);
        let c = InitiationClassifier::fit(&pts, 0.1, &[0, 1]).unwrap();
        let mut q = pts[0].clone();
        let base = c.decision(&q);
        q[2] = 1e6;
        assert_eq!(c.decision(&q), base);
    }

    #[test]
    fn flat_encoding_round_trips() {
        let c = InitiationClassifier::fit(&cloud(30, 5), 0.2, &[2, 0]).unwrap();
        assert_eq!(InitiationClassifier::from_values(&c.to_values()).unwrap(), c);
        let mut v = c.to_values();
        v.pop();
        assert!(InitiationClassifier::from_values(&v).is_none());
    }

    #[test]
    fn projection_lands_in_the_capped_simplex() {
        let p = project_capped_simplex(&[0.9, -0.3, 0.4, 0.05], 0.5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&a| (0.0..=0.5).contains(&a)));
    }
}
