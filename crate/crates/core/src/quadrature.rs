//! Integration against the standard Gaussian measure
//! `dγ = (2π)^{-n/2} e^{-|x|²/2} dx` in dimensions one to three.
//!
//! One-dimensional rules come from the probabilists' Hermite polynomials:
//! nodes are the eigenvalues of the Jacobi matrix, then polished by Newton
//! iteration on the orthonormal three-term recurrence, and weights are the
//! Christoffel numbers `1 / Σ_k p_k(x)²`. Rules for `dim > 1` are tensor
//! products. A seeded Monte Carlo sampler provides an independent check.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Largest supported one-dimensional order. Beyond this the outermost
/// Christoffel weights underflow `f64`.
pub const MAX_ORDER: usize = 320;

/// Order used for functional evaluation.
pub const DEFAULT_ORDER: usize = 64;

/// Order used when a deficit (a difference of nearly equal terms) is verified.
pub const DEFICIT_ORDER: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    /// Flattened node coordinates, `dim` values per node.
    nodes: Vec<f64>,
    weights: Vec<f64>,
    order: usize,
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One-dimensional order; the rule is exact for polynomials of degree
    /// `2 * order - 1` in each coordinate.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.dim)
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    /// Iterates over `(node, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.nodes().zip(self.weights.iter().copied())
    }

    /// `Σ wᵢ u(xᵢ)`. Fails on the first node where `u` is not finite.
    pub fn integrate<F>(&self, integrand: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        let mut acc = 0.0;
        for (x, w) in self.iter() {
            let v = integrand(x);
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand { node: x.to_vec() });
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

/// Gauss–Hermite rule of the given order for the probabilists' weight
/// `e^{-x²/2} / √(2π)`.
pub fn hermite_rule(order: usize) -> Result<QuadratureRule> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "quadrature order must be in 1..={MAX_ORDER}, got {order}"
        )));
    }
    let n = order;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..8 {
            let (p_n, p_nm1, _) = orthonormal_hermite(n, *x);
            let step = p_n / ((n as f64).sqrt() * p_nm1);
            *x -= step;
            if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                break;
            }
        }
        let (_, _, sum_sq) = orthonormal_hermite(n, *x);
        weights.push(1.0 / sum_sq);
    }

    // Enforce the reflection symmetry of the exact rule.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);

    Ok(QuadratureRule {
        dim: 1,
        nodes,
        weights,
        order,
    })
}

/// Returns `(p_n(x), p_{n-1}(x), Σ_{k<n} p_k(x)²)` for the Hermite
/// polynomials orthonormal with respect to `dγ`.
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += cur * cur;
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev, sum_sq)
}

/// Product rule over `R^dim` built from a one-dimensional rule. Nodes are
/// laid out in row-major order (last coordinate varies fastest).
pub fn tensorize(rule: &QuadratureRule, dim: usize) -> Result<QuadratureRule> {
    if rule.dim != 1 {
        return Err(Error::InvalidArgument(
            "tensorize expects a one-dimensional rule".into(),
        ));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let m = rule.len();
    let count = m.pow(dim as u32);
    let mut nodes = Vec::with_capacity(count * dim);
    let mut weights = Vec::with_capacity(count);
    let mut idx = vec![0usize; dim];
    for _ in 0..count {
        let mut w = 1.0;
        for &i in &idx {
            nodes.push(rule.nodes[i]);
            w *= rule.weights[i];
        }
        weights.push(w);
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(QuadratureRule {
        dim,
        nodes,
        weights,
        order: rule.order,
    })
}

/// Convenience: an order-`order` Gauss–Hermite rule on `R^dim`.
pub fn gaussian_rule(order: usize, dim: usize) -> Result<QuadratureRule> {
    tensorize(&hermite_rule(order)?, dim)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (weights sum to 2).
pub(crate) fn legendre_rule(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &x)| (x, 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Seeded Monte Carlo integration against `dγ`. The same seed and count
/// reproduce the same estimate bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloSampler {
    pub seed: u64,
    pub sample_count: usize,
}

impl MonteCarloSampler {
    pub fn new(seed: u64, sample_count: usize) -> Result<Self> {
        if sample_count < 2 {
            return Err(Error::InvalidArgument("Monte Carlo needs at least two samples".into()));
        }
        Ok(Self { seed, sample_count })
    }

    pub fn estimate<F>(&self, dim: usize, integrand: F) -> Result<McEstimate>
    where
        F: Fn(&[f64]) -> f64,
    {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut x = vec![0.0; dim];
        // Welford update keeps the variance stable for large counts.
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for k in 0..self.sample_count {
            for xi in x.iter_mut() {
                *xi = StandardNormal.sample(&mut rng);
            }
            let v = integrand(&x);
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand { node: x.clone() });
            }
            let delta = v - mean;
            mean += delta / (k + 1) as f64;
            m2 += delta * (v - mean);
        }
        let n = self.sample_count as f64;
        let var = m2 / (n - 1.0);
        Ok(McEstimate {
            mean,
            std_error: (var / n).sqrt(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Gaussian moment E[Z^k].
    fn moment(k: u32) -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            (1..k).step_by(2).map(|j| j as f64).product()
        }
    }

    #[test]
    fn order_twenty_moments() {
        let rule = hermite_rule(20).unwrap();
        assert!((rule.integrate(|_| 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((rule.integrate(|x| x[0] * x[0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((rule.integrate(|x| x[0].powi(4)).unwrap() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(matches!(hermite_rule(0), Err(Error::InvalidArgument(_))));
        assert!(matches!(hermite_rule(MAX_ORDER + 1), Err(Error::InvalidArgument(_))));
        assert!(hermite_rule(MAX_ORDER).unwrap().weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn nodes_strictly_increasing_and_weights_normalized() {
        for order in [1, 2, 7, 64, 128, 257] {
            let rule = hermite_rule(order).unwrap();
            let xs: Vec<f64> = rule.nodes().map(|x| x[0]).collect();
            assert!(xs.windows(2).all(|w| w[0] < w[1]));
            let total: f64 = rule.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn polynomial_exactness_up_to_degree_2n_minus_1() {
        for order in [5, 12, 40] {
            let rule = hermite_rule(order).unwrap();
            for k in 0..(2 * order as u32) {
                let got = rule.integrate(|x| x[0].powi(k as i32)).unwrap();
                let want = moment(k);
                // Odd moments vanish; measure error against E|x|^k instead.
                let scale = moment(k + k % 2).max(1.0);
                assert!(
                    (got - want).abs() / scale < 1e-10,
                    "order {order} degree {k}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn tensor_rules() {
        let r20 = hermite_rule(20).unwrap();
        let t2 = tensorize(&r20, 2).unwrap();
        assert_eq!(t2.len(), 400);
        assert!((t2.integrate(|x| x[0] * x[0] * x[1] * x[1]).unwrap() - 1.0).abs() < 1e-10);
        assert!((t2.integrate(|_| 1.0).unwrap() - 1.0).abs() < 1e-12);
        let t3 = gaussian_rule(30, 3).unwrap();
        assert_eq!(t3.len(), 27_000);
        let second: f64 = t3.integrate(|x| x.iter().map(|v| v * v).sum()).unwrap();
        assert!((second - 3.0).abs() < 1e-10);
        assert!(matches!(tensorize(&r20, 4), Err(Error::UnsupportedDimension(4))));
        assert!(matches!(tensorize(&t2, 2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn log_linear_and_rescaled_gaussian_integrals() {
        let rule = hermite_rule(40).unwrap();
        let b: f64 = 1.0;
        let m = rule.integrate(|x| (b * x[0] - 0.5 * b * b).exp()).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
        let a: f64 = 0.5;
        let fa = |x: f64| (2.0 * a + 1.0).sqrt() * (-a * x * x).exp();
        assert!((rule.integrate(|x| fa(x[0])).unwrap() - 1.0).abs() < 1e-10);
        assert!((rule.integrate(|x| x[0] * x[0] * fa(x[0])).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn non_finite_integrand_reports_node() {
        let rule = hermite_rule(4).unwrap();
        let err = rule.integrate(|x| if x[0] > 0.0 { f64::NAN } else { 1.0 }).unwrap_err();
        match err {
            Error::NonFiniteIntegrand { node } => assert!(node[0] > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn monte_carlo_is_reproducible_and_consistent() {
        let sampler = MonteCarloSampler::new(7, 1_000_000).unwrap();
        let u = |x: &[f64]| (0.5 * x[0]).cos() + 0.1 * x[0] * x[0];
        let a = sampler.estimate(1, u).unwrap();
        let b = sampler.estimate(1, u).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        let exact = hermite_rule(64).unwrap().integrate(u).unwrap();
        assert!((a.mean - exact).abs() <= 3.0 * a.std_error);
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = legendre_rule(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn integrate_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, s in 0.1f64..2.0) {
            let rule = hermite_rule(32).unwrap();
            let u = |x: &[f64]| (s * x[0]).sin() + x[0] * x[0];
            let v = |x: &[f64]| (-(x[0] - s).powi(2)).exp();
            let lhs = rule.integrate(|x| a * u(x) + b * v(x)).unwrap();
            let rhs = a * rule.integrate(u).unwrap() + b * rule.integrate(v).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn low_degree_polynomials_match_moments(c in proptest::collection::vec(-2.0f64..2.0, 1..12)) {
            let rule = hermite_rule(8).unwrap();
            let p = |x: &[f64]| c.iter().rev().fold(0.0, |acc, &ci| acc * x[0] + ci);
            let exact: f64 = c.iter().enumerate().map(|(k, ci)| ci * moment(k as u32)).sum();
            let got = rule.integrate(p).unwrap();
            prop_assert!((got - exact).abs() <= 1e-10 * exact.abs().max(1.0));
        }
    }
}
