//! Wasserstein-2 distances: closed form for rescaled Gaussians, exact
//! monotone coupling on the line, and debiased entropic transport on
//! grids.

use rayon::prelude::*;
use serde::Serialize;

use crate::density::LogDensity;
use crate::error::{Error, Result};
use crate::gaussian;
use crate::transport::CdfTable;

/// Tolerance on `Σ wᵢ = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
pub const DEFAULT_QUANTILE_COUNT: usize = 100_000;
/// Probit range covered by the quantile discretization; `Φ(-10) ≈ 7.6e-24`.
const PROBIT_RANGE: f64 = 10.0;

/// Finitely supported probability measure on `Rⁿ`.
///
/// When the support is a full tensor grid the axes are kept, which lets
/// the entropic solver apply its kernel one coordinate at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    axes: Option<Vec<Vec<f64>>>,
}

impl DiscreteMeasure {
    /// `points` is flat, `dim` coordinates per point.
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if points.len() != dim * weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} coordinates for {} weights in dimension {dim}",
                points.len(),
                weights.len()
            )));
        }
        check_weights(&weights)?;
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidMeasure(format!("point {} is not finite", i / dim)));
        }
        let mut order: Vec<usize> = (0..weights.len()).collect();
        let pt = |i: usize| &points[i * dim..(i + 1) * dim];
        order.sort_by(|&i, &j| pt(i).partial_cmp(pt(j)).unwrap());
        if let Some(w) = order.windows(2).find(|w| pt(w[0]) == pt(w[1])) {
            return Err(Error::InvalidMeasure(format!("duplicate point {:?}", pt(w[0]))));
        }
        Ok(Self {
            dim,
            points,
            weights,
            axes: None,
        })
    }

    /// Measure on the tensor grid `axes[0] × … × axes[n-1]`, weights in
    /// row-major order (last coordinate fastest).
    pub fn on_grid(axes: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::UnsupportedDimension(0));
        }
        for axis in &axes {
            if axis.is_empty() || !axis.windows(2).all(|w| w[0] < w[1]) || !axis.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidMeasure(
                    "grid axes must be finite and strictly increasing".into(),
                ));
            }
        }
        let count: usize = axes.iter().map(Vec::len).product();
        if weights.len() != count {
            return Err(Error::InvalidMeasure(format!(
                "{} weights for a grid of {count} points",
                weights.len()
            )));
        }
        check_weights(&weights)?;
        let dim = axes.len();
        let mut points = Vec::with_capacity(count * dim);
        for k in 0..count {
            let mut rem = k;
            let start = points.len();
            points.resize(start + dim, 0.0);
            for d in (0..dim).rev() {
                let len = axes[d].len();
                points[start + d] = axes[d][rem % len];
                rem /= len;
            }
        }
        Ok(Self {
            dim,
            points,
            weights,
            axes: Some(axes),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
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

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn axes(&self) -> Option<&[Vec<f64>]> {
        self.axes.as_deref()
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidMeasure("no support points".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidMeasure(format!(
            "weight {w} is not a finite nonnegative number"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
    }
    Ok(())
}

/// Midpoint grid with `per_axis` points per coordinate on
/// `[-half_width, half_width]ⁿ`, weighted by `f φ` and renormalized.
pub fn grid_measure(f: &LogDensity, per_axis: usize, half_width: f64) -> Result<DiscreteMeasure> {
    if per_axis == 0 || !(half_width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "grid needs points and a positive half width, got {per_axis} and {half_width}"
        )));
    }
    let n = f.dim();
    let step = 2.0 * half_width / per_axis as f64;
    let axis: Vec<f64> = (0..per_axis).map(|k| -half_width + (k as f64 + 0.5) * step).collect();
    let count = per_axis.checked_pow(n as u32).ok_or(Error::UnsupportedDimension(n))?;
    let mut x = vec![0.0; n];
    let mut weights = Vec::with_capacity(count);
    for k in 0..count {
        let mut rem = k;
        for d in (0..n).rev() {
            x[d] = axis[rem % per_axis];
            rem /= per_axis;
        }
        let log_w = -f.h(&x) + x.iter().map(|&v| gaussian::ln_pdf(v)).sum::<f64>();
        let w = log_w.exp();
        if !w.is_finite() {
            return Err(Error::Evaluation {
                point: x.clone(),
                what: "grid weight is not finite".into(),
            });
        }
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateMass(total));
    }
    weights.iter_mut().for_each(|w| *w /= total);
    DiscreteMeasure::on_grid(vec![axis; n], weights)
}

/// `W₂(f_a dγ, dγ) = √n |1/√(2a+1) - 1|` for `f_a ∝ exp(-a|x|²)`.
pub fn w2_gaussian_rescaled(a: f64, n: usize) -> Result<f64> {
    if !(a > -0.5) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("need a > -1/2, got {a}")));
    }
    if n == 0 {
        return Err(Error::UnsupportedDimension(0));
    }
    Ok((n as f64).sqrt() * (1.0 / (2.0 * a + 1.0).sqrt() - 1.0).abs())
}

/// A one-dimensional probability measure for the quantile coupling.
#[derive(Debug, Clone, Copy)]
pub enum Measure1D<'a> {
    Discrete(&'a DiscreteMeasure),
    Table(&'a CdfTable),
    Gaussian { mean: f64, std: f64 },
}

impl Measure1D<'_> {
    fn validate(&self) -> Result<()> {
        match self {
            Measure1D::Discrete(m) if m.dim() != 1 => Err(Error::UnsupportedDimension(m.dim())),
            Measure1D::Table(t) => {
                let (lo, up) = (t.lower(), t.upper());
                let ok = lo.windows(2).all(|w| w[0] <= w[1])
                    && up.windows(2).all(|w| w[0] >= w[1])
                    && lo[lo.len() - 1] > lo[0];
                if ok {
                    Ok(())
                } else {
                    Err(Error::InvalidMeasure("distribution table is not a proper CDF".into()))
                }
            }
            Measure1D::Gaussian { mean, std } if !(*std > 0.0) || !mean.is_finite() || !std.is_finite() => Err(
                Error::InvalidMeasure(format!("Gaussian with mean {mean} and std {std}")),
            ),
            _ => Ok(()),
        }
    }

    /// Quantile at the probit level `z`, i.e. at `u = Φ(z)`.
    fn quantile_at_probit(&self, z: f64) -> f64 {
        match self {
            Measure1D::Gaussian { mean, std } => mean + std * z,
            Measure1D::Table(t) => {
                if z <= 0.0 {
                    t.quantile(gaussian::cdf(z))
                } else {
                    t.quantile_upper(gaussian::sf(z))
                }
            }
            Measure1D::Discrete(m) => atom_quantile(&sorted_atoms(m), gaussian::cdf(z), gaussian::sf(z)),
        }
    }
}

/// Sorted support and weights of a one-dimensional discrete measure.
fn sorted_atoms(m: &DiscreteMeasure) -> Vec<(f64, f64)> {
    let mut atoms: Vec<(f64, f64)> = m.points().iter().copied().zip(m.weights().iter().copied()).collect();
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    atoms
}

/// `(∫₀¹ |F_μ⁻¹(q) - F_ν⁻¹(q)|² dq)^{1/2}`.
///
/// Two discrete measures are coupled exactly by merging their cumulative
/// weights. Otherwise the integral is taken in probit coordinates,
/// `q = Φ(z)`, by the midpoint rule with `quantile_count` points on
/// `|z| ≤ 10`; both tails are then resolved in relative precision.
pub fn w2_quantile_1d(mu: Measure1D<'_>, nu: Measure1D<'_>, quantile_count: usize) -> Result<f64> {
    mu.validate()?;
    nu.validate()?;
    if let (Measure1D::Discrete(a), Measure1D::Discrete(b)) = (mu, nu) {
        return Ok(discrete_w2(a, b));
    }
    if quantile_count == 0 {
        return Err(Error::InvalidArgument("quantile_count must be positive".into()));
    }
    let step = 2.0 * PROBIT_RANGE / quantile_count as f64;
    let mut mass = 0.0;
    let mut cost = 0.0;
    let mut discrete_cache: [Option<Vec<(f64, f64)>>; 2] = [None, None];
    for (slot, m) in discrete_cache.iter_mut().zip([&mu, &nu]) {
        if let Measure1D::Discrete(d) = m {
            *slot = Some(sorted_atoms(d));
        }
    }
    let quantile = |m: &Measure1D<'_>, atoms: &Option<Vec<(f64, f64)>>, z: f64| match atoms {
        Some(atoms) => atom_quantile(atoms, gaussian::cdf(z), gaussian::sf(z)),
        None => m.quantile_at_probit(z),
    };
    for k in 0..quantile_count {
        let z = -PROBIT_RANGE + (k as f64 + 0.5) * step;
        let w = gaussian::pdf(z);
        let d = quantile(&mu, &discrete_cache[0], z) - quantile(&nu, &discrete_cache[1], z);
        mass += w;
        cost += w * d * d;
    }
    Ok((cost / mass).sqrt())
}

fn atom_quantile(atoms: &[(f64, f64)], lower: f64, upper: f64) -> f64 {
    if lower <= upper {
        let mut acc = 0.0;
        for &(x, w) in atoms {
            acc += w;
            if acc >= lower && w > 0.0 {
                return x;
            }
        }
    } else {
        let mut acc = 0.0;
        for &(x, w) in atoms.iter().rev() {
            acc += w;
            if acc > upper && w > 0.0 {
                return x;
            }
        }
    }
    atoms.iter().rev().find(|a| a.1 > 0.0).map_or(atoms[0].0, |a| a.0)
}

fn discrete_w2(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    let xa = sorted_atoms(a);
    let xb = sorted_atoms(b);
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (xa[0].1, xb[0].1);
    let mut cost = 0.0;
    while i < xa.len() && j < xb.len() {
        let m = ra.min(rb);
        cost += m * (xa[i].0 - xb[j].0).powi(2);
        ra -= m;
        rb -= m;
        if ra <= 0.0 {
            i += 1;
            if i < xa.len() {
                ra = xa[i].1;
            }
        }
        if rb <= 0.0 {
            j += 1;
            if j < xb.len() {
                rb = xb[j].1;
            }
        }
    }
    cost.max(0.0).sqrt()
}

/// Settings for the annealed entropic solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinkhornConfig {
    /// Final regularization.
    pub reg_epsilon: f64,
    /// Regularization levels visited before `reg_epsilon`; entries not
    /// above `reg_epsilon` are skipped.
    pub anneal_schedule: Vec<f64>,
    /// Iteration cap per level.
    pub max_iterations: usize,
    /// Required `ℓ¹` marginal violation at the final level.
    pub convergence_tol: f64,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            reg_epsilon: 0.05,
            anneal_schedule: vec![1.0, 0.5, 0.25, 0.1],
            max_iterations: 5000,
            convergence_tol: 1e-6,
        }
    }
}

impl SinkhornConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reg_epsilon > 0.0) || !self.reg_epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "reg must be positive, got {}",
                self.reg_epsilon
            )));
        }
        if !self.anneal_schedule.iter().all(|r| *r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument("anneal schedule must be positive".into()));
        }
        if !self.anneal_schedule.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument(
                "anneal schedule must be strictly decreasing".into(),
            ));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "convergence tolerance must be positive, got {}",
                self.convergence_tol
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        Ok(())
    }

    /// Regularization levels actually visited, ending at `reg_epsilon`.
    pub fn levels(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .anneal_schedule
            .iter()
            .copied()
            .filter(|&r| r > self.reg_epsilon)
            .collect();
        out.push(self.reg_epsilon);
        out
    }
}

/// Estimate at one regularization level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealStep {
    pub reg: f64,
    pub w2: f64,
    pub iterations: usize,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinkhornResult {
    /// `√max(S, 0)` at the final level.
    pub w2: f64,
    /// Debiased divergence `S = OT(μ,ν) - (OT(μ,μ) + OT(ν,ν))/2`.
    pub divergence: f64,
    /// Iterations over all levels and all three problems.
    pub iterations: usize,
    /// Largest final marginal violation of the three problems.
    pub violation: f64,
    pub trace: Vec<AnnealStep>,
}

/// `exp(-|x - y|²/reg)` applied in log domain, either one axis at a time
/// (tensor grids) or densely.
enum Kernel<'a> {
    Separable { x: &'a [Vec<f64>], y: &'a [Vec<f64>] },
    Dense { dim: usize, x: &'a [f64], y: &'a [f64] },
}

impl<'a> Kernel<'a> {
    fn new(mu: &'a DiscreteMeasure, nu: &'a DiscreteMeasure) -> Self {
        match (mu.axes(), nu.axes()) {
            (Some(x), Some(y)) => Kernel::Separable { x, y },
            _ => Kernel::Dense {
                dim: mu.dim(),
                x: mu.points(),
                y: nu.points(),
            },
        }
    }

    /// `out_i = LSE_j(v_j - |x_i - y_j|²/reg)`, or with `x`, `y` swapped.
    fn apply(&self, v: &[f64], reg: f64, transpose: bool) -> Vec<f64> {
        match *self {
            Kernel::Separable { x, y } => {
                let (to, from) = if transpose { (y, x) } else { (x, y) };
                separable_lse(to, from, v, reg)
            }
            Kernel::Dense { dim, x, y } => {
                let (to, from) = if transpose { (y, x) } else { (x, y) };
                dense_lse(dim, to, from, v, reg)
            }
        }
    }
}

fn lse(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn dense_lse(dim: usize, to: &[f64], from: &[f64], v: &[f64], reg: f64) -> Vec<f64> {
    to.par_chunks(dim)
        .map(|xi| {
            lse(from.chunks(dim).zip(v).map(|(yj, vj)| {
                let c: f64 = xi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum();
                vj - c / reg
            }))
        })
        .collect()
}

/// Applies the kernel axis by axis; the cost is a sum over coordinates, so
/// the kernel factors into one-dimensional pieces.
fn separable_lse(to: &[Vec<f64>], from: &[Vec<f64>], v: &[f64], reg: f64) -> Vec<f64> {
    let n = to.len();
    let mut shape: Vec<usize> = from.iter().map(Vec::len).collect();
    let mut cur = v.to_vec();
    for d in 0..n {
        let (p, q) = (to[d].len(), from[d].len());
        let outer: usize = shape[..d].iter().product();
        let inner: usize = shape[d + 1..].iter().product();
        let cost: Vec<f64> = to[d]
            .iter()
            .flat_map(|a| from[d].iter().map(move |b| (a - b) * (a - b) / reg))
            .collect();
        let mut next = vec![0.0; outer * p * inner];
        next.par_chunks_mut(inner).enumerate().for_each(|(idx, out)| {
            let (o, i) = (idx / p, idx % p);
            let row = &cost[i * q..(i + 1) * q];
            let base = o * q * inner;
            let mut maxes = vec![f64::NEG_INFINITY; inner];
            for (j, c) in row.iter().enumerate() {
                let src = &cur[base + j * inner..base + (j + 1) * inner];
                for (m, s) in maxes.iter_mut().zip(src) {
                    *m = m.max(s - c);
                }
            }
            let mut sums = vec![0.0; inner];
            for (j, c) in row.iter().enumerate() {
                let src = &cur[base + j * inner..base + (j + 1) * inner];
                for ((acc, s), m) in sums.iter_mut().zip(src).zip(&maxes) {
                    if *m > f64::NEG_INFINITY {
                        *acc += (s - c - m).exp();
                    }
                }
            }
            for ((o, m), s) in out.iter_mut().zip(&maxes).zip(&sums) {
                *o = if *m == f64::NEG_INFINITY { *m } else { m + s.ln() };
            }
        });
        shape[d] = p;
        cur = next;
    }
    cur
}

/// Dual potentials of one entropic problem, carried across levels.
struct Problem<'a> {
    kernel: Kernel<'a>,
    log_a: Vec<f64>,
    log_b: Vec<f64>,
    a: &'a [f64],
    b: &'a [f64],
    f: Vec<f64>,
    g: Vec<f64>,
    /// `μ = ν`: a single potential, updated by averaging.
    symmetric: bool,
}

impl<'a> Problem<'a> {
    fn new(mu: &'a DiscreteMeasure, nu: &'a DiscreteMeasure) -> Self {
        Self {
            symmetric: std::ptr::eq(mu, nu),
            kernel: Kernel::new(mu, nu),
            log_a: mu.weights().iter().map(|w| w.ln()).collect(),
            log_b: nu.weights().iter().map(|w| w.ln()).collect(),
            a: mu.weights(),
            b: nu.weights(),
            f: vec![0.0; mu.len()],
            g: vec![0.0; nu.len()],
        }
    }

    fn update(&self, pot: &[f64], log_w: &[f64], reg: f64, transpose: bool) -> Result<Vec<f64>> {
        let v: Vec<f64> = pot.iter().zip(log_w).map(|(p, l)| p / reg + l).collect();
        let out = self.kernel.apply(&v, reg, transpose);
        if out.iter().any(|o| !o.is_finite()) {
            return Err(Error::KernelUnderflow { reg });
        }
        Ok(out.into_iter().map(|o| -reg * o).collect())
    }

    /// Runs to `tol` or `max_iterations`; returns (iterations, violation).
    fn solve(&mut self, reg: f64, max_iterations: usize, tol: f64) -> Result<(usize, f64)> {
        let mut violation = f64::INFINITY;
        let mut it = 0;
        let marginal_error = |a: &[f64], f: &[f64], f_new: &[f64]| -> f64 {
            // Row marginals of the plan built from (f, g) are a·exp((f - f_new)/reg).
            a.iter()
                .zip(f)
                .zip(f_new)
                .map(|((a, f), fnew)| {
                    if *a > 0.0 {
                        a * (1.0 - ((f - fnew) / reg).exp()).abs()
                    } else {
                        0.0
                    }
                })
                .sum()
        };
        while it < max_iterations {
            it += 1;
            if self.symmetric {
                let f_new = self.update(&self.f, &self.log_a, reg, false)?;
                violation = marginal_error(self.a, &self.f, &f_new);
                self.f = self.f.iter().zip(&f_new).map(|(f, n)| 0.5 * (f + n)).collect();
                self.g.clone_from(&self.f);
            } else {
                self.g = self.update(&self.f, &self.log_a, reg, true)?;
                let f_new = self.update(&self.g, &self.log_b, reg, false)?;
                violation = marginal_error(self.a, &self.f, &f_new);
                self.f = f_new;
            }
            if violation <= tol {
                break;
            }
        }
        Ok((it, violation))
    }

    fn value(&self) -> f64 {
        let dot =
            |w: &[f64], p: &[f64]| -> f64 { w.iter().zip(p).filter(|(w, _)| **w > 0.0).map(|(w, p)| w * p).sum() };
        dot(self.a, &self.f) + dot(self.b, &self.g)
    }
}

/// Debiased entropic estimate of `W₂(μ, ν)` with squared Euclidean cost,
/// annealed down the configured schedule.
pub fn w2_sinkhorn(mu: &DiscreteMeasure, nu: &DiscreteMeasure, config: &SinkhornConfig) -> Result<SinkhornResult> {
    config.validate()?;
    if mu.dim() != nu.dim() {
        return Err(Error::InvalidMeasure(format!(
            "dimensions differ: {} and {}",
            mu.dim(),
            nu.dim()
        )));
    }
    let mut problems = [Problem::new(mu, nu), Problem::new(mu, mu), Problem::new(nu, nu)];
    let levels = config.levels();
    let mut trace = Vec::with_capacity(levels.len());
    let mut total = 0;
    let mut divergence = 0.0;
    let mut violation = 0.0;
    for (k, &reg) in levels.iter().enumerate() {
        let mut worst: f64 = 0.0;
        let mut iterations = 0;
        for p in problems.iter_mut() {
            let (it, viol) = p.solve(reg, config.max_iterations, config.convergence_tol)?;
            iterations += it;
            worst = worst.max(viol);
        }
        total += iterations;
        let [ab, aa, bb] = &problems;
        divergence = ab.value() - 0.5 * (aa.value() + bb.value());
        violation = worst;
        trace.push(AnnealStep {
            reg,
            w2: divergence.max(0.0).sqrt(),
            iterations,
            violation: worst,
        });
        if k + 1 == levels.len() && worst > config.convergence_tol {
            return Err(Error::Convergence {
                iterations: total,
                violation: worst,
            });
        }
    }
    Ok(SinkhornResult {
        w2: divergence.max(0.0).sqrt(),
        divergence,
        iterations: total,
        violation,
        trace,
    })
}
