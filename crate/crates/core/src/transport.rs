//! One-dimensional Brenier maps between `f dγ` and `dγ`.
//!
//! In one dimension the optimal map is the monotone rearrangement
//! `T = F_γ^{-1} ∘ F_{f dγ}`. The distribution of `f dγ` is tabulated on a
//! uniform grid by Gauss–Legendre integration of each cell, including the
//! mass beyond the window, and is kept as two tables (lower and upper
//! tail) so that both tails retain relative precision. `T'` comes from
//! centered finite differences of `T`, and `λ = T' - 1` is the eigenvalue
//! of the Hessian of the displacement potential.

use std::io::Write;

use crate::density::LogDensity;
use crate::error::{Error, Result};
use crate::functionals::compute_functionals;
use crate::gaussian;
use crate::quadrature::{legendre_rule, QuadratureRule};
use crate::slack::SlackRecord;

pub const DEFAULT_RESOLUTION: usize = 4096;
pub const DEFAULT_HALF_WIDTH: f64 = 8.0;

/// Largest mass `f dγ` (or `dγ`) may leave outside the window.
pub const COVERAGE_TOL: f64 = 1e-8;
/// Bound on `|F_γ(T(x)) - F_{f dγ}(x)|` over the grid.
pub const PUSHFORWARD_TOL: f64 = 1e-9;
/// Grid points whose mass density `f φ` is below this are ignored by the
/// Monge–Ampère residual.
pub const RESIDUAL_DENSITY_FLOOR: f64 = 1e-12;
pub const LOWER_BOUND_TOL: f64 = 1e-7;
pub const EIGENVALUE_TOL: f64 = 1e-8;
pub const POINCARE_TOL: f64 = 1e-7;

const CELL_NODES: usize = 8;

/// Tabulated distribution function of a one-dimensional measure on a
/// uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    grid: Vec<f64>,
    step: f64,
    /// Normalized density at the grid points.
    density: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Outcome of tabulating `f dγ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulation {
    pub table: CdfTable,
    /// `∫ f dγ` including both tails.
    pub total_mass: f64,
    /// Fraction of the mass outside the window.
    pub outside: f64,
}

impl CdfTable {
    /// Tabulates `f dγ` on `resolution` points spanning `[lo, hi]`.
    pub fn from_density(f: &LogDensity, lo: f64, hi: f64, resolution: usize) -> Result<Tabulation> {
        if f.dim() != 1 {
            return Err(Error::UnsupportedDimension(f.dim()));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("bad window [{lo}, {hi}]")));
        }
        if resolution < 16 {
            return Err(Error::InvalidArgument(format!(
                "resolution must be at least 16, got {resolution}"
            )));
        }
        let density = |x: f64| -> Result<f64> {
            let v = (-f.h(&[x]) + gaussian::ln_pdf(x)).exp();
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Evaluation {
                    point: vec![x],
                    what: "mass density is not finite".into(),
                })
            }
        };
        let (gl_x, gl_w) = legendre_rule(CELL_NODES);
        let cell = |a: f64, b: f64| -> Result<f64> {
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let mut s = 0.0;
            for (t, w) in gl_x.iter().zip(&gl_w) {
                s += w * density(mid + half * t)?;
            }
            Ok(s * half)
        };
        let tail = |a: f64, b: f64, cells: usize| -> Result<f64> {
            let h = (b - a) / cells as f64;
            let mut s = 0.0;
            for k in 0..cells {
                s += cell(a + k as f64 * h, a + (k + 1) as f64 * h)?;
            }
            Ok(s)
        };

        let n = resolution;
        let step = (hi - lo) / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
        let tail_width = 0.5 * (hi - lo);
        let tail_cells = (n / 2).max(64);
        let left = tail(lo - tail_width, lo, tail_cells)?;
        let right = tail(hi, hi + tail_width, tail_cells)?;
        let mut cells = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            cells.push(cell(grid[i], grid[i + 1])?);
        }
        let inside: f64 = cells.iter().sum();
        let total = left + inside + right;
        if !(total > f64::EPSILON) {
            return Err(Error::DegenerateMass(total));
        }

        let mut lower = Vec::with_capacity(n);
        let mut acc = left;
        lower.push(acc / total);
        for c in &cells {
            acc += c;
            lower.push(acc / total);
        }
        let mut upper = vec![0.0; n];
        let mut acc = right;
        upper[n - 1] = acc / total;
        for i in (0..n - 1).rev() {
            acc += cells[i];
            upper[i] = acc / total;
        }
        let dens = grid
            .iter()
            .map(|&x| density(x).map(|v| v / total))
            .collect::<Result<Vec<_>>>()?;

        Ok(Tabulation {
            table: CdfTable {
                grid,
                step,
                density: dens,
                lower,
                upper,
            },
            total_mass: total,
            outside: (left + right) / total,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Normalized density at the grid points.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// `F` at the grid points.
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// `1 - F` at the grid points, accumulated from the right.
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn lo(&self) -> f64 {
        self.grid[0]
    }

    pub fn hi(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    fn cell_of(&self, x: f64) -> (usize, f64) {
        let n = self.grid.len();
        let pos = ((x - self.grid[0]) / self.step).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        (i, (x - self.grid[i]) / self.step)
    }

    fn hermite(&self, values: &[f64], sign: f64, i: usize, t: f64) -> f64 {
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * values[i] + h01 * values[i + 1] + sign * self.step * (h10 * self.density[i] + h11 * self.density[i + 1])
    }

    /// `(F(x), 1 - F(x))` by cubic Hermite interpolation with the exact
    /// density as derivative. Clamped to the end values outside the grid.
    pub fn tails(&self, x: f64) -> (f64, f64) {
        let (i, t) = self.cell_of(x);
        let t = t.clamp(0.0, 1.0);
        (
            self.hermite(&self.lower, 1.0, i, t).max(0.0),
            self.hermite(&self.upper, -1.0, i, t).max(0.0),
        )
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.tails(x).0
    }

    /// Solves `F(x) = u`; clamped to the grid ends outside the tabulated
    /// range.
    pub fn quantile(&self, u: f64) -> f64 {
        self.invert(&self.lower, 1.0, u)
    }

    /// Solves `1 - F(x) = s`, keeping relative precision in the upper tail.
    pub fn quantile_upper(&self, s: f64) -> f64 {
        self.invert(&self.upper, -1.0, s)
    }

    fn invert(&self, values: &[f64], sign: f64, target: f64) -> f64 {
        let n = values.len();
        // `values` is increasing for sign > 0 and decreasing otherwise.
        let key = |v: f64| sign * v;
        let goal = key(target);
        if goal <= key(values[0]) {
            return self.grid[0];
        }
        if goal >= key(values[n - 1]) {
            return self.grid[n - 1];
        }
        let i = values.partition_point(|&v| key(v) <= goal).saturating_sub(1).min(n - 2);
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..64 {
            let mid = 0.5 * (a + b);
            if key(self.hermite(values, sign, i, mid)) < goal {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-16 {
                break;
            }
        }
        self.grid[i] + 0.5 * (a + b) * self.step
    }
}

/// Gaussian quantile of a point given as a pair of tail probabilities.
fn gaussian_quantile(lower: f64, upper: f64) -> f64 {
    if lower <= upper {
        gaussian::icdf(lower)
    } else {
        gaussian::isf(upper)
    }
}

/// Sampled monotone transport map from `f dγ` to `dγ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportMap1D {
    grid: Vec<f64>,
    t: Vec<f64>,
    t_prime: Vec<f64>,
    lambda: Vec<f64>,
    table: CdfTable,
    /// `sup |F_γ(T(x)) - F_{f dγ}(x)|` over the grid.
    pushforward_error: f64,
}

impl TransportMap1D {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn t_prime(&self) -> &[f64] {
        &self.t_prime
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn table(&self) -> &CdfTable {
        &self.table
    }

    pub fn pushforward_error(&self) -> f64 {
        self.pushforward_error
    }

    pub fn step(&self) -> f64 {
        self.table.step
    }

    /// `T(x)` anywhere; linear continuation outside the window.
    pub fn transport(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x < self.grid[0] {
            return self.t[0] + self.t_prime[0] * (x - self.grid[0]);
        }
        if x > self.grid[n - 1] {
            return self.t[n - 1] + self.t_prime[n - 1] * (x - self.grid[n - 1]);
        }
        let (lower, upper) = self.table.tails(x);
        gaussian_quantile(lower, upper)
    }

    /// `λ(x) = T'(x) - 1` by the same centered difference used on the grid;
    /// held at the end values outside the window.
    pub fn eigenvalue(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x <= self.grid[0] {
            return self.lambda[0];
        }
        if x >= self.grid[n - 1] {
            return self.lambda[n - 1];
        }
        let h = self.step();
        (self.transport(x + h) - self.transport(x - h)) / (2.0 * h) - 1.0
    }

    /// Writes the sampled map as CSV with columns `x,T,lambda`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,T,lambda")?;
        for ((x, t), l) in self.grid.iter().zip(&self.t).zip(&self.lambda) {
            writeln!(out, "{x:.16e},{t:.16e},{l:.16e}")?;
        }
        Ok(())
    }
}

/// Window `μ ± 8 max(1, σ)` around the mean of `f dγ`.
pub fn default_window(f: &LogDensity, rule: &QuadratureRule) -> Result<(f64, f64)> {
    let fs = compute_functionals(f, rule)?;
    let mean = fs.barycenter[0];
    let second = rule.integrate(|x| (x[0] - mean).powi(2) * f.value(x))? / fs.mass;
    let half = DEFAULT_HALF_WIDTH * second.sqrt().max(1.0);
    Ok((mean - half, mean + half))
}

/// Monotone map pushing `f dγ` forward to `dγ`.
pub fn brenier_map_1d(f: &LogDensity, window: (f64, f64), resolution: usize) -> Result<TransportMap1D> {
    let (lo, hi) = window;
    let tab = CdfTable::from_density(f, lo, hi, resolution)?;
    if (tab.total_mass - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "transport needs unit mass, got {}",
            tab.total_mass
        )));
    }
    let gauss_outside = gaussian::cdf(lo) + gaussian::sf(hi);
    let missing = tab.outside.max(gauss_outside);
    if missing > COVERAGE_TOL {
        return Err(Error::WindowCoverage { lo, hi, missing });
    }
    let table = tab.table;
    let n = table.grid.len();
    let t: Vec<f64> = table
        .lower
        .iter()
        .zip(&table.upper)
        .map(|(&l, &u)| gaussian_quantile(l, u))
        .collect();
    if let Some(i) = t.iter().position(|v| !v.is_finite()) {
        return Err(Error::InternalConsistency(format!(
            "transport is not finite at x = {}",
            table.grid[i]
        )));
    }
    let h = table.step;
    let mut t_prime = Vec::with_capacity(n);
    t_prime.push((-3.0 * t[0] + 4.0 * t[1] - t[2]) / (2.0 * h));
    for i in 1..n - 1 {
        t_prime.push((t[i + 1] - t[i - 1]) / (2.0 * h));
    }
    t_prime.push((3.0 * t[n - 1] - 4.0 * t[n - 2] + t[n - 3]) / (2.0 * h));

    if let Some(i) = (0..n - 1).find(|&i| t[i + 1] < t[i]) {
        return Err(Error::InternalConsistency(format!(
            "transport decreases between x = {} and x = {}",
            table.grid[i],
            table.grid[i + 1]
        )));
    }
    let lambda: Vec<f64> = t_prime.iter().map(|d| d - 1.0).collect();
    if let Some(i) = lambda.iter().position(|&l| l < -1.0 + 1e-12) {
        return Err(Error::InternalConsistency(format!(
            "eigenvalue {} below -1 at x = {}",
            lambda[i], table.grid[i]
        )));
    }
    let mut pushforward_error: f64 = 0.0;
    for ((&ti, &lo), &up) in t.iter().zip(&table.lower).zip(&table.upper) {
        let err = if lo <= up {
            (gaussian::cdf(ti) - lo).abs()
        } else {
            (gaussian::sf(ti) - up).abs()
        };
        pushforward_error = pushforward_error.max(err);
    }
    if pushforward_error > PUSHFORWARD_TOL {
        return Err(Error::InternalConsistency(format!(
            "pushforward error {pushforward_error:e} exceeds {PUSHFORWARD_TOL:e}"
        )));
    }
    Ok(TransportMap1D {
        grid: table.grid.clone(),
        t,
        t_prime,
        lambda,
        table,
        pushforward_error,
    })
}

/// `sup |log f(x) - x²/2 - log T'(x) + T(x)²/2|` over grid points carrying
/// mass density at least [`RESIDUAL_DENSITY_FLOOR`].
pub fn monge_ampere_residual(f: &LogDensity, map: &TransportMap1D) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for ((&x, &t), &dt) in map.grid.iter().zip(&map.t).zip(&map.t_prime) {
        let log_f = -f.h(&[x]);
        if (log_f + gaussian::ln_pdf(x)).exp() < RESIDUAL_DENSITY_FLOOR {
            continue;
        }
        if !(dt > 0.0) {
            return Err(Error::DegenerateMap { x, t_prime: dt });
        }
        let r = (log_f - 0.5 * x * x - dt.ln() + 0.5 * t * t).abs();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// `t - log(1 + t)`, the pointwise gap in `log(1 + t) ≤ t`.
pub fn log_gap(t: f64) -> f64 {
    t - t.ln_1p()
}

/// `δ(f) ≥ ∫ f (λ - log(1 + λ)) dγ` for unit-mass `f`.
pub fn deficit_lower_bound(f: &LogDensity, map: &TransportMap1D, rule: &QuadratureRule) -> Result<SlackRecord> {
    let fs = compute_functionals(f, rule)?;
    let mut bound = 0.0;
    for (x, w) in rule.iter() {
        let fx = f.value(x);
        if fx == 0.0 {
            continue;
        }
        let lambda = map.eigenvalue(x[0]);
        if !(lambda > -1.0) {
            return Err(Error::InvalidEigenvalue { x: x[0], lambda });
        }
        bound += w * fx * log_gap(lambda);
    }
    Ok(
        SlackRecord::inequality("deficit_lower_bound", bound, fs.deficit, LOWER_BOUND_TOL)
            .with("deficit", fs.deficit)
            .with("mass", fs.mass),
    )
}

/// `max{1, √(M+1) - 1}`, the uniform bound on `|λ|` for `D²h ≤ M`.
pub fn eigenvalue_cap(m: f64) -> f64 {
    ((m + 1.0).sqrt() - 1.0).max(1.0)
}

/// Checks `sup |λ| ≤ max{1, √(M+1) - 1}` and the contraction
/// `sup T' ≤ √(M+1)` over the grid. Returns `[eigenvalue, contraction]`.
pub fn eigenvalue_bound_check(map: &TransportMap1D, m: f64) -> Result<[SlackRecord; 2]> {
    if !(m > 0.0) {
        return Err(Error::InvalidArgument(format!("M must be positive, got {m}")));
    }
    let sup_abs = map.lambda.iter().fold(0.0_f64, |a, l| a.max(l.abs()));
    let sup_dt = map.t_prime.iter().fold(f64::NEG_INFINITY, |a, &d| a.max(d));
    Ok([
        SlackRecord::inequality("eigenvalue_bound", sup_abs, eigenvalue_cap(m), EIGENVALUE_TOL).with("M", m),
        SlackRecord::inequality("contraction_bound", sup_dt, (m + 1.0).sqrt(), EIGENVALUE_TOL).with("M", m),
    ])
}

/// Poincaré inequality for `μ = f dγ / m` with constant `1/ε`:
/// `∫ |u - ū|² dμ ≤ (1/ε) ∫ |u'|² dμ`. The derivative is a centered
/// difference with step `1e-5`.
pub fn poincare_check<U>(f: &LogDensity, epsilon: f64, u: U, rule: &QuadratureRule) -> Result<SlackRecord>
where
    U: Fn(f64) -> f64,
{
    if f.dim() != 1 || rule.dim() != 1 {
        return Err(Error::UnsupportedDimension(f.dim().max(rule.dim())));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    const H: f64 = 1e-5;
    let mut mass = 0.0;
    let mut first = 0.0;
    let mut grad_sq = 0.0;
    let mut samples = Vec::with_capacity(rule.len());
    for (x, w) in rule.iter() {
        let wf = w * f.value(x);
        let ux = u(x[0]);
        let du = (u(x[0] + H) - u(x[0] - H)) / (2.0 * H);
        if !ux.is_finite() || !du.is_finite() {
            return Err(Error::NonFiniteIntegrand { node: x.to_vec() });
        }
        mass += wf;
        first += wf * ux;
        grad_sq += wf * du * du;
        samples.push((wf, ux));
    }
    if !(mass > f64::EPSILON) {
        return Err(Error::DegenerateMass(mass));
    }
    let mean = first / mass;
    let variance = samples.iter().map(|(wf, ux)| wf * (ux - mean).powi(2)).sum::<f64>() / mass;
    let energy = grad_sq / mass / epsilon;
    Ok(SlackRecord::inequality("poincare", variance, energy, POINCARE_TOL).with("epsilon", epsilon))
}

/// `W₂(f dγ, dγ) = (∫ |T(x) - x|² f dγ)^{1/2}`.
pub fn w2_from_map(f: &LogDensity, map: &TransportMap1D, rule: &QuadratureRule) -> Result<f64> {
    let mut mass = 0.0;
    let mut cost = 0.0;
    for (x, w) in rule.iter() {
        let wf = w * f.value(x);
        if wf == 0.0 {
            continue;
        }
        let d = map.transport(x[0]) - x[0];
        if !d.is_finite() {
            return Err(Error::NonFiniteIntegrand { node: x.to_vec() });
        }
        mass += wf;
        cost += wf * d * d;
    }
    if !(mass > f64::EPSILON) {
        return Err(Error::DegenerateMass(mass));
    }
    Ok((cost / mass).sqrt())
}
