//! Admissible functions `f = e^{-h}` and membership tests for the
//! Hessian-bounded families.
//!
//! A [`LogDensity`] wraps a [`Potential`] (oracles for `h`, `∇h`, `D²h`)
//! together with optional closed-form functional values and an optional
//! analytic envelope for the eigenvalues of `D²h`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::{gaussian_rule, QuadratureRule, DEFICIT_ORDER};

/// Oracles for the potential `h` of `f = e^{-h}`.
///
/// Implementations must be pure: the same input always yields the same
/// output, and concurrent calls are allowed.
pub trait Potential: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Row-major `dim × dim` Hessian.
    fn hessian(&self, x: &[f64]) -> Vec<f64>;
}

/// Analytic values of the functionals of a density.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub mass: f64,
    pub barycenter: Vec<f64>,
    pub entropy: f64,
    pub fisher: f64,
}

#[derive(Debug, Clone)]
pub struct LogDensity {
    label: String,
    potential: Arc<dyn Potential>,
    closed_form: Option<ClosedForm>,
    /// Bounds on the eigenvalues of `D²h` valid on all of `R^n`.
    envelope: Option<(f64, f64)>,
}

impl LogDensity {
    pub fn new(label: impl Into<String>, potential: Arc<dyn Potential>) -> Self {
        Self {
            label: label.into(),
            potential,
            closed_form: None,
            envelope: None,
        }
    }

    pub fn with_closed_form(mut self, closed_form: ClosedForm) -> Self {
        self.closed_form = Some(closed_form);
        self
    }

    pub fn with_envelope(mut self, lo: f64, hi: f64) -> Self {
        self.envelope = Some((lo, hi));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn closed_form(&self) -> Option<&ClosedForm> {
        self.closed_form.as_ref()
    }

    pub fn envelope(&self) -> Option<(f64, f64)> {
        self.envelope
    }

    pub fn potential(&self) -> &Arc<dyn Potential> {
        &self.potential
    }

    pub fn h(&self, x: &[f64]) -> f64 {
        self.potential.value(x)
    }

    pub fn grad_h(&self, x: &[f64]) -> Vec<f64> {
        self.potential.gradient(x)
    }

    /// `f(x) = e^{-h(x)}`.
    pub fn value(&self, x: &[f64]) -> f64 {
        (-self.potential.value(x)).exp()
    }

    /// Symmetrized Hessian of `h`. Asymmetry above `1e-10` is reported as
    /// an evaluation error, as are non-finite entries.
    pub fn hess_h(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let raw = self.potential.hessian(x);
        if raw.len() != n * n {
            return Err(Error::Evaluation {
                point: x.to_vec(),
                what: format!("Hessian has {} entries, expected {}", raw.len(), n * n),
            });
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation {
                point: x.to_vec(),
                what: "non-finite Hessian".into(),
            });
        }
        let m = DMatrix::from_row_slice(n, n, &raw);
        for i in 0..n {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 {
                    return Err(Error::Evaluation {
                        point: x.to_vec(),
                        what: format!("asymmetric Hessian entry ({i}, {j})"),
                    });
                }
            }
        }
        Ok((&m + m.transpose()) * 0.5)
    }

    /// Eigenvalues of `D²h(x)`, ascending.
    pub fn hess_eigenvalues(&self, x: &[f64]) -> Result<Vec<f64>> {
        let hess = self.hess_h(x)?;
        let mut eig: Vec<f64> = if hess.nrows() == 1 {
            vec![hess[(0, 0)]]
        } else {
            hess.symmetric_eigenvalues().iter().copied().collect()
        };
        eig.sort_by(f64::total_cmp);
        Ok(eig)
    }

    /// `c · f`, i.e. `h - log c`. Closed-form values scale accordingly.
    pub fn scaled(&self, c: f64) -> Result<LogDensity> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scale factor must be positive, got {c}"
            )));
        }
        let potential = Arc::new(Shifted {
            base: self.potential.clone(),
            offset: -c.ln(),
        });
        let closed_form = self.closed_form.as_ref().map(|cf| ClosedForm {
            mass: c * cf.mass,
            barycenter: cf.barycenter.clone(),
            entropy: c * cf.entropy,
            fisher: c * cf.fisher,
        });
        Ok(LogDensity {
            label: format!("{}*{c}", self.label),
            potential,
            closed_form,
            envelope: self.envelope,
        })
    }

    /// `f(x) · e^{b·x - |b|²/2}`, renormalized to the mass of `f`.
    /// The Hessian of `h` (and hence the envelope) is unchanged.
    pub fn tilted(&self, b: &[f64]) -> Result<LogDensity> {
        if b.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "tilt has {} components, density is {}-dimensional",
                b.len(),
                self.dim()
            )));
        }
        let b_sq: f64 = b.iter().map(|v| v * v).sum();
        let raw = Tilted {
            base: self.potential.clone(),
            b: b.to_vec(),
            offset: 0.5 * b_sq,
        };
        let rule = gaussian_rule(DEFICIT_ORDER, self.dim())?;
        let base_mass = mass(self, &rule)?;
        let tilted_raw = LogDensity::new("", Arc::new(raw.clone()));
        let tilted_mass = mass(&tilted_raw, &rule)?;
        let potential = Arc::new(Tilted {
            offset: raw.offset + (tilted_mass / base_mass).ln(),
            ..raw
        });
        let mut label = format!("{}+tilt(", self.label);
        label.push_str(&join(b));
        label.push(')');
        Ok(LogDensity {
            label,
            potential,
            closed_form: None,
            envelope: self.envelope,
        })
    }
}

fn mass(f: &LogDensity, rule: &QuadratureRule) -> Result<f64> {
    rule.integrate(|x| f.value(x))
}

pub(crate) fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn diagonal(n: usize, d: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = d(i);
    }
    m
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// `h(x) = a|x|² + offset`.
#[derive(Debug, Clone)]
struct Quadratic {
    dim: usize,
    a: f64,
    offset: f64,
}

impl Potential for Quadratic {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.a * norm_sq(x) + self.offset
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| 2.0 * self.a * v).collect()
    }
    fn hessian(&self, _x: &[f64]) -> Vec<f64> {
        diagonal(self.dim, |_| 2.0 * self.a)
    }
}

/// `h(x) = -b·x + |b|²/2`.
#[derive(Debug, Clone)]
struct Linear {
    b: Vec<f64>,
}

impl Potential for Linear {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        -dot(&self.b, x) + 0.5 * norm_sq(&self.b)
    }
    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        self.b.iter().map(|v| -v).collect()
    }
    fn hessian(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0; self.b.len() * self.b.len()]
    }
}

/// `h(x) = a|x|² + A Σᵢ cos(ω xᵢ) + offset`.
#[derive(Debug, Clone)]
struct Perturbed {
    dim: usize,
    a: f64,
    amplitude: f64,
    frequency: f64,
    offset: f64,
}

impl Potential for Perturbed {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        let waves: f64 = x.iter().map(|v| (self.frequency * v).cos()).sum();
        self.a * norm_sq(x) + self.amplitude * waves + self.offset
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .map(|v| 2.0 * self.a * v - self.amplitude * self.frequency * (self.frequency * v).sin())
            .collect()
    }
    fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let w2 = self.frequency * self.frequency;
        diagonal(self.dim, |i| {
            2.0 * self.a - self.amplitude * w2 * (self.frequency * x[i]).cos()
        })
    }
}

/// `h(x) + offset`.
#[derive(Debug, Clone)]
struct Shifted {
    base: Arc<dyn Potential>,
    offset: f64,
}

impl Potential for Shifted {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(x) + self.offset
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.base.gradient(x)
    }
    fn hessian(&self, x: &[f64]) -> Vec<f64> {
        self.base.hessian(x)
    }
}

/// `h(x) - b·x + offset`.
#[derive(Debug, Clone)]
struct Tilted {
    base: Arc<dyn Potential>,
    b: Vec<f64>,
    offset: f64,
}

impl Potential for Tilted {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(x) - dot(&self.b, x) + self.offset
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.base.gradient(x);
        g.iter_mut().zip(&self.b).for_each(|(gi, bi)| *gi -= bi);
        g
    }
    fn hessian(&self, x: &[f64]) -> Vec<f64> {
        self.base.hessian(x)
    }
}

/// `h(x + μ) + μ·x + |μ|²/2 + offset`: translation by the barycenter
/// combined with the compensating linear tilt.
#[derive(Debug, Clone)]
pub(crate) struct Recentered {
    pub(crate) base: Arc<dyn Potential>,
    pub(crate) mu: Vec<f64>,
    pub(crate) offset: f64,
}

impl Recentered {
    fn shift(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mu).map(|(a, b)| a + b).collect()
    }
}

impl Potential for Recentered {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(&self.shift(x)) + dot(&self.mu, x) + 0.5 * norm_sq(&self.mu) + self.offset
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.base.gradient(&self.shift(x));
        g.iter_mut().zip(&self.mu).for_each(|(gi, mi)| *gi += mi);
        g
    }
    fn hessian(&self, x: &[f64]) -> Vec<f64> {
        self.base.hessian(&self.shift(x))
    }
}

/// Rescaled Gaussians `f_a(x) = (2a+1)^{n/2} e^{-a|x|²}`, unit mass and
/// zero barycenter for every `a > -1/2`.
pub fn quadratic_family(a: f64, dim: usize) -> Result<LogDensity> {
    check_dim(dim)?;
    if !(a > -0.5 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "quadratic family needs a > -1/2, got {a}"
        )));
    }
    let n = dim as f64;
    let s = 2.0 * a + 1.0;
    let potential = Quadratic {
        dim,
        a,
        offset: -0.5 * n * s.ln(),
    };
    let closed_form = ClosedForm {
        mass: 1.0,
        barycenter: vec![0.0; dim],
        entropy: 0.5 * n * s.ln() - n * a / s,
        fisher: 4.0 * n * a * a / s,
    };
    Ok(
        LogDensity::new(format!("quadratic(a={a},n={dim})"), Arc::new(potential))
            .with_closed_form(closed_form)
            .with_envelope(2.0 * a, 2.0 * a),
    )
}

/// Log-linear densities `e^{b·x - |b|²/2}`, the equality cases of the
/// log-Sobolev inequality.
pub fn log_linear(b: &[f64]) -> Result<LogDensity> {
    check_dim(b.len())?;
    let b_sq = norm_sq(b);
    let closed_form = ClosedForm {
        mass: 1.0,
        barycenter: b.to_vec(),
        entropy: 0.5 * b_sq,
        fisher: b_sq,
    };
    Ok(
        LogDensity::new(format!("loglinear(b={})", join(b)), Arc::new(Linear { b: b.to_vec() }))
            .with_closed_form(closed_form)
            .with_envelope(0.0, 0.0),
    )
}

/// `h(x) = a|x|² + A Σᵢ cos(ω xᵢ) + c` with `c` fixed by quadrature so that
/// `f` has unit mass. The Hessian eigenvalues lie in `[2a - Aω², 2a + Aω²]`.
pub fn perturbed_quadratic(a: f64, amplitude: f64, frequency: f64, dim: usize) -> Result<LogDensity> {
    check_dim(dim)?;
    let spread = amplitude.abs() * frequency * frequency;
    let lo = 2.0 * a - spread;
    let hi = 2.0 * a + spread;
    if !(lo > -1.0) || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Hessian envelope [{lo}, {hi}] must stay above -1"
        )));
    }
    let unnormalized = Perturbed {
        dim: 1,
        a,
        amplitude,
        frequency,
        offset: 0.0,
    };
    // The density factorizes over coordinates, so one 1D integral suffices.
    let rule = gaussian_rule(DEFICIT_ORDER, 1)?;
    let z1 = rule.integrate(|x| (-unnormalized.value(x)).exp())?;
    let potential = Perturbed {
        dim,
        a,
        amplitude,
        frequency,
        offset: dim as f64 * z1.ln(),
    };
    Ok(LogDensity::new(
        format!("perturbed(a={a},amp={amplitude},freq={frequency},n={dim})"),
        Arc::new(potential),
    )
    .with_envelope(lo, hi))
}

/// Parameters of the family `F(ε, M)` and, when `r` is present, of the
/// `L^r` family where the upper Hessian bound is replaced by
/// `∫ ‖(D²h + Id)₊‖^r f dγ ≤ M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    pub epsilon: f64,
    pub m: f64,
    pub r: Option<f64>,
}

impl FamilyParams {
    pub fn new(epsilon: f64, m: f64) -> Result<Self> {
        Self::build(epsilon, m, None)
    }

    pub fn with_r(epsilon: f64, m: f64, r: f64) -> Result<Self> {
        Self::build(epsilon, m, Some(r))
    }

    fn build(epsilon: f64, m: f64, r: Option<f64>) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidArgument(format!("M must be > 0, got {m}")));
        }
        if let Some(r) = r {
            if !(r > 1.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!("r must be > 1, got {r}")));
            }
        }
        Ok(Self { epsilon, m, r })
    }
}

/// Box on which Hessian bounds are sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub half_width: f64,
    pub points: usize,
}

impl Default for Probe {
    fn default() -> Self {
        Self {
            half_width: 6.0,
            points: 100_000,
        }
    }
}

/// Tolerance applied to sampled eigenvalue bounds.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub is_member: bool,
    pub min_eig_observed: f64,
    pub max_eig_observed: f64,
    pub lr_integral: Option<f64>,
    /// Point where the most severe violation was observed.
    pub witness_point: Option<Vec<f64>>,
    pub probe: Probe,
}

/// Radical-inverse (Halton) point `index` in `[-w, w]^dim`.
fn halton_point(index: usize, dim: usize, half_width: f64) -> Vec<f64> {
    const BASES: [usize; 3] = [2, 3, 5];
    (0..dim)
        .map(|d| {
            let base = BASES[d];
            let mut i = index + 1;
            let mut f = 1.0;
            let mut r = 0.0;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            half_width * (2.0 * r - 1.0)
        })
        .collect()
}

fn sample_extremes(f: &LogDensity, probe: &Probe) -> Result<(f64, Vec<f64>, f64, Vec<f64>)> {
    if !(probe.half_width > 0.0) || probe.points == 0 {
        return Err(Error::InvalidArgument("probe box must be non-empty".into()));
    }
    let dim = f.dim();
    let mut lo = (f64::INFINITY, vec![0.0; dim]);
    let mut hi = (f64::NEG_INFINITY, vec![0.0; dim]);
    for k in 0..probe.points {
        let x = halton_point(k, dim, probe.half_width);
        let eig = f.hess_eigenvalues(&x)?;
        if eig[0] < lo.0 {
            lo = (eig[0], x.clone());
        }
        if eig[dim - 1] > hi.0 {
            hi = (eig[dim - 1], x);
        }
    }
    Ok((lo.0, lo.1, hi.0, hi.1))
}

/// Sampled certificate that `(-1+ε) ≤ D²h ≤ M` on the probe box. When the
/// density carries an analytic envelope it must satisfy the bounds too.
pub fn check_membership(f: &LogDensity, params: &FamilyParams, probe: &Probe) -> Result<MembershipReport> {
    let (min_eig, min_at, max_eig, max_at) = sample_extremes(f, probe)?;
    let floor = -1.0 + params.epsilon - MEMBERSHIP_TOL;
    let ceil = params.m + MEMBERSHIP_TOL;
    let (env_lo, env_hi) = f.envelope().unwrap_or((min_eig, max_eig));
    let lower_ok = min_eig >= floor && env_lo >= floor;
    let upper_ok = max_eig <= ceil && env_hi <= ceil;
    let witness_point = if !lower_ok {
        Some(min_at)
    } else if !upper_ok {
        Some(max_at)
    } else {
        None
    };
    Ok(MembershipReport {
        is_member: lower_ok && upper_ok,
        min_eig_observed: min_eig,
        max_eig_observed: max_eig,
        lr_integral: None,
        witness_point,
        probe: *probe,
    })
}

/// Operator norm of the spectral positive part of a symmetric matrix,
/// raised to the power `r`.
fn positive_part_norm_pow(m: &DMatrix<f64>, r: f64) -> f64 {
    let top = if m.nrows() == 1 {
        m[(0, 0)]
    } else {
        m.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    };
    top.max(0.0).powf(r)
}

/// `∫ ‖(D²h + Id)₊‖^r f dγ` by quadrature.
pub fn lr_integral(f: &LogDensity, r: f64, rule: &QuadratureRule) -> Result<f64> {
    if rule.dim() != f.dim() {
        return Err(Error::InvalidArgument("rule and density dimensions differ".into()));
    }
    let n = f.dim();
    let mut acc = 0.0;
    for (x, w) in rule.iter() {
        let shifted = f.hess_h(x)? + DMatrix::<f64>::identity(n, n);
        let v = positive_part_norm_pow(&shifted, r) * f.value(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { node: x.to_vec() });
        }
        acc += w * v;
    }
    Ok(acc)
}

/// Membership in the `L^r` family: sampled lower bound plus the quadrature
/// value of the Hessian moment.
pub fn check_membership_lr(
    f: &LogDensity,
    params: &FamilyParams,
    rule: &QuadratureRule,
    probe: &Probe,
) -> Result<MembershipReport> {
    let r = params
        .r
        .ok_or_else(|| Error::InvalidArgument("L^r membership needs r".into()))?;
    let (min_eig, min_at, max_eig, _) = sample_extremes(f, probe)?;
    let integral = lr_integral(f, r, rule)?;
    let floor = -1.0 + params.epsilon - MEMBERSHIP_TOL;
    let env_lo = f.envelope().map_or(min_eig, |e| e.0);
    let lower_ok = min_eig >= floor && env_lo >= floor;
    let moment_ok = integral <= params.m + MEMBERSHIP_TOL;
    Ok(MembershipReport {
        is_member: lower_ok && moment_ok,
        min_eig_observed: min_eig,
        max_eig_observed: max_eig,
        lr_integral: Some(integral),
        witness_point: (!lower_ok).then_some(min_at),
        probe: *probe,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{hermite_rule, MonteCarloSampler};

    fn small_probe() -> Probe {
        Probe {
            half_width: 6.0,
            points: 20_000,
        }
    }

    #[test]
    fn quadratic_zero_is_the_constant_one() {
        let f = quadratic_family(0.0, 1).unwrap();
        assert_eq!(f.h(&[1.7]), 0.0);
        assert_eq!(f.value(&[-3.0]), 1.0);
        let cf = f.closed_form().unwrap();
        assert_eq!((cf.entropy, cf.fisher), (0.0, 0.0));
    }

    #[test]
    fn quadratic_half_closed_forms() {
        let f = quadratic_family(0.5, 1).unwrap();
        let cf = f.closed_form().unwrap();
        assert!((cf.entropy - (0.5 * 2f64.ln() - 0.25)).abs() < 1e-15);
        assert!((cf.entropy - 0.096_574).abs() < 1e-6);
        assert!((0.5 * cf.fisher - 0.25).abs() < 1e-15);
    }

    #[test]
    fn quadratic_rejects_non_integrable_a() {
        assert!(matches!(quadratic_family(-0.5, 1), Err(Error::InvalidArgument(_))));
        assert!(matches!(quadratic_family(0.1, 4), Err(Error::UnsupportedDimension(4))));
    }

    #[test]
    fn log_linear_barycenter() {
        let f = log_linear(&[1.0]).unwrap();
        let rule = hermite_rule(64).unwrap();
        let bary = rule.integrate(|x| x[0] * f.value(x)).unwrap();
        assert!((bary - 1.0).abs() < 1e-10);
        let g = log_linear(&[0.0]).unwrap();
        assert_eq!(g.value(&[2.5]), 1.0);
    }

    #[test]
    fn perturbed_with_zero_amplitude_is_quadratic() {
        let p = perturbed_quadratic(0.3, 0.0, 2.0, 1).unwrap();
        let q = quadratic_family(0.3, 1).unwrap();
        for x in [-2.0, -0.3, 0.0, 1.1, 4.0] {
            assert!((p.h(&[x]) - q.h(&[x])).abs() < 1e-13);
        }
    }

    #[test]
    fn perturbed_rejects_envelope_below_minus_one() {
        let err = perturbed_quadratic(-0.4, 0.2, 2.0, 1).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn perturbed_has_unit_mass() {
        let f = perturbed_quadratic(0.3, 0.05, 2.0, 2).unwrap();
        let rule = gaussian_rule(64, 2).unwrap();
        assert!((rule.integrate(|x| f.value(x)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn membership_examples() {
        let params = FamilyParams::new(0.5, 2.0).unwrap();
        let f = quadratic_family(0.5, 1).unwrap();
        assert!(check_membership(&f, &params, &small_probe()).unwrap().is_member);
        let g = quadratic_family(-0.4, 1).unwrap();
        let report = check_membership(&g, &params, &small_probe()).unwrap();
        assert!(!report.is_member);
        assert!((report.min_eig_observed + 0.8).abs() < 1e-12);
        assert!(report.witness_point.is_some());

        // Envelope oracle: 2a ± Aω² = 0.6 ± 0.2 = [0.4, 0.8] ⊂ [-0.6, 0.9].
        let p = perturbed_quadratic(0.3, 0.05, 2.0, 1).unwrap();
        let params = FamilyParams::new(0.4, 0.9).unwrap();
        let report = check_membership(&p, &params, &Probe::default()).unwrap();
        assert!(report.is_member);
        assert!((report.min_eig_observed - 0.4).abs() < 1e-6);
        assert!((report.max_eig_observed - 0.8).abs() < 1e-6);
    }

    #[test]
    fn membership_is_monotone_in_the_bounds() {
        let p = perturbed_quadratic(0.3, 0.05, 2.0, 1).unwrap();
        let probe = small_probe();
        for (eps, m) in [(0.4, 0.9), (1.4, 0.8), (1.39, 0.81)] {
            let base = check_membership(&p, &FamilyParams::new(eps, m).unwrap(), &probe).unwrap();
            let wider = check_membership(&p, &FamilyParams::new(eps * 0.5, m * 2.0).unwrap(), &probe).unwrap();
            assert!(!base.is_member || wider.is_member);
        }
    }

    #[test]
    fn lr_integral_constant_hessian() {
        let rule = hermite_rule(64).unwrap();
        let f = quadratic_family(0.5, 1).unwrap();
        let params = FamilyParams::with_r(0.5, 5.0, 2.0).unwrap();
        let report = check_membership_lr(&f, &params, &rule, &small_probe()).unwrap();
        assert!((report.lr_integral.unwrap() - 4.0).abs() < 1e-12);
        assert!(report.is_member);
        let one = quadratic_family(0.0, 1).unwrap();
        for r in [1.5, 2.0, 7.0] {
            assert!((lr_integral(&one, r, &rule).unwrap() - 1.0).abs() < 1e-12);
        }
        let tight = FamilyParams::with_r(0.5, 3.0, 2.0).unwrap();
        assert!(
            !check_membership_lr(&f, &tight, &rule, &small_probe())
                .unwrap()
                .is_member
        );
    }

    #[test]
    fn lr_integral_matches_independent_oracles() {
        let f = perturbed_quadratic(0.3, 0.05, 2.0, 1).unwrap();
        let rule = hermite_rule(128).unwrap();
        let got = lr_integral(&f, 2.0, &rule).unwrap();
        let integrand = |x: f64| {
            let s = 1.6 - 0.2 * (2.0 * x).cos();
            s * s * f.value(&[x])
        };
        // Composite Simpson on [-12, 12] against the Gaussian density.
        let n = 20_000;
        let h = 24.0 / n as f64;
        let mut simpson = 0.0;
        for i in 0..=n {
            let x = -12.0 + i as f64 * h;
            let c = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            simpson += c * integrand(x) * crate::gaussian::pdf(x);
        }
        simpson *= h / 3.0;
        assert!((got - simpson).abs() < 1e-8, "{got} vs {simpson}");
        let mc = MonteCarloSampler::new(11, 1_000_000)
            .unwrap()
            .estimate(1, |x| integrand(x[0]))
            .unwrap();
        assert!((got - mc.mean).abs() <= 3.0 * mc.std_error);
    }

    #[test]
    fn tilt_preserves_mass_and_hessian() {
        let base = perturbed_quadratic(0.3, 0.05, 2.0, 1).unwrap();
        let t = base.tilted(&[0.5]).unwrap();
        let rule = hermite_rule(128).unwrap();
        assert!((rule.integrate(|x| t.value(x)).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(t.envelope(), base.envelope());
        let x = [0.37];
        assert!((t.hess_h(&x).unwrap()[(0, 0)] - base.hess_h(&x).unwrap()[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_hessian_is_rejected() {
        #[derive(Debug)]
        struct Skew;
        impl Potential for Skew {
            fn dim(&self) -> usize {
                2
            }
            fn value(&self, _x: &[f64]) -> f64 {
                0.0
            }
            fn gradient(&self, _x: &[f64]) -> Vec<f64> {
                vec![0.0, 0.0]
            }
            fn hessian(&self, _x: &[f64]) -> Vec<f64> {
                vec![1.0, 0.5, 0.0, 1.0]
            }
        }
        let f = LogDensity::new("skew", Arc::new(Skew));
        assert!(matches!(f.hess_h(&[0.0, 0.0]), Err(Error::Evaluation { .. })));
    }
}
