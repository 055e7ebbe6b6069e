//! Explicit constants of the stability estimates and their numeric checks.

use serde::Serialize;

use crate::density::{check_membership, check_membership_lr, quadratic_family, FamilyParams, LogDensity, Probe};
use crate::error::{Error, Result};
use crate::functionals::{compute_functionals, recenter, FunctionalSet};
use crate::quadrature::QuadratureRule;
use crate::slack::SlackRecord;
use crate::transport::{brenier_map_1d, default_window, w2_from_map, TransportMap1D, DEFAULT_RESOLUTION};
use crate::wasserstein::{grid_measure, w2_sinkhorn, SinkhornConfig};

/// Tolerance for inequalities whose sides come from quadrature and the
/// one-dimensional map.
pub const INEQUALITY_TOL: f64 = 1e-7;
/// Relative accuracy credited to the entropic W₂ estimate.
pub const SINKHORN_REL_TOL: f64 = 0.02;
/// Grid used to discretize densities for the entropic solver.
pub const SINKHORN_GRID: usize = 64;
pub const SINKHORN_HALF_WIDTH: f64 = 6.0;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// `g(t) = t - log(1 + t)`, accurate near 0.
fn g(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        t * t * (0.5 - t * (1.0 / 3.0 - 0.25 * t))
    } else {
        t - t.ln_1p()
    }
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Scans `n` points of `[lo, hi]`, then refines the best bracket.
fn scan_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let step = (hi - lo) / n as f64;
    let best = (0..=n)
        .map(|k| lo + k as f64 * step)
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap_or(lo);
    golden_min(&f, (best - step).max(lo), (best + step).min(hi))
}

/// Largest `c` with `t - log(1+t) ≥ c min{t², |t|}` on `(-1, ∞)`.
pub fn minorant_constant() -> f64 {
    let ratio = |t: f64| {
        if t == 0.0 {
            0.5
        } else {
            g(t) / (t * t).min(t.abs())
        }
    };
    // The ratio tends to 1/2 at 0 and to 1 at both ends of the range.
    let t = scan_min(ratio, -0.999, 50.0, 200_000);
    ratio(t)
}

/// Root of `t - log(1 + t) = 1`.
pub fn t_star() -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 10.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `max{1, √(M+1) - 1}`.
pub fn c_m(m: f64) -> f64 {
    ((1.0 + m).sqrt() - 1.0).max(1.0)
}

/// `C(ε, M) = √((1/ε) max{1, √(1+M) - 1})`.
pub fn c_thm11(epsilon: f64, m: f64) -> f64 {
    (c_m(m) / epsilon).sqrt()
}

/// `β = (r-1)/(2(2r-1))`.
pub fn beta(r: f64) -> Result<f64> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("r must be > 1, got {r}")));
    }
    Ok((r - 1.0) / (2.0 * (2.0 * r - 1.0)))
}

/// The two coefficients produced by HWI with auxiliary parameter `η`,
/// both divided by `1 - √2η²/2`: `(√2 C, (√2/(2η²) - 1/2) C²)`.
fn lemma_coefficients(c: f64, eta: f64) -> (f64, f64) {
    let e2 = eta * eta;
    let denom = 1.0 - SQRT2 * e2 / 2.0;
    (SQRT2 * c / denom, (SQRT2 / (2.0 * e2) - 0.5) * c * c / denom)
}

/// `η` ranges over `(0, 2^{1/4})`, where `1 - √2η²/2 > 0`.
fn eta_max() -> f64 {
    2f64.powf(0.25)
}

/// `C̃ = min_η max(√2 C, (√2/(2η²) - 1/2) C²) / (1 - √2η²/2)`, the constant
/// in `Ent ≤ C̃ (δ^{1/2+α} + δ^{2α})`. Returns `(C̃, η)`.
pub fn lemma_constant(c: f64) -> (f64, f64) {
    let obj = |eta: f64| {
        let (p, q) = lemma_coefficients(c, eta);
        p.max(q)
    };
    let eta = scan_min(obj, 1e-3, eta_max() * (1.0 - 1e-9), 20_000);
    (obj(eta), eta)
}

/// `C̄ = min_η (√2 C + (√2/(2η²) - 1/2) C²) / (1 - √2η²/2)`: with `α = 1/2`
/// both powers of `δ` coincide and the coefficients add. Returns `(C̄, η)`.
pub fn c_bar(c: f64) -> (f64, f64) {
    let obj = |eta: f64| {
        let (p, q) = lemma_coefficients(c, eta);
        p + q
    };
    let eta = scan_min(obj, 1e-3, eta_max() * (1.0 - 1e-9), 20_000);
    (obj(eta), eta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsRecord {
    pub c_thm11: f64,
    pub c_m: f64,
    pub c_minorant: f64,
    pub t_star: f64,
    pub c_thm14: f64,
    pub beta: Option<f64>,
    pub c_bar: f64,
    pub c_improved: f64,
    pub eta_opt: f64,
}

pub fn constants(params: &FamilyParams) -> ConstantsRecord {
    let c = c_thm11(params.epsilon, params.m);
    let t = t_star();
    let (cb, eta) = c_bar(c);
    ConstantsRecord {
        c_thm11: c,
        c_m: c_m(params.m),
        c_minorant: minorant_constant(),
        t_star: t,
        c_thm14: 1.0 / (2.0 * (1.0 + t)),
        beta: params.r.map(|r| (r - 1.0) / (2.0 * (2.0 * r - 1.0))),
        c_bar: cb,
        c_improved: cb / (2.0 * (cb + 1.0)),
        eta_opt: eta,
    }
}

/// How W₂ to the standard Gaussian is computed.
#[derive(Debug, Clone, PartialEq)]
pub enum W2Method {
    /// One-dimensional monotone map; `None` picks the default window.
    Transport {
        window: Option<(f64, f64)>,
        resolution: usize,
    },
    /// Debiased entropic transport on a midpoint grid.
    Sinkhorn {
        config: SinkhornConfig,
        per_axis: usize,
        half_width: f64,
    },
}

impl W2Method {
    pub fn default_for(dim: usize) -> Self {
        if dim == 1 {
            W2Method::Transport {
                window: None,
                resolution: DEFAULT_RESOLUTION,
            }
        } else {
            W2Method::Sinkhorn {
                config: SinkhornConfig::default(),
                per_axis: SINKHORN_GRID,
                half_width: SINKHORN_HALF_WIDTH,
            }
        }
    }
}

/// A W₂ value with the absolute error credited to its solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct W2Estimate {
    pub value: f64,
    pub abs_tolerance: f64,
    pub method: &'static str,
    pub violation: Option<f64>,
    pub iterations: Option<usize>,
}

impl W2Estimate {
    /// A value taken as exact.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            abs_tolerance: 0.0,
            method: "exact",
            violation: None,
            iterations: None,
        }
    }

    fn tag(&self, mut rec: SlackRecord) -> SlackRecord {
        rec = rec.with("w2_abs_tolerance", self.abs_tolerance);
        if let Some(v) = self.violation {
            rec = rec.with("marginal_violation", v);
        }
        if let Some(it) = self.iterations {
            rec = rec.with("sinkhorn_iterations", it as f64);
        }
        rec.note(format!("w2 via {}", self.method))
    }
}

/// `W₂(f dγ, dγ)` for unit-mass `f`. The map is returned on the transport
/// path.
pub fn estimate_w2(
    f: &LogDensity,
    rule: &QuadratureRule,
    method: &W2Method,
) -> Result<(W2Estimate, Option<TransportMap1D>)> {
    match method {
        W2Method::Transport { window, resolution } => {
            if f.dim() != 1 {
                return Err(Error::UnsupportedDimension(f.dim()));
            }
            let window = match window {
                Some(w) => *w,
                None => default_window(f, rule)?,
            };
            let map = brenier_map_1d(f, window, *resolution)?;
            let value = w2_from_map(f, &map, rule)?;
            let est = W2Estimate {
                value,
                abs_tolerance: 0.0,
                method: "transport map",
                violation: None,
                iterations: None,
            };
            Ok((est, Some(map)))
        }
        W2Method::Sinkhorn {
            config,
            per_axis,
            half_width,
        } => {
            if !(1..=3).contains(&f.dim()) {
                return Err(Error::UnsupportedDimension(f.dim()));
            }
            let mu = grid_measure(f, *per_axis, *half_width)?;
            let nu = grid_measure(&quadratic_family(0.0, f.dim())?, *per_axis, *half_width)?;
            let r = w2_sinkhorn(&mu, &nu, config)?;
            let est = W2Estimate {
                value: r.w2,
                abs_tolerance: SINKHORN_REL_TOL * r.w2,
                method: "sinkhorn",
                violation: Some(r.violation),
                iterations: Some(r.iterations),
            };
            Ok((est, None))
        }
    }
}

fn require_member(f: &LogDensity, params: &FamilyParams) -> Result<()> {
    let report = check_membership(f, params, &Probe::default())?;
    if report.is_member {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{} is not certified in F({}, {}): sampled Hessian range [{}, {}]",
            f.label(),
            params.epsilon,
            params.m,
            report.min_eig_observed,
            report.max_eig_observed
        )))
    }
}

/// `W₂(f̂ dγ, dγ) ≤ C(ε,M) δ(f/m)^{1/2}` given the functionals of `f` and
/// W₂ of its recentered normalization `f̂`.
pub fn thm11_record(fs: &FunctionalSet, params: &FamilyParams, w2_hat: &W2Estimate) -> SlackRecord {
    let c = c_thm11(params.epsilon, params.m);
    let delta = (fs.deficit / fs.mass).max(0.0);
    let rec = SlackRecord::inequality(
        "thm11_w2_vs_sqrt_deficit",
        w2_hat.value,
        c * delta.sqrt(),
        INEQUALITY_TOL + w2_hat.abs_tolerance,
    )
    .with("C", c)
    .with("deficit", delta)
    .with("epsilon", params.epsilon)
    .with("M", params.m);
    w2_hat.tag(rec)
}

/// Certifies `f`, recenters it and checks the stability estimate.
pub fn verify_thm11(
    f: &LogDensity,
    params: &FamilyParams,
    rule: &QuadratureRule,
    method: &W2Method,
) -> Result<SlackRecord> {
    require_member(f, params)?;
    let fs = compute_functionals(f, rule)?;
    let hat = recenter(f, &fs)?;
    let (w2, _) = estimate_w2(&hat, rule, method)?;
    Ok(thm11_record(&fs, params, &w2))
}

/// Constant of the `L^r` estimate assembled from its proof:
/// `W₂ ≤ √((1/ε) (C̃ n^{s-1})^{1/s}) δ^{1/(2s)}` with `s = (2r-1)/(r-1)`,
/// `C̃ = C(r,M)^{(1-θ)/(rθ)} / c`, `θ = 1/s`, `C(r,M) = 2^{2r-1}(M+1)` and
/// `c = 1/(2(1+t*))`. Returns `(constant, exponent)`.
pub fn thm14_constant(epsilon: f64, m: f64, r: f64, n: usize) -> Result<(f64, f64)> {
    let b = beta(r)?;
    let s = (2.0 * r - 1.0) / (r - 1.0);
    let theta = 1.0 / s;
    let c_rm = 2f64.powf(2.0 * r - 1.0) * (m + 1.0);
    let c = 1.0 / (2.0 * (1.0 + t_star()));
    let c_tilde = c_rm.powf((1.0 - theta) / (r * theta)) / c;
    let factor = (c_tilde * (n as f64).powf(s - 1.0)).powf(1.0 / s) / epsilon;
    Ok((factor.sqrt(), b))
}

/// `W₂(f dγ, dγ) ≤ C δ^β` for unit-mass, zero-barycenter `f` in the `L^r`
/// family, with the proof-assembled constant.
pub fn verify_thm14(
    f: &LogDensity,
    params: &FamilyParams,
    rule: &QuadratureRule,
    w2: &W2Estimate,
) -> Result<SlackRecord> {
    let r = params
        .r
        .ok_or_else(|| Error::InvalidArgument("the L^r estimate needs r".into()))?;
    let fs = compute_functionals(f, rule)?;
    if (fs.mass - 1.0).abs() > 1e-6 || fs.barycenter_norm_sq().sqrt() > 1e-6 {
        return Err(Error::Precondition(format!(
            "needs unit mass and zero barycenter, got mass {} and |μ| = {}",
            fs.mass,
            fs.barycenter_norm_sq().sqrt()
        )));
    }
    if fs.deficit > 1.0 {
        return Err(Error::OutOfRegime(fs.deficit));
    }
    let report = check_membership_lr(f, params, rule, &Probe::default())?;
    if !report.is_member {
        return Err(Error::Precondition(format!(
            "{} is not certified: min eigenvalue {}, Hessian moment {:?}",
            f.label(),
            report.min_eig_observed,
            report.lr_integral
        )));
    }
    let (c, b) = thm14_constant(params.epsilon, params.m, r, f.dim())?;
    let delta = fs.deficit.max(0.0);
    let rec = SlackRecord::inequality(
        "thm14_w2_vs_deficit_power",
        w2.value,
        c * delta.powf(b),
        INEQUALITY_TOL + w2.abs_tolerance,
    )
    .with("C", c)
    .with("beta", b)
    .with("deficit", delta)
    .with("r", r)
    .with("M", params.m)
    .with("epsilon", params.epsilon)
    .note("constant is proof-assembled");
    Ok(w2.tag(rec))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpnessRow {
    pub a: f64,
    pub deficit: f64,
    pub w2: f64,
    /// `√δ / W₂`.
    pub ratio: f64,
}

/// Closed-form deficit and W₂ along `f_a = exp(-a|x|²)` normalized.
pub fn sharpness_sweep(a_values: &[f64], n: usize) -> Result<Vec<SharpnessRow>> {
    if n == 0 {
        return Err(Error::UnsupportedDimension(0));
    }
    let nf = n as f64;
    a_values
        .iter()
        .map(|&a| {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::InvalidArgument(format!("sweep needs a > 0, got {a}")));
            }
            let deficit = nf * (a - 0.5 * (2.0 * a).ln_1p());
            let w2 = -nf.sqrt() * (-0.5 * (2.0 * a).ln_1p()).exp_m1();
            Ok(SharpnessRow {
                a,
                deficit,
                w2,
                ratio: deficit.sqrt() / w2,
            })
        })
        .collect()
}

/// `steps` values from `a_max` down to `a_min`, evenly spaced in `log a`.
pub fn log_spaced_decreasing(a_min: f64, a_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 1 && a_min == a_max && a_min > 0.0 && a_min.is_finite() {
        return Ok(vec![a_min]);
    }
    if !(a_min > 0.0 && a_min < a_max && a_max.is_finite()) || steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "need 0 < a_min < a_max and at least two steps (or a_min = a_max with one), got [{a_min}, {a_max}] with {steps}"
        )));
    }
    let (lo, hi) = (a_min.ln(), a_max.ln());
    Ok((0..steps)
        .map(|k| {
            if k == steps - 1 {
                a_min
            } else {
                (hi - (hi - lo) * k as f64 / (steps - 1) as f64).exp()
            }
        })
        .collect())
}

fn require_unit_mass(fs: &FunctionalSet, what: &str) -> Result<()> {
    if (fs.mass - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!("{what} needs unit mass, got {}", fs.mass)));
    }
    Ok(())
}

/// `Ent(f) ≤ W₂ √I(f) - W₂²/2` for unit-mass `f`. The solver's W₂ error
/// is propagated through the right side.
pub fn hwi_check(f: &LogDensity, rule: &QuadratureRule, w2: &W2Estimate) -> Result<SlackRecord> {
    let fs = compute_functionals(f, rule)?;
    require_unit_mass(&fs, "HWI")?;
    let w = w2.value;
    let sqrt_i = fs.fisher.max(0.0).sqrt();
    let spread = (sqrt_i - w).abs() * w2.abs_tolerance;
    let rec = SlackRecord::inequality("hwi", fs.entropy, w * sqrt_i - 0.5 * w * w, INEQUALITY_TOL + spread)
        .with("fisher", fs.fisher)
        .with("w2", w);
    Ok(w2.tag(rec))
}

/// `C̃ (δ^{1/2+α} + δ^{2α})` for `W₂ ≤ C δ^α`.
pub fn entropy_bound_lemma(delta: f64, alpha: f64, c: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1/2], got {alpha}"
        )));
    }
    if !(delta >= 0.0) || !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need delta ≥ 0 and C > 0, got {delta} and {c}"
        )));
    }
    let (ct, _) = lemma_constant(c);
    Ok(ct * (delta.powf(0.5 + alpha) + delta.powf(2.0 * alpha)))
}

/// `Ent(f) ≤ C̄ δ(f) + m|μ|²/2`; for unit mass this is the familiar form.
pub fn verify_cor42(f: &LogDensity, params: &FamilyParams, rule: &QuadratureRule) -> Result<SlackRecord> {
    let fs = compute_functionals(f, rule)?;
    Ok(cor42_record(&fs, params))
}

pub fn cor42_record(fs: &FunctionalSet, params: &FamilyParams) -> SlackRecord {
    let (cb, eta) = c_bar(c_thm11(params.epsilon, params.m));
    let mu_sq = fs.barycenter_norm_sq();
    SlackRecord::inequality(
        "cor42_entropy_bound",
        fs.entropy,
        cb * fs.deficit + 0.5 * fs.mass * mu_sq,
        INEQUALITY_TOL,
    )
    .with("C_bar", cb)
    .with("eta", eta)
    .with("deficit", fs.deficit)
    .with("mu_sq", mu_sq)
}

/// `Ent(f) ≤ C I(f) + (1/2 - C) m|μ|²` with `C = C̄/(2(C̄+1)) < 1/2`.
pub fn verify_improved_lsi(f: &LogDensity, params: &FamilyParams, rule: &QuadratureRule) -> Result<SlackRecord> {
    let fs = compute_functionals(f, rule)?;
    improved_lsi_record(&fs, params)
}

pub fn improved_lsi_record(fs: &FunctionalSet, params: &FamilyParams) -> Result<SlackRecord> {
    let (cb, _) = c_bar(c_thm11(params.epsilon, params.m));
    let c = cb / (2.0 * (cb + 1.0));
    if !(c < 0.5) {
        return Err(Error::InternalConsistency(format!(
            "improved constant {c} is not below 1/2"
        )));
    }
    let mu_sq = fs.barycenter_norm_sq();
    Ok(SlackRecord::inequality(
        "improved_lsi",
        fs.entropy,
        c * fs.fisher + (0.5 - c) * fs.mass * mu_sq,
        INEQUALITY_TOL,
    )
    .with("C_improved", c)
    .with("fisher", fs.fisher)
    .with("mu_sq", mu_sq))
}
