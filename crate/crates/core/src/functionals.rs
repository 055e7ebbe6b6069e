//! Mass, barycenter, entropy, Fisher information and log-Sobolev deficit.
//!
//! For `f = e^{-h}` and `m = ∫ f dγ`:
//!
//! * `Ent(f) = ∫ f log f dγ - m log m`
//! * `I(f) = ∫ |∇f|²/f dγ = ∫ |∇h|² f dγ`
//! * `δ(f) = I(f)/2 - Ent(f) ≥ 0`
//!
//! The barycenter is that of the probability measure `f dγ / m`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::{LogDensity, Recentered};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::slack::SlackRecord;

/// Tolerance on identities for smooth perturbed families.
pub const IDENTITY_TOL: f64 = 1e-7;

/// Tolerance on positive homogeneity of the deficit.
pub const HOMOGENEITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSet {
    pub mass: f64,
    pub barycenter: Vec<f64>,
    pub entropy: f64,
    pub fisher: f64,
    pub deficit: f64,
}

impl FunctionalSet {
    pub fn barycenter_norm_sq(&self) -> f64 {
        self.barycenter.iter().map(|v| v * v).sum()
    }
}

pub fn compute_functionals(f: &LogDensity, rule: &QuadratureRule) -> Result<FunctionalSet> {
    if rule.dim() != f.dim() {
        return Err(Error::InvalidArgument(format!(
            "rule is {}-dimensional, density is {}-dimensional",
            rule.dim(),
            f.dim()
        )));
    }
    let n = f.dim();
    let mut mass = 0.0;
    let mut first = vec![0.0; n];
    let mut f_log_f = 0.0;
    let mut fisher = 0.0;
    for (x, w) in rule.iter() {
        let h = f.h(x);
        let fx = (-h).exp();
        if h.is_nan() || !fx.is_finite() {
            return Err(Error::Evaluation {
                point: x.to_vec(),
                what: format!("density value e^(-{h})"),
            });
        }
        if fx == 0.0 {
            // 0 log 0 := 0 and the node carries no mass.
            continue;
        }
        let grad = f.grad_h(x);
        let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
        if !grad_sq.is_finite() {
            return Err(Error::Evaluation {
                point: x.to_vec(),
                what: "non-finite gradient".into(),
            });
        }
        let wf = w * fx;
        mass += wf;
        first.iter_mut().zip(x).for_each(|(acc, xi)| *acc += wf * xi);
        f_log_f -= wf * h;
        fisher += wf * grad_sq;
    }
    if !(mass > f64::EPSILON) {
        return Err(Error::DegenerateMass(mass));
    }
    let entropy = f_log_f - mass * mass.ln();
    Ok(FunctionalSet {
        mass,
        barycenter: first.into_iter().map(|v| v / mass).collect(),
        entropy,
        fisher,
        deficit: 0.5 * fisher - entropy,
    })
}

/// Translates `f` to zero barycenter, removes the matching linear tilt and
/// divides by the mass:
/// `h_new(x) = h(x + μ) + μ·x + |μ|²/2 + log m`.
pub fn recenter(f: &LogDensity, fs: &FunctionalSet) -> Result<LogDensity> {
    if fs.barycenter.len() != f.dim() {
        return Err(Error::InvalidArgument("functional set does not match density".into()));
    }
    if !(fs.mass > 0.0) {
        return Err(Error::DegenerateMass(fs.mass));
    }
    let potential = Recentered {
        base: f.potential().clone(),
        mu: fs.barycenter.clone(),
        offset: fs.mass.ln(),
    };
    let mut g = LogDensity::new(format!("recenter({})", f.label()), Arc::new(potential));
    if let Some((lo, hi)) = f.envelope() {
        g = g.with_envelope(lo, hi);
    }
    Ok(g)
}

/// The three identities linking a unit-mass `f` to its recentered version:
/// `δ(f̂) = δ(f)`, `Ent(f̂) = Ent(f) - |μ|²/2`, `I(f̂) = I(f) - |μ|²`.
pub fn verify_recentering_identities(f: &LogDensity, rule: &QuadratureRule) -> Result<[SlackRecord; 3]> {
    let fs = compute_functionals(f, rule)?;
    if (fs.mass - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "recentering identities need unit mass, got {}",
            fs.mass
        )));
    }
    let hat = compute_functionals(&recenter(f, &fs)?, rule)?;
    let mu_sq = fs.barycenter_norm_sq();
    let tag = |r: SlackRecord| r.with("mu_sq", mu_sq).with("mass", fs.mass);
    Ok([
        tag(SlackRecord::equality(
            "recenter_deficit",
            hat.deficit,
            fs.deficit,
            IDENTITY_TOL,
        )),
        tag(SlackRecord::equality(
            "recenter_entropy",
            hat.entropy,
            fs.entropy - 0.5 * mu_sq,
            IDENTITY_TOL,
        )),
        tag(SlackRecord::equality(
            "recenter_fisher",
            hat.fisher,
            fs.fisher - mu_sq,
            IDENTITY_TOL,
        )),
    ])
}

/// `δ(c f) = c δ(f)` for `c > 0`.
pub fn verify_homogeneity(f: &LogDensity, c: f64, rule: &QuadratureRule) -> Result<SlackRecord> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {c}")));
    }
    let base = compute_functionals(f, rule)?;
    let scaled = if c == 1.0 {
        base.clone()
    } else {
        compute_functionals(&f.scaled(c)?, rule)?
    };
    Ok(SlackRecord::equality("homogeneity", scaled.deficit, c * base.deficit, HOMOGENEITY_TOL).with("c", c))
}
