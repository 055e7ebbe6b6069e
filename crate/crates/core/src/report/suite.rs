//! Runs every check on every corpus density and collects the records.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::SuiteConfig;
use super::spec::DensitySpec;
use crate::density::{check_membership, check_membership_lr, FamilyParams, MembershipReport, Probe};
use crate::error::{Error, Result};
use crate::functionals::{compute_functionals, recenter, FunctionalSet};
use crate::quadrature::{gaussian_rule, MonteCarloSampler, QuadratureRule};
use crate::slack::SlackRecord;
use crate::stability::{
    cor42_record, estimate_w2, hwi_check, improved_lsi_record, thm11_record, verify_thm14, W2Method,
};
use crate::transport::{deficit_lower_bound, eigenvalue_bound_check, poincare_check, TransportMap1D};

/// Test function for the Poincaré check.
pub fn poincare_probe(x: f64) -> f64 {
    x + 0.5 * x.sin()
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipSummary {
    pub is_member: bool,
    pub min_eig_observed: f64,
    pub max_eig_observed: f64,
    pub lr_integral: Option<f64>,
    pub witness_point: Option<Vec<f64>>,
    pub probe_half_width: f64,
    pub probe_points: usize,
}

impl From<&MembershipReport> for MembershipSummary {
    fn from(r: &MembershipReport) -> Self {
        Self {
            is_member: r.is_member,
            min_eig_observed: r.min_eig_observed,
            max_eig_observed: r.max_eig_observed,
            lr_integral: r.lr_integral,
            witness_point: r.witness_point.clone(),
            probe_half_width: r.probe.half_width,
            probe_points: r.probe.points,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub check: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseParams {
    pub epsilon: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub id: String,
    pub density: String,
    pub dim: usize,
    pub params: CaseParams,
    pub membership: Option<MembershipSummary>,
    pub functionals: Option<FunctionalSet>,
    pub records: Vec<SlackRecord>,
    pub skipped: Vec<Skipped>,
    /// Seconds spent on each record, in record order. Kept out of the
    /// serialized report so reruns are byte-identical.
    #[serde(skip)]
    pub timings: Vec<f64>,
    #[serde(skip)]
    pub map: Option<TransportMap1D>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.records.iter().all(SlackRecord::passed)
    }
}

struct Recorder {
    records: Vec<SlackRecord>,
    timings: Vec<f64>,
    clock: Instant,
}

impl Recorder {
    fn new() -> Self {
        Self {
            records: Vec::new(),
            timings: Vec::new(),
            clock: Instant::now(),
        }
    }

    fn push(&mut self, rec: SlackRecord) {
        self.records.push(rec);
        self.timings.push(self.clock.elapsed().as_secs_f64());
        self.clock = Instant::now();
    }

    /// Records a failed check from an error.
    fn fail(&mut self, name: &str, err: &Error) {
        self.push(SlackRecord::inequality(name, f64::NAN, f64::NAN, 0.0).note(err.to_string()));
    }
}

fn w2_method(cfg: &SuiteConfig, dim: usize) -> W2Method {
    if dim == 1 {
        W2Method::Transport {
            window: cfg.window,
            resolution: cfg.resolution,
        }
    } else {
        W2Method::Sinkhorn {
            config: cfg.sinkhorn.config.clone(),
            per_axis: cfg.sinkhorn.grid,
            half_width: cfg.sinkhorn.half_width,
        }
    }
}

/// Runs all checks on one density.
pub fn run_case(cfg: &SuiteConfig, id: &str, spec: &DensitySpec, rule: &QuadratureRule) -> CaseReport {
    let mut rec = Recorder::new();
    let mut skipped = Vec::new();
    let params = cfg.params_for(spec).expect("validated with the config");
    let mut report = CaseReport {
        id: id.to_string(),
        density: spec.text.clone(),
        dim: spec.dim,
        params: CaseParams {
            epsilon: params.epsilon,
            m: params.m,
            r: params.r,
        },
        membership: None,
        functionals: None,
        records: Vec::new(),
        skipped: Vec::new(),
        timings: Vec::new(),
        map: None,
    };
    if let Err(e) = run_checks(cfg, spec, &params, rule, &mut rec, &mut skipped, &mut report) {
        rec.fail("error", &e);
    }
    report.records = rec.records;
    report.timings = rec.timings;
    report.skipped = skipped;
    report
}

fn run_checks(
    cfg: &SuiteConfig,
    spec: &DensitySpec,
    params: &FamilyParams,
    rule: &QuadratureRule,
    rec: &mut Recorder,
    skipped: &mut Vec<Skipped>,
    report: &mut CaseReport,
) -> Result<()> {
    let f = spec.build()?;
    let hessian_params = FamilyParams::new(params.epsilon, params.m)?;
    let membership = check_membership(&f, &hessian_params, &Probe::default())?;
    report.membership = Some((&membership).into());
    if !membership.is_member {
        let floor = -1.0 + params.epsilon;
        let (lhs, rhs) = if membership.min_eig_observed < floor {
            (-membership.min_eig_observed, -floor)
        } else {
            (membership.max_eig_observed, params.m)
        };
        let mut row = SlackRecord::inequality("membership", lhs, rhs, crate::density::MEMBERSHIP_TOL)
            .with("min_eig", membership.min_eig_observed)
            .with("max_eig", membership.max_eig_observed)
            .note(format!("not certified in F({}, {})", params.epsilon, params.m));
        if let Some(w) = &membership.witness_point {
            row = row.note(format!("witness {w:?}"));
        }
        rec.push(row);
        return Ok(());
    }

    let fs = compute_functionals(&f, rule)?;
    report.functionals = Some(fs.clone());
    let hat = recenter(&f, &fs)?;
    let (w2, map) = estimate_w2(&hat, rule, &w2_method(cfg, spec.dim))?;
    rec.push(thm11_record(&fs, params, &w2));

    match &map {
        Some(map) => {
            rec.push(deficit_lower_bound(&hat, map, rule)?);
            let [eig, contraction] = eigenvalue_bound_check(map, params.m)?;
            let contraction_failed = !contraction.passed();
            rec.push(
                eig.with("sup_t_prime", contraction.lhs)
                    .with("contraction_bound", contraction.rhs)
                    .with("contraction_slack", contraction.slack),
            );
            // The contraction bound rides along in the eigenvalue row's
            // context and only gets a row of its own when it fails.
            if contraction_failed {
                rec.push(contraction);
            }
            rec.push(poincare_check(&f, params.epsilon, poincare_probe, rule)?);
        }
        None => {
            for check in ["deficit_lower_bound", "eigenvalue_bound", "poincare"] {
                skipped.push(Skipped {
                    check: check.into(),
                    reason: "needs the one-dimensional transport map".into(),
                });
            }
        }
    }
    rec.push(hwi_check(&hat, rule, &w2)?.note("applied to the recentered normalization"));
    rec.push(cor42_record(&fs, params));
    rec.push(improved_lsi_record(&fs, params)?);

    if let Some(r) = params.r {
        let lr_params = FamilyParams::with_r(params.epsilon, cfg.lr_bound.unwrap_or(params.m), r)?;
        let lr = check_membership_lr(&hat, &lr_params, rule, &Probe::default())?;
        if !lr.is_member {
            skipped.push(Skipped {
                check: "thm14".into(),
                reason: format!("Hessian moment {:?} exceeds {}", lr.lr_integral, lr_params.m),
            });
        } else {
            match verify_thm14(&hat, &lr_params, rule, &w2) {
                Ok(row) => rec.push(row),
                Err(Error::OutOfRegime(delta)) => skipped.push(Skipped {
                    check: "thm14".into(),
                    reason: format!("deficit {delta} exceeds 1"),
                }),
                Err(e) => return Err(e),
            }
        }
    }

    if cfg.mc_samples > 0 {
        let mc = MonteCarloSampler::new(cfg.seed, cfg.mc_samples)?;
        let m = fs.mass;
        let est = mc.estimate(spec.dim, |x| {
            // δ(f) = ∫ (|∇h|²/2 + h) f dγ + m log m.
            let g: f64 = f.grad_h(x).iter().map(|v| v * v).sum();
            (0.5 * g + f.h(x)) * f.value(x)
        })?;
        let value = est.mean + m * m.ln();
        rec.push(
            SlackRecord::equality("deficit_monte_carlo", fs.deficit, value, 4.0 * est.std_error)
                .with("std_error", est.std_error)
                .with("samples", cfg.mc_samples as f64),
        );
    }

    report.map = map;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub cases: usize,
    pub rows: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub constants: crate::stability::ConstantsRecord,
    pub cases: Vec<CaseReport>,
    pub summary: SuiteSummary,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.summary.failed == 0
    }
}

/// Runs the corpus on `cfg.jobs` threads; cases come back in corpus order.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    // Tensor rules grow as order^dim, so only the dimensions in use are built.
    let mut rules: Vec<Option<QuadratureRule>> = vec![None, None, None];
    for spec in &cfg.corpus {
        if rules[spec.dim - 1].is_none() {
            rules[spec.dim - 1] = Some(gaussian_rule(cfg.order, spec.dim)?);
        }
    }
    let width = cfg.corpus.len().to_string().len().max(2);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let cases: Vec<CaseReport> = pool.install(|| {
        cfg.corpus
            .par_iter()
            .enumerate()
            .map(|(i, spec)| {
                let rule = rules[spec.dim - 1].as_ref().expect("built above");
                run_case(cfg, &format!("c{:0width$}", i + 1), spec, rule)
            })
            .collect()
    });
    let rows: usize = cases.iter().map(|c| c.records.len()).sum();
    let passed = cases.iter().flat_map(|c| &c.records).filter(|r| r.passed()).count();
    Ok(SuiteReport {
        config: cfg.clone(),
        constants: crate::stability::constants(&cfg.base_params()?),
        summary: SuiteSummary {
            cases: cases.len(),
            rows,
            passed,
            failed: rows - passed,
        },
        cases,
    })
}
