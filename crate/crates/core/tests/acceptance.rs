//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use lsilab::density::{
    check_membership, log_linear, lr_integral, perturbed_quadratic, quadratic_family, FamilyParams, LogDensity, Probe,
};
use lsilab::functionals::{compute_functionals, recenter, verify_homogeneity, verify_recentering_identities};
use lsilab::quadrature::{gaussian_rule, QuadratureRule, DEFICIT_ORDER};
use lsilab::slack::SlackRecord;
use lsilab::stability::{
    beta, c_bar, c_thm11, cor42_record, estimate_w2, hwi_check, improved_lsi_record, sharpness_sweep, thm11_record,
    verify_thm14, W2Estimate, W2Method,
};
use lsilab::transport::{
    brenier_map_1d, default_window, deficit_lower_bound, eigenvalue_bound_check, monge_ampere_residual, w2_from_map,
    CdfTable, DEFAULT_RESOLUTION,
};
use lsilab::wasserstein::{w2_gaussian_rescaled, w2_quantile_1d, Measure1D, DEFAULT_QUANTILE_COUNT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const EPS: f64 = 0.3;
const M: f64 = 3.0;
const CORPUS_SIZE: usize = 200;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Worst slack over records, and how many fail.
fn summarize<'a>(recs: impl IntoIterator<Item = &'a SlackRecord>) -> (f64, usize, usize) {
    let mut worst = f64::INFINITY;
    let (mut n, mut failed) = (0, 0);
    for r in recs {
        worst = worst.min(r.slack);
        n += 1;
        failed += usize::from(!r.passed());
    }
    (worst, n, failed)
}

/// Certified one-dimensional members of F(0.3, 3): plain, tilted and
/// perturbed rescaled Gaussians, some scaled.
fn corpus() -> Vec<LogDensity> {
    let mut rng = ChaCha20Rng::seed_from_u64(20_240_611);
    let mut out = Vec::with_capacity(CORPUS_SIZE);
    while out.len() < CORPUS_SIZE {
        let a: f64 = rng.random_range(-0.32..1.45);
        let f = match out.len() % 4 {
            0 => quadratic_family(a, 1).unwrap(),
            1 => quadratic_family(a, 1)
                .unwrap()
                .tilted(&[rng.random_range(-2.0..2.0)])
                .unwrap(),
            _ => {
                let amp: f64 = rng.random_range(0.0..0.25);
                let freq: f64 = rng.random_range(0.5..2.5);
                let spread = amp * freq * freq;
                if 2.0 * a - spread < -0.68 || 2.0 * a + spread > 2.98 {
                    continue;
                }
                let mut f = perturbed_quadratic(a, amp, freq, 1).unwrap();
                if out.len() % 4 == 3 {
                    f = f.tilted(&[rng.random_range(-2.0..2.0)]).unwrap();
                }
                f
            }
        };
        let f = if rng.random_bool(0.3) {
            f.scaled(rng.random_range(0.2..5.0)).unwrap()
        } else {
            f
        };
        out.push(f);
    }
    out
}

/// Everything the corpus criteria need from one density.
struct CaseRun {
    certified: bool,
    thm11: SlackRecord,
    lower_bound: SlackRecord,
    eigen: [SlackRecord; 2],
    hwi: SlackRecord,
    cor42: SlackRecord,
    improved: SlackRecord,
    quantile_gap: f64,
}

fn run_case(f: &LogDensity, rule: &QuadratureRule, params: &FamilyParams) -> CaseRun {
    let certified = check_membership(f, params, &Probe::default()).unwrap().is_member;
    let fs = compute_functionals(f, rule).unwrap();
    let hat = recenter(f, &fs).unwrap();
    let (w2, map) = estimate_w2(&hat, rule, &W2Method::default_for(1)).unwrap();
    let map = map.expect("one-dimensional path");
    let quantile = w2_quantile_1d(
        Measure1D::Table(map.table()),
        Measure1D::Gaussian { mean: 0.0, std: 1.0 },
        DEFAULT_QUANTILE_COUNT,
    )
    .unwrap();
    CaseRun {
        certified,
        thm11: thm11_record(&fs, params, &w2),
        lower_bound: deficit_lower_bound(&hat, &map, rule).unwrap(),
        eigen: eigenvalue_bound_check(&map, params.m).unwrap(),
        hwi: hwi_check(&hat, rule, &w2).unwrap(),
        cor42: cor42_record(&fs, params),
        improved: improved_lsi_record(&fs, params).unwrap(),
        quantile_gap: (quantile - w2_from_map(&hat, &map, rule).unwrap()).abs(),
    }
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let a = [0.5, 0.1, 0.01, 1e-3, 1e-4];
    // Quoted values, each within one unit of its last digit; the sweep is
    // held to 30-digit evaluations of the closed form.
    let quoted = [1.3373, 1.0791, 1.0082, 1.0008, 1.00008];
    let unit = [1e-4, 1e-4, 1e-4, 1e-4, 1e-5];
    let precise = [
        1.337_336_642_782_683_9,
        1.079_055_862_006_688_4,
        1.008_286_606_529_373_4,
        1.000_832_861_612_311_3,
        1.000_083_328_611_612_9,
    ];
    let rows = sharpness_sweep(&a, 1).unwrap();
    let rule = gaussian_rule(DEFICIT_ORDER, 1).unwrap();
    let mut ok = true;
    for (i, row) in rows.iter().enumerate() {
        ok &= (row.ratio - quoted[i]).abs() <= unit[i];
        ok &= (row.ratio - precise[i]).abs() <= 1e-12;
        // Quadrature oracle for δ.
        let fs = compute_functionals(&quadratic_family(row.a, 1).unwrap(), &rule).unwrap();
        ok &= (fs.deficit - row.deficit).abs() <= 1e-10 * row.deficit.max(1e-6) + 1e-15;
    }
    let last = rows.last().unwrap().ratio;
    let monotone = rows.windows(2).all(|w| w[1].ratio < w[0].ratio);
    let secs = t.elapsed().as_secs_f64();
    let ratios: Vec<String> = rows.iter().map(|r| format!("{:.5}", r.ratio)).collect();
    outcome(
        ok && (last - 1.0).abs() <= 5e-4 && monotone && secs < 1.0,
        format!(
            "ratios [{}], final {:.1e} from 1, monotone {monotone}, {secs:.2} s",
            ratios.join(", "),
            last - 1.0
        ),
    )
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let rule = gaussian_rule(DEFICIT_ORDER, 1).unwrap();
    let (mut e_func, mut e_q, mut e_map) = (0f64, 0f64, 0f64);
    for a in [0.01, 0.1, 0.5, 2.0] {
        let f = quadratic_family(a, 1).unwrap();
        let fs = compute_functionals(&f, &rule).unwrap();
        let ent = 0.5 * (2.0 * a + 1.0).ln() - a / (2.0 * a + 1.0);
        let fisher = 4.0 * a * a / (2.0 * a + 1.0);
        e_func = e_func.max((fs.entropy - ent).abs()).max((fs.fisher - fisher).abs());
        let exact = (1.0 - 1.0 / (2.0 * a + 1.0).sqrt()).abs();
        let w = default_window(&f, &rule).unwrap();
        let table = CdfTable::from_density(&f, w.0, w.1, DEFAULT_RESOLUTION).unwrap().table;
        let q = w2_quantile_1d(
            Measure1D::Table(&table),
            Measure1D::Gaussian { mean: 0.0, std: 1.0 },
            DEFAULT_QUANTILE_COUNT,
        )
        .unwrap();
        e_q = e_q.max((q - exact).abs());
        let m = w2_from_map(&f, &brenier_map_1d(&f, w, DEFAULT_RESOLUTION).unwrap(), &rule).unwrap();
        e_map = e_map.max((m - exact).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        e_func <= 1e-9 && e_q <= 1e-6 && e_map <= 1e-6 && secs < 10.0,
        format!("max errors: Ent/I {e_func:.1e}, quantile {e_q:.1e}, map {e_map:.1e}; {secs:.1} s"),
    )
}

fn criterion_3(runs: &[CaseRun], secs: f64) -> Outcome {
    let certified = runs.iter().filter(|r| r.certified).count();
    let (worst, n, failed) = summarize(runs.iter().map(|r| &r.thm11));
    outcome(
        certified == CORPUS_SIZE && failed == 0 && worst >= -1e-7 && secs < 120.0,
        format!("{certified}/{CORPUS_SIZE} certified, {n} checks, worst slack {worst:.3e}, {secs:.1} s for the corpus"),
    )
}

fn criterion_4(runs: &[CaseRun]) -> Outcome {
    let (worst, n, failed) = summarize(runs.iter().map(|r| &r.lower_bound));
    outcome(
        failed == 0 && worst >= -1e-7,
        format!("{n} densities, worst slack {worst:.3e}"),
    )
}

fn criterion_5(rule: &QuadratureRule) -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut worst_id = 0f64;
    let mut worst_hom = 0f64;
    for k in 0..50 {
        let a: f64 = rng.random_range(-0.3..1.4);
        let b: f64 = rng.random_range(-2.5..2.5);
        let base = if k % 2 == 0 {
            quadratic_family(a, 1).unwrap()
        } else {
            perturbed_quadratic(a.clamp(0.0, 1.0), 0.05, 1.5, 1).unwrap()
        };
        let f = base.tilted(&[b]).unwrap();
        for r in verify_recentering_identities(&f, rule).unwrap() {
            worst_id = worst_id.max(r.lhs);
        }
        for c in [0.5, 2.0, 10.0] {
            worst_hom = worst_hom.max(verify_homogeneity(&f, c, rule).unwrap().lhs);
        }
    }
    outcome(
        worst_id <= 1e-7 && worst_hom <= 1e-8,
        format!("50 tilted densities: identities {worst_id:.1e}, homogeneity {worst_hom:.1e}"),
    )
}

fn criterion_6(runs: &[CaseRun]) -> Outcome {
    let (w_eig, n, f_eig) = summarize(runs.iter().map(|r| &r.eigen[0]));
    let (w_con, _, f_con) = summarize(runs.iter().map(|r| &r.eigen[1]));
    outcome(
        f_eig + f_con == 0 && w_eig >= -1e-8 && w_con >= -1e-8,
        format!("{n} maps: eigenvalue slack {w_eig:.3e}, contraction slack {w_con:.3e}"),
    )
}

fn criterion_7(rule: &QuadratureRule) -> Outcome {
    let mut worst_analytic = 0f64;
    let analytic: Vec<LogDensity> = [-0.3, 0.0, 0.1, 0.5, 1.4]
        .iter()
        .map(|&a| quadratic_family(a, 1).unwrap())
        .chain([-1.0, 1.0, 2.0].iter().map(|&b| log_linear(&[b]).unwrap()))
        .collect();
    for f in &analytic {
        let map = brenier_map_1d(f, default_window(f, rule).unwrap(), DEFAULT_RESOLUTION).unwrap();
        worst_analytic = worst_analytic.max(monge_ampere_residual(f, &map).unwrap());
    }
    let mut min_order = f64::INFINITY;
    for (a, amp, freq) in [(0.3, 0.05, 2.0), (0.5, 0.2, 1.5), (-0.2, 0.1, 1.0), (1.0, 0.1, 2.2)] {
        let f = perturbed_quadratic(a, amp, freq, 1).unwrap();
        let w = default_window(&f, rule).unwrap();
        let res: Vec<f64> = [1024, 2048, 4096]
            .iter()
            .map(|&n| monge_ampere_residual(&f, &brenier_map_1d(&f, w, n).unwrap()).unwrap())
            .collect();
        for p in res.windows(2) {
            min_order = min_order.min((p[0] / p[1]).log2());
        }
    }
    outcome(
        worst_analytic <= 1e-6 && min_order >= 1.5,
        format!("analytic residual {worst_analytic:.2e}, perturbed refinement order {min_order:.2}"),
    )
}

fn criterion_8(runs: &[CaseRun], rule: &QuadratureRule) -> Outcome {
    let (worst, n, failed) = summarize(runs.iter().map(|r| &r.hwi));
    let mut worst_eq = 0f64;
    for b in [0.5, 1.0, 2.0, -0.5, -1.0, -2.0] {
        let f = log_linear(&[b]).unwrap();
        let (w2, _) = estimate_w2(&f, rule, &W2Method::default_for(1)).unwrap();
        let r = hwi_check(&f, rule, &w2).unwrap();
        worst_eq = worst_eq.max((r.rhs - r.lhs).abs());
    }
    outcome(
        failed == 0 && worst_eq <= 1e-9,
        format!("{n} unit-mass densities, worst slack {worst:.3e}; log-linear gap {worst_eq:.1e}"),
    )
}

fn criterion_9(runs: &[CaseRun], rule: &QuadratureRule, params: &FamilyParams) -> Outcome {
    let (w_cor, n, f_cor) = summarize(runs.iter().map(|r| &r.cor42));
    let (w_imp, _, f_imp) = summarize(runs.iter().map(|r| &r.improved));
    let (cb, eta) = c_bar(c_thm11(EPS, M));
    let c_improved = cb / (2.0 * (cb + 1.0));
    let mut worst_eq = 0f64;
    for (b, c) in [(0.5, 1.0), (1.0, 1.0), (2.0, 1.0), (-1.5, 3.0), (1.0, 0.25)] {
        let f = log_linear(&[b]).unwrap().scaled(c).unwrap();
        let r = cor42_record(&compute_functionals(&f, rule).unwrap(), params);
        worst_eq = worst_eq.max((r.rhs - r.lhs).abs());
    }
    outcome(
        f_cor + f_imp == 0 && c_improved < 0.5 && worst_eq <= 1e-9,
        format!(
            "{n} densities: entropy bound slack {w_cor:.3e}, improved bound slack {w_imp:.3e}; C_bar {cb:.6} (eta {eta:.6}), C_improved {c_improved:.6}; log-linear gap {worst_eq:.1e}"
        ),
    )
}

fn criterion_10(two_d: &[(f64, W2Estimate)]) -> Outcome {
    let mut worst1 = f64::INFINITY;
    let mut count = 0;
    let rule1 = gaussian_rule(DEFICIT_ORDER, 1).unwrap();
    for a in [-0.2, 0.02, 0.1, 0.3, 0.5, 1.0] {
        let f = quadratic_family(a, 1).unwrap();
        let eps = (1.0 + 2.0 * a).min(1.0);
        let params = FamilyParams::with_r(eps, lr_integral(&f, 2.0, &rule1).unwrap(), 2.0).unwrap();
        let w2 = W2Estimate::exact(
            w2_from_map(
                &f,
                &brenier_map_1d(&f, default_window(&f, &rule1).unwrap(), DEFAULT_RESOLUTION).unwrap(),
                &rule1,
            )
            .unwrap(),
        );
        let r = verify_thm14(&f, &params, &rule1, &w2).unwrap();
        worst1 = worst1.min(r.slack);
        count += 1;
    }
    let rule2 = gaussian_rule(DEFICIT_ORDER, 2).unwrap();
    let mut worst2 = f64::INFINITY;
    let mut pass2 = true;
    for (a, w2) in two_d {
        let f = quadratic_family(*a, 2).unwrap();
        let eps = (1.0 + 2.0 * a).min(1.0);
        let params = FamilyParams::with_r(eps, lr_integral(&f, 2.0, &rule2).unwrap(), 2.0).unwrap();
        let r = verify_thm14(&f, &params, &rule2, w2).unwrap();
        // Slack must clear the 2% solver tolerance carried by the estimate.
        pass2 &= r.slack >= -w2.abs_tolerance - 1e-7;
        worst2 = worst2.min(r.slack);
        count += 1;
    }
    let b = beta(2.0).unwrap();
    let arithmetic = (b - 1.0 / 6.0).abs() < 1e-15 && beta(3.0).unwrap() > b;
    outcome(
        worst1 >= -1e-7 && pass2 && arithmetic,
        format!(
            "{count} Gaussian cases, beta {b:.6}; worst slack n=1 {worst1:.3e}, n=2 {worst2:.3e}; n > 3 is covered by property tests only"
        ),
    )
}

fn criterion_11(two_d: &[(f64, W2Estimate)], runs: &[CaseRun]) -> Outcome {
    let mut worst_rel = 0f64;
    for (a, w2) in two_d {
        let exact = w2_gaussian_rescaled(*a, 2).unwrap();
        worst_rel = worst_rel.max((w2.value - exact).abs() / exact);
    }
    let worst_1d = runs.iter().map(|r| r.quantile_gap).fold(0.0, f64::max);
    outcome(
        worst_rel <= 0.02 && worst_1d <= 1e-8,
        format!(
            "Sinkhorn 64x64 relative error {worst_rel:.2e}; quantile vs map {worst_1d:.1e} over {} densities",
            runs.len()
        ),
    )
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.conf");
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_lsilab"))
        .args(["verify", config, "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    let secs = t.elapsed().as_secs_f64();
    let rows = std::fs::read_to_string(dir.path().join("report.csv"))
        .map(|s| s.lines().count().saturating_sub(1))
        .unwrap_or(0);
    outcome(
        out.status.code() == Some(0) && secs < 300.0,
        format!("exit {:?}, {rows} rows, {secs:.1} s", out.status.code()),
    )
}

fn main() -> ExitCode {
    let rule = gaussian_rule(DEFICIT_ORDER, 1).unwrap();
    let params = FamilyParams::new(EPS, M).unwrap();

    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "sharpness sweep", criterion_1()));
    results.push((2, "closed forms vs numerics", criterion_2()));

    let t = Instant::now();
    let runs: Vec<CaseRun> = corpus().iter().map(|f| run_case(f, &rule, &params)).collect();
    let corpus_secs = t.elapsed().as_secs_f64();
    let two_d: Vec<(f64, W2Estimate)> = [0.5, 0.1]
        .iter()
        .map(|&a| {
            let (w2, _) = estimate_w2(
                &quadratic_family(a, 2).unwrap(),
                &gaussian_rule(DEFICIT_ORDER, 2).unwrap(),
                &W2Method::default_for(2),
            )
            .unwrap();
            (a, w2)
        })
        .collect();

    results.push((3, "W2 vs square-root deficit", criterion_3(&runs, corpus_secs)));
    results.push((4, "deficit lower bound", criterion_4(&runs)));
    results.push((5, "recentering and homogeneity", criterion_5(&rule)));
    results.push((6, "eigenvalue and contraction bounds", criterion_6(&runs)));
    results.push((7, "Monge-Ampere residual", criterion_7(&rule)));
    results.push((8, "HWI", criterion_8(&runs, &rule)));
    results.push((9, "entropy bounds", criterion_9(&runs, &rule, &params)));
    results.push((10, "L^r estimate", criterion_10(&two_d)));
    results.push((11, "solver cross-validation", criterion_11(&two_d, &runs)));
    results.push((12, "default suite", criterion_12()));

    let mut all = true;
    for (k, name, o) in &results {
        all &= o.pass;
        println!(
            "criterion {k:>2} {} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
