//! Command implementations and report files.
//!
//! `report.csv` has one row per check with columns
//! `case,density,check,lhs,rhs,slack,tolerance,verdict`; `timings.csv`
//! has `case,check,seconds`; `report.json` holds the configuration, the
//! constants, and every case with its functionals, membership sample,
//! records and skipped checks. Floats in CSV carry 17 significant digits;
//! JSON uses the shortest representation that round-trips.

pub mod config;
pub mod spec;
pub mod suite;

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::SuiteConfig;
pub use spec::DensitySpec;
pub use suite::{run_suite, CaseReport, SuiteReport};

use crate::error::{Error, Result};
use crate::functionals::{compute_functionals, FunctionalSet};
use crate::quadrature::gaussian_rule;
use crate::stability::{log_spaced_decreasing, sharpness_sweep, SharpnessRow};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "LSILAB_OUT";
pub const DEFAULT_OUT_DIR: &str = "lsilab-out";

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), PathBuf::from)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

pub fn write_report_csv<W: Write>(report: &SuiteReport, mut out: W) -> Result<()> {
    writeln!(out, "case,density,check,lhs,rhs,slack,tolerance,verdict")?;
    for case in &report.cases {
        for r in &case.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                case.id,
                quoted(&case.density),
                r.name,
                num(r.lhs),
                num(r.rhs),
                num(r.slack),
                num(r.tolerance),
                r.verdict.as_str()
            )?;
        }
    }
    Ok(())
}

pub fn write_timings_csv<W: Write>(report: &SuiteReport, mut out: W) -> Result<()> {
    writeln!(out, "case,check,seconds")?;
    for case in &report.cases {
        for (r, t) in case.records.iter().zip(&case.timings) {
            writeln!(out, "{},{},{t:.6}", case.id, r.name)?;
        }
    }
    Ok(())
}

pub fn write_sharpness_csv<W: Write>(rows: &[SharpnessRow], mut out: W) -> Result<()> {
    writeln!(out, "a,deficit,w2,ratio")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", num(r.a), num(r.deficit), num(r.w2), num(r.ratio))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug)]
pub struct VerifyOutcome {
    pub report: SuiteReport,
    pub files: Vec<PathBuf>,
}

/// Loads a configuration, runs the suite and writes `report.csv`,
/// `report.json`, `timings.csv` and, when asked for, `maps/<case>.csv`.
pub fn cmd_verify(config: &Path, jobs: Option<usize>, out_dir: &Path) -> Result<VerifyOutcome> {
    let mut cfg = SuiteConfig::load(config)?;
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::InvalidArgument("--jobs must be at least 1".into()));
        }
        cfg.jobs = j;
    }
    let report = run_suite(&cfg)?;
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();

    let csv = out_dir.join("report.csv");
    let mut w = create(&csv)?;
    write_report_csv(&report, &mut w)?;
    w.flush()?;
    files.push(csv);

    let json = out_dir.join("report.json");
    write_json(&report, &json)?;
    files.push(json);

    let timings = out_dir.join("timings.csv");
    let mut w = create(&timings)?;
    write_timings_csv(&report, &mut w)?;
    w.flush()?;
    files.push(timings);

    if cfg.dump_maps {
        for case in &report.cases {
            if let Some(map) = &case.map {
                let path = out_dir.join("maps").join(format!("{}.csv", case.id));
                let mut w = create(&path)?;
                map.write_csv(&mut w)?;
                w.flush()?;
                files.push(path);
            }
        }
    }
    Ok(VerifyOutcome { report, files })
}

#[derive(Debug, Serialize)]
struct FunctionalsDoc<'a> {
    density: &'a str,
    order: usize,
    functionals: &'a FunctionalSet,
}

/// Functionals of one density: the printable summary and the path of
/// `functionals.json`.
pub fn cmd_functionals(spec: &str, order: usize, out_dir: &Path) -> Result<(FunctionalSet, String, PathBuf)> {
    let spec = DensitySpec::parse(spec)?;
    let f = spec.build()?;
    let fs = compute_functionals(&f, &gaussian_rule(order, spec.dim)?)?;
    let mut text = String::new();
    let bary: Vec<String> = fs.barycenter.iter().map(|v| format!("{v:.12}")).collect();
    let _ = writeln!(text, "density     {}", spec.text);
    let _ = writeln!(text, "order       {order}");
    let _ = writeln!(text, "mass        {:.12}", fs.mass);
    let _ = writeln!(text, "barycenter  ({})", bary.join(", "));
    let _ = writeln!(text, "entropy     {:.12}", fs.entropy);
    let _ = writeln!(text, "fisher      {:.12}", fs.fisher);
    let _ = writeln!(text, "deficit     {:.12}", fs.deficit);
    let path = out_dir.join("functionals.json");
    write_json(
        &FunctionalsDoc {
            density: &spec.text,
            order,
            functionals: &fs,
        },
        &path,
    )?;
    Ok((fs, text, path))
}

/// Writes the closed-form sharpness sweep to `out`.
pub fn cmd_sharpness(a_min: f64, a_max: f64, steps: usize, dim: usize, out: &Path) -> Result<Vec<SharpnessRow>> {
    let a = log_spaced_decreasing(a_min, a_max, steps)?;
    let rows = sharpness_sweep(&a, dim)?;
    let mut w = create(out)?;
    write_sharpness_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn functionals_command_examples() {
        let dir = tempfile::tempdir().unwrap();
        let (fs, text, path) = cmd_functionals("family=quadratic a=0.5 dim=1", 64, dir.path()).unwrap();
        assert!((fs.deficit - 0.153_426).abs() < 1e-6);
        assert!(text.contains("deficit     0.1534264097"), "{text}");
        let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(doc["functionals"]["deficit"].as_f64(), Some(fs.deficit));

        let (fs, _, _) = cmd_functionals("family=loglinear b=0 dim=1", 64, dir.path()).unwrap();
        assert!((fs.mass - 1.0).abs() < 1e-14);
        assert!(fs.entropy.abs() < 1e-14 && fs.fisher.abs() < 1e-14 && fs.barycenter[0].abs() < 1e-14);

        let (fs, _, _) = cmd_functionals("family=quadratic a=0 dim=2", 64, dir.path()).unwrap();
        assert!(fs.deficit.abs() < 1e-14);
        assert_eq!(fs.barycenter.len(), 2);
        assert!(fs.barycenter.iter().all(|b| b.abs() < 1e-14));

        assert!(matches!(
            cmd_functionals("family=quadratic a=", 64, dir.path()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn sharpness_command_examples() {
        let dir = tempfile::tempdir().unwrap();
        let rows = cmd_sharpness(1e-4, 0.5, 20, 1, &dir.path().join("s1.csv")).unwrap();
        assert_eq!(rows.len(), 20);
        assert!((rows[19].ratio - 1.0).abs() <= 5e-4);
        let rows3 = cmd_sharpness(1e-4, 0.5, 20, 3, &dir.path().join("s3.csv")).unwrap();
        for (a, b) in rows.iter().zip(&rows3) {
            assert!((a.ratio - b.ratio).abs() <= 1e-12);
        }
        let single = cmd_sharpness(0.5, 0.5, 1, 1, &dir.path().join("one.csv")).unwrap();
        assert_eq!(single.len(), 1);
        assert!((single[0].ratio - 1.3373).abs() < 1e-4);
        let text = fs::read_to_string(dir.path().join("one.csv")).unwrap();
        assert_eq!(text.lines().next(), Some("a,deficit,w2,ratio"));
        assert!(cmd_sharpness(0.5, 0.1, 5, 1, &dir.path().join("bad.csv")).is_err());
    }
}
