//! Runs the bundled verification corpus and prints one line per check.

use lsilab::report::{run_suite, SuiteConfig};

fn main() -> lsilab::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.conf").into());
    let report = run_suite(&SuiteConfig::load(path.as_ref())?)?;
    for case in &report.cases {
        println!("{} {}", case.id, case.density);
        for r in &case.records {
            println!("    {:<28} slack {:>12.4e}  {}", r.name, r.slack, r.verdict.as_str());
        }
    }
    let s = &report.summary;
    println!("{} rows, {} passed, {} failed", s.rows, s.passed, s.failed);
    Ok(())
}
