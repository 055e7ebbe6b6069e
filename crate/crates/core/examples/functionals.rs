//! Mass, barycenter, entropy, Fisher information and deficit of a few
//! densities, compared with closed forms where they exist.

use lsilab::density::{log_linear, perturbed_quadratic, quadratic_family};
use lsilab::functionals::{compute_functionals, recenter};
use lsilab::quadrature::{gaussian_rule, DEFICIT_ORDER};

fn main() -> lsilab::Result<()> {
    let rule = gaussian_rule(DEFICIT_ORDER, 1)?;
    let densities = [
        quadratic_family(0.5, 1)?,
        quadratic_family(0.01, 1)?,
        log_linear(&[1.5])?,
        perturbed_quadratic(0.3, 0.05, 2.0, 1)?.tilted(&[0.7])?,
    ];
    println!(
        "{:<44} {:>10} {:>10} {:>10} {:>12}",
        "density", "mass", "Ent", "I", "deficit"
    );
    for f in &densities {
        let fs = compute_functionals(f, &rule)?;
        println!(
            "{:<44} {:>10.6} {:>10.6} {:>10.6} {:>12.4e}",
            f.label(),
            fs.mass,
            fs.entropy,
            fs.fisher,
            fs.deficit
        );
        if let Some(cf) = f.closed_form() {
            println!(
                "{:<44} {:>10.6} {:>10.6} {:>10.6}",
                "  closed form", cf.mass, cf.entropy, cf.fisher
            );
        }
        let hat = compute_functionals(&recenter(f, &fs)?, &rule)?;
        println!(
            "{:<44} {:>10.6} {:>10.6} {:>10.6} {:>12.4e}  barycenter {:.1e}",
            "  recentered", hat.mass, hat.entropy, hat.fisher, hat.deficit, hat.barycenter[0]
        );
    }
    Ok(())
}
