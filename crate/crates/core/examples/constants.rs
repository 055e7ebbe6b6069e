//! Stability constants for a few (ε, M) pairs, and the W₂ versus
//! square-root-deficit check on a single density.

use lsilab::density::{perturbed_quadratic, FamilyParams};
use lsilab::quadrature::{gaussian_rule, DEFICIT_ORDER};
use lsilab::stability::{constants, verify_thm11, W2Method};

fn main() -> lsilab::Result<()> {
    for (eps, m) in [(0.5, 2.0), (0.3, 3.0), (1.0, 1.0), (0.1, 10.0)] {
        let c = constants(&FamilyParams::new(eps, m)?);
        println!(
            "eps {eps:<4} M {m:<4}  C {:.6}  C_M {:.6}  C_bar {:.6}  C_improved {:.6}  eta {:.6}",
            c.c_thm11, c.c_m, c.c_bar, c.c_improved, c.eta_opt
        );
    }
    let rule = gaussian_rule(DEFICIT_ORDER, 1)?;
    let f = perturbed_quadratic(0.3, 0.05, 2.0, 1)?.tilted(&[0.4])?.scaled(2.0)?;
    let params = FamilyParams::new(0.5, 2.0)?;
    let rec = verify_thm11(&f, &params, &rule, &W2Method::default_for(1))?;
    println!(
        "{}: W2 {:.6e} <= {:.6e} (slack {:.3e})",
        rec.name, rec.lhs, rec.rhs, rec.slack
    );
    Ok(())
}
