//! Gauss–Hermite rules integrate polynomials of degree < 2·order exactly
//! against the standard Gaussian; here, the first even moments.

use lsilab::quadrature::{gaussian_rule, hermite_rule};

fn main() -> lsilab::Result<()> {
    let rule = hermite_rule(16)?;
    let mut double_factorial = 1.0;
    for k in (0..=20).step_by(2) {
        if k > 0 {
            double_factorial *= (k - 1) as f64;
        }
        let got = rule.integrate(|x| x[0].powi(k))?;
        println!("E[x^{k:<2}] = {got:>16.6} (exact {double_factorial:.0})");
    }
    let plane = gaussian_rule(24, 2)?;
    let radial = plane.integrate(|x| (x[0] * x[0] + x[1] * x[1]).powi(2))?;
    println!("2D tensor rule, {} nodes: E|x|^4 = {radial:.12} (exact 8)", plane.len());
    Ok(())
}
