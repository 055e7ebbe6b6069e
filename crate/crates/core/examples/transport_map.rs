//! Monotone transport map of a perturbed Gaussian onto the standard
//! Gaussian: residuals, eigenvalue bounds and the deficit lower bound.
//! Pass a path to also dump the map as CSV.

use lsilab::density::perturbed_quadratic;
use lsilab::quadrature::{gaussian_rule, DEFICIT_ORDER};
use lsilab::transport::{
    brenier_map_1d, default_window, deficit_lower_bound, eigenvalue_bound_check, monge_ampere_residual, w2_from_map,
    DEFAULT_RESOLUTION,
};

fn main() -> lsilab::Result<()> {
    let rule = gaussian_rule(DEFICIT_ORDER, 1)?;
    let f = perturbed_quadratic(0.5, 0.2, 1.5, 1)?;
    let window = default_window(&f, &rule)?;
    for resolution in [512, 1024, 2048, DEFAULT_RESOLUTION] {
        let map = brenier_map_1d(&f, window, resolution)?;
        println!(
            "resolution {resolution:>5}: Monge–Ampère residual {:.3e}, W2 {:.12}",
            monge_ampere_residual(&f, &map)?,
            w2_from_map(&f, &map, &rule)?
        );
    }
    let map = brenier_map_1d(&f, window, DEFAULT_RESOLUTION)?;
    for rec in eigenvalue_bound_check(&map, 2.0)? {
        println!("{:<20} {:.6} <= {:.6}", rec.name, rec.lhs, rec.rhs);
    }
    let lb = deficit_lower_bound(&f, &map, &rule)?;
    println!("{:<20} {:.6e} <= {:.6e}", lb.name, lb.lhs, lb.rhs);
    for x in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        println!(
            "T({x:>4}) = {:>9.6}   lambda = {:>9.6}",
            map.transport(x),
            map.eigenvalue(x)
        );
    }
    if let Some(path) = std::env::args().nth(1) {
        map.write_csv(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
        println!("wrote {path}");
    }
    Ok(())
}
