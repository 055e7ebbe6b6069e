//! One-dimensional W₂ three ways: closed form, quantile coupling of the
//! tabulated CDF, and the transport map.

use lsilab::density::quadratic_family;
use lsilab::quadrature::{gaussian_rule, DEFICIT_ORDER};
use lsilab::transport::{brenier_map_1d, default_window, w2_from_map, CdfTable, DEFAULT_RESOLUTION};
use lsilab::wasserstein::{w2_gaussian_rescaled, w2_quantile_1d, Measure1D, DEFAULT_QUANTILE_COUNT};

fn main() -> lsilab::Result<()> {
    let rule = gaussian_rule(DEFICIT_ORDER, 1)?;
    let standard = Measure1D::Gaussian { mean: 0.0, std: 1.0 };
    println!("{:>6} {:>14} {:>10} {:>10}", "a", "closed form", "quantile", "map");
    for a in [0.01, 0.1, 0.5, 2.0] {
        let f = quadratic_family(a, 1)?;
        let window = default_window(&f, &rule)?;
        let table = CdfTable::from_density(&f, window.0, window.1, DEFAULT_RESOLUTION)?.table;
        let exact = w2_gaussian_rescaled(a, 1)?;
        let quantile = w2_quantile_1d(Measure1D::Table(&table), standard, DEFAULT_QUANTILE_COUNT)?;
        let map = w2_from_map(&f, &brenier_map_1d(&f, window, DEFAULT_RESOLUTION)?, &rule)?;
        println!(
            "{a:>6} {exact:>14.10} {:>10.1e} {:>10.1e}",
            (quantile - exact).abs(),
            (map - exact).abs()
        );
    }
    Ok(())
}
