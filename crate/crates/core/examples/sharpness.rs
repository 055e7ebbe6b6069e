//! The rescaled Gaussians f_a = (2a+1)^{n/2} e^{-a|x|²} make the ratio
//! W₂²/δ tend to 1 as a → 0, so the square-root exponent is optimal.

use lsilab::stability::{log_spaced_decreasing, sharpness_sweep};

fn main() -> lsilab::Result<()> {
    let a = log_spaced_decreasing(1e-4, 0.5, 9)?;
    println!("{:>10} {:>14} {:>14} {:>10}", "a", "deficit", "w2", "ratio");
    for row in sharpness_sweep(&a, 1)? {
        println!(
            "{:>10.3e} {:>14.6e} {:>14.6e} {:>10.6}",
            row.a, row.deficit, row.w2, row.ratio
        );
    }
    Ok(())
}
