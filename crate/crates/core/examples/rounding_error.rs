//! Single-precision shadow sums: the pairwise order used by the tree keeps
//! the relative error near one unit roundoff, while sequential accumulation
//! grows with `n`.

use binary_sampling::verify::{median, rounding_error_experiment, SINGLE_UNIT_ROUNDOFF};
use binary_sampling::RngStream;

fn main() -> binary_sampling::Result<()> {
    let mut rng = RngStream::new(0);
    println!("{:>8}  {:>16}  {:>16}", "n", "pairwise (u)", "sequential (u)");
    for k in [10, 12, 14, 16, 18, 20] {
        let n = 1usize << k;
        let reports = rounding_error_experiment(n, 20, &mut rng)?;
        let mut pw: Vec<f64> = reports.iter().map(|(p, _)| p.relative_error).collect();
        let mut sq: Vec<f64> = reports.iter().map(|(_, s)| s.relative_error).collect();
        println!(
            "{:>8}  {:>16.3}  {:>16.3}",
            n,
            median(&mut pw) / SINGLE_UNIT_ROUNDOFF,
            median(&mut sq) / SINGLE_UNIT_ROUNDOFF
        );
    }
    Ok(())
}
