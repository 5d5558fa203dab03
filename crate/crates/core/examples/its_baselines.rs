//! The inverse-transform baselines and their comparison counts. The linear
//! scans cost `1 + μ` (forward) and `N + 1 - μ` (backward) comparisons on
//! average; the inorder search tree costs at most `⌈log₂(2N + 1)⌉`.

use binary_sampling::distributions::{self, mean_index};
use binary_sampling::{
    BsitsSampler, CumulativeTable, InorderCdfTree, NaiveItsSampler, RngStream, Sampler, ScanDirection,
};

fn main() -> binary_sampling::Result<()> {
    let n = 1000;
    let draws = 100_000;
    for (name, table) in [
        ("zipf s=3", distributions::zipf(n, 3.0)?),
        ("binomial 0.3", distributions::binomial(n, 0.3)?),
        ("reversed zipf s=3", distributions::reversed_zipf(n, 3.0)?),
    ] {
        let mu = mean_index(&table);
        let cum = CumulativeTable::build(&table);
        let mut fwd = NaiveItsSampler::new(cum.clone(), ScanDirection::Forward, RngStream::new(1));
        let mut bwd = NaiveItsSampler::new(cum, ScanDirection::Backward, RngStream::new(2));
        let mut bst = BsitsSampler::new(InorderCdfTree::build(&table), RngStream::new(3));
        for _ in 0..draws {
            fwd.sample();
            bwd.sample();
            bst.sample();
        }
        println!("{name} (N = {n}, mu = {mu:.2})");
        println!("  forward scan   {:8.2} comparisons (predicted {:.2})", fwd.mean_comparisons(), 1.0 + mu);
        println!("  backward scan  {:8.2} comparisons (predicted {:.2})", bwd.mean_comparisons(), n as f64 + 1.0 - mu);
        println!(
            "  search tree    {:8.2} comparisons (max seen {}, bound {})",
            bst.mean_comparisons(),
            bst.max_comparisons_seen(),
            bst.tree().max_comparisons()
        );
    }
    Ok(())
}
