//! Draw a stream of samples from a small weight table and compare the
//! empirical frequencies with the target.

use binary_sampling::{BsSampler, RngStream, Sampler, WeightTable};

fn main() -> binary_sampling::Result<()> {
    let table = WeightTable::new(vec![0.1, 0.2, 0.3, 0.4])?;
    let mut sampler = BsSampler::new(&table, RngStream::new(42));

    // The first draw came from the backward pass that built the tree.
    println!("first sample (backward pass): {:?}", sampler.first_sample());

    let draws = 100_000;
    let mut counts = vec![0u64; table.len()];
    for _ in 0..draws {
        counts[sampler.sample()] += 1;
    }
    println!("tree depth d = {}, random bits per later draw = d", sampler.tree().depth());
    for (i, c) in counts.iter().enumerate() {
        println!("  {i}: target {:.3}  observed {:.3}", table.probability(i), *c as f64 / draws as f64);
    }
    Ok(())
}
