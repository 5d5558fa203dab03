//! Building the tree with several workers gives the same bytes as the
//! sequential build, and one shared tree can serve many threads, each with
//! its own random stream.

use std::sync::Arc;
use std::time::Instant;

use binary_sampling::distributions;
use binary_sampling::{BsSampler, BuildMode, PairwiseTree, RngStream, Sampler};

fn main() -> binary_sampling::Result<()> {
    let mut rng = RngStream::new(5);
    let table = distributions::random((1 << 20) - 1, &mut rng);

    let start = Instant::now();
    let seq = PairwiseTree::build(&table, BuildMode::Sequential);
    let t_seq = start.elapsed();
    let start = Instant::now();
    let par = PairwiseTree::build(&table, BuildMode::Parallel);
    let t_par = start.elapsed();
    let same = seq.as_slice().iter().zip(par.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
    println!("N = 2^20 - 1: sequential {t_seq:.2?}, parallel {t_par:.2?}, identical: {same}");

    let tree = Arc::new(par);
    let handles: Vec<_> = (0..4)
        .map(|k| {
            let tree = Arc::clone(&tree);
            std::thread::spawn(move || {
                let mut s = BsSampler::from_shared(tree, RngStream::with_stream(5, k));
                (0..5).map(|_| s.sample()).collect::<Vec<_>>()
            })
        })
        .collect();
    for (k, h) in handles.into_iter().enumerate() {
        println!("  stream {k}: {:?}", h.join().unwrap());
    }
    Ok(())
}
