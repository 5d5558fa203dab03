//! Weights need not sum to one, and may contain zeros: the tree root is the
//! normalizer, and zero-weight indices are never returned. Scaling every
//! weight by a power of two leaves the sample stream bit-identical.

use binary_sampling::{bs_stream, PairwiseTree, BuildMode, RngStream, WeightTable};

fn main() -> binary_sampling::Result<()> {
    let table = WeightTable::new(vec![3.0, 0.0, 0.0, 12.0, 0.0, 5.0])?;
    let tree = PairwiseTree::build(&table, BuildMode::Sequential);
    println!("total weight (tree root) = {}", tree.total());
    for level in 0..=tree.depth() {
        println!("  level {level}: {:?}", tree.level(level));
    }

    let a = bs_stream(&table, &mut RngStream::new(7), 20);
    let b = bs_stream(&table.scaled(1.0 / 64.0)?, &mut RngStream::new(7), 20);
    println!("samples:        {a:?}");
    println!("scaled by 2^-6: {b:?}");
    assert_eq!(a, b);
    assert!(a.iter().all(|&i| table.weights()[i] > 0.0));
    Ok(())
}
