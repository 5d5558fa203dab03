//! Sampling multi-indices from a truncated support, with a certified bound
//! on the total variation distance to the untruncated target.

use binary_sampling::{truncated_sampler, RngStream, Shape, Support};

fn main() -> binary_sampling::Result<()> {
    // p̃(m) = 2^-(m0 + m1 + 2) on a 4 x 4 grid; the mass beyond the grid
    // (over all of N²) is 1 - (15/16)² = 31/256.
    let shape = Shape::new(vec![4, 4])?;
    let weight = |m: &[usize]| 0.5f64.powi((m[0] + m[1] + 2) as i32);
    let tail = 31.0 / 256.0;
    let (mut sampler, report) =
        truncated_sampler(&shape, &Support::All, weight, Some(tail), RngStream::new(11))?;
    println!("kept mass L~ = {}", report.kept_mass);
    println!("TV bound 2T/L~ = {:.5}", report.tv_bound.unwrap());
    println!("exact TV 2T/(L~+T) = {:.5}", report.tv_exact().unwrap());
    for _ in 0..5 {
        println!("  {:?}", sampler.sample_multi());
    }

    // An explicit support: only the diagonal.
    let diagonal = Support::Explicit((0..4).map(|k| vec![k, k]).collect());
    let (mut diag, _) = truncated_sampler(&shape, &diagonal, weight, None, RngStream::new(12))?;
    let draws: Vec<Vec<usize>> = (0..5).map(|_| diag.sample_multi()).collect();
    println!("diagonal support: {draws:?}");
    Ok(())
}
