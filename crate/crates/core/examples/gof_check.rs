//! Chi-square goodness-of-fit of each sampler against its target, plus a
//! deliberately broken sampler that the test rejects.

use binary_sampling::verify::{gof_test, ConstantSampler};
use binary_sampling::distributions::NamedDistribution;
use binary_sampling::{
    BsSampler, BsitsSampler, CumulativeTable, InorderCdfTree, NaiveItsSampler, RngStream, Sampler, ScanDirection,
};

fn main() -> binary_sampling::Result<()> {
    let table = "zipf:3".parse::<NamedDistribution>()?.table(100)?;
    let count = 100_000;
    let samplers: Vec<(&str, Box<dyn Sampler>)> = vec![
        ("bs", Box::new(BsSampler::new(&table, RngStream::new(1)))),
        ("its forward", Box::new(NaiveItsSampler::new(CumulativeTable::build(&table), ScanDirection::Forward, RngStream::new(2)))),
        ("its backward", Box::new(NaiveItsSampler::new(CumulativeTable::build(&table), ScanDirection::Backward, RngStream::new(3)))),
        ("bsits", Box::new(BsitsSampler::new(InorderCdfTree::build(&table), RngStream::new(4)))),
        ("always zero", Box::new(ConstantSampler(0))),
    ];
    for (name, mut s) in samplers {
        let r = gof_test(s.as_mut(), &table, count, 0.001)?;
        println!(
            "{name:>13}: chi2 = {:10.2}  dof = {:3}  p = {:.4}  {}",
            r.chi_square,
            r.degrees_of_freedom,
            r.p_value,
            if r.passed { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}
