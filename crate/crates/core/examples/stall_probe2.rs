//! Temporary diagnostic for the depth-0 convex training stall.

use reslab::landscape::train;
use reslab::loss::LossKind;
use reslab::model::{DataSet, StackConfig};
use reslab::rng::SplitMix64;

fn main() {
    let mut rng = SplitMix64::new(5);
    let data: DataSet<f64> =
        DataSet::new(rng.gaussian_mat(10, 3, 1.0), rng.gaussian_mat(10, 2, 1.0)).unwrap();
    let config = StackConfig::zero_stack(3).unwrap();
    let (_, report) = train(&data, &config, LossKind::Squared, 7, 1e-9, 50_000).unwrap();
    println!(
        "iters={} loss={:.17e} gnorm={:.6e} cert={:?}",
        report.iterations, report.final_loss, report.grad_norm, report.certification
    );
    let n = report.trace.len();
    for (it, loss, gnorm) in report.trace.iter().skip(n.saturating_sub(12)) {
        println!("  it {:5}  loss {:.17e}  gnorm {:.6e}", it, loss, gnorm);
    }
}
