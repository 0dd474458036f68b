//! Temporary diagnostic: does a capacity-starved softmax run drift to
//! large parameter norm (infimum at infinity) or stay bounded?

use reslab::landscape::{train_from, INIT_TAG};
use reslab::loss::LossKind;
use reslab::model::{Activation, ResNetParams, StackConfig};
use reslab::oracle::solve_linear_model;
use reslab::rng::SplitMix64;
use reslab::synth::labeled_dataset;

const RESTART_TAG: u64 = 0x7265_7374;

fn main() {
    let data =
        labeled_dataset::<f64>(32, 2, 2, 0.0, LossKind::SoftmaxCrossEntropy, 12).unwrap();
    let config = StackConfig::uniform(1, 2, Activation::Tanh, true, false).unwrap();
    let seed = SplitMix64::derive(12, RESTART_TAG).next_u64();
    let mut rng = SplitMix64::derive(seed, INIT_TAG);
    let init = ResNetParams::he_init(&config, 2, 2, &mut rng);
    let solve =
        solve_linear_model(&data, None, LossKind::SoftmaxCrossEntropy, 1e-8).unwrap();
    println!(
        "pure convex solve: iters={} converged={} objective={:.12e} gnorm={:.3e}",
        solve.iterations, solve.converged, solve.fit.objective, solve.grad_norm
    );

    for iters in [10_000usize, 50_000, 200_000, 400_000] {
        let (params, out) = train_from(
            &data,
            &init,
            &config,
            LossKind::SoftmaxCrossEntropy,
            1e-6,
            iters,
        )
        .unwrap();
        let flat = params.to_flat();
        let norm: f64 = flat.iter().map(|v| v * v).sum::<f64>().sqrt();
        let wmax = params.w.as_slice().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        println!(
            "iters={iters:7}  loss={:.12e}  gnorm={:.3e}  |params|={norm:.4e}  max|W|={wmax:.4e}",
            out.value, out.grad_norm
        );
    }
}
