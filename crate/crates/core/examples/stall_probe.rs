//! Temporary diagnostic: reproduce a stalled training restart and probe
//! the objective along the steepest-descent ray at the stall point.

use reslab::landscape::{train_from, INIT_TAG};
use reslab::loss::LossKind;
use reslab::model::{grad_loss_params, Activation, ResNetParams, StackConfig};
use reslab::rng::SplitMix64;
use reslab::synth::gaussian_dataset;

fn main() {
    let data = gaussian_dataset::<f64>(16, 4, 2, 0.0, 42).unwrap();
    let config = StackConfig::uniform(2, 5, Activation::Relu, true, false).unwrap();
    let seed: u64 = 8270003253432483860;
    let mut rng = SplitMix64::derive(seed, INIT_TAG);
    let init = ResNetParams::he_init(&config, 4, 2, &mut rng);

    let (params, outcome) =
        train_from(&data, &init, &config, LossKind::Squared, 1e-7, 50_000).unwrap();
    println!(
        "stopped: iters={} value={:.17e} gnorm={:.6e} converged={}",
        outcome.iterations, outcome.value, outcome.grad_norm, outcome.converged
    );

    let (value, grads) = grad_loss_params(&data, &params, &config, LossKind::Squared).unwrap();
    let flat = params.to_flat();
    let g = grads.to_flat();
    let gnorm2: f64 = g.iter().map(|v| v * v).sum();
    println!("probe center: value={:.17e} gnorm2={:.6e}", value, gnorm2);

    let mut s = 1.0_f64;
    for _ in 0..64 {
        let cand: Vec<f64> = flat.iter().zip(&g).map(|(&x, &gi)| x - s * gi).collect();
        let p = params.from_flat(&cand).unwrap();
        let cv = reslab::model::empirical_objective(&data, &p, &config, LossKind::Squared).unwrap();
        let required = 1e-4 * s * gnorm2;
        println!(
            "s={:9.3e}  cv-value={:+.6e}  required={:.3e}  pass_armijo={}  strict_desc={}",
            s,
            cv - value,
            required,
            cv <= value - required,
            cv < value
        );
        s *= 0.5;
    }
}
