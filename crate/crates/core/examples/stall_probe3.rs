//! Temporary diagnostic: geometry of the crease seam where a ReLU run
//! creeps. Reconstructs the stuck iterate, then examines the two-point
//! subgradient repair direction and a fan of probe directions.

use reslab::landscape::{train_from, INIT_TAG};
use reslab::loss::LossKind;
use reslab::model::{
    empirical_objective, grad_loss_params, Activation, ResNetParams, StackConfig,
};
use reslab::rng::SplitMix64;
use reslab::synth::gaussian_dataset;

const RESTART_TAG: u64 = 0x7265_7374;

fn main() {
    let data = gaussian_dataset::<f64>(16, 4, 2, 0.0, 1).unwrap();
    let config = StackConfig::uniform(2, 5, Activation::Relu, true, false).unwrap();
    let seed = SplitMix64::derive(1, RESTART_TAG).next_u64();
    let mut rng = SplitMix64::derive(seed, INIT_TAG);
    let init = ResNetParams::he_init(&config, 4, 2, &mut rng);
    let (params, out) =
        train_from(&data, &init, &config, LossKind::Squared, 1e-6, 60_000).unwrap();
    println!("endpoint: value={:.17e} gnorm={:.6e}", out.value, out.grad_norm);

    let eval = |flat: &[f64]| {
        let p = params.from_flat(flat).unwrap();
        empirical_objective(&data, &p, &config, LossKind::Squared).unwrap()
    };
    let grad_at = |flat: &[f64]| {
        let p = params.from_flat(flat).unwrap();
        let (v, g) = grad_loss_params(&data, &p, &config, LossKind::Squared).unwrap();
        (v, g.to_flat())
    };

    let x = params.to_flat();
    let (value, g) = grad_at(&x);
    let gnorm2: f64 = g.iter().map(|v| v * v).sum();

    // Two-point repair data.
    let probe: Vec<f64> =
        x.iter().zip(&g).map(|(&xi, &gi)| xi - 9.094947017729282e-13 * gi).collect();
    let (_, g2) = grad_at(&probe);
    let mut diff2 = 0.0;
    let mut gdiff = 0.0;
    for i in 0..g.len() {
        let d = g[i] - g2[i];
        diff2 += d * d;
        gdiff += g[i] * d;
    }
    let t = (gdiff / diff2).clamp(0.0, 1.0);
    let v: Vec<f64> = g.iter().zip(&g2).map(|(&a, &b)| (1.0 - t) * a + t * b).collect();
    let vnorm2: f64 = v.iter().map(|c| c * c).sum();
    println!("t*={t:.6}  |g|^2={gnorm2:.6e}  |g-g2|^2={diff2:.6e}  |v*|^2={vnorm2:.6e}");

    // Objective along -v* at a log grid of steps.
    println!("-- along -v* --");
    let mut s = 1.0;
    for _ in 0..30 {
        let cand: Vec<f64> = x.iter().zip(&v).map(|(&xi, &vi)| xi - s * vi).collect();
        let cv = eval(&cand);
        println!("  s={s:9.3e}  cv-value={:+.6e}", cv - value);
        s *= 0.25;
    }

    // Fan of seeded random unit directions: how common is descent?
    let mut dir_rng = SplitMix64::new(999);
    let mut best = (0.0_f64, 0usize);
    let mut n_descent = 0;
    for k in 0..200 {
        let d: Vec<f64> = dir_rng.unit_vector(x.len());
        let mut drop_best: f64 = 0.0;
        for &s in &[1e-1, 1e-2, 1e-3, 1e-4] {
            let cand: Vec<f64> = x.iter().zip(&d).map(|(&xi, &di)| xi - s * di).collect();
            let dv = eval(&cand) - value;
            drop_best = drop_best.min(dv);
            let cand2: Vec<f64> = x.iter().zip(&d).map(|(&xi, &di)| xi + s * di).collect();
            let dv2 = eval(&cand2) - value;
            drop_best = drop_best.min(dv2);
        }
        if drop_best < -1e-10 {
            n_descent += 1;
        }
        if drop_best < best.0 {
            best = (drop_best, k);
        }
    }
    println!("random fan: {n_descent}/200 directions descend; best drop {:.6e}", best.0);
}
