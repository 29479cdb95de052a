//! Variance of the bridged normalizer-ratio estimate against the number of
//! intermediate levels, on a single angle where the exact ratio is known.
//!
//! cargo run --release --example bridging

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vmqp::circular::sample_von_mises;
use vmqp::evaluation::mean_std;
use vmqp::inference::{bridge_ladder, ModelAt};
use vmqp::kernels::KernelSpec;
use vmqp::model::{ParamVector, PrecisionModel};

fn bessel_i0(kappa: f64) -> f64 {
    let n = 2048;
    (0..n).map(|j| (kappa * (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos()).exp()).sum::<f64>() / n as f64
}

fn main() -> vmqp::Result<()> {
    let model = |kappa: f64, nu: f64| {
        let precision = PrecisionModel::from_precision(DMatrix::from_element(1, 1, 1.0), 0, 1)?;
        ModelAt::from_precision(ParamVector::new(KernelSpec::gaussian(1.0, 1.0), kappa, nu), precision, 0.01)
    };
    let (current, proposed) = (model(3.0, 0.0)?, model(0.5, 2.0)?);
    let exact = bessel_i0(3.0) / bessel_i0(0.5);
    println!("exact ratio {exact:.4}");
    println!("{:>4} {:>10} {:>10}", "K", "mean", "variance");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for levels in [0, 1, 2, 5, 10, 20, 50] {
        let estimates = (0..5_000)
            .map(|_| {
                let xi0 = sample_von_mises(proposed.params.nu, proposed.params.kappa, &mut rng)?;
                Ok(bridge_ladder(&[xi0], &current, &proposed, levels, &mut rng)?.log_ratio.exp())
            })
            .collect::<vmqp::Result<Vec<f64>>>()?;
        let (mean, sd) = mean_std(&estimates).unwrap();
        println!("{levels:>4} {mean:>10.4} {:>10.4}", sd * sd);
    }
    Ok(())
}
