//! Circular CRPS for a few predictive distributions.
//!
//! cargo run --example crps

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vmqp::circular::{sample_uniform_angle, sample_von_mises};
use vmqp::evaluation::circular_crps;

fn main() -> vmqp::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let observation = 0.4;
    let uniform: Vec<f64> = (0..100_000).map(|_| sample_uniform_angle(&mut rng)).collect();
    println!("uniform predictive:        {:.4}", circular_crps(&uniform, observation)?);
    println!("point mass at the truth:   {:.4}", circular_crps(&[observation; 10], observation)?);
    println!("point mass opposite:       {:.4}", circular_crps(&[observation - std::f64::consts::PI; 10], observation)?);
    for kappa in [1.0, 4.0, 16.0] {
        for offset in [0.0, 1.0] {
            let draws = (0..100_000)
                .map(|_| sample_von_mises(observation + offset, kappa, &mut rng))
                .collect::<vmqp::Result<Vec<_>>>()?;
            println!(
                "von Mises κ={kappa:<4} offset {offset}: {:.4}",
                circular_crps(&draws, observation)?
            );
        }
    }
    Ok(())
}
