//! Draws from a von Mises distribution and summarizes them.
//!
//! cargo run --example von_mises

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vmqp::circular::{circular_summary, sample_von_mises, Angle};

fn main() -> vmqp::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mean = Angle::from_degrees(135.0).radians();
    for kappa in [0.0, 0.5, 2.0, 8.0, 50.0] {
        let draws = (0..100_000)
            .map(|_| sample_von_mises(mean, kappa, &mut rng))
            .collect::<vmqp::Result<Vec<_>>>()?;
        let s = circular_summary(&draws)?;
        println!(
            "κ = {kappa:>5}: mean direction {:>7.2}°, resultant length {:.4}, circular variance {:.4}",
            Angle::new(s.mean_direction).degrees(),
            s.resultant_length,
            s.circular_variance
        );
    }
    Ok(())
}
