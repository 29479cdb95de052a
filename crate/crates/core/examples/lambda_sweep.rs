//! Mixing of the augmented sampler as λ moves away from its smallest valid
//! value.
//!
//! cargo run --release --example lambda_sweep

use vmqp::evaluation::median;
use vmqp::gibbs::{make_augmentation, run_chain_with, ChainConfig, Initialization};
use vmqp::kernels::{build_gram, KernelSpec};
use vmqp::model::{build_precision, conditional_params, ParamVector};
use vmqp::synthetic::synthetic_problem;

fn main() -> vmqp::Result<()> {
    let w = ParamVector::new(KernelSpec::exponential(1.0, 1.0), 0.5, 0.0);
    let problem = synthetic_problem(20, 10, &w, 1)?;
    let design = problem.design()?;
    let gram = build_gram(&w.kernel, design.locations())?;
    let precision = build_precision(&gram, design.unobserved(), design.observed())?;
    let cp = conditional_params(&precision, &problem.theta, &w)?;

    println!("{:>12} {:>10} {:>12}", "λ / λ_max", "λ", "median RESS");
    for multiplier in [1.01, 1.5, 2.0, 5.0, 10.0] {
        let slack = multiplier - 1.0;
        let aug = make_augmentation(&cp.q, slack)?;
        let mut per_seed = (0..8)
            .map(|seed| {
                let config = ChainConfig {
                    n_iter: 12_000,
                    burn_in: 2_000,
                    slack,
                    seed,
                    init: Initialization::from_mean_pull(w.kappa, w.nu),
                    ..ChainConfig::default()
                };
                Ok(run_chain_with(&cp, &aug, &config)?.median_ress().unwrap_or(0.0))
            })
            .collect::<vmqp::Result<Vec<f64>>>()?;
        println!("{multiplier:>12} {:>10.3} {:>12.5}", aug.lambda(), median(&mut per_seed).unwrap());
    }
    Ok(())
}
