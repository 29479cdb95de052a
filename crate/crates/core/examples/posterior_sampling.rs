//! Posterior sampling of unobserved angles at fixed parameters.
//!
//! Training inputs form two clusters; the predictive spread should be small
//! inside them and grow towards the prior away from them.
//!
//! cargo run --release --example posterior_sampling

use vmqp::circular::Angle;
use vmqp::evaluation::{crps_per_location, predictive_summary, PredictiveSample};
use vmqp::gibbs::{run_chain, ChainConfig, Initialization};
use vmqp::kernels::{build_gram, KernelSpec};
use vmqp::model::{build_precision, conditional_params, ParamVector};
use vmqp::synthetic::synthetic_problem;

fn main() -> vmqp::Result<()> {
    let w = ParamVector::new(KernelSpec::exponential(0.5, 1.5), 1.0, 0.0);
    let problem = synthetic_problem(30, 12, &w, 2)?;
    let design = problem.design()?;

    let gram = build_gram(&w.kernel, design.locations())?;
    let precision = build_precision(&gram, design.unobserved(), design.observed())?;
    let cp = conditional_params(&precision, &problem.theta, &w)?;
    let config = ChainConfig {
        n_iter: 20_000,
        burn_in: 2_000,
        thin: 2,
        seed: 1,
        init: Initialization::from_mean_pull(w.kappa, w.nu),
        ..ChainConfig::default()
    };
    let chain = run_chain(&cp, &config)?;
    println!("λ = {:.3}, median RESS = {:.4}", chain.lambda, chain.median_ress().unwrap_or(f64::NAN));

    let m = design.unobserved();
    let samples = PredictiveSample::from_rows(&chain.samples, m);
    let summaries = predictive_summary(&samples)?;
    let crps = crps_per_location(&samples, &problem.truth)?;
    let dist = problem.distance_to_data();
    println!("{:>6} {:>10} {:>10} {:>9} {:>9} {:>7}", "x", "to data", "mean (°)", "truth (°)", "circ var", "CRPS");
    for i in 0..m {
        println!(
            "{:>6.2} {:>10.2} {:>10.1} {:>9.1} {:>9.3} {:>7.3}",
            problem.test[i].coords()[0],
            dist[i],
            Angle::new(summaries[i].mean_direction).degrees(),
            Angle::new(problem.truth[i]).degrees(),
            summaries[i].circular_variance,
            crps[i]
        );
    }
    Ok(())
}
