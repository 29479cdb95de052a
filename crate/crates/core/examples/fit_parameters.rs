//! Joint sampling of kernel and mean-pull parameters with the unobserved
//! angles, on data simulated from known parameters.
//!
//! cargo run --release --example fit_parameters

use vmqp::evaluation::{crps_per_location, mean_std, PredictiveSample};
use vmqp::inference::{block_gibbs_fit, FitConfig, ProposalSpec};
use vmqp::kernels::KernelSpec;
use vmqp::model::{Param, ParamVector};
use vmqp::synthetic::synthetic_problem;

fn main() -> vmqp::Result<()> {
    let truth = ParamVector::new(KernelSpec::exponential(0.3, 1.2), 1.0, 0.5);
    let problem = synthetic_problem(30, 10, &truth, 100)?;

    let mut config = FitConfig::new(ParamVector::new(KernelSpec::exponential(1.0, 1.0), 0.5, 0.0));
    config.proposals = ProposalSpec::default()
        .with_step(Param::Variance, 0.2)?
        .with_step(Param::Lengthscale, 0.2)?
        .with_step(Param::Kappa, 0.2)?
        .with_step(Param::Nu, 0.3)?;
    config.n_iter = 3_000;
    config.burn_in = 1_000;
    config.gibbs_sweeps = 5;
    config.seed = 7;
    let fit = block_gibbs_fit(&problem.theta, problem.train.clone(), problem.test.clone(), &config)?;

    println!("{:>8} {:>8} {:>10} {:>8}", "param", "truth", "post mean", "post sd");
    for &p in &fit.params {
        let trace: Vec<f64> = fit.w_trace.iter().map(|s| s.params.get(p)).collect();
        let (mean, sd) = mean_std(&trace).unwrap();
        println!("{:>8} {:>8.3} {:>10.3} {:>8.3}", p.name(), truth.get(p), mean, sd);
    }
    for (block, rate) in &fit.acceptance {
        println!("acceptance {block}: {rate:.2}");
    }
    let crps = crps_per_location(&PredictiveSample::from_rows(&fit.phi_samples, problem.test.len()), &problem.truth)?;
    println!("mean CRPS at held-out inputs: {:.3}", crps.iter().sum::<f64>() / crps.len() as f64);
    Ok(())
}
