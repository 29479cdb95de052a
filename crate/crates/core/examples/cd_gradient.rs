//! Contrastive-divergence gradient estimates and their sign stability when
//! few angles are observed.
//!
//! cargo run --release --example cd_gradient

use vmqp::evaluation::mean_std;
use vmqp::inference::{cd_gradient, CdConfig};
use vmqp::kernels::KernelSpec;
use vmqp::model::{Param, ParamVector};
use vmqp::synthetic::synthetic_problem;

fn main() -> vmqp::Result<()> {
    let w = ParamVector::new(KernelSpec::exponential(1.0, 1.0), 0.5, 0.0);
    for (n, m) in [(40, 5), (5, 50)] {
        let problem = synthetic_problem(n, m, &w, 7)?;
        let design = problem.design()?;
        println!("n = {n} observed, m = {m} unobserved");
        for samples in [200, 2_000] {
            let grads = (0..20)
                .map(|seed| {
                    let cfg = CdConfig { samples, seed, ..CdConfig::default() };
                    cd_gradient(&design, &w, &problem.theta, &cfg)
                })
                .collect::<vmqp::Result<Vec<_>>>()?;
            for p in [Param::Lengthscale, Param::Kappa] {
                let values: Vec<f64> = grads.iter().map(|g| g.get(p).unwrap().0).collect();
                let positive = values.iter().filter(|v| **v > 0.0).count();
                let (mean, sd) = mean_std(&values).unwrap();
                println!(
                    "  {samples:>5} samples, ∂/∂{:<6} mean {mean:>8.3}, sd {sd:>7.3}, positive in {positive}/20",
                    p.name()
                );
            }
        }
    }
    Ok(())
}
