//! The command layer end to end: split a dataset, sample each split and
//! score the predictions. Files go to a temporary directory.
//!
//! cargo run --release --example pipeline

use std::fmt::Write;

use vmqp::commands::{cmd_eval, cmd_sample, cmd_split, read_report, EVAL_SUMMARY, PHI_SAMPLES};
use vmqp::config::RunConfig;
use vmqp::dataset::{ingest, Schema};
use vmqp::kernels::KernelSpec;
use vmqp::model::ParamVector;
use vmqp::synthetic::synthetic_problem;

fn main() -> vmqp::Result<()> {
    let dir = std::env::temp_dir().join("vmqp-pipeline-example");
    std::fs::create_dir_all(&dir)?;

    let w = ParamVector::new(KernelSpec::exponential(0.5, 1.0), 1.0, 0.3);
    let problem = synthetic_problem(50, 0, &w, 9)?;
    let mut csv = String::from("x1,angle_rad\n");
    for (x, t) in problem.train.iter().zip(&problem.theta) {
        writeln!(csv, "{},{}", x.coords()[0], t).unwrap();
    }
    let data = dir.join("observations.csv");
    std::fs::write(&data, csv)?;

    let config = RunConfig::parse(
        "kernel = \"exponential\"\nsigma2 = 0.5\nlengthscale = 1.0\nkappa = 1.0\nnu_rad = 0.3\nn_iter = 5000\nseed = 1\n",
    )?;
    let splits = cmd_split(&data, Schema::Generic, 0.2, 3, 42, &dir.join("splits"))?;
    let mut predictions = Vec::new();
    let mut truths = Vec::new();
    for (s, split) in splits.iter().enumerate() {
        let ds = ingest(split, Schema::Generic)?;
        let out = dir.join(format!("sample_{}", s + 1));
        cmd_sample(&config, &ds, &out)?;
        predictions.push(out.join(PHI_SAMPLES));
        truths.push(ds);
    }
    let eval_dir = dir.join("eval");
    cmd_eval(&predictions, &truths, &eval_dir)?;
    for (key, value) in read_report(&eval_dir.join(EVAL_SUMMARY))? {
        println!("{key} = {value}");
    }
    println!("outputs in {}", dir.display());
    Ok(())
}
