//! File-producing entry points behind the `vmqp` binary.
//!
//! Every command writes plain CSV tables and `key = value` reports into an
//! output directory. Angles are written in radians. Floating-point values use
//! the shortest representation that round-trips, so equal inputs and seeds
//! give byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::dataset::{ingest, Dataset, Schema};
use crate::error::{Error, Result};
use crate::evaluation::{crps_per_location, mean_std, median, DiagnosticsReport, PredictiveSample};
use crate::gibbs::{make_augmentation, run_chain_with, ChainConfig, Initialization};
use crate::inference::{block_gibbs_fit, cd_gradient, CdConfig, Design, FitConfig};
use crate::model::{build_precision, conditional_params, ConditionalParams, Param};
use crate::kernels::build_gram;

pub const PHI_SAMPLES: &str = "phi_samples.csv";
pub const DIAGNOSTICS: &str = "diagnostics.txt";
pub const LOCATIONS: &str = "locations.csv";
pub const W_TRACE: &str = "w_trace.csv";
pub const FIT_SUMMARY: &str = "summary.txt";
pub const CRPS_TABLE: &str = "crps.csv";
pub const EVAL_SUMMARY: &str = "eval_summary.txt";
pub const LAMBDA_SWEEP: &str = "lambda_sweep.csv";
pub const LAMBDA_RUNS: &str = "lambda_runs.csv";
pub const CD_GRADIENT: &str = "cd_gradient.csv";
pub const SEEDS: &str = "seeds.csv";

/// Stream-specific seed derived from a base seed (SplitMix64 finalizer).
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_report(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for (k, v) in entries {
        writeln!(f, "{k} = {v}")?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
}

/// Reads a report written by one of the commands back into a map.
pub fn read_report(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

/// Reads a sample table (one row per retained iteration) back in.
pub fn read_samples(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|c| {
                c.parse::<f64>().map_err(|_| Error::Data {
                    row: i + 2,
                    message: format!("cannot parse '{c}' as a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn write_samples(path: &Path, rows: &[Vec<f64>], m: usize) -> Result<()> {
    let header: Vec<String> = (1..=m).map(|i| format!("phi_{i}")).collect();
    let body: Vec<Vec<String>> = rows.iter().map(|r| r[..m].iter().map(f64::to_string).collect()).collect();
    write_table(path, &header, &body)
}

/// Report lines for a diagnostics summary of `m` predicted angles.
pub fn diagnostics_entries(report: &DiagnosticsReport, retained: usize) -> Vec<(String, String)> {
    let mut e = vec![
        ("locations".to_string(), report.summaries.len().to_string()),
        ("retained".to_string(), retained.to_string()),
        ("median_ress".to_string(), opt(report.median_ress)),
    ];
    for (i, r) in report.ress.iter().enumerate() {
        e.push((format!("ress_phi_{}", i + 1), opt(*r)));
    }
    for (i, s) in report.summaries.iter().enumerate() {
        e.push((format!("mean_direction_phi_{}", i + 1), s.mean_direction.to_string()));
        e.push((format!("circular_variance_phi_{}", i + 1), s.circular_variance.to_string()));
    }
    for (block, rate) in &report.acceptance {
        e.push((format!("acceptance_{block}"), rate.to_string()));
    }
    e
}

fn write_locations(path: &Path, ds: &Dataset, report: &DiagnosticsReport, crps: Option<&[f64]>) -> Result<()> {
    let dims = ds.test.first().map(|r| r.location.dim()).unwrap_or(0);
    let mut header: Vec<String> = (1..=dims).map(|k| format!("x{k}")).collect();
    header.extend(["mean_direction", "circular_variance", "ress"].map(String::from));
    if crps.is_some() {
        header.push("crps".into());
    }
    let rows: Vec<Vec<String>> = ds
        .test
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<String> = row.location.coords().iter().map(f64::to_string).collect();
            r.push(report.summaries[i].mean_direction.to_string());
            r.push(report.summaries[i].circular_variance.to_string());
            r.push(opt(report.ress[i]));
            if let Some(c) = crps {
                r.push(c[i].to_string());
            }
            r
        })
        .collect();
    write_table(path, &header, &rows)
}

fn require_test_rows(ds: &Dataset) -> Result<()> {
    if ds.test.is_empty() {
        return Err(Error::NoPredictionLocations);
    }
    Ok(())
}

/// Design and conditional at the configured parameters.
fn conditional_for(cfg: &RunConfig, ds: &Dataset) -> Result<(Design, ConditionalParams)> {
    require_test_rows(ds)?;
    let design = Design::new(ds.test_locations(), ds.train_locations())?;
    let gram = build_gram(&cfg.params.kernel, design.locations())?;
    let pm = build_precision(&gram, design.unobserved(), design.observed())?;
    let cp = conditional_params(&pm, &ds.theta(), &cfg.params)?;
    Ok((design, cp))
}

fn chain_config(cfg: &RunConfig, slack: f64, seed: u64) -> ChainConfig {
    ChainConfig {
        n_iter: cfg.sampler.n_iter,
        burn_in: cfg.sampler.burn_in,
        thin: cfg.sampler.thin,
        slack,
        seed,
        init: Initialization::from_mean_pull(cfg.params.kappa, cfg.params.nu),
    }
}

/// Posterior sampling of the test angles at fixed parameters.
pub fn cmd_sample(cfg: &RunConfig, ds: &Dataset, out: &Path) -> Result<Vec<PathBuf>> {
    let (design, cp) = conditional_for(cfg, ds)?;
    let m = design.unobserved();
    let aug = make_augmentation(&cp.q, cfg.sampler.slack)?;
    let chain = run_chain_with(&cp, &aug, &chain_config(cfg, cfg.sampler.slack, cfg.sampler.seed))?;
    let report = DiagnosticsReport::from_samples(&chain.samples, m, Vec::new())?;
    let crps = match ds.test_truth() {
        Some(truth) => Some(crps_per_location(&PredictiveSample::from_rows(&chain.samples, m), &truth)?),
        None => None,
    };

    fs::create_dir_all(out)?;
    let files = [out.join(PHI_SAMPLES), out.join(DIAGNOSTICS), out.join(LOCATIONS)];
    write_samples(&files[0], &chain.samples, m)?;
    let mut entries = vec![
        ("seed".to_string(), cfg.sampler.seed.to_string()),
        ("lambda".to_string(), chain.lambda.to_string()),
    ];
    entries.extend(diagnostics_entries(&report, chain.samples.len()));
    write_report(&files[1], &entries)?;
    write_locations(&files[2], ds, &report, crps.as_deref())?;
    Ok(files.to_vec())
}

/// Joint sampling of parameters and test angles.
pub fn cmd_fit(cfg: &RunConfig, ds: &Dataset, out: &Path) -> Result<Vec<PathBuf>> {
    require_test_rows(ds)?;
    let fit_cfg = FitConfig {
        initial: cfg.params,
        priors: cfg.fit.priors.clone(),
        proposals: cfg.fit.proposals.clone(),
        bridge: cfg.fit.bridge,
        slack: cfg.sampler.slack,
        n_iter: cfg.sampler.n_iter,
        burn_in: cfg.sampler.burn_in,
        thin: cfg.sampler.thin,
        gibbs_sweeps: cfg.fit.gibbs_sweeps,
        dmh_steps: cfg.fit.dmh_steps,
        seed: cfg.sampler.seed,
    };
    let fit = block_gibbs_fit(&ds.theta(), ds.train_locations(), ds.test_locations(), &fit_cfg)?;
    let m = ds.test.len();
    let report = DiagnosticsReport::from_samples(&fit.phi_samples, m, fit.acceptance.clone())?;
    let crps = match ds.test_truth() {
        Some(truth) => Some(crps_per_location(&PredictiveSample::from_rows(&fit.phi_samples, m), &truth)?),
        None => None,
    };

    fs::create_dir_all(out)?;
    let files = [
        out.join(W_TRACE),
        out.join(PHI_SAMPLES),
        out.join(FIT_SUMMARY),
        out.join(LOCATIONS),
    ];
    let mut header = vec!["iter".to_string()];
    header.extend(fit.params.iter().map(|p| p.name().to_string()));
    header.push("accepted".into());
    let rows: Vec<Vec<String>> = fit
        .w_trace
        .iter()
        .map(|s| {
            let mut r = vec![s.iter.to_string()];
            r.extend(fit.params.iter().map(|&p| s.params.get(p).to_string()));
            r.push(u8::from(s.accepted).to_string());
            r
        })
        .collect();
    write_table(&files[0], &header, &rows)?;
    write_samples(&files[1], &fit.phi_samples, m)?;

    let mut entries = vec![
        ("seed".to_string(), cfg.sampler.seed.to_string()),
        ("bridge_levels".to_string(), cfg.fit.bridge.levels.to_string()),
        ("inner_sweeps".to_string(), cfg.fit.bridge.inner_sweeps.to_string()),
    ];
    for &p in &fit.params {
        let trace: Vec<f64> = fit.w_trace.iter().map(|s| s.params.get(p)).collect();
        if let Some((mean, sd)) = mean_std(&trace) {
            entries.push((format!("posterior_mean_{}", p.name()), mean.to_string()));
            entries.push((format!("posterior_sd_{}", p.name()), sd.to_string()));
        }
    }
    entries.extend(diagnostics_entries(&report, fit.phi_samples.len()));
    if let Some(c) = &crps {
        entries.push(("mean_crps".into(), (c.iter().sum::<f64>() / c.len() as f64).to_string()));
    }
    write_report(&files[2], &entries)?;
    write_locations(&files[3], ds, &report, crps.as_deref())?;
    Ok(files.to_vec())
}

/// Scores predictive samples against held-out angles, one pair per split.
pub fn cmd_eval(predictions: &[PathBuf], truths: &[Dataset], out: &Path) -> Result<Vec<PathBuf>> {
    if predictions.is_empty() {
        return Err(Error::Config("at least one predictions file is required".into()));
    }
    if truths.len() != predictions.len() && truths.len() != 1 {
        return Err(Error::Misaligned(format!(
            "{} prediction files vs {} truth datasets",
            predictions.len(),
            truths.len()
        )));
    }
    let mut rows = Vec::new();
    let mut split_means = Vec::new();
    for (s, path) in predictions.iter().enumerate() {
        let ds = &truths[if truths.len() == 1 { 0 } else { s }];
        let truth = ds.test_truth().ok_or_else(|| {
            Error::Misaligned("every test row needs a true angle for scoring".into())
        })?;
        require_test_rows(ds)?;
        let samples = read_samples(path)?;
        if let Some(bad) = samples.iter().find(|r| r.len() != truth.len()) {
            return Err(Error::Misaligned(format!(
                "{} has {} columns but the dataset has {} test rows",
                path.display(),
                bad.len(),
                truth.len()
            )));
        }
        let crps = crps_per_location(&PredictiveSample::from_rows(&samples, truth.len()), &truth)?;
        for (i, c) in crps.iter().enumerate() {
            rows.push(vec![(s + 1).to_string(), (i + 1).to_string(), c.to_string()]);
        }
        split_means.push(crps.iter().sum::<f64>() / crps.len() as f64);
    }

    fs::create_dir_all(out)?;
    let files = [out.join(CRPS_TABLE), out.join(EVAL_SUMMARY)];
    write_table(&files[0], &["split", "location", "crps"].map(String::from), &rows)?;
    let (mean, sd) = mean_std(&split_means).expect("at least one split");
    let mut entries: Vec<(String, String)> = split_means
        .iter()
        .enumerate()
        .map(|(s, v)| (format!("mean_crps_split_{}", s + 1), v.to_string()))
        .collect();
    entries.push(("splits".into(), split_means.len().to_string()));
    entries.push(("mean_crps".into(), mean.to_string()));
    entries.push(("std_crps".into(), sd.to_string()));
    write_report(&files[1], &entries)?;
    Ok(files.to_vec())
}

const STREAM_LAMBDA: u64 = 1;
const STREAM_CD: u64 = 2;

/// λ sweep over the configured multipliers and repeated gradient estimates.
pub fn cmd_diagnose(cfg: &RunConfig, ds: &Dataset, out: &Path) -> Result<Vec<PathBuf>> {
    let (design, cp) = conditional_for(cfg, ds)?;
    let base = cfg.sampler.seed;
    let reps = cfg.diagnose.replicates;
    let mults = &cfg.diagnose.lambda_multipliers;

    let cells: Vec<(usize, usize)> = (0..mults.len()).flat_map(|i| (0..reps).map(move |r| (i, r))).collect();
    let runs: Vec<(usize, usize, u64, Option<f64>)> = cells
        .par_iter()
        .map(|&(i, r)| {
            let seed = derive_seed(base, STREAM_LAMBDA, r as u64);
            let cc = chain_config(cfg, mults[i] - 1.0, seed);
            let chain = make_augmentation(&cp.q, cc.slack).and_then(|aug| run_chain_with(&cp, &aug, &cc))?;
            Ok((i, r, seed, chain.median_ress()))
        })
        .collect::<Result<Vec<_>>>()?;

    let theta = ds.theta();
    let cd_seeds: Vec<u64> = (0..cfg.diagnose.cd_repeats)
        .map(|r| derive_seed(base, STREAM_CD, r as u64))
        .collect();
    let grads = cd_seeds
        .par_iter()
        .map(|&seed| {
            let cd = CdConfig {
                samples: cfg.diagnose.cd_samples,
                slack: cfg.sampler.slack,
                seed,
                ..CdConfig::default()
            };
            cd_gradient(&design, &cfg.params, &theta, &cd)
        })
        .collect::<Result<Vec<_>>>()?;

    fs::create_dir_all(out)?;
    let files = [
        out.join(LAMBDA_SWEEP),
        out.join(LAMBDA_RUNS),
        out.join(CD_GRADIENT),
        out.join(SEEDS),
    ];
    let sweep: Vec<Vec<String>> = mults
        .iter()
        .enumerate()
        .map(|(i, mult)| {
            let mut v: Vec<f64> = runs.iter().filter(|r| r.0 == i).filter_map(|r| r.3).collect();
            vec![mult.to_string(), opt(median(&mut v))]
        })
        .collect();
    write_table(&files[0], &["lambda_multiplier", "median_ress"].map(String::from), &sweep)?;
    let run_rows: Vec<Vec<String>> = runs
        .iter()
        .map(|(i, r, seed, ress)| vec![mults[*i].to_string(), r.to_string(), seed.to_string(), opt(*ress)])
        .collect();
    write_table(
        &files[1],
        &["lambda_multiplier", "replicate", "seed", "median_ress"].map(String::from),
        &run_rows,
    )?;
    let params: Vec<Param> = grads.first().map(|g| g.params.clone()).unwrap_or_default();
    let header: Vec<String> = params.iter().map(|p| p.name().to_string()).collect();
    let cd_rows: Vec<Vec<String>> = grads.iter().map(|g| g.mean.iter().map(f64::to_string).collect()).collect();
    write_table(&files[2], &header, &cd_rows)?;
    let mut seed_rows: Vec<Vec<String>> = (0..reps)
        .map(|r| vec!["lambda_sweep".into(), r.to_string(), derive_seed(base, STREAM_LAMBDA, r as u64).to_string()])
        .collect();
    seed_rows.extend(
        cd_seeds
            .iter()
            .enumerate()
            .map(|(r, s)| vec!["cd_gradient".into(), r.to_string(), s.to_string()]),
    );
    write_table(&files[3], &["task", "index", "seed"].map(String::from), &seed_rows)?;
    Ok(files.to_vec())
}

/// Number of test rows for a split of `n` rows.
pub fn test_count(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).min(n)
}

/// Writes `split_1.csv, …` with a `role` column assigned by seeded shuffling.
pub fn cmd_split(
    data: &Path,
    schema: Schema,
    fraction: f64,
    splits: usize,
    seed: u64,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("test fraction must lie in (0, 1), got {fraction}")));
    }
    // Validates the file under its schema before rewriting it.
    ingest(data, schema)?;
    let mut rdr = csv::Reader::from_path(data)?;
    let header = rdr.headers()?.clone();
    let role_col = header.iter().position(|h| h.trim() == "role");
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    let n = records.len();
    let k = test_count(n, fraction);

    fs::create_dir_all(out)?;
    let mut files = Vec::with_capacity(splits);
    for s in 0..splits {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, s as u64)));
        let mut is_test = vec![false; n];
        for &i in &order[..k] {
            is_test[i] = true;
        }
        let path = out.join(format!("split_{}.csv", s + 1));
        let mut w = csv::Writer::from_path(&path)?;
        let mut hdr: Vec<&str> = header.iter().enumerate().filter(|(c, _)| Some(*c) != role_col).map(|(_, h)| h).collect();
        hdr.push("role");
        w.write_record(&hdr)?;
        for (i, rec) in records.iter().enumerate() {
            let mut row: Vec<&str> = rec.iter().enumerate().filter(|(c, _)| Some(*c) != role_col).map(|(_, v)| v).collect();
            row.push(if is_test[i] { "test" } else { "train" });
            w.write_record(&row)?;
        }
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        assert_eq!(test_count(260, 0.2), 52);
        assert_eq!(test_count(260, 0.1), 26);
        assert_eq!(test_count(10, 0.4), 4);
    }

    #[test]
    fn derived_seeds_differ() {
        let a: Vec<u64> = (0..100).map(|i| derive_seed(7, 1, i)).collect();
        let mut b = a.clone();
        b.sort();
        b.dedup();
        assert_eq!(a.len(), b.len());
        assert_ne!(derive_seed(7, 1, 0), derive_seed(7, 2, 0));
    }
}
