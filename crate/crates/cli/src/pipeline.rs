//! The `run` subcommand: every stage from raw cells to fused labels, driven
//! by one config and recorded in a manifest that reproduces it.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use watermass::cvi::{score_all, write_score_report, ScoreRow};
use watermass::grid::knn_impute;
use watermass::nemi::select_base;
use watermass::sweep::{ensemble_run, Embedder, EnsembleConfig};

use crate::commands::ensure_exists;
use crate::config::{PipelineConfig, WeightMode};
use crate::error::{CliError, Result, StageExt};
use crate::io::{read_dataset, scaled_features, write_atomic, write_dataset, write_features, write_text};

#[derive(Args, Debug)]
pub struct RunArgs {
    /// key = value config file; a previous run's manifest works too.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Override any config key; repeatable; applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

pub fn resolve(a: &RunArgs) -> Result<PipelineConfig> {
    let mut c = PipelineConfig::default();
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage("config", format!("{}: {e}", path.display())))?;
        c.apply_text(&text)?;
    }
    if let Some(p) = &a.input {
        c.input = Some(p.clone());
    }
    if let Some(p) = &a.out_dir {
        c.out_dir = p.clone();
    }
    for pair in &a.overrides {
        c.apply_pair(pair)?;
    }
    Ok(c)
}

pub fn run(a: &RunArgs) -> Result<()> {
    let mut c = resolve(a)?;
    let input = c.input.clone().ok_or_else(|| CliError::usage("config", "`input` is not set"))?;
    ensure_exists(&input, "ingest")?;
    // the manifest must work from any directory
    let input = std::fs::canonicalize(&input).stage("ingest")?;
    c.input = Some(input.clone());
    if c.n_runs < 2 {
        return Err(CliError::usage("config", "n_runs must be at least 2"));
    }
    if c.n_components > 3 {
        return Err(CliError::usage("config", "n_components above 3 cannot be stored in the cell file"));
    }
    let mut ds = read_dataset(&input, c.noise_label)?;
    if ds.is_empty() {
        return Err(CliError::data("ingest", "input has no cells"));
    }
    let out = |name: &str| c.out_dir.join(name);
    write_text(&out("manifest.conf"), &c.to_manifest())?;

    if ds.cells.iter().any(|cell| cell.n_missing() > 0) {
        if !c.impute {
            return Err(CliError::data("impute", "input has missing values and impute = false"));
        }
        ds = knn_impute(&ds, c.impute_k).stage("impute")?;
        write_dataset(&out("imputed.csv"), &ds, c.noise_label)?;
    }
    let fm = scaled_features(&ds)?;
    write_features(&out("scaled_features.csv"), &ds, &fm)?;

    let cfg = EnsembleConfig {
        embedder: Embedder::Umap(c.embedding()),
        epsilon: c.epsilon,
        min_samples: c.min_samples,
        shuffle_order: c.shuffle_order,
        weights: (c.weight_mode == WeightMode::Volume).then(|| ds.volumes()),
    };
    let er = ensemble_run(fm.values.view(), &cfg, c.n_runs, c.base_seed).stage("ensemble")?;

    write_atomic(&out("run_labels.csv"), |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["LEV_M".to_string(), "LATITUDE".into(), "LONGITUDE".into()];
        header.extend((0..er.runs.len()).map(|i| format!("run_{i}")));
        csv.write_record(&header).stage("write")?;
        for (p, cell) in ds.cells.iter().enumerate() {
            let mut rec = vec![cell.lev_m.to_string(), cell.latitude.to_string(), cell.longitude.to_string()];
            rec.extend(er.runs.iter().map(|r| r.labels.labels()[p].to_string()));
            csv.write_record(&rec).stage("write")?;
        }
        csv.flush().stage("write")
    })?;
    write_atomic(&out("run_embeddings.csv"), |w| {
        writeln!(w, "run,seed,cell,{}", (0..c.n_components).map(|d| format!("e{d}")).collect::<Vec<_>>().join(","))
            .stage("write")?;
        for (i, r) in er.runs.iter().enumerate() {
            let coords = r.coords.as_ref().expect("embedded runs carry coordinates");
            for (p, row) in coords.rows().into_iter().enumerate() {
                let vals: Vec<String> = row.iter().map(f64::to_string).collect();
                writeln!(w, "{i},{},{p},{}", r.seed, vals.join(",")).stage("write")?;
            }
        }
        Ok(())
    })?;
    write_atomic(&out("variability.csv"), |w| er.variability.write_csv(w).stage("write"))?;

    let cap = (c.base_candidates > 0).then_some(c.base_candidates);
    let (fused, _) = select_base(&er.ensemble, cap).stage("nemi")?;
    let base_coords = er.runs[fused.base_id].coords.as_ref().expect("embedded runs carry coordinates");

    let mut result = ds.clone();
    result.set_embedding(base_coords).stage("nemi")?;
    result.set_labels(&fused.final_labels).stage("nemi")?;
    result.set_uncertainty(&fused.uncertainty).stage("nemi")?;
    result.assign_colors();
    write_dataset(&out("cluster_set.csv"), &result, c.noise_label)?;

    if c.scores {
        let params = format!("eps={};min_samples={}", c.epsilon, c.min_samples);
        let mut rows: Vec<ScoreRow> = er
            .runs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let x = r.coords.as_ref().expect("embedded runs carry coordinates").view();
                ScoreRow::new("dbscan", &params, i, score_all(x, &r.labels, c.cvnn_k), &r.labels)
            })
            .collect();
        let fused_params = format!("base={};members={}", fused.base_id, c.n_runs);
        rows.push(ScoreRow::new(
            "nemi",
            &fused_params,
            fused.base_id,
            score_all(base_coords.view(), &fused.final_labels, c.cvnn_k),
            &fused.final_labels,
        ));
        write_atomic(&out("scores.csv"), |w| write_score_report(&rows, w).stage("scores"))?;
    }

    let v = &er.variability;
    println!("runs\t{}", c.n_runs);
    println!("pairwise_overlap_sym\t{:.4} ± {:.4}", v.overlap_sym.0, v.overlap_sym.1);
    println!("pairwise_ari\t{:.4} ± {:.4}", v.ari.0, v.ari.1);
    println!("pairwise_nmi\t{:.4} ± {:.4}", v.nmi.0, v.nmi.1);
    println!("base_member\t{}", fused.base_id);
    println!("clusters\t{}", fused.final_labels.n_clusters());
    println!("noise_fraction\t{:.4}", fused.final_labels.noise_fraction());
    println!("mean_uncertainty\t{:.4}", fused.mean_uncertainty());
    println!("artifacts\t{}", c.out_dir.display());
    Ok(())
}
