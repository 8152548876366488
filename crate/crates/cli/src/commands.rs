use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use watermass::clustering::{dbscan, dbscan_shuffled, kmeans, ward, KMeansParams};
use watermass::cvi::{score_all, write_score_report, ScoreRow, DEFAULT_CVNN_K};
use watermass::embedding::{embed, EmbeddingParams};
use watermass::grid::{dataset_stats, knn_impute};
use watermass::nemi::{select_base, Ensemble};
use watermass::similarity::{compare_datasets, NoiseMode};
use watermass::sweep::{dbscan_grid, linspace, score_curve, Algorithm, METRICS};
use watermass::synth::{axis_centres, blob_dataset};
use watermass::{ClusterSet, GridDataset};

use crate::config::WeightMode;
use crate::error::{CliError, Result, StageExt};
use crate::io::{read_dataset, scaled_features, write_atomic, write_dataset, write_features};

#[derive(Args, Debug)]
pub struct InputArgs {
    /// 18-column cluster file or raw grid CSV.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Integer that marks noise in the files read and written.
    #[arg(long, default_value_t = -1, allow_negative_numbers = true)]
    pub noise_label: i64,
}

impl InputArgs {
    fn load(&self) -> Result<GridDataset> {
        read_dataset(&self.input, self.noise_label)
    }
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Where to write the normalised 18-column file.
    #[arg(long, short)]
    pub out: PathBuf,
}

pub fn ingest(a: &IngestArgs) -> Result<()> {
    let ds = a.input.load()?;
    let missing = ds.cells.iter().filter(|c| c.n_missing() > 0).count();
    println!("cells\t{}\ncells_with_missing\t{missing}", ds.len());
    write_dataset(&a.out, &ds, a.input.noise_label)
}

#[derive(Args, Debug)]
pub struct ImputeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Donor cells per missing value.
    #[arg(long, short, default_value_t = 5)]
    pub k: usize,
}

pub fn impute(a: &ImputeArgs) -> Result<()> {
    let ds = a.input.load()?;
    let filled = knn_impute(&ds, a.k).stage("impute")?;
    write_dataset(&a.out, &filled, a.input.noise_label)
}

#[derive(Args, Debug, Clone)]
pub struct EmbedParamArgs {
    #[arg(long, default_value_t = 20)]
    pub n_neighbors: usize,
    #[arg(long, default_value_t = 0.0)]
    pub min_dist: f64,
    #[arg(long, default_value_t = 3)]
    pub n_components: usize,
    #[arg(long, default_value_t = 500)]
    pub n_epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub negative_sample_rate: usize,
    #[arg(long, default_value_t = 1.0)]
    pub learning_rate: f64,
}

impl EmbedParamArgs {
    fn params(&self, seed: u64) -> EmbeddingParams {
        EmbeddingParams {
            n_neighbors: self.n_neighbors,
            min_dist: self.min_dist,
            n_components: self.n_components,
            n_epochs: self.n_epochs,
            negative_sample_rate: self.negative_sample_rate,
            learning_rate: self.learning_rate,
            seed,
            ..EmbeddingParams::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Input cells with e0..e2 filled in.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also write the scaled features here.
    #[arg(long)]
    pub scaled_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub params: EmbedParamArgs,
}

pub fn embed_cmd(a: &EmbedArgs) -> Result<()> {
    let mut ds = a.input.load()?;
    let fm = scaled_features(&ds)?;
    if a.params.n_components > 3 {
        return Err(CliError::usage("embed", "the cell file stores at most 3 embedding coordinates"));
    }
    let e = embed(&fm, &a.params.params(a.seed)).stage("embed")?;
    ds.set_embedding(&e.coords).stage("embed")?;
    println!("final_cross_entropy\t{}", e.final_cross_entropy);
    if let Some(p) = &a.scaled_out {
        write_features(p, &ds, &fm)?;
    }
    write_dataset(&a.out, &ds, a.input.noise_label)
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alg {
    Kmeans,
    Ward,
    Dbscan,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    /// The embedding when every cell has one, else the scaled features.
    Auto,
    Embedding,
    Features,
}

fn clustering_space(ds: &GridDataset, space: Space, stage: &'static str) -> Result<watermass::FeatureMatrix> {
    let has_embedding = ds.cells.iter().all(|c| c.embedding[0].is_some());
    let use_embedding = match space {
        Space::Embedding => true,
        Space::Features => false,
        Space::Auto => has_embedding && !ds.is_empty(),
    };
    if use_embedding {
        let dim = ds.cells.first().map_or(0, |c| c.embedding.iter().take_while(|e| e.is_some()).count());
        let m = ds.embedding_matrix(dim).stage(stage)?;
        let names = (0..dim).map(|d| format!("e{d}")).collect();
        Ok(watermass::FeatureMatrix::complete(m, names))
    } else {
        scaled_features(ds)
    }
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Input cells with the new labels.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub alg: Alg,
    #[arg(long, short)]
    pub k: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub min_samples: Option<usize>,
    /// k-means seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shuffle DBSCAN's visiting order with this seed.
    #[arg(long)]
    pub order_seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Space::Auto)]
    pub space: Space,
    /// Write the six validity indices here.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CVNN_K)]
    pub cvnn_k: usize,
}

pub fn cluster(a: &ClusterArgs) -> Result<()> {
    let mut ds = a.input.load()?;
    let x = clustering_space(&ds, a.space, "cluster")?;
    let x = x.values.view();
    let need = |v: Option<usize>, name: &str| v.ok_or_else(|| CliError::usage("cluster", format!("--{name} is required")));
    let (partition, params): (ClusterSet, String) = match a.alg {
        Alg::Kmeans => {
            let k = need(a.k, "k")?;
            let r = kmeans(x, &KMeansParams::new(k, a.seed)).stage("cluster")?;
            (r.partition, format!("k={k};seed={}", a.seed))
        }
        Alg::Ward => {
            let k = need(a.k, "k")?;
            (ward(x, k).stage("cluster")?.0, format!("k={k}"))
        }
        Alg::Dbscan => {
            let eps = a.eps.ok_or_else(|| CliError::usage("cluster", "--eps is required"))?;
            let ms = need(a.min_samples, "min-samples")?;
            let p = match a.order_seed {
                Some(s) => dbscan_shuffled(x, eps, ms, s),
                None => dbscan(x, eps, ms, None),
            };
            (p.stage("cluster")?, format!("eps={eps};min_samples={ms}"))
        }
    };
    println!(
        "n_clusters\t{}\nnoise_fraction\t{}",
        partition.n_clusters(),
        partition.noise_fraction()
    );
    if let Some(path) = &a.scores {
        let row = ScoreRow::new(alg_name(a.alg), &params, 0, score_all(x, &partition, a.cvnn_k), &partition);
        write_atomic(path, |w| write_score_report(&[row], w).stage("scores"))?;
    }
    ds.set_labels(&partition).stage("cluster")?;
    ds.assign_colors();
    write_dataset(&a.out, &ds, a.input.noise_label)
}

fn alg_name(a: Alg) -> &'static str {
    match a {
        Alg::Kmeans => "kmeans",
        Alg::Ward => "ward",
        Alg::Dbscan => "dbscan",
    }
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Long-format CSV of the curve or heatmap.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub alg: Alg,
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 0.2)]
    pub eps_max: f64,
    #[arg(long, default_value_t = 20)]
    pub eps_steps: usize,
    #[arg(long, default_value_t = 2)]
    pub ms_min: usize,
    #[arg(long, default_value_t = 11)]
    pub ms_max: usize,
    #[arg(long)]
    pub order_seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Space::Auto)]
    pub space: Space,
    #[arg(long, default_value_t = DEFAULT_CVNN_K)]
    pub cvnn_k: usize,
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let ds = a.input.load()?;
    let fm = clustering_space(&ds, a.space, "sweep")?;
    let x = fm.values.view();
    match a.alg {
        Alg::Dbscan => {
            if a.eps_steps < 2 || a.ms_min > a.ms_max {
                return Err(CliError::usage("sweep", "need eps_steps ≥ 2 and ms_min ≤ ms_max"));
            }
            let eps = linspace(a.eps_min, a.eps_max, a.eps_steps);
            let ms: Vec<usize> = (a.ms_min..=a.ms_max).collect();
            let h = dbscan_grid(x, &eps, &ms, a.order_seed, a.cvnn_k).stage("sweep")?;
            match h.elbow() {
                Ok((e, m)) => println!("elbow\tepsilon={e}\tmin_samples={m}"),
                Err(e) => println!("elbow\tnone ({e})"),
            }
            let best = h
                .cells
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.scores.ch.map(|v| (i, v)))
                .max_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((i, ch)) = best {
                let (e, m) = (h.epsilon[i / ms.len()], ms[i % ms.len()]);
                println!("ch_optimum\tepsilon={e}\tmin_samples={m}\tCH={ch}");
            }
            write_atomic(&a.out, |w| h.write_csv(w).stage("sweep"))
        }
        alg => {
            let algorithm = if alg == Alg::Ward { Algorithm::Ward } else { Algorithm::KMeans };
            let ks: Vec<usize> = (a.k_min..=a.k_max).collect();
            let curve = score_curve(x, algorithm, &ks, a.repeats, a.seed, a.cvnn_k).stage("sweep")?;
            for (m, name) in METRICS.iter().enumerate() {
                let means = curve.means(m);
                if means.iter().all(Option::is_some) {
                    let vals: Vec<f64> = means.into_iter().flatten().collect();
                    if let Ok(i) = watermass::sweep::elbow_1d(&vals) {
                        println!("elbow\t{name}\tk={}", curve.k[i]);
                    }
                }
            }
            write_atomic(&a.out, |w| curve.write_csv(w).stage("sweep"))
        }
    }
}

#[derive(Args, Debug)]
pub struct NemiArgs {
    /// Labelled cell files, one per ensemble member, sharing cells.
    #[arg(long, short, num_args = 2.., required = true)]
    pub members: Vec<PathBuf>,
    #[arg(long, default_value_t = -1, allow_negative_numbers = true)]
    pub noise_label: i64,
    /// Fused labels and uncertainty, on the cells of the chosen base member.
    #[arg(long, short)]
    pub out: PathBuf,
    /// `volume` or `count`.
    #[arg(long, default_value = "volume")]
    pub weights: String,
    /// Try only the first N members as base.
    #[arg(long)]
    pub base_candidates: Option<usize>,
}

pub fn nemi(a: &NemiArgs) -> Result<()> {
    let mode: WeightMode = a.weights.parse().map_err(|e: String| CliError::usage("nemi", e))?;
    let sets: Vec<GridDataset> = a.members.iter().map(|p| read_dataset(p, a.noise_label)).collect::<Result<_>>()?;
    let first = &sets[0];
    let keys = |d: &GridDataset| -> Vec<(i64, i64, i64)> {
        d.cells.iter().map(|c| watermass::grid::cell_key(c.lev_m, c.latitude, c.longitude)).collect()
    };
    let reference = keys(first);
    let mut members = Vec::with_capacity(sets.len());
    for (p, d) in a.members.iter().zip(&sets) {
        if keys(d) != reference {
            return Err(CliError::data("nemi", format!("{}: cells differ from the first member", p.display())));
        }
        members.push(d.labels().ok_or_else(|| CliError::data("nemi", format!("{}: unlabelled cells", p.display())))?);
    }
    let weights = (mode == WeightMode::Volume).then(|| first.volumes());
    let ensemble = Ensemble::new(members, weights).stage("nemi")?;
    let (fused, per_base) = select_base(&ensemble, a.base_candidates).stage("nemi")?;
    println!("base_member\t{}", fused.base_id);
    println!("n_clusters\t{}", fused.final_labels.n_clusters());
    println!("mean_uncertainty\t{}", fused.mean_uncertainty());
    println!("candidate_mean_uncertainty\t{per_base:?}");
    let mut out = sets[fused.base_id].clone();
    out.set_labels(&fused.final_labels).stage("nemi")?;
    out.set_uncertainty(&fused.uncertainty).stage("nemi")?;
    out.assign_colors();
    write_dataset(&a.out, &out, a.noise_label)
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = -1, allow_negative_numbers = true)]
    pub noise_label_a: i64,
    #[arg(long, default_value_t = -1, allow_negative_numbers = true)]
    pub noise_label_b: i64,
    /// Drop cells that are noise in either file instead of treating noise as a label.
    #[arg(long)]
    pub drop_noise: bool,
    /// Append-free one-row CSV report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub const COMPARE_COLUMNS: [&str; 8] = ["n", "overlap_ab", "overlap_ba", "overlap_sym", "nmi", "ari", "dropped_a", "dropped_b"];

pub fn compare(a: &CompareArgs) -> Result<()> {
    let da = read_dataset(&a.a, a.noise_label_a)?;
    let db = read_dataset(&a.b, a.noise_label_b)?;
    let mode = if a.drop_noise { NoiseMode::Drop } else { NoiseMode::AsLabel };
    let (g, joined) = compare_datasets(&da, &db, mode).stage("compare")?;
    let row = [
        g.n.to_string(),
        g.overlap_ab.to_string(),
        g.overlap_ba.to_string(),
        g.overlap_sym.to_string(),
        g.nmi.to_string(),
        g.ari.to_string(),
        joined.dropped_a.to_string(),
        joined.dropped_b.to_string(),
    ];
    for (k, v) in COMPARE_COLUMNS.iter().zip(&row) {
        println!("{k}\t{v}");
    }
    if let Some(p) = &a.report {
        write_atomic(p, |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(COMPARE_COLUMNS).stage("compare")?;
            c.write_record(&row).stage("compare")?;
            c.flush().stage("compare")
        })?;
    }
    Ok(())
}

/// Summary of a labelled cell file.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelSummary {
    pub n_cells: usize,
    pub n_clusters: usize,
    pub noise_fraction: f64,
    pub mean_uncertainty: Option<f64>,
    pub median_uncertainty: Option<f64>,
}

pub fn label_summary(ds: &GridDataset) -> Option<LabelSummary> {
    let labels = ds.labels()?;
    let mut u: Vec<f64> = ds.cells.iter().filter_map(|c| c.uncertainty).collect();
    u.sort_by(f64::total_cmp);
    let mean = (!u.is_empty()).then(|| u.iter().sum::<f64>() / u.len() as f64);
    let median = (!u.is_empty()).then(|| {
        let m = u.len() / 2;
        if u.len() % 2 == 0 {
            (u[m - 1] + u[m]) / 2.0
        } else {
            u[m]
        }
    });
    Some(LabelSummary {
        n_cells: ds.len(),
        n_clusters: labels.n_clusters(),
        noise_fraction: labels.noise_fraction(),
        mean_uncertainty: mean,
        median_uncertainty: median,
    })
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

pub fn stats(a: &StatsArgs) -> Result<()> {
    let ds = a.input.load()?;
    println!("cells\t{}", ds.len());
    for s in dataset_stats(&ds) {
        let f = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{}\tmean={}\tmin={}\tmax={}\tmissing={:.4}",
            s.name,
            f(s.mean),
            f(s.min),
            f(s.max),
            s.missing_fraction
        );
    }
    if let Some(s) = label_summary(&ds) {
        println!("clusters\t{}", s.n_clusters);
        println!("noise_percent\t{:.4}", 100.0 * s.noise_fraction);
        if let (Some(mean), Some(median)) = (s.mean_uncertainty, s.median_uncertainty) {
            println!("mean_uncertainty\t{mean:.4}\nmedian_uncertainty\t{median:.4}");
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, short)]
    pub out: PathBuf,
    /// Number of blobs (at most 7).
    #[arg(long, short, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 500)]
    pub n_per: usize,
    #[arg(long, default_value_t = 0.2)]
    pub sigma: f64,
    /// Distance between blob centres.
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Store the true blob as the label column.
    #[arg(long)]
    pub with_truth: bool,
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    if a.k == 0 || a.k > 7 || !(a.sigma >= 0.0) {
        return Err(CliError::usage("synth", "need 1 ≤ k ≤ 7 and sigma ≥ 0"));
    }
    let (mut ds, truth) = blob_dataset(a.n_per, &axis_centres(a.k, a.spacing), a.sigma, a.seed).stage("synth")?;
    if a.with_truth {
        ds.set_labels(&truth).stage("synth")?;
    }
    write_dataset(&a.out, &ds, -1)
}

pub fn ensure_exists(path: &Path, stage: &'static str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::data(stage, format!("{}: no such file", path.display())))
    }
}
