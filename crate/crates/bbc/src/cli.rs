//! Command-line front end.
//!
//! Every subcommand writes only to the paths it is given; progress and
//! diagnostics go to standard error. Randomized subcommands take `--seed`, or
//! pick one and print it, and their output files depend only on the seed and
//! the flags, never on `--threads`.

use std::collections::hash_map::RandomState;
use std::fs::{self, File};
use std::hash::BuildHasher;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use bbc_core::bootstrap::efron_counts;
use bbc_core::dataset::{generate_dataset, Benchmark, DatasetSpec};
use bbc_core::ensemble::{
    bagclust1, BbcConfig, BbcPlan, MembershipMatrix, ReplicaDiagnostic, ReplicaWeighting,
};
use bbc_core::kmeans::{kmeans, wss, ClusteringResult, KMeansConfig};
use bbc_core::metrics::{aligned_contingency, contingency};
use bbc_core::prior::GaussianMixturePrior;
use bbc_core::rng::Purpose;
use bbc_core::selection::{
    gap_statistic, select_k, silhouette_curve, Curve, GapCurve, KSelectionReport, SelectKConfig,
};
use bbc_core::{DataMatrix, SeededRng};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::io::{
    self, encode_labels, CsvOptions, CsvTable, CurveRow, CurveTable, IoError, MembershipTable,
    Verdict,
};
use crate::parallel::ThreadPool;

#[derive(Debug, Parser)]
#[command(name = "bbc", version, about = "Bayesian bagged clustering")]
pub struct Cli {
    /// Maximum worker threads; defaults to one per core. Output does not
    /// depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print per-replica diagnostics to standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic dataset (ds1..ds6 or a JSON recipe).
    Generate(GenerateArgs),
    /// Cluster a dataset with k-means, BagClust1 or BBC.
    Cluster(ClusterArgs),
    /// Scan K (and prior scales) and choose K by membership entropy.
    SelectK(SelectKArgs),
    /// Project K = 3 memberships onto the 2-simplex.
    Simplex(SimplexArgs),
    /// Silhouette and gap-statistic curves.
    Baseline(BaselineArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// ds1..ds6, or a JSON file with dimension, component_sizes, centroids
    /// and covariance.
    pub spec: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Data CSV; true labels go to `<stem>.labels.csv` beside it.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Numeric CSV, one observation per line.
    pub input: PathBuf,
    /// The input has no header line.
    #[arg(long)]
    pub no_header: bool,
    /// Zero-based column with class labels; excluded from the features and
    /// used as ground truth when `--truth` is absent.
    #[arg(long)]
    pub label_column: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Kmeans,
    Bagclust1,
    Bbc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Weighting {
    Dirichlet,
    Uniform,
}

impl From<Weighting> for ReplicaWeighting {
    fn from(w: Weighting) -> Self {
        match w {
            Weighting::Dirichlet => ReplicaWeighting::Dirichlet,
            Weighting::Uniform => ReplicaWeighting::Uniform,
        }
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Number of clusters.
    #[arg(short, long)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "bbc")]
    pub method: Method,
    /// Prior covariance scale s.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Prior confidence ω in [0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub omega: f64,
    /// Number of bootstrap replicas B.
    #[arg(long, default_value_t = 100)]
    pub replicas: usize,
    /// k-means restarts per clustering.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, value_enum, default_value = "dirichlet")]
    pub weighting: Weighting,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Label file (one column, optional header) to tabulate against.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Write every replica (provenance, weight, features) to this CSV.
    #[arg(long)]
    pub dump_replicas: Option<PathBuf>,
    /// Receives labels.csv, membership.csv and summary.json.
    #[arg(short, long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectKArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Candidate K: `a..b`, `a-b` or a comma list.
    #[arg(long, default_value = "2..6")]
    pub k_range: String,
    /// Prior scales s, comma separated.
    #[arg(long, default_value = "1")]
    pub scales: String,
    /// Scale whose curves decide K; 1 when scanned, else the first scale.
    #[arg(long)]
    pub reference_scale: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub omega: f64,
    #[arg(long, default_value_t = 100)]
    pub replicas: usize,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, value_enum, default_value = "dirichlet")]
    pub weighting: Weighting,
    /// Reference sets for the gap statistic.
    #[arg(long, default_value_t = 50)]
    pub gap_refs: usize,
    /// Skip the silhouette and gap curves.
    #[arg(long)]
    pub no_baselines: bool,
    /// Dataset name in the curve table; defaults to the input file stem.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Receives curves.csv, verdict.json and report.json.
    #[arg(short, long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimplexArgs {
    /// Membership CSV (`id,u0,u1,u2`).
    pub membership: PathBuf,
    /// Coordinates CSV (`id,x,y`).
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "2..6")]
    pub k_range: String,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 50)]
    pub gap_refs: usize,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Receives curves.csv and verdict.json.
    #[arg(short, long)]
    pub out_dir: PathBuf,
}

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        let code = match error.downcast_ref::<IoError>() {
            Some(IoError::NotFound(_)) => 2,
            _ => 1,
        };
        Failure { code, error }
    }
}

/// Files written so far; removed again unless the command completes.
struct Outputs {
    written: Vec<PathBuf>,
    done: bool,
}

impl Outputs {
    fn new() -> Self {
        Self { written: Vec::new(), done: false }
    }

    fn write(
        &mut self,
        path: &Path,
        f: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
    ) -> anyhow::Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        self.written.push(path.to_path_buf());
        let mut w = BufWriter::new(file);
        f(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    fn commit(mut self) {
        self.done = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.done {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> SeededRng {
    let seed = seed.unwrap_or_else(|| {
        let s = RandomState::new().hash_one(std::process::id());
        eprintln!("seed: {s}");
        s
    });
    SeededRng::new(seed)
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let pool = ThreadPool::new(cli.threads)?;
    let ctx = Env { pool, verbose: cli.verbose };
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Cluster(a) => cluster(&ctx, a),
        Command::SelectK(a) => select(&ctx, a),
        Command::Simplex(a) => simplex(a),
        Command::Baseline(a) => baseline(&ctx, a),
    }
}

struct Env {
    pool: ThreadPool,
    verbose: bool,
}

fn labels_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.labels.csv"))
}

fn generate(a: GenerateArgs) -> Result<(), Failure> {
    let spec: DatasetSpec = match a.spec.parse::<Benchmark>() {
        Ok(b) => b.spec(),
        Err(msg) => {
            let path = Path::new(&a.spec);
            if !path.exists() {
                return Err(Failure {
                    code: 2,
                    error: anyhow!("{msg}; no spec file {} either", path.display()),
                });
            }
            io::load_json(path).with_context(|| format!("reading spec {}", path.display()))?
        }
    };
    let rng = resolve_seed(a.seed);
    let ds = generate_dataset(&spec, rng)?;
    let mut out = Outputs::new();
    out.write(&a.out, |w| Ok(io::write_data(w, &ds.data)?))?;
    out.write(&labels_path(&a.out), |w| Ok(io::write_labels(w, &ds.labels)?))?;
    out.commit();
    eprintln!(
        "generated {} rows x {} columns in {} components",
        ds.data.rows(),
        ds.data.cols(),
        spec.n_clusters()
    );
    Ok(())
}

struct Input {
    data: DataMatrix,
    truth: Option<(Vec<usize>, Vec<String>)>,
}

fn read_input(a: &InputArgs, truth: Option<&Path>) -> Result<Input, Failure> {
    let opts = CsvOptions { header: !a.no_header, label_column: a.label_column };
    let loaded = io::load_csv(&a.input, &opts)
        .with_context(|| format!("reading {}", a.input.display()))?;
    let raw = match truth {
        Some(p) => Some(io::load_labels(p, 0).with_context(|| format!("reading {}", p.display()))?),
        None => loaded.labels,
    };
    let truth = match raw {
        Some(raw) if raw.len() != loaded.data.rows() => {
            return Err(anyhow!("{} true labels for {} rows", raw.len(), loaded.data.rows()).into())
        }
        Some(raw) => Some(encode_labels(&raw)),
        None => None,
    };
    Ok(Input { data: loaded.data, truth })
}

fn check_input_exists(path: &Path) -> Result<(), Failure> {
    if path.exists() {
        Ok(())
    } else {
        Err(IoError::NotFound(path.to_path_buf()).into())
    }
}

fn kmeans_config(k: usize, restarts: usize) -> Result<KMeansConfig, Failure> {
    let cfg = KMeansConfig::new(k).with_restarts(restarts);
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct ContingencySummary {
    classes: Vec<String>,
    /// Rows are classes, columns clusters.
    counts: Vec<Vec<usize>>,
    /// Cluster shown in each column.
    column_labels: Vec<usize>,
    /// Whether clusters were matched to classes before tabulating.
    aligned: bool,
    misassigned: Option<usize>,
}

#[derive(Debug, Serialize)]
struct ClusterSummary {
    method: &'static str,
    k: usize,
    n: usize,
    seed: u64,
    /// WSS of the final partition.
    wss: f64,
    cluster_sizes: Vec<usize>,
    reference_wss: Option<f64>,
    synthetic_points: Option<usize>,
    skipped_replicas: Option<usize>,
    tied_rows: Option<usize>,
    unsupported_rows: Option<usize>,
    notes: Vec<String>,
    contingency: Option<ContingencySummary>,
    prior: Option<GaussianMixturePrior>,
    replicas: Option<Vec<ReplicaDiagnostic>>,
}

/// WSS of a labelling around its own cluster means.
fn partition_wss(data: &DataMatrix, labels: &[usize], k: usize) -> anyhow::Result<f64> {
    let p = data.cols();
    let mut sums = vec![0.0; k * p];
    let mut sizes = vec![0usize; k];
    for (x, &l) in data.iter_rows().zip(labels) {
        sizes[l] += 1;
        for (s, v) in sums[l * p..(l + 1) * p].iter_mut().zip(x) {
            *s += v;
        }
    }
    for (j, &size) in sizes.iter().enumerate() {
        if size > 0 {
            sums[j * p..(j + 1) * p].iter_mut().for_each(|s| *s /= size as f64);
        }
    }
    Ok(wss(data, labels, &DataMatrix::new(k, p, sums)?, None)?)
}

fn summarize_truth(
    truth: &Option<(Vec<usize>, Vec<String>)>,
    labels: &[usize],
    k: usize,
) -> anyhow::Result<Option<ContingencySummary>> {
    let Some((codes, names)) = truth else { return Ok(None) };
    let (table, aligned) = if names.len() == k {
        (aligned_contingency(codes, labels, k)?, true)
    } else {
        (contingency(codes, labels, names.len(), k)?, false)
    };
    Ok(Some(ContingencySummary {
        classes: names.clone(),
        misassigned: aligned.then(|| table.misassigned()),
        counts: table.counts,
        column_labels: table.column_labels,
        aligned,
    }))
}

fn write_labels_csv(w: &mut impl Write, ids: &[usize], labels: &[usize]) -> anyhow::Result<()> {
    let mut out = String::from("id,label\n");
    for (id, l) in ids.iter().zip(labels) {
        out.push_str(&format!("{id},{l}\n"));
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

fn replica_header(p: usize) -> String {
    let mut h = String::from("replica,provenance,weight");
    for j in 1..=p {
        h.push_str(&format!(",x{j}"));
    }
    h.push('\n');
    h
}

fn report_diagnostics(diags: &[ReplicaDiagnostic], verbose: bool) {
    for d in diags {
        if let Some(reason) = &d.skipped {
            eprintln!("replica {}: skipped ({reason:?})", d.index);
        } else if verbose {
            eprintln!(
                "replica {}: {} original rows, {} synthetic, overlap {}",
                d.index, d.original_rows, d.synthetic_points, d.overlap
            );
        }
    }
}

fn cluster(ctx: &Env, a: ClusterArgs) -> Result<(), Failure> {
    check_input_exists(&a.input.input)?;
    if let Some(t) = &a.truth {
        check_input_exists(t)?;
    }
    let kcfg = kmeans_config(a.k, a.restarts)?;
    let bbc_cfg = BbcConfig {
        kmeans: kcfg.clone(),
        scale: a.scale,
        omega: a.omega,
        replicas: a.replicas,
        weighting: a.weighting.into(),
    };
    if a.method == Method::Bbc {
        bbc_cfg.validate()?;
    } else if a.replicas == 0 {
        return Err(anyhow!("at least one replica is required").into());
    }
    let input = read_input(&a.input, a.truth.as_deref())?;
    let data = &input.data;
    if a.k > data.rows() {
        return Err(anyhow!("k = {} exceeds the {} rows", a.k, data.rows()).into());
    }
    let rng = resolve_seed(a.seed);
    let started = Instant::now();
    let ids: Vec<usize> = (0..data.rows()).map(|i| data.row_id(i)).collect();

    let mut out = Outputs::new();
    let mut summary = ClusterSummary {
        method: match a.method {
            Method::Kmeans => "kmeans",
            Method::Bagclust1 => "bagclust1",
            Method::Bbc => "bbc",
        },
        k: a.k,
        n: data.rows(),
        seed: rng.seed(),
        wss: 0.0,
        cluster_sizes: Vec::new(),
        reference_wss: None,
        synthetic_points: None,
        skipped_replicas: None,
        tied_rows: None,
        unsupported_rows: None,
        notes: Vec::new(),
        contingency: None,
        prior: None,
        replicas: None,
    };
    let mut membership: Option<MembershipMatrix> = None;
    let labels: Vec<usize> = match a.method {
        Method::Kmeans => {
            let fit: ClusteringResult = kmeans(data, None, &kcfg, rng)?;
            fit.labels
        }
        Method::Bagclust1 => {
            let res = bagclust1(data, a.replicas, &kcfg, rng, &ctx.pool)?;
            report_diagnostics(&res.diagnostics, ctx.verbose);
            summary.reference_wss = Some(res.reference.wss);
            summary.skipped_replicas =
                Some(res.diagnostics.iter().filter(|d| d.skipped.is_some()).count());
            if let Some(path) = &a.dump_replicas {
                out.write(path, |w| {
                    w.write_all(replica_header(data.cols()).as_bytes())?;
                    let n = data.rows();
                    for b in 0..a.replicas {
                        // same draws as inside bagclust1
                        let mut stream = rng.derive(Purpose::Replica, b as u64).stream();
                        let counts = efron_counts(n, &mut stream);
                        for (i, &c) in counts.iter().enumerate().filter(|(_, &c)| c > 0) {
                            let mut line = format!("{b},{},{}", ids[i], c as f64 / n as f64);
                            for v in data.row(i) {
                                line.push_str(&format!(",{v}"));
                            }
                            line.push('\n');
                            w.write_all(line.as_bytes())?;
                        }
                    }
                    Ok(())
                })?;
            }
            summary.replicas = Some(res.diagnostics);
            membership = Some(res.membership);
            membership.as_ref().unwrap().final_labels.clone()
        }
        Method::Bbc => {
            let plan = BbcPlan::new(data, &bbc_cfg, rng)?;
            let res = plan.run(a.replicas, &ctx.pool)?;
            report_diagnostics(&res.diagnostics, ctx.verbose);
            let synthetic = res.synthetic_points();
            summary.synthetic_points = Some(synthetic);
            summary.skipped_replicas = Some(res.skipped_replicas());
            summary.reference_wss = Some(res.reference.wss);
            if synthetic == 0 {
                summary
                    .notes
                    .push("no synthetic points were drawn from the prior".into());
            }
            if let Some(path) = &a.dump_replicas {
                out.write(path, |w| {
                    w.write_all(replica_header(data.cols()).as_bytes())?;
                    for b in 0..a.replicas {
                        let r = plan.replica(b)?;
                        for (i, prov) in r.provenance.iter().enumerate() {
                            let origin = match prov {
                                bbc_core::bootstrap::Provenance::Original(id) => id.to_string(),
                                bbc_core::bootstrap::Provenance::Synthetic => "synthetic".into(),
                            };
                            let mut line = format!("{b},{origin},{}", r.weights[i]);
                            for v in r.points.row(i) {
                                line.push_str(&format!(",{v}"));
                            }
                            line.push('\n');
                            w.write_all(line.as_bytes())?;
                        }
                    }
                    Ok(())
                })?;
            }
            summary.prior = Some(res.prior);
            summary.replicas = Some(res.diagnostics);
            membership = Some(res.membership);
            membership.as_ref().unwrap().final_labels.clone()
        }
    };
    summary.wss = partition_wss(data, &labels, a.k)?;
    summary.cluster_sizes = (0..a.k).map(|j| labels.iter().filter(|&&l| l == j).count()).collect();
    summary.contingency = summarize_truth(&input.truth, &labels, a.k)?;
    if let Some(m) = &membership {
        let ties = m.ties.iter().filter(|&&t| t).count();
        let unsupported = (0..m.rows()).filter(|&i| !m.is_supported(i)).count();
        summary.tied_rows = Some(ties);
        summary.unsupported_rows = Some(unsupported);
        if unsupported > 0 {
            summary
                .notes
                .push(format!("{unsupported} rows appeared in no replica; their label is 0"));
        }
    }

    out.write(&a.out_dir.join("labels.csv"), |w| write_labels_csv(w, &ids, &labels))?;
    if let Some(m) = &membership {
        let table = MembershipTable::from_membership(m, ids.clone())?;
        out.write(&a.out_dir.join("membership.csv"), |w| Ok(table.write_csv(w)?))?;
    }
    out.write(&a.out_dir.join("summary.json"), |w| Ok(io::write_json(w, &summary)?))?;
    out.commit();
    eprintln!("{} with K = {} finished in {:.2?}", summary.method, a.k, started.elapsed());
    if let Some(c) = &summary.contingency {
        if let Some(m) = c.misassigned {
            eprintln!("misassigned: {m}");
        }
    }
    Ok(())
}

/// Parses `a..b`, `a-b` or `a,b,c`.
pub fn parse_k_range(s: &str) -> anyhow::Result<Vec<usize>> {
    let s = s.trim();
    let bounds = s.split_once("..").or_else(|| s.split_once('-'));
    let ks: Vec<usize> = if let Some((lo, hi)) = bounds {
        let lo: usize = lo.trim().parse().with_context(|| format!("bad K range {s:?}"))?;
        let hi: usize = hi.trim_start_matches('=').trim().parse().with_context(|| format!("bad K range {s:?}"))?;
        if lo > hi {
            bail!("empty K range {s:?}");
        }
        (lo..=hi).collect()
    } else {
        s.split(',')
            .map(|v| v.trim().parse().with_context(|| format!("bad K value {v:?}")))
            .collect::<anyhow::Result<_>>()?
    };
    if ks.is_empty() {
        bail!("empty K range");
    }
    Ok(ks)
}

fn parse_scales(s: &str) -> anyhow::Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse().with_context(|| format!("bad scale {v:?}")))
        .collect::<anyhow::Result<_>>()?;
    if let Some(bad) = v.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        bail!("prior scales must be positive, got {bad}");
    }
    Ok(v)
}

fn dataset_name(name: &Option<String>, input: &Path) -> String {
    name.clone().unwrap_or_else(|| {
        input.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned())
    })
}

fn baseline_rows(dataset: &str, silhouette: Option<&Curve>, gap: Option<&GapCurve>) -> Vec<CurveRow> {
    let mut rows = Vec::new();
    let curves = [("silhouette", silhouette), ("gap", gap.map(|g| &g.curve))];
    for (measure, curve) in curves {
        let Some(curve) = curve else { continue };
        for (&k, &value) in curve.ks.iter().zip(&curve.values) {
            rows.push(CurveRow { dataset: dataset.into(), k, s: None, measure: measure.into(), value });
        }
    }
    rows
}

fn curve_table(dataset: &str, report: &KSelectionReport) -> CurveTable {
    let mut rows = Vec::new();
    for cell in &report.grid {
        rows.push(CurveRow {
            dataset: dataset.into(),
            k: cell.k,
            s: Some(cell.s),
            measure: "mean_entropy".into(),
            value: Some(cell.report.mean_entropy),
        });
        rows.push(CurveRow {
            dataset: dataset.into(),
            k: cell.k,
            s: Some(cell.s),
            measure: "worst_pair".into(),
            value: Some(cell.report.worst_pair_value()),
        });
    }
    rows.extend(baseline_rows(dataset, report.silhouette.as_ref(), report.gap.as_ref()));
    CurveTable { rows }
}

fn select(ctx: &Env, a: SelectKArgs) -> Result<(), Failure> {
    check_input_exists(&a.input.input)?;
    let k_values = parse_k_range(&a.k_range)?;
    let s_values = parse_scales(&a.scales)?;
    let reference_s = a
        .reference_scale
        .unwrap_or(if s_values.contains(&1.0) { 1.0 } else { s_values[0] });
    let cfg = SelectKConfig {
        k_values,
        s_values,
        reference_s,
        omega: a.omega,
        replicas: a.replicas,
        kmeans: kmeans_config(2, a.restarts)?,
        weighting: a.weighting.into(),
        baselines: !a.no_baselines,
        gap_references: a.gap_refs,
    };
    BbcConfig { kmeans: cfg.kmeans.clone(), scale: reference_s, omega: a.omega, replicas: a.replicas, weighting: cfg.weighting }
        .validate()?;
    let input = read_input(&a.input, None)?;
    cfg.validate(input.data.rows())?;
    let rng = resolve_seed(a.seed);
    let started = Instant::now();
    let report = select_k(&input.data, &cfg, rng, &ctx.pool)?;
    for cell in &report.grid {
        if cell.skipped_replicas > 0 {
            eprintln!("K = {}, s = {}: {} replicas skipped", cell.k, cell.s, cell.skipped_replicas);
        }
    }
    if !report.scales_agree {
        eprintln!("note: the chosen K differs across prior scales");
    }
    let verdict = Verdict {
        k_by_mean_entropy: Some(report.k_by_mean_entropy),
        k_by_worst_pair: Some(report.k_by_worst_pair),
        silhouette_k: report.silhouette.as_ref().and_then(|c| c.best_k),
        gap_k: report.gap.as_ref().and_then(|g| g.curve.best_k),
    };
    let table = curve_table(&dataset_name(&a.name, &a.input.input), &report);
    let mut out = Outputs::new();
    out.write(&a.out_dir.join("curves.csv"), |w| Ok(table.write_csv(w)?))?;
    out.write(&a.out_dir.join("verdict.json"), |w| Ok(io::write_json(w, &verdict)?))?;
    out.write(&a.out_dir.join("report.json"), |w| Ok(io::write_json(w, &report)?))?;
    out.commit();
    eprintln!(
        "K by mean entropy: {}, by worst pair: {} ({:.2?})",
        report.k_by_mean_entropy,
        report.k_by_worst_pair,
        started.elapsed()
    );
    Ok(())
}

fn baseline(ctx: &Env, a: BaselineArgs) -> Result<(), Failure> {
    check_input_exists(&a.input.input)?;
    let ks = parse_k_range(&a.k_range)?;
    let kcfg = kmeans_config(2, a.restarts)?;
    if a.gap_refs == 0 {
        return Err(anyhow!("gap statistic needs at least one reference set").into());
    }
    let input = read_input(&a.input, None)?;
    let data = &input.data;
    if let Some(&k) = ks.iter().find(|&&k| k < 2 || k > data.rows()) {
        return Err(anyhow!("K = {k} outside 2..={}", data.rows()).into());
    }
    // same substream select-k uses for its baselines
    let rng = resolve_seed(a.seed).derive(Purpose::Baseline, 0);
    let sil = silhouette_curve(data, &ks, &kcfg, rng, &ctx.pool)?;
    let gap = gap_statistic(data, &ks, a.gap_refs, &kcfg, rng, &ctx.pool)?;
    let verdict = Verdict {
        k_by_mean_entropy: None,
        k_by_worst_pair: None,
        silhouette_k: sil.best_k,
        gap_k: gap.curve.best_k,
    };
    let table = CurveTable {
        rows: baseline_rows(&dataset_name(&a.name, &a.input.input), Some(&sil), Some(&gap)),
    };
    let mut out = Outputs::new();
    out.write(&a.out_dir.join("curves.csv"), |w| Ok(table.write_csv(w)?))?;
    out.write(&a.out_dir.join("verdict.json"), |w| Ok(io::write_json(w, &verdict)?))?;
    out.commit();
    eprintln!("silhouette K: {:?}, gap K: {:?}", verdict.silhouette_k, verdict.gap_k);
    Ok(())
}

/// Barycentric coordinates in the plane: vertices at (0, 0), (1, 0) and
/// (1/2, √3/2).
pub fn simplex_point(u: &[f64]) -> (f64, f64) {
    (u[1] + u[2] / 2.0, 3f64.sqrt() / 2.0 * u[2])
}

fn simplex(a: SimplexArgs) -> Result<(), Failure> {
    check_input_exists(&a.membership)?;
    let table: MembershipTable = io::load_report(&a.membership, io::Format::Csv)
        .with_context(|| format!("reading {}", a.membership.display()))?;
    if table.k != 3 {
        return Err(anyhow!(
            "simplex coordinates need K = 3 memberships (the 2-simplex is a triangle); {} has K = {}",
            a.membership.display(),
            table.k
        )
        .into());
    }
    let mut out = Outputs::new();
    out.write(&a.out, |w| {
        let mut text = String::from("id,x,y\n");
        for (i, id) in table.ids.iter().enumerate() {
            let (x, y) = simplex_point(table.row(i));
            text.push_str(&format!("{id},{x},{y}\n"));
        }
        w.write_all(text.as_bytes())?;
        Ok(())
    })?;
    out.commit();
    Ok(())
}
