//! Command-line front end. Each subcommand reads a run configuration, reuses
//! the dataset and model already in the output directory when they were made
//! from the same configuration, and writes its own artifacts plus a manifest.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::analysis::{
    agglomerative_cluster, characterize_clusters, flux_bound_sweep, knockout_sweep, local_sensitivity,
    log_bound_grid, parameter_sweep, sweep_values, SweepResult,
};
use crate::contrastive::{train_ensemble, EnsembleModel};
use crate::embedding::{
    consensus_ensemble, mean_distance_matrix, project_dataset, random_baseline, reference_overlap, ConsensusReport,
};
use crate::io::table::{num, opt};
use crate::io::{
    emit_csv, emit_svg, load_model, save_model, Dataset, HistPanel, IoError, Manifest, Plot, Provenance, RunConfig,
    Series, Table,
};
use crate::nn::{grad_check_report, gradcheck_suite};
use crate::simulators::{gen_testdata, monte_carlo, FamilyKind, ModelFamily, TestDataKind};

pub const DATASET_FILE: &str = "dataset.simrep";
pub const MODEL_FILE: &str = "model.simrep";
pub const GRADCHECK_EPS: f64 = 1e-4;
pub const GRADCHECK_TOL: f64 = 1e-4;
const DEFAULT_CONSENSUS_N: [usize; 4] = [5, 10, 20, 50];
const OVERLAP_N: usize = 10;

#[derive(Parser)]
#[command(name = "simrep", version, about = "Compare simulation outputs through contrastive encoder ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample parameters and simulate a dataset
    Generate(Common),
    /// Train an encoder ensemble on the dataset
    Train(Common),
    /// Score agreement between ensemble members
    Consensus(Common),
    /// Distance from the base output across a parameter or flux-bound range
    Sweep(Common),
    /// Distance caused by knocking out each reaction
    Knockout(Common),
    /// One-at-a-time local sensitivity
    Sensitivity(Common),
    /// Cluster outputs by ensemble distance and describe the clusters
    Cluster(Common),
    /// Train on the synthetic 2-D layouts and score neighbourhood recovery
    Testdata(Common),
    /// Compare backpropagated and finite-difference gradients
    Gradcheck(Common),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Config(m) => CliError::Validation(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Runs one command line (program name first) and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.render().to_string();
            eprint!("{text}");
            if !text.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return 1;
        }
    };
    match dispatch(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<String, CliError> {
    match command {
        Command::Gradcheck(c) => gradcheck(&c),
        Command::Generate(c) => Ctx::new(&c, "generate")?.generate(),
        Command::Train(c) => Ctx::new(&c, "train")?.train(),
        Command::Consensus(c) => Ctx::new(&c, "consensus")?.consensus(),
        Command::Sweep(c) => Ctx::new(&c, "sweep")?.sweep(),
        Command::Knockout(c) => Ctx::new(&c, "knockout")?.knockout(),
        Command::Sensitivity(c) => Ctx::new(&c, "sensitivity")?.sensitivity(),
        Command::Cluster(c) => Ctx::new(&c, "cluster")?.cluster(),
        Command::Testdata(c) => Ctx::new(&c, "testdata")?.testdata(),
    }
}

fn gradcheck(c: &Common) -> Result<String, CliError> {
    let seed = c.seed.unwrap_or(0);
    let mut table = Table::new(&["family", "max_rel_error", "params"]);
    let mut worst = 0.0f64;
    for (name, spec) in gradcheck_suite() {
        let report = grad_check_report(&spec, seed, GRADCHECK_EPS).map_err(runtime)?;
        println!("gradcheck {name}: max relative error {:.3e} over {} parameters", report.max_rel_error, report.param_count);
        worst = worst.max(report.max_rel_error);
        table.push(vec![name.into(), num(report.max_rel_error), report.param_count.to_string()]);
    }
    if let Some(out) = &c.out {
        std::fs::create_dir_all(out).map_err(runtime)?;
        emit_csv(&out.join("gradcheck.csv"), &table)?;
        let mut m = Manifest::new("gradcheck", String::new());
        m.seeds.insert("run".into(), seed);
        m.add(out, "gradcheck.csv")?;
        m.write(out)?;
    }
    if worst <= GRADCHECK_TOL {
        Ok(format!("gradcheck: all layer families within {GRADCHECK_TOL:e} (worst {worst:.3e})"))
    } else {
        Err(CliError::Runtime(format!("gradcheck: worst relative error {worst:.3e} exceeds {GRADCHECK_TOL:e}")))
    }
}

struct Ctx {
    command: &'static str,
    cfg: RunConfig,
    out: PathBuf,
    format: Format,
    hash: String,
}

impl Ctx {
    fn new(c: &Common, command: &'static str) -> Result<Self, CliError> {
        let path = c.config.as_ref().ok_or_else(|| CliError::Validation(format!("{command} needs --config PATH")))?;
        let mut cfg = RunConfig::load(path)?;
        if let Some(seed) = c.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        let out = c.out.clone().or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("runs"));
        std::fs::create_dir_all(&out).map_err(runtime)?;
        let hash = cfg.hash();
        Ok(Self { command, cfg, out, format: c.format, hash })
    }

    fn manifest(&self) -> Manifest {
        let mut m = Manifest::new(self.command, self.hash.clone());
        m.seeds.insert("run".into(), self.cfg.seed);
        m
    }

    fn family(&self) -> Result<ModelFamily, CliError> {
        self.cfg
            .model_family()?
            .ok_or_else(|| CliError::Validation(format!("{} needs a simulator family", self.command)))
    }

    /// Writes the table and/or figure per `--format`, recording both.
    fn emit(&self, m: &mut Manifest, stem: &str, table: &Table, plot: Option<Plot>) -> Result<(), CliError> {
        if self.format != Format::Svg {
            let name = format!("{stem}.csv");
            emit_csv(&self.out.join(&name), table)?;
            m.add(&self.out, &name)?;
        }
        if let (Some(plot), true) = (plot, self.format != Format::Csv) {
            let name = format!("{stem}.svg");
            emit_svg(&self.out.join(&name), &plot)?;
            m.add(&self.out, &name)?;
        }
        Ok(())
    }

    /// The artifact `file` was written by `command` from the same settings
    /// and has not changed since.
    fn is_current(&self, command: &str, file: &str, stage_hash: &str) -> bool {
        Manifest::read(&self.out.join(Manifest::file_name(command))).is_ok_and(|m| {
            m.stage_hash == stage_hash && m.verify(&self.out).is_empty() && m.artifacts.iter().any(|a| a.path == file)
        })
    }

    fn dataset(&self) -> Result<Dataset, CliError> {
        if !self.is_current("generate", DATASET_FILE, &self.cfg.data_hash()) {
            self.generate()?;
        }
        Dataset::load(&self.out.join(DATASET_FILE)).map_err(runtime)
    }

    fn model(&self) -> Result<(Dataset, EnsembleModel), CliError> {
        let ds = self.dataset()?;
        if !self.is_current("train", MODEL_FILE, &self.cfg.model_hash()) {
            self.train_on(&ds)?;
        }
        let (model, _) = load_model(&self.out.join(MODEL_FILE)).map_err(runtime)?;
        Ok((ds, model))
    }

    fn generate(&self) -> Result<String, CliError> {
        let cfg = &self.cfg;
        let mut m = Manifest::new("generate", self.hash.clone());
        m.stage_hash = cfg.data_hash();
        m.seeds.insert("run".into(), cfg.seed);
        let (ds, failures) = self.draw(cfg.seed)?;
        ds.save(&self.out.join(DATASET_FILE)).map_err(runtime)?;
        m.add(&self.out, DATASET_FILE)?;
        emit_csv(&self.out.join("failures.csv"), &failures)?;
        m.add(&self.out, "failures.csv")?;
        m.summary.insert("count".into(), ds.len().into());
        m.summary.insert("failures".into(), failures.rows.len().into());
        m.write(&self.out)?;
        Ok(format!(
            "generate: {} outputs ({} failed runs), seed {} -> {}",
            ds.len(),
            failures.rows.len(),
            cfg.seed,
            self.out.join(DATASET_FILE).display()
        ))
    }

    /// Samples a dataset from the configured family with `seed`, listing
    /// the runs that failed.
    fn draw(&self, seed: u64) -> Result<(Dataset, Table), CliError> {
        let cfg = &self.cfg;
        let mut failures = Table::new(&["sample", "replicate", "message"]);
        let ds = match cfg.model_family()? {
            Some(family) => {
                let ranges = cfg.param_ranges()?.expect("families have ranges");
                let run = monte_carlo(&family, &ranges, cfg.samples, seed, cfg.replicates).map_err(runtime)?;
                for f in &run.failures {
                    failures.push(vec![f.sample.to_string(), f.replicate.to_string(), f.message.clone()]);
                }
                if run.outputs.is_empty() {
                    return Err(CliError::Runtime(format!("all {} runs failed", run.failures.len())));
                }
                Dataset::new(run.param_names, run.outputs).map_err(runtime)?
            }
            None => {
                let crate::io::config::FamilyConfig::Testdata { layout } = cfg.family else { unreachable!() };
                let data = gen_testdata(layout, cfg.samples, seed).map_err(runtime)?;
                Dataset::new(vec!["x".into(), "y".into()], data.outputs).map_err(runtime)?
            }
        };
        Ok((ds, failures))
    }

    fn train(&self) -> Result<String, CliError> {
        let ds = self.dataset()?;
        self.train_on(&ds)
    }

    fn train_on(&self, ds: &Dataset) -> Result<String, CliError> {
        let cfg = &self.cfg;
        let spec = cfg.encoder_spec()?;
        let train = cfg.train_config();
        let policy = cfg.augmentation_policy()?;
        let model = train_ensemble(&ds.outputs, &spec, &train, &policy).map_err(runtime)?;
        let provenance = Provenance { config_hash: cfg.model_hash(), seed: train.seed };
        save_model(&self.out.join(MODEL_FILE), &model, &provenance).map_err(runtime)?;

        let mut m = Manifest::new("train", self.hash.clone());
        m.stage_hash = cfg.model_hash();
        m.seeds.insert("run".into(), cfg.seed);
        m.seeds.insert("train".into(), train.seed);
        for (k, s) in model.member_seeds.iter().enumerate() {
            m.seeds.insert(format!("member_{k}"), *s);
        }
        m.add(&self.out, MODEL_FILE)?;
        let mut table = Table::new(&["member", "epoch", "loss"]);
        let mut series = Vec::new();
        for (k, curve) in model.loss_curves.iter().enumerate() {
            for (e, l) in curve.iter().enumerate() {
                table.push(vec![k.to_string(), (e + 1).to_string(), num(*l)]);
            }
            series.push(Series {
                name: format!("member {k}"),
                points: curve.iter().enumerate().map(|(e, &l)| ((e + 1) as f64, l, 0.0)).collect(),
            });
        }
        let plot = Plot::Line {
            title: "Training loss".into(),
            x_label: "epoch".into(),
            y_label: "NT-Xent loss".into(),
            series,
            base_x: None,
        };
        self.emit(&mut m, "loss", &table, Some(plot))?;
        let finals: Vec<f64> = model.loss_curves.iter().filter_map(|c| c.last().copied()).collect();
        m.summary.insert("members".into(), model.len().into());
        m.write(&self.out)?;
        Ok(format!(
            "train: {} members, {} epochs, final loss {} -> {}",
            model.len(),
            train.epochs,
            finals.iter().map(|l| format!("{l:.4}")).collect::<Vec<_>>().join("/"),
            self.out.join(MODEL_FILE).display()
        ))
    }

    fn consensus_sizes(&self, points: usize) -> Vec<usize> {
        let ns = if self.cfg.analysis.consensus_n.is_empty() {
            DEFAULT_CONSENSUS_N.to_vec()
        } else {
            self.cfg.analysis.consensus_n.clone()
        };
        ns.into_iter().filter(|&n| n < points).collect()
    }

    fn consensus(&self) -> Result<String, CliError> {
        let (mut ds, model) = self.model()?;
        let mut m = self.manifest();
        if self.cfg.analysis.consensus_held_out {
            let seed = self.cfg.held_out_seed();
            ds = self.draw(seed)?.0;
            m.seeds.insert("held_out".into(), seed);
        }
        let ns = self.consensus_sizes(ds.len());
        if ns.is_empty() {
            return Err(CliError::Validation(format!("no consensus size below the {} outputs", ds.len())));
        }
        let reports = consensus_ensemble(&model, &ds.outputs, &ns).map_err(runtime)?;
        let (table, pairs, plot) = consensus_tables(&reports, "Ensemble consensus");
        self.emit(&mut m, "consensus", &table, Some(plot))?;
        self.emit(&mut m, "consensus_pairs", &pairs, None)?;
        m.write(&self.out)?;
        let line: Vec<String> = reports.iter().map(|r| format!("n={} {:.3} (x{:.1})", r.n, r.ensemble_score, r.ensemble_score / r.baseline)).collect();
        Ok(format!("consensus: {}", line.join(", ")))
    }

    fn sweep(&self) -> Result<String, CliError> {
        let a = &self.cfg.analysis;
        if a.sweep.is_none() && a.flux_sweep.is_none() {
            return Err(CliError::Validation("sweep needs analysis.sweep or analysis.flux_sweep".into()));
        }
        let family = self.family()?;
        let (_, model) = self.model()?;
        let base = self.cfg.base_params()?;
        let mut m = self.manifest();
        m.seeds.insert("analysis".into(), self.cfg.analysis_seed());
        let mut parts = Vec::new();
        if let Some(req) = &a.sweep {
            let index = family.param_names().iter().position(|n| *n == req.param).expect("validated");
            let values = sweep_values(base[index], req.count, req.factor);
            let result = parameter_sweep(
                &family,
                &model,
                &base,
                index,
                &values,
                self.cfg.replicates,
                self.cfg.analysis_seed(),
            )
            .map_err(runtime)?;
            let (table, plot) = sweep_outputs(&result, None);
            self.emit(&mut m, "sweep", &table, Some(plot))?;
            let rho = result.offset_correlation();
            m.summary.insert("spearman".into(), rho.into());
            parts.push(format!("{} over {} values, spearman {rho:.3}", result.param_name, values.len()));
        }
        if let Some(req) = &a.flux_sweep {
            let net = family.network_with(&base).map_err(runtime)?;
            let reaction = net.reaction_index(&req.reaction).expect("validated");
            let values = log_bound_grid(req.count, req.largest);
            let result = flux_bound_sweep(&net, &model, reaction, &values).map_err(runtime)?;
            let (table, plot) = sweep_outputs(&result.sweep, Some(result.plateau));
            self.emit(&mut m, "flux_sweep", &table, Some(plot))?;
            m.summary.insert("plateau".into(), result.plateau.into());
            parts.push(format!("lb:{} over {} bounds, plateau of {}", req.reaction, values.len(), result.plateau));
        }
        m.write(&self.out)?;
        Ok(format!("sweep: {}", parts.join("; ")))
    }

    fn knockout(&self) -> Result<String, CliError> {
        let family = self.family()?;
        if family.kind() != FamilyKind::Fba {
            return Err(CliError::Validation("knockout needs the fba family".into()));
        }
        let (_, model) = self.model()?;
        let net = family.network_with(&self.cfg.base_params()?).map_err(runtime)?;
        let result = knockout_sweep(&net, &model).map_err(runtime)?;
        let mut m = self.manifest();
        let mut reactions = Table::new(&["reaction", "subsystem", "base_flux", "mean", "std", "error"]);
        for r in &result.reactions {
            reactions.push(vec![
                r.reaction.clone(),
                r.subsystem.clone(),
                num(r.base_flux),
                opt(r.distance.as_ref().map(|d| d.mean)),
                opt(r.distance.as_ref().map(|d| d.std)),
                r.error.clone().unwrap_or_default(),
            ]);
        }
        let mut subsystems = Table::new(&["subsystem", "mean", "std", "included", "excluded"]);
        for s in &result.subsystems {
            subsystems.push(vec![
                s.subsystem.clone(),
                opt(s.mean),
                opt(s.std),
                s.included.to_string(),
                s.excluded.to_string(),
            ]);
        }
        let plot = Plot::Bars {
            title: "Knockout distance by subsystem".into(),
            y_label: "mean ensemble distance".into(),
            categories: result.subsystems.iter().map(|s| s.subsystem.clone()).collect(),
            series: vec![(
                "knockout".into(),
                result.subsystems.iter().map(|s| (s.mean.unwrap_or(f64::NAN), s.std.unwrap_or(0.0))).collect(),
            )],
        };
        self.emit(&mut m, "knockout", &reactions, None)?;
        self.emit(&mut m, "knockout_subsystems", &subsystems, Some(plot))?;
        m.write(&self.out)?;
        Ok(format!(
            "knockout: {} reactions, top subsystem {}",
            result.reactions.len(),
            result.top_subsystem().unwrap_or("none")
        ))
    }

    fn sensitivity(&self) -> Result<String, CliError> {
        let Some(req) = self.cfg.analysis.sensitivity.clone() else {
            return Err(CliError::Validation("sensitivity needs analysis.sensitivity".into()));
        };
        let family = self.family()?;
        let (_, model) = self.model()?;
        let base = self.cfg.base_params()?;
        let r = local_sensitivity(&family, &model, &base, req.delta, req.specified, req.relative, self.cfg.analysis_seed())
            .map_err(runtime)?;
        let mut m = self.manifest();
        m.seeds.insert("analysis".into(), self.cfg.analysis_seed());
        let mut table = Table::new(&[
            "parameter",
            "projected",
            "projected_std",
            "specified",
            "projected_normalized",
            "specified_normalized",
            "projected_rank",
            "specified_rank",
            "error",
        ]);
        let rank = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        for i in 0..r.names.len() {
            table.push(vec![
                r.names[i].clone(),
                opt(r.projected[i]),
                opt(r.projected_std[i]),
                opt(r.specified[i]),
                opt(r.projected_normalized[i]),
                opt(r.specified_normalized[i]),
                rank(r.projected_rank[i]),
                rank(r.specified_rank[i]),
                r.errors[i].clone().unwrap_or_default(),
            ]);
        }
        let column = |v: &[Option<f64>]| v.iter().map(|x| (x.unwrap_or(f64::NAN), 0.0)).collect();
        let plot = Plot::Bars {
            title: format!("Local sensitivity (+{}%)", req.delta * 100.0),
            y_label: "normalized sensitivity".into(),
            categories: r.names.clone(),
            series: vec![
                ("projected".into(), column(&r.projected_normalized)),
                ("specified".into(), column(&r.specified_normalized)),
            ],
        };
        self.emit(&mut m, "sensitivity", &table, Some(plot))?;
        m.write(&self.out)?;
        let top = |ranks: &[Option<usize>]| {
            ranks.iter().position(|&x| x == Some(1)).map_or("none".to_string(), |i| r.names[i].clone())
        };
        Ok(format!(
            "sensitivity: {} parameters, most sensitive projected {} / specified {}",
            r.names.len(),
            top(&r.projected_rank),
            top(&r.specified_rank)
        ))
    }

    fn cluster(&self) -> Result<String, CliError> {
        let Some(req) = self.cfg.analysis.cluster.clone() else {
            return Err(CliError::Validation("cluster needs analysis.cluster".into()));
        };
        let (ds, model) = self.model()?;
        let n = ds.len();
        let projections = project_dataset(&model, &ds.outputs).map_err(runtime)?;
        let d = mean_distance_matrix(&projections).map_err(runtime)?;
        let result = agglomerative_cluster(&d, n, req.k, req.linkage).map_err(runtime)?;

        let mut names = ds.param_names.clone();
        let mut columns: Vec<Vec<f64>> =
            (0..names.len()).map(|p| ds.outputs.iter().map(|o| o.meta.params[p]).collect()).collect();
        let described: Vec<Vec<f64>> = ds.outputs.iter().map(|o| req.describe.extract(o)).collect();
        let width = described.first().map_or(0, Vec::len);
        let output_names = output_column_names(self.cfg.family_kind(), width);
        for (j, name) in output_names.into_iter().enumerate() {
            names.push(name);
            columns.push(described.iter().map(|row| row[j]).collect());
        }
        let (profiles, separations) =
            characterize_clusters(&result.labels, req.k, &names, &columns, req.bins).map_err(runtime)?;

        let mut m = self.manifest();
        let mut labels = Table::new(&["index", "label", "seed"]);
        for (i, (l, o)) in result.labels.iter().zip(&ds.outputs).enumerate() {
            labels.push(vec![i.to_string(), l.to_string(), o.meta.seed.to_string()]);
        }
        let mut merges = Table::new(&["step", "a", "b", "height", "size"]);
        for (s, mg) in result.merges.iter().enumerate() {
            merges.push(vec![s.to_string(), mg.a.to_string(), mg.b.to_string(), num(mg.height), mg.size.to_string()]);
        }
        let mut prof = Table::new(&["label", "size", "column", "count", "min", "q1", "median", "q3", "max", "mean"]);
        for p in &profiles {
            for (c, dist) in p.columns.iter().enumerate() {
                let Some(dist) = dist else { continue };
                prof.push(vec![
                    p.label.to_string(),
                    p.size.to_string(),
                    names[c].clone(),
                    dist.count.to_string(),
                    num(dist.min),
                    num(dist.q1),
                    num(dist.median),
                    num(dist.q3),
                    num(dist.max),
                    num(dist.mean),
                ]);
            }
        }
        let mut sep = Table::new(&["column", "cluster_a", "cluster_b", "pooled_std_units"]);
        for s in &separations {
            sep.push(vec![s.column.clone(), s.clusters.0.to_string(), s.clusters.1.to_string(), num(s.pooled_std_units)]);
        }
        let panels = names
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let lo = columns[c].iter().copied().fold(f64::INFINITY, f64::min);
                let hi = columns[c].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                HistPanel {
                    title: name.clone(),
                    lo,
                    hi,
                    groups: profiles
                        .iter()
                        .map(|p| {
                            let bins = p.columns[c].as_ref().map_or_else(|| vec![0; req.bins], |d| d.bins.clone());
                            (format!("cluster {}", p.label), bins)
                        })
                        .collect(),
                }
            })
            .collect();
        let plot = Plot::Histograms { title: format!("Cluster profiles (k = {})", req.k), panels };
        self.emit(&mut m, "cluster_labels", &labels, None)?;
        self.emit(&mut m, "cluster_merges", &merges, None)?;
        self.emit(&mut m, "cluster_profiles", &prof, Some(plot))?;
        self.emit(&mut m, "cluster_separation", &sep, None)?;
        m.write(&self.out)?;
        let best = separations.iter().max_by(|a, b| a.pooled_std_units.total_cmp(&b.pooled_std_units));
        Ok(format!(
            "cluster: {n} outputs into sizes {:?}, widest separation {}",
            result.sizes(),
            best.map_or("none".into(), |s| format!("{} ({:.2} pooled std)", s.column, s.pooled_std_units))
        ))
    }

    fn testdata(&self) -> Result<String, CliError> {
        let cfg = &self.cfg;
        let mut m = self.manifest();
        m.seeds.insert("train".into(), cfg.train_seed());
        let mut table = Table::new(&["layout", "n", "ensemble_score", "baseline", "ratio", "reference_overlap"]);
        let mut pairs_all = Table::new(&["layout", "n", "member_a", "member_b", "score"]);
        let mut series = Vec::new();
        let mut parts = Vec::new();
        for (i, layout) in [TestDataKind::A, TestDataKind::B].into_iter().enumerate() {
            let name = format!("{layout:?}");
            let data = gen_testdata(layout, cfg.samples, crate::rng::derive_seed(cfg.seed, i as u64)).map_err(runtime)?;
            let spec = cfg.encoder.clone().unwrap_or_else(|| crate::nn::EncoderSpec::default_vector(9, cfg.output_dim));
            let policy = cfg.augmentation.unwrap_or_else(|| crate::contrastive::AugmentationPolicy::default_for(crate::simulators::ShapeTag::Vector));
            let model = train_ensemble(&data.outputs, &spec, &cfg.train_config(), &policy).map_err(runtime)?;
            let projections = project_dataset(&model, &data.outputs).map_err(runtime)?;
            let ns = self.consensus_sizes(data.outputs.len());
            let reports = ConsensusReport::from_projections(&projections, &ns).map_err(runtime)?;
            let reference: Vec<&[f64]> = data.points.iter().map(|p| p.as_slice()).collect();
            let overlap = reference_overlap(&projections, &reference, OVERLAP_N).map_err(runtime)?;
            let overlap = overlap.iter().sum::<f64>() / overlap.len() as f64;
            for r in &reports {
                let ov = if r.n == OVERLAP_N { num(overlap) } else { String::new() };
                table.push(vec![name.clone(), r.n.to_string(), num(r.ensemble_score), num(r.baseline), num(r.ensemble_score / r.baseline), ov]);
                for a in 0..r.pairwise.len() {
                    for b in a + 1..r.pairwise.len() {
                        pairs_all.push(vec![name.clone(), r.n.to_string(), a.to_string(), b.to_string(), num(r.pairwise[a][b])]);
                    }
                }
            }
            series.push(Series {
                name: format!("layout {name}"),
                points: reports.iter().map(|r| (r.n as f64, r.ensemble_score, 0.0)).collect(),
            });
            parts.push(format!("{name}: overlap {overlap:.3}, consensus x{:.1} at n={}", reports[0].ensemble_score / reports[0].baseline, reports[0].n));
        }
        let n_points = cfg.samples;
        series.push(Series {
            name: "random".into(),
            points: self.consensus_sizes(n_points).iter().map(|&n| (n as f64, random_baseline(n, n_points), 0.0)).collect(),
        });
        let plot = Plot::Line {
            title: "Consensus on synthetic layouts".into(),
            x_label: "neighbourhood size n".into(),
            y_label: "consensus score".into(),
            series,
            base_x: None,
        };
        self.emit(&mut m, "testdata", &table, Some(plot))?;
        self.emit(&mut m, "testdata_pairs", &pairs_all, None)?;
        m.write(&self.out)?;
        Ok(format!("testdata: {}", parts.join("; ")))
    }
}

fn output_column_names(kind: Option<FamilyKind>, width: usize) -> Vec<String> {
    match kind {
        Some(FamilyKind::Abm) if width == 3 => vec!["cancer".into(), "tcell".into(), "macrophage".into()],
        Some(FamilyKind::Lv) if width == 4 => (1..=4).map(|i| format!("x{i}")).collect(),
        _ => (0..width).map(|j| format!("output_{j}")).collect(),
    }
}

fn consensus_tables(reports: &[ConsensusReport], title: &str) -> (Table, Table, Plot) {
    let mut table = Table::new(&["n", "ensemble_score", "baseline", "ratio"]);
    let mut pairs = Table::new(&["n", "member_a", "member_b", "score"]);
    for r in reports {
        table.push(vec![r.n.to_string(), num(r.ensemble_score), num(r.baseline), num(r.ensemble_score / r.baseline)]);
        for a in 0..r.pairwise.len() {
            for b in a + 1..r.pairwise.len() {
                pairs.push(vec![r.n.to_string(), a.to_string(), b.to_string(), num(r.pairwise[a][b])]);
            }
        }
    }
    let plot = Plot::Line {
        title: title.into(),
        x_label: "neighbourhood size n".into(),
        y_label: "consensus score".into(),
        series: vec![
            Series { name: "ensemble".into(), points: reports.iter().map(|r| (r.n as f64, r.ensemble_score, 0.0)).collect() },
            Series { name: "random".into(), points: reports.iter().map(|r| (r.n as f64, r.baseline, 0.0)).collect() },
        ],
        base_x: None,
    };
    (table, pairs, plot)
}

/// Sweep rows and the distance-vs-value figure. `plateau` marks the trailing
/// points of a flux sweep.
pub fn sweep_outputs(result: &SweepResult, plateau: Option<usize>) -> (Table, Plot) {
    let mut header = vec!["value", "mean", "std", "pairs", "error"];
    if plateau.is_some() {
        header.insert(4, "plateau");
    }
    let mut table = Table::new(&header);
    let count = result.points.len();
    for (i, p) in result.points.iter().enumerate() {
        let s = p.summary.as_ref();
        let mut row = vec![
            num(p.value),
            opt(s.map(|s| s.mean)),
            opt(s.map(|s| s.std)),
            s.map(|s| s.pairs.to_string()).unwrap_or_default(),
            p.error.clone().unwrap_or_default(),
        ];
        if let Some(len) = plateau {
            row.insert(4, u8::from(i + len >= count).to_string());
        }
        table.push(row);
    }
    let points =
        result.points.iter().filter_map(|p| p.summary.as_ref().map(|s| (p.value, s.mean, s.std))).collect();
    let plot = Plot::Line {
        title: format!("Distance from base vs {}", result.param_name),
        x_label: result.param_name.clone(),
        y_label: "mean ensemble distance".into(),
        series: vec![Series { name: result.param_name.clone(), points }],
        base_x: Some(result.base_value),
    };
    (table, plot)
}

/// Path of the manifest a command writes under `out`.
pub fn manifest_path(out: &Path, command: &str) -> PathBuf {
    out.join(Manifest::file_name(command))
}
