//! Batch command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 algorithm failure.
//! Every file written starts with a `#` block holding the resolved settings
//! and the canonical command line that reproduces it.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::classifiers::ClassifierKind;
use crate::dataset::{self, CsvOptions, Dataset, LabelColumn, LabelRule, Standardizer};
use crate::eval::{self, EpsilonChoice, ExperimentConfig, Method, Summary};
use crate::pufc::{self, EpsilonBand};
use crate::smuc::SmucConfig;
use crate::{Error, Label};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_ALGORITHM: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "pufc", version, about = "Positive-unlabeled learning with fuzzy clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit SMUC on a PU masking of the whole dataset and write the membership matrix.
    Cluster(ClusterArgs),
    /// Split the unlabeled set into reliable negatives, reliable positives and noise.
    Split(SplitArgs),
    /// Cross-validate one method.
    Run(RunArgs),
    /// Cross-validate PUFC over a grid of band widths.
    SweepEpsilon(SweepEpsilonArgs),
    /// Cross-validate one method over several labeled fractions.
    SweepFraction(SweepFractionArgs),
    /// Cross-validate several methods on identical folds and masks.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Label column, by name or zero-based index.
    #[arg(long, default_value = "class")]
    pub label_col: String,
    /// Raw label value mapped to +1.
    #[arg(long, required_unless_present = "label_threshold", conflicts_with = "label_threshold")]
    pub positive_label: Option<String>,
    /// Map numeric labels at most this value to +1 instead.
    #[arg(long)]
    pub label_threshold: Option<f64>,
    /// Comma-separated feature columns to drop.
    #[arg(long, value_delimiter = ',')]
    pub drop_cols: Vec<String>,
    /// Use raw features instead of z-scores.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SmucArgs {
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub eta: f64,
    #[arg(long, default_value_t = 1e-5, value_parser = positive_f64)]
    pub tol: f64,
    #[arg(long, default_value_t = 300, value_parser = positive_usize)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8, value_parser = positive_f64)]
    pub ridge: f64,
}

#[derive(Args, Debug, Clone)]
pub struct PuArgs {
    /// Fraction of training positives kept labeled.
    #[arg(long, default_value_t = 0.3, value_parser = fraction)]
    pub labeled_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct ProtocolArgs {
    #[arg(long, default_value_t = 10, value_parser = fold_count)]
    pub folds: usize,
    #[arg(long, default_value_t = ClassifierKind::NearestCentroid)]
    pub classifier: ClassifierKind,
    /// Iteration cap of the basic and pruning loops.
    #[arg(long, default_value_t = crate::baselines::DEFAULT_MAX_ITER, value_parser = positive_usize)]
    pub pu_max_iter: usize,
    #[arg(long, default_value_t = crate::baselines::DEFAULT_SPY_RATIO, value_parser = open_unit)]
    pub spy_ratio: f64,
    #[arg(long, default_value_t = crate::baselines::DEFAULT_NOISE_LEVEL, value_parser = noise_level)]
    pub noise_level: f64,
    /// Run folds one after another. Output is identical either way.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug, Clone)]
pub struct BandArgs {
    /// Band width in [0, 0.5), or `tuned` for per-fold inner cross-validation.
    #[arg(long, default_value = "tuned", value_parser = epsilon_choice)]
    pub epsilon: EpsilonArg,
    /// Candidate band widths for tuning.
    #[arg(long, value_delimiter = ',', value_parser = band_value, default_values_t = eval::DEFAULT_EPSILON_GRID)]
    pub grid: Vec<f64>,
    #[arg(long, default_value_t = eval::DEFAULT_INNER_FOLDS, value_parser = fold_count)]
    pub inner_folds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonArg {
    Fixed(f64),
    Tuned,
}

impl std::fmt::Display for EpsilonArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EpsilonArg::Fixed(e) => write!(f, "{e}"),
            EpsilonArg::Tuned => f.write_str("tuned"),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pu: PuArgs,
    #[command(flatten)]
    pub smuc: SmucArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct SplitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pu: PuArgs,
    #[command(flatten)]
    pub smuc: SmucArgs,
    #[arg(long, default_value_t = 0.1, value_parser = band_value)]
    pub epsilon: f64,
    #[arg(long, default_value_t = ClassifierKind::NearestCentroid)]
    pub classifier: ClassifierKind,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pu: PuArgs,
    #[command(flatten)]
    pub smuc: SmucArgs,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub band: BandArgs,
    #[arg(long, default_value_t = Method::Pufc)]
    pub method: Method,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct SweepEpsilonArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pu: PuArgs,
    #[command(flatten)]
    pub smuc: SmucArgs,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, value_delimiter = ',', value_parser = band_value, default_values_t = eval::DEFAULT_EPSILON_GRID)]
    pub grid: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct SweepFractionArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pu: PuArgs,
    #[command(flatten)]
    pub smuc: SmucArgs,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub band: BandArgs,
    #[arg(long, default_value_t = Method::Pufc)]
    pub method: Method,
    #[arg(long, value_delimiter = ',', value_parser = fraction, default_values_t = eval::DEFAULT_FRACTIONS)]
    pub fractions: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pu: PuArgs,
    #[command(flatten)]
    pub smuc: SmucArgs,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub band: BandArgs,
    #[arg(long, value_delimiter = ',', default_values_t = Method::ALL)]
    pub methods: Vec<Method>,
    #[arg(long)]
    pub out: PathBuf,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("expected a positive integer, got `{s}`")),
    }
}

fn fold_count(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 2 => Ok(v),
        _ => Err(format!("expected an integer of at least 2, got `{s}`")),
    }
}

fn fraction(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v <= 1.0 => Ok(v),
        _ => Err(format!("expected a fraction in (0, 1], got `{s}`")),
    }
}

fn open_unit(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err(format!("expected a value in (0, 1), got `{s}`")),
    }
}

fn noise_level(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..1.0).contains(&v) => Ok(v),
        _ => Err(format!("expected a value in [0, 1), got `{s}`")),
    }
}

fn band_value(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("expected a number, got `{s}`"))?;
    EpsilonBand::new(v).map(EpsilonBand::epsilon).map_err(|e| e.to_string())
}

fn epsilon_choice(s: &str) -> Result<EpsilonArg, String> {
    if s == "tuned" {
        Ok(EpsilonArg::Tuned)
    } else {
        band_value(s).map(EpsilonArg::Fixed)
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        _ if e.is_algorithmic() => EXIT_ALGORITHM,
        Error::Io { .. }
        | Error::Csv { .. }
        | Error::Parse { .. }
        | Error::MissingColumn(_)
        | Error::InvalidDataset(_) => EXIT_DATA,
        Error::InvalidArgument(_) | Error::Unknown { .. } => EXIT_USAGE,
        _ => EXIT_ALGORITHM,
    }
}

enum Failure {
    Lib(Error),
    Algorithm(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Cluster(a) => cmd_cluster(a),
        Command::Split(a) => cmd_split(a),
        Command::Run(a) => cmd_run(a),
        Command::SweepEpsilon(a) => cmd_sweep_epsilon(a),
        Command::SweepFraction(a) => cmd_sweep_fraction(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Err(Failure::Algorithm(msg)) => {
            eprintln!("error: {msg}");
            EXIT_ALGORITHM
        }
    }
}

/// Resolved settings in canonical flag order.
struct Resolved {
    subcommand: &'static str,
    settings: Vec<(&'static str, String)>,
    switches: Vec<(&'static str, bool)>,
}

impl Resolved {
    fn new(subcommand: &'static str) -> Self {
        Resolved { subcommand, settings: Vec::new(), switches: Vec::new() }
    }

    fn set(&mut self, flag: &'static str, value: impl ToString) -> &mut Self {
        self.settings.push((flag, value.to_string()));
        self
    }

    fn list<T: ToString>(&mut self, flag: &'static str, values: &[T]) -> &mut Self {
        let joined: Vec<String> = values.iter().map(ToString::to_string).collect();
        self.set(flag, joined.join(","))
    }

    fn data(&mut self, d: &DataArgs) -> &mut Self {
        self.set("dataset", d.dataset.display()).set("label-col", &d.label_col);
        match (&d.positive_label, d.label_threshold) {
            (_, Some(t)) => self.set("label-threshold", t),
            (Some(p), None) => self.set("positive-label", p),
            (None, None) => self,
        };
        if !d.drop_cols.is_empty() {
            self.list("drop-cols", &d.drop_cols);
        }
        self.switches.push(("no-standardize", d.no_standardize));
        self
    }

    fn pu(&mut self, p: &PuArgs) -> &mut Self {
        self.set("labeled-frac", p.labeled_frac).set("seed", p.seed)
    }

    fn smuc(&mut self, s: &SmucArgs) -> &mut Self {
        self.set("eta", s.eta).set("tol", s.tol).set("max-iter", s.max_iter).set("ridge", s.ridge)
    }

    fn protocol(&mut self, p: &ProtocolArgs) -> &mut Self {
        self.set("folds", p.folds)
            .set("classifier", p.classifier)
            .set("pu-max-iter", p.pu_max_iter)
            .set("spy-ratio", p.spy_ratio)
            .set("noise-level", p.noise_level)
    }

    fn band(&mut self, b: &BandArgs) -> &mut Self {
        self.set("epsilon", b.epsilon).list("grid", &b.grid).set("inner-folds", b.inner_folds)
    }

    fn command_line(&self) -> String {
        let mut words = vec!["pufc".to_string(), self.subcommand.to_string()];
        for (flag, value) in &self.settings {
            words.push(format!("--{flag}"));
            words.push(shell_quote(value));
        }
        for (flag, on) in &self.switches {
            if *on {
                words.push(format!("--{flag}"));
            }
        }
        words.join(" ")
    }

    fn header(&self, d: &Dataset) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# pufc {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# command: {}", self.command_line());
        for (flag, value) in &self.settings {
            let _ = writeln!(out, "# {flag} = {value}");
        }
        for (flag, on) in &self.switches {
            let _ = writeln!(out, "# {flag} = {on}");
        }
        let _ = writeln!(
            out,
            "# data: {} n={} d={} positives={}",
            d.name,
            d.n_instances(),
            d.n_features(),
            d.positive_count()
        );
        out
    }
}

fn shell_quote(s: &str) -> String {
    let plain = !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_./,:=+@%".contains(c));
    if plain {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', "'\\''"))
    }
}

fn load(d: &DataArgs) -> Result<Dataset, Error> {
    let label_rule = match (&d.positive_label, d.label_threshold) {
        (_, Some(t)) => LabelRule::AtMost(t),
        (Some(p), None) => LabelRule::Equals(p.clone()),
        (None, None) => return Err(Error::InvalidArgument("give --positive-label or --label-threshold".into())),
    };
    dataset::load_csv_with(
        &d.dataset,
        &CsvOptions {
            label_column: LabelColumn::from_arg(&d.label_col),
            label_rule,
            drop_columns: d.drop_cols.clone(),
        },
    )
}

fn smuc_config(s: &SmucArgs) -> SmucConfig {
    SmucConfig { eta: s.eta, tol: s.tol, max_iter: s.max_iter, ridge: s.ridge }
}

fn experiment_config(
    pu: &PuArgs,
    smuc: &SmucArgs,
    protocol: &ProtocolArgs,
    band: Option<&BandArgs>,
    standardize: bool,
) -> ExperimentConfig {
    let epsilon = match band {
        Some(BandArgs { epsilon: EpsilonArg::Fixed(e), .. }) => EpsilonChoice::Fixed(*e),
        Some(BandArgs { epsilon: EpsilonArg::Tuned, grid, inner_folds }) => {
            EpsilonChoice::Tuned { grid: grid.clone(), inner_folds: *inner_folds }
        }
        None => EpsilonChoice::Fixed(0.1),
    };
    ExperimentConfig {
        method: Method::Pufc,
        labeled_fraction: pu.labeled_frac,
        epsilon,
        folds: protocol.folds,
        seed: pu.seed,
        classifier: protocol.classifier,
        smuc: smuc_config(smuc),
        spy_ratio: protocol.spy_ratio,
        noise_level: protocol.noise_level,
        pu_max_iter: protocol.pu_max_iter,
        standardize,
        parallel: !protocol.sequential,
    }
}

struct Output<'a> {
    dir: &'a Path,
    header: String,
}

impl Output<'_> {
    fn create(dir: &Path, header: String) -> Result<Output<'_>, Error> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })?;
        Ok(Output { dir, header })
    }

    fn write(&self, name: &str, body: &str) -> Result<(), Error> {
        let path = self.dir.join(name);
        let text = format!("{}{}", self.header, body);
        std::fs::write(&path, text).map_err(|source| Error::Io { path, source })
    }
}

fn whole_dataset_view(
    d: &Dataset,
    data: &DataArgs,
    pu: &PuArgs,
) -> Result<(ndarray::Array2<f64>, dataset::PuView), Error> {
    let all: Vec<usize> = (0..d.n_instances()).collect();
    let x =
        if data.no_standardize { d.features.clone() } else { Standardizer::fit(&d.features, &all)?.apply(&d.features) };
    let view = dataset::make_pu_view(d, &all, pu.labeled_frac, pu.seed)?;
    Ok((x, view))
}

fn label_str(l: Label) -> &'static str {
    match l {
        Label::Positive => "+1",
        Label::Negative => "-1",
    }
}

fn cmd_cluster(a: &ClusterArgs) -> Result<(), Failure> {
    let mut r = Resolved::new("cluster");
    r.data(&a.data).pu(&a.pu).smuc(&a.smuc).set("out", a.out.display());
    let d = load(&a.data)?;
    let (x, view) = whole_dataset_view(&d, &a.data, &a.pu)?;
    let clustering = pufc::cluster(&x, &view, &smuc_config(&a.smuc))?;

    let out = Output::create(&a.out, r.header(&d))?;
    let u = clustering.smuc.memberships.values();
    let mut csv = String::from("index,role,truth,u0,u1\n");
    let roles = view.positive.iter().map(|&i| (i, "P")).chain(view.unlabeled.iter().map(|&i| (i, "U")));
    for (row, (i, role)) in roles.enumerate() {
        let _ = writeln!(csv, "{i},{role},{},{},{}", label_str(d.labels[i]), u[[row, 0]], u[[row, 1]]);
    }
    out.write("memberships.csv", &csv)?;
    out.write("smuc.txt", &clustering.smuc.report())?;
    out.write("pu_view.manifest", &view.to_manifest())?;
    println!("{}", clustering.smuc.report().lines().next().unwrap_or_default());
    Ok(())
}

fn cmd_split(a: &SplitArgs) -> Result<(), Failure> {
    let mut r = Resolved::new("split");
    r.data(&a.data)
        .pu(&a.pu)
        .smuc(&a.smuc)
        .set("epsilon", a.epsilon)
        .set("classifier", a.classifier)
        .set("out", a.out.display());
    let d = load(&a.data)?;
    let (x, view) = whole_dataset_view(&d, &a.data, &a.pu)?;
    let clustering = pufc::cluster(&x, &view, &smuc_config(&a.smuc))?;
    let model = clustering.finish(EpsilonBand::new(a.epsilon)?, a.classifier)?;

    let mut set_of = vec![""; view.unlabeled.len()];
    for (name, members) in [("rn", &model.split.rn), ("rp", &model.split.rp), ("noise", &model.split.noise)] {
        for &j in members {
            set_of[j] = name;
        }
    }
    let mut csv = String::from("index,truth,u_plus,fuzziness,set,label\n");
    for (&i, label) in view.positive.iter().zip(&model.labeled) {
        let _ = writeln!(csv, "{i},{},1,0,p,{}", label_str(d.labels[i]), label_str(label.1));
    }
    for (j, &i) in view.unlabeled.iter().enumerate() {
        let u = clustering.u_plus[j];
        let _ = writeln!(
            csv,
            "{i},{},{u},{},{},{}",
            label_str(d.labels[i]),
            pufc::fuzziness(u)?,
            set_of[j],
            label_str(model.labeled[view.positive.len() + j].1)
        );
    }
    let report = model.report(Some(&view.unlabeled_truth));
    let out = Output::create(&a.out, r.header(&d))?;
    out.write("split.csv", &csv)?;
    out.write("split.txt", &report)?;
    out.write("pu_view.manifest", &view.to_manifest())?;
    print!("{report}");
    Ok(())
}

fn folds_csv(summaries: &[&Summary]) -> String {
    let mut csv = format!("{}\n", eval::FOLD_CSV_HEADER);
    for s in summaries {
        csv.push_str(&eval::fold_rows(s));
    }
    csv
}

fn summary_csv(summaries: &[&Summary]) -> String {
    let mut csv = format!("{}\n", eval::SUMMARY_CSV_HEADER);
    for s in summaries {
        csv.push_str(&eval::summary_row(s));
    }
    csv
}

fn pu_manifests(s: &Summary) -> String {
    let mut out = String::new();
    for f in &s.folds {
        let _ = writeln!(out, "# fold {}", f.fold);
        out.push_str(&f.pu_manifest);
    }
    out
}

fn cmd_run(a: &RunArgs) -> Result<(), Failure> {
    let mut r = Resolved::new("run");
    r.data(&a.data).pu(&a.pu).smuc(&a.smuc).protocol(&a.protocol).set("method", a.method);
    if a.method == Method::Pufc {
        r.band(&a.band);
    }
    r.set("out", a.out.display());
    let d = load(&a.data)?;
    let cfg = ExperimentConfig {
        method: a.method,
        ..experiment_config(&a.pu, &a.smuc, &a.protocol, Some(&a.band), !a.data.no_standardize)
    };
    let s = eval::run_cv_experiment(&d, &cfg)?;

    let mut report = format!("{} {} {}: F = {}%\n", s.dataset, s.method, s.classifier, s.cell());
    for f in s.folds.iter().filter(|f| !f.flags.is_empty()) {
        let _ = writeln!(report, "fold {}: {}", f.fold, f.flags.join("; "));
    }
    let out = Output::create(&a.out, r.header(&d))?;
    out.write("folds.csv", &folds_csv(&[&s]))?;
    out.write("summary.csv", &summary_csv(&[&s]))?;
    out.write("report.txt", &report)?;
    out.write("folds.manifest", &s.fold_manifest)?;
    out.write("pu_views.manifest", &pu_manifests(&s))?;
    print!("{report}");
    match s.failed_folds() {
        0 => Ok(()),
        k => Err(Failure::Algorithm(format!("{k} of {} folds failed", s.folds.len()))),
    }
}

fn cmd_sweep_epsilon(a: &SweepEpsilonArgs) -> Result<(), Failure> {
    let mut r = Resolved::new("sweep-epsilon");
    r.data(&a.data).pu(&a.pu).smuc(&a.smuc).protocol(&a.protocol).list("grid", &a.grid).set("out", a.out.display());
    let d = load(&a.data)?;
    let cfg = experiment_config(&a.pu, &a.smuc, &a.protocol, None, !a.data.no_standardize);
    let sweep = eval::epsilon_sweep(&d, &a.grid, &cfg)?;
    write_sweep(
        &r,
        &d,
        &a.out,
        &sweep.summaries,
        &sweep.text_table(),
        &format!("best epsilon: {}\n", sweep.values[sweep.best()]),
    )
}

fn cmd_sweep_fraction(a: &SweepFractionArgs) -> Result<(), Failure> {
    let mut r = Resolved::new("sweep-fraction");
    r.data(&a.data).pu(&a.pu).smuc(&a.smuc).protocol(&a.protocol).set("method", a.method);
    if a.method == Method::Pufc {
        r.band(&a.band);
    }
    r.list("fractions", &a.fractions).set("out", a.out.display());
    let d = load(&a.data)?;
    let cfg = ExperimentConfig {
        method: a.method,
        ..experiment_config(&a.pu, &a.smuc, &a.protocol, Some(&a.band), !a.data.no_standardize)
    };
    let sweep = eval::fraction_sweep(&d, &a.fractions, &cfg)?;
    write_sweep(&r, &d, &a.out, &sweep.summaries, &sweep.text_table(), "")
}

fn cmd_compare(a: &CompareArgs) -> Result<(), Failure> {
    let mut r = Resolved::new("compare");
    r.data(&a.data).pu(&a.pu).smuc(&a.smuc).protocol(&a.protocol).band(&a.band).list("methods", &a.methods);
    r.set("out", a.out.display());
    let d = load(&a.data)?;
    let cfg = experiment_config(&a.pu, &a.smuc, &a.protocol, Some(&a.band), !a.data.no_standardize);
    let cmp = eval::compare_methods(&d, &a.methods, &cfg)?;
    write_sweep(&r, &d, &a.out, &cmp.summaries, &cmp.text_table(), "")
}

fn write_sweep(
    r: &Resolved,
    d: &Dataset,
    dir: &Path,
    summaries: &[Summary],
    table: &str,
    extra: &str,
) -> Result<(), Failure> {
    let refs: Vec<&Summary> = summaries.iter().collect();
    let mut text = format!("{table}{extra}");
    let failed: usize = summaries.iter().map(Summary::failed_folds).sum();
    if failed > 0 {
        let _ = writeln!(text, "failed folds: {failed} (scored F = 0)");
    }
    let out = Output::create(dir, r.header(d))?;
    out.write("folds.csv", &folds_csv(&refs))?;
    out.write("summary.csv", &summary_csv(&refs))?;
    out.write("table.txt", &text)?;
    if let Some(first) = summaries.first() {
        out.write("folds.manifest", &first.fold_manifest)?;
    }
    print!("{text}");
    Ok(())
}
