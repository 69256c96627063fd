//! Command-line front end for the reliability toolkit: orchestrates
//! ingest → series → fits → goodness-of-fit and emits versioned JSON
//! reports, rendered tables, and plot-data CSV files.
//!
//! Exit codes: 0 success, 2 empty or unusable input, 3 no requested fit
//! converged, 64 usage error.

pub mod report;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use relgrow_core::series::{cumulative, group, normalize_times, split_by_major_version};
use relgrow_core::{
    dist, gof, srgm, CvmTable, DistFamily, DistFit, FailureEvent, FitOptions, GroupedCounts,
    Noise, NormalizedTimes, SrgmKind, TimeUnit,
};
use sha2::{Digest, Sha256};

use report::{
    AnalysisReport, DistFitEntry, GofEntry, InputStamp, MajorVersionField, Ranking, SrgmFitEntry,
    SCHEMA_VERSION,
};

pub const EXIT_OK: i32 = 0;
/// Input was empty, malformed, or matched nothing.
pub const EXIT_EMPTY: i32 = 2;
/// Every requested fit failed; details are in the written report.
pub const EXIT_NO_FIT: i32 = 3;
/// Flags or arguments were invalid.
pub const EXIT_USAGE: i32 = 64;

/// Parses `args` and runs the requested command, returning the process
/// exit code. `main` is a one-line wrapper over this so integration
/// tests can drive the CLI in-process.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // clap routes help/version to stdout and errors to stderr.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            eprintln!("error: {}", failure.msg);
            failure.code
        }
    }
}

/// A command failure carrying its exit code; the message goes to stderr.
#[derive(Debug)]
struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, msg: msg.into() }
    }

    fn input(msg: impl Into<String>) -> Self {
        Self { code: EXIT_EMPTY, msg: msg.into() }
    }

    fn no_fit(msg: impl Into<String>) -> Self {
        Self { code: EXIT_NO_FIT, msg: msg.into() }
    }

    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::input(format!("{}: {err}", path.display()))
    }
}

#[derive(Parser)]
#[command(
    name = "relgrow",
    version,
    about = "Reliability-growth analysis of application crash data",
    propagate_version = true
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Significance level for goodness-of-fit tests.
    #[arg(long, global = true, default_value_t = 0.1, value_name = "A")]
    alpha: f64,
    /// Seed for simulation and optimizer restarts (default 0).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Omit the generation timestamp so outputs are byte-reproducible.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse crash logs or a counts CSV into a canonical input file.
    Ingest(IngestArgs),
    /// Group failures and fit the requested models.
    Fit(FitArgs),
    /// Generate synthetic event times or failure counts.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Render a saved analysis report.
    Report(ReportArgs),
}

#[derive(Args)]
#[command(group = ArgGroup::new("source").required(true).args(["logs", "csv"]))]
struct IngestArgs {
    /// Directory of crash-report text files.
    #[arg(long, value_name = "DIR")]
    logs: Option<PathBuf>,
    /// Pre-binned counts CSV (`bin_index,count[,label]`).
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Output file: events JSON for --logs, canonical CSV for --csv.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
#[command(group = ArgGroup::new("input").required(true).args(["events", "counts", "times"]))]
struct FitArgs {
    /// Events JSON produced by `ingest --logs`.
    #[arg(long, value_name = "FILE")]
    events: Option<PathBuf>,
    /// Pre-binned counts CSV (`bin_index,count[,label]`).
    #[arg(long, value_name = "FILE")]
    counts: Option<PathBuf>,
    /// Raw event times as a JSON array (e.g. from `simulate nhpp`).
    #[arg(long, value_name = "FILE")]
    times: Option<PathBuf>,
    /// Keep only this application's events (--events input).
    #[arg(long, value_name = "ID")]
    app: Option<String>,
    /// Keep only this major version: a number or `unknown` (--events input).
    #[arg(long, value_name = "N")]
    major: Option<String>,
    /// Calendar grouping width for --events input [default: week].
    #[arg(long, value_name = "UNIT")]
    unit: Option<TimeUnit>,
    /// Failure-count families to fit, comma-separated:
    /// weibull, gamma, rayleigh, sshaped. Needs binned counts.
    #[arg(long, value_enum, value_delimiter = ',', value_name = "LIST")]
    families: Vec<FamilyArg>,
    /// SRGM kinds to fit on exact (normalized) event times,
    /// comma-separated: nhpp, musa-basic, musa-okumoto, power-law.
    #[arg(long, value_enum, value_delimiter = ',', value_name = "LIST")]
    srgm: Vec<SrgmArg>,
    /// Report output file (JSON).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also write actual-vs-fitted cumulative curves as CSV.
    #[arg(long, value_name = "FILE")]
    plot_data: Option<PathBuf>,
    /// Rank successful family fits by a metric.
    #[arg(long, value_enum, value_name = "METRIC")]
    rank: Option<RankArg>,
    /// Fit integrated per-bin masses instead of point densities.
    #[arg(long)]
    integrated: bool,
    /// Extra jittered optimizer starts per family fit.
    #[arg(long, default_value_t = 0, value_name = "N")]
    restarts: usize,
    /// Custom Cramér–von Mises critical-value table (CSV `m,alpha,critical`).
    #[arg(long, value_name = "FILE")]
    cvm_table: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SimulateCmd {
    /// Draw NHPP event times on [0, horizon], reproducibly per seed.
    Nhpp(SimNhppArgs),
    /// Synthesize per-bin failure counts, reproducibly per seed.
    Counts(SimCountsArgs),
}

#[derive(Args)]
struct SimNhppArgs {
    /// Model form: exp (alias nhpp), musa-basic, musa-okumoto, power-law.
    #[arg(long, value_enum, value_name = "KIND")]
    model: SrgmArg,
    /// Scale parameter (N, beta0, or lambda).
    #[arg(long, value_name = "X")]
    scale: f64,
    /// Rate parameter (b, beta1, or beta).
    #[arg(long, value_name = "X")]
    rate: f64,
    /// End of the observation window.
    #[arg(long, default_value_t = 1.0, value_name = "T")]
    horizon: f64,
    /// Output JSON file (array of event times).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct SimCountsArgs {
    /// Distribution family: weibull, gamma, rayleigh, sshaped.
    #[arg(long, value_enum, value_name = "FAMILY")]
    family: FamilyArg,
    /// Parameter `a` (Weibull scale / Gamma shape; fixed at 2 for sshaped).
    #[arg(long, value_name = "X")]
    a: Option<f64>,
    /// Parameter `b` (Weibull shape / Gamma scale; fixed at 2 for rayleigh).
    #[arg(long, value_name = "X")]
    b: Option<f64>,
    /// Total defect volume C.
    #[arg(long, value_name = "X")]
    c: f64,
    /// Number of bins.
    #[arg(long, value_name = "K")]
    bins: usize,
    /// Noise model applied to the expected counts.
    #[arg(long, value_enum, default_value_t = NoiseArg::None, value_name = "KIND")]
    noise: NoiseArg,
    /// Output counts CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Report JSON produced by `fit`.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Table, value_name = "FMT")]
    format: FormatArg,
    /// Write to a file instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Weibull,
    Gamma,
    Rayleigh,
    #[value(name = "sshaped", alias = "s-shaped")]
    SShaped,
}

impl From<FamilyArg> for DistFamily {
    fn from(arg: FamilyArg) -> Self {
        match arg {
            FamilyArg::Weibull => DistFamily::Weibull,
            FamilyArg::Gamma => DistFamily::Gamma,
            FamilyArg::Rayleigh => DistFamily::Rayleigh,
            FamilyArg::SShaped => DistFamily::SShaped,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SrgmArg {
    /// Exponential saturating mean value (Goel–Okumoto form).
    #[value(name = "nhpp", alias = "nhpp-exponential", alias = "exp")]
    Nhpp,
    MusaBasic,
    MusaOkumoto,
    #[value(name = "power-law", alias = "power")]
    PowerLaw,
}

impl From<SrgmArg> for SrgmKind {
    fn from(arg: SrgmArg) -> Self {
        match arg {
            SrgmArg::Nhpp => SrgmKind::NhppExponential,
            SrgmArg::MusaBasic => SrgmKind::MusaBasic,
            SrgmArg::MusaOkumoto => SrgmKind::MusaOkumoto,
            SrgmArg::PowerLaw => SrgmKind::PowerLaw,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum NoiseArg {
    /// Exact expected counts, rounded to whole failures for the CSV.
    None,
    /// Independent Poisson draws with the model means.
    Poisson,
}

impl From<NoiseArg> for Noise {
    fn from(arg: NoiseArg) -> Self {
        match arg {
            NoiseArg::None => Noise::None,
            NoiseArg::Poisson => Noise::Poisson,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RankArg {
    Rmse,
    Mre,
    #[value(name = "adj-r-square")]
    AdjRSquare,
}

impl RankArg {
    fn name(self) -> &'static str {
        match self {
            RankArg::Rmse => "rmse",
            RankArg::Mre => "mre",
            RankArg::AdjRSquare => "adj-r-square",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Json,
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let alpha = cli.global.alpha;
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
        return Err(Failure::usage(format!("--alpha must be in (0, 1), got {alpha}")));
    }
    match &cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Fit(args) => cmd_fit(&cli.global, args),
        Command::Simulate(sim) => cmd_simulate(&cli.global, sim),
        Command::Report(args) => cmd_report(args),
    }
}

// ---------------------------------------------------------------- ingest

fn cmd_ingest(args: &IngestArgs) -> Result<(), Failure> {
    match (&args.logs, &args.csv) {
        (Some(dir), None) => {
            let (events, failures) =
                relgrow_core::ingest::parse_crash_log_dir(dir).map_err(|e| Failure::io(dir, e))?;
            for (path, err) in &failures {
                eprintln!("warning: {}: {err}", path.display());
            }
            if !failures.is_empty() {
                eprintln!("warning: skipped {} unparseable file(s)", failures.len());
            }
            if events.is_empty() {
                return Err(Failure::input(format!(
                    "no crash reports parsed from {}",
                    dir.display()
                )));
            }
            let json = to_pretty_json(&events)?;
            atomic_write(&args.out, json.as_bytes())?;
            println!("wrote {} events to {}", events.len(), args.out.display());
            Ok(())
        }
        (None, Some(csv)) => {
            let counts =
                relgrow_core::ingest::read_counts_csv(csv).map_err(|e| Failure::io(csv, e))?;
            if counts.total() <= 0.0 {
                return Err(Failure::input(format!(
                    "{}: counts file holds no failures",
                    csv.display()
                )));
            }
            let text = counts.to_csv_string().map_err(|e| Failure::io(csv, e))?;
            atomic_write(&args.out, text.as_bytes())?;
            println!(
                "wrote {} bins ({} failures) to {}",
                counts.len(),
                counts.total(),
                args.out.display()
            );
            Ok(())
        }
        // clap's arg group guarantees exactly one source.
        _ => unreachable!("arg group enforces exactly one of --logs/--csv"),
    }
}

// ------------------------------------------------------------------- fit

/// Major-version selector parsed from `--major`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MajorSelector {
    Unknown,
    Known(u32),
}

fn parse_major(raw: &str) -> Result<MajorSelector, Failure> {
    if raw == "unknown" {
        return Ok(MajorSelector::Unknown);
    }
    raw.parse()
        .map(MajorSelector::Known)
        .map_err(|_| Failure::usage(format!("--major must be a number or `unknown`, got {raw:?}")))
}

/// What kind of file `fit` consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InputKind {
    Events,
    Counts,
    Times,
}

impl InputKind {
    fn name(self) -> &'static str {
        match self {
            InputKind::Events => "events",
            InputKind::Counts => "counts",
            InputKind::Times => "times",
        }
    }
}

/// The fit command's input, loaded and reduced to the two analysis views.
struct LoadedInput {
    kind: InputKind,
    stamp: InputStamp,
    counts: Option<GroupedCounts>,
    /// Normalized event times, or the reason they are unavailable.
    times: Result<NormalizedTimes, String>,
    app_id: Option<String>,
    major_version: MajorVersionField,
    unit: Option<TimeUnit>,
    n_events: Option<usize>,
}

fn stamp_input(path: &Path, kind: InputKind) -> Result<(Vec<u8>, InputStamp), Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect::<String>();
    let stamp = InputStamp { path: path.display().to_string(), sha256, kind: kind.name().into() };
    Ok((bytes, stamp))
}

fn load_events_input(args: &FitArgs, path: &Path) -> Result<LoadedInput, Failure> {
    let (bytes, stamp) = stamp_input(path, InputKind::Events)?;
    let events: Vec<FailureEvent> = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::input(format!("{}: not a valid events file: {e}", path.display())))?;
    let events: Vec<FailureEvent> = match &args.app {
        Some(app) => events.into_iter().filter(|e| &e.app_id == app).collect(),
        None => events,
    };
    if events.is_empty() {
        let hint = args.app.as_deref().map_or(String::new(), |a| format!(" for --app {a}"));
        return Err(Failure::input(format!("{}: no events{hint}", path.display())));
    }

    let mut series_list = split_by_major_version(&events);
    if let Some(raw) = &args.major {
        let selector = parse_major(raw)?;
        series_list.retain(|s| match selector {
            MajorSelector::Unknown => s.major_version.is_none(),
            MajorSelector::Known(n) => s.major_version == Some(n),
        });
    }
    let series = match series_list.len() {
        0 => {
            return Err(Failure::input(format!(
                "{}: no series matches --major {}",
                path.display(),
                args.major.as_deref().unwrap_or("?")
            )))
        }
        1 => series_list.remove(0),
        _ => {
            let mut msg = format!(
                "{}: input holds {} series; narrow the selection:",
                path.display(),
                series_list.len()
            );
            for s in &series_list {
                let major = s.major_version.map_or("unknown".to_string(), |m| m.to_string());
                let plural = if s.len() == 1 { "" } else { "s" };
                msg.push_str(&format!(
                    "\n  --app {} --major {} ({} event{plural})",
                    s.app_id,
                    major,
                    s.len()
                ));
            }
            return Err(Failure::usage(msg));
        }
    };

    let unit = args.unit.unwrap_or(TimeUnit::Week);
    let counts = group(&series, unit)
        .map_err(|e| Failure::input(format!("grouping failed: {e}")))?;
    let times = normalize_times(&series).map_err(|e| e.to_string());
    Ok(LoadedInput {
        kind: InputKind::Events,
        stamp,
        counts: Some(counts),
        times,
        app_id: Some(series.app_id.clone()),
        major_version: series
            .major_version
            .map_or(MajorVersionField::Unknown, MajorVersionField::Known),
        unit: Some(unit),
        n_events: Some(series.len()),
    })
}

fn load_counts_input(path: &Path) -> Result<LoadedInput, Failure> {
    let (_, stamp) = stamp_input(path, InputKind::Counts)?;
    let counts = relgrow_core::ingest::read_counts_csv(path).map_err(|e| Failure::io(path, e))?;
    if counts.total() <= 0.0 {
        return Err(Failure::input(format!("{}: counts file holds no failures", path.display())));
    }
    let unit = counts.unit;
    Ok(LoadedInput {
        kind: InputKind::Counts,
        stamp,
        counts: Some(counts),
        times: Err("grouped counts carry no exact event times".into()),
        app_id: None,
        major_version: MajorVersionField::NotApplicable,
        unit,
        n_events: None,
    })
}

fn load_times_input(path: &Path) -> Result<LoadedInput, Failure> {
    let (bytes, stamp) = stamp_input(path, InputKind::Times)?;
    let raw: Vec<f64> = serde_json::from_slice(&bytes).map_err(|e| {
        Failure::input(format!("{}: not a JSON array of times: {e}", path.display()))
    })?;
    let times = NormalizedTimes::from_raw(&raw)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let n = times.len();
    Ok(LoadedInput {
        kind: InputKind::Times,
        stamp,
        counts: None,
        times: Ok(times),
        app_id: None,
        major_version: MajorVersionField::NotApplicable,
        unit: None,
        n_events: Some(n),
    })
}

/// Checks flag coherence that clap groups cannot express, then loads.
fn load_fit_input(args: &FitArgs) -> Result<LoadedInput, Failure> {
    let kind = match (&args.events, &args.counts, &args.times) {
        (Some(_), None, None) => InputKind::Events,
        (None, Some(_), None) => InputKind::Counts,
        (None, None, Some(_)) => InputKind::Times,
        _ => unreachable!("arg group enforces exactly one input"),
    };
    if kind != InputKind::Events {
        for (given, flag) in [
            (args.app.is_some(), "--app"),
            (args.major.is_some(), "--major"),
            (args.unit.is_some(), "--unit"),
        ] {
            if given {
                return Err(Failure::usage(format!("{flag} applies to --events input only")));
            }
        }
    }
    if kind == InputKind::Times && !args.families.is_empty() {
        return Err(Failure::usage(
            "distribution families fit grouped counts; use --events or --counts with --families",
        ));
    }
    if kind == InputKind::Counts && !args.srgm.is_empty() {
        return Err(Failure::usage(
            "SRGMs fit exact event times, which grouped counts have lost; \
             use --events or --times with --srgm",
        ));
    }
    if kind == InputKind::Times && args.plot_data.is_some() {
        return Err(Failure::usage("--plot-data needs binned counts (--events or --counts input)"));
    }
    match kind {
        InputKind::Events => load_events_input(args, args.events.as_ref().expect("checked")),
        InputKind::Counts => load_counts_input(args.counts.as_ref().expect("checked")),
        InputKind::Times => load_times_input(args.times.as_ref().expect("checked")),
    }
}

fn dedup_preserve<T: PartialEq>(items: Vec<T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(items.len());
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

fn rank_fits(entries: &[DistFitEntry], metric: RankArg) -> Ranking {
    let mut scored: Vec<(&DistFitEntry, &DistFit)> =
        entries.iter().filter_map(|e| e.result.as_ref().map(|f| (e, f))).collect();
    match metric {
        RankArg::Rmse => scored.sort_by(|x, y| x.1.rmse.total_cmp(&y.1.rmse)),
        RankArg::Mre => scored.sort_by(|x, y| x.1.mre.total_cmp(&y.1.mre)),
        // Higher adjusted R² is better; fits without one rank last.
        RankArg::AdjRSquare => scored.sort_by(|x, y| {
            let key = |f: &DistFit| f.adj_r_square.unwrap_or(f64::NEG_INFINITY);
            key(y.1).total_cmp(&key(x.1))
        }),
    }
    Ranking {
        metric: metric.name().into(),
        order: scored.iter().map(|(e, _)| e.family.to_string()).collect(),
    }
}

fn plot_data_csv(
    counts: &GroupedCounts,
    dist_entries: &[DistFitEntry],
    srgm_entries: &[SrgmFitEntry],
) -> String {
    let k = counts.len();
    let dist_ok: Vec<(&DistFitEntry, &DistFit)> =
        dist_entries.iter().filter_map(|e| e.result.as_ref().map(|f| (e, f))).collect();
    let srgm_ok: Vec<&SrgmFitEntry> =
        srgm_entries.iter().filter(|e| e.result.is_some()).collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string(), "observed".to_string()];
    header.extend(dist_ok.iter().map(|(e, _)| e.family.to_string()));
    header.extend(srgm_ok.iter().map(|e| e.kind.to_string()));
    w.write_record(&header).expect("writing to memory");

    let observed = cumulative(counts);
    for (i, (_, obs)) in observed.iter().enumerate() {
        let t = i + 1;
        let mut row = vec![t.to_string(), format!("{obs}")];
        for (_, fit) in &dist_ok {
            row.push(format!("{}", dist::predicted_cumulative(fit, t as f64)));
        }
        for entry in &srgm_ok {
            let fit = entry.result.as_ref().expect("filtered to successes");
            // Map bin edges onto the normalized observation window.
            let t_norm = t as f64 / k as f64 * fit.observation_end;
            row.push(format!("{}", fit.model.mean_value(t_norm)));
        }
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writer flushed")).expect("CSV is UTF-8")
}

fn cmd_fit(global: &GlobalOpts, args: &FitArgs) -> Result<(), Failure> {
    let input = load_fit_input(args)?;

    let mut families: Vec<DistFamily> =
        dedup_preserve(args.families.iter().copied().map(Into::into).collect());
    let mut kinds: Vec<SrgmKind> =
        dedup_preserve(args.srgm.iter().copied().map(Into::into).collect());
    // With no explicit request, fit everything the input supports.
    if families.is_empty() && kinds.is_empty() {
        if input.counts.is_some() {
            families = DistFamily::ALL.to_vec();
        }
        if matches!(input.kind, InputKind::Events | InputKind::Times) {
            kinds = SrgmKind::ALL.to_vec();
        }
    }

    let cvm_table = match &args.cvm_table {
        Some(path) => Some(CvmTable::from_csv_path(path).map_err(|e| Failure::io(path, e))?),
        None => None,
    };

    let fit_options = FitOptions {
        integrated: args.integrated,
        restarts: args.restarts,
        seed: global.seed.unwrap_or(0),
    };

    let dist_entries: Vec<DistFitEntry> = families
        .iter()
        .map(|&family| {
            let counts = input.counts.as_ref().expect("families imply binned counts");
            match dist::fit_with(counts, family, &fit_options) {
                Ok(fit) => DistFitEntry { family, result: Some(fit), error: None },
                Err(e) => DistFitEntry { family, result: None, error: Some(e.to_string()) },
            }
        })
        .collect();

    let srgm_entries: Vec<SrgmFitEntry> = kinds
        .iter()
        .map(|&kind| match &input.times {
            Ok(times) => match srgm::fit_mle(times, kind) {
                Ok(fit) => SrgmFitEntry { kind, result: Some(fit), error: None },
                Err(e) => SrgmFitEntry { kind, result: None, error: Some(e.to_string()) },
            },
            Err(reason) => SrgmFitEntry { kind, result: None, error: Some(reason.clone()) },
        })
        .collect();

    for entry in &dist_entries {
        match (&entry.result, &entry.error) {
            (Some(fit), _) => println!(
                "fit {}: ok (C = {:.4}, rmse = {:.4})",
                entry.family, fit.c.estimate, fit.rmse
            ),
            (None, err) => println!(
                "fit {}: FAILED: {}",
                entry.family,
                err.as_deref().unwrap_or("unknown")
            ),
        }
    }
    for entry in &srgm_entries {
        match (&entry.result, &entry.error) {
            (Some(fit), _) => println!(
                "fit {}: ok (scale = {:.4}, log-likelihood = {:.4})",
                entry.kind, fit.model.scale, fit.log_likelihood
            ),
            (None, err) => println!(
                "fit {}: FAILED: {}",
                entry.kind,
                err.as_deref().unwrap_or("unknown")
            ),
        }
    }

    // Goodness of fit: chi-square for binned family fits, Cramér–von
    // Mises for exact-time SRGM fits.
    let mut gof_entries: Vec<GofEntry> = Vec::new();
    for entry in &dist_entries {
        let Some(fit) = &entry.result else { continue };
        let counts = input.counts.as_ref().expect("families imply binned counts");
        let outcome = gof::chi_square_test(counts, gof::FittedModel::Dist(fit), global.alpha);
        gof_entries.push(match outcome {
            Ok(verdict) => {
                GofEntry { target: entry.family.to_string(), verdict: Some(verdict), error: None }
            }
            Err(e) => {
                GofEntry { target: entry.family.to_string(), verdict: None, error: Some(e.to_string()) }
            }
        });
    }
    if let Ok(times) = &input.times {
        for entry in &srgm_entries {
            let Some(fit) = &entry.result else { continue };
            let outcome = match &cvm_table {
                Some(table) => gof::cvm_test_with_table(times, fit, global.alpha, table),
                None => gof::cvm_test(times, fit, global.alpha),
            };
            gof_entries.push(match outcome {
                Ok(verdict) => {
                    GofEntry { target: entry.kind.to_string(), verdict: Some(verdict), error: None }
                }
                Err(e) => GofEntry {
                    target: entry.kind.to_string(),
                    verdict: None,
                    error: Some(e.to_string()),
                },
            });
        }
    }

    let ranking = args.rank.map(|metric| rank_fits(&dist_entries, metric));

    let any_success = dist_entries.iter().any(|e| e.result.is_some())
        || srgm_entries.iter().any(|e| e.result.is_some());

    let report = AnalysisReport {
        schema: SCHEMA_VERSION,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        generated_at: if global.no_timestamp {
            None
        } else {
            Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
        },
        input: input.stamp.clone(),
        app_id: input.app_id.clone(),
        major_version: input.major_version,
        unit: input.unit,
        alpha: global.alpha,
        n_events: input.n_events,
        n_bins: input.counts.as_ref().map_or(0, GroupedCounts::len),
        counts: input.counts.as_ref().map_or_else(Vec::new, |c| c.counts.clone()),
        dist_fits: dist_entries,
        srgm_fits: srgm_entries,
        gof: gof_entries,
        ranking,
    };

    let json = to_pretty_json(&report)?;
    atomic_write(&args.out, json.as_bytes())?;
    println!("wrote report to {}", args.out.display());

    if let Some(plot_path) = &args.plot_data {
        let counts = input.counts.as_ref().expect("checked in load_fit_input");
        let csv = plot_data_csv(counts, &report.dist_fits, &report.srgm_fits);
        atomic_write(plot_path, csv.as_bytes())?;
        println!("wrote plot data to {}", plot_path.display());
    }

    if !any_success {
        return Err(Failure::no_fit(format!(
            "no requested fit converged; details recorded in {}",
            args.out.display()
        )));
    }
    Ok(())
}

// -------------------------------------------------------------- simulate

fn cmd_simulate(global: &GlobalOpts, cmd: &SimulateCmd) -> Result<(), Failure> {
    let seed = global.seed.unwrap_or(0);
    match cmd {
        SimulateCmd::Nhpp(args) => {
            if !(args.horizon.is_finite() && args.horizon > 0.0) {
                return Err(Failure::usage(format!(
                    "--horizon must be positive and finite, got {}",
                    args.horizon
                )));
            }
            let model = relgrow_core::SrgmModel::new(args.model.into(), args.scale, args.rate)
                .map_err(|e| Failure::usage(e.to_string()))?;
            let times = srgm::generate_events(&model, args.horizon, seed);
            let json = to_pretty_json(&times)?;
            atomic_write(&args.out, json.as_bytes())?;
            println!("wrote {} event times to {}", times.len(), args.out.display());
            Ok(())
        }
        SimulateCmd::Counts(args) => {
            let model = sim_counts_model(args)?;
            let counts = dist::generate_counts(&model, args.c, args.bins, args.noise.into(), seed)
                .map_err(|e| Failure::usage(e.to_string()))?;
            // The CSV schema holds whole failures; exact expected counts
            // are fractional, so round half away from zero.
            let rounded: Vec<f64> = counts.counts.iter().map(|c| c.round()).collect();
            let counts = GroupedCounts::new(None, rounded).expect("rounded counts stay valid");
            let text = counts.to_csv_string().map_err(|e| Failure::io(&args.out, e))?;
            atomic_write(&args.out, text.as_bytes())?;
            println!(
                "wrote {} bins ({} failures) to {}",
                counts.len(),
                counts.total(),
                args.out.display()
            );
            Ok(())
        }
    }
}

/// Resolves the `--a/--b` pair for a family, defaulting the pinned
/// parameter of the one-parameter families and rejecting contradictions.
fn sim_counts_model(args: &SimCountsArgs) -> Result<relgrow_core::DistModel, Failure> {
    let family: DistFamily = args.family.into();
    let (a, b) = match family {
        DistFamily::Weibull | DistFamily::Gamma => {
            let a = args.a.ok_or_else(|| {
                Failure::usage(format!("--a is required for --family {family}"))
            })?;
            let b = args.b.ok_or_else(|| {
                Failure::usage(format!("--b is required for --family {family}"))
            })?;
            (a, b)
        }
        DistFamily::Rayleigh => {
            let a = args.a.ok_or_else(|| {
                Failure::usage("--a (the scale) is required for --family rayleigh")
            })?;
            (a, args.b.unwrap_or(2.0))
        }
        DistFamily::SShaped => {
            let b = args.b.ok_or_else(|| {
                Failure::usage("--b (the scale) is required for --family sshaped")
            })?;
            (args.a.unwrap_or(2.0), b)
        }
    };
    relgrow_core::DistModel::new(family, a, b).map_err(|e| Failure::usage(e.to_string()))
}

// ---------------------------------------------------------------- report

fn cmd_report(args: &ReportArgs) -> Result<(), Failure> {
    let path = &args.input;
    let bytes = std::fs::read(path).map_err(|e| Failure::io(path, e))?;
    let parsed: AnalysisReport = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::input(format!("{}: malformed report: {e}", path.display())))?;
    if parsed.schema != SCHEMA_VERSION {
        eprintln!(
            "warning: report schema {} (this toolkit writes {}); rendering best-effort",
            parsed.schema, SCHEMA_VERSION
        );
    }
    let rendered = match args.format {
        FormatArg::Table => report::render_table(&parsed),
        FormatArg::Csv => report::render_csv(&parsed),
        FormatArg::Json => to_pretty_json(&parsed)?,
    };
    match &args.out {
        Some(out) => atomic_write(out, rendered.as_bytes())?,
        None => print!("{rendered}"),
    }
    Ok(())
}

// --------------------------------------------------------------- helpers

fn to_pretty_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Failure::input(format!("serialization failed: {e}")))
}

/// Writes via a temp file in the destination directory plus an atomic
/// rename, so readers never observe a half-written file.
fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| Failure::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Failure::io(path, e))?;
    tmp.persist(path).map_err(|e| Failure::io(path, e))?;
    Ok(())
}
