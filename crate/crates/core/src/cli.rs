//! The `sarith` command line.
//!
//! ```text
//! sarith harmonic --n-min 100 --n-max 1e6 --modes sr,ud,cestac --reps 30 --seed 1 --out h.csv
//! sarith kernel --kernel matmul --m 8 --k 8 --n 8 --modes rn,sr --reps 10 --out mm.csv
//! sarith metrics sigdigits h.csv --mode sr --n 1000000
//! sarith metrics dice a.lmap b.lmap c.lmap --label 3
//! sarith metrics levene sr.csv mca.csv
//! ```
//!
//! Exit codes: 0 on success, 1 on I/O failure, 2 on usage or parse errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::fpcore::FormatName;
use crate::kernels::{
    execute_reference, run_repetitions, time_op, BenchOp, KernelInputs, KernelKind, KernelSpec, Repetitions,
};
use crate::metrics::{
    levene_test, min_pairwise_dice, min_pairwise_dice_all, pairwise_f_test, significant_digits, DiceSummary, LabelMap,
    SampleSet,
};
use crate::report::{ExperimentConfig, OutputFormat, Report, ReportRow, SampleFile, SummaryRow, TimingRow};
use crate::rng::RngStream;
use crate::rounding::RoundingMode;

pub const SEED_ENV: &str = "SARITH_SEED";

#[derive(Debug, Parser)]
#[command(name = "sarith", version, about = "Stochastic arithmetic experiments and variability metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partial sums of the harmonic series under each rounding mode.
    Harmonic(HarmonicArgs),
    /// Sum, dot, axpy or matmul under each rounding mode.
    Kernel(KernelArgs),
    /// Variability metrics over existing outputs.
    #[command(subcommand)]
    Metrics(MetricsCommand),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Comma-separated modes: rn | sr | ud | cestac | mca | mca@<t>.
    #[arg(long, value_delimiter = ',', default_value = "sr")]
    pub modes: Vec<RoundingMode>,
    #[arg(long, default_value_t = 30)]
    pub reps: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// binary32 or binary64.
    #[arg(long, default_value = "binary32")]
    pub fmt: FormatName,
    #[arg(long)]
    pub out: PathBuf,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    pub format: OutputFormat,
    /// Record wall-clock times and append a per-op timing table. Reports
    /// written with this flag are not byte-reproducible.
    #[arg(long)]
    pub timings: bool,
    /// Scalar operations per timing run.
    #[arg(long, default_value_t = 100_000)]
    pub bench_ops: usize,
    /// Timed runs per operator and mode (at least 10).
    #[arg(long, default_value_t = 10)]
    pub bench_runs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct HarmonicArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Smallest series length; accepts `1e2` style.
    #[arg(long, default_value = "100", value_parser = parse_count)]
    pub n_min: usize,
    /// Largest series length; one run per decade from --n-min.
    #[arg(long, default_value = "1e6", value_parser = parse_count)]
    pub n_max: usize,
    /// Round the `1/i` terms to nearest and perturb only the accumulation.
    #[arg(long)]
    pub no_div_perturb: bool,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// sum | dot | axpy | matmul.
    #[arg(long)]
    pub kernel: KernelKind,
    /// Vector length, or columns of the right matrix.
    #[arg(long, value_parser = parse_count)]
    pub n: Option<usize>,
    /// Rows of the left matrix.
    #[arg(long, default_value = "8", value_parser = parse_count)]
    pub m: usize,
    /// Inner dimension of the matrix product.
    #[arg(long, default_value = "8", value_parser = parse_count)]
    pub k: usize,
}

#[derive(Debug, Clone, Subcommand)]
pub enum MetricsCommand {
    /// Significant digits of one sample column.
    Sigdigits(SigdigitsArgs),
    /// Minimum pairwise Dice score over label maps.
    Dice(DiceArgs),
    /// Levene test across sample columns, plus F-tests against the first.
    Levene(LeveneArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    /// Keep only report rows with this mode.
    #[arg(long)]
    pub mode: Option<String>,
    /// Keep only report rows with this size.
    #[arg(long, value_parser = parse_count)]
    pub n: Option<usize>,
    /// Write the result here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SigdigitsArgs {
    pub samples: PathBuf,
    #[command(flatten)]
    pub select: SelectArgs,
    /// Format of a plain sample file; reports carry their own.
    #[arg(long)]
    pub fmt: Option<FormatName>,
    /// Also print significant bits.
    #[arg(long)]
    pub bits: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DiceArgs {
    #[arg(required = true, num_args = 2..)]
    pub maps: Vec<PathBuf>,
    /// Label to score; every label present when omitted.
    #[arg(long)]
    pub label: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LeveneArgs {
    #[arg(required = true, num_args = 2..)]
    pub groups: Vec<PathBuf>,
    #[command(flatten)]
    pub select: SelectArgs,
}

/// Integer count, also written as `1e6` or `2.5e3`.
pub fn parse_count(s: &str) -> std::result::Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= 2f64.powi(53) => Ok(v as usize),
        _ => Err(format!("`{s}` is not a non-negative integer")),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let command_line = render_command_line(&args);
    match dispatch(&cli, &command_line) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("sarith: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, command_line: &str) -> Result<String> {
    match &cli.command {
        Command::Harmonic(args) => {
            let (config, report) = harmonic_report(args, command_line)?;
            report.write(&config.output, config.output_format)?;
            Ok(String::new())
        }
        Command::Kernel(args) => {
            let (config, report) = kernel_report(args, command_line)?;
            report.write(&config.output, config.output_format)?;
            Ok(String::new())
        }
        Command::Metrics(cmd) => {
            let (text, out) = match cmd {
                MetricsCommand::Sigdigits(a) => (cmd_sigdigits(a)?, a.select.out.as_deref()),
                MetricsCommand::Dice(a) => (cmd_dice(a)?, a.out.as_deref()),
                MetricsCommand::Levene(a) => (cmd_levene(a)?, a.select.out.as_deref()),
            };
            if let Some(path) = out {
                std::fs::write(path, &text).map_err(|e| Error::io(path, e))?;
            }
            Ok(text)
        }
    }
}

/// Program name plus arguments, with the program path reduced to `sarith`
/// so the line does not depend on the install location.
pub fn render_command_line(args: &[OsString]) -> String {
    let mut parts = vec!["sarith".to_string()];
    for a in args.iter().skip(1) {
        let s = a.to_string_lossy();
        let plain = !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_./,=@:+".contains(c));
        parts.push(if plain { s.into_owned() } else { format!("'{}'", s.replace('\'', "'\\''")) });
    }
    parts.join(" ")
}

/// Decades `n_min, 10 n_min, ...` up to `n_max`, ending with `n_max`.
pub fn decade_sizes(n_min: usize, n_max: usize) -> Result<Vec<usize>> {
    if n_min == 0 || n_min > n_max {
        return Err(Error::Shape(format!("need 1 <= n-min <= n-max, got {n_min} and {n_max}")));
    }
    let mut sizes = Vec::new();
    let mut n = n_min;
    while n < n_max {
        sizes.push(n);
        n = match n.checked_mul(10) {
            Some(v) => v,
            None => break,
        };
    }
    sizes.push(n_max);
    Ok(sizes)
}

/// Stream id of one `(kernel, mode, size)` cell, independent of the order
/// in which modes and sizes are listed.
fn cell_stream_id(kind: KernelKind, mode: RoundingMode, n: usize) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in format!("{kind}:{mode}:{n}").bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h & !(1 << 63)
}

fn base_meta(config: &ExperimentConfig, command_line: &str) -> Vec<(String, String)> {
    let modes: Vec<String> = config.modes.iter().map(ToString::to_string).collect();
    let sizes: Vec<String> = config.sizes.iter().map(ToString::to_string).collect();
    vec![
        ("tool".into(), "sarith".into()),
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("command".into(), command_line.into()),
        ("seed".into(), config.seed.to_string()),
        ("seed_env".into(), std::env::var(SEED_ENV).unwrap_or_else(|_| "unset".into())),
        ("format".into(), config.kernel.format.to_string()),
        ("modes".into(), modes.join(",")),
        ("kernel".into(), config.kernel.kind.to_string()),
        ("sizes".into(), sizes.join(",")),
        ("reps".into(), config.reps.to_string()),
        ("perturb_division".into(), config.kernel.perturb_division.to_string()),
        ("accumulation".into(), "left-to-right".into()),
        ("sig_digits".into(), "parametric,ddof=1,decimal".into()),
        ("levene_centering".into(), "mean".into()),
        ("config".into(), config.render()),
    ]
}

fn summarize(reps: &Repetitions, rn: &[f64], ref64: &[f64]) -> Result<Vec<SummaryRow>> {
    (0..reps.spec.output_len())
        .map(|idx| {
            let set = reps.sample_set(idx);
            let v = significant_digits(&set)?;
            Ok(SummaryRow {
                kind: reps.spec.kind.to_string(),
                mode: reps.spec.mode.to_string(),
                n: reps.spec.n,
                idx,
                reps: set.len(),
                mean: v.mean,
                std: v.std,
                sig_digits: v.sig_digits_decimal,
                ref64: ref64[idx],
                rn: rn[idx],
                rn_bitwise_equal: set.values.iter().all(|x| x.to_bits() == rn[idx].to_bits()),
            })
        })
        .collect()
}

fn push_rows(report: &mut Report, reps: &Repetitions, timings: bool) {
    for (rep, out) in reps.outputs.iter().enumerate() {
        for (idx, &value) in out.iter().enumerate() {
            report.rows.push(ReportRow {
                kind: reps.spec.kind.to_string(),
                mode: reps.spec.mode.to_string(),
                n: reps.spec.n,
                rep,
                idx,
                value,
                wall_ns: if timings { reps.wall_ns[rep] } else { 0 },
            });
        }
    }
}

fn timing_table(report: &mut Report, config: &ExperimentConfig, run: &RunArgs) -> Result<()> {
    let mut modes = vec![RoundingMode::Nearest, RoundingMode::Stochastic, RoundingMode::UpDown];
    for &m in &config.modes {
        if !modes.contains(&m) {
            modes.push(m);
        }
    }
    report.timing_modes = modes.iter().map(ToString::to_string).collect();
    for op in BenchOp::ALL {
        let mut row = TimingRow {
            op: op.as_str().into(),
            format: config.kernel.format.to_string(),
            ops_per_run: run.bench_ops.max(1),
            runs: run.bench_runs.max(crate::kernels::BENCH_MIN_RUNS),
            median_ns: Vec::new(),
        };
        for &mode in &modes {
            let t = time_op(op, mode, config.kernel.format, row.ops_per_run, row.runs, config.seed)?;
            row.median_ns.push(t.median_ns_per_op);
        }
        report.timings.push(row);
    }
    Ok(())
}

fn experiment(config: &ExperimentConfig, run: &RunArgs, command_line: &str) -> Result<Report> {
    config.validate()?;
    let mut report = Report { meta: base_meta(config, command_line), ..Report::default() };
    for &n in &config.sizes {
        for &mode in &config.modes {
            let mut spec = config.kernel.clone();
            spec.mode = mode;
            if spec.kind == KernelKind::Harmonic {
                spec.n = n;
            }
            let inputs = KernelInputs::generate(&spec, config.seed);
            let base = RngStream::new(config.seed, cell_stream_id(spec.kind, mode, n));
            let reps = run_repetitions(&spec, &inputs, config.reps, &base)?;

            let mut rn_spec = spec.clone();
            rn_spec.mode = RoundingMode::Nearest;
            let rn = execute_reference(&rn_spec, &inputs)?;
            rn_spec.format = FormatName::Binary64;
            let ref64 = execute_reference(&rn_spec, &inputs)?;

            push_rows(&mut report, &reps, run.timings);
            report.summary.extend(summarize(&reps, &rn, &ref64)?);
        }
    }
    if run.timings {
        timing_table(&mut report, config, run)?;
    }
    Ok(report)
}

/// Builds the harmonic-series report without writing it.
pub fn harmonic_report(args: &HarmonicArgs, command_line: &str) -> Result<(ExperimentConfig, Report)> {
    let sizes = decade_sizes(args.n_min, args.n_max)?;
    let mut kernel = KernelSpec::harmonic(args.n_max, args.run.fmt, args.run.modes[0]);
    kernel.perturb_division = !args.no_div_perturb;
    let config = ExperimentConfig {
        kernel,
        sizes,
        modes: args.run.modes.clone(),
        reps: args.run.reps,
        seed: args.run.seed,
        output: args.run.out.clone(),
        output_format: args.run.format,
    };
    let report = experiment(&config, &args.run, command_line)?;
    Ok((config, report))
}

/// Builds a sum/dot/axpy/matmul report without writing it.
pub fn kernel_report(args: &KernelArgs, command_line: &str) -> Result<(ExperimentConfig, Report)> {
    let fmt = args.run.fmt;
    let mode = args.run.modes[0];
    let kernel = match args.kernel {
        KernelKind::Harmonic => {
            return Err(Error::Shape("use the `harmonic` subcommand for the harmonic series".into()))
        }
        KernelKind::Matmul => KernelSpec::matmul(args.m, args.k, args.n.unwrap_or(8), fmt, mode),
        kind => KernelSpec::vector(kind, args.n.unwrap_or(1000), fmt, mode),
    };
    let config = ExperimentConfig {
        sizes: vec![kernel.n],
        kernel,
        modes: args.run.modes.clone(),
        reps: args.run.reps,
        seed: args.run.seed,
        output: args.run.out.clone(),
        output_format: args.run.format,
    };
    let report = experiment(&config, &args.run, command_line)?;
    Ok((config, report))
}

const PROVENANCE_KEYS: [&str; 6] = ["tool", "version", "seed", "modes", "format", "command"];

fn provenance(out: &mut String, path: &Path, meta: &SampleFile) {
    let _ = writeln!(out, "# input={}", path.display());
    for key in PROVENANCE_KEYS {
        if let Some(v) = meta.meta(key) {
            let _ = writeln!(out, "# input.{key}={v}");
        }
    }
}

fn select(args: &SelectArgs) -> (Option<&str>, Option<usize>) {
    (args.mode.as_deref(), args.n)
}

fn cmd_sigdigits(args: &SigdigitsArgs) -> Result<String> {
    let file = SampleFile::read(&args.samples, select(&args.select))?;
    let format = args.fmt.or(file.format).unwrap_or(FormatName::Binary32);
    let set = SampleSet::new(file.values.clone(), format, args.samples.display().to_string())?;
    let r = significant_digits(&set)?;
    let mut out = String::new();
    provenance(&mut out, &args.samples, &file);
    let _ = writeln!(out, "format={format}");
    let _ = writeln!(out, "n={}", r.n);
    let _ = writeln!(out, "mean={:?}", r.mean);
    let _ = writeln!(out, "std={:?}", r.std);
    let _ = writeln!(out, "sig_digits={:?}", r.sig_digits_decimal);
    if args.bits {
        let _ = writeln!(out, "sig_bits={:?}", r.sig_bits());
    }
    let _ = writeln!(out, "cap={:?}", r.cap);
    let _ = writeln!(out, "absolute_mode={}", r.absolute_mode);
    let _ = writeln!(out, "degenerate={}", r.degenerate);
    Ok(out)
}

fn dice_line(out: &mut String, d: &DiceSummary) {
    let _ = writeln!(
        out,
        "label={} min={:?} argmin={},{} pairs={} empty_pairs={} label_absent={}",
        d.label, d.min, d.argmin.0, d.argmin.1, d.pairs, d.empty_pairs, d.label_absent
    );
}

fn cmd_dice(args: &DiceArgs) -> Result<String> {
    let maps = args.maps.iter().map(|p| LabelMap::read(p)).collect::<Result<Vec<_>>>()?;
    let mut out = String::new();
    for p in &args.maps {
        let _ = writeln!(out, "# input={}", p.display());
    }
    match args.label {
        Some(label) => dice_line(&mut out, &min_pairwise_dice(&maps, label)?),
        None => {
            let all = min_pairwise_dice_all(&maps)?;
            for d in &all.per_label {
                dice_line(&mut out, d);
            }
            let _ = writeln!(out, "global_min={:?}", all.global_min);
        }
    }
    Ok(out)
}

fn cmd_levene(args: &LeveneArgs) -> Result<String> {
    let mut out = String::new();
    let mut sets = Vec::new();
    // `--mode a,b,...` picks one mode per group
    let modes: Vec<Option<&str>> = match args.select.mode.as_deref() {
        Some(m) if m.contains(',') => {
            let list: Vec<&str> = m.split(',').map(str::trim).collect();
            if list.len() != args.groups.len() {
                return Err(Error::Shape(format!(
                    "--mode lists {} modes for {} groups",
                    list.len(),
                    args.groups.len()
                )));
            }
            list.into_iter().map(Some).collect()
        }
        m => vec![m; args.groups.len()],
    };
    for (path, mode) in args.groups.iter().zip(modes) {
        let file = SampleFile::read(path, (mode, args.select.n))?;
        provenance(&mut out, path, &file);
        let format = file.format.unwrap_or(FormatName::Binary64);
        sets.push(SampleSet::new(file.values, format, path.display().to_string())?);
    }
    let lev = levene_test(&sets)?;
    let _ = writeln!(out, "centering=mean");
    let _ = writeln!(out, "groups={}", sets.len());
    let _ = writeln!(
        out,
        "levene statistic={:?} p={:?} df={},{} degenerate={}",
        lev.statistic, lev.p_value, lev.df_num, lev.df_den, lev.degenerate
    );
    for (i, s) in sets.iter().enumerate().skip(1) {
        let f = pairwise_f_test(s, &sets[0])?;
        let _ = writeln!(
            out,
            "f_test group={i} vs=0 statistic={:?} p={:?} df={},{} degenerate={}",
            f.statistic, f.p_value, f.df_num, f.df_den, f.degenerate
        );
    }
    Ok(out)
}
