//! The command-line surface. Every command is deterministic given its
//! flags (seeds are explicit), machine output is JSON or CSV, and the
//! profile-oriented commands compose over pipes:
//!
//! ```text
//! timlab gen rtim --n 512 | timlab simulate --stdin --trace | timlab check --stdin
//! ```
//!
//! Exit status: 0 on success, 1 when a requested check fails, 2 on usage
//! or input errors.

use std::ffi::OsString;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis;
use crate::generators::{self, PaperVectorId};
use crate::policy::{simulate, PolicyVariant, Trace};
use crate::runs::{self, RunProfile};
use crate::sorter;
use crate::wire;
use crate::{Error, Result};

/// Capacity of the fixed run stack that the original Java sort allocates
/// for large arrays; the preset behind `--capacity java`.
pub const JAVA_STACK_CAPACITY: usize = 49;

#[derive(Parser)]
#[command(
    name = "timlab",
    version,
    about = "Merge-policy laboratory: simulate, sort, generate and check",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    /// Rules with merge case #5 (Python 3.4.4+).
    Patched,
    /// Original rules without case #5 (Java).
    Unpatched,
}

impl From<VariantArg> for PolicyVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Patched => PolicyVariant::Patched,
            VariantArg::Unpatched => PolicyVariant::Unpatched,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Pretty,
}

fn parse_capacity(s: &str) -> std::result::Result<usize, String> {
    if s == "java" {
        Ok(JAVA_STACK_CAPACITY)
    } else {
        s.parse()
            .map_err(|e| format!("expected a number or 'java': {e}"))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Split an array of integers into maximal monotonic runs.
    Decompose(DecomposeArgs),
    /// Stable-sort integers, reporting exact work metrics.
    Sort(SortArgs),
    /// Run the merge policy on a run-length profile.
    Simulate(SimulateArgs),
    /// Generate run profiles (worst-case family, towers, fixed vectors,
    /// seeded random ones).
    Gen(GenArgs),
    /// Verify the invariants of a recorded trace.
    Check(CheckArgs),
    /// Entropy, costs and bound evaluations for a profile.
    Report(ReportArgs),
    /// Cost/bound table over generated profiles, as CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct DecomposeArgs {
    /// File of newline-separated integers (stdin if omitted).
    #[arg(long)]
    input: Option<PathBuf>,
    /// `pretty` prints one run per line; `json` the full run list;
    /// default is the bare profile, one comma-separated line.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct SortArgs {
    /// File of newline-separated integers (stdin if omitted).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "patched")]
    variant: VariantArg,
    /// Write the metrics JSON here instead of stderr.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Run lengths, comma-separated.
    #[arg(long, conflicts_with_all = ["input", "stdin"])]
    profile: Option<String>,
    /// File of newline-separated integers; the array is decomposed first.
    #[arg(long, conflicts_with = "stdin")]
    input: Option<PathBuf>,
    /// Read the profile (comma-separated) from stdin.
    #[arg(long)]
    stdin: bool,
    #[arg(long, value_enum, default_value = "patched")]
    variant: VariantArg,
    /// Emulate a bounded run stack: a number, or `java` for 49.
    #[arg(long, value_parser = parse_capacity)]
    capacity: Option<usize>,
    /// Emit the full JSON-lines trace instead of the summary.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    what: GenCommand,
    /// Emit a concrete integer array realizing the profile, one value
    /// per line, instead of the lengths.
    #[arg(long, global = true)]
    realize: bool,
    /// Seed for value placement (and for `random`, the profile itself).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum GenCommand {
    /// The recursive worst-case family.
    Rtim {
        #[arg(long)]
        n: u64,
    },
    /// Minimal tower reaching stack height h with no merges (patched).
    Fib {
        #[arg(long)]
        height: usize,
    },
    /// A published fixed sequence.
    Paper {
        #[arg(long, value_enum)]
        id: PaperArg,
    },
    /// Seeded random realizable profile: rho lengths summing to n.
    Random {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        rho: usize,
    },
    /// Height-maximizing profile (exhaustive up to 30 elements).
    Search {
        #[arg(long)]
        n: u64,
        /// Cap on the number of runs (defaults to n).
        #[arg(long)]
        rho_max: Option<usize>,
        #[arg(long, value_enum, default_value = "patched")]
        variant: VariantArg,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PaperArg {
    Fig2,
    Fig5,
    Prop81,
}

impl From<PaperArg> for PaperVectorId {
    fn from(p: PaperArg) -> Self {
        match p {
            PaperArg::Fig2 => PaperVectorId::Fig2,
            PaperArg::Fig5 => PaperVectorId::Fig5,
            PaperArg::Prop81 => PaperVectorId::Prop81,
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    /// JSON-lines trace file (stdin if omitted).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Accepted for pipe symmetry; stdin is already the default.
    #[arg(long)]
    stdin: bool,
    #[arg(long, value_enum, default_value = "pretty")]
    format: FormatArg,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, conflicts_with_all = ["input", "stdin"])]
    profile: Option<String>,
    #[arg(long, conflicts_with = "stdin")]
    input: Option<PathBuf>,
    #[arg(long)]
    stdin: bool,
    #[arg(long, value_enum, default_value = "patched")]
    variant: VariantArg,
    /// `pretty` indents the JSON.
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated element counts.
    #[arg(long, default_value = "64,256,1024,4096,16384")]
    sizes: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses `argv` and executes the command, writing primary output to
/// `out` and diagnostics to `err`. Returns the process exit status:
/// 0 success, 1 failed checks, 2 usage or input errors.
pub fn run_cli<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes, not usage errors.
            return if e.use_stderr() {
                let _ = write!(err, "{e}");
                2
            } else {
                let _ = write!(out, "{e}");
                0
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Decompose(args) => cmd_decompose(args, out),
        Command::Sort(args) => cmd_sort(args, out, err),
        Command::Simulate(args) => cmd_simulate(args, out),
        Command::Gen(args) => cmd_gen(args, out),
        Command::Check(args) => cmd_check(args, out),
        Command::Report(args) => cmd_report(args, out),
        Command::Bench(args) => cmd_bench(args, out),
    }
}

// ------------------------------------------------------------------
// Input helpers.
// ------------------------------------------------------------------

fn read_integers(reader: impl Read) -> Result<Vec<i64>> {
    let mut values = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        let token = line.trim();
        if token.is_empty() {
            continue;
        }
        values.push(
            token
                .parse::<i64>()
                .map_err(|e| Error::Parse(format!("integer {token:?}: {e}")))?,
        );
    }
    Ok(values)
}

fn read_integers_from(path: Option<&Path>) -> Result<Vec<i64>> {
    match path {
        Some(p) => read_integers(std::fs::File::open(p)?),
        None => read_integers(std::io::stdin().lock()),
    }
}

fn profile_from_array(values: &[i64]) -> Result<RunProfile> {
    let runs = runs::decompose(values)?;
    runs::profile_of(&runs)
}

fn load_profile(
    profile: Option<&str>,
    input: Option<&Path>,
    use_stdin: bool,
) -> Result<RunProfile> {
    if let Some(spec) = profile {
        return spec.parse();
    }
    if let Some(path) = input {
        let values = read_integers_from(Some(path))?;
        return profile_from_array(&values);
    }
    if use_stdin {
        let mut text = String::new();
        std::io::stdin().lock().read_to_string(&mut text)?;
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::Parse("empty profile on stdin".into()));
        }
        return text.parse();
    }
    Err(Error::Parse(
        "no profile given: use --profile, --input or --stdin".into(),
    ))
}

// ------------------------------------------------------------------
// Commands.
// ------------------------------------------------------------------

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RunJson {
    offset: usize,
    length: usize,
    direction: &'static str,
}

fn cmd_decompose(args: DecomposeArgs, out: &mut dyn Write) -> Result<i32> {
    let values = read_integers_from(args.input.as_deref())?;
    let runs = runs::decompose(&values)?;
    match args.format {
        None | Some(FormatArg::Csv) => {
            let profile = runs::profile_of(&runs)?;
            writeln!(out, "{profile}")?;
        }
        Some(FormatArg::Json) => {
            let rows: Vec<RunJson> = runs
                .iter()
                .map(|r| RunJson {
                    offset: r.offset,
                    length: r.length,
                    direction: match r.direction {
                        runs::Direction::NonDecreasing => "nondecreasing",
                        runs::Direction::Decreasing => "decreasing",
                    },
                })
                .collect();
            writeln!(out, "{}", serde_json::to_string(&rows).unwrap())?;
        }
        Some(FormatArg::Pretty) => {
            for r in &runs {
                let dir = match r.direction {
                    runs::Direction::NonDecreasing => "nondecreasing",
                    runs::Direction::Decreasing => "decreasing",
                };
                writeln!(out, "run @{:<6} len {:<6} {}", r.offset, r.length, dir)?;
            }
        }
    }
    Ok(0)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SortMetricsJson {
    n: usize,
    variant: PolicyVariant,
    comparisons: u64,
    run_detect_comparisons: u64,
    merge_comparisons: u64,
    merge_cost: u64,
    main_loop_cost: u64,
    force_cost: u64,
    max_height: usize,
    moved: u64,
}

fn cmd_sort(args: SortArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut values = read_integers_from(args.input.as_deref())?;
    let variant: PolicyVariant = args.variant.into();
    let metrics = sorter::timsort_lite(&mut values, variant);
    for v in &values {
        writeln!(out, "{v}")?;
    }
    let json = serde_json::to_string(&SortMetricsJson {
        n: values.len(),
        variant,
        comparisons: metrics.comparisons,
        run_detect_comparisons: metrics.run_detect_comparisons,
        merge_comparisons: metrics.merge_comparisons,
        merge_cost: metrics.merge_cost,
        main_loop_cost: metrics.main_loop_cost,
        force_cost: metrics.force_cost,
        max_height: metrics.max_height,
        moved: metrics.moved,
    })
    .unwrap();
    match &args.metrics {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => writeln!(err, "{json}")?,
    }
    Ok(0)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SimSummaryJson<'a> {
    variant: PolicyVariant,
    n: u64,
    rho: usize,
    main_loop_cost: u64,
    force_cost: u64,
    total_cost: u64,
    max_height: usize,
    overflows: usize,
    final_main_stack: &'a [u64],
}

fn cmd_simulate(args: SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let profile = load_profile(args.profile.as_deref(), args.input.as_deref(), args.stdin)?;
    let variant: PolicyVariant = args.variant.into();
    let trace = simulate(&profile, variant, args.capacity);
    if args.trace {
        wire::write_trace(&trace, out)?;
    } else {
        let s = &trace.summary;
        let json = serde_json::to_string(&SimSummaryJson {
            variant: s.variant,
            n: s.n,
            rho: s.rho,
            main_loop_cost: s.main_loop_cost,
            force_cost: s.force_cost,
            total_cost: s.total_cost(),
            max_height: s.max_height,
            overflows: s.overflows,
            final_main_stack: &s.final_main_stack,
        })
        .unwrap();
        writeln!(out, "{json}")?;
    }
    Ok(0)
}

fn cmd_gen(args: GenArgs, out: &mut dyn Write) -> Result<i32> {
    let profile = match args.what {
        GenCommand::Rtim { n } => generators::rtim(n)?,
        GenCommand::Fib { height } => {
            if height == 0 {
                return Err(Error::OutOfDomain("tower height must be >= 1".into()));
            }
            generators::fib_tower(height)
        }
        GenCommand::Paper { id } => generators::paper_vector(id.into()),
        GenCommand::Random { n, rho } => generators::random_profile(n, rho, args.seed)?,
        GenCommand::Search { n, rho_max, variant } => {
            if n == 0 {
                return Err(Error::OutOfDomain("search needs n >= 1".into()));
            }
            let rho_max = rho_max.unwrap_or(n as usize);
            generators::max_height_search(n, rho_max, variant.into()).profile
        }
    };
    if args.realize {
        for v in generators::realize_array(&profile, args.seed)? {
            writeln!(out, "{v}")?;
        }
    } else {
        writeln!(out, "{profile}")?;
    }
    Ok(0)
}

fn cmd_check(args: CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let trace: Trace = match args.input.as_deref() {
        Some(path) => wire::read_trace(&mut BufReader::new(std::fs::File::open(path)?))?,
        None => wire::read_trace(&mut std::io::stdin().lock())?,
    };
    let suite = analysis::check_trace(&trace);
    let rows = suite.rows();
    match args.format {
        FormatArg::Csv => {
            writeln!(out, "check,violations,result")?;
            for (name, violations) in &rows {
                let result = if *violations == 0 { "pass" } else { "fail" };
                writeln!(out, "{name},{violations},{result}")?;
            }
        }
        _ => {
            writeln!(out, "trace: {} variant, n={}, rho={}, {} events",
                trace.variant, trace.profile.total(), trace.profile.run_count(), trace.events.len())?;
            for (name, violations) in &rows {
                let result = if *violations == 0 { "pass" } else { "FAIL" };
                writeln!(out, "  {name:<26} {result:>4}  ({violations} violations)")?;
            }
            if suite.overflow_events > 0 {
                writeln!(out, "  note: {} capacity overflow events", suite.overflow_events)?;
            }
        }
    }
    Ok(if suite.passed() { 0 } else { 1 })
}

fn cmd_report(args: ReportArgs, out: &mut dyn Write) -> Result<i32> {
    let profile = load_profile(args.profile.as_deref(), args.input.as_deref(), args.stdin)?;
    let report = analysis::report(&profile, args.variant.into());
    let json = match args.format {
        FormatArg::Pretty => serde_json::to_string_pretty(&report).unwrap(),
        _ => serde_json::to_string(&report).unwrap(),
    };
    writeln!(out, "{json}")?;
    Ok(if report.all_bounds_hold() { 0 } else { 1 })
}

fn cmd_bench(args: BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let sizes: Vec<u64> = args
        .sizes
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("size {tok:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    writeln!(out, "generator,n,variant,rho,H,cost,costOverNH,maxHeight,boundMargin")?;
    let mut all_ok = true;
    for &gen_name in &["random", "rtim", "fib"] {
        for (i, &n) in sizes.iter().enumerate() {
            if n == 0 {
                return Err(Error::OutOfDomain("bench sizes must be >= 1".into()));
            }
            let profile = match gen_name {
                "random" => {
                    // About one run per eight elements, at least one.
                    let rho = n.div_ceil(8).max(1).min(n.div_ceil(2)) as usize;
                    generators::random_profile(n, rho, args.seed.wrapping_add(i as u64))?
                }
                "rtim" => generators::rtim(n)?,
                _ => {
                    // Tallest tower that fits in n elements.
                    let mut h = 1;
                    while generators::fib_tower_sum(h + 1) <= n {
                        h += 1;
                    }
                    generators::fib_tower(h)
                }
            };
            for variant in [PolicyVariant::Patched, PolicyVariant::Unpatched] {
                let report = analysis::report(&profile, variant);
                all_ok &= report.all_bounds_hold();
                let bound = analysis::height_bound(report.n, variant);
                let margin = bound.tight - report.max_height as f64;
                let ratio = report
                    .cost_over_n_h
                    .map(|r| format!("{r:.6}"))
                    .unwrap_or_else(|| "null".into());
                writeln!(
                    out,
                    "{gen_name},{},{variant},{},{:.6},{},{ratio},{},{margin:.3}",
                    report.n, report.rho, report.entropy_bits, report.total_cost,
                    report.max_height
                )?;
            }
        }
    }
    Ok(if all_ok { 0 } else { 1 })
}
