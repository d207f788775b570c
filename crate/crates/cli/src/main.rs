use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use postri::harness::{self, SweepSpec};
use postri::{validation, Error, PreparedData, ReleaseConfig, Result, RngStream, SplitPolicy};

/// Differentially private median with a randomization interval.
#[derive(Debug, Parser)]
#[command(name = "postri", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Release one private median and interval from a delimited file
    Median(MedianArgs),
    /// Run an experiment sweep described by a JSON spec file
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Check the mechanisms against the brute-force oracle on small instances
    OracleCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rebuild summaries and plot data from an existing trials.csv
    EmitPlots {
        #[arg(long)]
        trials: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct MedianArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    column: String,
    /// Public bounds of the column, e.g. `-8019:102127`
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    range: (i64, i64),
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// default, optimal, median-focused or ratio=R
    #[arg(long, default_value = "default")]
    split: SplitPolicy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = harness::DEFAULT_DOMAIN_SIZE)]
    domain_size: i64,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Share of beta spent on the median stage
    #[arg(long, default_value_t = 0.5)]
    beta_split: f64,
    #[arg(long)]
    json: bool,
}

fn parse_range(s: &str) -> std::result::Result<(i64, i64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("lower bound {lo:?}: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("upper bound {hi:?}: {e}"))?;
    if lo > hi {
        return Err(format!("lower bound {lo} exceeds upper bound {hi}"));
    }
    Ok((lo, hi))
}

fn median(args: &MedianArgs) -> Result<()> {
    let (data, domain) =
        harness::load_dataset(&args.input, &args.column, args.range, args.domain_size, args.delimiter)?;
    let prepared = PreparedData::new(&data, &domain)?;
    let mut config = ReleaseConfig::new(args.eps, args.beta, args.split);
    config.beta1_fraction = args.beta_split;
    let mut rng = RngStream::new(args.seed);
    let r = prepared.release(&config, &mut rng)?;
    let p = r.params;
    if args.json {
        let out = serde_json::json!({
            "lower": r.lower,
            "estimate": r.estimate,
            "upper": r.upper,
            "n": data.len(),
            "eps1": p.eps1,
            "eps2": p.eps2,
            "beta1": p.beta1,
            "beta2": p.beta2,
            "step": p.step,
            "gamma1": r.median.gamma1,
            "gamma2": r.interval.gamma2,
            "b_hat": r.interval.b_hat,
            "seed": args.seed,
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("median   {}", r.estimate);
        println!("interval [{}, {}]", r.lower, r.upper);
        println!(
            "eps1={:.6} eps2={:.6} beta1={} beta2={} step={}",
            p.eps1, p.eps2, p.beta1, p.beta2, p.step
        );
    }
    Ok(())
}

fn sweep(spec_path: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(spec_path).map_err(|e| Error::from(e).context(spec_path.display().to_string()))?;
    let spec = SweepSpec::from_json(&text).map_err(|e| e.context(spec_path.display().to_string()))?;
    let records = harness::run_sweep(&spec)?;
    let summaries = harness::summarize(&records)?;
    for path in harness::emit(&records, &summaries, out)? {
        eprintln!("wrote {}", path.display());
    }
    print!("{}", harness::format_table(&summaries));
    Ok(())
}

fn emit_plots(trials: &Path, out: &Path) -> Result<()> {
    let records = harness::read_trials(trials).map_err(|e| e.context(trials.display().to_string()))?;
    let summaries = harness::summarize(&records)?;
    for path in harness::emit_summaries(&summaries, out)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn report(ok: bool, name: &str, detail: String) -> bool {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

/// Returns whether every check passed.
fn oracle_check(seed: u64) -> Result<bool> {
    let mut all = true;

    let s = validation::sensitivity_suite(200, 100, 300, seed);
    all &= report(
        s.violations == 0,
        "sensitivity",
        format!(
            "{} pairs, {} evaluations, max |df|={}, max |dq|={}, violations={}",
            s.pairs, s.evaluations, s.max_f_change, s.max_q_change, s.violations
        ),
    );

    let p = validation::privacy_suite(30, 7, 30, seed + 1)?;
    all &= report(
        p.median_excess <= 1e-9 && p.ri_excess <= 1e-9 && p.landscape_mismatch < 1e-9,
        "privacy",
        format!(
            "median excess {:.3e}, interval excess {:.3e}, landscape mismatch {:.3e}",
            p.median_excess, p.ri_excess, p.landscape_mismatch
        ),
    );

    let cases = validation::sampler_suite(10, 500, 200_000, seed + 2)?;
    let worst = cases.iter().map(|c| c.interval_total_variation).fold(0.0, f64::max);
    let excess = cases
        .iter()
        .map(|c| c.total_variation - c.noise_floor)
        .fold(f64::NEG_INFINITY, f64::max);
    all &= report(
        worst <= 0.01 && excess <= 0.01,
        "sampler",
        format!("worst interval TV {worst:.4}, worst element TV above noise floor {excess:.4}"),
    );

    let bounds = validation::median_bound_suite(20, seed + 3)?;
    let bad = bounds.iter().filter(|c| c.violation_probability > c.beta1).count();
    all &= report(bad == 0, "median bound", format!("{} instances, {bad} above beta1", bounds.len()));

    let coverage = validation::coverage_suite(20, 7, 40, &[4.0, 16.0, 64.0], &[0.01, 0.05], seed + 4)?;
    let reachable: Vec<_> = coverage.iter().filter(|c| c.target_reachable()).collect();
    let short = reachable.iter().filter(|c| c.coverage < c.guarantee).count();
    let unreachable_short = coverage
        .iter()
        .filter(|c| !c.target_reachable() && c.coverage < c.guarantee)
        .count();
    all &= report(
        short == 0,
        "coverage",
        format!(
            "{} of {} instances reach the target, {short} of them below 1-beta; \
             {unreachable_short} below 1-beta where the target exceeds n/2",
            reachable.len(),
            coverage.len()
        ),
    );
    Ok(all)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Median(args) => median(&args).map(|()| true),
        Command::Sweep { spec, out } => sweep(&spec, &out).map(|()| true),
        Command::OracleCheck { seed } => oracle_check(seed),
        Command::EmitPlots { trials, out } => emit_plots(&trials, &out).map(|()| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
