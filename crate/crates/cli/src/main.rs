use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lipext_cli::instance::{load_instance, FieldFile};
use lipext_cli::report::{emit_report, write_report, ReportFormat};
use lipext_cli::{
    generate_instance, run_verification_suite, Family, HarnessError, Params, SubspaceRule,
    SuiteConfig,
};
use lipext_core::{
    bound_constants, choose_lift_dimension, doubling_constant, operator_norm_lower_bound,
    ExtensionOperator, LiftConfig, Norm,
};

#[derive(Parser)]
#[command(name = "lipext", version, about = "Linear Lipschitz extension toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L1,
    L2,
    Linf,
}

impl From<NormArg> for Norm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::L1 => Norm::L1,
            NormArg::L2 => Norm::L2,
            NormArg::Linf => Norm::Linf,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Jsonl => ReportFormat::Jsonl,
        }
    }
}

#[derive(clap::Args)]
struct SuiteArgs {
    /// Random layer triples per instance.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    pairs: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Fill the wall_time_ms column (makes output run-dependent).
    #[arg(long)]
    record_timings: bool,
}

impl SuiteArgs {
    fn config(&self) -> SuiteConfig {
        SuiteConfig {
            layer_samples: self.samples,
            lemma_pairs: self.pairs,
            norm_trials: self.trials,
            record_timings: self.record_timings,
            ..SuiteConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate an instance file.
    Validate { instance: PathBuf },
    /// Generate an instance file.
    Gen {
        #[arg(long)]
        family: String,
        /// Comma-separated key=value pairs, e.g. `a=4,k=2`.
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long, default_value = "all")]
        subspace: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extend a field from the subspace to every point.
    Extend {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lower-bound the operator norm and compare with the explicit bound.
    NormEstimate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_enum, default_value = "l2")]
        norm: NormArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the verification suite on one instance.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        suite: SuiteArgs,
        /// Also write the report row here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "jsonl")]
        format: FormatArg,
    },
    /// Run the suite on every instance matching a glob and write a report.
    Report {
        #[arg(long)]
        glob: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[command(flatten)]
        suite: SuiteArgs,
    },
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<Outcome, HarnessError> {
    let mut stdout = std::io::stdout().lock();
    match command {
        Command::Validate { instance } => {
            let inst = load_instance(&instance)?;
            let d = doubling_constant(&inst.space, &inst.measure);
            let n = match inst.lift_dimension {
                Some(n) => n,
                None => choose_lift_dimension(d.value)?,
            };
            let _ = writeln!(
                stdout,
                "ok {}: n={} subspace={} doubling={} lift_dimension={n}",
                inst.name,
                inst.space.len(),
                inst.subspace().len(),
                d.value
            );
            Ok(Outcome::Pass)
        }
        Command::Gen {
            family,
            params,
            subspace,
            seed,
            out,
        } => {
            let family: Family = family.parse()?;
            let params: Params = params.parse()?;
            let rule: SubspaceRule = subspace.parse()?;
            let file = generate_instance(family, &params, rule, seed)?;
            file.save(&out)?;
            let _ = writeln!(stdout, "wrote {} ({} points)", out.display(), file.points.len());
            Ok(Outcome::Pass)
        }
        Command::Extend {
            instance,
            field,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let f = FieldFile::load(&field)?.to_field()?;
            let cfg = lift_config(&inst)?;
            let extended = ExtensionOperator::new(&inst.space, &inst.measure, &cfg)?.apply(&f)?;
            FieldFile::from_field(&extended, Some(inst.space.labels().to_vec())).save(&out)?;
            let _ = writeln!(stdout, "wrote {} (lift dimension {})", out.display(), cfg.dimension());
            Ok(Outcome::Pass)
        }
        Command::NormEstimate {
            instance,
            trials,
            k,
            norm,
            seed,
        } => {
            let inst = load_instance(&instance)?;
            let cfg = lift_config(&inst)?;
            let consts = bound_constants(&cfg);
            let est = operator_norm_lower_bound(
                &inst.space,
                &inst.measure,
                &cfg,
                trials,
                k,
                norm.into(),
                seed,
            )?;
            let _ = writeln!(
                stdout,
                "lower_bound={} prop_bound={} gap={:.3e} lift_dimension={} best_field={} fields={}",
                est.lower_bound,
                consts.prop_bound,
                consts.prop_bound / est.lower_bound,
                cfg.dimension(),
                est.best_field,
                est.trials + est.basis_fields
            );
            Ok(if est.lower_bound <= consts.prop_bound {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }
        Command::Verify {
            instance,
            suite,
            out,
            format,
        } => {
            let inst = load_instance(&instance)?;
            let outcome = run_verification_suite(&inst, &suite.config(), suite.seed)?;
            for check in &outcome.checks {
                let _ = writeln!(stdout, "{check}");
            }
            write_report(std::slice::from_ref(&outcome.row), &mut stdout, format.into())?;
            if let Some(path) = out {
                emit_report(std::slice::from_ref(&outcome.row), &path, format.into())?;
            }
            Ok(if outcome.all_pass() {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }
        Command::Report {
            glob,
            out,
            format,
            suite,
        } => {
            let paths = expand_glob(&glob)?;
            let cfg = suite.config();
            let mut rows = Vec::with_capacity(paths.len());
            for path in &paths {
                let inst = load_instance(path)?;
                let outcome = run_verification_suite(&inst, &cfg, suite.seed)?;
                let _ = writeln!(
                    stdout,
                    "{} {}",
                    if outcome.all_pass() { "PASS" } else { "FAIL" },
                    path.display()
                );
                rows.push(outcome.row);
            }
            emit_report(&rows, &out, format.into())?;
            Ok(if rows.iter().all(|r| r.all_pass) {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }
    }
}

fn lift_config(inst: &lipext_cli::Instance) -> Result<LiftConfig, HarnessError> {
    let d = doubling_constant(&inst.space, &inst.measure).value;
    let n = match inst.lift_dimension {
        Some(n) => n,
        None => choose_lift_dimension(d)?,
    };
    Ok(LiftConfig::with_dimension(n, d)?)
}

/// Matching paths in sorted order.
fn expand_glob(pattern: &str) -> Result<Vec<PathBuf>, HarnessError> {
    let bad = |e: String| HarnessError::ParamOutOfRange(format!("glob {pattern:?}: {e}"));
    let mut paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| bad(e.to_string()))?
        .collect::<Result<_, _>>()
        .map_err(|e| bad(e.to_string()))?;
    paths.retain(|p| Path::is_file(p));
    paths.sort();
    if paths.is_empty() {
        return Err(bad("no files match".into()));
    }
    Ok(paths)
}
