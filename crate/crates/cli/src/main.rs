use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use globtrace::explore::{explore, Budget, Outcome};
use globtrace::lang::Scenario;
use globtrace::report;
use globtrace::semantics::CorruptionMode;
use globtrace::suite;
use globtrace::trace::{parse_trace_json, EventKind};
use serde_json::Value;

/// Explore security protocol scenarios against a Dolev-Yao attacker and
/// check their trace invariant and security properties.
#[derive(Parser)]
#[command(name = "globtrace", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Explore a built-in scenario or a scenario file up to a bound.
    Check {
        /// Built-in name (ns, nsl, nsl-reuse, dh) or path to a scenario file.
        scenario: String,
        #[arg(long, default_value_t = 1)]
        initiators: usize,
        #[arg(long, default_value_t = 1)]
        responders: usize,
        /// Maximum number of global transitions on a path.
        #[arg(long, default_value_t = 40)]
        depth: usize,
        /// Constructor depth of attacker-synthesized messages.
        #[arg(long, default_value_t = 3)]
        synth_depth: usize,
        #[arg(long, default_value = "none")]
        corruption: CorruptionMode,
        /// Allow corruption only after every listed event kind occurred.
        #[arg(long, value_delimiter = ',')]
        corrupt_after: Vec<String>,
        /// Let the attacker drop messages.
        #[arg(long)]
        drops: bool,
        /// Interleave single instructions instead of whole receive-to-receive
        /// steps.
        #[arg(long)]
        small_step: bool,
        /// Stop after this many distinct states.
        #[arg(long)]
        max_states: Option<usize>,
        #[arg(long, env = "GLOBTRACE_WORKERS", default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Syntax-check a scenario file.
    Parse { file: PathBuf },
    /// Re-check a serialized trace: replays the monitor and every property.
    Trace {
        /// JSON file holding a trace array, an object with `scenario` and
        /// `trace`, or a check report (its first violation is replayed).
        file: PathBuf,
        /// Scenario to check against; defaults to the one named in the file.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn load_scenario(name: &str) -> Result<Scenario> {
    if let Some(s) = suite::builtin(name) {
        return s.map_err(|e| anyhow!("built-in scenario {name}: {e}"));
    }
    let path = Path::new(name);
    if !path.exists() {
        bail!(
            "unknown scenario '{name}' (built-ins: {})",
            suite::NAMES.join(", ")
        );
    }
    let src =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::parse(&src).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn trace_input(v: &Value) -> Result<(Option<String>, &Value)> {
    if v.is_array() {
        return Ok((None, v));
    }
    let name = v
        .get("scenario")
        .and_then(Value::as_str)
        .map(str::to_string);
    if let Some(tr) = v.get("trace") {
        return Ok((name, tr));
    }
    let first = v
        .get("violations")
        .and_then(Value::as_array)
        .and_then(|vs| vs.first())
        .ok_or_else(|| {
            anyhow!(
                "no trace found: expected an array, a 'trace' field or a report with violations"
            )
        })?;
    Ok((name, &first["trace"]))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Command::Check {
            scenario,
            initiators,
            responders,
            depth,
            synth_depth,
            corruption,
            corrupt_after,
            drops,
            small_step,
            max_states,
            workers,
            format,
            out,
        } => {
            if workers == 0 {
                bail!("--workers must be at least 1");
            }
            let s = load_scenario(&scenario)?;
            let budget = Budget {
                initiators,
                responders,
                depth,
                synth_depth,
                corruption,
                workers,
                drops,
                atomic_local: !small_step,
                prune_dead_receives: !small_step,
                corrupt_after: corrupt_after.iter().map(EventKind::new).collect(),
                max_states,
                ..Budget::default()
            };
            let r = explore(&s, &budget)?;
            let text = match format {
                Format::Json => report::to_json_string(&r),
                Format::Text => report::to_text(&r),
            };
            emit(&text, out.as_deref())?;
            Ok(if r.outcome() == Outcome::Violation {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Parse { file } => {
            let src = std::fs::read_to_string(&file)
                .with_context(|| format!("reading {}", file.display()))?;
            let s = Scenario::parse(&src).map_err(|e| anyhow!("{}: {e}", file.display()))?;
            println!(
                "{}: scenario {} with {} roles, {} events, {} properties",
                file.display(),
                s.name,
                s.roles.len(),
                s.spec.events.len(),
                s.properties.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Trace {
            file,
            scenario,
            format,
        } => {
            let src = std::fs::read_to_string(&file)
                .with_context(|| format!("reading {}", file.display()))?;
            let v: Value = serde_json::from_str(&src)
                .with_context(|| format!("parsing {}", file.display()))?;
            let (named, tr) = trace_input(&v)?;
            let name = scenario
                .or(named)
                .ok_or_else(|| anyhow!("the file names no scenario; pass --scenario"))?;
            let s = load_scenario(&name)?;
            let tr = parse_trace_json(tr)?;
            let r = report::replay(&s, &tr);
            match format {
                Format::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&report::replay_json(&r))?
                ),
                Format::Text => print!("{}", report::replay_text(&r)),
            }
            Ok(if r.violated() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
