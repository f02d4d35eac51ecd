use std::process::ExitCode;

use lces_cli::{
    cmd_check, cmd_compare, cmd_enumerate, cmd_graph, cmd_meta, cmd_run, cmd_translate, CliError,
    Limits, MetaOptions, RunOptions, Suite,
};
use lces_core::reduction::{Mode, Strategy};

const USAGE: &str = "\
usage: lces <command> [options]

commands:
  check FILE                     stratification + type-and-effect inference
  run FILE [--mode full|nd] [--strategy leftmost|random] [--seed N]
           [--max-steps K] [--trace out.jsonl] [--pretty]
  enumerate FILE [--mode full|nd] [--max-states N] [--max-depth D] [--pretty]
  graph FILE --dot out.dot [--mode full|nd] [--max-states N] [--max-depth D]
           [--label-width W]
  translate FILE.lc [-o out.lces]
  compare FILE_A FILE_B [--bound '[r -> {V}]']
  meta FILE --suite sr|progress|confluence|simulation|wb
           [--max-states N] [--max-depth D] [--join-budget J] [--budget B]
           [--samples S] [--steps K] [--seed N]

common options:
  --json      machine-readable diagnostics on errors
";

struct Args {
    positional: Vec<String>,
    flags: std::collections::BTreeMap<String, String>,
    switches: std::collections::BTreeSet<String>,
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    let mut positional = Vec::new();
    let mut flags = std::collections::BTreeMap::new();
    let mut switches = std::collections::BTreeSet::new();
    let value_flags = [
        "--strategy",
        "--seed",
        "--max-steps",
        "--mode",
        "--trace",
        "--max-states",
        "--max-depth",
        "--dot",
        "--label-width",
        "-o",
        "--bound",
        "--suite",
        "--join-budget",
        "--budget",
        "--samples",
        "--steps",
    ];
    let mut i = 0;
    while i < argv.len() {
        let a = &argv[i];
        if value_flags.contains(&a.as_str()) {
            let v = argv
                .get(i + 1)
                .ok_or_else(|| format!("{a} needs a value"))?;
            flags.insert(a.clone(), v.clone());
            i += 2;
        } else if a == "--json" || a == "--pretty" {
            switches.insert(a.clone());
            i += 1;
        } else if a.starts_with('-') {
            return Err(format!("unknown option {a}"));
        } else {
            positional.push(a.clone());
            i += 1;
        }
    }
    Ok(Args {
        positional,
        flags,
        switches,
    })
}

impl Args {
    fn usize_flag(&self, name: &str, default: usize) -> Result<usize, String> {
        match self.flags.get(name) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| format!("{name} expects a number")),
        }
    }

    fn u64_flag(&self, name: &str, default: u64) -> Result<u64, String> {
        match self.flags.get(name) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| format!("{name} expects a number")),
        }
    }

    fn mode(&self) -> Result<Mode, String> {
        match self.flags.get("--mode").map(|s| s.as_str()) {
            None | Some("full") => Ok(Mode::Full),
            Some("nd") => Ok(Mode::Nd),
            Some(other) => Err(format!("unknown mode '{other}' (full|nd)")),
        }
    }

    fn limits(&self) -> Result<Limits, String> {
        Ok(Limits {
            max_states: self.usize_flag("--max-states", Limits::default().max_states)?,
            max_depth: self.usize_flag("--max-depth", Limits::default().max_depth)?,
        })
    }
}

fn dispatch(argv: &[String]) -> Result<String, CliError> {
    let Some(command) = argv.first() else {
        return Err(CliError::Usage("missing command".into()));
    };
    let args = parse_args(&argv[1..]).map_err(CliError::Usage)?;
    let file = |k: usize| -> Result<&str, CliError> {
        args.positional
            .get(k)
            .map(|s| s.as_str())
            .ok_or_else(|| CliError::Usage("missing file argument".into()))
    };
    match command.as_str() {
        "check" => cmd_check(file(0)?),
        "run" => {
            let strategy = match args.flags.get("--strategy").map(|s| s.as_str()) {
                None | Some("leftmost") => Strategy::Leftmost,
                Some("random") => {
                    Strategy::Random(args.u64_flag("--seed", 0).map_err(CliError::Usage)?)
                }
                Some(other) => {
                    return Err(CliError::Usage(format!(
                        "unknown strategy '{other}' (leftmost|random)"
                    )))
                }
            };
            let opts = RunOptions {
                mode: args.mode().map_err(CliError::Usage)?,
                strategy,
                max_steps: args
                    .usize_flag("--max-steps", RunOptions::default().max_steps)
                    .map_err(CliError::Usage)?,
                trace_out: args.flags.get("--trace").cloned(),
                pretty: args.switches.contains("--pretty"),
            };
            cmd_run(file(0)?, &opts)
        }
        "enumerate" => cmd_enumerate(
            file(0)?,
            args.mode().map_err(CliError::Usage)?,
            &args.limits().map_err(CliError::Usage)?,
            args.switches.contains("--pretty"),
        ),
        "graph" => {
            let dot = args
                .flags
                .get("--dot")
                .ok_or_else(|| CliError::Usage("graph needs --dot OUT".into()))?;
            cmd_graph(
                file(0)?,
                dot,
                args.mode().map_err(CliError::Usage)?,
                &args.limits().map_err(CliError::Usage)?,
                args.usize_flag("--label-width", 40).map_err(CliError::Usage)?,
            )
        }
        "translate" => cmd_translate(file(0)?, args.flags.get("-o").map(|s| s.as_str())),
        "compare" => cmd_compare(
            file(0)?,
            file(1)?,
            args.flags.get("--bound").map(|s| s.as_str()),
        ),
        "meta" => {
            let suite = match args.flags.get("--suite").map(|s| s.as_str()) {
                Some("sr") => Suite::SubjectReduction,
                Some("progress") => Suite::Progress,
                Some("confluence") => Suite::Confluence,
                Some("simulation") => Suite::Simulation,
                Some("wb") => Suite::WellBehaved,
                Some(other) => {
                    return Err(CliError::Usage(format!(
                        "unknown suite '{other}' (sr|progress|confluence|simulation|wb)"
                    )))
                }
                None => return Err(CliError::Usage("meta needs --suite".into())),
            };
            let opts = MetaOptions {
                limits: args.limits().map_err(CliError::Usage)?,
                join_budget: args
                    .usize_flag("--join-budget", MetaOptions::default().join_budget)
                    .map_err(CliError::Usage)?,
                sim_budget: args
                    .usize_flag("--budget", MetaOptions::default().sim_budget)
                    .map_err(CliError::Usage)?,
                wb_samples: args
                    .usize_flag("--samples", MetaOptions::default().wb_samples)
                    .map_err(CliError::Usage)?,
                wb_steps: args
                    .usize_flag("--steps", MetaOptions::default().wb_steps)
                    .map_err(CliError::Usage)?,
                seed: args.u64_flag("--seed", 0).map_err(CliError::Usage)?,
                json: args.switches.contains("--json"),
            };
            cmd_meta(file(0)?, suite, &opts)
        }
        "help" | "--help" | "-h" => Ok(USAGE.to_string()),
        other => Err(CliError::Usage(format!("unknown command '{other}'"))),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let json = argv.iter().any(|a| a == "--json");
    match dispatch(&argv) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprint!("{}", {
                let mut s = e.render(json);
                if !s.ends_with('\n') {
                    s.push('\n');
                }
                s
            });
            ExitCode::FAILURE
        }
    }
}
