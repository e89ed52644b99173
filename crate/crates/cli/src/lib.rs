//! Command-line front end. `main` is a thin wrapper over [`run`].

pub mod config;
pub mod experiments;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::{Arg, ArgAction, ArgMatches, Command};

use config::{read_config_file, Format, RawConfig, RunConfig, KEYS};
use experiments::{Experiment, Outcome, Registry};
use report::{
    RunError, RunReport, EXIT_ASSERTION, EXIT_OK, REPORT_SCHEMA, REPORT_VERSION, VERSIONS,
};

fn common_args(cmd: Command) -> Command {
    let cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("PATH")
            .help("flat key = value configuration file"),
    );
    KEYS.iter()
        .filter(|(key, _, _)| *key != "experiment")
        .fold(cmd, |cmd, &(key, flag, help)| {
            let arg = Arg::new(key).long(flag).help(help);
            cmd.arg(if key == "exact" {
                arg.action(ArgAction::SetTrue)
            } else {
                arg.value_name("VALUE").allow_hyphen_values(true)
            })
        })
}

pub fn command(registry: &Registry) -> Command {
    let mut cmd = Command::new("erepr")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Simulate two-agent LOCC experiments over ER and EPR worlds")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for e in registry.iter() {
        cmd = cmd.subcommand(common_args(
            Command::new(e.name())
                .about(e.about())
                .after_help(format!("Example:\n  {}", e.example())),
        ));
    }
    cmd.subcommand(common_args(
        Command::new("run")
            .about("Run the experiment named by the config file's 'experiment' key")
            .after_help("Example:\n  erepr run --config chsh.conf --seed 9"),
    ))
}

fn raw_config(name: &str, m: &ArgMatches) -> Result<RawConfig, RunError> {
    let mut raw = match m.get_one::<String>("config") {
        Some(path) => read_config_file(path.as_ref())?,
        None => RawConfig::new(),
    };
    for &(key, _, _) in KEYS {
        if key == "experiment" {
            continue;
        }
        if key == "exact" {
            if m.get_flag(key) {
                raw.insert(key.into(), "true".into());
            }
        } else if let Some(v) = m.get_one::<String>(key) {
            raw.insert(key.into(), v.clone());
        }
    }
    if name != "run" {
        raw.insert("experiment".into(), name.into());
    }
    Ok(raw)
}

fn execute(experiment: &dyn Experiment, cfg: &RunConfig) -> Result<Outcome, RunError> {
    cfg.check_capacity()?;
    match cfg.threads {
        None => experiment.run(cfg),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| config::ConfigError {
                key: "threads".into(),
                message: e.to_string(),
            })?
            .install(|| experiment.run(cfg)),
    }
}

fn write_payload(cfg: &RunConfig, outcome: &Outcome) -> Result<(), RunError> {
    let Some(path) = &cfg.out else { return Ok(()) };
    let bytes = match cfg.format {
        Format::Columnar => outcome.columnar.clone(),
        Format::Structured => {
            serde_json::to_string_pretty(&outcome.payload).expect("payload is valid JSON") + "\n"
        }
    };
    std::fs::write(path, bytes).map_err(|e| RunError::io(path, e))
}

/// Parses `args`, runs the chosen experiment and returns the exit status.
/// The report goes to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let registry = Registry::default();
    let matches = match command(&registry).try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() {
                report::EXIT_CONFIG
            } else {
                EXIT_OK
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    match run_subcommand(&registry, name, sub, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn run_subcommand(
    registry: &Registry,
    name: &str,
    m: &ArgMatches,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, RunError> {
    let cfg = RunConfig::from_raw(&raw_config(name, m)?)?;
    let experiment = registry
        .get(&cfg.experiment)
        .ok_or_else(|| config::ConfigError {
            key: "experiment".into(),
            message: format!(
                "unknown experiment '{}'; expected one of {:?}",
                cfg.experiment,
                registry.names()
            ),
        })?;
    let start = Instant::now();
    let outcome = execute(experiment, &cfg)?;
    write_payload(&cfg, &outcome)?;
    let report = RunReport {
        schema: REPORT_SCHEMA,
        version: REPORT_VERSION,
        experiment: cfg.experiment.clone(),
        config: cfg,
        payload: outcome.payload,
        checks: outcome.checks,
        versions: VERSIONS,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&report).expect("report is valid JSON");
    writeln!(stdout, "{text}").map_err(|e| RunError::io("<stdout>".as_ref(), e))?;
    if report.all_passed() {
        Ok(EXIT_OK)
    } else {
        for c in report.checks.iter().filter(|c| !c.passed) {
            let _ = writeln!(stderr, "check failed: {} ({})", c.name, c.detail);
        }
        Ok(EXIT_ASSERTION)
    }
}
