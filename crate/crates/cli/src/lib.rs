//! Scenario runner for the `lightcone` library.
//!
//! Every subcommand resolves its parameters from built-in defaults, then an
//! optional `key = value` file, then flags. The resolved values are echoed
//! at the top of the output.

pub mod config;
pub mod output;
pub mod scenarios;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Command};
use thiserror::Error;

use crate::config::parse_config;
use crate::output::{fit_table, render_csv, render_json};
use crate::scenarios::{Outcome, Scenario, SCENARIOS};

pub const SEED_ENV: &str = "LIGHTCONE_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error(transparent)]
    Core(#[from] lightcone::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("check failed: {0}")]
    AssertFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::AssertFailed(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Config(format!("format must be csv or json, got `{other}`"))),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Parameter values after defaults, file and flags have been merged.
#[derive(Debug, Clone)]
pub struct Params {
    values: BTreeMap<&'static str, String>,
}

impl Params {
    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("scenario read undeclared key {key}"))
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let s = self.raw(key).trim();
        s.parse().map_err(|_| CliError::Config(format!("`{key}` must be a number, got `{s}`")))
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        let s = self.raw(key).trim();
        s.parse().map_err(|_| CliError::Config(format!("`{key}` must be a non-negative integer, got `{s}`")))
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key).trim() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            s => Err(CliError::Config(format!("`{key}` must be true or false, got `{s}`"))),
        }
    }

    pub fn str(&self, key: &str) -> &str {
        self.raw(key).trim()
    }

    /// Comma-separated list of numbers.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.str(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| CliError::Config(format!("`{key}`: `{s}` is not a number"))))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: &'static Scenario,
    pub params: Params,
    pub seed: u64,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub fit_output: Option<PathBuf>,
    pub assert: bool,
}

impl RunConfig {
    /// Header lines, in declaration order. Output paths are left out so that
    /// bodies written to different files stay identical.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![("scenario".to_string(), self.scenario.name.to_string())];
        for param in self.scenario.params {
            out.push((param.key.to_string(), self.params.raw(param.key).to_string()));
        }
        out.push(("seed".into(), self.seed.to_string()));
        out.push(("format".into(), self.format.as_str().into()));
        out.push(("assert".into(), self.assert.to_string()));
        out
    }
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

pub fn command() -> Command {
    let mut cmd = Command::new("lightcone")
        .about("Photon-exchange scenarios: propagators, amplitudes, protocols and lattice checks")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for sc in SCENARIOS {
        let mut sub = Command::new(sc.name).about(sc.about);
        for p in sc.params {
            let help = format!("{} [default: {}]", p.help, p.default);
            sub = sub.arg(Arg::new(p.key).long(flag_name(p.key)).value_name("VALUE").help(help));
        }
        sub = sub
            .arg(Arg::new("config").long("config").value_name("PATH").help("key = value file"))
            .arg(Arg::new("output").long("output").short('o').value_name("PATH").help("Output file [default: stdout]"))
            .arg(Arg::new("format").long("format").value_name("csv|json").help("Output format [default: csv]"))
            .arg(Arg::new("seed").long("seed").value_name("N").help(format!("RNG seed [fallback: ${SEED_ENV}, then {DEFAULT_SEED}]")))
            .arg(Arg::new("fit_output").long("fit-output").value_name("PATH").help("Write fitted slopes here"))
            .arg(Arg::new("assert").long("assert").action(ArgAction::SetTrue).help("Exit 3 unless the acceptance check holds"));
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn parse_seed(s: &str, origin: &str) -> Result<u64, CliError> {
    s.trim().parse().map_err(|_| CliError::Config(format!("seed from {origin} must be an unsigned 64-bit integer, got `{s}`")))
}

fn resolve(scenario: &'static Scenario, m: &ArgMatches) -> Result<RunConfig, CliError> {
    let mut values: BTreeMap<&'static str, String> =
        scenario.params.iter().map(|p| (p.key, p.default.to_string())).collect();
    let mut seed = None;
    let mut format = None;
    let mut output = None;
    let mut fit_output = None;

    if let Some(path) = m.get_one::<String>("config") {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
        for entry in parse_config(&text)? {
            match entry.key.as_str() {
                "seed" => seed = Some(parse_seed(&entry.value, "config file")?),
                "format" => format = Some(Format::parse(&entry.value)?),
                "output" => output = Some(PathBuf::from(&entry.value)),
                "fit_output" => fit_output = Some(PathBuf::from(&entry.value)),
                key => {
                    let param = scenario
                        .params
                        .iter()
                        .find(|p| p.key == key)
                        .ok_or_else(|| CliError::UnknownKey(format!("{key} (line {})", entry.line)))?;
                    values.insert(param.key, entry.value);
                }
            }
        }
    }
    for p in scenario.params {
        if let Some(v) = m.get_one::<String>(p.key) {
            values.insert(p.key, v.clone());
        }
    }
    if let Some(s) = m.get_one::<String>("seed") {
        seed = Some(parse_seed(s, "--seed")?);
    }
    let seed = match seed {
        Some(s) => s,
        None => match std::env::var(SEED_ENV) {
            Ok(v) => parse_seed(&v, SEED_ENV)?,
            Err(_) => DEFAULT_SEED,
        },
    };
    if let Some(f) = m.get_one::<String>("format") {
        format = Some(Format::parse(f)?);
    }
    if let Some(p) = m.get_one::<String>("output") {
        output = Some(PathBuf::from(p));
    }
    if let Some(p) = m.get_one::<String>("fit_output") {
        fit_output = Some(PathBuf::from(p));
    }
    Ok(RunConfig {
        scenario,
        params: Params { values },
        seed,
        format: format.unwrap_or(Format::Csv),
        output,
        fit_output,
        assert: m.get_flag("assert"),
    })
}

fn write_to(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit(cfg: &RunConfig, outcome: &Outcome) -> Result<(), CliError> {
    let echo = cfg.echo();
    let fits = (!outcome.fits.is_empty()).then(|| fit_table(&outcome.fits));
    let body = match cfg.format {
        Format::Csv => render_csv(&echo, &outcome.table),
        Format::Json => render_json(&echo, &outcome.table, fits.as_ref()),
    };
    write_to(cfg.output.as_ref(), &body)?;
    if let Some(fits) = &fits {
        match &cfg.fit_output {
            Some(path) => {
                let text = match cfg.format {
                    Format::Csv => render_csv(&echo, fits),
                    Format::Json => render_json(&echo, fits, None),
                };
                fs::write(path, text)?;
            }
            None => {
                for (name, f) in &outcome.fits {
                    eprintln!("fit {name}: slope {} intercept {} r² {}", f.slope, f.intercept, f.r_squared);
                }
            }
        }
    }
    Ok(())
}

/// Runs one already-parsed invocation.
pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let outcome = (cfg.scenario.run)(&cfg.params, cfg.seed)?;
    emit(cfg, &outcome)?;
    if cfg.assert {
        let check = &outcome.check;
        if check.pass {
            eprintln!("check passed: {}", check.detail);
        } else {
            return Err(CliError::AssertFailed(check.detail.clone()));
        }
    }
    Ok(())
}

/// Parses `argv` (program name first) and runs it, returning the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let scenario = scenario_by_name(name).expect("clap only accepts known subcommands");
    let result = resolve(scenario, sub).and_then(|cfg| execute(&cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn scenario_by_name(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_is_well_formed() {
        command().debug_assert();
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::UnknownKey("x".into()).exit_code(), 1);
        assert_eq!(CliError::Core(lightcone::Error::NumericalFailure("x".into())).exit_code(), 2);
        assert_eq!(CliError::Core(lightcone::Error::ConvergenceFailure { estimate: 1.0, tolerance: 0.1 }).exit_code(), 2);
        assert_eq!(CliError::Core(lightcone::Error::Domain("x".into())).exit_code(), 1);
        assert_eq!(CliError::AssertFailed("x".into()).exit_code(), 3);
    }

    #[test]
    fn every_scenario_is_reachable() {
        assert_eq!(SCENARIOS.len(), 10);
        for s in SCENARIOS {
            assert!(scenario_by_name(s.name).is_some());
        }
    }
}
