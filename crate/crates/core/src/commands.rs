//! Command dispatch and result formatting.
//!
//! Floats are written in shortest round-trip form, lines end in LF, and
//! every JSON summary echoes the configuration, the library version and the
//! physical constants, so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::analysis::{
    coupling_cutoff_curve, dressed_transition_series, lamb_shift_estimate_with, nonrenormalized_series, ConvergenceSeries,
    SeriesOptions, ShiftFormula,
};
use crate::bogoliubov::{bogoliubov_diagonalize, build_quadratic_form, linearized_normal_modes};
use crate::checks::{run_checks, CheckOutcome};
use crate::circuit::{self, derived_mode_parameters};
use crate::config::RunConfig;
use crate::constants::{joule_to_ghz, rad_to_ghz, E_CHARGE, HBAR, PLANCK};
use crate::cpb::diagonalize_cpb;
use crate::eigen::{SolverOptions, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Mode count for `couplings` when none is given.
pub const DEFAULT_CUTOFF_MODES: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Converge,
    ConvergeNaive,
    Couplings,
    Modes,
    Estimate,
    Cpb,
    Check,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Converge,
        Command::ConvergeNaive,
        Command::Couplings,
        Command::Modes,
        Command::Estimate,
        Command::Cpb,
        Command::Check,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Converge => "converge",
            Command::ConvergeNaive => "converge-naive",
            Command::Couplings => "couplings",
            Command::Modes => "modes",
            Command::Estimate => "estimate",
            Command::Cpb => "cpb",
            Command::Check => "check",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::param("command", format!("unknown command {s:?}")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Mode count for the single-M commands; `converge*` read it as m_max.
    pub modes: Option<usize>,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            modes: None,
            seed: DEFAULT_SEED,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<OutputFile>,
    /// False only when `check` found a failing invariant.
    pub success: bool,
}

impl Outcome {
    fn ok(files: Vec<OutputFile>) -> Self {
        Outcome { files, success: true }
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for f in &self.files {
            std::fs::write(dir.join(&f.name), &f.contents)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    f0_ghz: f64,
    z0_ohm: f64,
    cc_ff: f64,
    cj_ff: f64,
    ej_ghz: f64,
    n_max: usize,
    budget: usize,
    m_min: usize,
    m_max: usize,
    out_dir: &'a str,
}

#[derive(Serialize)]
struct Constants {
    elementary_charge: f64,
    planck: f64,
    hbar: f64,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    command: &'static str,
    config: ConfigEcho<'a>,
    constants: Constants,
    result: T,
}

fn json<T: Serialize>(cmd: Command, cfg: &RunConfig, result: T) -> Result<String> {
    let env = Envelope {
        version: VERSION,
        command: cmd.name(),
        config: ConfigEcho {
            f0_ghz: cfg.f0_ghz,
            z0_ohm: cfg.z0_ohm,
            cc_ff: cfg.cc_ff,
            cj_ff: cfg.cj_ff,
            ej_ghz: cfg.ej_ghz,
            n_max: cfg.n_max,
            budget: cfg.budget,
            m_min: cfg.m_min,
            m_max: cfg.m_max,
            out_dir: &cfg.out_dir,
        },
        constants: Constants {
            elementary_charge: E_CHARGE,
            planck: PLANCK,
            hbar: HBAR,
        },
        result,
    };
    let mut s = serde_json::to_string_pretty(&env).map_err(|e| Error::Dimension(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// CSV with a header row; floats in shortest round-trip form.
struct Csv(String);

impl Csv {
    fn new(header: &[&str]) -> Self {
        Csv(header.join(",") + "\n")
    }

    fn row(&mut self, cells: &[Cell]) {
        let parts: Vec<String> = cells.iter().map(Cell::render).collect();
        let _ = writeln!(self.0, "{}", parts.join(","));
    }
}

enum Cell {
    F(f64),
    U(usize),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => format!("{x:?}"),
            Cell::U(n) => n.to_string(),
        }
    }
}

fn series_csv(series: &ConvergenceSeries) -> String {
    let mut csv = Csv::new(&["M", "f_dressed_ghz", "f_bare_ghz", "e_c_ghz", "g0_ghz", "ambiguous_flag"]);
    for p in &series.points {
        csv.row(&[
            Cell::U(p.m),
            Cell::F(p.f_dressed / 1e9),
            Cell::F(p.f_bare / 1e9),
            Cell::F(p.e_c / 1e9),
            Cell::F(p.g0 / 1e9),
            Cell::U(p.ambiguous as usize),
        ]);
    }
    csv.0
}

fn series_options(cfg: &RunConfig, opts: &RunOptions) -> SeriesOptions {
    SeriesOptions {
        budget: cfg.budget,
        n_max: cfg.n_max,
        solver: SolverOptions {
            exec: opts.exec,
            seed: opts.seed,
            ..SolverOptions::default()
        },
        ..SeriesOptions::default()
    }
}

fn file(name: &str, contents: String) -> OutputFile {
    OutputFile {
        name: name.to_string(),
        contents,
    }
}

#[derive(Serialize)]
struct CutoffSummary {
    m_count: usize,
    m_c: f64,
    knee: usize,
    high_asymptote_ghz: f64,
}

#[derive(Serialize)]
struct CpbSummary {
    m_count: usize,
    e_c_ghz: f64,
    e_j_ghz: f64,
    n_max: usize,
    levels_ghz: Vec<f64>,
    f_ge_ghz: f64,
    n_ge: f64,
    edge_weight: f64,
}

#[derive(Serialize)]
struct CheckSummary {
    passed: bool,
    checks: Vec<CheckOutcome>,
}

pub fn run_command(cmd: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome> {
    cfg.validate()?;
    let p = cfg.circuit()?;
    let single_m = opts.modes.unwrap_or(cfg.m_max);
    if single_m == 0 {
        return Err(Error::param("modes", "must be at least 1"));
    }
    match cmd {
        Command::Converge | Command::ConvergeNaive => {
            let mut cfg = cfg.clone();
            cfg.m_max = opts.modes.unwrap_or(cfg.m_max);
            cfg.validate()?;
            let so = series_options(&cfg, opts);
            let (series, name) = if cmd == Command::Converge {
                (dressed_transition_series(&p, &cfg.m_range(), &so)?, "converge.csv")
            } else {
                (nonrenormalized_series(&p, &cfg.m_range(), &so)?, "converge_naive.csv")
            };
            Ok(Outcome::ok(vec![file(name, series_csv(&series))]))
        }
        Command::Couplings => {
            let m = opts.modes.unwrap_or(DEFAULT_CUTOFF_MODES);
            let curve = coupling_cutoff_curve(&p, m)?;
            let mut csv = Csv::new(&["m", "g_ghz", "low_asymptote_ghz", "high_asymptote_ghz"]);
            for (k, (g, low)) in curve.g.iter().zip(&curve.low_asymptote).enumerate() {
                csv.row(&[Cell::U(k), Cell::F(g / 1e9), Cell::F(low / 1e9), Cell::F(curve.high_asymptote / 1e9)]);
            }
            let summary = CutoffSummary {
                m_count: m,
                m_c: curve.m_c,
                knee: curve.knee,
                high_asymptote_ghz: curve.high_asymptote / 1e9,
            };
            Ok(Outcome::ok(vec![
                file("couplings.csv", csv.0),
                file("couplings.json", json(cmd, cfg, summary)?),
            ]))
        }
        Command::Modes => {
            let d = derived_mode_parameters(&p, single_m)?;
            let bog = bogoliubov_diagonalize(&build_quadratic_form(&d)?)?;
            let mut csv = Csv::new(&["m", "f_bare_ghz", "f_normal_ghz"]);
            for (k, (w, f)) in d.omega.iter().zip(bog.frequencies()).enumerate() {
                csv.row(&[Cell::U(k), Cell::F(rad_to_ghz(*w)), Cell::F(rad_to_ghz(f))]);
            }
            let mut lin = Csv::new(&["k", "f_ghz"]);
            for (k, w) in linearized_normal_modes(&p, single_m)?.iter().enumerate() {
                lin.row(&[Cell::U(k), Cell::F(rad_to_ghz(*w))]);
            }
            Ok(Outcome::ok(vec![file("modes.csv", csv.0), file("linearized_modes.csv", lin.0)]))
        }
        Command::Estimate => {
            let mut csv = Csv::new(&["m", "f_mode_ghz", "chi_mhz", "chi_lamb_mhz"]);
            for m in 0..single_m {
                let cubed = lamb_shift_estimate_with(&p, m, ShiftFormula::ClassicalCubed)?;
                let lamb = lamb_shift_estimate_with(&p, m, ShiftFormula::StandardLamb)?;
                csv.row(&[
                    Cell::U(m),
                    Cell::F(rad_to_ghz((2 * m + 1) as f64 * p.omega0())),
                    Cell::F(cubed.chi / 1e6),
                    Cell::F(lamb.chi / 1e6),
                ]);
            }
            Ok(Outcome::ok(vec![file("estimate.csv", csv.0)]))
        }
        Command::Cpb => {
            let m = opts.modes.unwrap_or(cfg.m_min);
            let e_c = circuit::charging_energy(&p, m)?;
            let s = diagonalize_cpb(e_c, p.ej, cfg.n_max)?;
            let summary = CpbSummary {
                m_count: m,
                e_c_ghz: joule_to_ghz(e_c),
                e_j_ghz: joule_to_ghz(p.ej),
                n_max: cfg.n_max,
                levels_ghz: s.eps.iter().take(10).map(|e| joule_to_ghz(e - s.eps[0])).collect(),
                f_ge_ghz: joule_to_ghz(s.eps[1] - s.eps[0]),
                n_ge: s.n_elem[(0, 1)],
                edge_weight: s.edge_weight,
            };
            Ok(Outcome::ok(vec![file("cpb.json", json(cmd, cfg, summary)?)]))
        }
        Command::Check => {
            let checks = run_checks(cfg, opts.seed)?;
            let passed = checks.iter().all(|c| c.passed);
            for c in checks.iter().filter(|c| !c.passed) {
                log::error!("check {} failed: {:e} > {:e}", c.name, c.value, c.tolerance);
            }
            let contents = json(cmd, cfg, CheckSummary { passed, checks })?;
            Ok(Outcome {
                files: vec![file("check.json", contents)],
                success: passed,
            })
        }
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'static str,
    message: String,
    command: Option<&'a str>,
}

/// One-line JSON error record for stderr.
pub fn error_record(err: &Error, command: Option<&str>) -> String {
    let rec = ErrorRecord {
        error: err.kind(),
        message: err.to_string(),
        command,
    };
    serde_json::to_string(&rec).unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", err.kind()))
}

/// 0 success, 1 numeric failure, 2 usage error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_usage() {
        2
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("fly".parse::<Command>().is_err());
    }

    #[test]
    fn csv_float_format() {
        assert_eq!(Cell::F(0.1).render(), "0.1");
        assert_eq!(Cell::F(6.775381).render(), "6.775381");
        assert_eq!(Cell::F(1e-20).render(), "1e-20");
    }

    #[test]
    fn cpb_and_estimate_outputs() {
        let cfg = RunConfig::default();
        let out = run_command(Command::Cpb, &cfg, &RunOptions::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.files[0].contents).unwrap();
        assert_eq!(v["version"], VERSION);
        assert_eq!(v["config"]["ej_ghz"], 20.0);
        let f = v["result"]["f_ge_ghz"].as_f64().unwrap();
        assert!((f - 8.13).abs() < 0.02, "{f}");
        let est = run_command(Command::Estimate, &cfg, &RunOptions::default()).unwrap();
        assert!(est.files[0].contents.starts_with("m,f_mode_ghz,chi_mhz,chi_lamb_mhz\n0,10.0,"));
        assert_eq!(est.files[0].contents.lines().count(), 7);
    }

    #[test]
    fn error_records_are_json() {
        let e = Error::param("cc_ff", "must be positive");
        let rec: serde_json::Value = serde_json::from_str(&error_record(&e, Some("cpb"))).unwrap();
        assert_eq!(rec["error"], e.kind());
        assert_eq!(exit_code(&e), 2);
        assert_eq!(exit_code(&Error::Singular("x".into())), 1);
    }
}
