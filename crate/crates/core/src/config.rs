//! `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, unknown and repeated keys
//! are rejected. Every key is optional.

use std::fmt::Write as _;

use crate::circuit::CircuitParams;
use crate::constants::{FEMTOFARAD, GHZ, PLANCK};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub f0_ghz: f64,
    pub z0_ohm: f64,
    pub cc_ff: f64,
    pub cj_ff: f64,
    pub ej_ghz: f64,
    pub n_max: usize,
    pub budget: usize,
    pub m_min: usize,
    pub m_max: usize,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            f0_ghz: 10.0,
            z0_ohm: 50.0,
            cc_ff: 50.0,
            cj_ff: 0.0,
            ej_ghz: 20.0,
            n_max: 20,
            budget: 200_000,
            m_min: 1,
            m_max: 6,
            out_dir: "out".to_string(),
        }
    }
}

const KEYS: [&str; 10] = [
    "f0_ghz", "z0_ohm", "cc_ff", "cj_ff", "ej_ghz", "n_max", "budget", "m_min", "m_max", "out_dir",
];

impl RunConfig {
    pub fn circuit(&self) -> Result<CircuitParams> {
        CircuitParams::new(
            self.f0_ghz * GHZ,
            self.z0_ohm,
            self.cc_ff * FEMTOFARAD,
            self.cj_ff * FEMTOFARAD,
            self.ej_ghz * GHZ * PLANCK,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f0_ghz", self.f0_ghz),
            ("z0_ohm", self.z0_ohm),
            ("cc_ff", self.cc_ff),
            ("ej_ghz", self.ej_ghz),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(key(k), format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.cj_ff.is_finite() && self.cj_ff >= 0.0) {
            return Err(Error::param("cj_ff", format!("must be non-negative and finite, got {}", self.cj_ff)));
        }
        if self.n_max == 0 {
            return Err(Error::param("n_max", "must be at least 1"));
        }
        if self.budget < 64 {
            return Err(Error::param("budget", format!("must be at least 64, got {}", self.budget)));
        }
        if self.m_min == 0 {
            return Err(Error::param("m_min", "must be at least 1"));
        }
        if self.m_max < self.m_min {
            return Err(Error::param("m_max", format!("{} is below m_min = {}", self.m_max, self.m_min)));
        }
        if self.out_dir.is_empty() || self.out_dir.contains(['#', '\n', '\r']) || self.out_dir.trim() != self.out_dir {
            return Err(Error::param("out_dir", "must be a non-empty path without '#', line breaks or edge whitespace"));
        }
        Ok(())
    }

    pub fn m_range(&self) -> Vec<usize> {
        (self.m_min..=self.m_max).collect()
    }
}

fn key(k: &str) -> &'static str {
    KEYS.iter().find(|&&x| x == k).copied().unwrap_or("config")
}

fn parse_value<T: std::str::FromStr>(line: usize, k: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid value {v:?} for {k}"),
    })
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `key = value`, got {body:?}"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if v.is_empty() {
            return Err(Error::Parse {
                line,
                message: format!("missing value for {k}"),
            });
        }
        let Some(&known) = KEYS.iter().find(|&&x| x == k) else {
            return Err(Error::Parse {
                line,
                message: format!("unknown key {k:?}"),
            });
        };
        if seen.contains(&known) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key {k:?}"),
            });
        }
        seen.push(known);
        match known {
            "f0_ghz" => cfg.f0_ghz = parse_value(line, k, v)?,
            "z0_ohm" => cfg.z0_ohm = parse_value(line, k, v)?,
            "cc_ff" => cfg.cc_ff = parse_value(line, k, v)?,
            "cj_ff" => cfg.cj_ff = parse_value(line, k, v)?,
            "ej_ghz" => cfg.ej_ghz = parse_value(line, k, v)?,
            "n_max" => cfg.n_max = parse_value(line, k, v)?,
            "budget" => cfg.budget = parse_value(line, k, v)?,
            "m_min" => cfg.m_min = parse_value(line, k, v)?,
            "m_max" => cfg.m_max = parse_value(line, k, v)?,
            _ => cfg.out_dir = v.to_string(),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Text that parses back to the same configuration.
pub fn render_config(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "f0_ghz = {:?}", cfg.f0_ghz);
    let _ = writeln!(s, "z0_ohm = {:?}", cfg.z0_ohm);
    let _ = writeln!(s, "cc_ff = {:?}", cfg.cc_ff);
    let _ = writeln!(s, "cj_ff = {:?}", cfg.cj_ff);
    let _ = writeln!(s, "ej_ghz = {:?}", cfg.ej_ghz);
    let _ = writeln!(s, "n_max = {}", cfg.n_max);
    let _ = writeln!(s, "budget = {}", cfg.budget);
    let _ = writeln!(s, "m_min = {}", cfg.m_min);
    let _ = writeln!(s, "m_max = {}", cfg.m_max);
    let _ = writeln!(s, "out_dir = {}", cfg.out_dir);
    s
}
