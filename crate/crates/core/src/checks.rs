//! Fast invariant suite behind the `check` command.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::analysis::{classical_two_mode_shift, renormalization_invariant_residual};
use crate::bogoliubov::{bogoliubov_diagonalize, build_quadratic_form, linearized_normal_modes, Couplings};
use crate::circuit::{self, derived_mode_parameters, CircuitParams};
use crate::config::{parse_config, render_config, RunConfig};
use crate::constants::{josephson_inductance, HBAR};
use crate::cpb::diagonalize_cpb;
use crate::eigen::{eigh_dense, lanczos, SolverOptions};
use crate::error::Result;
use crate::hamiltonian::{assemble_hamiltonian, ModeSpec, TruncationPlan};

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Measured deviation.
    pub value: f64,
    pub tolerance: f64,
}

fn outcome(name: &'static str, value: Result<f64>, tolerance: f64) -> CheckOutcome {
    match value {
        Ok(v) => CheckOutcome {
            name,
            passed: v.is_finite() && v <= tolerance,
            value: v,
            tolerance,
        },
        Err(e) => {
            log::error!("check {name} failed to run: {e}");
            CheckOutcome {
                name,
                passed: false,
                value: f64::NAN,
                tolerance,
            }
        }
    }
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) / y).abs()).fold(0.0, f64::max)
}

fn renormalization(p: &CircuitParams) -> Result<f64> {
    let p = p.with_cj(0.0);
    (1..=50).try_fold(0.0_f64, |m, k| Ok(m.max(renormalization_invariant_residual(&p, k)?)))
}

fn capacitance_inverse(p: &CircuitParams) -> Result<f64> {
    let mut worst = 0.0_f64;
    for cj in [0.0, p.cj.max(5e-15)] {
        let q = p.with_cj(cj);
        for m in [1, 2, 10, 50] {
            let c = circuit::build_capacitance_matrix(&q, m)?;
            let inv = circuit::inverse_capacitance_closed_form(&q, m)?;
            worst = worst.max((c * inv - DMatrix::<f64>::identity(m + 1, m + 1)).amax());
        }
    }
    Ok(worst)
}

fn symplectic(p: &CircuitParams) -> Result<f64> {
    let mut worst = 0.0_f64;
    for cj in [0.0, p.cj.max(5e-15)] {
        let d = derived_mode_parameters(&p.with_cj(cj), 40)?;
        worst = worst.max(bogoliubov_diagonalize(&build_quadratic_form(&d)?)?.symplectic_error);
    }
    Ok(worst)
}

fn zero_coupling_identity(p: &CircuitParams) -> Result<f64> {
    let d = derived_mode_parameters(&p.with_cj(0.0), 20)?;
    let r = bogoliubov_diagonalize(&build_quadratic_form(&d)?)?;
    let eye = DMatrix::<f64>::identity(20, 20);
    let energies: Vec<f64> = d.omega.iter().map(|w| HBAR * w).collect();
    Ok((&r.a_block - eye).amax().max(r.b_block.amax()).max(max_rel(&r.energies(), &energies)))
}

fn two_mode_oracle(p: &CircuitParams) -> Result<f64> {
    let q = p.with_cj(0.0);
    let lin = linearized_normal_modes(&q, 1)?;
    let s = classical_two_mode_shift(josephson_inductance(q.ej), q.cc, q.l0(), q.c0())?;
    let closed = [s.omega_minus, s.omega_plus];
    let quartic = [s.quartic_roots.1, s.quartic_roots.0];
    Ok(max_rel(&lin, &closed).max(max_rel(&quartic, &closed)))
}

fn cpb_ladder() -> Result<f64> {
    let ec = 1e-24;
    let s = diagonalize_cpb(ec, 0.0, 6)?;
    let mut expect: Vec<f64> = (-6_i32..=6).map(|n| 4.0 * ec * (n * n) as f64).collect();
    expect.sort_by(f64::total_cmp);
    Ok(s.eps.iter().zip(&expect).map(|(a, b)| (a - b).abs() / ec).fold(0.0, f64::max))
}

fn cpb_truncation(p: &CircuitParams) -> Result<f64> {
    let ec = circuit::charging_energy(p, 1)?;
    let a = diagonalize_cpb(ec, p.ej, 20)?;
    let b = diagonalize_cpb(ec, p.ej, 30)?;
    let (fa, fb) = (a.eps[1] - a.eps[0], b.eps[1] - b.eps[0]);
    Ok(((fa - fb) / fb).abs())
}

fn small_instance(p: &CircuitParams) -> Result<crate::hamiltonian::SparseHamiltonian> {
    let d = derived_mode_parameters(&p.with_cj(0.0), 3)?;
    let cpb = diagonalize_cpb(d.e_c, p.ej, 20)?;
    let spec = ModeSpec {
        energies: d.omega.iter().map(|w| HBAR * w).collect(),
        couplings: Couplings::bare(&d.gbar, &cpb),
        gmat: None,
    };
    assemble_hamiltonian(crate::Execution::default(), &cpb, &spec, &TruncationPlan::new(6, vec![5, 4, 4])?)
}

fn hamiltonian_symmetry(p: &CircuitParams) -> Result<f64> {
    Ok(small_instance(p)?.asymmetry())
}

fn dense_vs_lanczos(p: &CircuitParams, seed: u64) -> Result<f64> {
    let h = small_instance(p)?;
    let dense = eigh_dense(&h.to_dense(), 5)?;
    let opts = SolverOptions {
        seed,
        ..SolverOptions::default()
    };
    let it = lanczos(&h, 5, &opts)?;
    let scale = h.max_abs();
    Ok(dense
        .values
        .iter()
        .zip(&it.values)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max))
}

fn config_round_trip(cfg: &RunConfig) -> Result<f64> {
    Ok(if parse_config(&render_config(cfg))? == *cfg { 0.0 } else { 1.0 })
}

pub fn run_checks(cfg: &RunConfig, seed: u64) -> Result<Vec<CheckOutcome>> {
    let p = cfg.circuit()?;
    Ok(vec![
        outcome("renormalization_identity", renormalization(&p), 1e-12),
        outcome("capacitance_inverse", capacitance_inverse(&p), 1e-12),
        outcome("symplectic", symplectic(&p), 1e-9),
        outcome("zero_coupling_identity", zero_coupling_identity(&p), 1e-12),
        outcome("two_mode_oracle", two_mode_oracle(&p), 1e-9),
        outcome("cpb_free_ladder", cpb_ladder(), 1e-12),
        outcome("cpb_charge_truncation", cpb_truncation(&p), 1e-9),
        outcome("hamiltonian_symmetry", hamiltonian_symmetry(&p), 0.0),
        outcome("dense_vs_lanczos", dense_vs_lanczos(&p, seed), 1e-8),
        outcome("config_round_trip", config_round_trip(cfg), 0.0),
    ])
}
