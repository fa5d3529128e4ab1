//! Convergence sweeps, Lamb-shift estimators and coupling-cutoff curves.

use nalgebra::DMatrix;

use crate::bogoliubov::{build_quadratic_form, bogoliubov_diagonalize, effective_couplings, Couplings};
use crate::circuit::{self, derived_mode_parameters, CircuitParams};
use crate::constants::{E_CHARGE, HBAR, PLANCK};
use crate::cpb::{diagonalize_cpb, transition_frequency, DEFAULT_N_MAX};
use crate::eigen::{identify_dressed_states, lowest_eigenpairs, SolverOptions};
use crate::error::{Error, Result};
use crate::exec;
use crate::hamiltonian::{assemble_hamiltonian, truncation_plan_with, ModeSpec, TruncationPlan, DEFAULT_BUDGET};
use crate::nonsym::real_eigen;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
/// Eigenpairs requested per series point; (g, vac) and (e, vac) sit well inside.
const SERIES_EIGENPAIRS: usize = 6;
/// Atom levels kept in sweeps. The vacuum dressing by high modes only
/// cancels the E_C renormalization when the charge sum rules are nearly
/// saturated, which needs about a dozen transmon levels.
pub const SERIES_ATOM_LEVELS: usize = 12;

#[derive(Debug, Clone, Copy)]
pub struct SeriesOptions {
    pub budget: usize,
    pub n_max: usize,
    pub atom_levels: usize,
    pub solver: SolverOptions,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            budget: DEFAULT_BUDGET,
            n_max: DEFAULT_N_MAX,
            atom_levels: SERIES_ATOM_LEVELS,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargingModel {
    /// E_C^(M) from the full circuit.
    Renormalized,
    /// E_C fixed at e²/2C_c for every M.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub m: usize,
    /// Dressed |g⟩→|e⟩ frequency (Hz).
    pub f_dressed: f64,
    /// Bare ω_a^(M)/2π (Hz).
    pub f_bare: f64,
    /// E_C/h (Hz).
    pub e_c: f64,
    /// |g_{0,g,e}|/2π (Hz).
    pub g0: f64,
    pub plan: TruncationPlan,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSeries {
    pub model: ChargingModel,
    pub points: Vec<SeriesPoint>,
}

impl ConvergenceSeries {
    pub fn m_values(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.m).collect()
    }

    pub fn f_dressed(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.f_dressed).collect()
    }

    /// Successive steps f(M+1) − f(M) (Hz).
    pub fn steps(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1].f_dressed - w[0].f_dressed).collect()
    }
}

/// Mode energies and atom couplings, pre-diagonalized when C_J > 0.
fn mode_sector(params: &CircuitParams, derived: &circuit::DerivedParams, cpb: &crate::cpb::CpbSpectrum) -> Result<(Vec<f64>, Couplings)> {
    if params.cj > 0.0 {
        let bog = bogoliubov_diagonalize(&build_quadratic_form(derived)?)?;
        let g = effective_couplings(&derived.gbar, cpb, &bog)?;
        Ok((bog.energies(), g))
    } else {
        Ok((derived.omega.iter().map(|w| HBAR * w).collect(), Couplings::bare(&derived.gbar, cpb)))
    }
}

pub fn series_point(params: &CircuitParams, m: usize, model: ChargingModel, opts: &SeriesOptions) -> Result<SeriesPoint> {
    let derived = derived_mode_parameters(params, m)?;
    let e_c = match model {
        ChargingModel::Renormalized => derived.e_c,
        ChargingModel::Fixed => E_CHARGE * E_CHARGE / (2.0 * params.cc),
    };
    let cpb = diagonalize_cpb(e_c, params.ej, opts.n_max)?;
    let (energies, couplings) = mode_sector(params, &derived, &cpb)?;
    let omega_a = transition_frequency(&cpb, 0, 1)?;
    let omegas: Vec<f64> = energies.iter().map(|e| e / HBAR).collect();
    let plan = truncation_plan_with(&omegas, omega_a, opts.budget, opts.atom_levels)?;
    let g0 = couplings.g(0, 0, 1).abs() / TWO_PI;
    let spec = ModeSpec {
        energies,
        couplings,
        gmat: None,
    };
    let h = assemble_hamiltonian(opts.solver.exec, &cpb, &spec, &plan)?;
    let eig = lowest_eigenpairs(&h, SERIES_EIGENPAIRS.min(h.dim()), &opts.solver)?;
    let assign = identify_dressed_states(&eig, &plan, &[0, 1])?;
    let (g, e) = match (assign.get(0), assign.get(1)) {
        (Some(g), Some(e)) => (g, e),
        _ => return Err(Error::Dimension("dressed ground or excited state not found".into())),
    };
    if assign.any_ambiguous() {
        log::warn!("M = {m}: dressed-state assignment ambiguous (overlaps {:.3}, {:.3})", g.overlap, e.overlap);
    }
    Ok(SeriesPoint {
        m,
        f_dressed: (eig.values[e.eigen_index] - eig.values[g.eigen_index]) / PLANCK,
        f_bare: omega_a / TWO_PI,
        e_c: e_c / PLANCK,
        g0,
        plan,
        ambiguous: assign.any_ambiguous(),
    })
}

fn check_range(m_range: &[usize]) -> Result<()> {
    if m_range.is_empty() || m_range.contains(&0) {
        return Err(Error::param("m_range", "needs at least one mode count, all ≥ 1"));
    }
    Ok(())
}

fn run_series(params: &CircuitParams, m_range: &[usize], model: ChargingModel, opts: &SeriesOptions) -> Result<ConvergenceSeries> {
    params.validate()?;
    check_range(m_range)?;
    let points = exec::map_collect(opts.solver.exec, m_range, |&m| series_point(params, m, model, opts));
    Ok(ConvergenceSeries {
        model,
        points: points.into_iter().collect::<Result<_>>()?,
    })
}

/// Dressed |g⟩→|e⟩ frequency against M with the circuit-renormalized parameters.
pub fn dressed_transition_series(params: &CircuitParams, m_range: &[usize], opts: &SeriesOptions) -> Result<ConvergenceSeries> {
    run_series(params, m_range, ChargingModel::Renormalized, opts)
}

/// Same pipeline with E_C pinned to e²/2C_c.
pub fn nonrenormalized_series(params: &CircuitParams, m_range: &[usize], opts: &SeriesOptions) -> Result<ConvergenceSeries> {
    run_series(params, m_range, ChargingModel::Fixed, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftFormula {
    /// −2(g²/ω_m)(ω_a/ω_m)², from the linearized two-oscillator circuit.
    ClassicalCubed,
    /// −2g²/ω_m
    StandardLamb,
}

impl ShiftFormula {
    pub fn tag(self) -> &'static str {
        match self {
            ShiftFormula::ClassicalCubed => "classical-cubed",
            ShiftFormula::StandardLamb => "standard-lamb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftEstimate {
    pub mode: usize,
    /// Hz
    pub chi: f64,
    pub formula: ShiftFormula,
}

/// Lamb shift from adding mode `m`, with the linearized base atom
/// ħω_a = √(8E_JE_C) and ħγ_m = 2e√(ħω_m/2C₀)(E_J/32E_C)^¼, E_C = E_C^(1).
pub fn lamb_shift_estimate(params: &CircuitParams, m: usize) -> Result<ShiftEstimate> {
    lamb_shift_estimate_with(params, m, ShiftFormula::ClassicalCubed)
}

pub fn lamb_shift_estimate_with(params: &CircuitParams, m: usize, formula: ShiftFormula) -> Result<ShiftEstimate> {
    params.validate()?;
    let e_c = circuit::charging_energy(params, 1)?;
    let omega_a = (8.0 * params.ej * e_c).sqrt() / HBAR;
    let omega_m = (2 * m + 1) as f64 * params.omega0();
    let gamma = 2.0 * E_CHARGE * (HBAR * omega_m / (2.0 * params.c0())).sqrt() * (params.ej / (32.0 * e_c)).powf(0.25) / HBAR;
    if omega_m < 3.0 * omega_a {
        log::warn!("mode {m} is not dispersive (ω_m/ω_a = {:.2}); shift estimate unreliable", omega_m / omega_a);
    }
    let lamb = -2.0 * gamma * gamma / omega_m;
    let chi = match formula {
        ShiftFormula::ClassicalCubed => lamb * (omega_a / omega_m).powi(2),
        ShiftFormula::StandardLamb => lamb,
    };
    Ok(ShiftEstimate {
        mode: m,
        chi: chi / TWO_PI,
        formula,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeShift {
    /// rad/s
    pub omega_plus: f64,
    pub omega_minus: f64,
    /// First-order shift −(ω_a/2)(L_m/L_J) (rad/s).
    pub chi_bar: f64,
    /// Bare series oscillator 1/√(L_JC_c).
    pub omega_a: f64,
    /// Bare parallel oscillator 1/√(L_mC₀).
    pub omega_m: f64,
    /// L_m/L_J
    pub eta: f64,
    /// Positive roots of the resonance quartic from its companion matrix, descending.
    pub quartic_roots: (f64, f64),
}

/// Series L_J–C_c oscillator loaded by one parallel L_m–C₀ mode.
pub fn classical_two_mode_shift(l_j: f64, c_c: f64, l_m: f64, c_0: f64) -> Result<TwoModeShift> {
    for (name, v) in [("l_j", l_j), ("c_c", c_c), ("l_m", l_m), ("c_0", c_0)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(name, format!("must be positive, got {v}")));
        }
    }
    let eta = l_m / l_j;
    let r = c_0 / c_c;
    let omega_a = 1.0 / (l_j * c_c).sqrt();
    let omega_m = 1.0 / (l_m * c_0).sqrt();
    let s = 1.0 + eta * (1.0 + r);
    let disc = s * s - 4.0 * r * eta;
    if disc < 0.0 {
        return Err(Error::Unstable(format!("negative discriminant {disc:e}")));
    }
    let omega_plus = omega_m / std::f64::consts::SQRT_2 * (s + disc.sqrt()).sqrt();
    // s − √disc loses digits when η is small; use the product of the roots
    let omega_minus = omega_m / std::f64::consts::SQRT_2 * (4.0 * r * eta / (s + disc.sqrt())).sqrt();

    // ω⁴ − bω² + c = 0 in units of ω_m
    let b = s;
    let c = r * eta;
    let companion = DMatrix::from_row_slice(4, 4, &[0.0, b, 0.0, -c, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let mut roots: Vec<f64> = real_eigen(companion)?.values.into_iter().filter(|x| *x > 0.0).collect();
    roots.sort_by(|a, b| b.total_cmp(a));
    if roots.len() != 2 {
        return Err(Error::Unstable(format!("expected two positive roots, found {}", roots.len())));
    }
    Ok(TwoModeShift {
        omega_plus,
        omega_minus,
        chi_bar: -0.5 * omega_a * eta,
        omega_a,
        omega_m,
        eta,
        quartic_roots: (roots[0] * omega_m, roots[1] * omega_m),
    })
}

/// |E_C^(M+1) − ħ(ḡ_M^(M+1))²/4ω_M^(M+1) − E_C^(M)| / E_C^(M), C_J = 0 only.
pub fn renormalization_invariant_residual(params: &CircuitParams, m: usize) -> Result<f64> {
    params.validate()?;
    if params.cj != 0.0 {
        return Err(Error::param("cj", "the renormalization identity holds only for cj = 0"));
    }
    let lower = circuit::charging_energy(params, m)?;
    let upper = derived_mode_parameters(params, m + 1)?;
    let dressing = HBAR * upper.gbar[m].powi(2) / (4.0 * upper.omega[m]);
    Ok((upper.e_c - dressing - lower).abs() / lower)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffCurve {
    /// |Σ_k ḡ_k(A − B)_{k,m}|/2π per normal mode (Hz).
    pub g: Vec<f64>,
    /// g₀√(2m+1)
    pub low_asymptote: Vec<f64>,
    /// g₀√(2m_c), the level where the √ branch reaches the cutoff mode.
    pub high_asymptote: f64,
    pub m_c: f64,
    /// Mode of largest log-log curvature.
    pub knee: usize,
}

/// Mode index of maximal |d² log g / d(log(2m+1))²| over 2 ≤ m ≤ len/3.
pub fn knee_index(g: &[f64]) -> Option<usize> {
    let hi = g.len() / 3;
    if hi < 3 || g.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return None;
    }
    let x: Vec<f64> = (0..g.len()).map(|m| ((2 * m + 1) as f64).ln()).collect();
    let y: Vec<f64> = g.iter().map(|v| v.ln()).collect();
    (2..=hi.min(g.len() - 2))
        .map(|m| {
            let (h0, h1) = (x[m] - x[m - 1], x[m + 1] - x[m]);
            let d2 = 2.0 * ((y[m + 1] - y[m]) / h1 - (y[m] - y[m - 1]) / h0) / (h0 + h1);
            (m, d2.abs())
        })
        .fold(None, |best: Option<(usize, f64)>, (m, v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((m, v)),
        })
        .map(|(m, _)| m)
}

pub fn coupling_cutoff_curve(params: &CircuitParams, m_count: usize) -> Result<CutoffCurve> {
    let m_c = circuit::cutoff_mode(params)?;
    if (m_count as f64) < 10.0 * m_c {
        log::info!("M = {m_count} is below 10·m_c = {:.0}; the flat branch is barely resolved", 10.0 * m_c);
    }
    let derived = derived_mode_parameters(params, m_count)?;
    let bog = bogoliubov_diagonalize(&build_quadratic_form(&derived)?)?;
    let amb = bog.a_minus_b();
    let g: Vec<f64> = (0..m_count)
        .map(|m| (0..m_count).map(|k| derived.gbar[k] * amb[(k, m)]).sum::<f64>().abs() / TWO_PI)
        .collect();
    let g0 = g[0];
    let low_asymptote = (0..m_count).map(|m| g0 * ((2 * m + 1) as f64).sqrt()).collect();
    let knee = knee_index(&g).ok_or_else(|| Error::param("m_count", "too few modes to locate the knee"))?;
    Ok(CutoffCurve {
        high_asymptote: g0 * (2.0 * m_c).sqrt(),
        g,
        low_asymptote,
        m_c,
        knee,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn residual_small_and_rejects_junction_capacitance() {
        let p = CircuitParams::reference();
        for m in [1, 2, 10, 50] {
            assert!(renormalization_invariant_residual(&p, m).unwrap() <= 1e-12);
        }
        assert!(renormalization_invariant_residual(&p.with_cj(5e-15), 3).is_err());
    }

    #[test]
    fn shift_estimator_scaling() {
        let p = CircuitParams::reference();
        let a = lamb_shift_estimate(&p, 10).unwrap();
        let b = lamb_shift_estimate(&p, 20).unwrap();
        assert!(a.chi < 0.0 && b.chi < 0.0);
        assert_relative_eq!(b.chi / a.chi, (21.0_f64 / 41.0).powi(2), max_relative = 1e-12);
        let far = lamb_shift_estimate(&p, 1_000_000).unwrap();
        assert!(far.chi.abs() < 1e-6 * a.chi.abs());
        let lamb = lamb_shift_estimate_with(&p, 10, ShiftFormula::StandardLamb).unwrap();
        assert!(lamb.chi < a.chi);
        assert_eq!(lamb.formula.tag(), "standard-lamb");
    }

    #[test]
    fn two_mode_closed_form_and_quartic_agree() {
        let s = classical_two_mode_shift(8e-9, 50e-15, 1e-9 / 49.0, 0.25e-12).unwrap();
        assert_relative_eq!(s.omega_plus, s.quartic_roots.0, max_relative = 1e-10);
        assert_relative_eq!(s.omega_minus, s.quartic_roots.1, max_relative = 1e-10);
        assert!(s.omega_minus < s.omega_a);
        assert!(classical_two_mode_shift(-1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn knee_of_synthetic_crossover() {
        // √(2m+1) rising into a plateau at m ≈ 20
        let g: Vec<f64> = (0..200)
            .map(|m| {
                let k = (2 * m + 1) as f64;
                (k / (1.0 + k / 41.0)).sqrt()
            })
            .collect();
        assert_eq!(knee_index(&g), Some(20));
        assert_eq!(knee_index(&g[..6]), None);
    }
}
