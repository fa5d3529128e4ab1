//! Lumped-element model of a quarter-wave resonator capacitively coupled to a
//! Josephson junction island.
//!
//! The resonator is replaced by its Foster network: `M` parallel LC branches
//! in series, sharing the capacitance `C₀` and with inductances falling as
//! `1/(2m+1)²`. Every Hamiltonian parameter below is an explicit closed form of
//! the five circuit inputs and the retained mode count `M`.
//!
//! Node ordering for all matrices: index 0 is the junction island, indices
//! `1..=M` are the branch fluxes of modes `0..M`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::constants::{E_CHARGE, HBAR};
use crate::error::{Error, Result};

/// The five physical inputs of the circuit, in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Fundamental-mode frequency (Hz); ω₀ = 2π·f0.
    pub f0: f64,
    /// Characteristic impedance of the line (Ω).
    pub z0: f64,
    /// Coupling capacitance (F).
    pub cc: f64,
    /// Junction capacitance to ground (F), may be zero.
    pub cj: f64,
    /// Josephson energy (J).
    pub ej: f64,
}

impl CircuitParams {
    pub fn new(f0: f64, z0: f64, cc: f64, cj: f64, ej: f64) -> Result<Self> {
        let p = CircuitParams { f0, z0, cc, cj, ej };
        p.validate()?;
        Ok(p)
    }

    /// 10 GHz, 50 Ω, 50 fF coupling, no junction capacitance, E_J/h = 20 GHz.
    pub fn reference() -> Self {
        CircuitParams {
            f0: 10e9,
            z0: 50.0,
            cc: 50e-15,
            cj: 0.0,
            ej: crate::constants::ghz_to_joule(20.0),
        }
    }

    pub fn with_cj(mut self, cj: f64) -> Self {
        self.cj = cj;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("f0", self.f0), ("z0", self.z0), ("cc", self.cc), ("ej", self.ej)];
        for (name, v) in positive {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
            if v <= 0.0 {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !self.cj.is_finite() || self.cj < 0.0 {
            return Err(Error::param("cj", format!("must be finite and >= 0, got {}", self.cj)));
        }
        Ok(())
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.f0
    }

    /// Shared branch capacitance C₀ = π/(4ω₀Z₀).
    pub fn c0(&self) -> f64 {
        PI / (4.0 * self.omega0() * self.z0)
    }

    /// Fundamental branch inductance L₀ = 4Z₀/(πω₀).
    pub fn l0(&self) -> f64 {
        4.0 * self.z0 / (PI * self.omega0())
    }

    /// D = M·C_c·C_J + C₀(C_c + C_J), the common denominator of the inverse
    /// capacitance matrix (up to a factor C₀).
    fn denominator(&self, m_count: usize) -> f64 {
        let m = m_count as f64;
        m * self.cc * self.cj + self.c0() * (self.cc + self.cj)
    }
}

fn check_modes(m_count: usize) -> Result<()> {
    if m_count == 0 {
        return Err(Error::param("m_count", "at least one mode is required"));
    }
    Ok(())
}

/// Parallel-LC equivalent of the first `M` resonator modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FosterNetwork {
    pub c0: f64,
    /// Branch inductances L_m, m = 0..M.
    pub l: Vec<f64>,
}

impl FosterNetwork {
    pub fn m_count(&self) -> usize {
        self.l.len()
    }

    /// Input impedance of the truncated network at angular frequency `omega`,
    /// returned as the real number X with Z = iX.
    pub fn reactance(&self, omega: f64) -> f64 {
        // 1/(iC₀ω + 1/(iLω)) = i·ωL/(1 − ω²LC₀)
        self.l
            .iter()
            .map(|&l| omega * l / (1.0 - omega * omega * l * self.c0))
            .sum()
    }
}

/// Reactance Z₀·tan(πω/2ω₀) of the shorted quarter-wave line (Z = iX).
pub fn line_reactance(params: &CircuitParams, omega: f64) -> f64 {
    params.z0 * (PI * omega / (2.0 * params.omega0())).tan()
}

pub fn foster_decompose(params: &CircuitParams, m_count: usize) -> Result<FosterNetwork> {
    params.validate()?;
    check_modes(m_count)?;
    let l0 = params.l0();
    let l = (0..m_count)
        .map(|m| {
            let k = (2 * m + 1) as f64;
            l0 / (k * k)
        })
        .collect();
    Ok(FosterNetwork { c0: params.c0(), l })
}

/// Capacitance matrix of the node fluxes (junction first, then the M branch fluxes).
pub fn build_capacitance_matrix(params: &CircuitParams, m_count: usize) -> Result<DMatrix<f64>> {
    params.validate()?;
    check_modes(m_count)?;
    let n = m_count + 1;
    let (cc, cj, c0) = (params.cc, params.cj, params.c0());
    Ok(DMatrix::from_fn(n, n, |r, c| match (r, c) {
        (0, 0) => cj + cc,
        (0, _) | (_, 0) => -cc,
        (r, c) if r == c => c0 + cc,
        _ => cc,
    }))
}

/// Closed-form inverse of [`build_capacitance_matrix`].
pub fn inverse_capacitance_closed_form(params: &CircuitParams, m_count: usize) -> Result<DMatrix<f64>> {
    params.validate()?;
    check_modes(m_count)?;
    let n = m_count + 1;
    let m = m_count as f64;
    let (cc, cj, c0) = (params.cc, params.cj, params.c0());
    let denom = c0 * params.denominator(m_count);
    if !(denom.is_normal() && denom > 0.0) {
        return Err(Error::Singular(format!("capacitance determinant prefactor {denom:e}")));
    }
    let diag_mode = c0 * (cc + cj) + (m - 1.0) * cc * cj;
    Ok(DMatrix::from_fn(n, n, |r, c| {
        let v = match (r, c) {
            (0, 0) => c0 * c0 + m * c0 * cc,
            (0, _) | (_, 0) => c0 * cc,
            (r, c) if r == c => diag_mode,
            _ => -cj * cc,
        };
        v / denom
    }))
}

/// Numerical inverse (Cholesky), the cross-check for the closed form.
pub fn inverse_capacitance_numeric(params: &CircuitParams, m_count: usize) -> Result<DMatrix<f64>> {
    let c = build_capacitance_matrix(params, m_count)?;
    c.cholesky()
        .map(|ch| ch.inverse())
        .ok_or_else(|| Error::Singular("capacitance matrix is not positive definite".into()))
}

/// Charging energy E_C^(M) = (e²/2)(C₀+MC_c)/(MC_cC_J + C₀(C_c+C_J)) in joules.
pub fn charging_energy(params: &CircuitParams, m_count: usize) -> Result<f64> {
    params.validate()?;
    check_modes(m_count)?;
    let m = m_count as f64;
    let c0 = params.c0();
    Ok(0.5 * E_CHARGE * E_CHARGE * (c0 + m * params.cc) / params.denominator(m_count))
}

/// lim_{M→∞} E_C^(M) = e²/2C_J; diverges (error) without junction capacitance.
pub fn charging_energy_limit(params: &CircuitParams) -> Result<f64> {
    params.validate()?;
    if params.cj == 0.0 {
        return Err(Error::param("cj", "charging energy diverges as M grows when cj = 0"));
    }
    Ok(0.5 * E_CHARGE * E_CHARGE / params.cj)
}

/// Mode-independent scalars of the M-mode Hamiltonian.
#[derive(Debug, Clone, Copy)]
struct ModeScalars {
    c0_eff: f64,
    beta: f64,
    /// ω₀^(M) = 1/√(L₀C₀^(M))
    omega_fund: f64,
    /// V_zpf of the fundamental, √(ħω₀^(M)/2C₀^(M))
    vzpf_fund: f64,
}

fn mode_scalars(params: &CircuitParams, m_count: usize) -> ModeScalars {
    let m = m_count as f64;
    let (cc, cj, c0) = (params.cc, params.cj, params.c0());
    let d = params.denominator(m_count);
    let c0_eff = c0 * d / ((m - 1.0) * cc * cj + c0 * (cc + cj));
    let beta = c0 * cc / d * c0_eff / c0;
    let omega_fund = 1.0 / (params.l0() * c0_eff).sqrt();
    let vzpf_fund = (HBAR * omega_fund / (2.0 * c0_eff)).sqrt();
    ModeScalars {
        c0_eff,
        beta,
        omega_fund,
        vzpf_fund,
    }
}

/// Every M-dependent parameter of the multimode Hamiltonian.
#[derive(Debug, Clone)]
pub struct DerivedParams {
    pub m_count: usize,
    /// E_C^(M) (J)
    pub e_c: f64,
    /// C_AA^(M) (F)
    pub c_aa: f64,
    /// C₀^(M) (F)
    pub c0_eff: f64,
    /// β^(M)
    pub beta: f64,
    /// bare mode angular frequencies ω_m^(M)
    pub omega: Vec<f64>,
    /// zero-point voltages V_zpf,m^(M)
    pub vzpf: Vec<f64>,
    /// dipole-free couplings ḡ_m^(M) (rad/s), ħḡ = 2e·β·V_zpf
    pub gbar: Vec<f64>,
    /// mode–mode coupling G_{m,m'} (J), zero diagonal
    pub gmat: DMatrix<f64>,
}

pub fn derived_mode_parameters(params: &CircuitParams, m_count: usize) -> Result<DerivedParams> {
    let e_c = charging_energy(params, m_count)?;
    let s = mode_scalars(params, m_count);
    let (cc, cj, c0) = (params.cc, params.cj, params.c0());
    let d = params.denominator(m_count);
    let c_aa = d / (c0 + m_count as f64 * cc);

    let sqrt_k: Vec<f64> = (0..m_count).map(|m| ((2 * m + 1) as f64).sqrt()).collect();
    let omega = (0..m_count).map(|m| (2 * m + 1) as f64 * s.omega_fund).collect();
    let vzpf: Vec<f64> = sqrt_k.iter().map(|k| k * s.vzpf_fund).collect();
    let gbar = vzpf.iter().map(|v| s.beta * v * 2.0 * E_CHARGE / HBAR).collect();

    let g_pref = -(c0 * cc * cj / d) * (s.c0_eff / c0).powi(2);
    let gmat = DMatrix::from_fn(m_count, m_count, |r, c| {
        if r == c {
            0.0
        } else {
            g_pref * (vzpf[r] * vzpf[c])
        }
    });

    Ok(DerivedParams {
        m_count,
        e_c,
        c_aa,
        c0_eff: s.c0_eff,
        beta: s.beta,
        omega,
        vzpf,
        gbar,
        gmat,
    })
}

/// Mode number m_c = (C_J + C_c)/(2ω₀Z₀C_JC_c) above which the loaded line end
/// turns from a voltage anti-node into a node.
pub fn cutoff_mode(params: &CircuitParams) -> Result<f64> {
    params.validate()?;
    if params.cj == 0.0 {
        return Err(Error::param("cj", "no finite cutoff without junction capacitance"));
    }
    Ok((params.cj + params.cc) / (2.0 * params.omega0() * params.z0 * params.cj * params.cc))
}

/// Charging energy of an L-mode model dressed by the vacuum of modes L..m_limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedChargingEnergy {
    pub l_keep: usize,
    /// Ẽ_C^(L) (J)
    pub e_c_tilde: f64,
    pub m_limit: usize,
    /// |Ẽ_C(m_limit) − Ẽ_C(m_limit/2)|, zero when the tail telescopes exactly.
    pub tail_estimate: f64,
}

fn dressed_sum(params: &CircuitParams, l_keep: usize, m_limit: usize) -> Result<f64> {
    let s = mode_scalars(params, m_limit);
    // ħḡ_m²/(4ω_m) = (2eβV_zpf,0)²(2m+1) / (4ħ(2m+1)ω₀^(M)) is independent of m.
    let per_mode = (2.0 * E_CHARGE * s.beta * s.vzpf_fund).powi(2) / (4.0 * HBAR * s.omega_fund);
    let removed = (m_limit - l_keep) as f64 * per_mode;
    Ok(charging_energy(params, m_limit)? - removed)
}

pub fn dressed_charging_energy(
    params: &CircuitParams,
    l_keep: usize,
    m_limit: usize,
) -> Result<DressedChargingEnergy> {
    params.validate()?;
    check_modes(l_keep)?;
    if m_limit <= l_keep {
        return Err(Error::param("m_limit", format!("must exceed l_keep = {l_keep}")));
    }
    let e_c_tilde = dressed_sum(params, l_keep, m_limit)?;
    let half = m_limit / 2;
    let tail_estimate = if half > l_keep {
        (e_c_tilde - dressed_sum(params, l_keep, half)?).abs()
    } else {
        0.0
    };
    if tail_estimate > 1e-3 * e_c_tilde.abs() {
        log::warn!(
            "dressed charging energy not converged at m_limit = {m_limit} (tail {:.3e} of value)",
            tail_estimate / e_c_tilde.abs()
        );
    }
    Ok(DressedChargingEnergy {
        l_keep,
        e_c_tilde,
        m_limit,
        tail_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{joule_to_ghz, PLANCK};
    use approx::assert_relative_eq;

    fn p() -> CircuitParams {
        CircuitParams::reference()
    }

    #[test]
    fn foster_closed_forms() {
        let net = foster_decompose(&p(), 2).unwrap();
        assert_relative_eq!(net.c0, 0.25e-12, max_relative = 1e-12);
        // 4·50/(π·2π·1e10)
        assert_relative_eq!(net.l[0], 1.013_211_836_4e-9, max_relative = 1e-9);
        assert_relative_eq!(net.l[1], net.l[0] / 9.0, max_relative = 1e-15);
        let w = 1.0 / (net.l[0] * net.c0).sqrt();
        assert_relative_eq!(w, p().omega0(), max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(foster_decompose(&p(), 0).is_err());
        assert!(CircuitParams::new(f64::NAN, 50.0, 1e-15, 0.0, 1e-24).is_err());
        assert!(CircuitParams::new(1e10, 50.0, -1e-15, 0.0, 1e-24).is_err());
        assert!(CircuitParams::new(1e10, 50.0, 1e-15, -1e-15, 1e-24).is_err());
        assert!(cutoff_mode(&p()).is_err());
        assert!(charging_energy_limit(&p()).is_err());
        assert!(dressed_charging_energy(&p(), 5, 5).is_err());
    }

    #[test]
    fn capacitance_matrix_single_mode() {
        let c = build_capacitance_matrix(&p(), 1).unwrap();
        let (cc, c0) = (p().cc, p().c0());
        assert_eq!(c[(0, 0)], cc);
        assert_eq!(c[(0, 1)], -cc);
        assert_eq!(c[(1, 1)], c0 + cc);
        assert_relative_eq!(c.determinant(), cc * c0, max_relative = 1e-12);

        let inv = inverse_capacitance_closed_form(&p(), 1).unwrap();
        assert_relative_eq!(inv[(0, 0)], (c0 + cc) / (c0 * cc), max_relative = 1e-14);
        assert_relative_eq!(inv[(0, 1)], 1.0 / c0, max_relative = 1e-14);
        assert_relative_eq!(inv[(1, 1)], 1.0 / c0, max_relative = 1e-14);
    }

    #[test]
    fn capacitance_matrix_with_junction() {
        let q = p().with_cj(5e-15);
        let c = build_capacitance_matrix(&q, 2).unwrap();
        assert_eq!(c[(1, 2)], q.cc);
        assert_eq!(c[(0, 0)], q.cc + q.cj);
    }

    #[test]
    fn closed_form_inverse_matches_numeric() {
        for cj in [0.0, 5e-15] {
            let q = p().with_cj(cj);
            let a = inverse_capacitance_closed_form(&q, 10).unwrap();
            let b = inverse_capacitance_numeric(&q, 10).unwrap();
            let scale = b.amax();
            assert!((a - b).amax() <= 1e-10 * scale);
        }
    }

    #[test]
    fn charging_energy_values() {
        let e2 = E_CHARGE * E_CHARGE;
        // M = 1, C_J = 0: e²/2 over the series combination of C_c and C₀
        let (cc, c0) = (p().cc, p().c0());
        let oracle = e2 / 2.0 * (c0 + cc) / (c0 * cc);
        let ec1 = charging_energy(&p(), 1).unwrap();
        assert_relative_eq!(ec1, oracle, max_relative = 1e-14);
        assert_relative_eq!(joule_to_ghz(ec1), 0.4648, max_relative = 1e-3);
        // inverse-matrix entry consistency
        let inv = inverse_capacitance_closed_form(&p(), 7).unwrap();
        assert_relative_eq!(charging_energy(&p(), 7).unwrap(), e2 / 2.0 * inv[(0, 0)], max_relative = 1e-14);

        let q = p().with_cj(5e-15);
        let big = charging_energy(&q, 1_000_000).unwrap();
        let lim = charging_energy_limit(&q).unwrap();
        assert_relative_eq!(big, lim, max_relative = 1e-4);
        assert_relative_eq!(lim / PLANCK / 1e9, 3.8740, max_relative = 1e-3);
    }

    #[test]
    fn small_coupling_recovers_textbook_charging_energy() {
        let q = CircuitParams { cc: 1e-18, ..p() };
        let ec = charging_energy(&q, 1).unwrap();
        assert_relative_eq!(ec, E_CHARGE * E_CHARGE / (2.0 * q.cc), max_relative = 1e-5);
    }

    #[test]
    fn derived_params_without_junction_capacitance() {
        let d = derived_mode_parameters(&p(), 12).unwrap();
        assert_eq!(d.beta, 1.0);
        assert_relative_eq!(d.c0_eff, p().c0(), max_relative = 1e-15);
        assert!(d.gmat.iter().all(|&g| g == 0.0));
        for m in 0..12 {
            let k = (2 * m + 1) as f64;
            assert_relative_eq!(d.omega[m], k * p().omega0(), max_relative = 1e-14);
            assert_relative_eq!(d.gbar[m] / d.gbar[0], k.sqrt(), max_relative = 1e-12);
            assert_relative_eq!(d.vzpf[m] / d.vzpf[0], k.sqrt(), max_relative = 1e-12);
        }
        assert_relative_eq!(d.e_c, E_CHARGE * E_CHARGE / (2.0 * d.c_aa), max_relative = 1e-14);
    }

    #[test]
    fn derived_params_with_junction_capacitance() {
        let q = p().with_cj(5e-15);
        let d = derived_mode_parameters(&q, 5).unwrap();
        assert!(d.beta < 1.0 && d.beta > 0.0);
        for r in 0..5 {
            assert_eq!(d.gmat[(r, r)], 0.0);
            for c in 0..5 {
                assert_eq!(d.gmat[(r, c)], d.gmat[(c, r)]);
                if r != c {
                    assert!(d.gmat[(r, c)] < 0.0);
                }
            }
        }
        // 1/C₀^(M) equals the mode diagonal of the inverse capacitance matrix
        let inv = inverse_capacitance_closed_form(&q, 5).unwrap();
        assert_relative_eq!(1.0 / d.c0_eff, inv[(1, 1)], max_relative = 1e-13);
        // G is the charge-charge cross term written in ladder operators
        let qz = |m: usize| d.c0_eff * d.vzpf[m];
        assert_relative_eq!(d.gmat[(1, 3)], inv[(2, 4)] * qz(1) * qz(3), max_relative = 1e-12);
        // ħḡ = 2e × inverse-capacitance atom–mode element × mode charge
        assert_relative_eq!(
            HBAR * d.gbar[2],
            2.0 * E_CHARGE * inv[(0, 3)] * qz(2),
            max_relative = 1e-12
        );
    }

    #[test]
    fn cutoff_mode_reference_value() {
        let q = p().with_cj(5e-15);
        let mc = cutoff_mode(&q).unwrap();
        assert!((mc - 35.0).abs() < 0.1, "m_c = {mc}");
        let z = CircuitParams { z0: 100.0, ..q };
        assert_relative_eq!(cutoff_mode(&z).unwrap(), mc / 2.0, max_relative = 1e-14);
        let tiny = p().with_cj(1e-20);
        assert!(cutoff_mode(&tiny).unwrap() > 1e5);
    }

    #[test]
    fn dressed_charging_energy_telescopes_without_cj() {
        let d = dressed_charging_energy(&p(), 1, 50).unwrap();
        let ec1 = charging_energy(&p(), 1).unwrap();
        assert_relative_eq!(d.e_c_tilde, ec1, max_relative = 1e-12);
    }

    #[test]
    fn dressed_charging_energy_bounded_with_cj() {
        let q = p().with_cj(5e-15);
        let d = dressed_charging_energy(&q, 5, 20_000).unwrap();
        assert!(d.e_c_tilde.is_finite() && d.e_c_tilde > 0.0);
        assert!(d.e_c_tilde < charging_energy_limit(&q).unwrap());
    }
}
