//! Symplectic (Bogoliubov) diagonalization of coupled harmonic oscillators.
//!
//! A quadratic bosonic Hamiltonian is written as `αᵀ·h·α` with
//! `α = [a₀ … a_{M−1}, a₀† … a_{M−1}†]` and `h = [[η, ξ], [ξ, η]]`. The
//! eigenvectors of `h·J`, `J = [[0, I], [−I, 0]]`, come in ±μ pairs and, once
//! normalized so that `FᵀJF = J`, give `F = [[A, B], [B, A]]` and the new
//! operators through `α = [[A, −B], [−B, A]]·β`. The normal-mode energies are
//! `2μ_m`.

use nalgebra::DMatrix;

use crate::circuit::{self, CircuitParams, DerivedParams};
use crate::constants::{josephson_inductance, HBAR};
use crate::cpb::CpbSpectrum;
use crate::error::{Error, Result};
use crate::nonsym::real_eigen;

/// Relative mismatch tolerated between the members of a ±μ pair.
const PAIR_TOL: f64 = 1e-10;
/// Below this magnitude the leading coefficient is treated as zero for sign fixing.
const SIGN_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    /// Coefficients of a_m a_m' + h.c. (J); zero diagonal.
    pub eta: DMatrix<f64>,
    /// Coefficients of a_m† a_m' + h.c. (J); diagonal ħω_m/2.
    pub xi: DMatrix<f64>,
}

impl QuadraticForm {
    /// Oscillators of energy `energies[m]` coupled through
    /// `Σ_{m<m'} coupling[m][m']·(a_m + a_m†)(a_m' + a_m'†)`.
    pub fn from_oscillators(energies: &[f64], coupling: &DMatrix<f64>) -> Result<Self> {
        let n = energies.len();
        if coupling.nrows() != n || coupling.ncols() != n {
            return Err(Error::Dimension(format!(
                "{n} oscillators but {}x{} coupling matrix",
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        let eta = DMatrix::from_fn(n, n, |r, c| if r == c { 0.0 } else { 0.5 * coupling[(r, c)] });
        let xi = DMatrix::from_fn(n, n, |r, c| if r == c { 0.5 * energies[r] } else { 0.5 * coupling[(r, c)] });
        Ok(QuadraticForm { eta, xi })
    }

    pub fn dim(&self) -> usize {
        self.xi.nrows()
    }

    /// The 2M×2M matrix h = [[η, ξ], [ξ, η]].
    pub fn h_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let (rr, cc) = (r % n, c % n);
            if (r < n) == (c < n) {
                self.eta[(rr, cc)]
            } else {
                self.xi[(rr, cc)]
            }
        })
    }
}

/// Resonator modes plus their capacitive mode–mode coupling.
pub fn build_quadratic_form(derived: &DerivedParams) -> Result<QuadraticForm> {
    let energies: Vec<f64> = derived.omega.iter().map(|w| HBAR * w).collect();
    QuadraticForm::from_oscillators(&energies, &derived.gmat)
}

/// The symplectic matrix J = [[0, I], [−I, 0]] of size 2n.
pub fn symplectic_j(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        if r < n && c == r + n {
            1.0
        } else if r >= n && c + n == r {
            -1.0
        } else {
            0.0
        }
    })
}

#[derive(Debug, Clone)]
pub struct BogoliubovResult {
    pub a_block: DMatrix<f64>,
    pub b_block: DMatrix<f64>,
    /// μ_m (J), ascending; normal-mode energies are 2μ_m.
    pub mu: Vec<f64>,
    /// F = [[A, B], [B, A]] with eigenvectors of hJ as columns.
    pub f_matrix: DMatrix<f64>,
    /// max |FᵀJF − J|
    pub symplectic_error: f64,
}

impl BogoliubovResult {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Normal-mode energies 2μ_m (J).
    pub fn energies(&self) -> Vec<f64> {
        self.mu.iter().map(|m| 2.0 * m).collect()
    }

    /// Normal-mode angular frequencies 2μ_m/ħ.
    pub fn frequencies(&self) -> Vec<f64> {
        self.mu.iter().map(|m| 2.0 * m / HBAR).collect()
    }

    /// A − B, which maps (a + a†) onto (b + b†).
    pub fn a_minus_b(&self) -> DMatrix<f64> {
        &self.a_block - &self.b_block
    }
}

/// Index of the largest-magnitude entry, first one on ties.
fn argmax_abs(v: &[f64]) -> usize {
    let amax = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    v.iter().position(|x| x.abs() >= amax * (1.0 - 1e-9)).unwrap_or(0)
}

pub fn bogoliubov_diagonalize(form: &QuadraticForm) -> Result<BogoliubovResult> {
    let n = form.dim();
    if n == 0 || form.eta.nrows() != n || form.eta.ncols() != n || form.xi.ncols() != n {
        return Err(Error::Dimension("eta and xi must be equal square matrices".into()));
    }
    // Work in units of the largest oscillator energy.
    let unit = form.xi.amax();
    if !(unit.is_finite() && unit > 0.0) {
        return Err(Error::Unstable("quadratic form has no positive energy scale".into()));
    }
    let h = form.h_matrix() / unit;
    let j = symplectic_j(n);
    let eig = real_eigen(&h * &j)?;

    let mut neg: Vec<usize> = Vec::with_capacity(n);
    let mut pos: Vec<usize> = Vec::with_capacity(n);
    for (k, &v) in eig.values.iter().enumerate() {
        if v < 0.0 {
            neg.push(k);
        } else {
            pos.push(k);
        }
    }
    if neg.len() != n {
        return Err(Error::Unstable(format!(
            "expected {n} negative eigenvalues of hJ, found {}",
            neg.len()
        )));
    }
    let by_magnitude = |a: &usize, b: &usize| {
        eig.values[*a]
            .abs()
            .total_cmp(&eig.values[*b].abs())
            .then(a.cmp(b))
    };
    neg.sort_by(by_magnitude);
    pos.sort_by(by_magnitude);

    let mut f = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut mu = Vec::with_capacity(n);
    for m in 0..n {
        let (kn, kp) = (neg[m], pos[m]);
        let (ln, lp) = (-eig.values[kn], eig.values[kp]);
        if ln.is_nan() || ln <= 0.0 || (ln - lp).abs() > PAIR_TOL * ln.max(lp).max(1e-300) * 1e2 + PAIR_TOL * 1e-2 {
            return Err(Error::Unstable(format!("unpaired eigenvalues -{ln:e} / {lp:e}")));
        }
        let mut v: Vec<f64> = eig.vectors.column(kn).iter().copied().collect();
        let mut w: Vec<f64> = eig.vectors.column(kp).iter().copied().collect();

        // Same sign for the A₀ₘ entry in both members of the pair.
        let idx = if v[0].abs() >= SIGN_ZERO { 0 } else { argmax_abs(&v) };
        if (v[idx] >= 0.0) != (w[(idx + n) % (2 * n)] >= 0.0) {
            w.iter_mut().for_each(|x| *x = -*x);
        }
        // Overall convention: the dominant entry of the A column is positive.
        let top = argmax_abs(&v[..n]);
        if v[top] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
            w.iter_mut().for_each(|x| *x = -*x);
        }

        // vᵀJw = Σ_i v_i w_{i+n} − v_{i+n} w_i
        let p: f64 = (0..n).map(|i| v[i] * w[i + n] - v[i + n] * w[i]).sum();
        if !(p.is_finite() && p > f64::EPSILON) {
            return Err(Error::Normalization(format!("pair {m} has symplectic product {p:e}")));
        }
        let s = p.sqrt().recip();
        for i in 0..2 * n {
            f[(i, m)] = v[i] * s;
            f[(i, m + n)] = w[i] * s;
        }
        mu.push(0.5 * (ln + lp) * unit);
    }

    let a_block = f.view((0, 0), (n, n)).into_owned();
    let b_block = f.view((n, 0), (n, n)).into_owned();
    let resid = f.transpose() * &j * &f - &j;
    let symplectic_error = resid.amax();
    Ok(BogoliubovResult {
        a_block,
        b_block,
        mu,
        f_matrix: f,
        symplectic_error,
    })
}

/// Factorized couplings g_{m,i,j} = mode[m]·⟨i|N̂|j⟩ (rad/s).
#[derive(Debug, Clone)]
pub struct Couplings {
    pub mode: Vec<f64>,
    pub n_elem: DMatrix<f64>,
}

impl Couplings {
    /// Bare couplings ḡ_m·⟨i|N̂|j⟩ with no mode mixing.
    pub fn bare(gbar: &[f64], cpb: &CpbSpectrum) -> Self {
        Couplings {
            mode: gbar.to_vec(),
            n_elem: cpb.n_elem.clone(),
        }
    }

    pub fn g(&self, m: usize, i: usize, j: usize) -> f64 {
        self.mode[m] * self.n_elem[(i, j)]
    }

    pub fn m_count(&self) -> usize {
        self.mode.len()
    }
}

/// g′_{m,i,j} = Σ_{m'} ḡ_{m'}(A − B)_{m',m}·⟨i|N̂|j⟩.
pub fn effective_couplings(gbar: &[f64], cpb: &CpbSpectrum, result: &BogoliubovResult) -> Result<Couplings> {
    let n = result.dim();
    if gbar.len() != n {
        return Err(Error::Dimension(format!("{} couplings for {n} normal modes", gbar.len())));
    }
    let amb = result.a_minus_b();
    let mode = (0..n)
        .map(|m| (0..n).map(|k| gbar[k] * amb[(k, m)]).sum())
        .collect();
    Ok(Couplings {
        mode,
        n_elem: cpb.n_elem.clone(),
    })
}

/// Quadratic form of an arbitrary lumped LC network: oscillator k has the
/// self-capacitance 1/(C⁻¹)_kk and inductance 1/`inv_l[k]`; off-diagonal
/// inverse-capacitance entries couple the charges.
pub fn circuit_quadratic_form(cinv: &DMatrix<f64>, inv_l: &[f64]) -> Result<QuadraticForm> {
    let n = inv_l.len();
    if cinv.nrows() != n || cinv.ncols() != n {
        return Err(Error::Dimension(format!("{n} inductors but {}x{} C⁻¹", cinv.nrows(), cinv.ncols())));
    }
    let omega: Vec<f64> = (0..n).map(|k| (cinv[(k, k)] * inv_l[k]).sqrt()).collect();
    // q_zpf = √(ħωC/2)
    let qzpf: Vec<f64> = (0..n).map(|k| (HBAR * omega[k] / (2.0 * cinv[(k, k)])).sqrt()).collect();
    let coupling = DMatrix::from_fn(n, n, |r, c| if r == c { 0.0 } else { cinv[(r, c)] * qzpf[r] * qzpf[c] });
    let energies: Vec<f64> = omega.iter().map(|w| HBAR * w).collect();
    QuadraticForm::from_oscillators(&energies, &coupling)
}

/// Normal modes (rad/s, ascending) of the circuit with the junction replaced
/// by its linear inductance L_J = ħ²/4e²E_J.
pub fn linearized_normal_modes(params: &CircuitParams, m_count: usize) -> Result<Vec<f64>> {
    let cinv = circuit::inverse_capacitance_closed_form(params, m_count)?;
    let l0 = params.l0();
    let mut inv_l = Vec::with_capacity(m_count + 1);
    inv_l.push(1.0 / josephson_inductance(params.ej));
    inv_l.extend((0..m_count).map(|m| ((2 * m + 1) as f64).powi(2) / l0));
    let form = circuit_quadratic_form(&cinv, &inv_l)?;
    let res = bogoliubov_diagonalize(&form)?;
    Ok(res.frequencies())
}
