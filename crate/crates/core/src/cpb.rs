//! Cooper-pair box `4E_C·N̂² − E_J·cos δ̂` in the truncated charge basis at
//! zero offset charge.

use nalgebra::DMatrix;

use crate::constants::HBAR;
use crate::error::{Error, Result};

/// Default charge truncation |N| ≤ 20.
pub const DEFAULT_N_MAX: usize = 20;

/// Ground-state weight on the truncation edge above which a warning is logged.
const EDGE_WEIGHT_WARN: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CpbSpectrum {
    pub n_max: usize,
    pub e_c: f64,
    pub e_j: f64,
    /// Eigenenergies ħε_i (J), ascending.
    pub eps: Vec<f64>,
    /// Eigenvectors as columns, rows indexed by N + n_max.
    pub vecs: DMatrix<f64>,
    /// ⟨i|N̂|j⟩
    pub n_elem: DMatrix<f64>,
    /// Ground-state probability on |±n_max⟩.
    pub edge_weight: f64,
}

impl CpbSpectrum {
    pub fn dim(&self) -> usize {
        self.eps.len()
    }

    /// Charge parity of eigenstate `i` (+1 even, −1 odd under N → −N).
    pub fn parity(&self, i: usize) -> i8 {
        let n = self.vecs.nrows();
        let v = self.vecs.column(i);
        let sym: f64 = (0..n).map(|k| v[k] * v[n - 1 - k]).sum();
        if sym >= 0.0 {
            1
        } else {
            -1
        }
    }
}

fn validate(e_c: f64, e_j: f64, n_max: usize) -> Result<()> {
    if n_max == 0 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    if !(e_c.is_finite() && e_c > 0.0) {
        return Err(Error::param("e_c", format!("must be positive, got {e_c}")));
    }
    if !(e_j.is_finite() && e_j >= 0.0) {
        return Err(Error::param("e_j", format!("must be non-negative, got {e_j}")));
    }
    Ok(())
}

/// Tridiagonal charge-basis Hamiltonian, rows ordered N = −n_max..=n_max.
pub fn build_cpb_hamiltonian(e_c: f64, e_j: f64, n_max: usize) -> Result<DMatrix<f64>> {
    validate(e_c, e_j, n_max)?;
    let dim = 2 * n_max + 1;
    let mut h = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let n = k as f64 - n_max as f64;
        h[(k, k)] = 4.0 * e_c * n * n;
        if k + 1 < dim {
            h[(k, k + 1)] = -0.5 * e_j;
            h[(k + 1, k)] = -0.5 * e_j;
        }
    }
    Ok(h)
}

/// Flip the eigenvector so its largest-magnitude entry (first one on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let amax = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if let Some(&pivot) = v.iter().find(|x| x.abs() >= amax * (1.0 - 1e-9)) {
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Eigenpairs of one parity sector, mapped back to the charge basis.
///
/// Even states use |0⟩ and (|N⟩ + |−N⟩)/√2, odd states (|N⟩ − |−N⟩)/√2.
/// High-lying ±N doublets are nearly degenerate, so splitting by parity keeps
/// every eigenvector a parity eigenstate.
fn parity_sector(e_c: f64, e_j: f64, n_max: usize, even: bool, unit: f64) -> Vec<(f64, Vec<f64>)> {
    let dim = 2 * n_max + 1;
    let charges: Vec<usize> = if even { (0..=n_max).collect() } else { (1..=n_max).collect() };
    let k = charges.len();
    let mut h = DMatrix::<f64>::zeros(k, k);
    for (a, &n) in charges.iter().enumerate() {
        h[(a, a)] = 4.0 * e_c * (n * n) as f64 / unit;
        if a + 1 < k {
            let hop = if even && n == 0 { std::f64::consts::SQRT_2 } else { 1.0 };
            h[(a, a + 1)] = -0.5 * e_j * hop / unit;
            h[(a + 1, a)] = h[(a, a + 1)];
        }
    }
    let eig = h.symmetric_eigen();
    let sign = if even { 1.0 } else { -1.0 };
    (0..k)
        .map(|c| {
            let mut v = vec![0.0; dim];
            for (a, &n) in charges.iter().enumerate() {
                let x = eig.eigenvectors[(a, c)];
                if n == 0 {
                    v[n_max] = x;
                } else {
                    v[n_max + n] = x * std::f64::consts::FRAC_1_SQRT_2;
                    v[n_max - n] = sign * x * std::f64::consts::FRAC_1_SQRT_2;
                }
            }
            (eig.eigenvalues[c] * unit, v)
        })
        .collect()
}

pub fn diagonalize_cpb(e_c: f64, e_j: f64, n_max: usize) -> Result<CpbSpectrum> {
    validate(e_c, e_j, n_max)?;
    let dim = 2 * n_max + 1;
    // Work in units of the largest scale so the solver tolerances are relative.
    let unit = e_c.max(e_j);
    let mut pairs: Vec<(f64, Vec<f64>, bool)> = [true, false]
        .into_iter()
        .flat_map(|even| parity_sector(e_c, e_j, n_max, even, unit).into_iter().map(move |(e, v)| (e, v, even)))
        .collect();
    // stable sort: on exact ties the even state comes first
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let eps: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let even: Vec<bool> = pairs.iter().map(|p| p.2).collect();
    let mut vecs = DMatrix::zeros(dim, dim);
    for (col, (_, v, _)) in pairs.into_iter().enumerate() {
        let mut v = v;
        fix_sign(&mut v);
        vecs.set_column(col, &nalgebra::DVector::from_vec(v));
    }

    let charges = nalgebra::DVector::from_fn(dim, |k, _| k as f64 - n_max as f64);
    let weighted = DMatrix::from_fn(dim, dim, |r, c| charges[r] * vecs[(r, c)]);
    let mut n_elem = vecs.transpose() * weighted;
    // exact symmetry by construction; N̂ is odd, so equal parities give zero
    for r in 0..dim {
        n_elem[(r, r)] = 0.0;
        for c in r + 1..dim {
            let s = if even[r] == even[c] {
                0.0
            } else {
                0.5 * (n_elem[(r, c)] + n_elem[(c, r)])
            };
            n_elem[(r, c)] = s;
            n_elem[(c, r)] = s;
        }
    }

    let edge_weight = vecs[(0, 0)].powi(2) + vecs[(dim - 1, 0)].powi(2);
    if edge_weight > EDGE_WEIGHT_WARN {
        log::warn!("charge truncation n_max = {n_max} too small: ground-state edge weight {edge_weight:.2e}");
    }

    Ok(CpbSpectrum {
        n_max,
        e_c,
        e_j,
        eps,
        vecs,
        n_elem,
        edge_weight,
    })
}

/// Transition angular frequency (ε_j − ε_i)/ħ.
pub fn transition_frequency(spec: &CpbSpectrum, i: usize, j: usize) -> Result<f64> {
    let dim = spec.dim();
    if i >= dim || j >= dim {
        return Err(Error::param("level", format!("indices ({i}, {j}) out of range for {dim} levels")));
    }
    if i > j {
        return Err(Error::param("level", format!("expected i <= j, got ({i}, {j})")));
    }
    Ok((spec.eps[j] - spec.eps[i]) / HBAR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{ghz_to_joule, joule_to_ghz, PLANCK};
    use approx::assert_relative_eq;

    #[test]
    fn hamiltonian_layout() {
        let h = build_cpb_hamiltonian(2.0, 3.0, 1).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[8.0, -1.5, 0.0, -1.5, 0.0, -1.5, 0.0, -1.5, 8.0]);
        assert_eq!(h, expect);
        let h = build_cpb_hamiltonian(1.3, 0.7, 6).unwrap();
        let n = h.nrows();
        for r in 0..n {
            for c in 0..n {
                assert_eq!(h[(r, c)], h[(n - 1 - r, n - 1 - c)]);
            }
        }
        assert!(build_cpb_hamiltonian(1.0, 1.0, 0).is_err());
        assert!(build_cpb_hamiltonian(-1.0, 1.0, 2).is_err());
    }

    #[test]
    fn free_charge_ladder() {
        let ec = ghz_to_joule(0.5);
        let s = diagonalize_cpb(ec, 0.0, 5).unwrap();
        let expect = [0.0, 4.0, 4.0, 16.0, 16.0, 36.0, 36.0];
        for (e, x) in s.eps.iter().zip(expect) {
            assert!((e / ec - x).abs() < 1e-12, "{} vs {x}", e / ec);
        }
        assert_relative_eq!(transition_frequency(&s, 0, 1).unwrap(), 4.0 * ec / HBAR, max_relative = 1e-12);
        assert_eq!(transition_frequency(&s, 2, 2).unwrap(), 0.0);
        assert!(transition_frequency(&s, 0, 99).is_err());
    }

    #[test]
    fn transmon_limit_matches_asymptotic_frequency() {
        let ec = ghz_to_joule(0.4646);
        let ej = ghz_to_joule(20.0);
        let s = diagonalize_cpb(ec, ej, 20).unwrap();
        let f_ge = joule_to_ghz(s.eps[1] - s.eps[0]);
        let asym = (8.0 * 20.0 * 0.4646_f64).sqrt() - 0.4646;
        assert!((f_ge / asym - 1.0).abs() < 0.02, "{f_ge} vs {asym}");
        assert!(s.edge_weight < 1e-8);
    }

    #[test]
    fn spectrum_invariants() {
        let ec = ghz_to_joule(0.8);
        let ej = ghz_to_joule(20.0);
        let s = diagonalize_cpb(ec, ej, 20).unwrap();
        let h = build_cpb_hamiltonian(ec, ej, 20).unwrap();
        let dim = s.dim();
        let vtv = s.vecs.transpose() * &s.vecs;
        assert!((vtv - DMatrix::identity(dim, dim)).amax() < 1e-10);
        let hn = h.amax();
        for i in 0..dim {
            let v = s.vecs.column(i);
            let r = &h * v - v * s.eps[i];
            assert!(r.norm() <= 1e-9 * hn);
        }
        assert!(s.eps.windows(2).all(|w| w[0] <= w[1]));
        for i in 0..dim {
            for j in 0..dim {
                assert_eq!(s.n_elem[(i, j)], s.n_elem[(j, i)]);
                if s.parity(i) == s.parity(j) {
                    assert!(s.n_elem[(i, j)].abs() < 1e-10);
                }
            }
        }
        assert_eq!(s.parity(0), 1);
        assert_eq!(s.parity(1), -1);
    }

    #[test]
    fn charge_truncation_is_converged() {
        let ec = 0.5 * crate::constants::E_CHARGE.powi(2) * 1.2 / 50e-15;
        let ej = 20e9 * PLANCK;
        let a = diagonalize_cpb(ec, ej, 20).unwrap();
        let b = diagonalize_cpb(ec, ej, 30).unwrap();
        let fa = a.eps[1] - a.eps[0];
        let fb = b.eps[1] - b.eps[0];
        assert!(((fa - fb) / fa).abs() <= 1e-9);
    }
}
