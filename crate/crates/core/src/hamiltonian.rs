//! Truncated atom ⊗ Fock-space Hamiltonian in compressed sparse row form.
//!
//! Basis ordering: atom level slowest, then modes in ascending order, so the
//! flat index is `i·Πn_m + Σ_m n_m·stride_m` with the last mode fastest.
//! Atom energies are measured from the bare ground state and the vacuum
//! energies ħω_m/2 are dropped.

use nalgebra::DMatrix;

use crate::bogoliubov::Couplings;
use crate::constants::HBAR;
use crate::cpb::CpbSpectrum;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

pub const DEFAULT_ATOM_LEVELS: usize = 4;
pub const DEFAULT_BUDGET: usize = 200_000;
/// Per-mode photon cap used by the greedy fill.
pub const PHOTON_CAP: usize = 5;
const MIN_BUDGET: usize = 64;
const MIN_PHOTONS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncationPlan {
    pub atom_levels: usize,
    pub photons: Vec<usize>,
    pub total_dim: usize,
}

impl TruncationPlan {
    pub fn new(atom_levels: usize, photons: Vec<usize>) -> Result<Self> {
        if atom_levels < 2 {
            return Err(Error::param("atom_levels", "need at least 2 atom levels"));
        }
        if photons.is_empty() || photons.contains(&0) {
            return Err(Error::param("photons", "every mode needs at least one Fock level"));
        }
        let total_dim = photons
            .iter()
            .try_fold(atom_levels, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::Dimension("Hilbert-space dimension overflows".into()))?;
        Ok(TruncationPlan {
            atom_levels,
            photons,
            total_dim,
        })
    }

    pub fn m_count(&self) -> usize {
        self.photons.len()
    }

    /// Stride of each mode in the flat index (last mode fastest).
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.photons.len()];
        for m in (0..self.photons.len().saturating_sub(1)).rev() {
            s[m] = s[m + 1] * self.photons[m + 1];
        }
        s
    }

    /// Dimension of one atom block, Πn_m.
    pub fn atom_stride(&self) -> usize {
        self.total_dim / self.atom_levels
    }

    pub fn index(&self, atom: usize, occupation: &[usize]) -> Result<usize> {
        if atom >= self.atom_levels
            || occupation.len() != self.photons.len()
            || occupation.iter().zip(&self.photons).any(|(n, cap)| n >= cap)
        {
            return Err(Error::Dimension(format!("label ({atom}, {occupation:?}) outside the truncated basis")));
        }
        let strides = self.strides();
        Ok(atom * self.atom_stride() + occupation.iter().zip(&strides).map(|(n, s)| n * s).sum::<usize>())
    }

    pub fn label(&self, index: usize) -> (usize, Vec<usize>) {
        let block = self.atom_stride();
        let atom = index / block;
        let mut rest = index % block;
        let strides = self.strides();
        let occ = strides
            .iter()
            .map(|s| {
                let n = rest / s;
                rest %= s;
                n
            })
            .collect();
        (atom, occ)
    }

    /// Flat index of |atom⟩ ⊗ |vacuum⟩.
    pub fn vacuum_index(&self, atom: usize) -> usize {
        atom * self.atom_stride()
    }
}

/// Photon allocation driven by the detuning of each mode from the atom.
///
/// Defaults: 5 levels within ω_a of the atom, 3 within 3ω_a, else 2. The plan
/// is then shrunk (largest first) until it fits `budget`, and grown one level
/// at a time (fewest levels first, most detuned on ties) while it still fits.
pub fn truncation_plan(omega: &[f64], omega_a: f64, budget: usize) -> Result<TruncationPlan> {
    truncation_plan_with(omega, omega_a, budget, DEFAULT_ATOM_LEVELS)
}

pub fn truncation_plan_with(omega: &[f64], omega_a: f64, budget: usize, atom_levels: usize) -> Result<TruncationPlan> {
    if budget < MIN_BUDGET {
        return Err(Error::param("budget", format!("must be at least {MIN_BUDGET}, got {budget}")));
    }
    if omega.is_empty() {
        return Err(Error::param("m_count", "need at least one mode"));
    }
    if !(omega_a.is_finite() && omega_a > 0.0) || omega.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::param("omega", "frequencies must be positive and finite"));
    }
    let minimum = (0..omega.len()).try_fold(atom_levels, |acc, _| acc.checked_mul(MIN_PHOTONS));
    match minimum {
        Some(req) if req <= budget => {}
        _ => {
            return Err(Error::Budget {
                budget,
                required: minimum.unwrap_or(usize::MAX),
            })
        }
    }

    let detuning: Vec<f64> = omega.iter().map(|w| (w - omega_a).abs()).collect();
    let mut photons: Vec<usize> = detuning
        .iter()
        .map(|&d| {
            if d < omega_a {
                5
            } else if d < 3.0 * omega_a {
                3
            } else {
                2
            }
        })
        .collect();
    let dim = |p: &[usize]| p.iter().fold(atom_levels as u128, |a, &n| a * n as u128);
    // more detuned first; index breaks exact ties
    let by_detuning = |a: &usize, b: &usize| detuning[*b].total_cmp(&detuning[*a]).then(a.cmp(b));

    while dim(&photons) > budget as u128 {
        let m = (0..photons.len())
            .filter(|&m| photons[m] > MIN_PHOTONS)
            .max_by(|a, b| photons[*a].cmp(&photons[*b]).then(by_detuning(b, a)))
            .expect("minimum plan fits the budget");
        photons[m] -= 1;
    }
    loop {
        let candidate = (0..photons.len())
            .filter(|&m| photons[m] < PHOTON_CAP)
            .min_by(|a, b| photons[*a].cmp(&photons[*b]).then(by_detuning(a, b)));
        let Some(m) = candidate else { break };
        photons[m] += 1;
        if dim(&photons) > budget as u128 {
            photons[m] -= 1;
            break;
        }
    }
    TruncationPlan::new(atom_levels, photons)
}

/// Real symmetric matrix in CSR form together with its basis labels.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    pub plan: TruncationPlan,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseHamiltonian {
    pub fn dim(&self) -> usize {
        self.plan.total_dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.dim() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.push((r, self.col_idx[k], self.values[k]));
            }
        }
        out
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |H − Hᵀ|
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .into_iter()
            .fold(0.0, |m, (r, c, v)| m.max((v - self.get(c, r)).abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut d = DMatrix::zeros(n, n);
        for (r, c, v) in self.triplets() {
            d[(r, c)] = v;
        }
        d
    }

    /// y ← H·x
    pub fn matvec(&self, exec: Execution, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        exec::fill_blocks(exec, y, |start, block| {
            for (off, out) in block.iter_mut().enumerate() {
                let r = start + off;
                let mut acc = 0.0;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.values[k] * x[self.col_idx[k]];
                }
                *out = acc;
            }
        });
    }
}

/// Bosonic mode energies entering the Hamiltonian.
#[derive(Debug, Clone)]
pub struct ModeSpec {
    /// ħω_m (J)
    pub energies: Vec<f64>,
    pub couplings: Couplings,
    /// Explicit G_{mm'}(a_m + a_m†)(a_m' + a_m'†) term (J); absent after Bogoliubov.
    pub gmat: Option<DMatrix<f64>>,
}

fn check_inputs(cpb: &CpbSpectrum, modes: &ModeSpec, plan: &TruncationPlan) -> Result<()> {
    let m = plan.m_count();
    if modes.energies.len() != m || modes.couplings.m_count() != m {
        return Err(Error::Dimension(format!(
            "plan has {m} modes, energies {}, couplings {}",
            modes.energies.len(),
            modes.couplings.m_count()
        )));
    }
    if plan.atom_levels > cpb.dim() || modes.couplings.n_elem.nrows() < plan.atom_levels {
        return Err(Error::Dimension(format!(
            "{} atom levels requested from a {}-level spectrum",
            plan.atom_levels,
            cpb.dim()
        )));
    }
    let n = &modes.couplings.n_elem;
    let mut asym: f64 = 0.0;
    for i in 0..plan.atom_levels {
        for j in 0..plan.atom_levels {
            asym = asym.max((n[(i, j)] - n[(j, i)]).abs());
        }
    }
    if let Some(g) = &modes.gmat {
        if g.nrows() != m || g.ncols() != m {
            return Err(Error::Dimension(format!("G is {}x{} for {m} modes", g.nrows(), g.ncols())));
        }
        for r in 0..m {
            for c in 0..m {
                let scale = g.amax().max(f64::MIN_POSITIVE);
                asym = asym.max((g[(r, c)] - g[(c, r)]).abs() / scale);
            }
        }
    }
    if asym > 0.0 {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Rows of H for one block of flat indices, each sorted by column.
fn build_rows(
    rows: std::ops::Range<usize>,
    cpb: &CpbSpectrum,
    modes: &ModeSpec,
    plan: &TruncationPlan,
    strides: &[usize],
) -> Vec<Vec<(usize, f64)>> {
    let na = plan.atom_levels;
    let mcount = plan.m_count();
    let block = plan.atom_stride();
    let sqrt: Vec<f64> = (0..=PHOTON_CAP.max(*plan.photons.iter().max().unwrap_or(&1)))
        .map(|n| (n as f64).sqrt())
        .collect();
    let hg: Vec<Vec<f64>> = (0..mcount)
        .map(|m| (0..na * na).map(|ij| HBAR * modes.couplings.g(m, ij / na, ij % na)).collect())
        .collect();

    rows.map(|r| {
        let (atom, occ) = plan.label(r);
        let mut entries: Vec<(usize, f64)> = Vec::new();
        let diag = (cpb.eps[atom] - cpb.eps[0])
            + occ
                .iter()
                .zip(&modes.energies)
                .map(|(&n, e)| n as f64 * e)
                .sum::<f64>();
        entries.push((r, diag));
        let photon_part = r - atom * block;
        for m in 0..mcount {
            let n = occ[m];
            for j in 0..na {
                let v = hg[m][atom * na + j];
                if j == atom || v == 0.0 {
                    continue;
                }
                let base = j * block + photon_part;
                if n + 1 < plan.photons[m] {
                    entries.push((base + strides[m], v * sqrt[n + 1]));
                }
                if n > 0 {
                    entries.push((base - strides[m], v * sqrt[n]));
                }
            }
        }
        if let Some(g) = &modes.gmat {
            for m in 0..mcount {
                for mp in m + 1..mcount {
                    let v = g[(m, mp)];
                    if v == 0.0 {
                        continue;
                    }
                    let (n, np) = (occ[m], occ[mp]);
                    for dm in [-1i64, 1] {
                        for dmp in [-1i64, 1] {
                            let (a, b) = (n as i64 + dm, np as i64 + dmp);
                            if a < 0 || b < 0 || a as usize >= plan.photons[m] || b as usize >= plan.photons[mp] {
                                continue;
                            }
                            // √ of the larger occupation in each leg, in canonical order
                            let fm = sqrt[n.max(a as usize)];
                            let fmp = sqrt[np.max(b as usize)];
                            let col = (r as i64 + dm * strides[m] as i64 + dmp * strides[mp] as i64) as usize;
                            entries.push((col, v * (fm * fmp)));
                        }
                    }
                }
            }
        }
        entries.sort_by_key(|e| e.0);
        entries
    })
    .collect()
}

/// H = Σ_i ħε_i|i⟩⟨i| + Σ_m ħω_m a_m†a_m + Σ_{m,i,j} ħg_{m,i,j}|i⟩⟨j|(a_m + a_m†) [+ G term].
pub fn assemble_hamiltonian(
    exec: Execution,
    cpb: &CpbSpectrum,
    modes: &ModeSpec,
    plan: &TruncationPlan,
) -> Result<SparseHamiltonian> {
    check_inputs(cpb, modes, plan)?;
    let dim = plan.total_dim;
    let strides = plan.strides();
    let starts: Vec<usize> = (0..dim).step_by(exec::CHUNK).collect();
    let blocks = exec::map_collect(exec, &starts, |&s| {
        build_rows(s..(s + exec::CHUNK).min(dim), cpb, modes, plan, &strides)
    });

    let mut row_ptr = Vec::with_capacity(dim + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for row in blocks.into_iter().flatten() {
        for (c, v) in row {
            col_idx.push(c);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
    }
    Ok(SparseHamiltonian {
        plan: plan.clone(),
        row_ptr,
        col_idx,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ghz_to_joule;
    use crate::cpb::diagonalize_cpb;

    fn toy_atom() -> CpbSpectrum {
        diagonalize_cpb(ghz_to_joule(0.46), ghz_to_joule(20.0), 20).unwrap()
    }

    #[test]
    fn index_label_round_trip() {
        let plan = TruncationPlan::new(3, vec![2, 4, 3]).unwrap();
        assert_eq!(plan.total_dim, 72);
        assert_eq!(plan.strides(), vec![12, 3, 1]);
        for k in 0..plan.total_dim {
            let (a, occ) = plan.label(k);
            assert_eq!(plan.index(a, &occ).unwrap(), k);
        }
        assert_eq!(plan.vacuum_index(2), 48);
        assert!(plan.index(0, &[2, 0, 0]).is_err());
    }

    #[test]
    fn plan_policy() {
        let wa = 1.0;
        let p = truncation_plan(&[1.2], wa, 200_000).unwrap();
        assert_eq!(p.photons, vec![5]);
        assert_eq!(p.atom_levels, 4);
        let w: Vec<f64> = (0..6).map(|m| 1.25 * (2 * m + 1) as f64).collect();
        let p = truncation_plan(&w, wa, 200_000).unwrap();
        assert_eq!(p.photons, vec![5; 6]);
        let small = truncation_plan(&w, wa, 2_000).unwrap();
        assert_eq!(small.photons[0], 5);
        assert!(small.photons.iter().all(|&n| n >= 2));
        assert!(small.total_dim <= 2_000);
        assert!(truncation_plan(&w, wa, 100).is_err());
        assert!(truncation_plan(&w, wa, 10).is_err());
    }

    #[test]
    fn decoupled_hamiltonian_is_diagonal() {
        let atom = toy_atom();
        let plan = TruncationPlan::new(3, vec![3, 2]).unwrap();
        let energies = vec![ghz_to_joule(10.0), ghz_to_joule(30.0)];
        let modes = ModeSpec {
            energies: energies.clone(),
            couplings: Couplings::bare(&[0.0, 0.0], &atom),
            gmat: None,
        };
        let h = assemble_hamiltonian(Execution::Sequential, &atom, &modes, &plan).unwrap();
        assert_eq!(h.nnz(), plan.total_dim);
        for k in 0..plan.total_dim {
            let (a, occ) = plan.label(k);
            let e = atom.eps[a] - atom.eps[0] + occ[0] as f64 * energies[0] + occ[1] as f64 * energies[1];
            assert!((h.get(k, k) - e).abs() <= 1e-14 * h.max_abs());
        }
    }

    #[test]
    fn two_level_one_mode_rabi_matrix() {
        let atom = toy_atom();
        let plan = TruncationPlan::new(2, vec![2]).unwrap();
        let g = 2.0e9;
        let modes = ModeSpec {
            energies: vec![ghz_to_joule(8.0)],
            couplings: Couplings::bare(&[g], &atom),
            gmat: None,
        };
        let h = assemble_hamiltonian(Execution::Sequential, &atom, &modes, &plan).unwrap().to_dense();
        let hg = HBAR * g * atom.n_elem[(0, 1)];
        // basis |g0⟩, |g1⟩, |e0⟩, |e1⟩
        let we = atom.eps[1] - atom.eps[0];
        let wr = ghz_to_joule(8.0);
        #[rustfmt::skip]
        let expect = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, 0.0, hg,
            0.0, wr, hg, 0.0,
            0.0, hg, we, 0.0,
            hg, 0.0, 0.0, we + wr,
        ]);
        assert_eq!(h, expect);
    }

    #[test]
    fn parallel_assembly_matches_sequential() {
        let atom = toy_atom();
        let plan = TruncationPlan::new(4, vec![5, 5, 5, 5]).unwrap();
        let mut g = DMatrix::from_fn(4, 4, |r, c| if r == c { 0.0 } else { -1e-25 * ((r + 1) * (c + 1)) as f64 });
        g.fill_diagonal(0.0);
        let modes = ModeSpec {
            energies: (0..4).map(|m| ghz_to_joule(10.0 * (2 * m + 1) as f64)).collect(),
            couplings: Couplings::bare(&[1e9, 1.7e9, 2.2e9, 2.6e9], &atom),
            gmat: Some(g),
        };
        let s = assemble_hamiltonian(Execution::Sequential, &atom, &modes, &plan).unwrap();
        let p = assemble_hamiltonian(Execution::Parallel, &atom, &modes, &plan).unwrap();
        assert_eq!(s.values, p.values);
        assert_eq!(s.col_idx, p.col_idx);
        assert_eq!(s.asymmetry(), 0.0);
        let x: Vec<f64> = (0..s.dim()).map(|k| (k as f64 * 0.37).sin()).collect();
        let (mut ys, mut yp) = (vec![0.0; s.dim()], vec![0.0; s.dim()]);
        s.matvec(Execution::Sequential, &x, &mut ys);
        p.matvec(Execution::Parallel, &x, &mut yp);
        assert_eq!(ys, yp);
        let dense = s.to_dense();
        let yd = &dense * nalgebra::DVector::from_vec(x);
        for k in 0..s.dim() {
            assert!((yd[k] - ys[k]).abs() <= 1e-12 * s.max_abs());
        }
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let atom = toy_atom();
        let plan = TruncationPlan::new(2, vec![2, 2]).unwrap();
        let modes = ModeSpec {
            energies: vec![1.0],
            couplings: Couplings::bare(&[1.0], &atom),
            gmat: None,
        };
        assert!(assemble_hamiltonian(Execution::Sequential, &atom, &modes, &plan).is_err());
        let asym = ModeSpec {
            energies: vec![1.0, 2.0],
            couplings: Couplings::bare(&[1.0, 1.0], &atom),
            gmat: Some(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0])),
        };
        assert!(matches!(
            assemble_hamiltonian(Execution::Sequential, &atom, &asym, &plan),
            Err(Error::NotSymmetric(_))
        ));
    }
}
