//! Lowest eigenpairs of real symmetric matrices and dressed-state labelling.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::hamiltonian::{SparseHamiltonian, TruncationPlan};

/// Largest dimension handled by the dense solver.
pub const DENSE_MAX: usize = 1500;
pub const DEFAULT_SEED: u64 = 0x5eed;
/// Krylov basis size limit.
pub const LANCZOS_MAX_BASIS: usize = 400;
/// Ritz pairs are accepted once ‖Hv − λv‖ ≤ tol·‖H‖_max.
const LANCZOS_TOL: f64 = 1e-10;
/// Overlaps below this flag a strongly hybridized state.
pub const AMBIGUOUS_OVERLAP: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub exec: Execution,
    pub seed: u64,
    pub dense_max: usize,
    pub max_basis: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            exec: Execution::default(),
            seed: DEFAULT_SEED,
            dense_max: DENSE_MAX,
            max_basis: LANCZOS_MAX_BASIS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unit eigenvectors as columns.
    pub vectors: DMatrix<f64>,
    /// ‖Hv − λv‖ per pair.
    pub residuals: Vec<f64>,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Fix the overall sign of a vector: largest-magnitude entry positive.
fn fix_sign(mut v: DVector<f64>) -> DVector<f64> {
    let amax = v.amax();
    if let Some(p) = v.iter().find(|x| x.abs() >= amax * (1.0 - 1e-9)) {
        if *p < 0.0 {
            v.neg_mut();
        }
    }
    v
}

fn residuals(exec: Execution, apply: &dyn Fn(&[f64], &mut [f64]), values: &[f64], vectors: &DMatrix<f64>) -> Vec<f64> {
    let n = vectors.nrows();
    let mut y = vec![0.0; n];
    (0..values.len())
        .map(|k| {
            let v = vectors.column(k);
            apply(v.as_slice(), &mut y);
            exec::axpy(exec, -values[k], v.as_slice(), &mut y);
            exec::norm(exec, &y)
        })
        .collect()
}

/// k smallest eigenpairs of a dense symmetric matrix.
pub fn eigh_dense(h: &DMatrix<f64>, k: usize) -> Result<EigenResult> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::Dimension(format!("{n}x{} matrix is not square", h.ncols())));
    }
    if k == 0 || k > n {
        return Err(Error::Dimension(format!("requested {k} eigenpairs of a {n}x{n} matrix")));
    }
    let scale = h.amax();
    let asym = (h - h.transpose()).amax();
    if asym > 0.0 {
        return Err(Error::NotSymmetric(asym));
    }
    if scale == 0.0 {
        return Ok(EigenResult {
            values: vec![0.0; k],
            vectors: DMatrix::identity(n, k),
            residuals: vec![0.0; k],
        });
    }
    let eig = (h / scale).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i] * scale).collect();
    let mut vectors = DMatrix::zeros(n, k);
    for (c, &i) in order[..k].iter().enumerate() {
        vectors.set_column(c, &fix_sign(eig.eigenvectors.column(i).into_owned()));
    }
    let apply = |x: &[f64], y: &mut [f64]| {
        let r = h * DVector::from_column_slice(x);
        y.copy_from_slice(r.as_slice());
    };
    let residuals = residuals(Execution::Sequential, &apply, &values, &vectors);
    Ok(EigenResult {
        values,
        vectors,
        residuals,
    })
}

/// Lanczos with full reorthogonalization from a seeded random start vector.
pub fn lanczos(h: &SparseHamiltonian, k: usize, opts: &SolverOptions) -> Result<EigenResult> {
    let n = h.dim();
    if k == 0 || k > n {
        return Err(Error::Dimension(format!("requested {k} eigenpairs of a {n}x{n} matrix")));
    }
    let exec = opts.exec;
    let hnorm = h.max_abs().max(f64::MIN_POSITIVE);
    let tol = LANCZOS_TOL * hnorm;
    let max_basis = opts.max_basis.min(n).max(k);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nrm = exec::norm(exec, &q);
    exec::scale(exec, 1.0 / nrm, &mut q);

    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut best_residual = f64::INFINITY;
    let check_every = 10;

    loop {
        let j = basis.len() - 1;
        h.matvec(exec, &basis[j], &mut w);
        let a = exec::dot(exec, &basis[j], &w);
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = exec::dot(exec, v, &w);
                exec::axpy(exec, -c, v, &mut w);
            }
        }
        let b = exec::norm(exec, &w);
        let m = alpha.len();
        let exhausted = b <= 1e-13 * hnorm || m == n;

        if m >= k && (m.is_multiple_of(check_every) || exhausted || m == max_basis) {
            let t = DMatrix::from_fn(m, m, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let eig = t.symmetric_eigen();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]).then(x.cmp(&y)));
            let ritz_res: Vec<f64> = order[..k]
                .iter()
                .map(|&i| (b * eig.eigenvectors[(m - 1, i)]).abs())
                .collect();
            let worst = ritz_res.iter().fold(0.0_f64, |x, y| x.max(*y));
            best_residual = best_residual.min(worst);
            if worst <= tol || exhausted {
                return ritz_pairs(h, &basis, &eig, &order[..k], exec);
            }
            if m == max_basis {
                return Err(Error::Convergence {
                    iterations: m,
                    residual: best_residual / hnorm,
                });
            }
        } else if exhausted {
            return Err(Error::Convergence {
                iterations: m,
                residual: f64::NAN,
            });
        }
        beta.push(b);
        exec::scale(exec, 1.0 / b, &mut w);
        basis.push(std::mem::replace(&mut w, vec![0.0; n]));
    }
}

fn ritz_pairs(
    h: &SparseHamiltonian,
    basis: &[Vec<f64>],
    eig: &nalgebra::SymmetricEigen<f64, nalgebra::Dyn>,
    picks: &[usize],
    exec: Execution,
) -> Result<EigenResult> {
    let n = h.dim();
    let mut vectors = DMatrix::zeros(n, picks.len());
    let mut values = Vec::with_capacity(picks.len());
    for (c, &i) in picks.iter().enumerate() {
        let mut v = vec![0.0; n];
        for (j, q) in basis.iter().enumerate() {
            exec::axpy(exec, eig.eigenvectors[(j, i)], q, &mut v);
        }
        let nrm = exec::norm(exec, &v);
        exec::scale(exec, 1.0 / nrm, &mut v);
        vectors.set_column(c, &fix_sign(DVector::from_vec(v)));
        values.push(eig.eigenvalues[i]);
    }
    let apply = |x: &[f64], y: &mut [f64]| h.matvec(exec, x, y);
    let residuals = residuals(exec, &apply, &values, &vectors);
    Ok(EigenResult {
        values,
        vectors,
        residuals,
    })
}

/// Dense path up to `opts.dense_max`, Lanczos above.
pub fn lowest_eigenpairs(h: &SparseHamiltonian, k: usize, opts: &SolverOptions) -> Result<EigenResult> {
    if h.dim() <= opts.dense_max {
        let asym = h.asymmetry();
        if asym > 0.0 {
            return Err(Error::NotSymmetric(asym));
        }
        eigh_dense(&h.to_dense(), k)
    } else {
        lanczos(h, k, opts)
    }
}

/// Bare label (atom level, all modes in vacuum) matched to an eigenpair.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatch {
    pub atom: usize,
    pub eigen_index: usize,
    /// |⟨label|ψ⟩|²
    pub overlap: f64,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DressedAssignment {
    pub matches: Vec<LabelMatch>,
}

impl DressedAssignment {
    pub fn get(&self, atom: usize) -> Option<&LabelMatch> {
        self.matches.iter().find(|m| m.atom == atom)
    }

    pub fn any_ambiguous(&self) -> bool {
        self.matches.iter().any(|m| m.ambiguous)
    }
}

/// Greedy matching of |i, vac⟩ labels to eigenvectors by squared overlap,
/// largest first; ties within 1e-12 go to the lower-energy eigenpair.
pub fn identify_dressed_states(eig: &EigenResult, plan: &TruncationPlan, atoms: &[usize]) -> Result<DressedAssignment> {
    if eig.vectors.nrows() != plan.total_dim {
        return Err(Error::Dimension(format!(
            "eigenvectors of length {} for a basis of {}",
            eig.vectors.nrows(),
            plan.total_dim
        )));
    }
    if let Some(&a) = atoms.iter().find(|&&a| a >= plan.atom_levels) {
        return Err(Error::Dimension(format!("atom level {a} outside the truncated basis")));
    }
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for &a in atoms {
        let idx = plan.vacuum_index(a);
        for e in 0..eig.len() {
            cand.push((eig.vectors[(idx, e)].powi(2), a, e));
        }
    }
    cand.sort_by(|x, y| {
        if (x.0 - y.0).abs() <= 1e-12 {
            x.2.cmp(&y.2).then(x.1.cmp(&y.1))
        } else {
            y.0.total_cmp(&x.0)
        }
    });
    let mut used_label = Vec::new();
    let mut used_eig = Vec::new();
    let mut matches = Vec::new();
    for (ov, a, e) in cand {
        if used_label.contains(&a) || used_eig.contains(&e) {
            continue;
        }
        used_label.push(a);
        used_eig.push(e);
        matches.push(LabelMatch {
            atom: a,
            eigen_index: e,
            overlap: ov,
            ambiguous: ov < AMBIGUOUS_OVERLAP,
        });
    }
    matches.sort_by_key(|m| m.atom);
    Ok(DressedAssignment { matches })
}
