//! Property-based invariants.

use nalgebra::DMatrix;
use proptest::prelude::*;

use mmrabi::analysis::renormalization_invariant_residual;
use mmrabi::bogoliubov::{bogoliubov_diagonalize, build_quadratic_form, Couplings};
use mmrabi::circuit::{build_capacitance_matrix, derived_mode_parameters, inverse_capacitance_closed_form, CircuitParams};
use mmrabi::config::{parse_config, render_config, RunConfig};
use mmrabi::constants::{ghz_to_joule, FEMTOFARAD, HBAR};
use mmrabi::cpb::diagonalize_cpb;
use mmrabi::exec;
use mmrabi::hamiltonian::{assemble_hamiltonian, truncation_plan, ModeSpec, TruncationPlan};
use mmrabi::Execution;

fn circuit() -> impl Strategy<Value = CircuitParams> {
    (2.0..20.0_f64, 20.0..120.0_f64, 5.0..200.0_f64, prop_oneof![Just(0.0), 0.1..20.0_f64], 5.0..60.0_f64).prop_map(
        |(f0, z0, cc, cj, ej)| {
            CircuitParams::new(f0 * 1e9, z0, cc * FEMTOFARAD, cj * FEMTOFARAD, ghz_to_joule(ej)).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_form_inverse_is_exact(p in circuit(), m in 1usize..60) {
        let c = build_capacitance_matrix(&p, m).unwrap();
        let inv = inverse_capacitance_closed_form(&p, m).unwrap();
        let err = (c * inv - DMatrix::<f64>::identity(m + 1, m + 1)).amax();
        prop_assert!(err < 1e-11, "err {err:e}");
    }

    #[test]
    fn renormalization_identity_holds(p in circuit(), m in 1usize..80) {
        let r = renormalization_invariant_residual(&p.with_cj(0.0), m).unwrap();
        prop_assert!(r < 1e-12, "residual {r:e}");
    }

    #[test]
    fn bogoliubov_is_symplectic(p in circuit(), m in 1usize..80) {
        let d = derived_mode_parameters(&p, m).unwrap();
        let r = bogoliubov_diagonalize(&build_quadratic_form(&d).unwrap()).unwrap();
        prop_assert!(r.symplectic_error < 1e-9);
        prop_assert!(r.mu.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(r.mu[0] > 0.0);
    }

    #[test]
    fn plan_respects_budget(
        m in 1usize..9,
        budget in 64usize..300_000,
        wa in 3.0..12.0_f64,
    ) {
        let omega: Vec<f64> = (0..m).map(|k| (2 * k + 1) as f64 * 10.0).collect();
        let plan = truncation_plan(&omega, wa, budget).unwrap_or_else(|e| panic!("{e}"));
        prop_assert!(plan.total_dim <= budget);
        prop_assert!(plan.photons.iter().all(|&n| (2..=5).contains(&n)));
        let bigger = truncation_plan(&omega, wa, budget * 2).unwrap();
        prop_assert!(bigger.total_dim >= plan.total_dim);
    }

    #[test]
    fn hamiltonian_is_symmetric_and_parity_conserving(
        p in circuit(),
        m in 1usize..4,
        levels in 2usize..6,
        photons in 2usize..5,
    ) {
        let d = derived_mode_parameters(&p, m).unwrap();
        let atom = diagonalize_cpb(d.e_c, p.ej, 15).unwrap();
        let spec = ModeSpec {
            energies: d.omega.iter().map(|w| HBAR * w).collect(),
            couplings: Couplings::bare(&d.gbar, &atom),
            gmat: Some(d.gmat.clone()),
        };
        let plan = TruncationPlan::new(levels, vec![photons; m]).unwrap();
        let h = assemble_hamiltonian(Execution::Sequential, &atom, &spec, &plan).unwrap();
        prop_assert_eq!(h.asymmetry(), 0.0);
        let parity = |k: usize| {
            let (a, occ) = plan.label(k);
            let n: usize = occ.iter().sum();
            atom.parity(a) as i32 * if n.is_multiple_of(2) { 1 } else { -1 }
        };
        for (r, c, v) in h.triplets() {
            if v != 0.0 {
                prop_assert_eq!(parity(r), parity(c), "entry ({}, {})", r, c);
            }
        }
    }

    #[test]
    fn parallel_matvec_is_bitwise_sequential(seed in any::<u64>()) {
        let p = CircuitParams::reference();
        let d = derived_mode_parameters(&p, 3).unwrap();
        let atom = diagonalize_cpb(d.e_c, p.ej, 15).unwrap();
        let spec = ModeSpec {
            energies: d.omega.iter().map(|w| HBAR * w).collect(),
            couplings: Couplings::bare(&d.gbar, &atom),
            gmat: None,
        };
        let plan = TruncationPlan::new(6, vec![5, 5, 4]).unwrap();
        let hs = assemble_hamiltonian(Execution::Sequential, &atom, &spec, &plan).unwrap();
        let hp = assemble_hamiltonian(Execution::Parallel, &atom, &spec, &plan).unwrap();
        prop_assert_eq!(&hs.values, &hp.values);
        let x: Vec<f64> = (0..hs.dim()).map(|k| ((k as u64 ^ seed) as f64 * 1e-3).sin()).collect();
        let (mut ys, mut yp) = (vec![0.0; hs.dim()], vec![0.0; hs.dim()]);
        hs.matvec(Execution::Sequential, &x, &mut ys);
        hs.matvec(Execution::Parallel, &x, &mut yp);
        prop_assert_eq!(&ys, &yp);
        prop_assert_eq!(
            exec::dot(Execution::Sequential, &x, &ys).to_bits(),
            exec::dot(Execution::Parallel, &x, &ys).to_bits()
        );
    }

    #[test]
    fn config_round_trips(
        f0 in 0.5..50.0_f64,
        z0 in 1.0..500.0_f64,
        cc in 0.1..500.0_f64,
        cj in prop_oneof![Just(0.0), 0.0..50.0_f64],
        ej in 0.1..100.0_f64,
        n_max in 1usize..60,
        budget in 64usize..10_000_000,
        m_min in 1usize..10,
        extra in 0usize..10,
        dir in "[a-zA-Z0-9_/.-][a-zA-Z0-9_/. -]{0,20}[a-zA-Z0-9_/.-]",
    ) {
        let cfg = RunConfig {
            f0_ghz: f0,
            z0_ohm: z0,
            cc_ff: cc,
            cj_ff: cj,
            ej_ghz: ej,
            n_max,
            budget,
            m_min,
            m_max: m_min + extra,
            out_dir: dir,
        };
        prop_assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn cpb_levels_stable_in_charge_cutoff(ec in 0.1..2.0_f64, ratio in 1.0..100.0_f64) {
        let e_c = ghz_to_joule(ec);
        let a = diagonalize_cpb(e_c, ratio * e_c, 25).unwrap();
        let b = diagonalize_cpb(e_c, ratio * e_c, 35).unwrap();
        for k in 1..5 {
            let (fa, fb) = (a.eps[k] - a.eps[0], b.eps[k] - b.eps[0]);
            prop_assert!(((fa - fb) / fb).abs() < 1e-9);
        }
        for k in 0..6 {
            prop_assert!(a.n_elem[(k, k)].abs() < 1e-9);
        }
    }
}
