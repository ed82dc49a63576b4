//! Property checks on the algebraic invariants.

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use ske_core::dfcheck::{bath_df_constraint, triangulate_block, Branch};
use ske_core::gates::{
    conditional_phase, delta_t_correction, ideal_swap, swap_by_exponential, swap_sqrt, xor_gate,
    LevelShift,
};
use ske_core::operator::{Matrix, Vector};
use ske_core::subdyn::{fidelity, pi_projector};
use ske_core::*;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn complex() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn branch() -> impl Strategy<Value = Branch> {
    prop_oneof![Just(Branch::Plus), Just(Branch::Minus)]
}

fn coupling() -> impl Strategy<Value = f64> {
    prop_oneof![0.1..3.0f64, -3.0..-0.1f64]
}

proptest! {
    #![proptest_config(cases(128))]

    #[test]
    fn triangulation_kills_lower_left(omega in 0.1..5.0f64, g in coupling(), n in 1usize..12, b in branch()) {
        let blk = triangulate_block(omega, C64::new(g, 0.0), n, b, &Tolerances::default()).unwrap();
        prop_assert!(blk.relative_lower_left() < 1e-10);
        prop_assert!(blk.lower_left_closed_form.abs() < 1e-9 * blk.m.norm());
        let scale = blk.m.norm();
        prop_assert!((blk.m.trace() - blk.m_tri.trace()).abs() < 1e-10 * scale);
        let (ev, dg) = (blk.eigenvalues(), blk.diagonal());
        prop_assert!((ev[0] - dg[0]).abs() < 1e-9 * scale);
        prop_assert!((ev[1] - dg[1]).abs() < 1e-9 * scale);
    }

    #[test]
    fn vacuum_block_uses_fallback(omega in 0.1..5.0f64, g in coupling(), b in branch()) {
        let blk = triangulate_block(omega, C64::new(g, 0.0), 0, b, &Tolerances::default()).unwrap();
        prop_assert!(blk.fallback_column);
        prop_assert!(blk.det().abs() > 0.0);
        prop_assert!(blk.relative_lower_left() < 1e-10);
    }

    #[test]
    fn constraint_is_affine_in_occupations(
        g in prop::collection::vec(complex(), 1..6),
        seed in prop::collection::vec((0usize..5, 0usize..5), 6),
    ) {
        let k = g.len();
        let a: Vec<usize> = seed.iter().take(k).map(|p| p.0).collect();
        let b: Vec<usize> = seed.iter().take(k).map(|p| p.1).collect();
        let sum: Vec<usize> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let zero = vec![0; k];
        let lhs = bath_df_constraint(&g, &sum).unwrap() + bath_df_constraint(&g, &zero).unwrap();
        let rhs = bath_df_constraint(&g, &a).unwrap() + bath_df_constraint(&g, &b).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn constraint_is_sesquilinear_in_couplings(
        g in prop::collection::vec(complex(), 1..6),
        n in prop::collection::vec(0usize..5, 6),
        alpha in complex(),
    ) {
        let n = &n[..g.len()];
        let scaled: Vec<C64> = g.iter().map(|x| x * alpha).collect();
        let base = bath_df_constraint(&g, n).unwrap();
        let got = bath_df_constraint(&scaled, n).unwrap();
        prop_assert!((got - base * alpha.norm_sqr()).norm() < 1e-10 * (1.0 + got.norm()));
    }

    #[test]
    fn generic_pi_is_idempotent(
        dim in 2usize..7,
        cv in prop::collection::vec(complex(), 7),
        dv in prop::collection::vec(complex(), 7),
    ) {
        // P = |e₀⟩⟨e₀|, C = Q|c⟩⟨e₀|, D = |e₀⟩⟨d|Q
        let e0 = Vector::from_fn(dim, |i, _| if i == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let mut c = Vector::from_fn(dim, |i, _| cv[i] * 0.3);
        let mut d = Vector::from_fn(dim, |i, _| dv[i] * 0.3);
        c[0] = C64::new(0.0, 0.0);
        d[0] = C64::new(0.0, 0.0);
        let scalar = C64::new(1.0, 0.0) + d.dotc(&c);
        prop_assume!(scalar.norm() > 0.1);
        let p = OperatorMatrix::outer(&e0, &e0);
        let c_op = OperatorMatrix::outer(&c, &e0);
        let d_op = OperatorMatrix::outer(&e0, &d);
        let pi = pi_projector(&p, &c_op, &d_op, &Tolerances::default()).unwrap();
        let scale = pi.max_abs().max(1.0);
        prop_assert!((&(&pi * &pi) - &pi).max_abs() < 1e-12 * scale * scale);
        prop_assert!((pi.trace() - C64::new(1.0, 0.0)).norm() < 1e-12 * scale);
        // QΠ = C P Π and ΠQ = Π P D
        let q = &OperatorMatrix::identity(dim) - &p;
        prop_assert!((&(&q * &pi) - &(&(&c_op * &p) * &pi)).max_abs() < 1e-12 * scale * scale);
        prop_assert!((&(&pi * &q) - &(&(&pi * &p) * &d_op)).max_abs() < 1e-12 * scale * scale);
    }

    #[test]
    fn fidelity_of_state_with_itself_is_one(
        dim in 1usize..6,
        entries in prop::collection::vec(complex(), 36),
        rank in 1usize..6,
    ) {
        let rank = rank.min(dim);
        let a = Matrix::from_fn(dim, rank, |i, j| entries[i * 6 + j]);
        let rho = &a * a.adjoint();
        let tr = rho.trace().re;
        prop_assume!(tr > 1e-3);
        let rho = OperatorMatrix::new(rho / C64::new(tr, 0.0));
        let f = fidelity(&rho, &rho, &Tolerances::default()).unwrap();
        prop_assert!((f - 1.0).abs() < 1e-6, "F = {f}");
    }

    #[test]
    fn fidelity_of_diagonal_states_is_bhattacharyya(
        p in prop::collection::vec(0.0..1.0f64, 4),
        q in prop::collection::vec(0.0..1.0f64, 4),
    ) {
        let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
        prop_assume!(sp > 1e-2 && sq > 1e-2);
        let p: Vec<f64> = p.iter().map(|x| x / sp).collect();
        let q: Vec<f64> = q.iter().map(|x| x / sq).collect();
        let expect: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).sqrt()).sum();
        let f = fidelity(
            &OperatorMatrix::from_real_diagonal(&p),
            &OperatorMatrix::from_real_diagonal(&q),
            &Tolerances::default(),
        ).unwrap();
        prop_assert!((f - expect).abs() < 1e-6);
    }

    #[test]
    fn swap_root_squares_to_swap(j in prop_oneof![0.2..4.0f64, -4.0..-0.2f64], branch in 0usize..3) {
        let profile = JProfile::Constant(j);
        let u = ideal_swap(&profile, branch).unwrap();
        let r = swap_sqrt(&profile, branch).unwrap();
        prop_assert!((&(&r * &r) - &u).max_abs() < 1e-12);
        prop_assert!(u.is_unitary(1e-12) && r.is_unitary(1e-12));
        let integral = profile.integral(profile.swap_duration(branch).unwrap());
        prop_assert!((&swap_by_exponential(integral) - &u).max_abs() < 1e-10);
        let x = xor_gate(&profile, branch).unwrap();
        prop_assert!((conditional_phase(&x) + C64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn delta_t_solves_integral_equation(
        j in 0.3..3.0f64,
        shifts in prop::collection::vec((1usize..5, -0.05..0.05f64), 1..6),
        branch in 0usize..2,
    ) {
        let levels: Vec<LevelShift> = shifts
            .iter()
            .map(|&(jl, de)| LevelShift { label: CompositeIndex::new(jl, vec![0]), bath_energy: 0.0, delta_e: de })
            .collect();
        let report = delta_t_correction(&JProfile::Constant(j), &levels, branch, &Tolerances::default()).unwrap();
        prop_assert!(report.max_integral_error() < 1e-10 * report.tau_s.max(1.0));
    }

    #[test]
    fn composite_index_round_trip(k in 1usize..4, n_max in 0usize..4, raw in 0usize..10_000) {
        let levels = n_max + 1;
        let total = 4 * levels.pow(k as u32);
        let flat = raw % total;
        let label = CompositeIndex::from_flat(flat, n_max, k);
        prop_assert!((1..=4).contains(&label.j));
        prop_assert!(label.occupations.iter().all(|&n| n <= n_max));
        prop_assert_eq!(label.flat(n_max), flat);
    }
}

proptest! {
    #![proptest_config(cases(12))]

    #[test]
    fn unperturbed_basis_is_orthonormal_and_complete(
        omegas in prop::collection::vec(0.5..2.0f64, 1..3),
        n_max in 1usize..3,
    ) {
        let gs = vec![1.0; omegas.len()];
        let cfg = ModelConfig::dephasing(1.0, 0.1, &omegas, &gs, n_max);
        let basis = unperturbed_basis(&cfg).unwrap();
        let v = &basis.vectors;
        let gram = v.adjoint() * v;
        let id = Matrix::identity(v.ncols(), v.ncols());
        prop_assert!((gram - id).iter().all(|z| z.norm() < 1e-12));
        for (nu, label) in basis.labels.iter().enumerate() {
            prop_assert_eq!(basis.index_of(label), Some(nu));
        }
    }

    #[test]
    fn subdynamics_projector_is_idempotent_and_matches_oracle(
        lambda in 0.0..0.08f64,
        omega in 0.7..1.6f64,
        g in 0.3..1.2f64,
    ) {
        let cfg = ModelConfig::dephasing(1.0, lambda, &[omega], &[g], 2);
        let hams = build_hamiltonians(&cfg).unwrap();
        let basis = unperturbed_basis(&cfg).unwrap();
        let es = exact_eigensystem(&hams.h, &basis, &Tolerances::default()).unwrap();
        let sd = Subdynamics::new(&hams, &basis, Some(&es), Tolerances::default()).unwrap();
        let sets = sd.build_sets(Order::Exact, Execution::default()).unwrap();
        let mut sum = OperatorMatrix::zeros(hams.dim());
        for s in &sets {
            let pi = s.pi();
            prop_assert!((&(&pi * &pi) - &pi).max_abs() < 1e-9);
            prop_assert!((s.energy().re - es.eigenvalue(s.index).unwrap()).abs() < 1e-9);
            sum = &sum + &pi;
        }
        prop_assert!((&sum - &OperatorMatrix::identity(hams.dim())).max_abs() < 1e-8);
    }
}
