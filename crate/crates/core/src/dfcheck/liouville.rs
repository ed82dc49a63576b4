//! Liouville-space DF check in a triangular basis.
//!
//! For the dephasing coupling each system level `j` sees the bath Hamiltonian
//! `H_B + λ s_j Σ_k (g_k b_k† + g_k* b_k)`, `s_j = ⟨φ_j|σ_z¹+σ_z²|φ_j⟩`. Bath
//! levels of every mode are tiled into repeat blocks `{0,1}, {2,3}, …`; each
//! block is triangulated with the effective coupling `λ s_j g_k`, blocks with
//! zero effective coupling use the identity. The transform is
//! `R = Σ_j |φ_j⟩⟨φ_j| ⊗ ⊗_k T_k^{(j)}`, and with column-stacked
//! vectorisation the Liouvillian `L = I⊗H − Hᵀ⊗I` becomes
//! `S⁻¹ L S = I⊗H̃ − H̃ᵀ⊗I`, `S = (R⁻¹)ᵀ⊗R`, `H̃ = R⁻¹HR`.

use crate::error::{Result, SkeError};
use crate::exec::Execution;
use crate::model::{spin, unperturbed_basis, CouplingKind, ModelConfig, SYSTEM_DIM};
use crate::operator::{c, hermitian_eigen, Matrix, OperatorMatrix, Vector, C64, ONE, ZERO};
use crate::subdyn::fidelity;
use crate::tolerances::Tolerances;

use super::triangulate::{triangulate_block, Branch};

/// Initial system state for the Liouville report.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSystemState {
    /// `½(|01⟩ + |10⟩) − ½(|11⟩ + |00⟩)`
    MixedTripletExample,
    /// `|01⟩`
    Up01,
    /// Arbitrary normalised amplitudes over the computational basis.
    Custom(Vector),
}

impl InitialSystemState {
    pub fn vector(&self) -> Vector {
        match self {
            InitialSystemState::MixedTripletExample => {
                Vector::from_vec(vec![c(-0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(-0.5, 0.0)])
            }
            InitialSystemState::Up01 => Vector::from_vec(vec![ZERO, ONE, ZERO, ZERO]),
            InitialSystemState::Custom(v) => v.clone(),
        }
    }
}

/// `L = I⊗H − Hᵀ⊗I` acting on column-stacked density matrices, built column
/// by column.
pub fn liouvillian(h: &OperatorMatrix, exec: Execution) -> OperatorMatrix {
    let d = h.dim();
    let n = d * d;
    let cols = exec.map_range(n, |col| {
        // column (c_idx, d_idx): vec index d_idx·D + c_idx
        let (ci, di) = (col % d, col / d);
        let mut v = vec![ZERO; n];
        for a in 0..d {
            // I⊗H: row (a, di) gets H[a, ci]
            v[di * d + a] += h[(a, ci)];
            // Hᵀ⊗I: row (ci, b) gets H[di, b]
            v[a * d + ci] -= h[(di, a)];
        }
        v
    });
    let mut m = Matrix::zeros(n, n);
    for (k, col) in cols.into_iter().enumerate() {
        m.set_column(k, &Vector::from_vec(col));
    }
    OperatorMatrix::new(m)
}

#[derive(Debug, Clone)]
pub struct LiouvilleReport {
    pub dim: usize,
    pub liouville_dim: usize,
    pub lambda: f64,
    pub df_levels: Vec<usize>,
    /// Triangulated 2×2 blocks and how many used the vacuum fallback column.
    pub blocks: usize,
    pub fallback_blocks: usize,
    /// `max_ν |P_ν L₁ C_ν P_ν|` with `C_ν = (l_ν − Q L₀ Q)⁻¹ Q L₁ P_ν`.
    pub second_order_residual: f64,
    /// Largest `|L₁|` element between degenerate diagonal entries (dropped
    /// from the second-order resolvent).
    pub degenerate_coupling: f64,
    /// Frobenius norm of `L₁` below the diagonal under the key `(a, D−1−b)`.
    pub lower_triangle_norm: f64,
    pub offdiagonal_norm: f64,
    pub t: f64,
    pub projected_weight: f64,
    /// Projected-state prediction from the diagonal generator vs the exact
    /// projected evolution.
    pub fidelity_projected: f64,
    /// Reduced projected state vs free system evolution.
    pub fidelity_subspace: f64,
    /// Reduced full state vs its zero-coupling evolution.
    pub fidelity_total: f64,
    /// `max |Tr_B e^{−iHτ_s} ρ^proj e^{iHτ_s} − same at λ = 0|`
    pub swap_invariance_lambda: f64,
    /// `max |Tr_B e^{−iHτ_s} ρ^proj e^{iHτ_s} − Tr_B U_sw ρ^proj U_sw†|`
    pub swap_invariance_ideal: f64,
    pub tau_s: f64,
}

/// Triangulating transform over the φ basis and its inverse.
fn triangular_transform(
    config: &ModelConfig,
    branch: Branch,
    tol: &Tolerances,
) -> Result<(Matrix, Matrix, usize, usize)> {
    let levels = config.n_max + 1;
    let bath_dim = config.bath_dim()?;
    let dim = SYSTEM_DIM * bath_dim;
    let mut r = Matrix::zeros(dim, dim);
    let mut r_inv = Matrix::zeros(dim, dim);
    let (mut blocks, mut fallback) = (0, 0);
    for j in 1..=4 {
        let charge = spin::dephasing_charge(j);
        let mut fwd = Matrix::identity(1, 1);
        let mut inv = Matrix::identity(1, 1);
        for mode in &config.modes {
            let g_eff = mode.g * (config.lambda * charge);
            let mut t = Matrix::identity(levels, levels);
            let mut ti = Matrix::identity(levels, levels);
            if g_eff != ZERO {
                for start in (0..levels.saturating_sub(1)).step_by(2) {
                    let b = triangulate_block(mode.omega, g_eff, start, branch, tol)?;
                    blocks += 1;
                    fallback += b.fallback_column as usize;
                    for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                        t[(start + x, start + y)] = c(b.t[(x, y)], 0.0);
                        ti[(start + x, start + y)] = c(b.t_inv[(x, y)], 0.0);
                    }
                }
            }
            fwd = fwd.kronecker(&t);
            inv = inv.kronecker(&ti);
        }
        let off = (j - 1) * bath_dim;
        r.view_mut((off, off), (bath_dim, bath_dim)).copy_from(&fwd);
        r_inv
            .view_mut((off, off), (bath_dim, bath_dim))
            .copy_from(&inv);
    }
    Ok((r, r_inv, blocks, fallback))
}

fn reduce(rho: &Matrix, bath_dim: usize) -> OperatorMatrix {
    OperatorMatrix::new(rho.clone()).partial_trace_second(SYSTEM_DIM, bath_dim)
}

fn evolve(vals: &[f64], vecs: &Matrix, rho: &Matrix, t: f64) -> Matrix {
    let n = vals.len();
    let u =
        vecs * Matrix::from_fn(n, n, |r, k| {
            if r == k {
                C64::from_polar(1.0, -vals[r] * t)
            } else {
                ZERO
            }
        }) * vecs.adjoint();
    &u * rho * u.adjoint()
}

fn normalised(m: &OperatorMatrix) -> OperatorMatrix {
    let tr = m.trace().re;
    if tr > 0.0 {
        m * (1.0 / tr)
    } else {
        m.clone()
    }
}

/// Liouville-space DF report for the dephasing model.
pub fn liouville_df(
    config: &ModelConfig,
    initial: &InitialSystemState,
    t: Option<f64>,
    branch: Branch,
    tol: &Tolerances,
) -> Result<LiouvilleReport> {
    if config.coupling != CouplingKind::Dephasing {
        return Err(SkeError::Unsupported(
            "Liouville triangulation needs a coupling diagonal in the system basis".into(),
        ));
    }
    let dim = config.dim()?;
    let ldim = dim * dim;
    if ldim > config.max_dim {
        return Err(SkeError::Capacity {
            dim: ldim,
            cap: config.max_dim,
        });
    }
    let hams = crate::model::build_hamiltonians(config)?;
    let basis = unperturbed_basis(config)?;
    let bath_dim = basis.bath_dim;
    let (r, r_inv, blocks, fallback_blocks) = triangular_transform(config, branch, tol)?;

    // H̃ over the triangular basis
    let h_phi = basis.to_phi_basis(&hams.h).into_matrix();
    let ht = &r_inv * &h_phi * &r;

    // L_tri[(a,b),(c,d)] = H̃_ac δ_bd − H̃_db δ_ac; diagonal l_(a,b) = H̃_aa − H̃_bb
    let l0 = |a: usize, b: usize| ht[(a, a)] - ht[(b, b)];
    let degenerate = |x: C64, y: C64| (x - y).norm() < tol.degeneracy_rel * x.norm().max(1.0);
    let mut second: f64 = 0.0;
    let mut degenerate_coupling: f64 = 0.0;
    let mut lower2 = 0.0;
    let mut off2 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            let l_nu = l0(a, b);
            let mut acc = ZERO;
            // μ = (c, b), c ≠ a: L_νμ = H̃_ac, L_μν = H̃_ca
            for cc in (0..dim).filter(|&cc| cc != a) {
                let (up, down) = (ht[(a, cc)], ht[(cc, a)]);
                if up == ZERO && down == ZERO {
                    continue;
                }
                let l_mu = l0(cc, b);
                if degenerate(l_nu, l_mu) {
                    degenerate_coupling = degenerate_coupling.max(down.norm());
                } else {
                    acc += up * down / (l_nu - l_mu);
                }
                off2 += down.norm_sqr();
                if (cc, dim - 1 - b) > (a, dim - 1 - b) {
                    lower2 += down.norm_sqr();
                }
            }
            // μ = (a, d), d ≠ b: L_νμ = −H̃_db, L_μν = −H̃_bd
            for d in (0..dim).filter(|&d| d != b) {
                let (up, down) = (-ht[(d, b)], -ht[(b, d)]);
                if up == ZERO && down == ZERO {
                    continue;
                }
                let l_mu = l0(a, d);
                if degenerate(l_nu, l_mu) {
                    degenerate_coupling = degenerate_coupling.max(down.norm());
                } else {
                    acc += up * down / (l_nu - l_mu);
                }
                off2 += down.norm_sqr();
                if (a, dim - 1 - d) > (a, dim - 1 - b) {
                    lower2 += down.norm_sqr();
                }
            }
            second = second.max(acc.norm());
        }
    }

    // DF levels: vanishing sector coupling
    let df_levels: Vec<usize> = (1..=4)
        .filter(|&j| {
            config.lambda == 0.0
                || spin::dephasing_charge(j) == 0.0
                || config.modes.iter().all(|m| m.g == ZERO)
        })
        .collect();
    let mut p_df = Matrix::zeros(dim, dim);
    for &j in &df_levels {
        let off = (j - 1) * bath_dim;
        for b in 0..bath_dim {
            p_df[(off + b, off + b)] = ONE;
        }
    }
    // projector over the lab basis
    let p_lab = &basis.vectors * &p_df * basis.vectors.adjoint();

    let psi_s = initial.vector();
    if (psi_s.norm() - 1.0).abs() > 1e-10 || psi_s.len() != SYSTEM_DIM {
        return Err(SkeError::Validation(
            "initial system state must be a normalised 4-vector".into(),
        ));
    }
    let vac = Vector::from_fn(bath_dim, |r, _| if r == 0 { ONE } else { ZERO });
    let psi = psi_s.kronecker(&vac);
    let rho0 = &psi * psi.adjoint();
    let rho_proj0 = &p_lab * &rho0 * &p_lab;
    let projected_weight = rho_proj0.trace().re;
    if projected_weight <= tol.normalization_min {
        return Err(SkeError::Validation(
            "initial state has no weight in the decoherence-free subspace".into(),
        ));
    }

    let tau_s = config.j.swap_duration(0)?;
    let t = t.unwrap_or(tau_s);
    let (vals, vecs) = hermitian_eigen(hams.h.matrix());
    let free = hams.free();
    let (fvals, fvecs) = hermitian_eigen(free.matrix());

    // prediction: ρ̃_ab(t) = ρ̃_ab(0) e^{−i l_ab t} over the triangular basis
    let rho_tri0 = &r_inv * basis.vectors.adjoint() * &rho_proj0 * &basis.vectors * &r;
    let rho_tri_t = Matrix::from_fn(dim, dim, |a, b| {
        rho_tri0[(a, b)] * (C64::new(0.0, -t) * l0(a, b)).exp()
    });
    let predicted = &basis.vectors * &r * rho_tri_t * &r_inv * basis.vectors.adjoint();
    let exact_full = evolve(&vals, &vecs, &rho0, t);
    let exact_proj = &p_lab * &exact_full * &p_lab;
    let fidelity_projected = fidelity(
        &normalised(&OperatorMatrix::new(predicted.clone())),
        &normalised(&OperatorMatrix::new(exact_proj.clone())),
        tol,
    )?;

    // system-only ideal evolution of the projected state
    let ideal_proj = evolve(&fvals, &fvecs, &rho_proj0, t);
    let fidelity_subspace = fidelity(
        &normalised(&reduce(&ideal_proj, bath_dim)),
        &normalised(&reduce(&exact_proj, bath_dim)),
        tol,
    )?;
    let ideal_full = evolve(&fvals, &fvecs, &rho0, t);
    let fidelity_total = fidelity(
        &reduce(&ideal_full, bath_dim),
        &reduce(&exact_full, bath_dim),
        tol,
    )?;

    let at_tau_lambda = reduce(&evolve(&vals, &vecs, &rho_proj0, tau_s), bath_dim);
    let at_tau_free = reduce(&evolve(&fvals, &fvecs, &rho_proj0, tau_s), bath_dim);
    let u_sw = crate::gates::ideal_swap(&config.j, 0)?.kron(&OperatorMatrix::identity(bath_dim));
    let swapped = reduce(
        &(u_sw.matrix() * &rho_proj0 * u_sw.matrix().adjoint()),
        bath_dim,
    );
    let swap_invariance_lambda = (&at_tau_lambda - &at_tau_free).max_abs();
    let swap_invariance_ideal = (&at_tau_lambda - &swapped).max_abs();

    Ok(LiouvilleReport {
        dim,
        liouville_dim: ldim,
        lambda: config.lambda,
        df_levels,
        blocks,
        fallback_blocks,
        second_order_residual: second,
        degenerate_coupling,
        lower_triangle_norm: lower2.sqrt(),
        offdiagonal_norm: off2.sqrt(),
        t,
        projected_weight,
        fidelity_projected,
        fidelity_subspace,
        fidelity_total,
        swap_invariance_lambda,
        swap_invariance_ideal,
        tau_s,
    })
}

/// `H̃ = R⁻¹ H R` for the triangular transform, over the φ basis.
pub fn triangular_hamiltonian(
    config: &ModelConfig,
    branch: Branch,
    tol: &Tolerances,
) -> Result<(OperatorMatrix, OperatorMatrix, OperatorMatrix)> {
    let hams = crate::model::build_hamiltonians(config)?;
    let basis = unperturbed_basis(config)?;
    let (r, r_inv, _, _) = triangular_transform(config, branch, tol)?;
    let h_phi = basis.to_phi_basis(&hams.h).into_matrix();
    Ok((
        OperatorMatrix::new(&r_inv * &h_phi * &r),
        OperatorMatrix::new(r),
        OperatorMatrix::new(r_inv),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::exact_eigensystem;

    fn small(lambda: f64) -> ModelConfig {
        ModelConfig::dephasing(1.0, lambda, &[1.0], &[1.0], 1)
    }

    #[test]
    fn liouvillian_matches_commutator() {
        let cfg = small(0.1);
        let h = crate::model::build_hamiltonians(&cfg).unwrap().h;
        let l = liouvillian(&h, Execution::Sequential);
        let x = OperatorMatrix::from_fn(8, |r, k| c((r * 3 + k) as f64, (r as f64) - (k as f64)));
        let vec_x = Vector::from_fn(64, |i, _| x[(i % 8, i / 8)]);
        let comm = h.commutator(&x);
        let lx = l.apply(&vec_x);
        for i in 0..64 {
            assert!((lx[i] - comm[(i % 8, i / 8)]).norm() < 1e-12);
        }
        assert_eq!(l, liouvillian(&h, Execution::Parallel));
    }

    #[test]
    fn liouvillian_spectrum_is_energy_differences() {
        let cfg = small(0.1);
        let h = crate::model::build_hamiltonians(&cfg).unwrap().h;
        let basis = unperturbed_basis(&cfg).unwrap();
        let es = exact_eigensystem(&h, &basis, &Tolerances::default()).unwrap();
        let l = liouvillian(&h, Execution::Sequential);
        // L is Hermitian for Hermitian H
        assert!(l.is_hermitian(1e-12));
        let (vals, _) = hermitian_eigen(l.matrix());
        let mut diffs: Vec<f64> = es
            .eigenvalues
            .iter()
            .flat_map(|a| es.eigenvalues.iter().map(move |b| a - b))
            .collect();
        diffs.sort_by(f64::total_cmp);
        for (x, y) in vals.iter().zip(&diffs) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn kronecker_shortcut_equals_similarity() {
        let cfg = small(0.1);
        let tol = Tolerances::default();
        let (ht, r, r_inv) = triangular_hamiltonian(&cfg, Branch::Plus, &tol).unwrap();
        let basis = unperturbed_basis(&cfg).unwrap();
        let h_phi = basis.to_phi_basis(&crate::model::build_hamiltonians(&cfg).unwrap().h);
        let l = liouvillian(&h_phi, Execution::Sequential);
        let s = r_inv.matrix().transpose().kronecker(r.matrix());
        let s_inv = r.matrix().transpose().kronecker(r_inv.matrix());
        let direct = &s_inv * l.matrix() * &s;
        let shortcut = liouvillian(&ht, Execution::Sequential);
        assert!((direct - shortcut.matrix())
            .iter()
            .all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn single_mode_block_is_diagonalised() {
        let (ht, _, _) =
            triangular_hamiltonian(&small(0.1), Branch::Plus, &Tolerances::default()).unwrap();
        for r in 0..8 {
            for k in 0..8 {
                if r != k {
                    assert!(ht[(r, k)].norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn zero_coupling_is_trivially_free() {
        let r = liouville_df(
            &small(0.0),
            &InitialSystemState::MixedTripletExample,
            None,
            Branch::Plus,
            &Tolerances::default(),
        )
        .unwrap();
        assert!(r.second_order_residual < 1e-15);
        assert!((r.fidelity_projected - 1.0).abs() < 1e-10);
        assert!((r.fidelity_total - 1.0).abs() < 1e-10);
        assert_eq!(r.df_levels, vec![1, 2, 3, 4]);
    }

    #[test]
    fn coupled_small_instance() {
        let tol = Tolerances::default();
        let r = liouville_df(
            &small(0.1),
            &InitialSystemState::MixedTripletExample,
            None,
            Branch::Plus,
            &tol,
        )
        .unwrap();
        assert_eq!(r.df_levels, vec![3, 4]);
        assert!(r.second_order_residual <= 1e-10 * 0.01);
        assert!((r.fidelity_projected - 1.0).abs() < 1e-10);
        assert!((r.fidelity_subspace - 1.0).abs() < 1e-10);
        assert!(r.swap_invariance_lambda < 1e-12);
        assert!(r.swap_invariance_ideal < 1e-12);
        assert!((r.projected_weight - 0.5).abs() < 1e-12);
        assert_eq!(r.fallback_blocks, 2);
    }

    #[test]
    fn capacity_and_coupling_checks() {
        let mut cfg = ModelConfig::dephasing(1.0, 0.1, &[1.0, 1.3, 1.7], &[1.0; 3], 2);
        assert!(matches!(
            liouville_df(
                &cfg,
                &InitialSystemState::Up01,
                None,
                Branch::Plus,
                &Tolerances::default()
            ),
            Err(SkeError::Capacity { .. })
        ));
        cfg = small(0.1);
        cfg.coupling = CouplingKind::CaldeiraLeggett;
        cfg.max_dim = 1 << 20;
        assert!(matches!(
            liouville_df(
                &cfg,
                &InitialSystemState::Up01,
                None,
                Branch::Plus,
                &Tolerances::default()
            ),
            Err(SkeError::Unsupported(_))
        ));
    }
}
