//! Creation/destruction operators, eigenprojectors, the intermediate
//! operator and projected-state evolution.
//!
//! All per-ν objects are rank-one in the unperturbed basis:
//! `C_ν = |c_ν⟩⟨φ_ν|`, `D_ν = |φ_ν⟩⟨d_ν|`, with `c_ν, d_ν ⊥ φ_ν`. They are
//! computed from `H' = V† H V` (the Hamiltonian in the φ basis) and stored
//! both as φ-basis coefficient vectors and as lab-basis vectors; dense
//! operators are materialised on request.

use crate::error::{Result, SkeError};
use crate::exec::Execution;
use crate::model::{CompositeIndex, Hamiltonians, UnperturbedBasis};
use crate::operator::{c, hermitian_eigen, Matrix, OperatorMatrix, Vector, C64, ONE, ZERO};
use crate::oracle::EigenSystem;
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Resolvent with the oracle eigenvalue `E_ν`.
    Exact,
    /// First-order C/D with the degenerate-block denominator.
    Order1,
}

/// Shared inputs of the per-ν computations.
#[derive(Debug, Clone)]
pub struct Subdynamics<'a> {
    pub hams: &'a Hamiltonians,
    pub basis: &'a UnperturbedBasis,
    pub eigen: Option<&'a EigenSystem>,
    pub tol: Tolerances,
    /// `V† H V`
    h_phi: Matrix,
}

/// Per-ν bundle `{P, C, D, Π, ΔE}`.
#[derive(Debug, Clone)]
pub struct SubdynSet {
    pub nu: CompositeIndex,
    pub index: usize,
    pub order: Order,
    pub e0: f64,
    pub delta_e: C64,
    /// `sqrt(Σ |H_μν|²)` over E⁰-degenerate partners.
    pub delta_e_degenerate: f64,
    /// `sqrt(Σ |H_μν|²)` over all couplings within the same system level.
    pub delta_e_printed: f64,
    /// `c_ν` and `d_ν` as coefficients over the φ basis.
    pub c_phi: Vector,
    pub d_phi: Vector,
    pub phi: Vector,
    pub c_lab: Vector,
    pub d_lab: Vector,
    pub warnings: Vec<String>,
}

impl SubdynSet {
    pub fn p(&self) -> OperatorMatrix {
        OperatorMatrix::outer(&self.phi, &self.phi)
    }

    pub fn q(&self) -> OperatorMatrix {
        &OperatorMatrix::identity(self.phi.len()) - &self.p()
    }

    pub fn c(&self) -> OperatorMatrix {
        OperatorMatrix::outer(&self.c_lab, &self.phi)
    }

    pub fn d(&self) -> OperatorMatrix {
        OperatorMatrix::outer(&self.phi, &self.d_lab)
    }

    /// `1 + ⟨φ|DC|φ⟩`
    pub fn normalization(&self) -> C64 {
        ONE + self.d_phi.dotc(&self.c_phi)
    }

    /// `Π = (P + C)(1 + ⟨φ|DC|φ⟩)⁻¹(P + D)`
    pub fn pi(&self) -> OperatorMatrix {
        let left = &self.phi + &self.c_lab;
        let right = &self.phi + &self.d_lab;
        OperatorMatrix::outer(&left, &right).scale(ONE / self.normalization())
    }

    /// `E⁰_ν + ΔE_ν`
    pub fn energy(&self) -> C64 {
        c(self.e0, 0.0) + self.delta_e
    }
}

impl<'a> Subdynamics<'a> {
    pub fn new(
        hams: &'a Hamiltonians,
        basis: &'a UnperturbedBasis,
        eigen: Option<&'a EigenSystem>,
        tol: Tolerances,
    ) -> Result<Self> {
        if hams.dim() != basis.dim() {
            return Err(SkeError::Validation(format!(
                "Hamiltonian dimension {} does not match basis dimension {}",
                hams.dim(),
                basis.dim()
            )));
        }
        // H_S + H_B is diagonal in the φ basis by construction; only the
        // interaction is rotated, so λ = 0 leaves no rounding residue
        let mut h_phi = basis.to_phi_basis(&hams.h_int).into_matrix() * c(hams.lambda, 0.0);
        for (nu, e) in basis.energies.iter().enumerate() {
            h_phi[(nu, nu)] += c(*e, 0.0);
        }
        Ok(Self {
            hams,
            basis,
            eigen,
            tol,
            h_phi,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `H` in the φ basis, assembled as `diag(E⁰) + λ V† H_int V`.
    pub fn h_phi(&self) -> &Matrix {
        &self.h_phi
    }

    fn label(&self, nu: usize) -> String {
        self.basis.labels[nu].to_string()
    }

    fn is_degenerate(&self, nu: usize, mu: usize) -> bool {
        let e = &self.basis.energies;
        (e[nu] - e[mu]).abs() < self.tol.degeneracy_rel * e[nu].abs().max(1.0)
    }

    /// `sqrt(Σ_μ |H_μν|²)` over E⁰-degenerate partners `μ ≠ ν`.
    pub fn degenerate_shift(&self, nu: usize) -> f64 {
        (0..self.dim())
            .filter(|&mu| mu != nu && self.is_degenerate(nu, mu))
            .map(|mu| self.h_phi[(mu, nu)].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `sqrt(Σ_μ |H_μν|²)` over all `μ ≠ ν` sharing the system level of ν.
    pub fn printed_shift(&self, nu: usize) -> f64 {
        let j = self.basis.labels[nu].j;
        (0..self.dim())
            .filter(|&mu| mu != nu && self.basis.labels[mu].j == j)
            .map(|mu| self.h_phi[(mu, nu)].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn exact_energy(&self, nu: usize) -> Result<f64> {
        let es = self.eigen.ok_or_else(|| {
            SkeError::Validation("exact subdynamics requires an oracle eigensystem".into())
        })?;
        es.eigenvalue(nu)
    }

    /// Pseudo-inverse of `E Q − Q H' Q` applied to `rhs`, restricted to the
    /// complement of ν. A dropped direction carrying weight of `rhs` is a
    /// singular resolvent.
    fn resolvent_apply(&self, nu: usize, e: f64, rhs: &Vector) -> Result<Vector> {
        let n = self.dim();
        let m = Matrix::from_fn(n, n, |r, k| {
            if r == nu || k == nu {
                ZERO
            } else if r == k {
                c(e, 0.0) - self.h_phi[(r, k)]
            } else {
                -self.h_phi[(r, k)]
            }
        });
        let (values, vectors) = hermitian_eigen(&m);
        let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let threshold = self.tol.pinv_rel * scale;
        let mut out = Vector::zeros(n);
        for (i, &mu) in values.iter().enumerate() {
            let u = vectors.column(i);
            let w = u.dotc(rhs);
            if mu.abs() <= threshold {
                if w.norm() > self.tol.resolvent_weight {
                    return Err(SkeError::SingularResolvent {
                        nu: self.label(nu),
                        gap: mu.abs(),
                    });
                }
                continue;
            }
            out += u * (w / mu);
        }
        out[nu] = ZERO;
        Ok(out)
    }

    /// `Q H' φ_ν` and `(φ_ν† H' Q)†`.
    fn couplings(&self, nu: usize) -> (Vector, Vector) {
        let n = self.dim();
        let col = Vector::from_fn(n, |r, _| if r == nu { ZERO } else { self.h_phi[(r, nu)] });
        let row = Vector::from_fn(n, |k, _| {
            if k == nu {
                ZERO
            } else {
                self.h_phi[(nu, k)].conj()
            }
        });
        (col, row)
    }

    /// Degenerate-block denominator, validated.
    fn degenerate_denominator(&self, nu: usize) -> Result<f64> {
        let shift = self.degenerate_shift(nu);
        let any_partner_coupling = (0..self.dim())
            .any(|mu| mu != nu && self.is_degenerate(nu, mu) && self.h_phi[(mu, nu)] != ZERO);
        if any_partner_coupling && shift <= self.tol.normalization_min {
            return Err(SkeError::DegenerateBlock { nu: self.label(nu) });
        }
        Ok(shift)
    }

    /// `c_ν` over the φ basis.
    pub fn creation_coefficients(&self, nu: usize, order: Order) -> Result<Vector> {
        let (col, _) = self.couplings(nu);
        match order {
            Order::Exact => self.resolvent_apply(nu, self.exact_energy(nu)?, &col),
            Order::Order1 => {
                let deg = self.degenerate_denominator(nu)?;
                let e = &self.basis.energies;
                Ok(Vector::from_fn(self.dim(), |mu, _| {
                    let h = col[mu];
                    if h == ZERO {
                        ZERO
                    } else if self.is_degenerate(nu, mu) {
                        h / deg
                    } else {
                        h / (e[nu] - e[mu])
                    }
                }))
            }
        }
    }

    /// `d_ν` over the φ basis, with `D_ν = |φ_ν⟩⟨d_ν|`.
    pub fn destruction_coefficients(&self, nu: usize, order: Order) -> Result<Vector> {
        let (_, row) = self.couplings(nu);
        match order {
            Order::Exact => self.resolvent_apply(nu, self.exact_energy(nu)?, &row),
            Order::Order1 => {
                let deg = self.degenerate_denominator(nu)?;
                let e = &self.basis.energies;
                Ok(Vector::from_fn(self.dim(), |mu, _| {
                    let h = row[mu];
                    if h == ZERO {
                        ZERO
                    } else if self.is_degenerate(nu, mu) {
                        -h / deg
                    } else {
                        h / (e[nu] - e[mu])
                    }
                }))
            }
        }
    }

    /// `ΔE_ν = ⟨φ_ν|H₀^int|φ_ν⟩ + ⟨φ_ν|H₁ C_ν|φ_ν⟩`
    pub fn energy_shift(&self, nu: usize, c_phi: &Vector) -> C64 {
        let diag = self.h_phi[(nu, nu)] - c(self.basis.energies[nu], 0.0);
        let off: C64 = (0..self.dim())
            .filter(|&mu| mu != nu)
            .map(|mu| self.h_phi[(nu, mu)] * c_phi[mu])
            .sum();
        diag + off
    }

    pub fn creation_operator(&self, nu: usize, order: Order) -> Result<OperatorMatrix> {
        let cv = self.basis.vectors.clone() * self.creation_coefficients(nu, order)?;
        Ok(OperatorMatrix::outer(&cv, &self.basis.vector(nu)))
    }

    pub fn destruction_operator(&self, nu: usize, order: Order) -> Result<OperatorMatrix> {
        let dv = self.basis.vectors.clone() * self.destruction_coefficients(nu, order)?;
        Ok(OperatorMatrix::outer(&self.basis.vector(nu), &dv))
    }

    /// Full bundle for one label.
    pub fn subdyn_set(&self, nu: usize, order: Order) -> Result<SubdynSet> {
        let c_phi = self.creation_coefficients(nu, order)?;
        let d_phi = self.destruction_coefficients(nu, order)?;
        let delta_e = self.energy_shift(nu, &c_phi);
        let mut warnings = Vec::new();
        if delta_e.im.abs() > self.tol.imag_warning {
            warnings.push(format!(
                "ΔE at ν={} has imaginary part {:e}",
                self.label(nu),
                delta_e.im
            ));
        }
        let set = SubdynSet {
            nu: self.basis.labels[nu].clone(),
            index: nu,
            order,
            e0: self.basis.energies[nu],
            delta_e,
            delta_e_degenerate: self.degenerate_shift(nu),
            delta_e_printed: self.printed_shift(nu),
            c_lab: &self.basis.vectors * &c_phi,
            d_lab: &self.basis.vectors * &d_phi,
            phi: self.basis.vector(nu),
            c_phi,
            d_phi,
            warnings,
        };
        let norm = set.normalization();
        if norm.norm() < self.tol.normalization_min {
            return Err(SkeError::NonInvertibleNormalization {
                nu: self.label(nu),
                value: norm.norm(),
            });
        }
        Ok(set)
    }

    /// Bundles for every label, in label order.
    pub fn build_sets(&self, order: Order, exec: Execution) -> Result<Vec<SubdynSet>> {
        exec.try_map_range(self.dim(), |nu| self.subdyn_set(nu, order))
    }

    /// `Θ` with its eigenprojectors fixed to `P_ν`, plus the leakage of the
    /// unprojected `H₀ + H₁ C` out of each `P_ν`.
    pub fn intermediate_operator(&self, sets: &[SubdynSet]) -> IntermediateOperator {
        let n = self.dim();
        let leakage = sets
            .iter()
            .map(|s| {
                // Q_ν H₁ c_ν over the φ basis
                let mut v = Vector::zeros(n);
                for r in (0..n).filter(|&r| r != s.index) {
                    v[r] = (0..n)
                        .filter(|&k| k != r)
                        .map(|k| self.h_phi[(r, k)] * s.c_phi[k])
                        .sum();
                }
                v.norm()
            })
            .collect();
        IntermediateOperator {
            labels: sets.iter().map(|s| s.nu.clone()).collect(),
            unperturbed: sets.iter().map(|s| s.e0).collect(),
            shifts: sets.iter().map(|s| s.delta_e).collect(),
            vectors: self.basis.vectors.clone(),
            literal_leakage: leakage,
        }
    }

    /// The unprojected operator `H₀ + H₁ Σ_ν C_ν` in the lab basis.
    pub fn literal_intermediate(&self, sets: &[SubdynSet]) -> OperatorMatrix {
        let n = self.dim();
        let h0 = Matrix::from_fn(n, n, |r, k| if r == k { self.h_phi[(r, k)] } else { ZERO });
        let h1 = &self.h_phi - &h0;
        let mut cm = Matrix::zeros(n, n);
        for s in sets {
            cm.set_column(s.index, &s.c_phi);
        }
        self.basis
            .from_phi_basis(&OperatorMatrix::new(h0 + h1 * cm))
    }
}

/// Generic `Π = (P + C)(P + DC)⁻¹(P + D)` for a rank-one `P`.
///
/// The inverse acts on the P block as the scalar `1 + Tr(P D C P)` and as the
/// identity on Q; since `C Q = 0` only the P block survives.
pub fn pi_projector(
    p: &OperatorMatrix,
    c_op: &OperatorMatrix,
    d_op: &OperatorMatrix,
    tol: &Tolerances,
) -> Result<OperatorMatrix> {
    let scalar = ONE + (&(&(p * d_op) * c_op) * p).trace();
    if scalar.norm() < tol.normalization_min {
        return Err(SkeError::NonInvertibleNormalization {
            nu: "?".into(),
            value: scalar.norm(),
        });
    }
    let left = p + c_op;
    let right = p + d_op;
    Ok((&(&left * p) * &right).scale(ONE / scalar))
}

/// `Θ = Σ_ν (E⁰_ν + ΔE_ν) P_ν`
#[derive(Debug, Clone)]
pub struct IntermediateOperator {
    pub labels: Vec<CompositeIndex>,
    pub unperturbed: Vec<f64>,
    pub shifts: Vec<C64>,
    vectors: Matrix,
    /// Per ν: `‖Q_ν H₁ c_ν‖`.
    pub literal_leakage: Vec<f64>,
}

impl IntermediateOperator {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn energies(&self) -> Vec<C64> {
        self.unperturbed
            .iter()
            .zip(&self.shifts)
            .map(|(&e, &d)| c(e, 0.0) + d)
            .collect()
    }

    pub fn spectral_decomposition(&self) -> crate::operator::SpectralDecomposition {
        let terms = self
            .energies()
            .into_iter()
            .enumerate()
            .map(|(nu, e)| {
                let v = self.vectors.column(nu).into_owned();
                (e, OperatorMatrix::outer(&v, &v))
            })
            .collect();
        crate::operator::SpectralDecomposition::new(terms)
    }

    /// `Θ` as a dense operator in the lab basis.
    pub fn assembled(&self) -> OperatorMatrix {
        let n = self.vectors.nrows();
        let e = self.energies();
        let diag = Matrix::from_fn(n, n, |r, k| if r == k { e[r] } else { ZERO });
        OperatorMatrix::new(&self.vectors * diag * self.vectors.adjoint())
    }

    /// `‖Θ P_ν − (E⁰_ν + ΔE_ν) P_ν‖` for every ν.
    pub fn eigen_residuals(&self) -> Vec<f64> {
        let theta = self.assembled();
        let e = self.energies();
        (0..self.len())
            .map(|nu| {
                let v = self.vectors.column(nu).into_owned();
                (theta.apply(&v) - &v * e[nu]).norm()
            })
            .collect()
    }

    pub fn max_literal_leakage(&self) -> f64 {
        self.literal_leakage.iter().cloned().fold(0.0, f64::max)
    }
}

/// State of the projected dynamics over the φ basis.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectedState {
    Pure(Vector),
    Density(Matrix),
}

impl ProjectedState {
    pub fn to_density(&self) -> Matrix {
        match self {
            ProjectedState::Pure(v) => v * v.adjoint(),
            ProjectedState::Density(m) => m.clone(),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            ProjectedState::Pure(v) => v.norm(),
            ProjectedState::Density(m) => m.trace().re,
        }
    }
}

/// `c_ν = (1 + ⟨φ_ν|D_ν C_ν|φ_ν⟩)⁻¹ ⟨φ_ν|(P_ν + D_ν)|ψ⟩`
pub fn project_state(psi: &Vector, sets: &[SubdynSet]) -> ProjectedState {
    let coeffs = sets
        .iter()
        .map(|s| (&s.phi + &s.d_lab).dotc(psi) / s.normalization())
        .collect::<Vec<_>>();
    ProjectedState::Pure(Vector::from_vec(coeffs))
}

/// Density version of [`project_state`].
pub fn project_density(rho: &OperatorMatrix, sets: &[SubdynSet]) -> ProjectedState {
    let n = sets.len();
    let w = Matrix::from_fn(rho.dim(), n, |r, k| {
        (sets[k].phi[r] + sets[k].d_lab[r]) * (ONE / sets[k].normalization()).conj()
    });
    ProjectedState::Density(w.adjoint() * rho.matrix() * w)
}

/// `Σ_ν (φ_ν + c_ν) a_ν`
pub fn reconstruct_state(state: &Vector, sets: &[SubdynSet]) -> Vector {
    let mut out = Vector::zeros(sets.first().map(|s| s.phi.len()).unwrap_or(0));
    for (s, a) in sets.iter().zip(state.iter()) {
        out += (&s.phi + &s.c_lab) * *a;
    }
    out
}

fn phases(theta: &IntermediateOperator, t: f64) -> Vec<C64> {
    theta
        .energies()
        .iter()
        .map(|e| (C64::new(0.0, -t) * e).exp())
        .collect()
}

/// Multiplies amplitudes by `e^{−i(E⁰+ΔE)t}`; densities by
/// `e^{−iE_ν t} (e^{−iE_μ t})*`.
pub fn propagate_projected(
    state: &ProjectedState,
    theta: &IntermediateOperator,
    t: f64,
) -> ProjectedState {
    let ph = phases(theta, t);
    match state {
        ProjectedState::Pure(v) => {
            ProjectedState::Pure(Vector::from_fn(v.len(), |r, _| v[r] * ph[r]))
        }
        ProjectedState::Density(m) => {
            ProjectedState::Density(Matrix::from_fn(m.nrows(), m.ncols(), |r, k| {
                m[(r, k)] * ph[r] * ph[k].conj()
            }))
        }
    }
}

/// Segment-ordered propagation over piecewise-constant generators.
pub fn propagate_projected_segments(
    state: &ProjectedState,
    segments: &[(&IntermediateOperator, f64)],
) -> ProjectedState {
    segments.iter().fold(state.clone(), |s, (theta, dt)| {
        propagate_projected(&s, theta, *dt)
    })
}

/// Embeds a projected density back in the lab basis as `Σ ρ_νμ |φ_ν⟩⟨φ_μ|`.
pub fn projected_density_lab(state: &ProjectedState, basis: &UnperturbedBasis) -> OperatorMatrix {
    basis.from_phi_basis(&OperatorMatrix::new(state.to_density()))
}

#[derive(Debug, Clone)]
pub struct ReducedDensity {
    /// `Tr_B Σ_ν P_ν Π_ν ρ`, computational system basis.
    pub rho_s: OperatorMatrix,
    pub trace: C64,
    pub warning: Option<String>,
}

/// `ρ_S^proj = Tr_B Σ_ν P_ν Π_ν ρ`
pub fn reduced_projected_density(
    rho: &OperatorMatrix,
    sets: &[SubdynSet],
    bath_dim: usize,
) -> ReducedDensity {
    let n = rho.dim();
    // P_ν Π_ν = s_ν |φ_ν⟩⟨φ_ν + d_ν|
    let mut a = Matrix::zeros(n, n);
    for s in sets {
        let right = (&s.phi + &s.d_lab) * (ONE / s.normalization()).conj();
        a += &s.phi * right.adjoint();
    }
    let full = OperatorMatrix::new(a * rho.matrix());
    let rho_s = full.partial_trace_second(n / bath_dim, bath_dim);
    let trace = rho_s.trace();
    let warning = (trace.re <= 0.0).then(|| {
        format!(
            "projected reduced density has non-positive trace {:e}",
            trace.re
        )
    });
    ReducedDensity {
        rho_s,
        trace,
        warning,
    }
}

/// Uhlmann fidelity `Tr √(√ρ₀ ρ_t √ρ₀)`, evaluated as the trace norm
/// `‖√ρ₀ √ρ_t‖₁` so that rank deficiency costs no precision.
pub fn fidelity(rho0: &OperatorMatrix, rho_t: &OperatorMatrix, tol: &Tolerances) -> Result<f64> {
    let a = psd_sqrt(rho0.matrix(), tol)?;
    let b = psd_sqrt(rho_t.matrix(), tol)?;
    Ok((a * b).singular_values().iter().sum())
}

/// Square root of a positive semidefinite matrix. Eigenvalues in
/// `[−fidelity_invalid, fidelity_clamp]` count as zero; lower ones reject the
/// state.
fn psd_sqrt(m: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut roots = Vec::with_capacity(n);
    for v in values {
        if v < -tol.fidelity_invalid {
            return Err(SkeError::InvalidState(v));
        }
        roots.push(if v <= tol.fidelity_clamp {
            0.0
        } else {
            v.sqrt()
        });
    }
    let d = Matrix::from_fn(n, n, |r, k| if r == k { c(roots[r], 0.0) } else { ZERO });
    Ok(&vectors * d * vectors.adjoint())
}
