//! Two-qubit Heisenberg system coupled to a truncated bosonic bath.
//!
//! Operators are stored in the "lab" product basis: the computational
//! two-qubit basis `|q1 q2⟩` (index `2 q1 + q2`) tensored with Fock states
//! ordered mode-lexicographically, first mode most significant. The
//! unperturbed eigenbasis `φ_ν = φ_j ⊗ |n_1 … n_K⟩` is held as the columns of
//! a unitary matrix in that lab basis, ordered j-major and then
//! mode-lexicographic, so the flat label index equals the column index.
//!
//! Conventions: ħ = 1, `σ_z|0⟩ = |0⟩`, `σ_z|1⟩ = −|1⟩`, `S = σ/2`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use crate::error::{Result, SkeError};
use crate::operator::{c, Matrix, OperatorMatrix, Vector, C64, I, ONE, ZERO};
use crate::tolerances::DEFAULT_MAX_DIM;

pub const SYSTEM_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// `(σ_z¹ + σ_z²) ⊗ Σ_k (g_k b_k† + g_k* b_k)`
    Dephasing,
    /// `Σ_{spin, axis} σ_axis ⊗ Σ_k (g_k a† + g_k* a)` with an independent
    /// oscillator set per (spin, axis) channel.
    CaldeiraLeggett,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JSegment {
    pub duration: f64,
    pub j: f64,
}

/// Exchange coupling `J(t)`, constant or piecewise constant.
#[derive(Debug, Clone, PartialEq)]
pub enum JProfile {
    Constant(f64),
    Piecewise(Vec<JSegment>),
}

impl JProfile {
    /// Value during the first segment, used for time-independent quantities.
    pub fn initial(&self) -> f64 {
        match self {
            JProfile::Constant(j) => *j,
            JProfile::Piecewise(segs) => segs.first().map(|s| s.j).unwrap_or(0.0),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            JProfile::Constant(_) => true,
            JProfile::Piecewise(segs) => segs.windows(2).all(|w| w[0].j == w[1].j),
        }
    }

    /// Total duration of the profile; `None` for a constant profile.
    pub fn duration(&self) -> Option<f64> {
        match self {
            JProfile::Constant(_) => None,
            JProfile::Piecewise(segs) => Some(segs.iter().map(|s| s.duration).sum()),
        }
    }

    /// Constant pieces `(J, dt)` covering `[0, t]`. The last segment of a
    /// piecewise profile is held past the end of the profile.
    pub fn pieces_until(&self, t: f64) -> Vec<(f64, f64)> {
        match self {
            JProfile::Constant(j) => vec![(*j, t)],
            JProfile::Piecewise(segs) => {
                let mut out = Vec::new();
                let mut left = t;
                for (idx, s) in segs.iter().enumerate() {
                    if left <= 0.0 {
                        break;
                    }
                    let last = idx + 1 == segs.len();
                    let dt = if last { left } else { s.duration.min(left) };
                    out.push((s.j, dt));
                    left -= dt;
                }
                out
            }
        }
    }

    /// `∫_0^t J(τ) dτ`
    pub fn integral(&self, t: f64) -> f64 {
        self.pieces_until(t).iter().map(|(j, dt)| j * dt).sum()
    }

    /// Coupling duration `τ_s` with `∫_0^{τ_s} J = π (mod 2π)`.
    ///
    /// `branch = 0` returns the smallest positive solution, `branch = k` the
    /// k-th later crossing. A piecewise profile must reach the crossing
    /// within its stated duration.
    pub fn swap_duration(&self, branch: usize) -> Result<f64> {
        let segs: Vec<(f64, f64)> = match self {
            JProfile::Constant(j) => {
                if *j == 0.0 || !j.is_finite() {
                    return Err(SkeError::UnreachableDuration);
                }
                // crossings at ∫ = ±π, ±3π, ... in the direction of J
                return Ok((2 * branch + 1) as f64 * PI / j.abs());
            }
            JProfile::Piecewise(segs) => segs.iter().map(|s| (s.j, s.duration)).collect(),
        };
        let mut found = 0usize;
        let mut t0 = 0.0;
        let mut a = 0.0;
        for (j, dt) in segs {
            let b = a + j * dt;
            if j != 0.0 {
                // targets π + 2πm strictly after a (or at a when t0 = 0 is excluded)
                let (lo, hi) = if b > a { (a, b) } else { (b, a) };
                let m_lo = ((lo - PI) / (2.0 * PI)).ceil() as i64;
                let m_hi = ((hi - PI) / (2.0 * PI)).floor() as i64;
                let mut targets: Vec<f64> =
                    (m_lo..=m_hi).map(|m| PI + 2.0 * PI * m as f64).collect();
                if b < a {
                    targets.reverse();
                }
                for target in targets {
                    let tau = t0 + (target - a) / j;
                    if tau <= 0.0 {
                        continue;
                    }
                    if found == branch {
                        return Ok(tau);
                    }
                    found += 1;
                }
            }
            a = b;
            t0 += dt;
        }
        Err(SkeError::UnreachableDuration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathMode {
    pub omega: f64,
    pub g: C64,
}

/// Physical specification of the system + bath model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub j: JProfile,
    pub lambda: f64,
    pub modes: Vec<BathMode>,
    pub n_max: usize,
    pub coupling: CouplingKind,
    pub max_dim: usize,
}

impl ModelConfig {
    pub fn new(j: f64, lambda: f64, modes: Vec<BathMode>, n_max: usize) -> Self {
        Self {
            j: JProfile::Constant(j),
            lambda,
            modes,
            n_max,
            coupling: CouplingKind::Dephasing,
            max_dim: DEFAULT_MAX_DIM,
        }
    }

    /// Dephasing model with real couplings.
    pub fn dephasing(j: f64, lambda: f64, omegas: &[f64], gs: &[f64], n_max: usize) -> Self {
        let modes = omegas
            .iter()
            .zip(gs)
            .map(|(&omega, &g)| BathMode {
                omega,
                g: c(g, 0.0),
            })
            .collect();
        Self::new(j, lambda, modes, n_max)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(SkeError::InvalidConfig("n_max must be at least 1".into()));
        }
        if self.modes.is_empty() {
            return Err(SkeError::InvalidConfig(
                "at least one bath mode is required".into(),
            ));
        }
        for (k, m) in self.modes.iter().enumerate() {
            if !(m.omega.is_finite() && m.omega > 0.0) {
                return Err(SkeError::InvalidConfig(format!(
                    "mode {k}: omega must be finite and > 0, got {}",
                    m.omega
                )));
            }
            if !(m.g.re.is_finite() && m.g.im.is_finite()) {
                return Err(SkeError::InvalidConfig(format!(
                    "mode {k}: non-finite coupling"
                )));
            }
        }
        if !self.lambda.is_finite() {
            return Err(SkeError::InvalidConfig("lambda must be finite".into()));
        }
        match &self.j {
            JProfile::Constant(j) if !j.is_finite() => {
                return Err(SkeError::InvalidConfig("J must be finite".into()))
            }
            JProfile::Piecewise(segs) => {
                if segs.is_empty() {
                    return Err(SkeError::InvalidConfig("J profile has no segments".into()));
                }
                if segs
                    .iter()
                    .any(|s| !(s.j.is_finite() && s.duration.is_finite() && s.duration > 0.0))
                {
                    return Err(SkeError::InvalidConfig(
                        "J segments need finite J and positive duration".into(),
                    ));
                }
            }
            _ => {}
        }
        self.dim().map(|_| ())
    }

    /// Number of oscillators actually simulated.
    pub fn oscillator_count(&self) -> usize {
        match self.coupling {
            CouplingKind::Dephasing => self.modes.len(),
            CouplingKind::CaldeiraLeggett => 6 * self.modes.len(),
        }
    }

    /// Mode data per simulated oscillator.
    pub fn oscillators(&self) -> Vec<BathMode> {
        match self.coupling {
            CouplingKind::Dephasing => self.modes.clone(),
            CouplingKind::CaldeiraLeggett => {
                (0..6).flat_map(|_| self.modes.iter().copied()).collect()
            }
        }
    }

    pub fn bath_dim(&self) -> Result<usize> {
        let levels = self.n_max + 1;
        let mut d: usize = 1;
        for _ in 0..self.oscillator_count() {
            d = d
                .checked_mul(levels)
                .filter(|&d| d.saturating_mul(SYSTEM_DIM) <= self.max_dim)
                .ok_or(SkeError::Capacity {
                    dim: usize::MAX,
                    cap: self.max_dim,
                })?;
        }
        Ok(d)
    }

    /// Composite dimension `4 (n_max+1)^K`.
    pub fn dim(&self) -> Result<usize> {
        let levels = (self.n_max + 1) as f64;
        let full = SYSTEM_DIM as f64 * levels.powi(self.oscillator_count() as i32);
        let d = self.bath_dim().map_err(|_| SkeError::Capacity {
            dim: if full < usize::MAX as f64 {
                full as usize
            } else {
                usize::MAX
            },
            cap: self.max_dim,
        })?;
        Ok(SYSTEM_DIM * d)
    }
}

/// Label `ν = (j, n_1 … n_K)` of an unperturbed eigenstate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompositeIndex {
    /// System level 1..=4.
    pub j: usize,
    pub occupations: Vec<usize>,
}

impl CompositeIndex {
    pub fn new(j: usize, occupations: Vec<usize>) -> Self {
        Self { j, occupations }
    }

    pub fn bath_flat(&self, n_max: usize) -> usize {
        self.occupations
            .iter()
            .fold(0, |acc, &n| acc * (n_max + 1) + n)
    }

    pub fn flat(&self, n_max: usize) -> usize {
        let bath = (n_max + 1).pow(self.occupations.len() as u32);
        (self.j - 1) * bath + self.bath_flat(n_max)
    }

    pub fn from_flat(idx: usize, n_max: usize, oscillators: usize) -> Self {
        let levels = n_max + 1;
        let bath = levels.pow(oscillators as u32);
        let j = idx / bath + 1;
        let mut rest = idx % bath;
        let mut occ = vec![0; oscillators];
        for slot in occ.iter_mut().rev() {
            *slot = rest % levels;
            rest /= levels;
        }
        Self {
            j,
            occupations: occ,
        }
    }
}

impl fmt::Display for CompositeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.j)?;
        for n in &self.occupations {
            write!(f, ",{n}")?;
        }
        write!(f, ")")
    }
}

/// Spin-½ building blocks on the two-qubit space.
pub mod spin {
    use super::*;

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum Axis {
        X,
        Y,
        Z,
    }

    pub const AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn pauli(axis: Axis) -> OperatorMatrix {
        let m = match axis {
            Axis::X => [[ZERO, ONE], [ONE, ZERO]],
            Axis::Y => [[ZERO, -I], [I, ZERO]],
            Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
        };
        OperatorMatrix::from_fn(2, |r, k| m[r][k])
    }

    /// Pauli operator on qubit 1 or 2 of the two-qubit space.
    pub fn sigma(axis: Axis, qubit: usize) -> OperatorMatrix {
        let id = OperatorMatrix::identity(2);
        match qubit {
            1 => pauli(axis).kron(&id),
            2 => id.kron(&pauli(axis)),
            _ => panic!("qubit index must be 1 or 2"),
        }
    }

    /// `S_1 · S_2`
    pub fn s_dot_s() -> OperatorMatrix {
        let mut acc = OperatorMatrix::zeros(SYSTEM_DIM);
        for a in AXES {
            acc = acc + &sigma(a, 1) * &sigma(a, 2);
        }
        &acc * 0.25
    }

    /// Triplet/singlet basis `φ_1 … φ_4` in the computational basis.
    pub fn phi(j: usize) -> Vector {
        let h = FRAC_1_SQRT_2;
        let amps = match j {
            1 => [0.0, 0.0, 0.0, 1.0],
            2 => [1.0, 0.0, 0.0, 0.0],
            3 => [0.0, h, h, 0.0],
            4 => [0.0, h, -h, 0.0],
            _ => panic!("system level must be 1..=4"),
        };
        Vector::from_iterator(SYSTEM_DIM, amps.iter().map(|&a| c(a, 0.0)))
    }

    /// Columns `φ_1 … φ_4`.
    pub fn phi_matrix() -> Matrix {
        Matrix::from_fn(SYSTEM_DIM, SYSTEM_DIM, |r, k| phi(k + 1)[r])
    }

    /// Eigenvalue of `S_1 · S_2` on `φ_j`.
    pub fn level_energy(j: usize) -> f64 {
        if j == 4 {
            -0.75
        } else {
            0.25
        }
    }

    /// `⟨φ_j|σ_z¹ + σ_z²|φ_j⟩`
    pub fn dephasing_charge(j: usize) -> f64 {
        let sz = &sigma(Axis::Z, 1) + &sigma(Axis::Z, 2);
        sz.element(&phi(j), &phi(j)).re
    }
}

/// Truncated lowering operator on a single mode.
pub fn lowering(levels: usize) -> OperatorMatrix {
    OperatorMatrix::from_fn(levels, |r, k| {
        if k == r + 1 {
            c((k as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    })
}

/// Lowering operator of oscillator `m` on the bath space.
pub fn bath_lowering(m: usize, oscillators: usize, levels: usize) -> OperatorMatrix {
    let id = OperatorMatrix::identity(levels);
    let a = lowering(levels);
    let mut acc = OperatorMatrix::identity(1);
    for slot in 0..oscillators {
        acc = acc.kron(if slot == m { &a } else { &id });
    }
    acc
}

#[derive(Debug, Clone)]
pub struct Hamiltonians {
    pub h_s: OperatorMatrix,
    pub h_b: OperatorMatrix,
    /// Interaction without the λ prefactor.
    pub h_int: OperatorMatrix,
    /// `H_S + H_B + λ H_int`
    pub h: OperatorMatrix,
    pub lambda: f64,
    pub j: f64,
}

impl Hamiltonians {
    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// `λ H_int`
    pub fn interaction(&self) -> OperatorMatrix {
        &self.h_int * self.lambda
    }

    pub fn free(&self) -> OperatorMatrix {
        &self.h_s + &self.h_b
    }
}

/// Builds all Hamiltonian pieces for the first segment of the J profile.
pub fn build_hamiltonians(config: &ModelConfig) -> Result<Hamiltonians> {
    build_hamiltonians_with_j(config, config.j.initial())
}

pub fn build_hamiltonians_with_j(config: &ModelConfig, j: f64) -> Result<Hamiltonians> {
    config.validate()?;
    let levels = config.n_max + 1;
    let oscillators = config.oscillators();
    let n_osc = oscillators.len();
    let bath_dim = config.bath_dim()?;
    let id_s = OperatorMatrix::identity(SYSTEM_DIM);
    let id_b = OperatorMatrix::identity(bath_dim);

    let lowers: Vec<OperatorMatrix> = (0..n_osc)
        .map(|m| bath_lowering(m, n_osc, levels))
        .collect();

    let h_s = (&spin::s_dot_s() * j).kron(&id_b);

    let mut hb = OperatorMatrix::zeros(bath_dim);
    for (a, mode) in lowers.iter().zip(&oscillators) {
        hb = hb + &(&a.adjoint() * a) * mode.omega;
    }
    let h_b = id_s.kron(&hb);

    // field_m = g_m a_m† + g_m* a_m
    let field = |m: usize| -> OperatorMatrix {
        let g = oscillators[m].g;
        &lowers[m].adjoint().scale(g) + &lowers[m].scale(g.conj())
    };

    let h_int = match config.coupling {
        CouplingKind::Dephasing => {
            let sz = &spin::sigma(spin::Axis::Z, 1) + &spin::sigma(spin::Axis::Z, 2);
            let mut f = OperatorMatrix::zeros(bath_dim);
            for m in 0..n_osc {
                f = f + field(m);
            }
            sz.kron(&f)
        }
        CouplingKind::CaldeiraLeggett => {
            let k = config.modes.len();
            let mut acc = OperatorMatrix::zeros(SYSTEM_DIM * bath_dim);
            for (ch, (qubit, axis)) in [1usize, 2]
                .iter()
                .flat_map(|&q| spin::AXES.iter().map(move |&a| (q, a)))
                .enumerate()
            {
                let mut f = OperatorMatrix::zeros(bath_dim);
                for alpha in 0..k {
                    f = f + field(ch * k + alpha);
                }
                acc = acc + spin::sigma(axis, qubit).kron(&f);
            }
            acc
        }
    };

    let h = &(&h_s + &h_b) + &(&h_int * config.lambda);
    Ok(Hamiltonians {
        h_s,
        h_b,
        h_int,
        h,
        lambda: config.lambda,
        j,
    })
}

/// Unperturbed eigenbasis of `H_S + H_B`.
#[derive(Debug, Clone)]
pub struct UnperturbedBasis {
    pub labels: Vec<CompositeIndex>,
    /// Columns are `φ_ν` in the lab basis.
    pub vectors: Matrix,
    /// `E⁰_ν = (1/4 − δ_{j4} 3/4) J + Σ_k ω_k n_k`
    pub energies: Vec<f64>,
    pub n_max: usize,
    pub bath_dim: usize,
}

impl UnperturbedBasis {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vector(&self, nu: usize) -> Vector {
        self.vectors.column(nu).into_owned()
    }

    /// `P_ν = |φ_ν⟩⟨φ_ν|`
    pub fn projector(&self, nu: usize) -> OperatorMatrix {
        let v = self.vector(nu);
        OperatorMatrix::outer(&v, &v)
    }

    /// `Q_ν = I − P_ν`
    pub fn complement(&self, nu: usize) -> OperatorMatrix {
        &OperatorMatrix::identity(self.dim()) - &self.projector(nu)
    }

    pub fn index_of(&self, label: &CompositeIndex) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn spectral_decomposition(&self) -> crate::operator::SpectralDecomposition {
        crate::operator::SpectralDecomposition::new(
            (0..self.len())
                .map(|nu| (c(self.energies[nu], 0.0), self.projector(nu)))
                .collect(),
        )
    }

    /// Matrix of `A` in the φ basis: `V† A V`.
    pub fn to_phi_basis(&self, a: &OperatorMatrix) -> OperatorMatrix {
        a.conjugate_by(&self.vectors)
    }

    /// Inverse of [`to_phi_basis`](Self::to_phi_basis).
    pub fn from_phi_basis(&self, a: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::new(&self.vectors * a.matrix() * self.vectors.adjoint())
    }
}

pub fn unperturbed_basis(config: &ModelConfig) -> Result<UnperturbedBasis> {
    unperturbed_basis_with_j(config, config.j.initial())
}

pub fn unperturbed_basis_with_j(config: &ModelConfig, j: f64) -> Result<UnperturbedBasis> {
    config.validate()?;
    let oscillators = config.oscillators();
    let n_osc = oscillators.len();
    let bath_dim = config.bath_dim()?;
    let dim = SYSTEM_DIM * bath_dim;
    let phi = spin::phi_matrix();

    let labels: Vec<CompositeIndex> = (0..dim)
        .map(|idx| CompositeIndex::from_flat(idx, config.n_max, n_osc))
        .collect();
    let vectors = Matrix::from_fn(dim, dim, |row, col| {
        let (s, b) = (row / bath_dim, row % bath_dim);
        let (jj, bb) = (col / bath_dim, col % bath_dim);
        if b == bb {
            phi[(s, jj)]
        } else {
            ZERO
        }
    });
    let energies = labels
        .iter()
        .map(|l| {
            spin::level_energy(l.j) * j
                + l.occupations
                    .iter()
                    .zip(&oscillators)
                    .map(|(&n, m)| m.omega * n as f64)
                    .sum::<f64>()
        })
        .collect();
    Ok(UnperturbedBasis {
        labels,
        vectors,
        energies,
        n_max: config.n_max,
        bath_dim,
    })
}

/// Splits `H` into the part diagonal in `basis` and the off-diagonal rest.
pub fn split_by_basis(
    h: &OperatorMatrix,
    basis: &Matrix,
    tol: f64,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let n = h.dim();
    if basis.nrows() != n || basis.ncols() != n {
        return Err(SkeError::Validation(format!(
            "basis is {}x{}, operator is {n}x{n}",
            basis.nrows(),
            basis.ncols()
        )));
    }
    let gram = OperatorMatrix::new(basis.adjoint() * basis);
    let defect = (&gram - &OperatorMatrix::identity(n)).norm();
    if defect > tol {
        return Err(SkeError::Validation(format!(
            "basis is not orthonormal: ‖V†V − I‖ = {defect:e}"
        )));
    }
    let in_basis = h.conjugate_by(basis);
    let diag = OperatorMatrix::from_fn(n, |r, k| if r == k { in_basis[(r, k)] } else { ZERO });
    let h0 = OperatorMatrix::new(basis * diag.matrix() * basis.adjoint());
    let h1 = h - &h0;
    Ok((h0, h1))
}
