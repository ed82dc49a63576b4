//! Swap and XOR gates, and the coupling-time correction that cancels the
//! interaction-induced phase shift.

use std::f64::consts::PI;

use crate::error::{Result, SkeError};
use crate::model::{spin, CompositeIndex, JProfile, ModelConfig, SYSTEM_DIM};
use crate::operator::{c, cis, Matrix, OperatorMatrix, C64, ZERO};
use crate::subdyn::SubdynSet;
use crate::tolerances::Tolerances;

/// Eigenvalue `e_j` of `S₁·S₂` on `φ_j`.
fn level(j: usize) -> f64 {
    spin::level_energy(j)
}

/// Phases `e^{−i e_j ∫J}` on `φ_1 … φ_4`.
pub fn swap_phases(integral: f64) -> [C64; 4] {
    [1, 2, 3, 4].map(|j| cis(-level(j) * integral))
}

/// Operator with the given phases on `φ_1 … φ_4`, computational basis.
pub fn from_phi_phases(phases: &[C64; 4]) -> OperatorMatrix {
    let phi = spin::phi_matrix();
    let d = Matrix::from_fn(SYSTEM_DIM, SYSTEM_DIM, |r, k| {
        if r == k {
            phases[r]
        } else {
            ZERO
        }
    });
    OperatorMatrix::new(&phi * d * phi.adjoint())
}

/// `U_sw = e^{−i ∫₀^{τ_s} H_S}` on the system factor.
pub fn ideal_swap(profile: &JProfile, branch: usize) -> Result<OperatorMatrix> {
    let tau = profile.swap_duration(branch)?;
    Ok(from_phi_phases(&swap_phases(profile.integral(tau))))
}

/// `U_sw ⊗ e^{−i H_B τ_s}` on the composite space.
pub fn ideal_swap_composite(config: &ModelConfig, branch: usize) -> Result<OperatorMatrix> {
    let tau = config.j.swap_duration(branch)?;
    let u = ideal_swap(&config.j, branch)?;
    let basis = crate::model::unperturbed_basis(config)?;
    let b = basis.bath_dim;
    let bath: Vec<C64> = (0..b)
        .map(|k| {
            let e = basis.energies[k] - level(1) * config.j.initial();
            cis(-e * tau)
        })
        .collect();
    let bath_op = OperatorMatrix::from_fn(b, |r, k| if r == k { bath[r] } else { ZERO });
    Ok(u.kron(&bath_op))
}

/// Principal square root: each phase argument, taken in (−π, π], halved.
pub fn principal_sqrt_phases(phases: &[C64; 4]) -> [C64; 4] {
    phases.map(|z| cis(z.arg() / 2.0))
}

/// `U_sw^{1/2}` with the principal branch.
pub fn swap_sqrt(profile: &JProfile, branch: usize) -> Result<OperatorMatrix> {
    let tau = profile.swap_duration(branch)?;
    Ok(from_phi_phases(&principal_sqrt_phases(&swap_phases(
        profile.integral(tau),
    ))))
}

/// `e^{iθ S_z}` on the given qubit.
fn sz_rotation(theta: f64, qubit: usize) -> OperatorMatrix {
    let sz = spin::sigma(spin::Axis::Z, qubit);
    OperatorMatrix::from_fn(SYSTEM_DIM, |r, k| {
        if r == k {
            cis(theta * sz[(r, r)].re / 2.0)
        } else {
            ZERO
        }
    })
}

/// `e^{i(π/2)S₁ᶻ} e^{−i(π/2)S₂ᶻ} H e^{iπS₁ᶻ} H` for a given half-swap `H`.
pub fn xor_from_half(half: &OperatorMatrix) -> OperatorMatrix {
    let a = &sz_rotation(PI / 2.0, 1) * &sz_rotation(-PI / 2.0, 2);
    let mid = &(half * &sz_rotation(PI, 1)) * half;
    &a * &mid
}

/// XOR sequence built on the principal `U_sw^{1/2}`.
pub fn xor_gate(profile: &JProfile, branch: usize) -> Result<OperatorMatrix> {
    Ok(xor_from_half(&swap_sqrt(profile, branch)?))
}

/// Energy shift of one unperturbed level, with its bath energy.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelShift {
    pub label: CompositeIndex,
    pub bath_energy: f64,
    pub delta_e: f64,
}

impl LevelShift {
    /// Real shifts from computed subdynamics sets at exchange coupling `j`.
    pub fn from_sets(sets: &[SubdynSet], j: f64) -> Vec<LevelShift> {
        sets.iter()
            .map(|s| LevelShift {
                label: s.nu.clone(),
                bath_energy: s.e0 - level(s.nu.j) * j,
                delta_e: s.delta_e.re,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateReport {
    pub tau_s: f64,
    pub labels: Vec<CompositeIndex>,
    /// Per-ν `Δt`.
    pub delta_t: Vec<f64>,
    /// Present only when the per-ν values agree within tolerance.
    pub uniform_delta_t: Option<f64>,
    /// `max Δt − min Δt`
    pub deviation: f64,
    /// `∫₀^{τ_s+Δt} (e_j J + ΔE) dτ` per ν.
    pub integral_lhs: Vec<f64>,
    /// `e_j ∫₀^{τ_s} J dτ` per ν.
    pub integral_rhs: Vec<f64>,
    /// Max over ν of the corrected-vs-ideal phase distance.
    pub residual: f64,
    pub residuals: Vec<f64>,
    /// `E_B Δt` per ν: bath phase gained during the extra duration.
    pub bath_phase_mismatch: Vec<f64>,
    /// Ideal swap phases on `φ_1 … φ_4`.
    pub phases: Vec<C64>,
}

impl GateReport {
    pub fn require_uniform(&self) -> Result<f64> {
        self.uniform_delta_t.ok_or(SkeError::NonUniformShift {
            deviation: self.deviation,
        })
    }

    pub fn max_integral_error(&self) -> f64 {
        self.integral_lhs
            .iter()
            .zip(&self.integral_rhs)
            .map(|(l, r)| (l - r).abs())
            .fold(0.0, f64::max)
    }
}

fn constant_j(profile: &JProfile) -> Result<f64> {
    match profile {
        JProfile::Constant(j) => Ok(*j),
        p if p.is_constant() => Ok(p.initial()),
        _ => Err(SkeError::Unsupported(
            "coupling-time correction needs a constant J".into(),
        )),
    }
}

/// `Δt = −τ_s / (J_eff/ΔE + 1)` with `J_eff = e_j J`.
pub fn delta_t_single(tau_s: f64, j_eff: f64, delta_e: f64) -> Result<f64> {
    if delta_e == 0.0 {
        return Ok(0.0);
    }
    let denom = j_eff + delta_e;
    if denom == 0.0 {
        return Err(SkeError::UnreachableDuration);
    }
    Ok(-tau_s * delta_e / denom)
}

/// Per-ν timing correction and the integral-equation check.
pub fn delta_t_correction(
    profile: &JProfile,
    shifts: &[LevelShift],
    branch: usize,
    tol: &Tolerances,
) -> Result<GateReport> {
    let j = constant_j(profile)?;
    let tau_s = profile.swap_duration(branch)?;
    let rhs_integral = profile.integral(tau_s);
    let mut delta_t = Vec::with_capacity(shifts.len());
    let mut lhs = Vec::with_capacity(shifts.len());
    let mut rhs = Vec::with_capacity(shifts.len());
    for s in shifts {
        let e = level(s.label.j);
        let dt = delta_t_single(tau_s, e * j, s.delta_e)?;
        let t = tau_s + dt;
        lhs.push(e * profile.integral(t) + s.delta_e * t);
        rhs.push(e * rhs_integral);
        delta_t.push(dt);
    }
    let (lo, hi) = delta_t
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let deviation = if delta_t.is_empty() { 0.0 } else { hi - lo };
    let uniform = (deviation <= tol.uniform_shift)
        .then(|| delta_t.iter().sum::<f64>() / delta_t.len().max(1) as f64);
    Ok(GateReport {
        tau_s,
        labels: shifts.iter().map(|s| s.label.clone()).collect(),
        delta_t,
        uniform_delta_t: uniform,
        deviation,
        integral_lhs: lhs,
        integral_rhs: rhs,
        residual: 0.0,
        residuals: Vec::new(),
        bath_phase_mismatch: Vec::new(),
        phases: swap_phases(rhs_integral).to_vec(),
    })
}

/// Compares `e^{−i(E⁰+ΔE)(τ_s+Δt)}` with the ideal swap phase, the bath
/// phase being accrued over the same duration on both sides.
pub fn corrected_swap(
    profile: &JProfile,
    shifts: &[LevelShift],
    delta_t: f64,
    branch: usize,
    tol: &Tolerances,
) -> Result<GateReport> {
    let mut report = delta_t_correction(profile, shifts, branch, tol)?;
    let j = constant_j(profile)?;
    let tau_s = report.tau_s;
    let t = tau_s + delta_t;
    let ideal_integral = profile.integral(tau_s);
    report.residuals = shifts
        .iter()
        .map(|s| {
            let e = level(s.label.j);
            let corrected = cis(-(e * j + s.delta_e) * t);
            let ideal = cis(-e * ideal_integral);
            (corrected * ideal.conj()).arg().abs()
        })
        .collect();
    report.bath_phase_mismatch = shifts.iter().map(|s| s.bath_energy * delta_t).collect();
    report.residual = report.residuals.iter().cloned().fold(0.0, f64::max);
    Ok(report)
}

/// `U_{00} U_{11} / (U_{01} U_{10})` over the computational diagonal; `−1`
/// for a controlled-phase gate, `1` for a product of local phases.
pub fn conditional_phase(u: &OperatorMatrix) -> C64 {
    u[(0, 0)] * u[(3, 3)] / (u[(1, 1)] * u[(2, 2)])
}

/// `e^{−iθ S₁·S₂}` by matrix exponential.
pub fn swap_by_exponential(integral: f64) -> OperatorMatrix {
    let gen = spin::s_dot_s().scale(c(0.0, -integral));
    OperatorMatrix::new(gen.matrix().clone().exp())
}
