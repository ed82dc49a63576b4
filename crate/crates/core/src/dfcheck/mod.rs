//! Decoherence-free conditions in Hilbert and Liouville space.

pub mod liouville;
pub mod triangulate;

use crate::error::{Result, SkeError};
use crate::model::{spin, CompositeIndex, CouplingKind, ModelConfig};
use crate::operator::{c, C64, ZERO};
use crate::subdyn::{Order, SubdynSet, Subdynamics};

pub use liouville::{liouville_df, liouvillian, InitialSystemState, LiouvilleReport};
pub use triangulate::{triangulate_block, Branch, TriangularBlock};

/// `Σ_k (g_k g*_{k+1} (n_k+1) + g_{k−1} g*_k n_k)` with `g₀ = g_{K+1} = 0`.
pub fn bath_df_constraint(g: &[C64], n: &[usize]) -> Result<C64> {
    if g.len() != n.len() {
        return Err(SkeError::Validation(format!(
            "{} couplings but {} occupations",
            g.len(),
            n.len()
        )));
    }
    let at = |k: isize| -> C64 {
        if k < 0 || k as usize >= g.len() {
            ZERO
        } else {
            g[k as usize]
        }
    };
    Ok((0..g.len() as isize)
        .map(|k| {
            let nk = n[k as usize] as f64;
            at(k) * at(k + 1).conj() * (nk + 1.0) + at(k - 1) * at(k).conj() * nk
        })
        .sum())
}

/// Ratio form at one interior mode (1-based `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct RatioCheck {
    pub k: usize,
    /// `(n_k + 1) / n_k`
    pub occupation_ratio: f64,
    /// `−g_{k−1} g_k* / (g_k g*_{k+1})`
    pub coupling_ratio: C64,
    pub holds: bool,
}

/// Checks `(n_k+1)/n_k = −g_{k−1}g_k*/(g_k g*_{k+1})` at every interior k.
pub fn bv_ratio_check(g: &[C64], n: &[usize], tol: f64) -> Result<Vec<RatioCheck>> {
    if g.len() != n.len() {
        return Err(SkeError::Validation(
            "couplings and occupations differ in length".into(),
        ));
    }
    let mut out = Vec::new();
    for k in 1..g.len().saturating_sub(1) {
        if n[k] == 0 {
            return Err(SkeError::RatioUndefined { k: k + 1 });
        }
        let denom = g[k] * g[k + 1].conj();
        if denom == ZERO {
            return Err(SkeError::RatioUndefined { k: k + 1 });
        }
        let occupation_ratio = (n[k] as f64 + 1.0) / n[k] as f64;
        let coupling_ratio = -(g[k - 1] * g[k].conj()) / denom;
        let holds = (coupling_ratio - c(occupation_ratio, 0.0)).norm() <= tol;
        out.push(RatioCheck {
            k: k + 1,
            occupation_ratio,
            coupling_ratio,
            holds,
        });
    }
    Ok(out)
}

/// Real couplings with `g₁ = g₂ = 1` satisfying the ratio form at every
/// interior k. The full sum vanishes when `(n₁+1) A₁ + n_K A_{K−1} = 0`
/// for `A_k = g_k g_{k+1}`, e.g. `n = (0, 1, 2)`.
pub fn bv_couplings(n: &[usize]) -> Result<Vec<C64>> {
    let k = n.len();
    if k < 2 {
        return Err(SkeError::Validation(
            "at least two modes are required".into(),
        ));
    }
    let mut g = vec![c(1.0, 0.0), c(1.0, 0.0)];
    for idx in 1..k - 1 {
        if n[idx] == 0 {
            return Err(SkeError::RatioUndefined { k: idx + 1 });
        }
        // A_k = −A_{k−1} n_k / (n_k + 1)
        let a_prev = g[idx - 1] * g[idx];
        let a = -a_prev * (n[idx] as f64 / (n[idx] as f64 + 1.0));
        g.push(a / g[idx]);
    }
    Ok(g)
}

/// Constraint value at every bath configuration of the model.
pub fn constraint_by_configuration(config: &ModelConfig) -> Result<Vec<(Vec<usize>, C64)>> {
    config.validate()?;
    let g: Vec<C64> = config.modes.iter().map(|m| m.g).collect();
    let levels = config.n_max + 1;
    let count = levels.pow(g.len() as u32);
    (0..count)
        .map(|flat| {
            let occ = CompositeIndex::from_flat(flat, config.n_max, g.len()).occupations;
            bath_df_constraint(&g, &occ).map(|v| (occ, v))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct HilbertDfReport {
    pub labels: Vec<CompositeIndex>,
    /// `‖Σ_ν P_ν λH_int C_ν P_ν‖`
    pub residual: f64,
    pub per_nu: Vec<f64>,
    /// Same with the first-order `C^[1]`.
    pub second_order: f64,
    pub second_order_per_nu: Vec<f64>,
    /// `λ² s_j² Σ_k(…) / (−ω̄)` with the common denominator `−ω̄`, `ω̄` the
    /// mean mode frequency; dephasing only.
    pub common_denominator: Option<Vec<f64>>,
}

impl HilbertDfReport {
    pub fn residual_at(&self, label: &CompositeIndex) -> Option<(f64, f64)> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some((self.per_nu[i], self.second_order_per_nu[i]))
    }
}

/// Hilbert-space DF residual from the supplied sets and at second order.
pub fn df_residual(
    config: &ModelConfig,
    sd: &Subdynamics<'_>,
    sets: &[SubdynSet],
) -> Result<HilbertDfReport> {
    let h = sd.h_phi();
    let n = sd.dim();
    // ⟨φ_ν|λH_int C_ν|φ_ν⟩ = Σ_{μ≠ν} H'_νμ c_μ; C_ν ⊥ φ_ν
    let contract = |nu: usize, cv: &crate::operator::Vector| -> f64 {
        (0..n)
            .filter(|&mu| mu != nu)
            .map(|mu| h[(nu, mu)] * cv[mu])
            .sum::<C64>()
            .norm()
    };
    let per_nu: Vec<f64> = sets.iter().map(|s| contract(s.index, &s.c_phi)).collect();
    let second_order_per_nu = sets
        .iter()
        .map(|s| {
            Ok(contract(
                s.index,
                &sd.creation_coefficients(s.index, Order::Order1)?,
            ))
        })
        .collect::<Result<Vec<f64>>>()?;
    let common_denominator = (config.coupling == CouplingKind::Dephasing).then(|| {
        let g: Vec<C64> = config.modes.iter().map(|m| m.g).collect();
        let mean_omega =
            config.modes.iter().map(|m| m.omega).sum::<f64>() / config.modes.len() as f64;
        sets.iter()
            .map(|s| {
                let charge = spin::dephasing_charge(s.nu.j);
                let sum = bath_df_constraint(&g, &s.nu.occupations).unwrap_or(ZERO);
                (sum * (config.lambda * config.lambda * charge * charge / -mean_omega)).norm()
            })
            .collect()
    });
    let max = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    Ok(HilbertDfReport {
        labels: sets.iter().map(|s| s.nu.clone()).collect(),
        residual: max(&per_nu),
        second_order: max(&second_order_per_nu),
        per_nu,
        second_order_per_nu,
        common_denominator,
    })
}

/// Summary across the Hilbert, bath-constraint and Liouville checks.
#[derive(Debug, Clone, Default)]
pub struct DFReport {
    pub residual_hilbert: Option<f64>,
    pub residual_bath_constraint: Option<C64>,
    pub residual_liouville: Option<f64>,
    pub fidelity: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::model::{build_hamiltonians, unperturbed_basis};
    use crate::oracle::exact_eigensystem;
    use crate::tolerances::Tolerances;

    fn real(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| c(x, 0.0)).collect()
    }

    #[test]
    fn constraint_hand_values() {
        assert_eq!(bath_df_constraint(&real(&[2.0]), &[3]).unwrap(), ZERO);
        let v = bath_df_constraint(&real(&[1.0, 1.0, 1.0]), &[1, 1, 1]).unwrap();
        assert_eq!(v, c(6.0, 0.0));
        assert!(bath_df_constraint(&real(&[1.0]), &[1, 2]).is_err());
    }

    #[test]
    fn bv_couplings_cancel() {
        let n = [0, 1, 2];
        let g = bv_couplings(&n).unwrap();
        assert_eq!(g, real(&[1.0, 1.0, -0.5]));
        assert!(bath_df_constraint(&g, &n).unwrap().norm() <= 1e-12);
        let checks = bv_ratio_check(&g, &n, 1e-12).unwrap();
        assert!(checks.iter().all(|r| r.holds));
    }

    #[test]
    fn ratio_undefined_on_empty_mode() {
        let g = real(&[1.0, 1.0, 1.0]);
        assert_eq!(
            bv_ratio_check(&g, &[1, 0, 1], 1e-12),
            Err(SkeError::RatioUndefined { k: 2 })
        );
        assert!(bath_df_constraint(&g, &[1, 0, 1]).is_ok());
    }

    #[test]
    fn complex_couplings_use_conjugates() {
        let g = vec![c(0.0, 1.0), c(1.0, 0.0)];
        // g1 g2* (n1+1) + g1 g2* n2
        let v = bath_df_constraint(&g, &[0, 1]).unwrap();
        assert_eq!(v, c(0.0, 2.0));
    }

    #[test]
    fn hilbert_residual_zero_at_zero_coupling_and_positive_otherwise() {
        for (lambda, positive) in [(0.0, false), (0.05, true)] {
            let cfg = ModelConfig::dephasing(1.0, lambda, &[1.0, 1.3, 1.7], &[1.0; 3], 1);
            let hams = build_hamiltonians(&cfg).unwrap();
            let basis = unperturbed_basis(&cfg).unwrap();
            let es = exact_eigensystem(&hams.h, &basis, &Tolerances::default()).unwrap();
            let sd = Subdynamics::new(&hams, &basis, Some(&es), Tolerances::default()).unwrap();
            let sets = sd.build_sets(Order::Exact, Execution::default()).unwrap();
            let r = df_residual(&cfg, &sd, &sets).unwrap();
            assert_eq!(r.residual > 1e-6, positive);
            assert_eq!(r.second_order > 1e-6, positive);
            // uncoupled levels are DF at every order
            for (l, v) in r.labels.iter().zip(&r.per_nu) {
                if l.j >= 3 {
                    assert!(*v < 1e-14);
                }
            }
        }
    }

    #[test]
    fn configurations_enumerated() {
        let cfg = ModelConfig::dephasing(1.0, 0.1, &[1.0, 2.0], &[1.0, 1.0], 1);
        let all = constraint_by_configuration(&cfg).unwrap();
        assert_eq!(all.len(), 4);
        assert_eq!(all[0], (vec![0, 0], c(1.0, 0.0)));
    }
}
