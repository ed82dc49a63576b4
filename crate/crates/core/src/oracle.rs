//! Brute-force ground truth by full dense diagonalisation.
//!
//! Eigenvalues are ascending. Inside an exactly degenerate cluster
//! (gap < `cluster_gap`) the solver's basis is arbitrary, so it is rotated by
//! polar (Löwdin) alignment onto the unperturbed states with the largest
//! weight in the cluster. Each eigenvector is then phase-fixed so that its
//! largest-magnitude component is real and positive.

use crate::error::{Result, SkeError};
use crate::model::UnperturbedBasis;
use crate::operator::{hermitian_eigen, max_abs, Matrix, OperatorMatrix, Vector, C64, ONE, ZERO};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns, aligned and phase-fixed.
    pub eigenvectors: Matrix,
    /// Groups of eigenvalue indices closer than the cluster gap.
    pub clusters: Vec<Vec<usize>>,
    /// Per label ν: matched eigenvector index.
    pub matching: Vec<usize>,
    /// Per label ν: `|⟨φ_ν|v_matched⟩|²`.
    pub overlaps: Vec<f64>,
    /// Labels whose match is below the overlap threshold or collides.
    pub ambiguous: Vec<usize>,
    labels: Vec<String>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn cluster_of(&self, idx: usize) -> &[usize] {
        self.clusters
            .iter()
            .find(|c| c.contains(&idx))
            .map(|c| c.as_slice())
            .unwrap_or(&[])
    }

    /// Eigenvector index matched to label ν.
    pub fn eigen_index(&self, nu: usize) -> Result<usize> {
        if self.ambiguous.contains(&nu) {
            return Err(SkeError::AmbiguousMatching {
                nu: self.labels[nu].clone(),
                cluster: self.cluster_of(self.matching[nu]).to_vec(),
            });
        }
        Ok(self.matching[nu])
    }

    /// `E_ν`
    pub fn eigenvalue(&self, nu: usize) -> Result<f64> {
        Ok(self.eigenvalues[self.eigen_index(nu)?])
    }

    pub fn eigenvector(&self, nu: usize) -> Result<Vector> {
        Ok(self.eigenvectors.column(self.eigen_index(nu)?).into_owned())
    }

    /// `‖H − V Λ V†‖_max`
    pub fn reconstruction_residual(&self, h: &OperatorMatrix) -> f64 {
        let lam = Matrix::from_fn(self.dim(), self.dim(), |r, k| {
            if r == k {
                C64::new(self.eigenvalues[r], 0.0)
            } else {
                ZERO
            }
        });
        let rec = &self.eigenvectors * lam * self.eigenvectors.adjoint();
        max_abs(&(h.matrix() - rec))
    }

    /// `e^{−iHt}`
    pub fn propagator(&self, t: f64) -> OperatorMatrix {
        let v = &self.eigenvectors;
        let n = self.dim();
        let phases = Matrix::from_fn(n, n, |r, k| {
            if r == k {
                C64::from_polar(1.0, -self.eigenvalues[r] * t)
            } else {
                ZERO
            }
        });
        OperatorMatrix::new(v * phases * v.adjoint())
    }
}

/// Full spectrum of `h` with labels matched against `basis`.
pub fn exact_eigensystem(
    h: &OperatorMatrix,
    basis: &UnperturbedBasis,
    tol: &Tolerances,
) -> Result<EigenSystem> {
    let n = h.dim();
    if basis.dim() != n {
        return Err(SkeError::Validation(format!(
            "basis dimension {} does not match operator dimension {n}",
            basis.dim()
        )));
    }
    let defect = max_abs(&(h.matrix() - h.matrix().adjoint()));
    if defect > tol.oracle_hermitian * h.max_abs().max(1.0) {
        return Err(SkeError::Validation(format!(
            "operator is not Hermitian: max |H − H†| = {defect:e}"
        )));
    }
    let (values, mut vectors) = hermitian_eigen(h.matrix());

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match clusters.last_mut() {
            Some(c) if values[i] - values[*c.last().unwrap()] < tol.cluster_gap => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }

    let phi = &basis.vectors;
    for cluster in clusters.iter().filter(|c| c.len() > 1) {
        align_cluster(&mut vectors, phi, cluster);
    }
    for k in 0..n {
        fix_phase(&mut vectors, k);
    }

    // overlaps[ν, k] = |⟨φ_ν|v_k⟩|²
    let amps = phi.adjoint() * &vectors;
    let mut matching = vec![0; n];
    let mut overlaps = vec![0.0; n];
    for nu in 0..n {
        let mut best = (0, -1.0);
        for k in 0..n {
            let w = amps[(nu, k)].norm_sqr();
            if w > best.1 {
                best = (k, w);
            }
        }
        matching[nu] = best.0;
        overlaps[nu] = best.1;
    }
    let mut claimed = vec![0usize; n];
    for &k in &matching {
        claimed[k] += 1;
    }
    let ambiguous = (0..n)
        .filter(|&nu| overlaps[nu] <= tol.matching_overlap || claimed[matching[nu]] > 1)
        .collect();

    Ok(EigenSystem {
        eigenvalues: values,
        eigenvectors: vectors,
        clusters,
        matching,
        overlaps,
        ambiguous,
        labels: basis.labels.iter().map(|l| l.to_string()).collect(),
    })
}

/// Rotates the cluster columns onto the unperturbed states of largest weight.
fn align_cluster(vectors: &mut Matrix, phi: &Matrix, cluster: &[usize]) {
    let m = cluster.len();
    let n = vectors.nrows();
    let sub = Matrix::from_fn(n, m, |r, k| vectors[(r, cluster[k])]);
    // coefficients of every φ_ν inside the cluster subspace
    let coeff = sub.adjoint() * phi;
    let mut weights: Vec<(usize, f64)> = (0..phi.ncols())
        .map(|nu| (nu, coeff.column(nu).norm_squared()))
        .collect();
    weights.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut chosen: Vec<usize> = weights.iter().take(m).map(|w| w.0).collect();
    chosen.sort_unstable();
    let target = Matrix::from_fn(m, m, |r, k| coeff[(r, chosen[k])]);
    let svd = target.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return;
    };
    let rotation = u * v_t;
    let aligned = sub * rotation;
    for (k, &col) in cluster.iter().enumerate() {
        vectors.set_column(col, &aligned.column(k));
    }
}

fn fix_phase(vectors: &mut Matrix, k: usize) {
    let mut best = (0, 0.0);
    for r in 0..vectors.nrows() {
        let a = vectors[(r, k)].norm();
        if a > best.1 * (1.0 + 1e-12) {
            best = (r, a);
        }
    }
    if best.1 == 0.0 {
        return;
    }
    let z = vectors[(best.0, k)];
    let phase = z.conj() / z.norm();
    let mut col = vectors.column_mut(k);
    col *= phase;
    vectors[(best.0, k)] = C64::new(vectors[(best.0, k)].norm(), 0.0);
}

/// Rank-1 spectral projector `|v_ν⟩⟨v_ν|` of the eigenvector matched to ν.
pub fn exact_projector(es: &EigenSystem, nu: usize) -> Result<OperatorMatrix> {
    let v = es.eigenvector(nu)?;
    Ok(OperatorMatrix::outer(&v, &v))
}

/// Exact creation/destruction operators read off the eigenvector, and the
/// projector assembled from them.
#[derive(Debug, Clone)]
pub struct ObliqueProjector {
    pub c: OperatorMatrix,
    pub d: OperatorMatrix,
    pub pi: OperatorMatrix,
}

/// `C = Q|v⟩⟨φ| / ⟨φ|v⟩`, `D = |φ⟩⟨v|Q / ⟨v|φ⟩`,
/// `Π = (P + C)(1 + ⟨φ|DC|φ⟩)⁻¹(P + D)`.
pub fn exact_oblique_projector(
    es: &EigenSystem,
    basis: &UnperturbedBasis,
    nu: usize,
) -> Result<ObliqueProjector> {
    let v = es.eigenvector(nu)?;
    let phi = basis.vector(nu);
    let a = phi.dotc(&v);
    let qv = &v - &phi * a;
    let c = OperatorMatrix::outer(&(&qv / a), &phi);
    let d = OperatorMatrix::outer(&phi, &(&qv / a));
    let p = basis.projector(nu);
    let norm = ONE + d.element(&phi, &c.apply(&phi));
    let pi = (&(&p + &c) * &(&p + &d)).scale(ONE / norm);
    Ok(ObliqueProjector { c, d, pi })
}

/// `e^{−iHt} ψ`
pub fn exact_propagate(es: &EigenSystem, psi: &Vector, t: f64) -> Vector {
    es.propagator(t).apply(psi)
}

/// `e^{−iHt} ρ e^{iHt}`
pub fn exact_propagate_density(es: &EigenSystem, rho: &OperatorMatrix, t: f64) -> OperatorMatrix {
    let u = es.propagator(t);
    &(&u * rho) * &u.adjoint()
}
