//! Similarity transform of the repeat-subspace bath block to upper-triangular
//! form.
//!
//! `M = [[ωn, g√(n+1)], [g√(n+1), ω(n+1)]]`, `T = [[a, b], [c, d]]` with
//! `c = 1`, `a = γ`, `b = −1`, `d = −ζ`. The lower-left entry of `T⁻¹MT` is
//! `((a² − c²) g√(n+1) + acω) / det T`, and `γ` is its root. Since
//! `det T = −γωn / (g√(n+1))`, the second column is parallel to the first at
//! `n = 0`; there the orthogonal completion `(b, d) = (−1, γ)` is used and
//! `fallback_column` is set.

use nalgebra::Matrix2;

use crate::error::{Result, SkeError};
use crate::operator::C64;
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangularBlock {
    pub omega: f64,
    pub g: f64,
    pub n: usize,
    pub branch: Branch,
    pub gamma: f64,
    pub zeta: f64,
    pub t: Matrix2<f64>,
    pub t_inv: Matrix2<f64>,
    pub m: Matrix2<f64>,
    pub m_tri: Matrix2<f64>,
    pub fallback_column: bool,
    /// `((a² − c²) g√(n+1) + acω) / det T`
    pub lower_left_closed_form: f64,
}

impl TriangularBlock {
    pub fn det(&self) -> f64 {
        self.t.determinant()
    }

    /// `|M_tri[1,0]| / ‖M‖`
    pub fn relative_lower_left(&self) -> f64 {
        self.m_tri[(1, 0)].abs() / self.m.norm()
    }

    /// Eigenvalues of `M`, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        symmetric_eigenvalues(&self.m)
    }

    /// Diagonal of `M_tri`, ascending.
    pub fn diagonal(&self) -> [f64; 2] {
        let (a, b) = (self.m_tri[(0, 0)], self.m_tri[(1, 1)]);
        if a <= b {
            [a, b]
        } else {
            [b, a]
        }
    }
}

/// `[[ωn, g√(n+1)], [g√(n+1), ω(n+1)]]`
pub fn block_matrix(omega: f64, g: f64, n: usize) -> Matrix2<f64> {
    let s = g * ((n + 1) as f64).sqrt();
    Matrix2::new(omega * n as f64, s, s, omega * (n + 1) as f64)
}

fn symmetric_eigenvalues(m: &Matrix2<f64>) -> [f64; 2] {
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let r = half.hypot(m[(0, 1)]);
    [mean - r, mean + r]
}

/// `γ = −ω/(2g√(n+1)) ± sqrt((ω/2g)²/(n+1) + 1)`
pub fn gamma(omega: f64, g: f64, n: usize, branch: Branch) -> f64 {
    let s = ((n + 1) as f64).sqrt();
    let x = omega / (2.0 * g);
    -x / s + branch.sign() * (x * x / (n + 1) as f64 + 1.0).sqrt()
}

/// `ζ = (ω√(n+1) + γg) / g`
pub fn zeta(omega: f64, g: f64, n: usize, gamma: f64) -> f64 {
    (omega * ((n + 1) as f64).sqrt() + gamma * g) / g
}

pub fn triangulate_block(
    omega: f64,
    g: C64,
    n: usize,
    branch: Branch,
    tol: &Tolerances,
) -> Result<TriangularBlock> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(SkeError::SingularTransform(format!(
            "ω = {omega}: ζ − γ = ω√(n+1)/g vanishes and det T = 0"
        )));
    }
    if g.im != 0.0 {
        return Err(SkeError::Unsupported(format!(
            "triangulation needs a real coupling, got g = {} + {}i",
            g.re, g.im
        )));
    }
    let g = g.re;
    if g == 0.0 || !g.is_finite() {
        return Err(SkeError::SingularTransform(format!(
            "g = {g}: γ is undefined"
        )));
    }
    let gam = gamma(omega, g, n, branch);
    let zet = zeta(omega, g, n, gam);
    let (a, c) = (gam, 1.0);
    let fallback_column = n == 0;
    let (b, d) = if fallback_column {
        (-1.0, gam)
    } else {
        (-1.0, -zet)
    };
    let t = Matrix2::new(a, b, c, d);
    let det = a * d - b * c;
    if det.abs() < tol.triangular_det * t.norm_squared() {
        return Err(SkeError::SingularTransform(format!(
            "det T = {det:e} at ω = {omega}, g = {g}, n = {n}"
        )));
    }
    let t_inv = Matrix2::new(d, -b, -c, a) / det;
    let m = block_matrix(omega, g, n);
    let m_tri = t_inv * m * t;
    let s = ((n + 1) as f64).sqrt();
    let lower_left_closed_form = ((a * a - c * c) * g * s + a * c * omega) / det;
    Ok(TriangularBlock {
        omega,
        g,
        n,
        branch,
        gamma: gam,
        zeta: zet,
        t,
        t_inv,
        m,
        m_tri,
        fallback_column,
        lower_left_closed_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::c;

    fn tri(omega: f64, g: f64, n: usize, branch: Branch) -> Result<TriangularBlock> {
        triangulate_block(omega, c(g, 0.0), n, branch, &Tolerances::default())
    }

    #[test]
    fn reference_block() {
        let s3 = 3f64.sqrt();
        let plus = tri(2.0, s3, 0, Branch::Plus).unwrap();
        let minus = tri(2.0, s3, 0, Branch::Minus).unwrap();
        assert!((plus.gamma - 1.0 / s3).abs() < 1e-15);
        assert!((minus.gamma + s3).abs() < 1e-15);
        for b in [&plus, &minus] {
            let d = b.diagonal();
            assert!((d[0] + 1.0).abs() < 1e-12 && (d[1] - 3.0).abs() < 1e-12);
            assert!(b.fallback_column);
        }
    }

    #[test]
    fn printed_column_singular_at_vacuum() {
        let (omega, g) = (1.3, 0.7);
        let gam = gamma(omega, g, 0, Branch::Plus);
        let z = zeta(omega, g, 0, gam);
        assert!((1.0 - gam * z).abs() < 1e-14);
    }

    #[test]
    fn closed_form_lower_left_and_determinant() {
        for n in 1..6 {
            let b = tri(1.1, -0.4, n, Branch::Plus).unwrap();
            assert!(b.lower_left_closed_form.abs() < 1e-13);
            assert!(b.relative_lower_left() < 1e-12);
            let s = ((n + 1) as f64).sqrt();
            let det = -b.gamma * b.omega * n as f64 / (b.g * s);
            assert!((b.det() - det).abs() < 1e-12 * det.abs().max(1.0));
            assert!(!b.fallback_column);
        }
    }

    #[test]
    fn similarity_invariants() {
        let b = tri(0.8, 1.7, 3, Branch::Minus).unwrap();
        assert!((b.m.trace() - b.m_tri.trace()).abs() < 1e-10);
        assert!((b.m.determinant() - b.m_tri.determinant()).abs() < 1e-10);
    }

    #[test]
    fn rejected_inputs() {
        assert!(matches!(
            tri(0.0, 1.0, 2, Branch::Plus),
            Err(SkeError::SingularTransform(_))
        ));
        assert!(matches!(
            tri(-1.0, 1.0, 2, Branch::Plus),
            Err(SkeError::SingularTransform(_))
        ));
        assert!(matches!(
            tri(1.0, 0.0, 2, Branch::Plus),
            Err(SkeError::SingularTransform(_))
        ));
        let r = triangulate_block(1.0, c(1.0, 0.5), 1, Branch::Plus, &Tolerances::default());
        assert!(matches!(r, Err(SkeError::Unsupported(_))));
    }
}
