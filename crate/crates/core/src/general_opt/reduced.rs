//! The `(φ, ψ, ρ)` reduction: cosines of `y = Aᵀx` to `γ₀` and `μ₀`, and
//! its norm.

use nalgebra::{DVector, Matrix3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MarketModel, TransformedModel};

/// Tolerance for Gram feasibility and constraint residuals.
pub const FEASIBILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedPoint {
    /// `cos(γ₀, y)`.
    pub phi: f64,
    /// `cos(μ₀, y)`.
    pub psi: f64,
    /// `|y|`.
    pub rho: f64,
}

impl ReducedPoint {
    pub fn new(phi: f64, psi: f64, rho: f64) -> Self {
        Self { phi, psi, rho }
    }
}

/// `cos(γ₀, μ₀)`, or `0` if either vector vanishes.
pub fn cos_gamma_mu(tm: &TransformedModel) -> f64 {
    let d = (tm.a_s * tm.c_s).sqrt();
    if d > 0.0 {
        (tm.b_s / d).clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

/// The Gram matrix of the unit vectors `(γ̂₀, μ̂₀, ŷ)`.
pub fn gram_matrix(tm: &TransformedModel, p: &ReducedPoint) -> Matrix3<f64> {
    let r = cos_gamma_mu(tm);
    Matrix3::new(1.0, r, p.phi, r, 1.0, p.psi, p.phi, p.psi, 1.0)
}

pub fn is_gram_feasible(tm: &TransformedModel, p: &ReducedPoint) -> bool {
    if !(p.rho >= 0.0) || p.phi.abs() > 1.0 || p.psi.abs() > 1.0 {
        return false;
    }
    let min_eig = gram_matrix(tm, p).symmetric_eigenvalues().min();
    min_eig >= -FEASIBILITY_TOL
}

/// An orthonormal frame spanning `γ₀`, `μ₀` and (when room is left) one
/// deterministic complementary direction. Every unit vector in the frame is
/// a Gram-feasible direction, and every feasible `(φ, ψ)` is attained.
#[derive(Debug, Clone)]
pub struct ReducedFrame {
    basis: Vec<DVector<f64>>,
    /// Frame coordinates of `γ̂₀` (absent if `γ₀ = 0`).
    g_hat: Option<Vec<f64>>,
    /// Frame coordinates of `μ̂₀` (absent if `μ₀ = 0`).
    m_hat: Option<Vec<f64>>,
    /// Dimension of `span{γ₀, μ₀}`.
    rank: usize,
    pub g_norm: f64,
    pub m_norm: f64,
}

fn orthogonalize(v: &DVector<f64>, basis: &[DVector<f64>]) -> DVector<f64> {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&r);
            r.axpy(-c, b, 1.0);
        }
    }
    r
}

impl ReducedFrame {
    pub fn new(tm: &TransformedModel) -> Self {
        let n = tm.n();
        let g_norm = tm.gamma0.norm();
        let m_norm = tm.mu0.norm();
        let mut basis: Vec<DVector<f64>> = Vec::new();
        for (v, norm) in [(&tm.gamma0, g_norm), (&tm.mu0, m_norm)] {
            if norm > 0.0 {
                let r = orthogonalize(v, &basis);
                let rn = r.norm();
                if rn > 1e-12 * norm {
                    basis.push(r / rn);
                }
            }
        }
        let rank = basis.len();
        if basis.len() < n {
            // The standard basis vector with the largest residual.
            let mut best: Option<(f64, DVector<f64>)> = None;
            for j in 0..n {
                let r = orthogonalize(&DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 }), &basis);
                let rn = r.norm();
                if best.as_ref().is_none_or(|(b, _)| rn > *b + 1e-12) {
                    best = Some((rn, r));
                }
            }
            let (rn, r) = best.expect("n > rank ≥ 0");
            basis.push(r / rn);
        }
        let coords = |v: &DVector<f64>, norm: f64| {
            (norm > 0.0).then(|| basis.iter().map(|b| b.dot(v) / norm).collect::<Vec<f64>>())
        };
        let g_hat = coords(&tm.gamma0, g_norm);
        let m_hat = coords(&tm.mu0, m_norm);
        Self { basis, g_hat, m_hat, rank, g_norm, m_norm }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `(φ, ψ, ρ)` of the y-vector with frame coordinates `v`. Cosines to a
    /// zero vector, or of `v = 0`, are reported as `0`.
    pub fn point_of(&self, v: &[f64]) -> ReducedPoint {
        let rho = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cos = |h: &Option<Vec<f64>>| match h {
            Some(h) if rho > 0.0 => (h.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / rho).clamp(-1.0, 1.0),
            _ => 0.0,
        };
        ReducedPoint { phi: cos(&self.g_hat), psi: cos(&self.m_hat), rho }
    }

    /// A unit frame vector `u` with `u·γ̂₀ = φ` and `u·μ̂₀ = ψ`: the
    /// minimum-norm solution on the span plus the complement direction.
    /// Constraints against a zero vector are dropped.
    pub fn direction(&self, phi: f64, psi: f64) -> Result<Vec<f64>> {
        let d = self.dim();
        let mut rows: Vec<(&Vec<f64>, f64)> = Vec::new();
        if let Some(g) = &self.g_hat {
            rows.push((g, phi));
        }
        if let Some(m) = &self.m_hat {
            rows.push((m, psi));
        }
        let mut u = vec![0.0; d];
        match rows.len() {
            0 => {}
            1 => {
                let (r, t) = rows[0];
                for i in 0..d {
                    u[i] = r[i] * t;
                }
            }
            _ => {
                // Pseudo-inverse of the 2×2 Gram matrix of the rows.
                let (r1, t1) = rows[0];
                let (r2, t2) = rows[1];
                let c: f64 = r1.iter().zip(r2).map(|(a, b)| a * b).sum();
                let det = 1.0 - c * c;
                let (a1, a2) = if det > 1e-12 {
                    ((t1 - c * t2) / det, (t2 - c * t1) / det)
                } else {
                    // Parallel rows: both targets must agree up to sign.
                    let t = 0.5 * (t1 + c.signum() * t2);
                    (t, 0.0)
                };
                for i in 0..d {
                    u[i] = a1 * r1[i] + a2 * r2[i];
                }
                let resid = |r: &Vec<f64>, t: f64| (r.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() - t).abs();
                if resid(r1, t1) > FEASIBILITY_TOL || resid(r2, t2) > FEASIBILITY_TOL {
                    return Err(Error::InfeasiblePoint(format!(
                        "phi = {phi} and psi = {psi} are inconsistent with parallel gamma0 and mu0"
                    )));
                }
            }
        }
        let sq: f64 = u.iter().map(|x| x * x).sum();
        let rest = 1.0 - sq;
        if rest < -FEASIBILITY_TOL {
            return Err(Error::InfeasiblePoint(format!(
                "phi = {phi}, psi = {psi}: span component has norm {} > 1",
                sq.sqrt()
            )));
        }
        if rest > FEASIBILITY_TOL {
            if d == self.rank {
                return Err(Error::InfeasiblePoint(format!(
                    "phi = {phi}, psi = {psi} need a direction outside span(gamma0, mu0), which is all of R^{d}"
                )));
            }
            u[self.rank] += rest.sqrt();
        } else if sq > 0.0 {
            let s = sq.sqrt();
            u.iter_mut().for_each(|x| *x /= s);
        } else {
            u[0] = 1.0;
        }
        Ok(u)
    }

    /// `y = Σ vᵢ eᵢ`.
    pub fn to_y(&self, v: &[f64]) -> DVector<f64> {
        let n = self.basis[0].len();
        let mut y = DVector::zeros(n);
        for (b, &c) in self.basis.iter().zip(v) {
            y.axpy(c, b, 1.0);
        }
        y
    }

    /// Frame coordinates of `(φ, ψ, ρ)`; the cosines are irrelevant at `ρ = 0`.
    pub fn coords_of(&self, p: &ReducedPoint) -> Result<Vec<f64>> {
        if !(p.rho >= 0.0) || !p.rho.is_finite() {
            return Err(Error::InfeasiblePoint(format!("rho must be finite and nonnegative, got {}", p.rho)));
        }
        if p.rho == 0.0 {
            return Ok(vec![0.0; self.dim()]);
        }
        Ok(self.direction(p.phi, p.psi)?.into_iter().map(|x| x * p.rho).collect())
    }
}

/// `ȳ` with `ȳ·γ₀ = φ|γ₀|ρ`, `ȳ·μ₀ = ψ|μ₀|ρ`, `|ȳ| = ρ`, mapped back to
/// weights by `x = A⁻ᵀȳ`.
pub fn reconstruct_portfolio(p: &ReducedPoint, tm: &TransformedModel, model: &MarketModel) -> Result<Vec<f64>> {
    let frame = ReducedFrame::new(tm);
    let y = frame.to_y(&frame.coords_of(p)?);
    Ok(model.from_y(&y)?.as_slice().to_vec())
}

/// `(φ, ψ, ρ)` of a weight vector, computed in x-space:
/// `ρ = √(xᵀΣx)`, `φ = xᵀγ/(|γ₀|ρ)`, `ψ = xᵀ(μ − 𝟏r_f)/(|μ₀|ρ)`.
pub fn project_portfolio(x: &[f64], tm: &TransformedModel, model: &MarketModel) -> Result<ReducedPoint> {
    if x.len() != model.n() {
        return Err(Error::Dimension(format!("portfolio has {} weights, model has n = {}", x.len(), model.n())));
    }
    let x = DVector::from_column_slice(x);
    let rho = x.dot(&(model.sigma() * &x)).max(0.0).sqrt();
    let cos = |num: f64, norm: f64| if rho > 0.0 && norm > 0.0 { (num / (norm * rho)).clamp(-1.0, 1.0) } else { 0.0 };
    Ok(ReducedPoint {
        phi: cos(x.dot(model.gamma()), tm.a_s.sqrt()),
        psi: cos(x.dot(&model.excess_mean()), tm.c_s.sqrt()),
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::MixingDistribution;
    use crate::model::transform;

    fn model4() -> MarketModel {
        let a = [
            1.0, 0.2, 0.0, 0.1, //
            -0.1, 0.8, 0.3, 0.0, //
            0.0, 0.1, 1.2, -0.2, //
            0.3, 0.0, 0.1, 0.9,
        ];
        MarketModel::new(0.01, &[0.08, 0.05, 0.1, 0.03], &[0.02, -0.03, 0.05, 0.01], &a).unwrap()
    }

    #[test]
    fn orthogonal_gamma_mu_forces_gamma_direction() {
        let tm = TransformedModel::from_coordinates(
            DVector::from_vec(vec![0.0, 2.0, 0.0]),
            DVector::from_vec(vec![3.0, 0.0, 0.0]),
            -1.0,
        )
        .unwrap();
        let f = ReducedFrame::new(&tm);
        let v = f.coords_of(&ReducedPoint::new(1.0, 0.0, 0.7)).unwrap();
        let y = f.to_y(&v);
        assert!((y - DVector::from_vec(vec![0.7, 0.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn reconstruction_satisfies_constraints() {
        let model = model4();
        let tm = transform(&model, &MixingDistribution::exponential(1.0).unwrap()).unwrap();
        let f = ReducedFrame::new(&tm);
        assert_eq!(f.dim(), 3);
        let r = cos_gamma_mu(&tm);
        for &(phi, psi, rho) in &[(0.3, -0.2, 1.5), (0.9, r * 0.9, 0.4), (-0.5, 0.5, 2.0), (r, 1.0, 0.1)] {
            let p = ReducedPoint::new(phi, psi, rho);
            assert!(is_gram_feasible(&tm, &p));
            let x = reconstruct_portfolio(&p, &tm, &model).unwrap();
            let y = model.to_y(&DVector::from_column_slice(&x));
            assert!((y.norm() - rho).abs() < 1e-10);
            assert!((y.dot(&tm.gamma0) - phi * tm.a_s.sqrt() * rho).abs() < 1e-10);
            assert!((y.dot(&tm.mu0) - psi * tm.c_s.sqrt() * rho).abs() < 1e-10);
            let back = project_portfolio(&x, &tm, &model).unwrap();
            assert!((back.phi - phi).abs() < 1e-9 && (back.psi - psi).abs() < 1e-9 && (back.rho - rho).abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_points_are_rejected() {
        let model = model4();
        let tm = transform(&model, &MixingDistribution::exponential(1.0).unwrap()).unwrap();
        let r = cos_gamma_mu(&tm);
        // φ = 1 forces ψ = cos(γ₀, μ₀).
        let p = ReducedPoint::new(1.0, r - 0.5, 1.0);
        assert!(!is_gram_feasible(&tm, &p));
        assert!(matches!(reconstruct_portfolio(&p, &tm, &model), Err(Error::InfeasiblePoint(_))));
    }

    #[test]
    fn two_assets_have_no_complement() {
        let model = MarketModel::new(0.0, &[0.1, 0.2], &[0.05, 0.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let tm = transform(&model, &MixingDistribution::constant(1.0).unwrap()).unwrap();
        let f = ReducedFrame::new(&tm);
        assert_eq!(f.dim(), 2);
        // In the plane φ and ψ determine each other up to the branch.
        assert!(f.direction(0.0, 0.0).is_err());
        let u = f.direction(1.0, cos_gamma_mu(&tm)).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-12);
        assert!(f.direction(1.0, 0.0).is_err());
    }

    #[test]
    fn zero_gamma_ignores_phi() {
        let tm = TransformedModel::from_coordinates(
            DVector::from_vec(vec![0.2, 0.1, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 0.0]),
            f64::NEG_INFINITY,
        )
        .unwrap();
        let f = ReducedFrame::new(&tm);
        let v = f.coords_of(&ReducedPoint::new(0.8, 1.0, 2.0)).unwrap();
        let p = f.point_of(&v);
        assert_eq!(p.phi, 0.0);
        assert!((p.psi - 1.0).abs() < 1e-15 && (p.rho - 2.0).abs() < 1e-15);
    }
}
