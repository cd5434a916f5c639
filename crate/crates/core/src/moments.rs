//! Real compactly supported boundary controls from finite moment problems.
//!
//! Residue cancellation prescribes the values of the control transform
//! B(ω) = ∫ e^{−iωt} b(t) dt at finitely many poles. With b real and the pole
//! set closed under ω ↦ −ω̄, one complex pole pair contributes two real
//! moment rows (its mirror is then satisfied automatically) and one purely
//! imaginary pole contributes a single real row:
//!
//!   ∫ e^{βt} cos(αt) b(t) dt =  Re B,
//!   ∫ e^{βt} sin(αt) b(t) dt = −Im B,      ω = α + iβ, α > 0,
//!   ∫ e^{βt} b(t) dt         =  B,         ω = iβ (B real).
//!
//! The ansatz is a finite sum over a smooth compactly supported basis on the
//! control window (2, 4): ρ_k(t) = exp(−1/(1 − (t−3)²))·T_{k−1}(t − 3) with
//! Chebyshev polynomials T. Four more basis functions than rows keeps the
//! system comfortably underdetermined; the minimum-norm coefficient vector
//! comes from the SVD pseudoinverse.

use crate::error::{Error, Result};
use crate::quad;
use crate::special::bump;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Control window: b vanishes outside (2, 4), with all derivatives.
pub const SUPPORT: (f64, f64) = (2.0, 4.0);

/// Extra basis functions beyond the number of moment rows.
const EXTRA_BASIS: usize = 4;

/// Absolute tolerance for the moment-matrix quadrature.
const ENTRY_TOL: f64 = 1e-12;

/// A pole with the prescribed value of the control transform there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleTarget {
    pub omega: Complex64,
    pub target: Complex64,
}

/// Basis function ρ_k(t), k = 1, 2, ... on the control window.
pub fn basis(k: usize, t: f64) -> f64 {
    let x = t - 0.5 * (SUPPORT.0 + SUPPORT.1);
    if x.abs() >= 1.0 {
        return 0.0;
    }
    bump(x) * chebyshev(k - 1, x)
}

fn chebyshev(n: usize, x: f64) -> f64 {
    let (mut t0, mut t1) = (1.0, x);
    match n {
        0 => t0,
        1 => t1,
        _ => {
            for _ in 2..=n {
                let t2 = 2.0 * x * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
            t1
        }
    }
}

/// A real boundary control supported in the window, b(t) = Σ l_k ρ_k(t).
#[derive(Debug, Clone)]
pub struct BoundaryControl {
    coeffs: Vec<f64>,
    /// Coefficient amplification Σ|l_k| / ‖moment targets‖₂.
    pub c_beta: f64,
    /// Residual ‖M l − targets‖₂ of the moment system.
    pub residual: f64,
}

impl BoundaryControl {
    /// The zero control (no poles to cancel).
    pub fn zero() -> BoundaryControl {
        BoundaryControl { coeffs: Vec::new(), c_beta: 0.0, residual: 0.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= SUPPORT.0 || t >= SUPPORT.1 {
            return 0.0;
        }
        self.coeffs.iter().enumerate().map(|(i, &c)| c * basis(i + 1, t)).sum()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Control transform B(ω) = ∫ e^{−iωt} b(t) dt by adaptive quadrature.
    pub fn transform(&self, omega: Complex64) -> Complex64 {
        if self.coeffs.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let i = Complex64::new(0.0, 1.0);
        quad::integrate(
            |t| (-i * omega * t).exp() * self.eval(t),
            SUPPORT.0,
            SUPPORT.1,
            ENTRY_TOL,
        )
    }

    /// Largest moment error over the given targets.
    pub fn worst_moment_error(&self, targets: &[PoleTarget]) -> f64 {
        targets
            .iter()
            .map(|pt| (self.transform(pt.omega) - pt.target).norm())
            .fold(0.0, f64::max)
    }
}

struct MomentRow {
    /// weight(t) multiplying b under the integral
    alpha: f64,
    beta: f64,
    /// true: e^{βt}cos(αt), false: e^{βt}sin(αt)
    cosine: bool,
    target: f64,
}

fn weight(row: &MomentRow, t: f64) -> f64 {
    let osc = if row.cosine { (row.alpha * t).cos() } else { (row.alpha * t).sin() };
    (row.beta * t).exp() * osc
}

/// Builds the real row system from canonical pole targets (Re ω ≥ 0 only;
/// mirror poles are implied by realness of b).
fn build_rows(targets: &[PoleTarget]) -> Result<Vec<MomentRow>> {
    let mut rows = Vec::new();
    for pt in targets {
        let (alpha, beta) = (pt.omega.re, pt.omega.im);
        if alpha < 0.0 {
            return Err(Error::InvalidInput {
                what: format!(
                    "pole targets must use the canonical half Re >= 0, got {}",
                    pt.omega
                ),
            });
        }
        if alpha == 0.0 {
            if pt.target.im.abs() > 1e-8 * (1.0 + pt.target.norm()) {
                return Err(Error::TargetMismatch {
                    detail: format!(
                        "imaginary pole {} needs a real target, got {}",
                        pt.omega, pt.target
                    ),
                });
            }
            rows.push(MomentRow { alpha: 0.0, beta, cosine: true, target: pt.target.re });
        } else {
            rows.push(MomentRow { alpha, beta, cosine: true, target: pt.target.re });
            rows.push(MomentRow { alpha, beta, cosine: false, target: -pt.target.im });
        }
    }
    Ok(rows)
}

/// Synthesizes the minimum-norm real control matching all pole targets.
///
/// Errors with [`Error::RankDeficient`] when the least-squares residual shows
/// the rows to be inconsistent (e.g. duplicated poles with different
/// targets), and with [`Error::TargetMismatch`] / [`Error::InvalidInput`] for
/// malformed target sets.
pub fn synthesize_control(targets: &[PoleTarget]) -> Result<BoundaryControl> {
    if targets.is_empty() {
        return Ok(BoundaryControl::zero());
    }
    let rows = build_rows(targets)?;
    let n_rows = rows.len();
    let n_basis = n_rows + EXTRA_BASIS;
    let mut m = DMatrix::<f64>::zeros(n_rows, n_basis);
    for (i, row) in rows.iter().enumerate() {
        for k in 1..=n_basis {
            m[(i, k - 1)] = quad::integrate(
                |t| weight(row, t) * basis(k, t),
                SUPPORT.0,
                SUPPORT.1,
                ENTRY_TOL,
            );
        }
    }
    let target_vec = DVector::from_iterator(n_rows, rows.iter().map(|r| r.target));
    let svd = m.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let coeffs = svd
        .solve(&target_vec, 1e-13 * max_sv.max(1.0))
        .map_err(|e| Error::NonConvergence { what: "moment solve", detail: e.to_string() })?;
    let residual = (&m * &coeffs - &target_vec).norm();
    let target_norm = target_vec.norm();
    if residual > 1e-10 * (1.0 + target_norm) {
        return Err(Error::RankDeficient { rows: n_rows, cols: n_basis, residual });
    }
    let c_beta = coeffs.iter().map(|c| c.abs()).sum::<f64>() / target_norm.max(1e-300);
    Ok(BoundaryControl {
        coeffs: coeffs.iter().cloned().collect(),
        c_beta,
        residual,
    })
}
