//! Outgoing Green's kernel and elliptic resolvent solves.
//!
//! Frequency-domain problem on the reduced half line, for ω off the pole set:
//!
//!   ψ″ + (1 + ω²)ψ = F(r),  r ∈ (0, L),
//!   ψ(0) = 0,
//!   𝔅[ψ] := (iLω − a)ψ(L) + aLψ′(L) = L²·b̂ .
//!
//! The classical kernel is Γ(r, s) = φ₁(min)φ₂(max)/c_g with φ₁ = i·sin(⟨ω⟩r),
//! φ₂ = φ₁ + η·cos(⟨ω⟩r) and c_g = −i⟨ω⟩η. That normalization degenerates at
//! ⟨ω⟩ = 0, so internally everything is built from the entire pair
//!
//!   s̃(r) = sin(⟨ω⟩r)/⟨ω⟩,  c̃(r) = cos(⟨ω⟩r),  W(s̃, c̃) = −1,
//!
//! with the rescaled admixture η̃ = η/(i⟨ω⟩) = −𝒟(ω)/𝔅[c̃]; the kernel value
//! Γ = −s̃(min)(s̃ + η̃c̃)(max)/η̃ is identical to the classical one wherever
//! both are defined, and stays regular through ω = ±i.
//!
//! The solver applies the kernel in O(n) with prefix/suffix trapezoid sums.
//! Inhomogeneous boundary data is handled by the polynomial lift
//! p(r) = 3r³/L² − 2r⁴/L³, which satisfies 𝔅[p] = iL²ω exactly, so
//! ψ_lift = (b̂/(iω))·p carries the boundary value and leaves a homogeneous
//! problem with a modified right-hand side.

use crate::error::{Error, Result};
use crate::radial::RadialGrid;
use crate::spectral::{bracket_root, characteristic_entire};
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// sin(⟨ω⟩r)/⟨ω⟩ evaluated through the entire series in z = ω² + 1.
fn s_tilde(z: Complex64, r: f64) -> Complex64 {
    let w = z * (r * r);
    if w.norm() < 0.25 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for m in 1..24u32 {
            term *= -w / ((2 * m) as f64 * (2 * m + 1) as f64);
            sum += term;
            if term.norm() < 1e-19 {
                break;
            }
        }
        sum * r
    } else {
        let zeta = z.sqrt();
        (zeta * r).sin() / zeta
    }
}

/// cos(⟨ω⟩r), entire in z.
fn c_tilde(z: Complex64, r: f64) -> Complex64 {
    let w = z * (r * r);
    if w.norm() < 0.25 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for m in 1..24u32 {
            term *= -w / (((2 * m - 1) * 2 * m) as f64);
            sum += term;
            if term.norm() < 1e-19 {
                break;
            }
        }
        sum
    } else {
        (z.sqrt() * r).cos()
    }
}

/// Boundary lift polynomial p(r) = 3r³/L² − 2r⁴/L³ with 𝔅[p] = iL²ω.
fn lift(r: f64, l: f64) -> f64 {
    3.0 * r.powi(3) / (l * l) - 2.0 * r.powi(4) / (l * l * l)
}

fn lift_dd(r: f64, l: f64) -> f64 {
    18.0 * r / (l * l) - 24.0 * r * r / (l * l * l)
}

/// Dissipative boundary functional 𝔅[ψ] with a second-order one-sided
/// derivative at r = L.
pub fn boundary_functional(omega: Complex64, a: f64, grid: &RadialGrid, psi: &[Complex64]) -> Complex64 {
    let n = psi.len();
    assert!(n >= 3 && n == grid.len());
    let l = grid.radius();
    let dpsi = (3.0 * psi[n - 1] - 4.0 * psi[n - 2] + psi[n - 3]) / (2.0 * grid.dr());
    (I * l * omega - a) * psi[n - 1] + a * l * dpsi
}

/// Centered derivative of complex node values, one-sided at the ends.
pub fn derivative_c(values: &[Complex64], dr: f64) -> Vec<Complex64> {
    let n = values.len();
    assert!(n >= 3);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dr);
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * dr);
    }
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dr);
    out
}

/// Green's kernel of the reduced problem at a fixed frequency, sampled on a
/// radial grid.
#[derive(Debug, Clone)]
pub struct GreensKernel {
    pub omega: Complex64,
    pub a: f64,
    /// Classical boundary coefficient η (zero exactly at poles).
    pub eta: Complex64,
    /// Entire-normalized admixture η̃ = η/(i⟨ω⟩).
    pub eta_tilde: Complex64,
    /// Classical Wronskian normalizer c_g = −i⟨ω⟩η.
    pub c_g: Complex64,
    grid: RadialGrid,
    /// s̃(r_i)
    psi1: Vec<Complex64>,
    /// s̃(r_i) + η̃·c̃(r_i)
    psi2: Vec<Complex64>,
}

impl GreensKernel {
    /// Builds the kernel; errors with [`Error::AtPole`] when ω is within
    /// roundoff of a resolvent pole.
    pub fn build(omega: Complex64, a: f64, grid: &RadialGrid) -> Result<GreensKernel> {
        let l = grid.radius();
        let z = omega * omega + 1.0;
        let cal_d = characteristic_entire(omega, l, a);
        if cal_d.norm() <= 1e-12 * (1.0 + omega.norm()) * l.max(1.0) {
            return Err(Error::AtPole { omega });
        }
        // 𝔅[c̃] with c̃′(r) = −z·s̃(r)
        let base = I * l * omega - a;
        let bc = base * c_tilde(z, l) - a * l * z * s_tilde(z, l);
        let eta_tilde = -cal_d / bc;
        let zeta = bracket_root(omega);
        let eta = I * zeta * eta_tilde;
        let c_g = -I * zeta * eta;
        let psi1: Vec<Complex64> = (0..grid.len()).map(|i| s_tilde(z, grid.r(i))).collect();
        let psi2: Vec<Complex64> =
            psi1.iter().enumerate().map(|(i, &v)| v + eta_tilde * c_tilde(z, grid.r(i))).collect();
        Ok(GreensKernel { omega, a, eta, eta_tilde, c_g, grid: grid.clone(), psi1, psi2 })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// Kernel value Γ(r_i, r_j).
    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        let (lo, hi) = if i >= j { (j, i) } else { (i, j) };
        -self.psi1[lo] * self.psi2[hi] / self.eta_tilde
    }

    /// ∂_r Γ(r_i, r_j) for r_i ≠ r_j (the kernel derivative is discontinuous
    /// across the diagonal).
    pub fn value_dr(&self, i: usize, j: usize) -> Complex64 {
        let z = self.omega * self.omega + 1.0;
        let r = self.grid.r(i);
        // s̃′ = c̃, c̃′ = −z·s̃
        let s = self.psi1[i];
        let c = c_tilde(z, r);
        if i >= j {
            // derivative falls on ψ₂
            let dpsi2 = c + self.eta_tilde * (-z * s);
            -self.psi1[j] * dpsi2 / self.eta_tilde
        } else {
            -c * self.psi2[j] / self.eta_tilde
        }
    }

    /// Solves ψ″ + (1 + ω²)ψ = F, ψ(0) = 0, 𝔅[ψ] = L²·b̂ with prefix/suffix
    /// trapezoid application of the kernel, O(n).
    ///
    /// Nonzero `b_hat` requires |ω| bounded away from zero (the lift divides
    /// by iω).
    pub fn resolve(&self, f: &[Complex64], b_hat: Complex64) -> Result<Vec<Complex64>> {
        let n = self.grid.len();
        if f.len() != n {
            return Err(Error::InvalidInput {
                what: format!("source length {} does not match grid {}", f.len(), n),
            });
        }
        let l = self.grid.radius();
        let h = self.grid.dr();
        let z = self.omega * self.omega + 1.0;
        let use_lift = b_hat.norm() > 0.0;
        if use_lift && self.omega.norm() < 1e-10 {
            return Err(Error::InvalidInput {
                what: "boundary lift needs |omega| > 0".into(),
            });
        }
        let amp = if use_lift { b_hat / (I * self.omega) } else { Complex64::new(0.0, 0.0) };
        // modified source: F − amp·(p″ + (1+ω²)p)
        let ft: Vec<Complex64> = (0..n)
            .map(|i| {
                let r = self.grid.r(i);
                f[i] - amp * (lift_dd(r, l) + z * lift(r, l))
            })
            .collect();
        let mut prefix = vec![Complex64::new(0.0, 0.0); n];
        for i in 1..n {
            let g0 = self.psi1[i - 1] * ft[i - 1];
            let g1 = self.psi1[i] * ft[i];
            prefix[i] = prefix[i - 1] + 0.5 * h * (g0 + g1);
        }
        let mut suffix = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n - 1).rev() {
            let q0 = self.psi2[i] * ft[i];
            let q1 = self.psi2[i + 1] * ft[i + 1];
            suffix[i] = suffix[i + 1] + 0.5 * h * (q0 + q1);
        }
        Ok((0..n)
            .map(|i| {
                let homog = -(self.psi2[i] * prefix[i] + self.psi1[i] * suffix[i]) / self.eta_tilde;
                homog + amp * lift(self.grid.r(i), l)
            })
            .collect())
    }
}

/// One-call resolvent solve: build the kernel at ω and apply it.
pub fn resolve_elliptic(
    omega: Complex64,
    a: f64,
    grid: &RadialGrid,
    f: &[Complex64],
    b_hat: Complex64,
) -> Result<Vec<Complex64>> {
    GreensKernel::build(omega, a, grid)?.resolve(f, b_hat)
}

/// Independent second-order finite-difference solve of the same boundary
/// value problem (tridiagonal elimination). Serves as a cross-check for the
/// kernel path; valid at any ω where the discrete system is nonsingular.
pub fn solve_bvp_direct(
    omega: Complex64,
    a: f64,
    grid: &RadialGrid,
    f: &[Complex64],
    b_hat: Complex64,
) -> Result<Vec<Complex64>> {
    let n = grid.len();
    if f.len() != n {
        return Err(Error::InvalidInput {
            what: format!("source length {} does not match grid {}", f.len(), n),
        });
    }
    let l = grid.radius();
    let h = grid.dr();
    let z = omega * omega + 1.0;
    let m = n - 1; // unknowns psi_1..psi_m
    let zero = Complex64::new(0.0, 0.0);
    let diag_val = z * (h * h) - 2.0;
    // rows i = 1..m-1: psi_{i-1} + diag·psi_i + psi_{i+1} = h²F_i  (psi_0 = 0)
    let mut sub = vec![Complex64::new(1.0, 0.0); m];
    let mut diag = vec![diag_val; m];
    let mut sup = vec![Complex64::new(1.0, 0.0); m];
    let mut rhs: Vec<Complex64> = (1..=m).map(|i| f[i] * (h * h)).collect();
    sub[0] = zero;
    sup[m - 1] = zero;
    // boundary row couples psi_{N-2}, psi_{N-1}, psi_N; eliminate psi_{N-2}
    // with the last interior row psi_{N-2} = h²F_{N-1} − diag·psi_{N-1} − psi_N
    let base = I * l * omega - a;
    let c_n2 = a * l / (2.0 * h); // coefficient of psi_{N-2}
    let c_n1 = -4.0 * a * l / (2.0 * h);
    let c_n = base + 3.0 * a * l / (2.0 * h);
    let b_rhs = b_hat * (l * l) - c_n2 * f[n - 2] * (h * h);
    let b_n1 = c_n1 - c_n2 * diag_val;
    let b_n = c_n - c_n2;
    sub[m - 1] = b_n1;
    diag[m - 1] = b_n;
    rhs[m - 1] = b_rhs;
    // Thomas elimination
    let mut cp = vec![zero; m];
    let mut dp = vec![zero; m];
    let mut den = diag[0];
    if den.norm() < 1e-300 {
        return Err(Error::NonConvergence {
            what: "direct solve",
            detail: "singular pivot".into(),
        });
    }
    cp[0] = sup[0] / den;
    dp[0] = rhs[0] / den;
    for i in 1..m {
        den = diag[i] - sub[i] * cp[i - 1];
        if den.norm() < 1e-300 {
            return Err(Error::NonConvergence {
                what: "direct solve",
                detail: "singular pivot".into(),
            });
        }
        cp[i] = sup[i] / den;
        dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / den;
    }
    let mut psi = vec![zero; n];
    psi[m] = dp[m - 1];
    for i in (1..m).rev() {
        psi[i] = dp[i - 1] - cp[i - 1] * psi[i + 1];
    }
    Ok(psi)
}

/// Boundary pairing 𝔅[ψ_F] of the zero-initial-value integration of
/// ψ″ + (1 + ω²)ψ = F from the origin.
///
/// At a pole ω_j the boundary value problem with data (F, b̂) is solvable
/// exactly when 𝔅[ψ_F] = L²·b̂, so this functional supplies the moment
/// targets for residue cancellation. Fourth-order Runge–Kutta with cubic
/// midpoint interpolation of the sampled source.
pub fn boundary_pairing(
    omega: Complex64,
    a: f64,
    grid: &RadialGrid,
    f: &[Complex64],
) -> Result<Complex64> {
    let n = grid.len();
    if f.len() != n {
        return Err(Error::InvalidInput {
            what: format!("source length {} does not match grid {}", f.len(), n),
        });
    }
    let h = grid.dr();
    let z = omega * omega + 1.0;
    // midpoint values of F by 4-point (cubic) interpolation
    let mid = |i: usize| -> Complex64 {
        if i == 0 {
            // quadratic through the first three nodes
            (3.0 * f[0] + 6.0 * f[1] - f[2]) / 8.0
        } else if i >= n - 2 {
            (3.0 * f[n - 1] + 6.0 * f[n - 2] - f[n - 3]) / 8.0
        } else {
            (-f[i - 1] + 9.0 * f[i] + 9.0 * f[i + 1] - f[i + 2]) / 16.0
        }
    };
    let mut psi = Complex64::new(0.0, 0.0);
    let mut dpsi = Complex64::new(0.0, 0.0);
    let rhs = |p: Complex64, s: Complex64| -> (Complex64, Complex64) { (s, -z * p) };
    for i in 0..n - 1 {
        let fm = mid(i);
        let (k1p, k1s) = rhs(psi, dpsi);
        let k1s = k1s + f[i];
        let (k2p, k2s) = rhs(psi + 0.5 * h * k1p, dpsi + 0.5 * h * k1s);
        let k2s = k2s + fm;
        let (k3p, k3s) = rhs(psi + 0.5 * h * k2p, dpsi + 0.5 * h * k2s);
        let k3s = k3s + fm;
        let (k4p, k4s) = rhs(psi + h * k3p, dpsi + h * k3s);
        let k4s = k4s + f[i + 1];
        psi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        dpsi += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
    }
    let l = grid.radius();
    Ok((I * l * omega - a) * psi + a * l * dpsi)
}
