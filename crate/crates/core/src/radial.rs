//! Radial grid, field state and energy functionals.
//!
//! All solvers work on the reduced radial field ψ(t, r) = r·u(t, r) over a
//! uniform grid on [0, L]. The coordinate scaling between the original ball
//! of radius L/√2 (unit linear coefficient 1 on u, cubic focusing term) and
//! the normalized ball of radius L is captured by [`ScalingMap`]: time and
//! space stretch by √2, so decay rates convert by the inverse factor.

use crate::error::{Error, Result};
use crate::quad::trapezoid_uniform;

/// Uniform radial grid on [0, L] with at least 3 points.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    l: f64,
    n: usize,
}

impl RadialGrid {
    pub fn new(l: f64, n_points: usize) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidInput { what: format!("grid radius L = {l}") });
        }
        if n_points < 3 {
            return Err(Error::InvalidInput {
                what: format!("grid needs >= 3 points, got {n_points}"),
            });
        }
        Ok(RadialGrid { l, n: n_points })
    }

    pub fn radius(&self) -> f64 {
        self.l
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dr(&self) -> f64 {
        self.l / (self.n - 1) as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        self.l * i as f64 / (self.n - 1) as f64
    }

    /// Node positions as a vector.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.r(i)).collect()
    }
}

/// Snapshot of the field: ψ and ψ_t on the grid, ψ(0) = 0 enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    pub grid: RadialGrid,
    pub psi: Vec<f64>,
    pub psi_t: Vec<f64>,
}

impl RadialState {
    pub fn new(grid: RadialGrid, psi: Vec<f64>, psi_t: Vec<f64>) -> Result<Self> {
        if psi.len() != grid.len() || psi_t.len() != grid.len() {
            return Err(Error::InvalidInput {
                what: format!(
                    "state length {} / {} does not match grid ({})",
                    psi.len(),
                    psi_t.len(),
                    grid.len()
                ),
            });
        }
        if psi[0] != 0.0 {
            return Err(Error::InvalidInput {
                what: format!("psi(0) must vanish (u regular at the origin), got {}", psi[0]),
            });
        }
        Ok(RadialState { grid, psi, psi_t })
    }

    pub fn zero(grid: RadialGrid) -> Self {
        let n = grid.len();
        RadialState { grid, psi: vec![0.0; n], psi_t: vec![0.0; n] }
    }

    /// Build from u-space functions u(r), u_t(r).
    pub fn from_u(grid: RadialGrid, u: impl Fn(f64) -> f64, u_t: impl Fn(f64) -> f64) -> Self {
        let psi = (0..grid.len()).map(|i| grid.r(i) * u(grid.r(i))).collect();
        let psi_t = (0..grid.len()).map(|i| grid.r(i) * u_t(grid.r(i))).collect();
        RadialState { grid, psi, psi_t }
    }

    /// Boundary trace u(L) = ψ(L)/L.
    pub fn trace_u(&self) -> f64 {
        self.psi[self.grid.len() - 1] / self.grid.radius()
    }

    pub fn scaled_by(&self, factor: f64) -> Self {
        RadialState {
            grid: self.grid.clone(),
            psi: self.psi.iter().map(|v| v * factor).collect(),
            psi_t: self.psi_t.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Centered second-order derivative on the grid, one-sided at the ends.
pub fn derivative(values: &[f64], dr: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        return out;
    }
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dr);
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * dr);
    }
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dr);
    out
}

/// ψ/r with the removable singularity at the origin filled by ψ_r(0).
fn psi_over_r(psi: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let n = psi.len();
    let dr = grid.dr();
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * dr);
    for i in 1..n {
        out[i] = psi[i] / grid.r(i);
    }
    out
}

/// Equivalent first-order norm of the pair (u, u_t):
/// sqrt of ∫₀^L ( ψ² + (ψ/r)² + ψ_t² + ψ_r² ) dr, composite trapezoid.
pub fn h1_norm(state: &RadialState) -> f64 {
    h1_norm_parts(&state.grid, &state.psi, &state.psi_t)
}

/// Slice variant of [`h1_norm`] for callers holding raw field levels.
pub fn h1_norm_parts(grid: &RadialGrid, psi: &[f64], psi_t: &[f64]) -> f64 {
    let dr = grid.dr();
    let psi_r = derivative(psi, dr);
    let uor = psi_over_r(psi, grid);
    let integrand: Vec<f64> = (0..grid.len())
        .map(|i| {
            let p = psi[i];
            let pt = psi_t[i];
            p * p + uor[i] * uor[i] + pt * pt + psi_r[i] * psi_r[i]
        })
        .collect();
    trapezoid_uniform(&integrand, dr).max(0.0).sqrt()
}

/// Energy functionals of a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// Indefinite energy ½∫ |u_t|² + |∇u|² − c|u|² over the ball.
    pub e0: f64,
    /// Square of [`h1_norm`].
    pub h1_sq: f64,
    /// Positive-definite energy ½∫ |u_t|² + |∇u|² + |u|², plus any
    /// accumulated boundary dissipation supplied by the caller.
    pub e_tilde: f64,
    /// Boundary trace u(L).
    pub trace_u: f64,
}

/// Evaluate the energies of `state` with linear coefficient `potential_coeff`
/// (2 for the original linearization, 1 for the normalized one).
///
/// 3-D integrals reduce to 2π∫ f(r) dr in ψ variables; `dissipation_acc` is
/// the running value of (1/a)∫₀ᵗ∮|u_t|² added into `e_tilde`.
pub fn energy_e0(state: &RadialState, potential_coeff: f64, dissipation_acc: f64) -> EnergyReport {
    let grid = &state.grid;
    let dr = grid.dr();
    let psi_r = derivative(&state.psi, dr);
    let uor = psi_over_r(&state.psi, grid);
    let n = grid.len();
    let mut kin = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut mass = vec![0.0; n];
    for i in 0..n {
        kin[i] = state.psi_t[i] * state.psi_t[i];
        // r·∂_r u = ψ_r − ψ/r
        let g = psi_r[i] - uor[i];
        grad[i] = g * g;
        mass[i] = state.psi[i] * state.psi[i];
    }
    let tau = 2.0 * std::f64::consts::PI;
    let e0 = tau
        * (trapezoid_uniform(&kin, dr) + trapezoid_uniform(&grad, dr)
            - potential_coeff * trapezoid_uniform(&mass, dr));
    let e_pos = tau
        * (trapezoid_uniform(&kin, dr) + trapezoid_uniform(&grad, dr)
            + trapezoid_uniform(&mass, dr));
    let h1 = h1_norm(state);
    EnergyReport {
        e0,
        h1_sq: h1 * h1,
        e_tilde: e_pos + dissipation_acc,
        trace_u: state.trace_u(),
    }
}

/// Direction of a coordinate conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingDirection {
    /// Original ball B_{L/√2} quantities into normalized ones.
    OriginalToScaled,
    /// Normalized ball B_L quantities back into original ones.
    ScaledToOriginal,
}

/// √2 change of variables between the original and normalized problems.
///
/// ū(t, x) = u(t/√2, x/√2): times and lengths in normalized coordinates are
/// √2 times the original ones, exponential rates are 1/√2 of the original.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingMap {
    pub direction: ScalingDirection,
}

impl ScalingMap {
    pub const FACTOR_TIME: f64 = std::f64::consts::SQRT_2;
    pub const FACTOR_SPACE: f64 = std::f64::consts::SQRT_2;
    /// Multiplier taking a normalized decay rate to the original one.
    pub const FACTOR_RATE_TO_ORIGINAL: f64 = std::f64::consts::SQRT_2;

    pub fn new(direction: ScalingDirection) -> Self {
        ScalingMap { direction }
    }

    /// Convert an exponential rate across the change of variables.
    pub fn convert_rate(&self, rate: f64) -> f64 {
        match self.direction {
            ScalingDirection::ScaledToOriginal => rate * Self::FACTOR_RATE_TO_ORIGINAL,
            ScalingDirection::OriginalToScaled => rate / Self::FACTOR_RATE_TO_ORIGINAL,
        }
    }

    /// Convert a time span across the change of variables.
    pub fn convert_time(&self, t: f64) -> f64 {
        match self.direction {
            ScalingDirection::ScaledToOriginal => t / Self::FACTOR_TIME,
            ScalingDirection::OriginalToScaled => t * Self::FACTOR_TIME,
        }
    }

    /// Convert a length across the change of variables.
    pub fn convert_length(&self, x: f64) -> f64 {
        match self.direction {
            ScalingDirection::ScaledToOriginal => x / Self::FACTOR_SPACE,
            ScalingDirection::OriginalToScaled => x * Self::FACTOR_SPACE,
        }
    }
}
