//! Special functions backing the oscillatory-kernel bounds and cutoffs.
//!
//! Sine and cosine integrals are evaluated through the tail integrals
//!
//!   sin_tail(x) = ∫ₓ^∞ sin t / t dt,   cos_tail(x) = ∫ₓ^∞ cos t / t dt,
//!
//! which is the numerically stable form for the kernel functions h, k, Q:
//! the subtraction π/2 − Si(x) suffers cancellation for large x, while the
//! continued fraction yields the tail directly. For x ≤ 2 a Taylor series
//! of Si and the entire part of Ci is used; for x > 2 the modified Lentz
//! continued fraction of E₁(ix) = cos_tail(x) − i·sin_tail(x).

use num_complex::Complex64;
use std::sync::OnceLock;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// E₁(z)·eᶻ continued fraction, modified Lentz recursion.
///
/// Valid away from the negative real axis; our only call sites use z = ix
/// with real x ≥ 2, where 40 terms reach machine precision.
fn e1_scaled_cf(z: Complex64) -> Complex64 {
    let tiny = Complex64::new(1e-280, 0.0);
    let mut b = z + 1.0;
    let mut c = Complex64::new(1e280, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for k in 1..300 {
        let a = -((k * k) as f64);
        b += 2.0;
        let mut den = a * d + b;
        if den.norm() < 1e-280 {
            den = tiny;
        }
        d = 1.0 / den;
        let mut cc = b + a / c;
        if cc.norm() < 1e-280 {
            cc = tiny;
        }
        c = cc;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h
}

/// (sin_tail, cos_tail) at x > 0.
fn tails(x: f64) -> (f64, f64) {
    assert!(x > 0.0, "tails need x > 0, got {x}");
    if x <= 2.0 {
        // Si series: sum (-1)^k x^(2k+1) / ((2k+1)(2k+1)!), terms via p_k = x^(2k+1)/(2k+1)!
        let x2 = x * x;
        let mut p = x;
        let mut si = x;
        let mut k = 1u32;
        loop {
            p *= x2 / ((2 * k) as f64 * (2 * k + 1) as f64);
            let c = p / (2 * k + 1) as f64;
            if k % 2 == 1 {
                si -= c;
            } else {
                si += c;
            }
            if c < 1e-18 {
                break;
            }
            k += 1;
        }
        // Entire part of Ci: Cin(x) = sum_{k>=1} (-1)^(k+1) x^(2k) / (2k (2k)!)
        let mut cin = 0.0;
        let mut fact_term = 1.0; // x^(2k)/(2k)! rolling
        let mut k = 1u32;
        loop {
            fact_term *= x2 / ((2 * k - 1) as f64 * (2 * k) as f64);
            let c = fact_term / (2 * k) as f64;
            if k % 2 == 1 {
                cin += c;
            } else {
                cin -= c;
            }
            if c < 1e-18 {
                break;
            }
            k += 1;
        }
        let ci = EULER_GAMMA + x.ln() - cin;
        (std::f64::consts::FRAC_PI_2 - si, -ci)
    } else {
        let z = Complex64::new(0.0, x);
        let e1 = e1_scaled_cf(z) * (-z).exp();
        (-e1.im, e1.re)
    }
}

/// Sine integral Si(x) = ∫₀ˣ sin t / t dt, odd in x.
pub fn si(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let s = std::f64::consts::FRAC_PI_2 - tails(x.abs()).0;
    if x < 0.0 {
        -s
    } else {
        s
    }
}

/// Cosine integral Ci(x) for x > 0.
pub fn ci(x: f64) -> f64 {
    -tails(x).1
}

/// ∫ₓ^∞ sin t / t dt for x > 0, cancellation-free.
pub fn sin_tail(x: f64) -> f64 {
    tails(x).0
}

/// ∫ₓ^∞ cos t / t dt for x > 0, cancellation-free.
pub fn cos_tail(x: f64) -> f64 {
    tails(x).1
}

/// ∫ₓ^∞ e^{it} / t dt = cos_tail(x) + i sin_tail(x), x > 0.
pub fn exp_tail(x: f64) -> Complex64 {
    let (s, c) = tails(x);
    Complex64::new(c, s)
}

/// Mother bump exp(−1/(1−x²)) on (−1, 1), zero outside; C^∞ on the line.
pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// Derivative of [`bump`].
pub fn bump_deriv(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        let d = 1.0 - x * x;
        bump(x) * (-2.0 * x / (d * d))
    }
}

fn ramp(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        (-1.0 / (x * (1.0 - x))).exp()
    }
}

fn ramp_deriv(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        let q = x * (1.0 - x);
        ramp(x) * (1.0 - 2.0 * x) / (q * q)
    }
}

fn ramp_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| crate::quad::integrate(ramp, 0.0, 1.0, 1e-15))
}

/// C^∞ smoothstep: 0 for x ≤ 0, 1 for x ≥ 1, strictly increasing between.
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        crate::quad::integrate(ramp, 0.0, x, 1e-14) / ramp_mass()
    }
}

/// First derivative of [`smoothstep`].
pub fn smoothstep_deriv(x: f64) -> f64 {
    ramp(x) / ramp_mass()
}

/// Second derivative of [`smoothstep`].
pub fn smoothstep_deriv2(x: f64) -> f64 {
    ramp_deriv(x) / ramp_mass()
}

/// Time cutoff used by the observer: 0 for t ≤ 1, 1 for t ≥ 2.
pub fn chi(t: f64) -> f64 {
    smoothstep(t - 1.0)
}

/// d/dt of [`chi`]; supported on (1, 2).
pub fn chi_t(t: f64) -> f64 {
    smoothstep_deriv(t - 1.0)
}

/// d²/dt² of [`chi`]; supported on (1, 2).
pub fn chi_tt(t: f64) -> f64 {
    smoothstep_deriv2(t - 1.0)
}
