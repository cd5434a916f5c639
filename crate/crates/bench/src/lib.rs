//! Shared fixtures for the pipeline benchmarks.

use num_complex::Complex64;

use kgstab_core::moments::PoleTarget;
use kgstab_core::RadialGrid;

/// Standard benchmark geometry.
pub const L: f64 = 1.0;
pub const A: f64 = 0.5;

pub fn grid(n: usize) -> RadialGrid {
    RadialGrid::new(L, n).expect("benchmark grid")
}

/// A smooth complex source with a handful of radial harmonics.
pub fn source(grid: &RadialGrid) -> Vec<Complex64> {
    let l = grid.radius();
    (0..grid.len())
        .map(|i| {
            let r = grid.r(i);
            let mut v = Complex64::new(0.0, 0.0);
            for m in 1..=6 {
                let phase = m as f64 * 0.7;
                v += Complex64::new(phase.cos(), phase.sin())
                    * (m as f64 * std::f64::consts::PI * r / l).sin()
                    / m as f64;
            }
            v
        })
        .collect()
}

/// Moment targets on the canonical half Re >= 0: the unstable point on the
/// axis plus the first oscillatory pole (its mirror is implied).
pub fn targets() -> Vec<PoleTarget> {
    vec![
        PoleTarget {
            omega: Complex64::new(0.0, -0.173191654357037),
            target: Complex64::new(1.7e-3, 0.0),
        },
        PoleTarget {
            omega: Complex64::new(3.098784914318, 0.564466473124),
            target: Complex64::new(2.4e-3, -1.1e-3),
        },
    ]
}
