//! Adaptive Gauss-Kronrod quadrature (7-15 pair).
//!
//! Bisection-adaptive with an absolute-error budget split across subintervals.
//! Used for moment-matrix entries, cutoff-function integrals and test oracles.

use num_complex::Complex64;

/// Kronrod-15 abscissae on [0, 1] side of the symmetric rule.
const XK: [f64; 8] = [
    0.0,
    0.207_784_955_007_898_5,
    0.405_845_151_377_397_2,
    0.586_087_235_467_691_1,
    0.741_531_185_599_394_4,
    0.864_864_423_359_769_1,
    0.949_107_912_342_758_5,
    0.991_455_371_120_812_6,
];

/// Kronrod-15 weights matching `XK`.
const WK: [f64; 8] = [
    0.209_482_141_084_727_8,
    0.204_432_940_075_298_9,
    0.190_350_578_064_785_4,
    0.169_004_726_639_267_9,
    0.140_653_259_715_525_9,
    0.104_790_010_322_250_3,
    0.063_092_092_629_978_55,
    0.022_935_322_010_529_22,
];

/// Gauss-7 weights for the even-index Kronrod abscissae (0, 2, 4, 6).
const WG: [f64; 4] = [
    0.417_959_183_673_469_4,
    0.381_830_050_505_118_9,
    0.279_705_391_489_276_7,
    0.129_484_966_168_869_7,
];

/// Values a quadrature can accumulate.
pub trait QuadValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn dist(self, other: Self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn dist(self, other: Self) -> f64 {
        (self - other).abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn dist(self, other: Self) -> f64 {
        (self - other).norm()
    }
}

fn gk15<T: QuadValue>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kron = fc.scale(WK[0]);
    let mut gauss = fc.scale(WG[0]);
    for j in 1..8 {
        let dx = half * XK[j];
        let pair = f(mid - dx).add(f(mid + dx));
        kron = kron.add(pair.scale(WK[j]));
        if j % 2 == 0 {
            gauss = gauss.add(pair.scale(WG[j / 2]));
        }
    }
    let kron = kron.scale(half);
    let gauss = gauss.scale(half);
    (kron, kron.dist(gauss))
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Returns the estimate and an error bound. Panics never; when the recursion
/// depth cap is hit the interval estimate is accepted as is.
pub fn adaptive<T: QuadValue>(f: impl Fn(f64) -> T, a: f64, b: f64, abs_tol: f64) -> (T, f64) {
    fn rec<T: QuadValue>(
        f: &impl Fn(f64) -> T,
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
    ) -> (T, f64) {
        let (val, err) = gk15(f, a, b);
        if err <= tol || depth >= 48 || (b - a).abs() < f64::EPSILON * (a.abs() + b.abs() + 1.0) {
            return (val, err);
        }
        let mid = 0.5 * (a + b);
        let (l, el) = rec(f, a, mid, 0.5 * tol, depth + 1);
        let (r, er) = rec(f, mid, b, 0.5 * tol, depth + 1);
        (l.add(r), el + er)
    }
    if a == b {
        return (T::zero(), 0.0);
    }
    rec(&f, a, b, abs_tol, 0)
}

/// Convenience wrapper returning only the value.
pub fn integrate<T: QuadValue>(f: impl Fn(f64) -> T, a: f64, b: f64, abs_tol: f64) -> T {
    adaptive(f, a, b, abs_tol).0
}

/// Composite trapezoid rule over uniformly sampled values with spacing `h`.
pub fn trapezoid_uniform(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (0.5 * (values[0] + values[values.len() - 1]) + inner)
}

/// Complex variant of [`trapezoid_uniform`].
pub fn trapezoid_uniform_c(values: &[Complex64], h: f64) -> Complex64 {
    if values.len() < 2 {
        return Complex64::new(0.0, 0.0);
    }
    let mut inner = Complex64::new(0.0, 0.0);
    for v in &values[1..values.len() - 1] {
        inner += v;
    }
    (0.5 * (values[0] + values[values.len() - 1]) + inner) * h
}
