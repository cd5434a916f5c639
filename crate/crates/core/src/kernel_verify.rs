//! Independent numerical verification of the analytic machinery behind the
//! boundary-control estimates.
//!
//! The stabilization argument leans on a handful of hard estimates: bounds
//! for the oscillatory tail kernels h, k, Q that appear when the resolvent
//! is inverted along a horizontal line, the L² bound for a truncated Hilbert
//! transform, lower-half-plane resolvent norm bounds, and the second-order
//! accuracy of the high-frequency expansions of the boundary multiplier η
//! and the kernel Γ. Each gets a direct numerical check here, against
//! independent oracles (adaptive quadrature, dense solves, exact closed
//! forms) rather than against the formulas used elsewhere in the crate.
//!
//! All checks are deterministic: pseudo- and quasirandom draws use fixed
//! seeds, so a verification report is reproducible bit for bit.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::greens::GreensKernel;
use crate::quad;
use crate::radial::RadialGrid;
use crate::special::{cos_tail, sin_tail};
use crate::spectral::{asymptotic_line, eta_expansion};

const I: Complex64 = Complex64::new(0.0, 1.0);

// ---------------------------------------------------------------------------
// deterministic draws

/// SplitMix64: tiny deterministic generator for reproducible check draws.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// Additive quasirandom sequence on the unit square (plastic-number steps);
/// spreads sample pairs more evenly than independent draws.
pub(crate) struct PairSequence {
    x: f64,
    y: f64,
}

impl PairSequence {
    pub(crate) fn new() -> Self {
        PairSequence { x: 0.5, y: 0.5 }
    }
}

impl Iterator for PairSequence {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        self.x = (self.x + 0.754_877_666_246_692_7) % 1.0;
        self.y = (self.y + 0.569_840_290_998_053_2) % 1.0;
        Some((self.x, self.y))
    }
}

// ---------------------------------------------------------------------------
// tail kernels

/// Tail integral h(p) = ∫_A^∞ e^{ips}/s ds for p ≠ 0.
///
/// The real part diverges logarithmically as p → 0; the value at p = 0 is
/// reported as +∞ real part rather than an error.
pub fn kernel_h(p: f64, a_cut: f64) -> Complex64 {
    if p == 0.0 {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    let x = a_cut * p.abs();
    Complex64::new(cos_tail(x), p.signum() * sin_tail(x))
}

/// h′(p) = −e^{ipA}/p for p ≠ 0 (Abel-regularized differentiation under the
/// integral; the boundary term at infinity averages to zero).
pub fn kernel_h_prime(p: f64, a_cut: f64) -> Complex64 {
    -(I * p * a_cut).exp() / p
}

/// Odd tail sine integral k(p) = ∫_A^∞ sin(ps)/s ds = Im h(p); k(0) = 0 and
/// k jumps by π across p = 0 (one-sided limits ±π/2).
pub fn kernel_k(p: f64, a_cut: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p.signum() * sin_tail(a_cut * p.abs())
    }
}

/// k′(p) = −sin(pA)/p, continuous through p = 0 with value −A.
pub fn kernel_k_prime(p: f64, a_cut: f64) -> f64 {
    if p == 0.0 {
        -a_cut
    } else {
        -(p * a_cut).sin() / p
    }
}

/// K(p) = k(p) + π·[p < 0]: the branch of k made continuous through the
/// jump, with K(0) = π/2.
pub fn kernel_cap_k(p: f64, a_cut: f64) -> f64 {
    if p < 0.0 {
        kernel_k(p, a_cut) + PI
    } else if p == 0.0 {
        PI / 2.0
    } else {
        kernel_k(p, a_cut)
    }
}

/// Even combination Q(p) = 2cos(pA)/A − 2|p|·∫_{A|p|}^∞ sin t/t dt; bounded
/// uniformly in p with Q(0) = 2/A.
pub fn kernel_q(p: f64, a_cut: f64) -> f64 {
    if p == 0.0 {
        return 2.0 / a_cut;
    }
    2.0 * (p * a_cut).cos() / a_cut - 2.0 * p.abs() * sin_tail(a_cut * p.abs())
}

/// Q′(p) = −2k(p) exactly: the cosine derivative cancels the boundary term
/// of the differentiated tail.
pub fn kernel_q_prime(p: f64, a_cut: f64) -> f64 {
    -2.0 * kernel_k(p, a_cut)
}

/// Two-sided tail ∫_{|s| ≥ A} e^{ips}/s ds = 2i·k(p): the even real parts of
/// the two half-lines cancel and the odd imaginary parts add.
pub fn kernel_two_sided(p: f64, a_cut: f64) -> Complex64 {
    2.0 * I * kernel_k(p, a_cut)
}

/// Boundary-layer combination (i/r)·(e^{−βr}k(p+r) − e^{βr}k(p−r)).
///
/// For p away from the jump of k this stays bounded uniformly as r → 0,
/// with limit 2i·(k′(p) − βk(p)).
pub fn boundary_layer(p: f64, r: f64, beta: f64, a_cut: f64) -> Complex64 {
    I * ((-beta * r).exp() * kernel_k(p + r, a_cut) - (beta * r).exp() * kernel_k(p - r, a_cut))
        / r
}

// ---------------------------------------------------------------------------
// kernel probe

/// Kernel values sampled on a signed log grid |p| ∈ [1e−6, 10], together
/// with the fitted sup constant.
///
/// `c0` is the smallest constant for which |k| ≤ c0, |k′| ≤ c0 and
/// |h(p)| ≤ max(c0, |log|p||) all hold over the grid. Test suites freeze an
/// upper bound for c0 per cutoff; the probe itself just measures.
pub struct KernelProbe {
    pub a_cut: f64,
    pub p: Vec<f64>,
    pub h: Vec<Complex64>,
    pub k: Vec<f64>,
    pub q: Vec<f64>,
    pub c0: f64,
}

impl KernelProbe {
    /// Samples the kernels for cutoff `a_cut` ≥ 1 on 400 magnitudes per sign.
    pub fn new(a_cut: f64) -> Result<Self> {
        if !a_cut.is_finite() || a_cut < 1.0 {
            return Err(Error::InvalidInput {
                what: format!("kernel cutoff must be >= 1, got {a_cut}"),
            });
        }
        let m = 400;
        let mut p = Vec::with_capacity(2 * m);
        for i in 0..m {
            let mag = 1e-6 * 1e7f64.powf(i as f64 / (m - 1) as f64);
            p.push(-mag);
            p.push(mag);
        }
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let h: Vec<Complex64> = p.iter().map(|&v| kernel_h(v, a_cut)).collect();
        let k: Vec<f64> = p.iter().map(|&v| kernel_k(v, a_cut)).collect();
        let q: Vec<f64> = p.iter().map(|&v| kernel_q(v, a_cut)).collect();
        let mut c0 = 0.0f64;
        for (i, &v) in p.iter().enumerate() {
            c0 = c0.max(k[i].abs()).max(kernel_k_prime(v, a_cut).abs());
        }
        // the log envelope covers h outside its crossover region; c0 absorbs
        // the stretch where |h| exceeds |log|p||
        for (i, &v) in p.iter().enumerate() {
            if h[i].norm() > v.abs().ln().abs() {
                c0 = c0.max(h[i].norm());
            }
        }
        Ok(KernelProbe { a_cut, p, h, k, q, c0 })
    }

    /// Largest |Q| over the probe grid.
    pub fn q_sup(&self) -> f64 {
        self.q.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

// ---------------------------------------------------------------------------
// truncated Hilbert transform

/// Truncated Hilbert transform g(r) = PV ∫₀^L f(s)/(t + r − s) ds evaluated
/// on the uniform sample grid of f; exact for piecewise-linear f.
///
/// Each segment integrates in closed form, so the principal value needs no
/// singularity-splitting quadrature. Evaluation points that coincide with a
/// sample node are nudged by 1e−9 of the spacing to keep the paired segment
/// logarithms finite (the principal value itself is finite there).
pub fn hilbert_truncated(f: &[f64], l: f64, t: f64) -> Vec<f64> {
    assert!(f.len() >= 2, "need at least two samples of f");
    let n = f.len();
    let dr = l / (n - 1) as f64;
    let mut g = vec![0.0; n];
    for (i, gi) in g.iter_mut().enumerate() {
        let mut x = t + i as f64 * dr;
        let near = (x / dr).round();
        if (x - near * dr).abs() < 1e-9 * dr {
            x = near * dr + 1e-9 * dr;
        }
        let mut acc = 0.0;
        for j in 0..n - 1 {
            let s0 = j as f64 * dr;
            let s1 = s0 + dr;
            let m = (f[j + 1] - f[j]) / dr;
            // value of the segment's linear extension at s = x
            let c = f[j] + m * (x - s0);
            acc += c * ((x - s0).abs() / (x - s1).abs()).ln() - m * dr;
        }
        *gi = acc;
    }
    g
}

// ---------------------------------------------------------------------------
// expansion order fits

/// Result of a log-log residual fit along a horizontal frequency line.
pub struct ExpansionFit {
    /// Fitted decay exponent of the residual (positive; ≈ the claimed order).
    pub slope: f64,
    /// Sup over samples of residual × α^(claimed order).
    pub max_scaled_residual: f64,
    /// Number of frequency samples used.
    pub samples: usize,
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| u * v).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn log_spaced(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| lo * (hi / lo).powf(i as f64 / (m - 1) as f64))
        .collect()
}

fn fit_residual(alphas: &[f64], residuals: &[f64], order: i32) -> ExpansionFit {
    let xs: Vec<f64> = alphas.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|v| v.ln()).collect();
    let max_scaled = alphas
        .iter()
        .zip(residuals)
        .map(|(a, r)| a.powi(order) * r)
        .fold(0.0f64, f64::max);
    ExpansionFit {
        slope: -ls_slope(&xs, &ys),
        max_scaled_residual: max_scaled,
        samples: alphas.len(),
    }
}

fn validate_expansion_args(l: f64, a: f64, beta: f64, alpha_range: (f64, f64)) -> Result<()> {
    if !(l > 0.0) || !l.is_finite() || !(a > 0.0 && a < 1.0) || !beta.is_finite() {
        return Err(Error::InvalidInput {
            what: format!("expansion check needs L > 0, a in (0,1); got L={l}, a={a}"),
        });
    }
    if beta >= asymptotic_line(l, a) {
        return Err(Error::InvalidInput {
            what: format!(
                "expansion line Im = {beta} must sit below the pole asymptote {}",
                asymptotic_line(l, a)
            ),
        });
    }
    let (lo, hi) = alpha_range;
    if !(lo >= 10.0 * (1.0 - 1e-12) && hi <= 1e3 * (1.0 + 1e-12) && lo < hi) {
        return Err(Error::InvalidInput {
            what: format!("expansion fit range must lie within [10, 1e3], got [{lo}, {hi}]"),
        });
    }
    Ok(())
}

/// Fits the decay order of |η − η₀ − η₁/α| along the line Im ω = β over
/// `alpha_range` ⊆ [10, 10³]. The two-term expansion is second-order
/// accurate, so the fitted slope must sit near 2.
pub fn check_eta_order(l: f64, a: f64, beta: f64, alpha_range: (f64, f64)) -> Result<ExpansionFit> {
    validate_expansion_args(l, a, beta, alpha_range)?;
    let alphas = log_spaced(alpha_range.0, alpha_range.1, 200);
    let mut residuals = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let ex = eta_expansion(Complex64::new(alpha, beta), l, a)?;
        residuals.push((ex.eta - (ex.eta0 + ex.eta1 / alpha)).norm());
    }
    Ok(fit_residual(&alphas, &residuals, 2))
}

/// Same fit with the leading term η₀ alone; the residual drops to first
/// order and the fitted slope must sit near 1. `max_scaled_residual` scales
/// by α¹ accordingly.
pub fn check_eta_leading_order(
    l: f64,
    a: f64,
    beta: f64,
    alpha_range: (f64, f64),
) -> Result<ExpansionFit> {
    validate_expansion_args(l, a, beta, alpha_range)?;
    let alphas = log_spaced(alpha_range.0, alpha_range.1, 200);
    let mut residuals = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let ex = eta_expansion(Complex64::new(alpha, beta), l, a)?;
        residuals.push((ex.eta - ex.eta0).norm());
    }
    Ok(fit_residual(&alphas, &residuals, 1))
}

/// Explicit high-frequency approximation of the resolvent kernel,
/// 4Γ̃(r, s) = (i/(αη₀))·e⁻(min)·(e⁻(max) + η₀e⁺(max)) with
/// e^±(x) = e^{iωx} ± e^{−iωx}; symmetric across the diagonal and
/// conjugate-symmetric under ω ↦ −ω̄.
pub fn gamma_tilde(omega: Complex64, l: f64, a: f64, r: f64, s: f64) -> Result<Complex64> {
    if omega.re == 0.0 {
        return Err(Error::InvalidInput {
            what: "gamma approximation needs Re omega != 0".into(),
        });
    }
    let e = (2.0 * I * l * omega).exp();
    let c0 = (1.0 + a) / (1.0 - a);
    let eta0 = (1.0 - c0 * e) / (1.0 + c0 * e);
    let (lo, hi) = if s <= r { (s, r) } else { (r, s) };
    let em = |x: f64| (I * omega * x).exp() - (-I * omega * x).exp();
    let ep = |x: f64| (I * omega * x).exp() + (-I * omega * x).exp();
    Ok((I / (omega.re * eta0)) * em(lo) * (em(hi) + eta0 * ep(hi)) / 4.0)
}

/// Fits the decay order of the worst |4Γ − 4Γ̃| over the given (r, s) pairs
/// (snapped to an internal radial grid) along Im ω = β. Second order: the
/// fitted slope must sit near 2.
pub fn check_gamma_expansion(
    l: f64,
    a: f64,
    beta: f64,
    alpha_range: (f64, f64),
    pairs: &[(f64, f64)],
) -> Result<ExpansionFit> {
    validate_expansion_args(l, a, beta, alpha_range)?;
    if pairs.is_empty() {
        return Err(Error::InvalidInput {
            what: "gamma expansion fit needs at least one (r, s) pair".into(),
        });
    }
    let grid = RadialGrid::new(l, 1001)?;
    let dr = grid.dr();
    let mut snapped = Vec::with_capacity(pairs.len());
    for &(r, s) in pairs {
        if !(s > 0.0 && s <= r && r <= l) {
            return Err(Error::InvalidInput {
                what: format!("gamma pair needs 0 < s <= r <= L, got ({r}, {s})"),
            });
        }
        let ir = ((r / dr).round() as usize).clamp(1, grid.len() - 1);
        let is = ((s / dr).round() as usize).clamp(1, ir);
        snapped.push((ir, is));
    }
    let alphas = log_spaced(alpha_range.0, alpha_range.1, 200);
    let mut residuals = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let omega = Complex64::new(alpha, beta);
        let kernel = GreensKernel::build(omega, a, &grid)?;
        let mut worst = 0.0f64;
        for &(ir, is) in &snapped {
            let tilde = gamma_tilde(omega, l, a, ir as f64 * dr, is as f64 * dr)?;
            worst = worst.max(4.0 * (kernel.value(ir, is) - tilde).norm());
        }
        residuals.push(worst);
    }
    Ok(fit_residual(&alphas, &residuals, 2))
}

// ---------------------------------------------------------------------------
// check outcomes

/// One verification check: a measured statistic against its frozen bound.
pub struct CheckOutcome {
    pub name: &'static str,
    pub statistic: f64,
    pub bound: f64,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn bounded(name: &'static str, statistic: f64, bound: f64, detail: String) -> Self {
        CheckOutcome {
            name,
            statistic,
            bound,
            pass: statistic.is_finite() && statistic <= bound,
            detail,
        }
    }

    fn slope(name: &'static str, fit: &ExpansionFit, expected: f64, tol: f64) -> Self {
        CheckOutcome {
            name,
            statistic: fit.slope,
            bound: tol,
            pass: fit.slope.is_finite() && (fit.slope - expected).abs() <= tol,
            detail: format!(
                "slope {:.4} (expected {expected} ± {tol}), sup scaled residual {:.4} over {} samples",
                fit.slope, fit.max_scaled_residual, fit.samples
            ),
        }
    }
}

/// Frozen sup constant for the reference cutoff: fitted once on the probe
/// grid (the measured c0 for A = 1 is ≈ 1.94, dominated by the crossover of
/// |h| against the log envelope near p ≈ 0.15).
pub const FITTED_C0: f64 = 2.2;

/// Probe-grid bound checks for the tail kernels at cutoff `a_cut`.
pub fn check_kernel_bounds(a_cut: f64) -> Result<Vec<CheckOutcome>> {
    let probe = KernelProbe::new(a_cut)?;
    let c0_frozen = FITTED_C0.max(a_cut + 0.2);
    let k_sup = probe.k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let kp_sup = probe
        .p
        .iter()
        .map(|&v| kernel_k_prime(v, a_cut).abs())
        .fold(0.0f64, f64::max);
    let h_env = probe
        .p
        .iter()
        .zip(&probe.h)
        .map(|(&v, h)| h.norm() / c0_frozen.max(v.abs().ln().abs()))
        .fold(0.0f64, f64::max);
    let mut out = vec![
        CheckOutcome::bounded(
            "kernel-k-sup",
            k_sup,
            PI / 2.0 + 0.01,
            format!("sup |k| over the probe grid at A = {a_cut}"),
        ),
        CheckOutcome::bounded(
            "kernel-k-prime-sup",
            kp_sup,
            a_cut + 1e-9,
            format!("sup |k'| over the probe grid at A = {a_cut}"),
        ),
        CheckOutcome::bounded(
            "kernel-fitted-c0",
            probe.c0,
            c0_frozen,
            format!("fitted sup constant at A = {a_cut} against the frozen value"),
        ),
        CheckOutcome::bounded(
            "kernel-h-log-envelope",
            h_env,
            1.0,
            "sup |h| / max(C0, |log|p||) over the probe grid".into(),
        ),
        CheckOutcome::bounded(
            "kernel-q-sup",
            probe.q_sup(),
            6.0 / a_cut,
            format!("sup |Q| over the probe grid at A = {a_cut}"),
        ),
    ];
    // |Q'| = 2|k| exactly; checked against a central difference of Q
    let mut qp_err = 0.0f64;
    for &p in &[0.017, 0.3, 1.3, 4.7, -0.8, -2.9] {
        let h = 1e-5;
        let diff = (kernel_q(p + h, a_cut) - kernel_q(p - h, a_cut)) / (2.0 * h);
        qp_err = qp_err.max((diff - kernel_q_prime(p, a_cut)).abs());
    }
    out.push(CheckOutcome::bounded(
        "kernel-q-prime-identity",
        qp_err,
        1e-5,
        "central difference of Q against -2k".into(),
    ));
    Ok(out)
}

/// Tail of ∫_T^∞ e^{ips}/s ds by five asymptotic integration-by-parts terms;
/// remainder ≤ 24/(|p|T)⁵.
fn h_tail_asymptotic(p: f64, t_end: f64) -> Complex64 {
    let ip = I * p;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut coef = Complex64::new(1.0, 0.0); // k! / (ip)^k
    let mut tk = 1.0 / t_end;
    for k in 0..5 {
        sum += coef * tk;
        coef = coef * (k as f64 + 1.0) / ip;
        tk /= t_end;
    }
    -(ip * t_end).exp() / ip * sum
}

/// Independent oracle for h: adaptive quadrature out to |p|T = 2·10³ plus
/// the asymptotic tail.
fn h_quadrature_oracle(p: f64, a_cut: f64) -> Complex64 {
    let t_end = (2.0e3 / p.abs()).max(2.0 * a_cut);
    let osc = quad::integrate(
        |s| Complex64::new((p * s).cos(), (p * s).sin()) / s,
        a_cut,
        t_end,
        1e-12,
    );
    osc + h_tail_asymptotic(p, t_end)
}

/// Accuracy of the closed-form h against adaptive oscillatory quadrature on
/// truncated domains, over a log sweep of |p| with both signs.
pub fn check_kernel_quadrature(a_cut: f64) -> CheckOutcome {
    let ps = [
        1e-6, -1e-6, 1e-4, 1e-2, -1e-2, 0.1, 0.5, -0.5, 1.0, 2.0, -3.0, 5.0, 10.0,
    ];
    let mut worst = 0.0f64;
    for &p in &ps {
        let err = (kernel_h(p, a_cut) - h_quadrature_oracle(p, a_cut)).norm();
        worst = worst.max(err);
    }
    CheckOutcome::bounded(
        "kernel-h-quadrature",
        worst,
        1e-10,
        format!("max |h - quadrature oracle| over {} frequencies", ps.len()),
    )
}

/// L² norm-ratio bound for the truncated Hilbert transform over `draws`
/// random samples and shifts: ‖g‖ ≤ (π + 0.05)·‖f‖, the 0.05 covering
/// discretization of the norms.
pub fn check_hilbert_norm(l: f64, n: usize, draws: usize) -> CheckOutcome {
    let mut rng = SplitMix64(0x4845_4c4c_4f21);
    let dr = l / (n - 1) as f64;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let f: Vec<f64> = (0..n).map(|_| rng.range(-1.0, 1.0)).collect();
        let t = rng.range(-1.5 * l, 2.5 * l);
        let g = hilbert_truncated(&f, l, t);
        let nf = quad::trapezoid_uniform(&f.iter().map(|v| v * v).collect::<Vec<_>>(), dr).sqrt();
        let ng = quad::trapezoid_uniform(&g.iter().map(|v| v * v).collect::<Vec<_>>(), dr).sqrt();
        if nf > 0.0 {
            worst = worst.max(ng / nf);
        }
    }
    CheckOutcome::bounded(
        "hilbert-norm-ratio",
        worst,
        PI + 0.05,
        format!("worst ‖g‖/‖f‖ over {draws} random (f, t) draws at n = {n}"),
    )
}

/// Uniform boundedness of the boundary-layer combination down to r = 1e−4,
/// sampled at quasirandom (t, r, s) with the argument kept off the jump of k.
pub fn check_boundary_layer(a_cut: f64, draws: usize) -> CheckOutcome {
    let mut rng = SplitMix64(0xb0a7_1a7e);
    let mut worst = 0.0f64;
    let mut used = 0;
    while used < draws {
        let t = rng.range(-2.0, 2.0);
        let s = rng.range(0.05, 1.0);
        let r = 1e-4 * 5e3f64.powf(rng.uniform());
        let beta = rng.range(0.05, 0.6);
        // k jumps at argument 0: the uniform bound needs |t + s| > r
        if (t + s).abs() < r + 0.1 {
            continue;
        }
        used += 1;
        worst = worst.max(boundary_layer(t + s, r, beta, a_cut).norm());
    }
    CheckOutcome::bounded(
        "boundary-layer-sup",
        worst,
        10.0,
        format!("sup of the layer combination over {draws} (t, r, s, β) draws"),
    )
}

fn trapezoid_norm_c(values: &[Complex64], h: f64) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
    quad::trapezoid_uniform(&sq, h).sqrt()
}

fn smooth_draw(grid: &RadialGrid, rng: &mut SplitMix64) -> Vec<Complex64> {
    let l = grid.radius();
    let modes: Vec<(f64, Complex64)> = (1..=5)
        .map(|m| {
            (
                m as f64 * PI / l,
                Complex64::new(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)),
            )
        })
        .collect();
    grid.nodes()
        .into_iter()
        .map(|r| {
            modes
                .iter()
                .fold(Complex64::new(0.0, 0.0), |acc, &(km, c)| {
                    acc + c * (km * r).sin()
                })
        })
        .collect()
}

/// Lower-half-plane resolvent bounds on homogeneous-boundary solves at
/// ω = α + iβ, β < 0, sampled with |αβ| ≥ 1/2 and α ≥ 1:
/// the interior bound 2|αβ|·‖ψ‖ ≤ ‖F‖, the boundary-trace bound
/// |ψ(L)| ≤ √(a/(2α²|β|))·‖F‖, and the combined form |αβ|·‖ψ‖² ≤ ‖F‖².
pub fn check_resolvent_bounds(l: f64, a: f64) -> Result<Vec<CheckOutcome>> {
    let grid = RadialGrid::new(l, 1201)?;
    let dr = grid.dr();
    let mut rng = SplitMix64(0x5e50_17e4);
    let mut worst_l2 = 0.0f64;
    let mut worst_trace = 0.0f64;
    let mut worst_combined = 0.0f64;
    let mut solves = 0;
    for &alpha in &log_spaced(1.0, 40.0, 12) {
        for &beta in &[-0.08f64, -0.2, -0.5] {
            if (alpha * beta).abs() < 0.5 {
                continue;
            }
            let omega = Complex64::new(alpha, beta);
            let kernel = match GreensKernel::build(omega, a, &grid) {
                Ok(k) => k,
                Err(Error::AtPole { .. }) => continue,
                Err(e) => return Err(e),
            };
            let f = smooth_draw(&grid, &mut rng);
            let psi = kernel.resolve(&f, Complex64::new(0.0, 0.0))?;
            let nf = trapezoid_norm_c(&f, dr);
            let np = trapezoid_norm_c(&psi, dr);
            let trace = psi[grid.len() - 1].norm();
            let ab = (alpha * beta).abs();
            worst_l2 = worst_l2.max(2.0 * ab * np / nf);
            worst_trace = worst_trace.max(trace / ((a / (2.0 * alpha * alpha * beta.abs())).sqrt() * nf));
            worst_combined = worst_combined.max(ab * np * np / (nf * nf));
            solves += 1;
        }
    }
    Ok(vec![
        CheckOutcome::bounded(
            "resolvent-interior-bound",
            worst_l2,
            1.0,
            format!("worst 2|αβ|·‖ψ‖/‖F‖ over {solves} lower-half-plane solves"),
        ),
        CheckOutcome::bounded(
            "resolvent-trace-bound",
            worst_trace,
            1.0,
            format!("worst |ψ(L)|·√(2α²|β|/a)/‖F‖ over {solves} solves"),
        ),
        CheckOutcome::bounded(
            "resolvent-combined-bound",
            worst_combined,
            1.0,
            format!("worst |αβ|·‖ψ‖²/‖F‖² over {solves} solves"),
        ),
    ])
}

/// Gradient identity on the negative imaginary axis: for ω = iβ, β < 0 (off
/// the unstable pole), the solve satisfies
/// ∫|ψ′ − ψ/r|² ≤ ∫|ψ|² + ‖F‖·‖ψ‖ in the flat radial norms.
pub fn check_gradient_identity(l: f64, a: f64, betas: &[f64]) -> Result<CheckOutcome> {
    let grid = RadialGrid::new(l, 1201)?;
    let n = grid.len();
    let dr = grid.dr();
    let mut rng = SplitMix64(0x1d3_7a11);
    let mut worst = 0.0f64;
    for &beta in betas {
        if !(beta < 0.0) {
            return Err(Error::InvalidInput {
                what: format!("gradient identity check needs beta < 0, got {beta}"),
            });
        }
        let omega = Complex64::new(0.0, beta);
        let kernel = GreensKernel::build(omega, a, &grid)?;
        let f = smooth_draw(&grid, &mut rng);
        let psi = kernel.resolve(&f, Complex64::new(0.0, 0.0))?;
        let mut grad_sq = 0.0;
        let mut psi_sq = 0.0;
        for i in 0..n {
            let dpsi = if i == 0 {
                (psi[1] - psi[0]) / dr
            } else if i == n - 1 {
                (psi[n - 1] - psi[n - 2]) / dr
            } else {
                (psi[i + 1] - psi[i - 1]) / (2.0 * dr)
            };
            // ψ/r extends continuously to ψ′(0) at the origin, so the
            // angular combination vanishes there
            let ang = if i == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                dpsi - psi[i] / (i as f64 * dr)
            };
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            grad_sq += w * ang.norm_sqr() * dr;
            psi_sq += w * psi[i].norm_sqr() * dr;
        }
        let nf = trapezoid_norm_c(&f, dr);
        worst = worst.max(grad_sq / (psi_sq + nf * psi_sq.sqrt()));
    }
    Ok(CheckOutcome::bounded(
        "resolvent-gradient-identity",
        worst,
        1.0,
        format!("worst lhs/rhs of the gradient identity over {} imaginary frequencies", betas.len()),
    ))
}

/// Geometric-series structure of the leading multiplier: −1/η₀ equals the
/// truncated series 1 + 2Σ_{n≤N} zⁿ, z = e^{−2iLω}(1−a)/(1+a), within the
/// tail bound 2·d₀^{N+1}/(1 − d₀); d₀ = |z| < 1 whenever β < β∞.
pub fn check_eta_series(l: f64, a: f64) -> Result<CheckOutcome> {
    let beta_inf = asymptotic_line(l, a);
    let truncation = 40;
    let mut worst = 0.0f64;
    for &frac in &[-2.0f64, -0.5, 0.1, 0.6, 0.9, 0.99] {
        let beta = frac * beta_inf;
        for &alpha in &[1.0f64, 3.7, 11.0, 260.0] {
            let omega = Complex64::new(alpha, beta);
            let ex = eta_expansion(omega, l, a)?;
            if !(ex.d0 < 1.0) {
                return Ok(CheckOutcome::bounded(
                    "eta-geometric-series",
                    f64::INFINITY,
                    1.0,
                    format!("d0 = {} not below 1 at β = {beta}", ex.d0),
                ));
            }
            let z = (-2.0 * I * l * omega).exp() * (1.0 - a) / (1.0 + a);
            let mut series = Complex64::new(1.0, 0.0);
            let mut zn = Complex64::new(1.0, 0.0);
            for _ in 0..truncation {
                zn *= z;
                series += 2.0 * zn;
            }
            let tail = 2.0 * ex.d0.powi(truncation + 1) / (1.0 - ex.d0);
            let err = (-1.0 / ex.eta0 - series).norm();
            worst = worst.max(err / (tail + 1e-15));
        }
    }
    Ok(CheckOutcome::bounded(
        "eta-geometric-series",
        worst,
        1.0,
        format!("worst series error / tail bound at N = {truncation}"),
    ))
}

/// Runs the full verification suite for the geometry (L, a); deterministic.
pub fn run_all(l: f64, a: f64) -> Result<Vec<CheckOutcome>> {
    let beta = 0.2 * asymptotic_line(l, a);
    let range = (10.0, 1000.0);
    let mut out = Vec::new();
    out.push(CheckOutcome::slope(
        "eta-expansion-order",
        &check_eta_order(l, a, beta, range)?,
        2.0,
        0.1,
    ));
    out.push(CheckOutcome::slope(
        "eta-leading-order",
        &check_eta_leading_order(l, a, beta, range)?,
        1.0,
        0.15,
    ));
    let pairs: Vec<(f64, f64)> = PairSequence::new()
        .take(20)
        .map(|(x, y)| {
            let u = l * (0.05 + 0.9 * x);
            let v = l * (0.05 + 0.9 * y);
            (u.max(v), u.min(v))
        })
        .collect();
    out.push(CheckOutcome::slope(
        "gamma-expansion-order",
        &check_gamma_expansion(l, a, beta, range, &pairs)?,
        2.0,
        0.1,
    ));
    out.extend(check_kernel_bounds(1.0)?);
    out.push(check_kernel_quadrature(1.0));
    out.push(check_hilbert_norm(l, 401, 100));
    out.push(check_boundary_layer(1.0, 50));
    out.extend(check_resolvent_bounds(l, a)?);
    out.push(check_gradient_identity(
        l,
        a,
        &[-0.05, -0.1, -0.25, -0.3, -0.45],
    )?);
    out.push(check_eta_series(l, a)?);
    Ok(out)
}
