//! Characteristic function and resolvent poles of the radial boundary problem.
//!
//! The reduced half-line problem ψ″ + (1 + ω²)ψ = 0, ψ(0) = 0 with the
//! dissipative boundary functional
//!
//!   𝔅[ψ] = (iLω − a)ψ(L) + aLψ′(L)
//!
//! has a nontrivial solution exactly when ω is a pole of the resolvent. With
//! ⟨ω⟩ the square root of ω² + 1 closest to ω, the classical transcendental
//! form of that condition is
//!
//!   D(ω) = (iLω − a + iaL⟨ω⟩) e^{2i⟨ω⟩L} − (iLω − a − iaL⟨ω⟩) = 0 ,
//!
//! which is what [`characteristic_value`] evaluates. D itself depends on the
//! branch choice of ⟨ω⟩ only through an invertible factor: writing
//! z = ω² + 1, S(z) = sin(L√z)/√z and C(z) = cos(L√z) (both entire and even
//! in √z), the boundary value of the normalized solution sin(⟨ω⟩r)/⟨ω⟩ is
//!
//!   𝒟(ω) = (iLω − a)·S(z) + aL·C(z),   D = 2i⟨ω⟩e^{i⟨ω⟩L}·𝒟(ω).
//!
//! 𝒟 is entire, has no branch ambiguity near ω = ±i, and (unlike D) does
//! not vanish spuriously at ω = ±i (where ⟨ω⟩ = 0 kills the prefactor but
//! the boundary problem has no eigenfunction). All root finding here runs on
//! 𝒟: Newton steps with the analytic derivative, argument-principle counts
//! on rectangles, and the purely imaginary scan via the real-valued section
//! ĝ(s) = 𝒟(−is), which continues smoothly through s = 1 into the
//! hyperbolic regime.
//!
//! Poles come in mirror pairs: D(−ω̄) = conj D(ω), so the set is closed
//! under ω ↦ −ω̄. High-frequency poles approach the horizontal line
//! Im ω = β∞ = (1/2L)·log((1+a)/(1−a)) at rate O(1/k), with Re ω_k ≈ kπ/L.

use crate::error::{Error, Result};
use crate::radial::RadialGrid;
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A frequency with its bracket root ⟨ω⟩ cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency {
    pub omega: Complex64,
    pub bracket: Complex64,
}

impl Frequency {
    pub fn new(omega: Complex64) -> Self {
        Frequency { omega, bracket: bracket_root(omega) }
    }
}

/// Square root of ω² + 1 closest to ω; ties broken toward nonnegative real
/// part, then nonnegative imaginary part.
pub fn bracket_root(omega: Complex64) -> Complex64 {
    let zeta = (omega * omega + 1.0).sqrt();
    let d_plus = (zeta - omega).norm();
    let d_minus = (-zeta - omega).norm();
    let tol = 1e-14 * (1.0 + zeta.norm() + omega.norm());
    if (d_plus - d_minus).abs() <= tol {
        if zeta.re > 0.0 || (zeta.re == 0.0 && zeta.im >= 0.0) {
            zeta
        } else {
            -zeta
        }
    } else if d_plus < d_minus {
        zeta
    } else {
        -zeta
    }
}

/// sin(L√z)/√z, entire in z (series near the branch point of √).
fn s_entire(z: Complex64, l: f64) -> Complex64 {
    let w = z * (l * l);
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
        sum * l
    } else {
        let zeta = z.sqrt();
        (zeta * l).sin() / zeta
    }
}

/// cos(L√z), entire in z.
fn c_entire(z: Complex64, l: f64) -> Complex64 {
    let w = z * (l * l);
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
        (z.sqrt() * l).cos()
    }
}

/// d/dz of [`s_entire`]; equals (L·C − S)/(2z) away from z = 0.
fn s_entire_dz(z: Complex64, l: f64) -> Complex64 {
    let w = z * (l * l);
    if w.norm() < 0.25 {
        // sum_{m>=1} (-1)^m m L^{2m+1} z^{m-1} / (2m+1)!
        let l2 = l * l;
        let mut pow = Complex64::new(1.0, 0.0); // z^{m-1}
        let mut fact = 6.0; // (2m+1)! at m = 1
        let mut sum = Complex64::new(0.0, 0.0);
        let mut sign = -1.0;
        let mut lpow = l2 * l; // L^{2m+1} at m = 1
        for m in 1..24u32 {
            let term = pow * (sign * m as f64 * lpow / fact);
            sum += term;
            if term.norm() < 1e-19 {
                break;
            }
            sign = -sign;
            pow *= z;
            lpow *= l2;
            let k = 2 * m + 2;
            fact *= (k * (k + 1)) as f64;
        }
        sum
    } else {
        (c_entire(z, l) * l - s_entire(z, l)) / (2.0 * z)
    }
}

/// Entire characteristic function 𝒟(ω); zeros are exactly the poles.
pub fn characteristic_entire(omega: Complex64, l: f64, a: f64) -> Complex64 {
    let z = omega * omega + 1.0;
    (I * l * omega - a) * s_entire(z, l) + a * l * c_entire(z, l)
}

/// Analytic derivative 𝒟′(ω).
pub fn characteristic_entire_deriv(omega: Complex64, l: f64, a: f64) -> Complex64 {
    let z = omega * omega + 1.0;
    let s = s_entire(z, l);
    I * l * s + 2.0 * omega * ((I * l * omega - a) * s_entire_dz(z, l))
        - a * l * l * omega * s
}

/// Transcendental characteristic value D(ω) with the bracket root ⟨ω⟩.
pub fn characteristic_value(omega: Complex64, l: f64, a: f64) -> Complex64 {
    let zeta = bracket_root(omega);
    let e = (2.0 * I * zeta * l).exp();
    let base = I * l * omega - a;
    (base + I * a * l * zeta) * e - (base - I * a * l * zeta)
}

/// D′(ω) at a root of 𝒟 (product rule collapses there).
fn characteristic_value_deriv_at_root(omega: Complex64, l: f64, a: f64) -> Complex64 {
    let zeta = bracket_root(omega);
    2.0 * I * zeta * (I * zeta * l).exp() * characteristic_entire_deriv(omega, l, a)
}

/// Horizontal asymptote of the pole line: (1/2L)·log((1+a)/(1−a)).
pub fn asymptotic_line(l: f64, a: f64) -> f64 {
    ((1.0 + a) / (1.0 - a)).ln() / (2.0 * l)
}

/// First-order pole location guess for index k: kπ/L + i·β∞.
pub fn asymptotic_seed(k: i64, l: f64, a: f64) -> Complex64 {
    Complex64::new(k as f64 * std::f64::consts::PI / l, asymptotic_line(l, a))
}

/// Classification of a pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoleKind {
    PurelyImaginary,
    ComplexPairMember,
}

/// A simple resolvent pole.
#[derive(Debug, Clone, PartialEq)]
pub struct Pole {
    pub omega: Complex64,
    pub kind: PoleKind,
    /// |D(ω)| at the accepted root.
    pub char_residual: f64,
    /// D′(ω) at the root; simplicity requires it away from zero.
    pub derivative: Complex64,
}

impl Pole {
    /// Mirror partner under ω ↦ −ω̄ (identity for purely imaginary poles).
    pub fn mirror(&self) -> Pole {
        Pole {
            omega: Complex64::new(-self.omega.re, self.omega.im),
            kind: self.kind,
            char_residual: self.char_residual,
            derivative: self.derivative.conj(),
        }
    }
}

const AXIS_SNAP: f64 = 1e-9;

fn make_pole(omega: Complex64, l: f64, a: f64) -> Result<Pole> {
    let mut omega = omega;
    if omega.re.abs() < AXIS_SNAP * (1.0 + omega.norm()) {
        omega.re = 0.0;
        // polish on the axis with the real section
        if let Some(s) = polish_axis_root(-omega.im, l, a) {
            omega.im = -s;
        }
    }
    let residual = characteristic_value(omega, l, a).norm();
    let derivative = characteristic_value_deriv_at_root(omega, l, a);
    if residual > 1e-10 {
        return Err(Error::NonConvergence {
            what: "pole refinement",
            detail: format!("residual {residual:e} at {omega}"),
        });
    }
    if derivative.norm() <= 1e-8 {
        return Err(Error::NonConvergence {
            what: "pole simplicity check",
            detail: format!("|D'| = {:e} at {omega}", derivative.norm()),
        });
    }
    let kind = if omega.re == 0.0 { PoleKind::PurelyImaginary } else { PoleKind::ComplexPairMember };
    Ok(Pole { omega, kind, char_residual: residual, derivative })
}

/// Newton iteration on 𝒟 from `seed`; stops on a stagnant step or tiny |D|.
pub fn refine_pole(seed: Complex64, l: f64, a: f64) -> Result<Pole> {
    let mut w = seed;
    for _ in 0..50 {
        let f = characteristic_entire(w, l, a);
        let df = characteristic_entire_deriv(w, l, a);
        if df.norm() < 1e-280 {
            break;
        }
        let step = f / df;
        w -= step;
        if step.norm() < 1e-15 * (1.0 + w.norm()) {
            break;
        }
        if characteristic_value(w, l, a).norm() < 1e-12 {
            break;
        }
    }
    make_pole(w, l, a)
}

/// Newton-refined poles from the asymptotic seeds k ∈ `ks`.
pub fn poles_from_seeds(
    ks: impl IntoIterator<Item = i64>,
    l: f64,
    a: f64,
) -> Result<Vec<Pole>> {
    let mut out = Vec::new();
    for k in ks {
        out.push(refine_pole(asymptotic_seed(k, l, a), l, a)?);
    }
    Ok(out)
}

/// Real section of the entire characteristic function on the negative
/// imaginary axis: ĝ(s) = 𝒟(−is), smooth through s = 1.
pub fn imaginary_section(s: f64, l: f64, a: f64) -> f64 {
    let v = characteristic_entire(Complex64::new(0.0, -s), l, a);
    debug_assert!(v.im.abs() <= 1e-10 * (1.0 + v.re.abs()), "section not real: {v}");
    v.re
}

fn polish_axis_root(s: f64, l: f64, a: f64) -> Option<f64> {
    // local secant/bisection polish around s
    let h = 1e-6 * (1.0 + s.abs());
    let (mut lo, mut hi) = (s - h, s + h);
    let (mut flo, mut fhi) = (imaginary_section(lo, l, a), imaginary_section(hi, l, a));
    let mut grow = h;
    for _ in 0..40 {
        if flo * fhi <= 0.0 {
            break;
        }
        grow *= 2.0;
        lo = s - grow;
        hi = s + grow;
        flo = imaginary_section(lo, l, a);
        fhi = imaginary_section(hi, l, a);
    }
    if flo * fhi > 0.0 {
        return None;
    }
    Some(brent(|x| imaginary_section(x, l, a), lo, hi, flo, fhi))
}

/// Brent-style bracketed root refinement (bisection + inverse interpolation).
fn brent(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut mflag = true;
    let mut d = c;
    for _ in 0..200 {
        if fb == 0.0 || (b - a).abs() < 1e-16 * (1.0 + b.abs()) {
            break;
        }
        let mut s = if fa != fc && fb != fc {
            // inverse quadratic interpolation
            a * fb * fc / ((fa - fb) * (fa - fc)) + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let cond = !((s > lo.min(b) && s < lo.max(b))
            || (s > b.min(lo) && s < b.max(lo)))
            || (mflag && (s - b).abs() >= (b - c).abs() / 2.0)
            || (!mflag && (s - b).abs() >= (c - d).abs() / 2.0)
            || (mflag && (b - c).abs() < 1e-16)
            || (!mflag && (c - d).abs() < 1e-16);
        if cond {
            s = 0.5 * (a + b);
            mflag = true;
        } else {
            mflag = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    b
}

/// All s > 0 with ω = −is a resolvent pole (growth rates of unstable modes),
/// sorted ascending. Scans the real section ĝ on (0, s_max] including the
/// hyperbolic continuation past s = 1.
pub fn find_imaginary_poles(l: f64, a: f64) -> Result<Vec<f64>> {
    if (l - l.tan()).abs() < 1e-8 {
        return Err(Error::DegenerateL { l });
    }
    let s_max = 1.5f64.max(a / l + 0.5);
    let m = 4000usize;
    let mut roots: Vec<f64> = Vec::new();
    let mut prev_s = 1e-7;
    let mut prev_g = imaginary_section(prev_s, l, a);
    for j in 1..=m {
        let s = 1e-7 + (s_max - 1e-7) * j as f64 / m as f64;
        let g = imaginary_section(s, l, a);
        if prev_g == 0.0 {
            roots.push(prev_s);
        } else if prev_g * g < 0.0 {
            roots.push(brent(|x| imaginary_section(x, l, a), prev_s, s, prev_g, g));
        }
        prev_s = s;
        prev_g = g;
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-10);
    for &s in &roots {
        let res = characteristic_value(Complex64::new(0.0, -s), l, a).norm();
        if res >= 1e-10 {
            return Err(Error::NonConvergence {
                what: "imaginary pole refinement",
                detail: format!("|D(-is)| = {res:e} at s = {s}"),
            });
        }
    }
    Ok(roots)
}

/// Eigenfunction ψ(r) = sin(⟨−is⟩ r)/⟨−is⟩ of an imaginary pole, real-valued
/// in both the trigonometric (s < 1) and hyperbolic (s > 1) regimes.
pub fn imaginary_mode(s: f64, grid: &RadialGrid) -> Vec<f64> {
    let z = Complex64::new(1.0 - s * s, 0.0);
    (0..grid.len()).map(|i| s_entire(z, grid.r(i)).re).collect()
}

// ---------------------------------------------------------------------------
// Strip search: argument principle + asymptotic seeds
// ---------------------------------------------------------------------------

/// Options for [`find_poles_in_strip`].
#[derive(Debug, Clone, Copy)]
pub struct StripOptions {
    /// Poles closer than this to Im ω = beta_max trip [`Error::PoleOnLine`].
    pub line_margin: f64,
    /// Required clearance of beta_max below the asymptotic line, as a
    /// fraction of β∞.
    pub asymptote_margin: f64,
}

impl Default for StripOptions {
    fn default() -> Self {
        StripOptions { line_margin: 1e-3, asymptote_margin: 0.02 }
    }
}

/// Phase increment of 𝒟 along the segment [z0, z1], refined until each step
/// turns by less than π/3.
fn phase_walk(
    l: f64,
    a: f64,
    z0: Complex64,
    z1: Complex64,
    f0: Complex64,
    f1: Complex64,
    depth: u32,
) -> Result<f64> {
    if f0.norm() < 1e-60 || f1.norm() < 1e-60 {
        return Err(Error::NonConvergence {
            what: "winding number",
            detail: "characteristic value vanished on a cell boundary".into(),
        });
    }
    let d_arg = (f1 / f0).arg();
    if d_arg.abs() <= std::f64::consts::FRAC_PI_3 {
        return Ok(d_arg);
    }
    if depth >= 40 {
        return Err(Error::NonConvergence {
            what: "winding number",
            detail: format!("phase step did not settle near {z0}"),
        });
    }
    let zm = 0.5 * (z0 + z1);
    let fm = characteristic_entire(zm, l, a);
    Ok(phase_walk(l, a, z0, zm, f0, fm, depth + 1)?
        + phase_walk(l, a, zm, z1, fm, f1, depth + 1)?)
}

/// Zero count of 𝒟 inside the rectangle, via the argument principle.
fn winding_number(l: f64, a: f64, re: (f64, f64), im: (f64, f64)) -> Result<i64> {
    let corners = [
        Complex64::new(re.0, im.0),
        Complex64::new(re.1, im.0),
        Complex64::new(re.1, im.1),
        Complex64::new(re.0, im.1),
    ];
    let mut total = 0.0;
    for e in 0..4 {
        let z0 = corners[e];
        let z1 = corners[(e + 1) % 4];
        // enough initial samples that no step can alias a full turn
        let len = (z1 - z0).norm();
        let m = 8 + (len * (2.0 * l + 4.0)) as usize * 4;
        let mut fprev = characteristic_entire(z0, l, a);
        let mut zprev = z0;
        for j in 1..=m {
            let z = z0 + (z1 - z0) * (j as f64 / m as f64);
            let f = characteristic_entire(z, l, a);
            total += phase_walk(l, a, zprev, z, fprev, f, 0)?;
            zprev = z;
            fprev = f;
        }
    }
    let w = total / (2.0 * std::f64::consts::PI);
    let rounded = w.round();
    if (w - rounded).abs() > 0.2 {
        return Err(Error::NonConvergence {
            what: "winding number",
            detail: format!("non-integer winding {w}"),
        });
    }
    Ok(rounded as i64)
}

/// Winding with a few jittered retries for boundaries grazing a zero.
fn winding_number_robust(l: f64, a: f64, re: (f64, f64), im: (f64, f64)) -> Result<i64> {
    let mut eps = 0.0;
    for attempt in 0..4 {
        match winding_number(l, a, (re.0 - eps, re.1 + eps), (im.0 - eps, im.1 + eps)) {
            Ok(w) => return Ok(w),
            Err(e) if attempt == 3 => return Err(e),
            Err(_) => {
                eps = 1e-4 * (1.0 + (re.1 - re.0)) * (attempt + 1) as f64 * 0.618;
            }
        }
    }
    unreachable!()
}

fn poles_in_cell(
    l: f64,
    a: f64,
    re: (f64, f64),
    im: (f64, f64),
    depth: u32,
    out: &mut Vec<Pole>,
) -> Result<()> {
    let w = winding_number_robust(l, a, re, im)?;
    if w == 0 {
        return Ok(());
    }
    if w == 1 {
        let center = Complex64::new(0.5 * (re.0 + re.1), 0.5 * (im.0 + im.1));
        if let Ok(p) = refine_pole(center, l, a) {
            let pad = 1e-9 * (1.0 + p.omega.norm());
            if p.omega.re >= re.0 - pad
                && p.omega.re <= re.1 + pad
                && p.omega.im >= im.0 - pad
                && p.omega.im <= im.1 + pad
            {
                out.push(p);
                return Ok(());
            }
        }
    }
    if depth >= 26 {
        return Err(Error::NonConvergence {
            what: "cell subdivision",
            detail: format!("unresolved cell [{:?}] x [{:?}]", re, im),
        });
    }
    if re.1 - re.0 >= im.1 - im.0 {
        let mid = 0.5 * (re.0 + re.1);
        poles_in_cell(l, a, (re.0, mid), im, depth + 1, out)?;
        poles_in_cell(l, a, (mid, re.1), im, depth + 1, out)?;
    } else {
        let mid = 0.5 * (im.0 + im.1);
        poles_in_cell(l, a, re, (im.0, mid), depth + 1, out)?;
        poles_in_cell(l, a, re, (mid, im.1), depth + 1, out)?;
    }
    Ok(())
}

/// All poles with Im ω < `beta_max` and |Re ω| ≤ `alpha_max`, closed under
/// the mirror symmetry ω ↦ −ω̄ and sorted by (Re, Im).
///
/// `beta_max` must sit strictly below the asymptotic line; a pole within
/// `line_margin` of the line Im ω = beta_max is an error, because downstream
/// moment synthesis needs a clean spectral gap at the line.
///
/// Completeness holds for the searched region: |Re ω| ≤ 4π/L is covered by
/// argument-principle cells (their winding counts are the zero counts), and
/// beyond that poles are taken from Newton-refined asymptotic seeds.
pub fn find_poles_in_strip(
    l: f64,
    a: f64,
    beta_max: f64,
    alpha_max: f64,
    opts: StripOptions,
) -> Result<Vec<Pole>> {
    let beta_inf = asymptotic_line(l, a);
    if !(beta_max < beta_inf * (1.0 - opts.asymptote_margin)) {
        return Err(Error::InvalidInput {
            what: format!(
                "beta_max = {beta_max} must lie below the asymptotic line {beta_inf} minus margin"
            ),
        });
    }
    if (l - l.tan()).abs() < 1e-8 {
        return Err(Error::DegenerateL { l });
    }
    let pi = std::f64::consts::PI;
    let s_bound = 1.5f64.max(a / l + 0.5) + 0.25;
    // search slightly above the line so near-line poles are seen by the guard
    let im_top = beta_max + 2.0 * opts.line_margin;
    let x_hi = (4.0 * pi / l).min(alpha_max.max(pi / l));
    let wx = pi / (2.0 * l);
    // column boundaries offset so the imaginary axis is interior to a column
    let x_lo = -x_hi - 0.37 * wx;
    let n_cols = ((x_hi - x_lo) / wx).ceil() as usize + 1;
    let wy = 0.45;
    let n_rows = ((im_top + s_bound) / wy).ceil() as usize + 1;
    let y_lo = -s_bound - 0.29 * wy;

    let mut found: Vec<Pole> = Vec::new();
    for col in 0..n_cols {
        let rex = (x_lo + col as f64 * wx, x_lo + (col + 1) as f64 * wx);
        if rex.0 > x_hi {
            break;
        }
        for row in 0..n_rows {
            let imy = (y_lo + row as f64 * wy, y_lo + (row + 1) as f64 * wy);
            if imy.0 > im_top {
                break;
            }
            let imy = (imy.0, imy.1.min(im_top + 0.3));
            poles_in_cell(l, a, rex, imy, 0, &mut found)?;
        }
    }

    // high-frequency tail: poles below the line must have bounded index
    let k_lo = (x_hi * l / pi).floor() as i64 - 1;
    let k_hi = (alpha_max * l / pi).ceil() as i64 + 1;
    for k in k_lo.max(1)..=k_hi {
        if let Ok(p) = refine_pole(asymptotic_seed(k, l, a), l, a) {
            if p.omega.im < im_top + 0.3 {
                found.push(p);
            }
        }
    }

    // canonicalize to Re >= 0, dedup, then close under the mirror map
    let mut canon: Vec<Pole> = Vec::new();
    for p in found {
        let q = if p.omega.re < 0.0 { p.mirror() } else { p };
        if !canon.iter().any(|c| (c.omega - q.omega).norm() < 1e-8) {
            canon.push(q);
        }
    }
    // line-margin guard over everything seen near the strip top
    for p in &canon {
        if (p.omega.im - beta_max).abs() < opts.line_margin {
            return Err(Error::PoleOnLine {
                omega: p.omega,
                line: beta_max,
                margin: opts.line_margin,
            });
        }
    }
    let mut full: Vec<Pole> = Vec::new();
    for p in canon {
        if p.omega.im >= beta_max || p.omega.re.abs() > alpha_max {
            continue;
        }
        if p.omega.re > 0.0 {
            full.push(p.mirror());
        }
        full.push(p);
    }
    full.sort_by(|x, y| {
        (x.omega.re, x.omega.im)
            .partial_cmp(&(y.omega.re, y.omega.im))
            .unwrap()
    });
    Ok(full)
}

// ---------------------------------------------------------------------------
// Boundary-coefficient expansion
// ---------------------------------------------------------------------------

/// Exact boundary coefficient η(ω) and its two-term high-frequency expansion
/// η ≈ η₀ + η₁/α in both parameterizations (c-form in e^{2iLω}, d-form in
/// e^{−2iLα}).
#[derive(Debug, Clone, PartialEq)]
pub struct EtaExpansion {
    pub eta: Complex64,
    pub eta0: Complex64,
    pub eta1: Complex64,
    pub c0: f64,
    pub c1: Complex64,
    pub d0: f64,
    pub d1: Complex64,
}

/// Exact η(ω): the cosine admixture that makes φ₂ satisfy the boundary
/// condition. Vanishes exactly at poles.
pub fn eta_exact(omega: Complex64, l: f64, a: f64) -> Complex64 {
    let zeta = bracket_root(omega);
    let e = (2.0 * I * zeta * l).exp();
    let base = I * l * omega - a;
    let num = (base + I * a * l * zeta) * e - (base - I * a * l * zeta);
    let den = base * (e + 1.0) + I * a * l * zeta * (e - 1.0);
    -num / den
}

/// Exact η together with the two-term expansion; needs Re ω ≥ 1 for the
/// expansion to be meaningful. Errors with [`Error::AtPole`] when η ≈ 0.
pub fn eta_expansion(omega: Complex64, l: f64, a: f64) -> Result<EtaExpansion> {
    let alpha = omega.re;
    let beta = omega.im;
    if alpha < 1.0 {
        return Err(Error::InvalidInput {
            what: format!("eta expansion needs Re omega >= 1, got {alpha}"),
        });
    }
    let eta = eta_exact(omega, l, a);
    if eta.norm() <= 1e-12 {
        return Err(Error::AtPole { omega });
    }
    let e = (2.0 * I * l * omega).exp();
    let c0 = (1.0 + a) / (1.0 - a);
    let eta0 = (1.0 - c0 * e) / (1.0 + c0 * e);
    // first-order coefficient; the bracket collects the boundary functional's
    // O(1/alpha) content, note the factor 2 from matching both expansions
    let c1 = -2.0 * I
        * (beta + a / l + l + a * l + a * beta - c0 * (beta + a / l) + c0 * a * beta)
        / (1.0 - a);
    let eta1 = c1 * e / ((1.0 + c0 * e) * (1.0 + c0 * e));
    let d0 = ((1.0 - a) / (1.0 + a)) * (2.0 * l * beta).exp();
    let d1 = c1 * ((1.0 - a) / (1.0 + a)).powi(2) * (2.0 * l * beta).exp();
    Ok(EtaExpansion { eta, eta0, eta1, c0, c1, d0, d1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bracket_examples() {
        // omega = i sits on the branch point: bracket 0
        assert!(bracket_root(Complex64::new(0.0, 1.0)).norm() < 1e-12);
        // omega = 3: sqrt10
        let b = bracket_root(Complex64::new(3.0, 0.0));
        assert!((b - Complex64::new(10.0f64.sqrt(), 0.0)).norm() < 1e-14);
        // ties on the imaginary segment resolve to nonnegative real part
        let b = bracket_root(Complex64::new(0.0, -0.5));
        assert!((b - Complex64::new(0.75f64.sqrt(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn bracket_defining_properties_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..300 {
            let w = Complex64::new(rng.gen_range(-20.0..20.0), rng.gen_range(-3.0..3.0));
            let b = bracket_root(w);
            // square property
            assert!((b * b - (w * w + 1.0)).norm() < 1e-10 * (1.0 + w.norm_sqr()));
            // closest-root property
            assert!((b - w).norm() <= (-b - w).norm() + 1e-12);
        }
    }

    #[test]
    fn bracket_asymptotic_expansion() {
        let alpha = 100.0;
        let w = Complex64::new(alpha, 0.3);
        let b = bracket_root(w);
        let approx = w + 1.0 / (2.0 * alpha);
        assert!((b - approx).norm() < 1e-3, "got {b}, approx {approx}");
    }

    #[test]
    fn entire_and_transcendental_forms_agree() {
        let (l, a) = (1.0, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let w = Complex64::new(rng.gen_range(-15.0..15.0), rng.gen_range(-1.4..1.4));
            let zeta = bracket_root(w);
            if zeta.norm() < 1e-3 {
                continue;
            }
            let d = characteristic_value(w, l, a);
            let cal = characteristic_entire(w, l, a);
            let rel = (d - 2.0 * I * zeta * (I * zeta * l).exp() * cal).norm()
                / (1.0 + d.norm());
            assert!(rel < 1e-10, "mismatch at {w}: rel = {rel}");
        }
    }

    #[test]
    fn characteristic_mirror_symmetry() {
        let (l, a) = (1.3, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let w = Complex64::new(rng.gen_range(-12.0..12.0), rng.gen_range(-1.0..1.0));
            let d = characteristic_value(w, l, a);
            let dm = characteristic_value(Complex64::new(-w.re, w.im), l, a);
            assert!(
                (dm - d.conj()).norm() < 1e-12 * (1.0 + d.norm()),
                "D(-conj w) != conj D(w) at {w}"
            );
        }
    }

    #[test]
    fn entire_derivative_matches_finite_differences() {
        let (l, a) = (0.8, 0.3);
        let h = 1e-6;
        for &(x, y) in &[(2.0, 0.1), (5.5, 0.4), (0.1, -0.6), (0.0, -0.97), (0.05, 1.02)] {
            let w = Complex64::new(x, y);
            let fd = (characteristic_entire(w + h, l, a) - characteristic_entire(w - h, l, a))
                / (2.0 * h);
            let an = characteristic_entire_deriv(w, l, a);
            assert!((fd - an).norm() < 1e-6 * (1.0 + an.norm()), "at {w}: fd {fd} vs {an}");
        }
    }

    #[test]
    fn imaginary_poles_reference_case() {
        // L = 1, a = 0.5: tan(1) > 1 puts exactly one root below a/L.
        let roots = find_imaginary_poles(1.0, 0.5).unwrap();
        assert_eq!(roots.len(), 1, "roots: {roots:?}");
        let s = roots[0];
        assert!(s > 0.0 && s < 0.5, "s = {s}");
        // cross-check with the tangent form: tan(L sigma) = a L sigma / (a - L s)
        let sigma = (1.0 - s * s).sqrt();
        let lhs = sigma.tan();
        let rhs = 0.5 * sigma / (0.5 - s);
        assert!((lhs - rhs).abs() < 1e-8, "tan check: {lhs} vs {rhs}");
    }

    #[test]
    fn imaginary_poles_all_standard_cases() {
        for &(l, a) in &[(1.0, 0.5), (2.0, 0.9), (0.8, 0.3), (0.5, 0.5), (0.3, 0.6)] {
            let roots = find_imaginary_poles(l, a).unwrap();
            assert!(!roots.is_empty(), "no unstable pole at L = {l}, a = {a}");
            for &s in &roots {
                assert!(s > 0.0 && s < 1.0, "L = {l}, a = {a}: s = {s}");
                let res = characteristic_value(Complex64::new(0.0, -s), l, a).norm();
                assert!(res < 1e-10, "residual {res:e}");
            }
        }
    }

    #[test]
    fn degenerate_length_rejected() {
        // L = tan L near 4.493409457909064 (first positive fixed point)
        let l_deg = 4.493409457909064;
        match find_imaginary_poles(l_deg, 0.4) {
            Err(Error::DegenerateL { .. }) => {}
            other => panic!("expected DegenerateL, got {other:?}"),
        }
    }

    #[test]
    fn asymptotic_line_reference() {
        let b = asymptotic_line(std::f64::consts::PI, 0.5);
        assert!((b - 3.0f64.ln() / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn seeded_poles_approach_line_at_first_order() {
        let (l, a) = (std::f64::consts::PI, 0.5);
        let beta_inf = asymptotic_line(l, a);
        let poles = poles_from_seeds(10..=40, l, a).unwrap();
        let mut prev_dev = f64::INFINITY;
        for (i, p) in poles.iter().enumerate() {
            let k = (10 + i) as f64;
            let dev = (p.omega - Complex64::new(k * std::f64::consts::PI / l, beta_inf)).norm();
            assert!(dev < 0.1, "k = {k}: dev = {dev}");
            // O(1/k): deviations shrink (allow small non-monotone wiggle)
            assert!(dev < prev_dev * 1.5 + 1e-4);
            prev_dev = dev;
        }
    }

    #[test]
    fn strip_search_reference_case() {
        let (l, a) = (1.0, 0.5);
        let beta_inf = asymptotic_line(l, a);
        let poles =
            find_poles_in_strip(l, a, 0.4 * beta_inf, 40.0, StripOptions::default()).unwrap();
        assert!(!poles.is_empty());
        // closed under mirror symmetry
        for p in &poles {
            let mirrored = Complex64::new(-p.omega.re, p.omega.im);
            assert!(
                poles.iter().any(|q| (q.omega - mirrored).norm() < 1e-8),
                "missing mirror of {}",
                p.omega
            );
            assert!(p.omega.im < 0.4 * beta_inf);
            assert!(p.char_residual < 1e-10);
        }
        // the unstable imaginary pole is in the set
        let s = find_imaginary_poles(l, a).unwrap()[0];
        assert!(
            poles
                .iter()
                .any(|p| (p.omega - Complex64::new(0.0, -s)).norm() < 1e-8),
            "unstable pole missing from strip"
        );
    }

    #[test]
    fn strip_rejects_beta_above_line() {
        let (l, a) = (1.0, 0.5);
        let beta_inf = asymptotic_line(l, a);
        assert!(find_poles_in_strip(l, a, beta_inf, 10.0, StripOptions::default()).is_err());
    }

    #[test]
    fn eta_vanishes_exactly_at_poles() {
        let (l, a) = (1.0, 0.5);
        let s = find_imaginary_poles(l, a).unwrap()[0];
        let eta = eta_exact(Complex64::new(0.0, -s), l, a);
        assert!(eta.norm() < 1e-10, "eta at pole: {eta}");
        match eta_expansion(Complex64::new(1.0, -s) - Complex64::new(1.0, 0.0), l, a) {
            Err(Error::InvalidInput { .. }) => {}
            other => panic!("expected InvalidInput for alpha < 1, got {other:?}"),
        }
    }

    #[test]
    fn eta_d_form_matches_c_form() {
        let (l, a) = (1.0, 0.5);
        for &alpha in &[5.0, 17.3, 120.0] {
            let w = Complex64::new(alpha, 0.2);
            let ex = eta_expansion(w, l, a).unwrap();
            let phase = (-2.0 * I * l * alpha).exp();
            let d_form = (-1.0 + ex.d0 * phase) / (1.0 + ex.d0 * phase);
            assert!((ex.eta0 - d_form).norm() < 1e-12, "alpha = {alpha}");
            let d1_form = ex.d1 * phase / ((1.0 + ex.d0 * phase) * (1.0 + ex.d0 * phase));
            assert!((ex.eta1 - d1_form).norm() < 1e-12 * (1.0 + ex.eta1.norm()));
        }
    }

    #[test]
    fn eta_d0_reference_value() {
        let ex = eta_expansion(Complex64::new(10.0, 0.0), 2.0, 0.5).unwrap();
        assert!((ex.d0 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn eta_expansion_order_spot_check() {
        // residual |eta - eta0 - eta1/alpha| must fall at least like
        // alpha^{-2}; a first-order coefficient error would leave slope 1.
        // Individual slopes can exceed 2 because the residual's bounded
        // prefactor oscillates in alpha, so the check is one-sided.
        let (l, a) = (1.0, 0.5);
        let beta = 0.2;
        let r = |alpha: f64| {
            let ex = eta_expansion(Complex64::new(alpha, beta), l, a).unwrap();
            (ex.eta - ex.eta0 - ex.eta1 / alpha).norm()
        };
        let alphas: Vec<f64> = (0..7).map(|j| 50.0 * 2.0f64.powi(j)).collect();
        let pts: Vec<(f64, f64)> = alphas.iter().map(|&x| (x.ln(), r(x).ln())).collect();
        let n = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |m, p| (m.0 + p.0, m.1 + p.1));
        let slope = pts
            .iter()
            .map(|p| (p.0 - sx / n) * (p.1 - sy / n))
            .sum::<f64>()
            / pts.iter().map(|p| (p.0 - sx / n).powi(2)).sum::<f64>();
        assert!(-slope > 1.6, "observed order {} too shallow", -slope);
        assert!(r(3200.0) < 1e-5);
    }
}
