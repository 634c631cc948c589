//! Quadrature engines and special functions shared by the correlator paths:
//! adaptive Gauss–Kronrod integration in 1–4 dimensions, the exponentially
//! scaled modified Bessel function I₀, and the polar-angle saddle machinery
//! used by the collinear formulas.

use std::cell::{Cell, RefCell};
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Quadrature control parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadSpec {
    pub rel_tol: f64,
    /// Absolute tolerance in the units of the integrand × measure.
    pub abs_tol: f64,
    /// Maximum number of interval subdivisions per 1D pass.
    pub max_subdiv: usize,
    /// Momentum integrals are truncated at k₀ ± n·δk_z with this n
    /// (widened automatically when the occupation broadens the spectrum).
    pub k_window_sigmas: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { rel_tol: 1e-8, abs_tol: 1e-300, max_subdiv: 4000, k_window_sigmas: 8.0 }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParam("quadrature tolerances must be > 0".into()));
        }
        if self.k_window_sigmas < 5.0 {
            return Err(Error::InvalidParam(format!(
                "k_window_sigmas must be >= 5, got {}",
                self.k_window_sigmas
            )));
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
}

// 15-point Gauss-Kronrod rule (7-point Gauss embedded), QUADPACK abscissae.
const XGK15: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WG7: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One 15-point Gauss-Kronrod pass over [a, b]; returns (value, error, ∫|f|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);

    let mut fv = [0.0f64; 15];
    fv[7] = fc;
    let mut res_g = fc * WG7[3];
    let mut res_k = fc * WGK15[7];
    let mut res_abs = res_k.abs();

    for j in 0..7 {
        let dx = half * XGK15[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        let fsum = f1 + f2;
        if j % 2 == 1 {
            res_g += WG7[j / 2] * fsum;
        }
        res_k += WGK15[j] * fsum;
        res_abs += WGK15[j] * (f1.abs() + f2.abs());
    }

    let mean = res_k * 0.5;
    let mut res_asc = WGK15[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK15[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let err = ((res_k - res_g) * half).abs();
    let res_abs = res_abs * half.abs();
    (res_k * half, rescale_error(err, res_abs, res_asc * half.abs()), res_abs)
}

struct Segment {
    err: f64,
    a: f64,
    b: f64,
    val: f64,
    resabs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive Gauss-Kronrod integration of `f` over [a, b].
///
/// Converges when the summed error estimate drops below
/// `max(abs_tol, rel_tol · |value|)`; exceeding `max_subdiv` yields
/// [`Error::Convergence`] carrying the best estimate.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<Quadrature> {
    integrate_1d_with_breaks(f, &[a, b], spec)
}

/// As [`integrate_1d`] over `[breaks[0], breaks[last]]`, with the initial
/// subdivision placed at the interior break points (known kinks or peaks).
pub fn integrate_1d_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    spec: &QuadSpec,
) -> Result<Quadrature> {
    assert!(breaks.len() >= 2, "need at least the two endpoints");
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut err_sum = 0.0;
    let mut resabs_sum = 0.0;
    for win in breaks.windows(2) {
        let (a, b) = (win[0], win[1]);
        if a == b {
            continue;
        }
        let (v, e, ra) = gk15(&f, a, b);
        value += v;
        err_sum += e;
        resabs_sum += ra;
        heap.push(Segment { err: e, a, b, val: v, resabs: ra });
    }
    let mut subdivisions = heap.len();

    loop {
        // Converged, or the remaining error sits at the f64 rounding floor
        // of the accumulated |f| mass and further bisection cannot help.
        if err_sum <= spec.abs_tol.max(spec.rel_tol * value.abs())
            || err_sum <= 200.0 * f64::EPSILON * resabs_sum
        {
            return Ok(Quadrature { value, abs_error: err_sum, subdivisions });
        }
        if subdivisions >= spec.max_subdiv {
            return Err(Error::Convergence {
                best: value,
                err: err_sum,
                detail: format!("max_subdiv={} reached", spec.max_subdiv),
            });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => return Ok(Quadrature { value, abs_error: err_sum, subdivisions }),
        };
        let mid = 0.5 * (worst.a + worst.b);
        if !(worst.a < mid && mid < worst.b) {
            // Interval exhausted at f64 resolution; accept its estimate and
            // reinsert with zero error so it never resurfaces.
            heap.push(Segment { err: 0.0, ..worst });
            if heap.iter().all(|s| s.err == 0.0) {
                return Ok(Quadrature { value, abs_error: err_sum, subdivisions });
            }
            continue;
        }
        let (v1, e1, ra1) = gk15(&f, worst.a, mid);
        let (v2, e2, ra2) = gk15(&f, mid, worst.b);
        value += v1 + v2 - worst.val;
        err_sum += e1 + e2 - worst.err;
        resabs_sum += ra1 + ra2 - worst.resabs;
        heap.push(Segment { err: e1, a: worst.a, b: mid, val: v1, resabs: ra1 });
        heap.push(Segment { err: e2, a: mid, b: worst.b, val: v2, resabs: ra2 });
        subdivisions += 1;
    }
}

/// Nested adaptive integration over an axis-aligned box, up to 4 dimensions.
///
/// The error estimate is propagated conservatively: at every level the outer
/// quadrature error is added to the box-measure-weighted worst inner error.
pub fn integrate_nd<F: Fn(&[f64]) -> f64>(
    f: &F,
    lo: &[f64],
    hi: &[f64],
    spec: &QuadSpec,
) -> Result<Quadrature> {
    assert_eq!(lo.len(), hi.len());
    assert!((1..=4).contains(&lo.len()), "supported dimensions: 1..=4");
    let point = RefCell::new(vec![0.0; lo.len()]);
    nd_level(f, lo, hi, 0, &point, spec)
}

fn nd_level<F: Fn(&[f64]) -> f64>(
    f: &F,
    lo: &[f64],
    hi: &[f64],
    axis: usize,
    point: &RefCell<Vec<f64>>,
    spec: &QuadSpec,
) -> Result<Quadrature> {
    let last = axis == lo.len() - 1;
    let inner_err = Cell::new(0.0f64);
    let inner_sub = Cell::new(0usize);
    let bad = Cell::new(false);
    let g = |x: f64| -> f64 {
        point.borrow_mut()[axis] = x;
        if last {
            f(&point.borrow())
        } else {
            match nd_level(f, lo, hi, axis + 1, point, spec) {
                Ok(q) => {
                    inner_err.set(inner_err.get().max(q.abs_error));
                    inner_sub.set(inner_sub.get() + q.subdivisions);
                    q.value
                }
                Err(Error::Convergence { best, err, .. }) => {
                    bad.set(true);
                    inner_err.set(inner_err.get().max(err));
                    best
                }
                Err(_) => {
                    bad.set(true);
                    f64::NAN
                }
            }
        }
    };
    let q = integrate_1d(g, lo[axis], hi[axis], spec)?;
    let width = (hi[axis] - lo[axis]).abs();
    let total_err = q.abs_error + width * inner_err.get();
    if bad.get() {
        return Err(Error::Convergence {
            best: q.value,
            err: total_err,
            detail: "inner integral did not converge".into(),
        });
    }
    Ok(Quadrature {
        value: q.value,
        abs_error: total_err,
        subdivisions: q.subdivisions + inner_sub.get(),
    })
}

/// Adaptive 2D integration of `f(x, y)` over the square spanned by `breaks`
/// (shared break points on both axes), with an absolute-tolerance floor
/// derived from `scale` — the magnitude of the positive (non-oscillatory)
/// kernel — so near-cancelling oscillatory results don't chase pure relative
/// tolerance forever.
pub fn integrate_pair<F: Fn(f64, f64) -> f64>(
    f: F,
    breaks: &[f64],
    scale: f64,
    spec: &QuadSpec,
) -> Result<Quadrature> {
    let lo = breaks[0];
    let hi = breaks[breaks.len() - 1];
    let width = hi - lo;
    let outer_spec = QuadSpec { abs_tol: (0.5 * spec.rel_tol * scale).max(spec.abs_tol), ..*spec };
    let inner_spec = QuadSpec {
        rel_tol: 0.3 * spec.rel_tol,
        abs_tol: (0.1 * spec.rel_tol * scale / width.max(1e-300)).max(spec.abs_tol),
        ..*spec
    };
    let inner_err = Cell::new(0.0f64);
    let subdiv = Cell::new(0usize);
    let row = |x: f64| match integrate_1d_with_breaks(|y| f(x, y), breaks, &inner_spec) {
        Ok(q) => {
            inner_err.set(inner_err.get().max(q.abs_error));
            subdiv.set(subdiv.get() + q.subdivisions);
            q.value
        }
        Err(Error::Convergence { best, err, .. }) => {
            inner_err.set(inner_err.get().max(err));
            best
        }
        Err(_) => f64::NAN,
    };
    let q = integrate_1d_with_breaks(row, breaks, &outer_spec)?;
    Ok(Quadrature {
        value: q.value,
        abs_error: q.abs_error + width * inner_err.get(),
        subdivisions: q.subdivisions + subdiv.get(),
    })
}

// ---------------------------------------------------------------------------
// Fixed Gauss-Legendre rule (used for the angular moment integrals where the
// integrand is a smooth exponential times a polynomial).

const GL_N: usize = 64;

fn gauss_legendre_64() -> &'static ([f64; GL_N], [f64; GL_N]) {
    static CACHE: OnceLock<([f64; GL_N], [f64; GL_N])> = OnceLock::new();
    CACHE.get_or_init(|| {
        let mut xs = [0.0; GL_N];
        let mut ws = [0.0; GL_N];
        let n = GL_N;
        for i in 0..n {
            // Newton iteration from the Chebyshev estimate.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            xs[i] = x;
            ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (xs, ws)
    })
}

/// Legendre P_n and its derivative at x, by upward recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// ∫ₐᵇ f(x) dx with the fixed 64-point Gauss-Legendre rule.
pub fn gl64<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let (xs, ws) = gauss_legendre_64();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut sum = 0.0;
    for i in 0..GL_N {
        sum += ws[i] * f(c + h * xs[i]);
    }
    sum * h
}

// ---------------------------------------------------------------------------
// Exponentially scaled modified Bessel function of the first kind.

/// e^{−x} I₀(x), relative error below 1e-12 for x in [0, 700].
///
/// Power series below the switch point, the asymptotic expansion above it.
pub fn bessel_i0_scaled(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::Domain(format!("bessel_i0_scaled requires x >= 0, got {x}")));
    }
    if x <= 20.0 {
        let x24 = 0.25 * x * x;
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for k in 1..=120u32 {
            term *= x24 / ((k * k) as f64);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        Ok(sum * (-x).exp())
    } else {
        // I₀(x) ~ e^x/√(2πx) Σ_k [(2k−1)!!]² / (k! (8x)^k), truncated at the
        // smallest term.
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for k in 1..=40u64 {
            let odd = (2 * k - 1) as f64;
            let next = term * odd * odd / (8.0 * x * k as f64);
            if next >= term {
                break;
            }
            term = next;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        Ok(sum / (2.0 * PI * x).sqrt())
    }
}

// ---------------------------------------------------------------------------
// Polar-angle saddle machinery.

/// Parameters of the polar-angle integrand after the change of variables
/// that maps the aperture exponent onto (p+q) sin²Θ. For a detector at
/// distance z̄: p = w²k²/(1 + 2a²w²k²/z̄²) and q = w_z²k².
#[derive(Debug, Clone, Copy)]
pub struct SaddleParams {
    pub p: f64,
    pub q: f64,
}

impl SaddleParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0) {
            return Err(Error::InvalidParam(format!("saddle p must be > 0, got {p}")));
        }
        if !(q >= 0.0) {
            return Err(Error::InvalidParam(format!("saddle q must be >= 0, got {q}")));
        }
        Ok(SaddleParams { p, q })
    }
}

/// Stationary point Θ₀ of ln(sinΘ cosΘ) − (p+q) sin²Θ on (0, π/2):
/// sin²Θ₀ = [1 + s − √(1+s²)] / (2s) with s = p + q.
///
/// The s → 0 limit is Θ₀ = π/4 (evaluated by series to avoid cancellation).
pub fn saddle_theta0(sp: &SaddleParams) -> f64 {
    let s = sp.p + sp.q;
    let sin2 = if s < 1e-4 {
        0.5 - 0.25 * s + s * s * s / 16.0
    } else {
        (1.0 + s - (1.0 + s * s).sqrt()) / (2.0 * s)
    };
    sin2.sqrt().asin()
}

/// Evaluation mode for [`theta_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMode {
    /// Quadrature of the exact Θ-form integrand.
    Numeric,
    /// Gaussian (saddle-point) value √(π/e) / (2√(p² + q/2)).
    ///
    /// Intended for p ≫ 1, p² ≫ q. Note the Gaussian expansion of the
    /// ln(sinΘcosΘ) factor carries a constant relative offset at large p:
    /// Numeric/Saddle → √(e/π) ≈ 0.9302. The offset is common to every
    /// detector factor and cancels in normalized two-particle quantities.
    Saddle,
}

/// The polar-angle integral in its stationary form,
/// (p+q) ∫₀^{π/2} dΘ sinΘcosΘ e^{−(p+q)sin²Θ} / √(p²cos²Θ + q²sin²Θ),
/// equal to ∫₀^{π/2} dθ sinθ e^{−p sin²θ − q(1−cosθ)²} by change of variable.
pub fn theta_integral(sp: &SaddleParams, mode: ThetaMode, spec: &QuadSpec) -> Result<f64> {
    match mode {
        ThetaMode::Saddle => Ok((PI / std::f64::consts::E).sqrt()
            / (2.0 * (sp.p * sp.p + 0.5 * sp.q).sqrt())),
        ThetaMode::Numeric => {
            let s = sp.p + sp.q;
            let (p2, q2) = (sp.p * sp.p, sp.q * sp.q);
            let f = |th: f64| {
                let (sin, cos) = th.sin_cos();
                let s2 = sin * sin;
                s * sin * cos * (-s * s2).exp() / (p2 * (1.0 - s2) + q2 * s2).sqrt()
            };
            Ok(integrate_1d(f, 0.0, PI / 2.0, spec)?.value)
        }
    }
}

/// ∫₀^{π/2} dθ sinθ e^{−P sin²θ − Q (1−cosθ)²}, the polar aperture integral
/// in its original variable (u = cosθ substitution).
pub fn polar_aperture_integral(p_eff: f64, q_eff: f64, spec: &QuadSpec) -> Result<f64> {
    let f = |u: f64| {
        let t = 1.0 - u;
        (-(p_eff * (1.0 - u * u) + q_eff * t * t)).exp()
    };
    Ok(integrate_1d(f, 0.0, 1.0, spec)?.value)
}

/// ∫₀^{π/2} dθ sinθ sin^{2n}θ e^{−P sin²θ − Q(1−cosθ)²}: the n-th azimuthal
/// moment entering the Bessel expansion of the two-detector angular integral.
///
/// Evaluated with a fixed Gauss-Legendre rule on the exponentially relevant
/// range (the integrand is smooth and endpoint-peaked).
pub fn polar_aperture_moment(n: u32, p_eff: f64, q_eff: f64) -> f64 {
    // The exponent P·t(2−t) + Q·t² exceeds `cut` once either term does, so
    // the smaller of the two sufficient cutoffs bounds the support.
    let cut = 45.0 + 3.0 * n as f64;
    let t_p = cut / (2.0 * p_eff.max(1e-30));
    let t_q = (cut / q_eff.max(1e-30)).sqrt();
    let t_max = t_p.min(t_q).min(1.0);
    gl64(
        |t| {
            let su2 = t * (2.0 - t); // sin²θ = 1 − u² with u = 1 − t
            let e = (-(p_eff * su2 + q_eff * t * t)).exp();
            if n == 0 {
                e
            } else {
                e * su2.powi(n as i32)
            }
        },
        0.0,
        t_max,
    )
}

/// Expand and trim an integration window around `center ± half` so that it
/// covers everywhere the (nonnegative) envelope exceeds `floor_rel` of its
/// peak. Used to widen momentum windows when the occupation factor spreads
/// the emitted spectrum beyond the monochromator width.
pub fn bracket_support<F: Fn(f64) -> f64>(
    env: F,
    center: f64,
    half: f64,
    lo_min: f64,
    floor_rel: f64,
) -> (f64, f64) {
    let mut lo = (center - half).max(lo_min);
    let mut hi = center + half;
    let step = half / 2.0;

    let grid_peak = |lo: f64, hi: f64| -> f64 {
        let n = 240;
        let mut peak = 0.0f64;
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            peak = peak.max(env(x));
        }
        peak
    };
    let mut peak = grid_peak(lo, hi);
    if !(peak > 0.0) {
        return (lo, hi);
    }
    for _ in 0..80 {
        if env(hi) > floor_rel * peak {
            hi += step;
            peak = peak.max(env(hi));
        } else {
            break;
        }
    }
    for _ in 0..80 {
        if lo > lo_min && env(lo) > floor_rel * peak {
            lo = (lo - step).max(lo_min);
            peak = peak.max(env(lo));
        } else {
            break;
        }
    }
    // Trim dead space, keeping one step of padding.
    let n: usize = 240;
    let dx = (hi - lo) / n as f64;
    let mut first = n;
    let mut last = 0usize;
    for i in 0..=n {
        if env(lo + dx * i as f64) > floor_rel * peak {
            first = first.min(i);
            last = last.max(i);
        }
    }
    if first <= last {
        let new_lo = (lo + dx * (first.saturating_sub(1)) as f64).max(lo_min);
        let new_hi = lo + dx * (last + 1).min(n) as f64;
        (new_lo, new_hi)
    } else {
        (lo, hi)
    }
}
