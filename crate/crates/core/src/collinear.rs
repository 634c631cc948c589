//! Correlators for detectors on the longitudinal z axis: the single-particle
//! distribution ρ̄⁽¹⁾, the interference term Ī, and the normalized
//! two-particle distribution C̄ = 1 − sign·Ī/(ρ̄₁ρ̄₂), each by three routes
//! (full quadrature, Gaussian angular reduction, closed form), plus the
//! detector-resolution consistency corrections and dip metrics.
//!
//! Unnormalized distributions carry their full prefactors: ρ̄⁽¹⁾ scales as
//! λ², Ī as λ⁴, and λ cancels in C̄.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::f64::consts::{E, PI};

use rayon::prelude::*;

use crate::dists::{mono_f2_axial, occupation};
use crate::numerics::{
    bracket_support, integrate_1d_with_breaks, integrate_pair, polar_aperture_integral,
    polar_aperture_moment, QuadSpec,
};
use crate::params::{BeamSpec, CorrResult, DetectorSpec, EvalMeta, Method, SourceSpec};
use crate::{Error, Result};

/// Collinear measurement: source, beam, detectors at (0,0,z̄₁) and (0,0,z̄₂).
#[derive(Debug, Clone, Copy)]
pub struct CollinearSetup {
    pub src: SourceSpec,
    pub beam: BeamSpec,
    pub det: DetectorSpec,
    pub z1: f64,
    pub z2: f64,
}

impl CollinearSetup {
    pub fn new(
        src: SourceSpec,
        beam: BeamSpec,
        det: DetectorSpec,
        z1: f64,
        z2: f64,
    ) -> Result<Self> {
        src.validate()?;
        beam.validate()?;
        det.validate()?;
        if !(z1 > 0.0 && z2 > 0.0) {
            return Err(Error::InvalidParam(format!(
                "detector distances must be > 0, got z1={z1}, z2={z2}"
            )));
        }
        Ok(CollinearSetup { src, beam, det, z1, z2 })
    }

    pub fn with_z(mut self, z1: f64, z2: f64) -> Self {
        self.z1 = z1;
        self.z2 = z2;
        self
    }

    /// Saddle-condition ratio at the beam momentum:
    /// p / max(1, w_z k₀) with p = w²k₀²/(1 + 2a²w²k₀²/z̄²), evaluated at the
    /// nearer detector. The Gaussian angular reduction needs this ≫ 1.
    pub fn condition_ratio(&self) -> f64 {
        let z = self.z1.min(self.z2);
        let wk = self.src.w * self.beam.k0;
        let p = wk * wk / (1.0 + 2.0 * (self.det.a * wk / z).powi(2));
        p / (self.src.w_z * self.beam.k0).max(1.0)
    }

    /// Far-field and approximation warnings (ratios below the conventional
    /// thresholds are reported, not rejected).
    pub fn warnings(&self) -> Vec<String> {
        let mut out = crate::params::Geometry::Collinear { z1: self.z1, z2: self.z2 }
            .far_field_warnings(&self.src, &self.det, 20.0);
        let cond = self.condition_ratio();
        if cond < 25.0 {
            out.push(format!("angular saddle condition ratio {cond:.1} below 25"));
        }
        if !self.beam.well_monochromatized(0.25) {
            out.push(format!(
                "beam not well-monochromatized: dk_z/k0 = {:.3}",
                self.beam.dk_z / self.beam.k0
            ));
        }
        out
    }
}

/// Occupation that treats the Bose domain edge as an empty state instead of
/// erroring; quadrature envelopes and integrands must stay total.
fn occupation_or_zero(k: f64, src: &SourceSpec) -> f64 {
    occupation(0.5 * k * k / src.mass, src).unwrap_or(0.0)
}

/// Integration window in k covering where N·f² exceeds 1e-10 of its peak,
/// starting from k₀ ± n·δk_z and widened by a bracketing scan (needed when
/// the occupation broadens or truncates the spectrum).
pub fn spectral_window(src: &SourceSpec, beam: &BeamSpec, spec: &QuadSpec) -> (f64, f64) {
    let half = spec.k_window_sigmas * beam.dk_z;
    let env = |k: f64| occupation_or_zero(k, src) * mono_f2_axial(k, beam);
    bracket_support(env, beam.k0, half, 1e-6 * beam.k0, 1e-10)
}

/// Interior quadrature break points: the Fermi edge, where the occupation
/// becomes a near-step at low temperature.
fn window_breaks(src: &SourceSpec, lo: f64, hi: f64) -> Vec<f64> {
    let mut breaks = vec![lo, hi];
    if src.mu > 0.0 {
        let kf = (2.0 * src.mass * src.mu).sqrt();
        if kf > lo && kf < hi {
            breaks.insert(1, kf);
        }
    }
    breaks
}

fn n_f2(k: f64, src: &SourceSpec, beam: &BeamSpec) -> f64 {
    occupation_or_zero(k, src) * mono_f2_axial(k, beam)
}

/// Single-particle distribution ρ̄⁽¹⁾ at a detector distance `zbar`
/// (units: number density, λ²-scaled).
pub fn rho1(setup: &CollinearSetup, zbar: f64, method: Method, spec: &QuadSpec) -> Result<CorrResult> {
    let src = &setup.src;
    let beam = &setup.beam;
    let lam2 = src.coupling * src.coupling;
    let m = src.mass;
    let mut meta = EvalMeta { warnings: setup.warnings(), ..EvalMeta::default() };

    match method {
        Method::Analytic => {
            // λ² m² √(π/e) N(ω_{k0}) / [(2π)⁵ w² z̄² δk_⊥²]
            let n0 = occupation(0.5 * beam.k0 * beam.k0 / m, src)?;
            let value = lam2 * m * m * (PI / E).sqrt() * n0
                / ((2.0 * PI).powi(5)
                    * src.w
                    * src.w
                    * zbar
                    * zbar
                    * beam.dk_perp
                    * beam.dk_perp);
            Ok(CorrResult { value, method, abs_error: 0.0, meta })
        }
        Method::GaussianApprox => {
            let (lo, hi) = spectral_window(src, beam, spec);
            let breaks = window_breaks(src, lo, hi);
            let q = integrate_1d_with_breaks(|k| n_f2(k, src, beam), &breaks, spec)?;
            let pref = lam2 * m * m * (PI / E).sqrt()
                / ((2.0 * PI).powi(4) * src.w * src.w * zbar * zbar);
            meta.subdivisions = q.subdivisions;
            Ok(CorrResult {
                value: pref * q.value,
                method,
                abs_error: pref * q.abs_error,
                meta,
            })
        }
        Method::Numeric => {
            let (lo, hi) = spectral_window(src, beam, spec);
            let breaks = window_breaks(src, lo, hi);
            let aw = setup.det.a * src.w;
            let w2 = src.w * src.w;
            let wz2 = src.w_z * src.w_z;
            let inner_spec = spec.with_rel_tol(0.1 * spec.rel_tol);
            let subdiv = Cell::new(0usize);
            let f = |k: f64| {
                let den = 1.0 + 2.0 * (aw * k / zbar).powi(2);
                let p_eff = w2 * k * k / den;
                let q_eff = wz2 * k * k;
                let ang = polar_aperture_integral(p_eff, q_eff, &inner_spec).unwrap_or(0.0);
                subdiv.set(subdiv.get() + 1);
                k * k * n_f2(k, src, beam) / den * ang
            };
            let q = integrate_1d_with_breaks(f, &breaks, spec)?;
            let pref = lam2 * 2.0 * m * m / ((2.0 * PI).powi(4) * zbar * zbar);
            meta.subdivisions = q.subdivisions;
            Ok(CorrResult {
                value: pref * q.value,
                method,
                abs_error: pref * q.abs_error,
                meta,
            })
        }
    }
}

/// The two-detector angular factor after azimuthal reduction:
/// Φ = ∫∫ dθ₁dθ₂ sinθ₁ sinθ₂ e^{−P₁sin²θ₁ − Q₁(1−cosθ₁)² − (1↔2)} I₀(x sinθ₁ sinθ₂)
/// with x = c k₁ k₂.
///
/// Summed as the Bessel series Σₙ (x/2)^{2n}/(n!)² Mₙ(1) Mₙ(2): every term is
/// a product of nonnegative polar moments, so the expansion of the exact
/// azimuthal integral converges monotonically. Terms are built recursively
/// from ratios to avoid overflow of the raw (x/2)^{2n}/(n!)² coefficients.
fn theta_pair_series(
    p1k2: f64,
    q1k2: f64,
    p2k2: f64,
    q2k2: f64,
    x: f64,
    max_terms: &Cell<usize>,
) -> f64 {
    let mut m1_prev = polar_aperture_moment(0, p1k2, q1k2);
    let mut m2_prev = polar_aperture_moment(0, p2k2, q2k2);
    let mut sum = m1_prev * m2_prev;
    if x == 0.0 || sum == 0.0 {
        return sum;
    }
    let mut term = sum;
    for n in 1..=80u32 {
        let m1 = polar_aperture_moment(n, p1k2, q1k2);
        let m2 = polar_aperture_moment(n, p2k2, q2k2);
        if m1 <= 0.0 || m2 <= 0.0 || m1_prev <= 0.0 || m2_prev <= 0.0 {
            break;
        }
        let ratio = (0.5 * x / n as f64).powi(2) * (m1 / m1_prev) * (m2 / m2_prev);
        term *= ratio;
        sum += term;
        max_terms.set(max_terms.get().max(n as usize));
        if term < 1e-13 * sum {
            break;
        }
        m1_prev = m1;
        m2_prev = m2;
    }
    sum
}

/// Same angular factor by direct 2D quadrature of the rebalanced integrand
/// e^{−P₁(1−u₁²) − Q₁(1−u₁)² − (1↔2) + x s₁ s₂} · [e^{−xs₁s₂} I₀(x s₁ s₂)],
/// which stays bounded however large the azimuthal coupling gets.
/// Used to validate the series path.
pub fn theta_pair_direct(
    p1k2: f64,
    q1k2: f64,
    p2k2: f64,
    q2k2: f64,
    x: f64,
    spec: &QuadSpec,
) -> Result<f64> {
    let inner_spec = spec.with_rel_tol(0.3 * spec.rel_tol);
    let outer = |u1: f64| {
        let s1 = (1.0 - u1 * u1).max(0.0).sqrt();
        let t1 = 1.0 - u1;
        let e1 = p1k2 * (1.0 - u1 * u1) + q1k2 * t1 * t1;
        let inner = |u2: f64| {
            let s2 = (1.0 - u2 * u2).max(0.0).sqrt();
            let t2 = 1.0 - u2;
            let xs = x * s1 * s2;
            let expo = -e1 - (p2k2 * (1.0 - u2 * u2) + q2k2 * t2 * t2) + xs;
            expo.exp() * crate::numerics::bessel_i0_scaled(xs).unwrap_or(0.0)
        };
        integrate_1d_with_breaks(inner, &[0.0, 1.0], &inner_spec).map(|q| q.value).unwrap_or(0.0)
    };
    Ok(integrate_1d_with_breaks(outer, &[0.0, 1.0], spec)?.value)
}

/// Interference term Ī(z̄₁, z̄₂) (λ⁴-scaled).
///
/// The k₁↔k₂-symmetrized real integrand (cos[(k₁−k₂)(z̄₁−z̄₂)]) is
/// integrated, which removes the imaginary part identically.
pub fn interference(setup: &CollinearSetup, method: Method, spec: &QuadSpec) -> Result<CorrResult> {
    let src = &setup.src;
    let beam = &setup.beam;
    let det = &setup.det;
    let (z1, z2) = (setup.z1, setup.z2);
    let dz = z1 - z2;
    let lam4 = src.coupling.powi(4);
    let m = src.mass;
    let w = src.w;
    let mut meta = EvalMeta { warnings: setup.warnings(), ..EvalMeta::default() };

    match method {
        Method::Analytic => {
            let n0 = occupation(0.5 * beam.k0 * beam.k0 / m, src)?;
            let lateral =
                1.0 + (det.a * w * beam.k0).powi(2) * (1.0 / (z1 * z1) + 1.0 / (z2 * z2));
            let dkd = 2.0 * beam.dk_z * det.d;
            let longi = (1.0 + dkd * dkd).sqrt();
            let decay = (-dz * dz
                / (1.0 / (beam.dk_z * beam.dk_z) + 4.0 * det.d * det.d))
                .exp();
            let value = lam4 * m.powi(4) * PI * n0 * n0 * decay
                / (2.0
                    * E
                    * (2.0 * PI).powi(10)
                    * w.powi(4)
                    * z1
                    * z1
                    * z2
                    * z2
                    * beam.dk_perp.powi(4)
                    * lateral
                    * longi);
            Ok(CorrResult { value, method, abs_error: 0.0, meta })
        }
        Method::GaussianApprox => {
            let (lo, hi) = spectral_window(src, beam, spec);
            let breaks = window_breaks(src, lo, hi);
            let aw2 = (det.a * w).powi(2);
            let half_inv_z = 0.5 / (z1 * z1) + 0.5 / (z2 * z2);
            let d2 = det.d * det.d;
            let f = |k1: f64, k2: f64| {
                let dk = k1 - k2;
                n_f2(k1, src, beam) * n_f2(k2, src, beam)
                    * (-dk * dk * d2).exp()
                    * (dk * dz).cos()
                    / (1.0 + aw2 * (k1 * k1 + k2 * k2) * half_inv_z)
            };
            // Positive-kernel magnitude for the absolute floor.
            let s = integrate_1d_with_breaks(|k| n_f2(k, src, beam), &breaks, spec)?;
            let q = integrate_pair(f, &breaks, s.value * s.value, spec)?;
            let pref = lam4 * m.powi(4) * PI
                / (2.0 * E * (2.0 * PI).powi(8) * w.powi(4) * z1 * z1 * z2 * z2);
            meta.subdivisions = q.subdivisions;
            Ok(CorrResult {
                value: pref * q.value,
                method,
                abs_error: pref * q.abs_error,
                meta,
            })
        }
        Method::Numeric => {
            let (lo, hi) = spectral_window(src, beam, spec);
            let breaks = window_breaks(src, lo, hi);
            let w2 = w * w;
            let wz2 = src.w_z * src.w_z;
            let a2w4 = det.a * det.a * w2 * w2;
            let d2 = det.d * det.d;
            let bessel_terms = Cell::new(0usize);
            // With a = 0 the angular factor splits into cached single-detector
            // moments M₀(k₁)M₀(k₂).
            let cache: RefCell<HashMap<u64, f64>> = RefCell::new(HashMap::new());
            let m0_cached = |k: f64| {
                let key = k.to_bits();
                if let Some(v) = cache.borrow().get(&key) {
                    return *v;
                }
                let v = polar_aperture_moment(0, w2 * k * k, wz2 * k * k);
                cache.borrow_mut().insert(key, v);
                v
            };
            let f = |k1: f64, k2: f64| {
                let s12 = k1 * k1 + k2 * k2;
                let den1 = 1.0 + det.a * det.a * w2 * s12 / (z1 * z1);
                let den2 = 1.0 + det.a * det.a * w2 * s12 / (z2 * z2);
                let ang = if det.a == 0.0 {
                    m0_cached(k1) * m0_cached(k2)
                } else {
                    let g = a2w4
                        * (1.0 / (z1 * z1 + det.a * det.a * w2 * s12)
                            + 1.0 / (z2 * z2 + det.a * det.a * w2 * s12));
                    let p1 = w2 - 0.5 * g * k1 * k1;
                    let p2 = w2 - 0.5 * g * k2 * k2;
                    let x = g * k1 * k2 * k1 * k2; // c·k₁k₂ with c = g k₁k₂
                    theta_pair_series(
                        p1 * k1 * k1,
                        wz2 * k1 * k1,
                        p2 * k2 * k2,
                        wz2 * k2 * k2,
                        x,
                        &bessel_terms,
                    )
                };
                let dk = k1 - k2;
                k1 * k1 * k2 * k2 * n_f2(k1, src, beam) * n_f2(k2, src, beam)
                    / (den1 * den2)
                    * (-dk * dk * d2).exp()
                    * (dk * dz).cos()
                    * ang
            };
            // Magnitude of the positive (cos → 1, d → 0) kernel for the floor.
            let srow = integrate_1d_with_breaks(
                |k| k * k * n_f2(k, src, beam) * m0_cached(k),
                &breaks,
                spec,
            )?;
            let q = integrate_pair(f, &breaks, srow.value * srow.value, spec)?;
            let pref = lam4 * 2.0 * m.powi(4) / ((2.0 * PI).powi(8) * z1 * z1 * z2 * z2);
            meta.subdivisions = q.subdivisions;
            meta.bessel_terms = bessel_terms.get();
            Ok(CorrResult {
                value: pref * q.value,
                method,
                abs_error: pref * q.abs_error,
                meta,
            })
        }
    }
}

/// Normalized two-particle distribution
/// C̄(z̄₁, z̄₂) = 1 − sign · Ī/(ρ̄⁽¹⁾(z̄₁) ρ̄⁽¹⁾(z̄₂)), sign = +1 fermion,
/// −1 boson, 0 classical. λ cancels exactly.
pub fn c_normalized(setup: &CollinearSetup, method: Method, spec: &QuadSpec) -> Result<CorrResult> {
    let sign = setup.src.statistics.exchange_sign();
    if method == Method::Analytic {
        let value = c_analytic(setup);
        return Ok(CorrResult {
            value,
            method,
            abs_error: 0.0,
            meta: EvalMeta { warnings: setup.warnings(), ..EvalMeta::default() },
        });
    }
    let r1 = rho1(setup, setup.z1, method, spec)?;
    let r2 = rho1(setup, setup.z2, method, spec)?;
    let i = interference(setup, method, spec)?;
    let denom = r1.value * r2.value;
    if denom <= 0.0 {
        return Err(Error::Domain(
            "single-particle distribution vanishes; C̄ undefined".into(),
        ));
    }
    let ratio = i.value / denom;
    let value = 1.0 - sign * ratio;
    // First-order error propagation, conservative sum.
    let abs_error = (i.abs_error
        + ratio.abs() * (r1.abs_error * r2.value.abs() + r2.abs_error * r1.value.abs()))
        / denom;
    let mut meta = i.meta.clone();
    meta.subdivisions += r1.meta.subdivisions + r2.meta.subdivisions;
    Ok(CorrResult { value, method, abs_error, meta })
}

/// Closed-form normalized two-particle distribution
/// C̄ = 1 − sign/2 · [1 + a²w²k₀²(1/z̄₁² + 1/z̄₂²)]⁻¹ [1 + 4δk_z²d²]^{−1/2}
///     exp[−(z̄₁−z̄₂)²/(1/δk_z² + 4d²)].
pub fn c_analytic(setup: &CollinearSetup) -> f64 {
    let sign = setup.src.statistics.exchange_sign();
    1.0 - sign * analytic_dip(setup)
}

fn analytic_dip(setup: &CollinearSetup) -> f64 {
    let (z1, z2) = (setup.z1, setup.z2);
    let awk = setup.det.a * setup.src.w * setup.beam.k0;
    let lateral = 1.0 + awk * awk * (1.0 / (z1 * z1) + 1.0 / (z2 * z2));
    let dkd = 2.0 * setup.beam.dk_z * setup.det.d;
    let longi = (1.0 + dkd * dkd).sqrt();
    let dz = z1 - z2;
    let decay =
        (-dz * dz / (1.0 / (setup.beam.dk_z * setup.beam.dk_z) + 4.0 * setup.det.d * setup.det.d))
            .exp();
    0.5 * decay / (lateral * longi)
}

/// Lateral and longitudinal coherence lengths (z̄/(√2 w k₀), 1/(2 δk_z)):
/// the detector sizes a, d act as points well below these scales.
/// Uses the nearer detector distance.
pub fn coherence_lengths(setup: &CollinearSetup) -> (f64, f64) {
    let z = setup.z1.min(setup.z2);
    (
        z / (2.0f64.sqrt() * setup.src.w * setup.beam.k0),
        1.0 / (2.0 * setup.beam.dk_z),
    )
}

/// Detector-resolution consistency-correction report.
///
/// The refined saddle treatment divides each ρ̄⁽¹⁾ by 1 + (a²/z̄²)(k₀²/δk_⊥²)
/// and inflates the interference denominator by the matching per-detector
/// factors; written in that per-detector product form, the corrections cancel
/// identically in C̄. The additive denominator form
/// 1 + a²w²k₀²(1/z̄₁²+1/z̄₂²)(1 + 1/(w²δk_⊥²)) agrees with the product form to
/// first order in (a/z̄)²; the report carries the spread between the two.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CorrectionReport {
    /// Saddle-curvature factor Λ at k₁ = k₂ = k₀ on the forward shell:
    /// 1 + 1/(2 w² δk_⊥²).
    pub lambda_at_k0: f64,
    pub rho_divisor_z1: f64,
    pub rho_divisor_z2: f64,
    pub interference_denominator_uncorrected: f64,
    pub interference_denominator_product_form: f64,
    pub interference_denominator_additive_form: f64,
    pub c_uncorrected: f64,
    pub c_corrected: f64,
    /// c_corrected − c_uncorrected; zero up to rounding.
    pub residual: f64,
    /// Relative spread between the product and additive denominator forms,
    /// O((a/z̄)⁴).
    pub form_spread: f64,
}

pub fn consistency_corrections(setup: &CollinearSetup) -> CorrectionReport {
    let w = setup.src.w;
    let k0 = setup.beam.k0;
    let (z1, z2) = (setup.z1, setup.z2);
    let a = setup.det.a;
    let dkp = setup.beam.dk_perp;

    let lambda_at_k0 = 1.0 + 1.0 / (2.0 * w * w * dkp * dkp);
    let alpha1 = (a * k0 / (z1 * dkp)).powi(2);
    let alpha2 = (a * k0 / (z2 * dkp)).powi(2);
    let big_a = (a * w * k0).powi(2) * (1.0 / (z1 * z1) + 1.0 / (z2 * z2));
    let eps = 1.0 / (w * w * dkp * dkp);

    let b_unc = 1.0 + big_a;
    let b_product = b_unc * (1.0 + alpha1) * (1.0 + alpha2);
    let b_additive = 1.0 + big_a * (1.0 + eps);

    let sign = setup.src.statistics.exchange_sign();
    let dkd = 2.0 * setup.beam.dk_z * setup.det.d;
    let longi = (1.0 + dkd * dkd).sqrt();
    let dz = z1 - z2;
    let decay =
        (-dz * dz / (1.0 / (setup.beam.dk_z * setup.beam.dk_z) + 4.0 * setup.det.d * setup.det.d))
            .exp();

    // Corrected chain: Ī gets denominator b_product in place of b_unc, each
    // ρ̄ is divided by its (1 + αᵢ); the factors cancel in the ratio.
    let dip_unc = 0.5 * decay / (b_unc * longi);
    let i_corr_over_i_unc = b_unc / b_product;
    let rho_product_corr = 1.0 / ((1.0 + alpha1) * (1.0 + alpha2));
    let dip_corr = dip_unc * i_corr_over_i_unc / rho_product_corr;

    let c_uncorrected = 1.0 - sign * dip_unc;
    let c_corrected = 1.0 - sign * dip_corr;

    CorrectionReport {
        lambda_at_k0,
        rho_divisor_z1: 1.0 + alpha1,
        rho_divisor_z2: 1.0 + alpha2,
        interference_denominator_uncorrected: b_unc,
        interference_denominator_product_form: b_product,
        interference_denominator_additive_form: b_additive,
        c_uncorrected,
        c_corrected,
        residual: c_corrected - c_uncorrected,
        form_spread: (b_product - b_additive).abs() / b_additive,
    }
}

/// Dip depth 1 − C̄ at zero detector separation (z̄₁ = z̄₂ = z̄, the setup's
/// z̄₂ is taken as the reference distance).
pub fn dip_depth(setup: &CollinearSetup, method: Method, spec: &QuadSpec) -> Result<f64> {
    let s = setup.with_z(setup.z2, setup.z2);
    Ok(1.0 - c_normalized(&s, method, spec)?.value)
}

/// Dip half-width: the separation s at which the depth falls to depth(0)/e.
///
/// The closed form is solved by bisection; the quadrature methods are
/// evaluated on a parallel grid of separations and the crossing is located
/// on a log-depth interpolant (the depth decays exponentially in s²).
pub fn dip_half_width(setup: &CollinearSetup, method: Method, spec: &QuadSpec) -> Result<f64> {
    let z = setup.z2;
    let depth0 = dip_depth(setup, method, spec)?;
    if depth0 <= 0.0 {
        return Err(Error::Domain("no dip at zero separation".into()));
    }
    let target = depth0 / E;
    if method == Method::Analytic {
        let mut lo = 0.0f64;
        let mut hi = (1.0 / (setup.beam.dk_z * setup.beam.dk_z)
            + 4.0 * setup.det.d * setup.det.d)
            .sqrt()
            * 4.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let d = 1.0 - c_analytic(&setup.with_z(z + mid, z));
            if d > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(0.5 * (lo + hi));
    }
    // Quadrature methods: grid in steps of a quarter of the closed-form
    // width, evaluated in parallel, then log-linear interpolation.
    let guess = (1.0 / (setup.beam.dk_z * setup.beam.dk_z) + 4.0 * setup.det.d * setup.det.d)
        .sqrt();
    let step = 0.25 * guess;
    let max_pts = 40;
    let depths: Vec<(f64, f64)> = (1..=max_pts)
        .into_par_iter()
        .map(|j| {
            let s = step * j as f64;
            let d = c_normalized(&setup.with_z(z + s, z), method, spec)
                .map(|c| 1.0 - c.value)
                .unwrap_or(f64::NAN);
            (s, d)
        })
        .collect();
    let mut prev = (0.0f64, depth0);
    for (s, d) in depths {
        if !d.is_finite() {
            return Err(Error::Validation("half-width grid evaluation failed".into()));
        }
        if d <= target {
            // Interpolate ln(depth) between the bracketing grid points.
            let (s0, d0) = prev;
            let frac = (d0.ln() - target.ln()) / (d0.ln() - d.ln());
            return Ok(s0 + frac * (s - s0));
        }
        prev = (s, d);
    }
    Err(Error::Validation("dip did not fall to depth/e within the scan range".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Statistics;

    fn quad() -> QuadSpec {
        QuadSpec::default().with_rel_tol(1e-8)
    }

    /// Fig. 2 source: μ = (k₀+δk_z)²/2 sits just above the window.
    fn fig_setup(a: f64, d: f64) -> CollinearSetup {
        let src = SourceSpec::new(1.0, 0.05, 5.0, 210.125).unwrap();
        let beam = BeamSpec::new(20.0, 0.5, 0.5).unwrap();
        CollinearSetup::new(src, beam, DetectorSpec::new(a, d).unwrap(), 160.0, 160.0).unwrap()
    }

    /// Same beam with the Fermi level far above the window, where the
    /// occupation is flat and the closed forms are in their validity domain.
    fn benign_setup(a: f64, d: f64) -> CollinearSetup {
        let src = SourceSpec::new(1.0, 0.05, 5.0, 288.0).unwrap();
        let beam = BeamSpec::new(20.0, 0.5, 0.5).unwrap();
        CollinearSetup::new(src, beam, DetectorSpec::new(a, d).unwrap(), 160.0, 160.0).unwrap()
    }

    #[test]
    fn rho1_scales_as_inverse_z_squared() {
        let s = benign_setup(0.0, 0.0);
        let q = quad();
        for method in [Method::Analytic, Method::GaussianApprox, Method::Numeric] {
            let r1 = rho1(&s, 160.0, method, &q).unwrap().value;
            let r2 = rho1(&s, 320.0, method, &q).unwrap().value;
            assert!(
                (r1 / r2 - 4.0).abs() < 1e-6,
                "{method:?}: ratio {}",
                r1 / r2
            );
        }
    }

    #[test]
    fn rho1_numeric_carries_the_gaussian_offset_against_analytic() {
        // The Gaussian angular reduction inflates ρ̄ by √(π/e); with a flat
        // occupation the numeric and closed-form results agree after that
        // factor is divided out.
        let s = benign_setup(0.0, 0.0);
        let q = quad();
        let num = rho1(&s, 160.0, Method::Numeric, &q).unwrap().value;
        let ana = rho1(&s, 160.0, Method::Analytic, &q).unwrap().value;
        let gauss = rho1(&s, 160.0, Method::GaussianApprox, &q).unwrap().value;
        assert!(
            (num * (PI / E).sqrt() / ana - 1.0).abs() < 0.01,
            "num·√(π/e)/ana = {}",
            num * (PI / E).sqrt() / ana
        );
        // Gaussian-approx equals analytic up to the occupation window factor
        // (flat here) and quadrature noise.
        assert!((gauss / ana - 1.0).abs() < 1e-6, "gauss/ana = {}", gauss / ana);
    }

    #[test]
    fn rho1_empty_band_is_dead() {
        let mut s = benign_setup(0.0, 0.0);
        s.src.mu = 100.0; // Fermi edge at k ≈ 14, window at 20
        s.src.beta = 50.0;
        let q = quad();
        let num = rho1(&s, 160.0, Method::Numeric, &q).unwrap().value;
        let ana_full = {
            let mut s2 = s;
            s2.src.mu = 288.0;
            rho1(&s2, 160.0, Method::Analytic, &q).unwrap().value
        };
        assert!(num < 1e-12 * ana_full, "num/full = {}", num / ana_full);
    }

    #[test]
    fn interference_floor_is_half_of_rho_squared_per_method() {
        // At z̄₁ = z̄₂, a = d = 0 the ratio Ī/(ρ̄ρ̄) is exactly 1/2 within
        // each quadrature method; temperature and window truncation cancel.
        let q = quad();
        for setup in [fig_setup(0.0, 0.0), benign_setup(0.0, 0.0)] {
            for method in [Method::GaussianApprox, Method::Numeric] {
                let i = interference(&setup, method, &q).unwrap().value;
                let r = rho1(&setup, 160.0, method, &q).unwrap().value;
                let ratio = i / (r * r);
                assert!(
                    (ratio - 0.5).abs() < 2e-4,
                    "{method:?}: ratio {ratio}"
                );
            }
        }
    }

    #[test]
    fn interference_gauss_matches_analytic_in_validity_domain() {
        let q = quad();
        for (a, d, dz) in [(0.0, 0.0, 0.0), (2.0, 1.0, 1.0), (5.0, 5.0, 2.0)] {
            let s = benign_setup(a, d).with_z(160.0 + dz, 160.0);
            let ig = interference(&s, Method::GaussianApprox, &q).unwrap().value;
            let ia = interference(&s, Method::Analytic, &q).unwrap().value;
            assert!(
                ((ig - ia) / ia).abs() < 0.02,
                "a={a} d={d} dz={dz}: gauss/analytic = {}",
                ig / ia
            );
        }
    }

    #[test]
    fn interference_dies_at_large_separation() {
        let s = benign_setup(0.0, 0.0).with_z(160.0 + 20.0, 160.0); // 10/δk_z
        let q = quad();
        let ia = interference(&s, Method::Analytic, &q).unwrap().value;
        let r = rho1(&s, 160.0, Method::Analytic, &q).unwrap().value;
        assert!(ia / (r * r) < 1e-10);
        // The quadrature route returns a value consistent with zero at its
        // reported error.
        let ig = interference(&s, Method::GaussianApprox, &q).unwrap();
        let rg = rho1(&s, 160.0, Method::GaussianApprox, &q).unwrap().value;
        assert!(ig.value.abs() / (rg * rg) < 1e-7);
        assert!(ig.value.abs() <= ig.abs_error.max(1e-300) * 10.0);
    }

    #[test]
    fn c_analytic_reference_points() {
        // Floor: a = d = 0 at equal distances.
        let s0 = benign_setup(0.0, 0.0);
        assert_eq!(c_analytic(&s0), 0.5);
        // Δz̄ = 2w with δk_z = 0.5: C̄ = 1 − e⁻¹/2.
        let s1 = s0.with_z(162.0, 160.0);
        assert!((c_analytic(&s1) - (1.0 - 0.5 * (-1.0f64).exp())).abs() < 1e-15);
        // d = 5w: depth 1/(2√26).
        let s2 = benign_setup(0.0, 5.0);
        assert!((c_analytic(&s2) - (1.0 - 0.5 / 26.0f64.sqrt())).abs() < 1e-15);
        // a = 5w at z̄ = 160: lateral factor 1/(1 + 2(awk₀/z̄)²).
        let s3 = benign_setup(5.0, 0.0);
        let lat = 1.0 + 2.0 * (5.0 * 20.0 / 160.0f64).powi(2);
        assert!((c_analytic(&s3) - (1.0 - 0.5 / lat)).abs() < 1e-15);
    }

    #[test]
    fn boson_mirror_and_classical_flat() {
        let mut s = benign_setup(0.0, 3.0).with_z(161.0, 160.0);
        let cf = c_analytic(&s);
        s.src.statistics = Statistics::Boson;
        let cb = c_analytic(&s);
        assert!((cb + cf - 2.0).abs() < 1e-15);
        // The dip floor mirrors to 1.5 for bosons.
        let mut s0 = benign_setup(0.0, 0.0);
        s0.src.statistics = Statistics::Boson;
        assert_eq!(c_analytic(&s0), 1.5);
        s0.src.statistics = Statistics::Classical;
        assert_eq!(c_analytic(&s0), 1.0);
    }

    #[test]
    fn lambda_cancels_in_normalized_output() {
        let q = quad();
        let s = benign_setup(0.0, 0.0).with_z(161.0, 160.0);
        let mut s10 = s;
        s10.src.coupling = 10.0;
        let r = rho1(&s, 160.0, Method::GaussianApprox, &q).unwrap().value;
        let r10 = rho1(&s10, 160.0, Method::GaussianApprox, &q).unwrap().value;
        assert!((r10 / r - 100.0).abs() < 1e-9);
        let i = interference(&s, Method::GaussianApprox, &q).unwrap().value;
        let i10 = interference(&s10, Method::GaussianApprox, &q).unwrap().value;
        assert!((i10 / i - 1e4).abs() < 1e-5 * 1e4);
        let c = c_normalized(&s, Method::GaussianApprox, &q).unwrap().value;
        let c10 = c_normalized(&s10, Method::GaussianApprox, &q).unwrap().value;
        assert!((c - c10).abs() < 1e-12);
    }

    #[test]
    fn exchange_symmetry_of_c() {
        let q = quad();
        let s = benign_setup(2.0, 1.0);
        let c12 = c_normalized(&s.with_z(158.0, 161.0), Method::GaussianApprox, &q)
            .unwrap()
            .value;
        let c21 = c_normalized(&s.with_z(161.0, 158.0), Method::GaussianApprox, &q)
            .unwrap()
            .value;
        assert!((c12 - c21).abs() < 1e-9);
    }

    #[test]
    fn coherence_length_values() {
        let s = benign_setup(0.0, 0.0);
        let (lat, lon) = coherence_lengths(&s);
        assert!((lat - 160.0 / (2.0f64.sqrt() * 20.0)).abs() < 1e-12); // 4√2
        assert!((lon - 1.0).abs() < 1e-15);
        let s2 = s.with_z(320.0, 320.0);
        let (lat2, _) = coherence_lengths(&s2);
        assert!((lat2 / lat - 2.0).abs() < 1e-12);
    }

    #[test]
    fn consistency_corrections_cancel() {
        let setups = [
            benign_setup(5.0, 0.0),
            benign_setup(3.0, 2.0).with_z(150.0, 170.0),
            fig_setup(1.0, 4.0).with_z(164.0, 160.0),
        ];
        for s in setups {
            let rep = consistency_corrections(&s);
            assert!(
                rep.residual.abs() < 1e-12,
                "residual {} for {s:?}",
                rep.residual
            );
            assert!((rep.c_uncorrected - c_analytic(&s)).abs() < 1e-15);
        }
        // a = 0: every correction factor is exactly 1.
        let rep0 = consistency_corrections(&benign_setup(0.0, 2.0));
        assert_eq!(rep0.rho_divisor_z1, 1.0);
        assert_eq!(rep0.interference_denominator_product_form, 1.0);
        assert_eq!(rep0.interference_denominator_additive_form, 1.0);
        // w δk_⊥ ≫ 1: corrections fade.
        let mut s = benign_setup(5.0, 0.0);
        s.beam.dk_perp = 50.0;
        let rep = consistency_corrections(&s);
        assert!((rep.rho_divisor_z1 - 1.0).abs() < 1e-3);
        assert!((rep.lambda_at_k0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn analytic_half_width_follows_the_closed_form() {
        let q = quad();
        // d = 0: width = 1/δk_z = 2w.
        let s = benign_setup(0.0, 0.0);
        let w0 = dip_half_width(&s, Method::Analytic, &q).unwrap();
        assert!((w0 - 2.0).abs() < 1e-6, "got {w0}");
        // d = 5w: width = √(1/δk_z² + 4d²) = √104.
        let s5 = benign_setup(0.0, 5.0);
        let w5 = dip_half_width(&s5, Method::Analytic, &q).unwrap();
        assert!((w5 - 104.0f64.sqrt()).abs() < 1e-6, "got {w5}");
    }

    #[test]
    fn theta_pair_series_matches_direct_quadrature() {
        let q = QuadSpec::default().with_rel_tol(1e-9);
        let terms = Cell::new(0usize);
        // Production-like: P ~ w²k², weak azimuthal coupling.
        let cases = [
            (0.78 * 400.0, 0.0025 * 400.0, 0.75 * 441.0, 0.0025 * 441.0, 0.462),
            (312.0, 1.0, 330.0, 1.1, 180.0),
            (400.0, 0.0, 400.0, 0.0, 0.0),
        ];
        for (p1, q1, p2, q2, x) in cases {
            let series = theta_pair_series(p1, q1, p2, q2, x, &terms);
            let direct = theta_pair_direct(p1, q1, p2, q2, x, &q).unwrap();
            assert!(
                ((series - direct) / direct).abs() < 1e-6,
                "x={x}: series {series:.10e} direct {direct:.10e}"
            );
        }
        // 25-digit reference for the first case.
        let series = theta_pair_series(0.78 * 400.0, 0.0025 * 400.0, 0.75 * 441.0, 0.0025 * 441.0, 0.462, &terms);
        let reference = 2.4301840064353e-6;
        assert!(((series - reference) / reference).abs() < 1e-9, "{series:.12e}");
    }

    #[test]
    fn numeric_c_hits_the_dip_floor_on_fig_parameters() {
        let q = QuadSpec::default().with_rel_tol(1e-6);
        let c = c_normalized(&fig_setup(0.0, 0.0), Method::Numeric, &q).unwrap();
        assert!((c.value - 0.5).abs() < 0.005, "got {}", c.value);
        assert!(c.in_fermion_band());
        assert_eq!(c.meta.imag_residual, 0.0);
    }
}
