//! Far-field single-particle wave function of the emitted beam and a
//! radial-integral validator.
//!
//! Far from the source, a particle of momentum k in the source propagates as
//! an amplitude-modulated spherical wave
//!
//!   φ̂_k(r) ≈ m√(2π) θ(k_z) f(k r̂) g̃(k r̂ − k) e^{ikr} / (i r),
//!
//! i.e. modulus m√(2π) f g̃ / r and phase kr − π/2. The validator evaluates
//! the underlying radial integral
//!
//!   −(1/(√(2π) r)) ∫ dp p f(p r̂) g̃(p r̂ − k) e^{ipr} / (ε_p − ω_k − iη)
//!
//! at a decreasing sequence of regulators η and extrapolates η → 0, which
//! must reproduce the closed form in the far field.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::dists::{mono_f, window_g_tilde, Vec3};
use crate::numerics::{bracket_support, integrate_1d_with_breaks, QuadSpec};
use crate::params::{BeamSpec, SourceSpec};
use crate::{Error, Result};

/// Far-field amplitude φ̂_k at distance r along the unit direction `rhat`.
/// Zero for k_z ≤ 0 (nothing is emitted backwards).
pub fn farfield_amplitude(
    k: Vec3,
    rhat: Vec3,
    r: f64,
    src: &SourceSpec,
    beam: &BeamSpec,
) -> Complex64 {
    if k.z <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let kmag = k.norm();
    let krhat = rhat.scale(kmag);
    let modulus = src.mass * (2.0 * PI).sqrt() * mono_f(krhat, beam)
        * window_g_tilde(krhat.sub(k), src)
        / r;
    Complex64::from_polar(modulus, kmag * r - 0.5 * PI)
}

/// Outcome of the η-extrapolated radial-integral validation.
#[derive(Debug, Clone)]
pub struct RadialCheck {
    /// Quadratic η → 0 extrapolation of the regularized integral.
    pub extrapolated: Complex64,
    /// Linear extrapolation from the two smallest regulators.
    pub linear: Complex64,
    pub farfield: Complex64,
    /// |extrapolated − farfield| / |farfield|.
    pub rel_deviation: f64,
    /// Regulator sequence used (energy units).
    pub etas: [f64; 3],
    /// Linear and quadratic extrapolations agree within 2%.
    pub converged: bool,
}

/// Regularized radial integral at a fixed η.
fn radial_integral(
    k: Vec3,
    rhat: Vec3,
    r: f64,
    eta: f64,
    src: &SourceSpec,
    beam: &BeamSpec,
    spec: &QuadSpec,
) -> Result<Complex64> {
    let kmag = k.norm();
    let omega = 0.5 * kmag * kmag / src.mass;
    let amp = |p: f64| p * mono_f(rhat.scale(p), beam) * window_g_tilde(rhat.scale(p).sub(k), src);

    // Momentum window from the monochromator support, forced to bracket the
    // on-shell pole.
    let cos_a = rhat.z;
    let sin2 = (1.0 - cos_a * cos_a).max(0.0);
    let quad_coef = sin2 / (beam.dk_perp * beam.dk_perp) + cos_a * cos_a / (beam.dk_z * beam.dk_z);
    let center = beam.k0 * cos_a / (beam.dk_z * beam.dk_z) / quad_coef;
    let sigma = (2.0 / quad_coef).sqrt();
    let (mut lo, mut hi) = bracket_support(
        |p| amp(p).abs(),
        center,
        spec.k_window_sigmas * sigma,
        1e-6 * beam.k0,
        1e-12,
    );
    lo = lo.min(kmag - 1.0).max(1e-6 * beam.k0);
    hi = hi.max(kmag + 1.0);
    let breaks = [lo, kmag, hi];

    let denom = move |p: f64| {
        let delta = 0.5 * p * p / src.mass - omega;
        delta * delta + eta * eta
    };
    let re = integrate_1d_with_breaks(
        |p| {
            let delta = 0.5 * p * p / src.mass - omega;
            let (s, c) = (p * r).sin_cos();
            amp(p) * (c * delta - s * eta) / denom(p)
        },
        &breaks,
        spec,
    )?;
    let im = integrate_1d_with_breaks(
        |p| {
            let delta = 0.5 * p * p / src.mass - omega;
            let (s, c) = (p * r).sin_cos();
            amp(p) * (s * delta + c * eta) / denom(p)
        },
        &breaks,
        spec,
    )?;
    let pref = -1.0 / ((2.0 * PI).sqrt() * r);
    Ok(Complex64::new(pref * re.value, pref * im.value))
}

/// Validate the far-field closed form against the η-regularized radial
/// integral at position r·r̂ for source momentum k.
///
/// Uses η_j = x_j k/(m r) with x = {0.4, 0.2, 0.1} (the regulator suppresses
/// the on-shell amplitude by e^{−x}), extrapolated to η = 0.
pub fn radial_integral_check(
    k: Vec3,
    rhat: Vec3,
    r: f64,
    src: &SourceSpec,
    beam: &BeamSpec,
    spec: &QuadSpec,
) -> Result<RadialCheck> {
    if r < 10.0 * src.w {
        return Err(Error::FarField(format!(
            "r = {r} is below 10 w = {}; the asymptotic form does not apply",
            10.0 * src.w
        )));
    }
    if k.z <= 0.0 {
        return Err(Error::Domain("validator needs k_z > 0 (forward emission)".into()));
    }
    let kmag = k.norm();
    let xs = [0.4, 0.2, 0.1];
    let etas = xs.map(|x| x * kmag / (src.mass * r));
    let mut vals = [Complex64::new(0.0, 0.0); 3];
    for (i, &eta) in etas.iter().enumerate() {
        vals[i] = radial_integral(k, rhat, r, eta, src, beam, spec)?;
    }
    // Lagrange extrapolation to η = 0 on nodes {4, 2, 1}·η₀.
    let quadratic = vals[0].scale(1.0 / 3.0) - vals[1].scale(2.0) + vals[2].scale(8.0 / 3.0);
    let linear = vals[2].scale(2.0) - vals[1];
    let farfield = farfield_amplitude(k, rhat, r, src, beam);
    let rel_deviation = (quadratic - farfield).norm() / farfield.norm().max(1e-300);
    let converged = (quadratic - linear).norm() / quadratic.norm().max(1e-300) < 0.02;
    if !converged {
        return Err(Error::Validation(format!(
            "eta extrapolation did not settle: quadratic {quadratic}, linear {linear}"
        )));
    }
    Ok(RadialCheck { extrapolated: quadratic, linear, farfield, rel_deviation, etas, converged })
}

/// 1/e half-width in tilt angle of |φ̂|² around the forward direction, found
/// by bisection. For w_z = 0 and w δk_⊥ ≫ 1 this approaches 1/(w k).
pub fn angular_half_width(k: Vec3, r: f64, src: &SourceSpec, beam: &BeamSpec) -> f64 {
    let peak = farfield_amplitude(k, Vec3::new(0.0, 0.0, 1.0), r, src, beam).norm_sqr();
    let at = |alpha: f64| {
        let rhat = Vec3::new(alpha.sin(), 0.0, alpha.cos());
        farfield_amplitude(k, rhat, r, src, beam).norm_sqr()
    };
    let target = peak / std::f64::consts::E;
    let mut lo = 0.0;
    let mut hi = 0.5 * PI;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src() -> SourceSpec {
        let mut s = SourceSpec::new(1.0, 0.0, 5.0, 288.0).unwrap();
        s.w_z = 0.0;
        s
    }

    fn beam() -> BeamSpec {
        BeamSpec::new(20.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn forward_amplitude_modulus_and_scaling() {
        let s = src();
        let b = beam();
        let k = Vec3::new(0.0, 0.0, b.k0);
        let zhat = Vec3::new(0.0, 0.0, 1.0);
        let a200 = farfield_amplitude(k, zhat, 200.0, &s, &b);
        // Zero momentum transfer: g̃ = (2π)⁻³.
        let want = s.mass * (2.0 * PI).sqrt() * mono_f(k, &b) / (2.0 * PI).powi(3) / 200.0;
        assert!((a200.norm() - want).abs() / want < 1e-14);
        // Spherical 1/r falloff.
        let a400 = farfield_amplitude(k, zhat, 400.0, &s, &b);
        assert!((a200.norm() / a400.norm() - 2.0).abs() < 1e-12);
        // Phase kr − π/2.
        let expect = Complex64::from_polar(want, b.k0 * 200.0 - 0.5 * PI);
        assert!((a200 - expect).norm() < 1e-14 * want);
    }

    #[test]
    fn backward_momenta_are_gated_off() {
        let s = src();
        let b = beam();
        let zhat = Vec3::new(0.0, 0.0, 1.0);
        assert_eq!(farfield_amplitude(Vec3::new(0.0, 0.0, -5.0), zhat, 200.0, &s, &b).norm(), 0.0);
        assert_eq!(farfield_amplitude(Vec3::new(1.0, 0.0, 0.0), zhat, 200.0, &s, &b).norm(), 0.0);
    }

    #[test]
    fn azimuthal_symmetry_of_the_profile() {
        let s = src();
        let b = beam();
        let k = Vec3::new(0.0, 0.0, b.k0);
        let alpha = 0.03f64;
        for phi in [0.0, 1.1, 2.7, 4.4] {
            let rhat = Vec3::new(
                alpha.sin() * f64::cos(phi),
                alpha.sin() * f64::sin(phi),
                alpha.cos(),
            );
            let v = farfield_amplitude(k, rhat, 200.0, &s, &b).norm();
            let v0 = farfield_amplitude(
                k,
                Vec3::new(alpha.sin(), 0.0, alpha.cos()),
                200.0,
                &s,
                &b,
            )
            .norm();
            assert!((v - v0).abs() < 1e-14 * v0);
        }
    }

    #[test]
    fn angular_width_tracks_inverse_wk() {
        // Wide monochromator transverse window: the source diffraction
        // dominates and the 1/e half-width of |φ̂|² is 1/(w k).
        let s = src();
        let mut b = beam();
        b.dk_perp = 5.0;
        for k0 in [10.0, 20.0, 40.0] {
            b.k0 = k0;
            let k = Vec3::new(0.0, 0.0, k0);
            let width = angular_half_width(k, 200.0, &s, &b);
            let scale = width * s.w * k0;
            assert!((scale - 1.0).abs() < 0.1, "k0={k0}: width·wk = {scale}");
        }
    }

    #[test]
    fn radial_integral_reproduces_far_field_on_axis() {
        let s = src();
        let b = beam();
        let k = Vec3::new(0.0, 0.0, b.k0);
        let zhat = Vec3::new(0.0, 0.0, 1.0);
        let spec = QuadSpec { rel_tol: 1e-9, max_subdiv: 20000, ..QuadSpec::default() };
        let check = radial_integral_check(k, zhat, 200.0, &s, &b, &spec).unwrap();
        assert!(check.converged);
        assert!(check.rel_deviation < 0.02, "deviation {}", check.rel_deviation);
    }

    #[test]
    fn fixed_large_regulator_suppresses_the_amplitude() {
        // η = k₀²/m wipes out the on-shell pole contribution.
        let s = src();
        let b = beam();
        let k = Vec3::new(0.0, 0.0, b.k0);
        let zhat = Vec3::new(0.0, 0.0, 1.0);
        let spec = QuadSpec { rel_tol: 1e-8, max_subdiv: 20000, ..QuadSpec::default() };
        let big = radial_integral(k, zhat, 200.0, b.k0 * b.k0 / s.mass, &s, &b, &spec).unwrap();
        let ff = farfield_amplitude(k, zhat, 200.0, &s, &b);
        assert!(big.norm() < 0.5 * ff.norm(), "big-eta {} vs ff {}", big.norm(), ff.norm());
    }

    #[test]
    fn near_field_is_rejected() {
        let s = src();
        let b = beam();
        let k = Vec3::new(0.0, 0.0, b.k0);
        let zhat = Vec3::new(0.0, 0.0, 1.0);
        let err = radial_integral_check(k, zhat, 5.0, &s, &b, &QuadSpec::default());
        assert!(matches!(err, Err(Error::FarField(_))));
    }
}
