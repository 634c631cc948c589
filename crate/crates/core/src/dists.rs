//! Form factors and statistical distributions of the source-beam system:
//! thermal occupation N(ω), emitting-window function g and its Fourier
//! transform g̃, monochromator amplitude f, detector resolution R, the
//! emission matrix T, and the effective emitted spectrum N·f².
//!
//! Conventions (all Gaussian):
//!
//! * g(r) = [(2π)³ det W²]^{−1/2} exp(−r·W⁻²r/2), W² = diag(w², w², w_z²),
//! * g̃(Δk) = (2π)⁻³ exp(−Δk·W²Δk/2),
//! * f(k) = [(2π)³ det δK²]^{−1/4} exp(−(k−k₀)·δK⁻²(k−k₀)/4),
//!   δK² = diag(δk_⊥², δk_⊥², δk_z²), k₀ = (0,0,k₀), so ∫f² d³k = 1,
//! * R_r̄(r) = [(2π)³ det D²]^{−1/2} exp(−(r−r̄)·D⁻²(r−r̄)/2),
//!   D² = diag(a², a², d²),
//! * T(k′,k) = f(k′) g̃(k′−k) θ(k_z), with θ(0) = 0.
//!
//! Exponents are assembled in full and exponentiated once.

use serde::{Deserialize, Serialize};

use crate::params::{BeamSpec, DetectorSpec, SourceSpec, Statistics};
use crate::{Error, Result};

/// Plain 3-vector for momenta and positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn zero() -> Self {
        Vec3 { x: 0.0, y: 0.0, z: 0.0 }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    /// Squared transverse (x, y) part.
    pub fn perp2(self) -> f64 {
        self.x * self.x + self.y * self.y
    }
}

/// Thermal occupation of the source at energy ω.
///
/// Fermion: 1/(e^{β(ω−μ)}+1); Boson: 1/(e^{β(ω−μ)}−1) for ω > μ;
/// Classical: e^{−β(ω−μ)}.
pub fn occupation(omega: f64, src: &SourceSpec) -> Result<f64> {
    let x = src.beta * (omega - src.mu);
    match src.statistics {
        Statistics::Fermion => {
            // Saturating branch avoids overflow of e^x.
            Ok(if x > 0.0 { (-x).exp() / (1.0 + (-x).exp()) } else { 1.0 / (x.exp() + 1.0) })
        }
        Statistics::Boson => {
            if omega <= src.mu {
                return Err(Error::Domain(format!(
                    "Bose occupation requires omega > mu (omega={omega}, mu={})",
                    src.mu
                )));
            }
            Ok(1.0 / (x.exp() - 1.0).max(f64::MIN_POSITIVE))
        }
        Statistics::Classical => Ok((-x).exp()),
    }
}

/// Emitting-window function g(r), normalized to ∫ g d³r = 1.
/// Requires w_z > 0 (the w_z → 0 limit is a transverse sheet).
pub fn window_g(r: Vec3, src: &SourceSpec) -> f64 {
    let w2 = src.w * src.w;
    let wz2 = src.w_z * src.w_z;
    let norm = (2.0 * std::f64::consts::PI).powf(1.5) * w2 * src.w_z;
    let expo = -0.5 * (r.perp2() / w2 + r.z * r.z / wz2);
    expo.exp() / norm
}

/// Fourier transform of the window, g̃(Δk) = (2π)⁻³ e^{−Δk·W²Δk/2}.
pub fn window_g_tilde(dk: Vec3, src: &SourceSpec) -> f64 {
    let expo = -0.5 * (src.w * src.w * dk.perp2() + src.w_z * src.w_z * dk.z * dk.z);
    expo.exp() / (2.0 * std::f64::consts::PI).powi(3)
}

/// Monochromator amplitude f(k). The quartic-root prefactor makes f² a
/// unit-normalized Gaussian in k.
pub fn mono_f(k: Vec3, beam: &BeamSpec) -> f64 {
    let dkp2 = beam.dk_perp * beam.dk_perp;
    let dkz2 = beam.dk_z * beam.dk_z;
    let det = dkp2 * dkp2 * dkz2;
    let norm = ((2.0 * std::f64::consts::PI).powi(3) * det).powf(0.25);
    let dz = k.z - beam.k0;
    let expo = -0.25 * (k.perp2() / dkp2 + dz * dz / dkz2);
    expo.exp() / norm
}

/// f²(k ẑ) for a scalar momentum k on the beam axis; the workhorse of the
/// collinear momentum integrals.
pub fn mono_f2_axial(k: f64, beam: &BeamSpec) -> f64 {
    let dkp2 = beam.dk_perp * beam.dk_perp;
    let dkz2 = beam.dk_z * beam.dk_z;
    let norm = ((2.0 * std::f64::consts::PI).powi(3) * dkp2 * dkp2 * dkz2).sqrt();
    let dz = k - beam.k0;
    (-0.5 * dz * dz / dkz2).exp() / norm
}

/// Detector resolution function R_r̄(r), normalized to 1 over r.
/// Degenerate a = 0 or d = 0 are delta limits; the correlator paths collapse
/// those integrals analytically instead of calling this.
pub fn resolution_r(r: Vec3, rbar: Vec3, det: &DetectorSpec) -> f64 {
    let a2 = det.a * det.a;
    let d2 = det.d * det.d;
    let dr = r.sub(rbar);
    let norm = (2.0 * std::f64::consts::PI).powf(1.5) * a2 * det.d;
    let expo = -0.5 * (dr.perp2() / a2 + dr.z * dr.z / d2);
    expo.exp() / norm
}

/// Emission matrix T(k′, k) = f(k′) g̃(k′−k) θ(k_z).
///
/// The theta function cuts on the longitudinal momentum of the source
/// particle; exactly k_z = 0 evaluates to 0 (measure-zero, keeps the
/// integrands bounded).
pub fn emission_t(kprime: Vec3, k: Vec3, src: &SourceSpec, beam: &BeamSpec) -> f64 {
    if k.z <= 0.0 {
        return 0.0;
    }
    mono_f(kprime, beam) * window_g_tilde(kprime.sub(k), src)
}

/// Effective emitted spectrum N(ω_k)·f²(k ẑ) along the beam axis; the
/// overlap of the monochromator window with the thermal distribution.
pub fn effective_spectrum(k: f64, src: &SourceSpec, beam: &BeamSpec) -> Result<f64> {
    let omega = 0.5 * k * k / src.mass;
    Ok(occupation(omega, src)? * mono_f2_axial(k, beam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_nd, QuadSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn src() -> SourceSpec {
        SourceSpec::new(1.0, 0.05, 5.0, 210.125).unwrap()
    }

    fn beam() -> BeamSpec {
        BeamSpec::new(20.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn fermi_occupation_values() {
        let mut s = src();
        s.mu = 200.0;
        s.beta = 1.0;
        // ω = μ is the symmetry point.
        assert_eq!(occupation(200.0, &s).unwrap(), 0.5);
        // β(ω−μ) = 40: 1/(e^40+1), 30-digit reference.
        let got = occupation(240.0, &s).unwrap();
        assert!(((got - 4.248354255291589e-18) / 4.248354255291589e-18).abs() < 1e-12);
        // Deep below the Fermi level at low temperature: filled state.
        s.beta = 1e4;
        assert_eq!(occupation(150.0, &s).unwrap(), 1.0);
        // No overflow far above.
        assert_eq!(occupation(1e6, &s).unwrap(), 0.0);
    }

    #[test]
    fn bose_occupation_domain() {
        let s = src().with_statistics(Statistics::Boson);
        assert!(occupation(100.0, &s).is_err());
        let n = occupation(210.2, &s).unwrap();
        assert!(n > 0.0 && n.is_finite());
    }

    #[test]
    fn classical_occupation_is_boltzmann() {
        let s = src().with_statistics(Statistics::Classical);
        let n = occupation(s.mu + 2.0 / s.beta, &s).unwrap();
        assert!((n - (-2.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn g_tilde_values() {
        let s = src();
        let zero = window_g_tilde(Vec3::zero(), &s);
        assert!((zero - 1.0 / (2.0 * PI).powi(3)).abs() < 1e-18);
        let one_sigma = window_g_tilde(Vec3::new(1.0 / s.w, 0.0, 0.0), &s);
        assert!((one_sigma - zero * (-0.5f64).exp()).abs() < 1e-18);
    }

    #[test]
    fn g_normalization() {
        let s = src();
        let f = |p: &[f64]| window_g(Vec3::new(p[0], p[1], p[2]), &s);
        let q = integrate_nd(
            &f,
            &[-8.0, -8.0, -8.0 * s.w_z],
            &[8.0, 8.0, 8.0 * s.w_z],
            &QuadSpec::default(),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-8, "got {}", q.value);
    }

    #[test]
    fn f_squared_normalization_and_peak() {
        let b = beam();
        let f2 = |p: &[f64]| {
            let v = mono_f(Vec3::new(p[0], p[1], p[2]), &b);
            v * v
        };
        let q = integrate_nd(
            &f2,
            &[-4.0, -4.0, b.k0 - 4.0],
            &[4.0, 4.0, b.k0 + 4.0],
            &QuadSpec::default(),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-8, "got {}", q.value);

        let peak = mono_f(Vec3::new(0.0, 0.0, b.k0), &b).powi(2);
        let expect = 1.0 / ((2.0 * PI).powi(3) * b.dk_perp.powi(4) * b.dk_z.powi(2)).sqrt();
        assert!((peak - expect).abs() / expect < 1e-14);
        // One-sigma exponent along z.
        let off = mono_f(Vec3::new(0.0, 0.0, b.k0 + b.dk_z), &b).powi(2);
        assert!((off / peak - (-0.5f64).exp()).abs() < 1e-14);
        assert!((mono_f2_axial(b.k0 + b.dk_z, &b) - off).abs() < 1e-12 * off);
    }

    #[test]
    fn resolution_normalization_and_isotropy() {
        let det = DetectorSpec::new(0.7, 0.7).unwrap();
        let rbar = Vec3::new(0.0, 0.0, 5.0);
        let f = |p: &[f64]| resolution_r(Vec3::new(p[0], p[1], p[2]), rbar, &det);
        let q = integrate_nd(
            &f,
            &[-6.0, -6.0, 5.0 - 6.0],
            &[6.0, 6.0, 5.0 + 6.0],
            &QuadSpec::default(),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-8);
        // a = d: isotropic peak value (2π a²)^{−3/2}.
        let peak = resolution_r(rbar, rbar, &det);
        assert!((peak - (2.0 * PI * 0.49f64).powf(-1.5)).abs() / peak < 1e-14);
    }

    #[test]
    fn emission_matrix_theta_gate_and_peak() {
        let s = src();
        let b = beam();
        // Negative or vanishing source k_z is gated off.
        assert_eq!(emission_t(Vec3::new(0.0, 0.0, 20.0), Vec3::new(0.0, 0.0, -1.0), &s, &b), 0.0);
        assert_eq!(emission_t(Vec3::new(0.0, 0.0, 20.0), Vec3::new(1.0, 0.0, 0.0), &s, &b), 0.0);
        // Zero transfer at the monochromator peak.
        let k0 = Vec3::new(0.0, 0.0, b.k0);
        let t = emission_t(k0, k0, &s, &b);
        let expect = mono_f(k0, &b) / (2.0 * PI).powi(3);
        assert!((t - expect).abs() / expect < 1e-14);
    }

    #[test]
    fn emission_matrix_monotone_in_transfer() {
        let s = src();
        let b = beam();
        let k = Vec3::new(0.0, 0.0, b.k0);
        let mut prev = f64::INFINITY;
        for i in 0..10 {
            let kp = Vec3::new(0.2 * i as f64, 0.0, b.k0);
            let t = emission_t(kp, k, &s, &b);
            if i > 0 {
                assert!(t < prev);
            }
            prev = t;
        }
    }

    #[test]
    fn effective_spectrum_band_edges() {
        let s = src(); // μ = (k0+δk_z)²/2: occupation cuts just above the window
        let b = beam();
        let peak = effective_spectrum(b.k0, &s, &b).unwrap();
        // Truncated above k0 + δk_z: one thermal width past the Fermi edge
        // the spectrum is dead.
        let above = effective_spectrum(20.5 + 0.2, &s, &b).unwrap();
        assert!(above < 1e-2 * peak, "above/peak = {}", above / peak);
        // Far below the window: empty band because the source has no
        // occupied states at the window momenta.
        let mut cold = s;
        cold.mu = 100.0; // Fermi edge at k ≈ 14.1
        cold.beta = 50.0;
        let dead = effective_spectrum(b.k0, &cold, &b).unwrap();
        assert!(dead < 1e-20 * peak);
        // μ far above the window at low T: N ≈ 1, spectrum ∝ f².
        let mut hot = s;
        hot.mu = 400.0;
        let prop = effective_spectrum(b.k0 + 0.7, &hot, &b).unwrap()
            / effective_spectrum(b.k0, &hot, &b).unwrap();
        let f2_ratio = mono_f2_axial(b.k0 + 0.7, &b) / mono_f2_axial(b.k0, &b);
        assert!((prop - f2_ratio).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// g̃ and f are cylindrically symmetric about z, so the emission
        /// matrix is invariant under a common azimuthal rotation.
        #[test]
        fn emission_rotation_invariance(
            angle in 0.0f64..(2.0 * PI),
            kx in -1.0f64..1.0, ky in -1.0f64..1.0,
            px in -1.0f64..1.0, py in -1.0f64..1.0,
        ) {
            let s = src();
            let b = beam();
            let rot = |v: Vec3| {
                let (sin, cos) = angle.sin_cos();
                Vec3::new(cos * v.x - sin * v.y, sin * v.x + cos * v.y, v.z)
            };
            let k = Vec3::new(kx, ky, 19.5);
            let kp = Vec3::new(px, py, 20.5);
            let t1 = emission_t(kp, k, &s, &b);
            let t2 = emission_t(rot(kp), rot(k), &s, &b);
            prop_assert!((t1 - t2).abs() <= 1e-12 * t1.abs().max(1e-300));
        }
    }
}
