//! Gaussian single-photon wave packets and the pairwise overlap amplitudes
//! that encode distinguishability.
//!
//! A photon is described by its spectral intensity, a Gaussian centred at
//! `omega_c` with standard deviation `sigma`, and by its arrival time `tau`.
//! All frequencies are angular and carried in rad/fs; times are in fs.
//! The overlap amplitude of two packets,
//!
//! ```text
//! A_ij = sqrt(zeta_ij) exp(-xi_ij (tau_i - tau_j)^2 / 2) exp(i nu_ij (tau_i - tau_j))
//! ```
//!
//! is the single-photon inner product including the relative-delay phase;
//! its squared magnitude `zeta_ij exp(-xi_ij dt^2)` is the weight a
//! transposition of the pair acquires in a coincidence probability. The
//! weight of an arbitrary permutation is the product of the amplitudes of
//! the photons it actually moves.

use crate::symgroup::Permutation;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Speed of light in nm/fs.
pub const C_NM_PER_FS: f64 = 299.792458;

const FWHM_TO_SIGMA: f64 = 2.354_820_045_030_949_4; // 2 sqrt(2 ln 2)

/// A Gaussian single-photon wave packet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPhoton {
    /// Centre angular frequency, rad/fs.
    pub omega_c: f64,
    /// Standard deviation of the spectral intensity, rad/fs.
    pub sigma: f64,
    /// Arrival time, fs.
    pub tau: f64,
}

/// Photon description as it appears in configuration files.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct PhotonSpec {
    pub lambda_c_nm: f64,
    pub fwhm_nm: f64,
    pub tau_fs: f64,
}

impl GaussianPhoton {
    pub fn new(omega_c: f64, sigma: f64, tau: f64) -> Result<Self> {
        if !(sigma > 0.0) || !omega_c.is_finite() || !tau.is_finite() {
            return Err(Error::InvalidValue(format!(
                "photon needs sigma > 0 and finite parameters, got omega_c={omega_c}, sigma={sigma}, tau={tau}"
            )));
        }
        Ok(Self { omega_c, sigma, tau })
    }

    /// Builds a photon from centre wavelength (nm), intensity FWHM (nm) and
    /// arrival time (fs).
    pub fn from_wavelength(lambda_c_nm: f64, fwhm_nm: f64, tau_fs: f64) -> Result<Self> {
        if !(lambda_c_nm > 0.0) || !(fwhm_nm > 0.0) {
            return Err(Error::InvalidValue(format!(
                "wavelengths must be positive, got lambda={lambda_c_nm}, fwhm={fwhm_nm}"
            )));
        }
        let omega_c = 2.0 * std::f64::consts::PI * C_NM_PER_FS / lambda_c_nm;
        let fwhm_omega = 2.0 * std::f64::consts::PI * C_NM_PER_FS * fwhm_nm / (lambda_c_nm * lambda_c_nm);
        Self::new(omega_c, fwhm_omega / FWHM_TO_SIGMA, tau_fs)
    }

    pub fn from_spec(spec: &PhotonSpec) -> Result<Self> {
        Self::from_wavelength(spec.lambda_c_nm, spec.fwhm_nm, spec.tau_fs)
    }

    /// Same spectrum, shifted arrival time.
    pub fn at_tau(&self, tau: f64) -> Self {
        Self { tau, ..*self }
    }
}

/// Spectral overlap factors of a photon pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairOverlap {
    /// Spectral overlap at zero delay, in `[0, 1]`; 1 iff the spectra match.
    pub zeta: f64,
    /// Gaussian decay rate of the interference feature, rad^2/fs^2.
    pub xi: f64,
    /// Variance-weighted mean frequency, rad/fs; the delay-phase rate.
    pub nu: f64,
}

impl PairOverlap {
    /// Applies a scalar overlap factor for degrees of freedom that are not
    /// modelled spectrally (polarization, spatial mode). The factor
    /// multiplies `zeta` and defaults to 1 everywhere else in the crate.
    pub fn with_mode_factor(self, factor: f64) -> Self {
        Self { zeta: self.zeta * factor, ..self }
    }
}

/// Overlap factors `zeta`, `xi`, `nu` of two wave packets.
pub fn pair_overlap(a: &GaussianPhoton, b: &GaussianPhoton) -> PairOverlap {
    let sa2 = a.sigma * a.sigma;
    let sb2 = b.sigma * b.sigma;
    let s2 = sa2 + sb2;
    let dw = a.omega_c - b.omega_c;
    PairOverlap {
        zeta: 2.0 * a.sigma * b.sigma / s2 * (-dw * dw / (2.0 * s2)).exp(),
        xi: 2.0 * sa2 * sb2 / s2,
        nu: (a.omega_c * sb2 + b.omega_c * sa2) / s2,
    }
}

/// Wave-packet inner product `A_ij` of two photons, delay phase included.
pub fn overlap_amplitude(a: &GaussianPhoton, b: &GaussianPhoton) -> Complex64 {
    let ov = pair_overlap(a, b);
    let dt = a.tau - b.tau;
    let mag = ov.zeta.sqrt() * (-ov.xi * dt * dt / 2.0).exp();
    Complex64::from_polar(mag, ov.nu * dt)
}

/// Weight a permutation acquires from the input state: the product of
/// `A_{i,σ(i)}` over the photons `σ` actually moves.
///
/// The identity has weight exactly 1 and `weight(σ⁻¹) = conj(weight(σ))`.
pub fn permutation_weight(sigma: &Permutation, photons: &[GaussianPhoton]) -> Result<Complex64> {
    if sigma.n() != photons.len() {
        return Err(Error::Dimension(format!(
            "permutation of degree {} applied to {} photons",
            sigma.n(),
            photons.len()
        )));
    }
    let mut w = Complex64::new(1.0, 0.0);
    for i in 0..photons.len() {
        let j = sigma.apply(i);
        if i != j {
            w *= overlap_amplitude(&photons[i], &photons[j]);
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symgroup::enumerate_permutations;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn characterization_pair() -> (GaussianPhoton, GaussianPhoton) {
        (
            GaussianPhoton::from_wavelength(789.05, 2.9, 0.0).unwrap(),
            GaussianPhoton::from_wavelength(788.60, 2.9, 0.0).unwrap(),
        )
    }

    #[test]
    fn identical_photons_overlap_perfectly() {
        let p = GaussianPhoton::from_wavelength(789.0, 3.0, 0.0).unwrap();
        let ov = pair_overlap(&p, &p);
        assert_abs_diff_eq!(ov.zeta, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ov.xi, p.sigma * p.sigma, epsilon = 1e-18);
        assert_abs_diff_eq!(ov.nu, p.omega_c, epsilon = 1e-12);
        assert_eq!(overlap_amplitude(&p, &p), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn spectral_mismatch_reduces_zeta() {
        let (a, b) = characterization_pair();
        let ov = pair_overlap(&a, &b);
        assert!(ov.zeta < 1.0);
        assert!(ov.zeta > 0.9, "0.45 nm apart at 2.9 nm width stays close to 1, got {}", ov.zeta);
        // equal centres, different widths: exponential factor is 1
        let c1 = GaussianPhoton::new(2.0, 0.010, 0.0).unwrap();
        let c2 = GaussianPhoton::new(2.0, 0.015, 0.0).unwrap();
        let ov2 = pair_overlap(&c1, &c2);
        let expect = 2.0 * 0.010 * 0.015 / (0.010f64.powi(2) + 0.015f64.powi(2));
        assert_abs_diff_eq!(ov2.zeta, expect, epsilon = 1e-15);
        assert!(ov2.zeta < 1.0);
    }

    #[test]
    fn mode_factor_scales_zeta_only() {
        let (a, b) = characterization_pair();
        let ov = pair_overlap(&a, &b);
        let scaled = ov.with_mode_factor(0.5);
        assert_abs_diff_eq!(scaled.zeta, 0.5 * ov.zeta, epsilon = 1e-15);
        assert_eq!(scaled.xi, ov.xi);
        assert_eq!(scaled.nu, ov.nu);
    }

    #[test]
    fn amplitude_magnitude_matches_transposition_weight() {
        let a = GaussianPhoton::from_wavelength(789.35, 2.85, -120.0).unwrap();
        let b = GaussianPhoton::from_wavelength(789.52, 2.79, 40.0).unwrap();
        let ov = pair_overlap(&a, &b);
        let dt = a.tau - b.tau;
        let expect = ov.zeta * (-ov.xi * dt * dt).exp();
        assert_abs_diff_eq!(overlap_amplitude(&a, &b).norm_sqr(), expect, epsilon = 1e-15);
    }

    /// Trapezoid quadrature of the defining overlap integral
    /// ∫ α_i(ω) α_j(ω) e^{iω(τ_i-τ_j)} dω over ±8σ.
    fn amplitude_by_quadrature(a: &GaussianPhoton, b: &GaussianPhoton) -> Complex64 {
        let lo = (a.omega_c - 8.0 * a.sigma).min(b.omega_c - 8.0 * b.sigma);
        let hi = (a.omega_c + 8.0 * a.sigma).max(b.omega_c + 8.0 * b.sigma);
        let steps = 200_000usize;
        let dw = (hi - lo) / steps as f64;
        let dt = a.tau - b.tau;
        let alpha = |p: &GaussianPhoton, w: f64| {
            let s2 = p.sigma * p.sigma;
            (2.0 * std::f64::consts::PI * s2).powf(-0.25)
                * (-(w - p.omega_c) * (w - p.omega_c) / (4.0 * s2)).exp()
        };
        let f = |w: f64| Complex64::from_polar(alpha(a, w) * alpha(b, w), w * dt);
        let mut sum = (f(lo) + f(hi)) * 0.5;
        for k in 1..steps {
            sum += f(lo + k as f64 * dw);
        }
        sum * dw
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let cases = [
            (789.35, 2.85, -300.0, 789.52, 2.79, 0.0),
            (789.41, 2.72, 130.0, 789.35, 2.85, -170.0),
            (788.60, 2.90, 55.0, 789.05, 2.90, -85.0),
            (790.0, 2.0, 200.0, 788.0, 3.5, 180.0),
        ];
        for (l1, f1, t1, l2, f2, t2) in cases {
            let a = GaussianPhoton::from_wavelength(l1, f1, t1).unwrap();
            let b = GaussianPhoton::from_wavelength(l2, f2, t2).unwrap();
            let closed = overlap_amplitude(&a, &b);
            let quad = amplitude_by_quadrature(&a, &b);
            assert!(
                (closed - quad).norm() < 1e-8,
                "closed {closed} vs quadrature {quad}"
            );
        }
    }

    #[test]
    fn weights_of_identical_photons_are_one() {
        let p = GaussianPhoton::from_wavelength(789.0, 3.0, 0.0).unwrap();
        let photons = [p, p, p];
        for sigma in enumerate_permutations(3).unwrap() {
            let w = permutation_weight(&sigma, &photons).unwrap();
            assert!((w - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn weights_die_off_for_large_delays() {
        let base = GaussianPhoton::from_wavelength(789.0, 3.0, 0.0).unwrap();
        let coherence = 1.0 / base.sigma;
        let photons = [
            base.at_tau(0.0),
            base.at_tau(60.0 * coherence),
            base.at_tau(-60.0 * coherence),
        ];
        for sigma in enumerate_permutations(3).unwrap() {
            let w = permutation_weight(&sigma, &photons).unwrap();
            if sigma.is_identity() {
                assert_eq!(w, Complex64::new(1.0, 0.0));
            } else {
                assert!(w.norm() < 1e-300, "sigma={sigma} weight={w}");
            }
        }
    }

    #[test]
    fn three_cycle_weight_matches_printed_exponents() {
        // |w(3-cycle)| = zeta_123 e^{I_a}, arg = I_s, with
        // I_a = -dt1^2 xi12/2 - (dt1-dt2)^2 xi13/2 - dt2^2 xi23/2
        // I_s = dt1 nu12 - (dt1-dt2) nu13 - dt2 nu23,
        // dt1 = tau1 - tau2, dt2 = tau3 - tau2.
        let specs = [(789.35, 2.85), (789.52, 2.79), (789.41, 2.72)];
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        use rand::{Rng, SeedableRng};
        for _ in 0..10 {
            let dt1: f64 = rng.gen_range(-400.0..400.0);
            let dt2: f64 = rng.gen_range(-400.0..400.0);
            let photons: Vec<GaussianPhoton> = [dt1, 0.0, dt2]
                .iter()
                .zip(specs.iter())
                .map(|(&t, &(l, f))| GaussianPhoton::from_wavelength(l, f, t).unwrap())
                .collect();
            let o12 = pair_overlap(&photons[0], &photons[1]);
            let o13 = pair_overlap(&photons[0], &photons[2]);
            let o23 = pair_overlap(&photons[1], &photons[2]);
            let zeta123 = (o12.zeta * o23.zeta * o13.zeta).sqrt();
            let ia = -dt1 * dt1 * o12.xi / 2.0
                - (dt1 - dt2) * (dt1 - dt2) * o13.xi / 2.0
                - dt2 * dt2 * o23.xi / 2.0;
            let is = dt1 * o12.nu - (dt1 - dt2) * o13.nu - dt2 * o23.nu;
            // 1 -> 2 -> 3 -> 1 in one-line notation
            let cycle = Permutation::from_image(vec![1, 2, 0]).unwrap();
            let w = permutation_weight(&cycle, &photons).unwrap();
            assert_abs_diff_eq!(w.norm(), zeta123 * ia.exp(), epsilon = 1e-12);
            let expect = Complex64::from_polar(zeta123 * ia.exp(), is);
            assert!((w - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn two_photon_reduction_weights() {
        // n = 2: identity weight 1, swap weight zeta e^{-xi dt^2} (real).
        let a = GaussianPhoton::from_wavelength(789.05, 2.9, 80.0).unwrap();
        let b = GaussianPhoton::from_wavelength(788.60, 2.9, -45.0).unwrap();
        let swap = Permutation::from_image(vec![1, 0]).unwrap();
        let w = permutation_weight(&swap, &[a, b]).unwrap();
        let ov = pair_overlap(&a, &b);
        let dt = a.tau - b.tau;
        assert_abs_diff_eq!(w.re, ov.zeta * (-ov.xi * dt * dt).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(w.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn invalid_photons_rejected() {
        assert!(GaussianPhoton::new(2.0, 0.0, 0.0).is_err());
        assert!(GaussianPhoton::new(2.0, -1.0, 0.0).is_err());
        assert!(GaussianPhoton::from_wavelength(-1.0, 2.0, 0.0).is_err());
        let p = GaussianPhoton::from_wavelength(789.0, 3.0, 0.0).unwrap();
        let sigma = Permutation::identity(3);
        assert!(permutation_weight(&sigma, &[p, p]).is_err());
    }

    proptest! {
        #[test]
        fn weight_bounds_and_conjugation(
            seed in 0u64..500,
            dt1 in -800.0f64..800.0,
            dt2 in -800.0f64..800.0,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let photons: Vec<GaussianPhoton> = [dt1, 0.0, dt2]
                .iter()
                .map(|&t| {
                    GaussianPhoton::from_wavelength(
                        rng.gen_range(780.0..800.0),
                        rng.gen_range(1.5..4.0),
                        t,
                    )
                    .unwrap()
                })
                .collect();
            for sigma in enumerate_permutations(3).unwrap() {
                let w = permutation_weight(&sigma, &photons).unwrap();
                prop_assert!(w.norm() <= 1.0 + 1e-12);
                let winv = permutation_weight(&sigma.inverse(), &photons).unwrap();
                prop_assert!((winv - w.conj()).norm() < 1e-12);
            }
            // zeta in [0, 1]
            let ov = pair_overlap(&photons[0], &photons[1]);
            prop_assert!(ov.zeta >= 0.0 && ov.zeta <= 1.0);
            prop_assert!(ov.xi > 0.0);
        }
    }
}
