use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Angular tolerance for "mean spin along +x".
pub const ALIGNMENT_TOL: f64 = 1e-6;

/// First moments and symmetrized covariance of the collective spin.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub n_atoms: usize,
    /// `(<S_x>, <S_y>, <S_z>)`
    pub mean: Vector3<f64>,
    /// `Cov(S_a, S_b) = <{S_a, S_b}>/2 - <S_a><S_b>`
    pub covariance: Matrix3<f64>,
}

/// Ladder-operator expectation values from which all first and second
/// moments follow. Shared by the Dicke-state and Ising correlator paths.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RawMoments {
    pub n_atoms: usize,
    pub s_plus: Complex64,
    pub s_z: f64,
    pub s_z_sq: f64,
    pub s_plus_sq: Complex64,
    /// `<S_x^2 + S_y^2>`
    pub transverse_sq: f64,
    /// `<S_+ S_z + S_z S_+>`
    pub s_plus_s_z_sym: Complex64,
}

impl RawMoments {
    pub fn into_moments(self) -> MomentSet {
        let mean = Vector3::new(self.s_plus.re, self.s_plus.im, self.s_z);
        let xx = 0.5 * (self.transverse_sq + self.s_plus_sq.re);
        let yy = 0.5 * (self.transverse_sq - self.s_plus_sq.re);
        let xy = 0.5 * self.s_plus_sq.im;
        let xz = 0.5 * self.s_plus_s_z_sym.re;
        let yz = 0.5 * self.s_plus_s_z_sym.im;
        let second = Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, self.s_z_sq);
        MomentSet::from_second_moments(self.n_atoms, mean, second)
    }
}

impl MomentSet {
    pub fn from_second_moments(n_atoms: usize, mean: Vector3<f64>, second: Matrix3<f64>) -> Self {
        let covariance = second - mean * mean.transpose();
        Self { n_atoms, mean, covariance: 0.5 * (covariance + covariance.transpose()) }
    }

    /// Coherent spin state along the Bloch direction `(theta, phi)`.
    pub fn coherent(n_atoms: usize, theta: f64, phi: f64) -> Self {
        let n = n_atoms as f64;
        let dir = Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
        let covariance = (Matrix3::identity() - dir * dir.transpose()) * (n / 4.0);
        Self { n_atoms, mean: dir * (n / 2.0), covariance }
    }

    pub fn second_moments(&self) -> Matrix3<f64> {
        self.covariance + self.mean * self.mean.transpose()
    }

    pub fn spin_length(&self) -> f64 {
        self.mean.norm()
    }

    /// Ramsey contrast `2|<S>|/N`.
    pub fn contrast(&self) -> f64 {
        2.0 * self.spin_length() / self.n_atoms as f64
    }

    /// Azimuth of the mean spin in the equatorial plane.
    pub fn azimuth(&self) -> f64 {
        self.mean.y.atan2(self.mean.x)
    }

    /// Angle between the mean spin and +x.
    pub fn misalignment(&self) -> f64 {
        self.mean.yz().norm().atan2(self.mean.x)
    }

    /// Moments after the collective rotation `exp(-i angle axis.S)`.
    pub fn rotated(&self, axis: Vector3<f64>, angle: f64) -> Result<Self> {
        let length = axis.norm();
        if length == 0.0 {
            return Err(Error::ZeroAxis);
        }
        if (length - 1.0).abs() > 1e-9 {
            return Err(Error::AxisNotNormalized(length));
        }
        let r = Rotation3::from_axis_angle(&Unit::new_unchecked(axis), angle);
        Ok(self.transformed(r.matrix()))
    }

    fn transformed(&self, r: &Matrix3<f64>) -> Self {
        let covariance = r * self.covariance * r.transpose();
        Self {
            n_atoms: self.n_atoms,
            mean: r * self.mean,
            covariance: 0.5 * (covariance + covariance.transpose()),
        }
    }

    /// Rotates the frame so the mean spin points along +x, using the minimal
    /// rotation about `n x e_x`.
    pub fn aligned_to_x(&self) -> Result<Self> {
        let length = self.spin_length();
        if length == 0.0 {
            return Err(Error::DegenerateState);
        }
        let n = self.mean / length;
        let x = Vector3::x();
        let r = match Rotation3::rotation_between(&n, &x) {
            Some(r) => r,
            // antiparallel: half turn about z
            None => Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::PI),
        };
        let mut out = self.transformed(r.matrix());
        out.mean.y = 0.0;
        out.mean.z = 0.0;
        out.mean.x = length;
        Ok(out)
    }

    /// `Var(S_alpha)` for `S_alpha = S_z cos(alpha) + S_y sin(alpha)`.
    /// The mean spin must already lie along +x.
    pub fn quadrature_variance(&self, alpha: f64) -> Result<f64> {
        if self.spin_length() == 0.0 {
            return Err(Error::DegenerateState);
        }
        let angle = self.misalignment();
        if angle > ALIGNMENT_TOL {
            return Err(Error::MeanSpinMisaligned { angle });
        }
        let (s, c) = alpha.sin_cos();
        let cov = &self.covariance;
        Ok(c * c * cov[(2, 2)] + s * s * cov[(1, 1)] + 2.0 * s * c * cov[(1, 2)])
    }

    /// Gaussian single-spin z dephasing with width chosen so that the
    /// transverse mean spin shrinks by `contrast`.
    ///
    /// Per spin `E[e^{i phi}] = C`, so `<S_+> -> C <S_+>`,
    /// `<S_+^2> -> C^2 <S_+^2>`, `<{S_+, S_z}> -> C <{S_+, S_z}>` and
    /// `<S_x^2 + S_y^2> -> C^2 <S_x^2 + S_y^2> + N (1 - C^2)/2`; the single-spin
    /// diagonal terms of the last one are phase free.
    pub fn dephased(&self, contrast: f64) -> Result<Self> {
        if !(contrast > 0.0 && contrast <= 1.0) {
            return Err(invalid("contrast", format!("{contrast} is outside (0, 1]")));
        }
        if contrast == 1.0 {
            return Ok(self.clone());
        }
        let c = contrast;
        let n = self.n_atoms as f64;
        let m2 = self.second_moments();
        let sum = c * c * (m2[(0, 0)] + m2[(1, 1)]) + n * (1.0 - c * c) / 2.0;
        let diff = c * c * (m2[(0, 0)] - m2[(1, 1)]);
        let xy = c * c * m2[(0, 1)];
        let xz = c * m2[(0, 2)];
        let yz = c * m2[(1, 2)];
        let second = Matrix3::new(
            0.5 * (sum + diff),
            xy,
            xz,
            xy,
            0.5 * (sum - diff),
            yz,
            xz,
            yz,
            m2[(2, 2)],
        );
        let mean = Vector3::new(c * self.mean.x, c * self.mean.y, self.mean.z);
        Ok(Self::from_second_moments(self.n_atoms, mean, second))
    }

    /// Adds `variance` to every quadrature transverse to the mean spin
    /// (readout or technical noise).
    pub fn with_transverse_noise(&self, variance: f64) -> Self {
        let length = self.spin_length();
        let projector = if length > 0.0 {
            let n = self.mean / length;
            Matrix3::identity() - n * n.transpose()
        } else {
            Matrix3::identity()
        };
        Self {
            n_atoms: self.n_atoms,
            mean: self.mean,
            covariance: self.covariance + projector * variance,
        }
    }

    /// Smallest covariance eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.covariance.symmetric_eigenvalues().min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::CollectiveSpinState;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn css_variance_is_isotropic() {
        let m = CollectiveSpinState::coherent(30, FRAC_PI_2, 0.0).unwrap().moments();
        for alpha in [0.0, 0.3, 1.0, 2.5] {
            assert!((m.quadrature_variance(alpha).unwrap() - 7.5).abs() < 1e-10);
        }
        assert_eq!(m.quadrature_variance(0.0).unwrap(), m.covariance[(2, 2)]);
    }

    #[test]
    fn misaligned_mean_is_rejected() {
        let m = MomentSet::coherent(10, 1.0, 0.0);
        assert!(matches!(m.quadrature_variance(0.1), Err(Error::MeanSpinMisaligned { .. })));
        let aligned = m.aligned_to_x().unwrap();
        assert!((aligned.quadrature_variance(0.4).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn unit_contrast_is_identity() {
        let m = CollectiveSpinState::coherent(12, 1.2, 0.4).unwrap().oat_evolve(0.9, 0.0).moments();
        assert_eq!(m.dephased(1.0).unwrap(), m);
    }

    #[test]
    fn dephasing_keeps_population_statistics() {
        let m = MomentSet::coherent(100, FRAC_PI_2, 0.0).dephased(0.95).unwrap();
        assert!((m.mean.x - 0.95 * 50.0).abs() < 1e-12);
        assert!((m.covariance[(2, 2)] - 25.0).abs() < 1e-12);
        // z dephasing of a CSS along x leaves Var(S_y) at N/4 as well
        assert!((m.covariance[(1, 1)] - 25.0).abs() < 1e-10);
    }

    #[test]
    fn non_positive_contrast_rejected() {
        let m = MomentSet::coherent(10, FRAC_PI_2, 0.0);
        assert!(m.dephased(0.0).is_err());
        assert!(m.dephased(1.2).is_err());
    }

    #[test]
    fn dicke_and_analytic_css_moments_agree() {
        let dicke = CollectiveSpinState::coherent(25, 0.8, -1.3).unwrap().moments();
        let analytic = MomentSet::coherent(25, 0.8, -1.3);
        assert!((dicke.mean - analytic.mean).norm() < 1e-12);
        assert!((dicke.covariance - analytic.covariance).norm() < 1e-11);
    }
}
