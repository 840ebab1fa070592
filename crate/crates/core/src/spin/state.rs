use nalgebra::Vector3;
use num_complex::Complex64;

use super::moments::{MomentSet, RawMoments};
use crate::error::{Error, Result};

/// A pure state of `N` spin-1/2 atoms restricted to the symmetric (Dicke)
/// manifold `|S = N/2, m>`.
///
/// Amplitudes are stored by the number of down spins `k`, so index `k`
/// carries `m = N/2 - k`; index 0 is the fully polarized `|up...up>` state.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveSpinState {
    n_atoms: usize,
    amplitudes: Vec<Complex64>,
}

impl CollectiveSpinState {
    /// Coherent spin state: every atom in `cos(theta/2)|up> + e^{i phi} sin(theta/2)|down>`.
    pub fn coherent(n_atoms: usize, theta: f64, phi: f64) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::InvalidEnsemble("ensemble must contain at least one atom".into()));
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(crate::error::invalid("theta", format!("{theta} is outside [0, pi]")));
        }
        let (up, down) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let n = n_atoms as f64;
        let mut log_binomial = 0.0;
        let amplitudes = (0..=n_atoms)
            .map(|k| {
                let kf = k as f64;
                if k > 0 {
                    log_binomial += (n - kf + 1.0).ln() - kf.ln();
                }
                let magnitude = if up == 0.0 {
                    if k == n_atoms { 1.0 } else { 0.0 }
                } else if down == 0.0 {
                    if k == 0 { 1.0 } else { 0.0 }
                } else {
                    (0.5 * log_binomial + (n - kf) * up.ln() + kf * down.ln()).exp()
                };
                Complex64::from_polar(magnitude, kf * phi)
            })
            .collect();
        let mut state = Self { n_atoms, amplitudes };
        state.renormalize();
        Ok(state)
    }

    /// Builds a state from explicit Dicke amplitudes (index `k` = number of
    /// down spins). The vector is normalized on the way in.
    pub fn from_amplitudes(n_atoms: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::InvalidEnsemble("ensemble must contain at least one atom".into()));
        }
        if amplitudes.len() != n_atoms + 1 {
            return Err(Error::InvalidEnsemble(format!(
                "expected {} amplitudes, got {}",
                n_atoms + 1,
                amplitudes.len()
            )));
        }
        let mut state = Self { n_atoms, amplitudes };
        if state.norm_sqr() == 0.0 {
            return Err(Error::InvalidEnsemble("zero state vector".into()));
        }
        state.renormalize();
        Ok(state)
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Total spin `j = N/2`.
    pub fn spin(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    /// Magnetic quantum number of amplitude index `k`.
    pub fn m(&self, k: usize) -> f64 {
        self.spin() - k as f64
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    fn renormalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        for c in &mut self.amplitudes {
            *c /= norm;
        }
    }

    /// Collective rotation `exp(-i angle (axis . S))`.
    pub fn rotate(&self, axis: Vector3<f64>, angle: f64) -> Result<Self> {
        let length = axis.norm();
        if length == 0.0 {
            return Err(Error::ZeroAxis);
        }
        if (length - 1.0).abs() > 1e-9 {
            return Err(Error::AxisNotNormalized(length));
        }
        if angle == 0.0 {
            return Ok(self.clone());
        }
        if axis.x == 0.0 && axis.y == 0.0 {
            let phases: Vec<f64> = (0..=self.n_atoms).map(|k| angle * axis.z * self.m(k)).collect();
            return Ok(self.evolve_diagonal(&phases));
        }

        // Taylor series on sub-steps with |h| * ||axis.S|| <= 1/2; the spectral
        // norm of axis.S is exactly N/2 for a unit axis.
        let j = self.spin();
        let steps = ((angle.abs() * j) / 0.5).ceil().max(1.0) as usize;
        let h = angle / steps as f64;
        let generator = Generator::new(self.n_atoms, axis);
        let mut v = self.amplitudes.clone();
        let mut term = vec![Complex64::new(0.0, 0.0); v.len()];
        let mut next = term.clone();
        for _ in 0..steps {
            term.copy_from_slice(&v);
            for order in 1..64 {
                generator.apply(&term, &mut next);
                let scale = Complex64::new(0.0, -h / order as f64);
                let mut term_norm = 0.0;
                for (t, n) in term.iter_mut().zip(&next) {
                    *t = scale * n;
                    term_norm += t.norm_sqr();
                }
                for (acc, t) in v.iter_mut().zip(&term) {
                    *acc += t;
                }
                if term_norm < 1e-36 {
                    break;
                }
            }
        }
        let mut out = Self { n_atoms: self.n_atoms, amplitudes: v };
        debug_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
        out.renormalize();
        Ok(out)
    }

    /// One-axis twisting: amplitude `c_m` picks up
    /// `exp(+i (twist/N) m^2 - i linear_phase m)`.
    ///
    /// `twist` is `Q = int chi dt`, `linear_phase` is `int U0 dt`.
    pub fn oat_evolve(&self, twist: f64, linear_phase: f64) -> Self {
        let n = self.n_atoms as f64;
        let phases: Vec<f64> = (0..=self.n_atoms)
            .map(|k| {
                let m = self.m(k);
                linear_phase * m - twist / n * m * m
            })
            .collect();
        self.evolve_diagonal(&phases)
    }

    /// Applies `c_k -> c_k exp(-i phases[k])`.
    pub fn evolve_diagonal(&self, phases: &[f64]) -> Self {
        assert_eq!(phases.len(), self.amplitudes.len(), "one phase per Dicke level");
        let amplitudes = self
            .amplitudes
            .iter()
            .zip(phases)
            .map(|(c, &p)| c * Complex64::from_polar(1.0, -p))
            .collect();
        Self { n_atoms: self.n_atoms, amplitudes }
    }

    /// Exact first and second moments from ladder-operator matrix elements.
    pub fn moments(&self) -> MomentSet {
        let j = self.spin();
        let jj = j * (j + 1.0);
        let c = &self.amplitudes;
        let raise = |m: f64| (jj - m * (m + 1.0)).max(0.0).sqrt();

        let mut s_z = 0.0;
        let mut s_z_sq = 0.0;
        let mut s_plus = Complex64::new(0.0, 0.0);
        let mut s_plus_sq = Complex64::new(0.0, 0.0);
        let mut s_plus_s_z = Complex64::new(0.0, 0.0);
        for k in 0..c.len() {
            let m = self.m(k);
            let p = c[k].norm_sqr();
            s_z += p * m;
            s_z_sq += p * m * m;
            if k >= 1 {
                // S+ |m> = a(m) |m+1>, i.e. index k -> k-1.
                let a = raise(m);
                let overlap = c[k - 1].conj() * c[k] * a;
                s_plus += overlap;
                s_plus_s_z += overlap * (2.0 * m + 1.0);
            }
            if k >= 2 {
                let a2 = raise(m) * raise(m + 1.0);
                s_plus_sq += c[k - 2].conj() * c[k] * a2;
            }
        }
        RawMoments {
            n_atoms: self.n_atoms,
            s_plus,
            s_z,
            s_z_sq,
            s_plus_sq,
            transverse_sq: jj - s_z_sq,
            s_plus_s_z_sym: s_plus_s_z,
        }
        .into_moments()
    }
}

/// Tridiagonal action of `axis . S` on Dicke amplitudes.
struct Generator {
    diag: Vec<f64>,
    // coefficient multiplying c_k into index k-1 (S+ part)
    upper: Vec<Complex64>,
    // coefficient multiplying c_k into index k+1 (S- part)
    lower: Vec<Complex64>,
}

impl Generator {
    fn new(n_atoms: usize, axis: Vector3<f64>) -> Self {
        let j = n_atoms as f64 / 2.0;
        let jj = j * (j + 1.0);
        let plus = Complex64::new(axis.x, -axis.y) * 0.5;
        let minus = Complex64::new(axis.x, axis.y) * 0.5;
        let mut diag = Vec::with_capacity(n_atoms + 1);
        let mut upper = Vec::with_capacity(n_atoms + 1);
        let mut lower = Vec::with_capacity(n_atoms + 1);
        for k in 0..=n_atoms {
            let m = j - k as f64;
            diag.push(axis.z * m);
            upper.push(plus * (jj - m * (m + 1.0)).max(0.0).sqrt());
            lower.push(minus * (jj - m * (m - 1.0)).max(0.0).sqrt());
        }
        Self { diag, upper, lower }
    }

    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        let len = v.len();
        for k in 0..len {
            let mut acc = v[k] * self.diag[k];
            if k + 1 < len {
                acc += self.upper[k + 1] * v[k + 1];
            }
            if k >= 1 {
                acc += self.lower[k - 1] * v[k - 1];
            }
            out[k] = acc;
        }
    }
}
