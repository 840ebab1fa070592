//! Full 2^N state-vector reference simulator used as an independent oracle.
#![allow(dead_code)]

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

pub struct StateVector {
    pub n: usize,
    pub amps: Vec<Complex64>,
}

// bit q of the basis index set means atom q is down
fn is_up(index: usize, q: usize) -> bool {
    index >> q & 1 == 0
}

impl StateVector {
    pub fn product(n: usize, theta: f64, phi: f64) -> Self {
        let up = Complex64::new((theta / 2.0).cos(), 0.0);
        let down = Complex64::from_polar((theta / 2.0).sin(), phi);
        let amps = (0..1usize << n)
            .map(|idx| (0..n).fold(Complex64::new(1.0, 0.0), |acc, q| acc * if is_up(idx, q) { up } else { down }))
            .collect();
        Self { n, amps }
    }

    /// `exp(-i angle axis.S)` as a product of single-atom rotations.
    pub fn rotate(&mut self, axis: Vector3<f64>, angle: f64) {
        let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
        let i = Complex64::i();
        // 2x2 matrix cos - i sin (n.sigma) in (up, down) ordering
        let m00 = Complex64::new(c, 0.0) - i * s * axis.z;
        let m11 = Complex64::new(c, 0.0) + i * s * axis.z;
        let m01 = -i * s * Complex64::new(axis.x, -axis.y);
        let m10 = -i * s * Complex64::new(axis.x, axis.y);
        for q in 0..self.n {
            let bit = 1usize << q;
            for idx in 0..self.amps.len() {
                if idx & bit == 0 {
                    let (u, d) = (self.amps[idx], self.amps[idx | bit]);
                    self.amps[idx] = m00 * u + m01 * d;
                    self.amps[idx | bit] = m10 * u + m11 * d;
                }
            }
        }
    }

    /// Multiplies each basis amplitude by `exp(-i phase(sz_0, ..., sz_{n-1}))`
    /// with `sz = +-1`.
    pub fn diagonal(&mut self, phase: impl Fn(&[f64]) -> f64) {
        let mut spins = vec![0.0; self.n];
        for idx in 0..self.amps.len() {
            for (q, s) in spins.iter_mut().enumerate() {
                *s = if is_up(idx, q) { 1.0 } else { -1.0 };
            }
            self.amps[idx] *= Complex64::from_polar(1.0, -phase(&spins));
        }
    }

    /// `exp(+i (Q/N) S_z^2 - i lin S_z)`.
    pub fn oat(&mut self, q: f64, linear: f64) {
        let n = self.n as f64;
        self.diagonal(|s| {
            let sz: f64 = s.iter().sum::<f64>() / 2.0;
            linear * sz - q / n * sz * sz
        });
    }

    /// `exp(-i H t)` with `H = -sum_{i<j} J_ij sz_i sz_j / 4`.
    pub fn ising(&mut self, couplings: &[Vec<f64>], t: f64) {
        self.diagonal(|s| {
            let mut e = 0.0;
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    e -= couplings[i][j] * s[i] * s[j] / 4.0;
                }
            }
            e * t
        });
    }

    fn apply(&self, a: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for q in 0..self.n {
            let bit = 1usize << q;
            for idx in 0..self.amps.len() {
                let amp = self.amps[idx];
                match a {
                    0 => out[idx ^ bit] += 0.5 * amp,
                    1 => {
                        // sigma_y |up> = i |down>, sigma_y |down> = -i |up>
                        let f = if is_up(idx, q) { Complex64::i() } else { -Complex64::i() };
                        out[idx ^ bit] += 0.5 * f * amp;
                    }
                    _ => out[idx] += if is_up(idx, q) { 0.5 * amp } else { -0.5 * amp },
                }
            }
        }
        out
    }

    pub fn moments(&self) -> (Vector3<f64>, Matrix3<f64>) {
        let applied: Vec<Vec<Complex64>> = (0..3).map(|a| self.apply(a)).collect();
        let dot = |u: &[Complex64], v: &[Complex64]| u.iter().zip(v).map(|(x, y)| x.conj() * y).sum::<Complex64>();
        let mean = Vector3::from_fn(|a, _| dot(&self.amps, &applied[a]).re);
        // <S_a S_b> = (S_a psi)^dagger (S_b psi)
        let cov = Matrix3::from_fn(|a, b| dot(&applied[a], &applied[b]).re - mean[a] * mean[b]);
        (mean, cov)
    }
}
