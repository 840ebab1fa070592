mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::StateVector;
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rydsqueeze_core::ising::{ising_moments, CouplingMatrix};
use rydsqueeze_core::spin::{CollectiveSpinState, MomentSet};

fn assert_close(m: &MomentSet, oracle: (Vector3<f64>, Matrix3<f64>), tol: f64) {
    let (mean, cov) = oracle;
    let dm = (m.mean - mean).abs().max();
    let dc = (m.covariance - cov).abs().max();
    assert!(dm < tol && dc < tol, "mean diff {dm:.3e}, covariance diff {dc:.3e}");
}

fn random_axis(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if v.norm() > 0.1 && v.norm() < 1.0 {
            return v.normalize();
        }
    }
}

#[test]
fn rotation_about_x_matches_state_vector() {
    for alpha in [0.3, 1.1] {
        let dicke = CollectiveSpinState::coherent(8, FRAC_PI_2, 0.0).unwrap().rotate(Vector3::x(), alpha).unwrap();
        let mut sv = StateVector::product(8, FRAC_PI_2, 0.0);
        sv.rotate(Vector3::x(), alpha);
        let (_, cov) = sv.moments();
        assert!((dicke.moments().covariance[(2, 2)] - cov[(2, 2)]).abs() < 1e-10);
    }
}

#[test]
fn twisting_matches_state_vector() {
    let dicke = CollectiveSpinState::coherent(12, FRAC_PI_2, 0.0).unwrap().oat_evolve(0.4, 0.0);
    let mut sv = StateVector::product(12, FRAC_PI_2, 0.0);
    sv.oat(0.4, 0.0);
    assert_close(&dicke.moments(), sv.moments(), 1e-10);
}

#[test]
fn random_sequences_match_state_vector() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let n = 2 + trial % 11;
        let theta = rng.random_range(0.0..PI);
        let phi = rng.random_range(-PI..PI);
        let mut dicke = CollectiveSpinState::coherent(n, theta, phi).unwrap();
        let mut sv = StateVector::product(n, theta, phi);
        for _ in 0..6 {
            if rng.random_bool(0.5) {
                let axis = random_axis(&mut rng);
                let angle = rng.random_range(-PI..PI);
                dicke = dicke.rotate(axis, angle).unwrap();
                sv.rotate(axis, angle);
            } else {
                let q = rng.random_range(-3.0..3.0);
                let lin = rng.random_range(-2.0..2.0);
                dicke = dicke.oat_evolve(q, lin);
                sv.oat(q, lin);
            }
        }
        assert!((dicke.norm_sqr() - 1.0).abs() < 1e-12);
        assert_close(&dicke.moments(), sv.moments(), 1e-10);
    }
}

#[test]
fn quadrature_variance_matches_rotated_readout() {
    let alpha = PI / 5.0;
    let m = CollectiveSpinState::coherent(12, FRAC_PI_2, 0.0).unwrap().oat_evolve(0.9, 0.0).moments();
    let mut sv = StateVector::product(12, FRAC_PI_2, 0.0);
    sv.oat(0.9, 0.0);
    sv.rotate(Vector3::x(), alpha);
    let (_, cov) = sv.moments();
    assert!((m.quadrature_variance(alpha).unwrap() - cov[(2, 2)]).abs() < 1e-10);
}

#[test]
fn echo_cancels_linear_phase() {
    let (q, lin) = (1.3, 7.7);
    let css = CollectiveSpinState::coherent(11, FRAC_PI_2, 0.0).unwrap();
    let echoed = css
        .oat_evolve(q / 2.0, lin)
        .rotate(Vector3::y(), PI)
        .unwrap()
        .oat_evolve(q / 2.0, lin)
        .rotate(Vector3::y(), PI)
        .unwrap();
    let direct = css.oat_evolve(q, 0.0).moments();
    let m = echoed.moments();
    assert!((m.mean - direct.mean).abs().max() < 1e-10);
    assert!((m.covariance - direct.covariance).abs().max() < 1e-10);
}

#[allow(clippy::needless_range_loop)]
fn random_couplings(rng: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    let mut j = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let v = rng.random_range(-2.0..2.0);
            j[a][b] = v;
            j[b][a] = v;
        }
    }
    j
}

fn to_matrix(j: &[Vec<f64>]) -> CouplingMatrix {
    let n = j.len();
    CouplingMatrix::from_values(n, j.iter().flatten().copied().collect(), 2.0).unwrap()
}

#[test]
fn ising_closed_form_matches_state_vector_over_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for draw in 0..60 {
        let n = 2 + draw % 9;
        let j = random_couplings(&mut rng, n);
        let t = rng.random_range(0.0..3.0);
        let theta = if draw % 3 == 0 { FRAC_PI_2 } else { rng.random_range(0.0..PI) };
        let m = ising_moments(&to_matrix(&j), t, theta).unwrap();
        let mut sv = StateVector::product(n, theta, 0.0);
        sv.ising(&j, t);
        assert_close(&m, sv.moments(), 1e-8);
    }
}

#[test]
fn uniform_ising_is_one_axis_twisting() {
    let (n, q, t) = (40, 1.7, 0.3);
    for theta in [FRAC_PI_2, 1.0] {
        let j = CouplingMatrix::uniform(n, 2.0 * q / (n as f64 * t));
        let m = ising_moments(&j, t, theta).unwrap();
        let oat = CollectiveSpinState::coherent(n, theta, 0.0).unwrap().oat_evolve(q, 0.0).moments();
        assert!((m.mean - oat.mean).abs().max() < 1e-8);
        assert!((m.covariance - oat.covariance).abs().max() < 1e-8);
    }
}

#[test]
fn echo_removes_density_density_linear_terms() {
    // Full interaction sum_{i<j} V_ij n_i n_j + U0 sum_i n_i, n = (1 + sz)/2,
    // against the reduced -J sz sz / 4 form with J = -V, both with a
    // mid-sequence pi pulse about x.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 8;
    let v = random_couplings(&mut rng, n);
    let (u0, t) = (3.3, 0.8);
    let full_phase = |s: &[f64]| {
        let occ: Vec<f64> = s.iter().map(|x| (1.0 + x) / 2.0).collect();
        let mut e = u0 * occ.iter().sum::<f64>();
        for i in 0..n {
            for j in i + 1..n {
                e += v[i][j] * occ[i] * occ[j];
            }
        }
        e * t / 2.0
    };
    let mut full = StateVector::product(n, FRAC_PI_2, 0.0);
    full.diagonal(full_phase);
    full.rotate(Vector3::x(), PI);
    full.diagonal(full_phase);
    let neg: Vec<Vec<f64>> = v.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
    let mut reduced = StateVector::product(n, FRAC_PI_2, 0.0);
    reduced.ising(&neg, t / 2.0);
    reduced.rotate(Vector3::x(), PI);
    reduced.ising(&neg, t / 2.0);
    let (ma, ca) = full.moments();
    let (mb, cb) = reduced.moments();
    assert!((ma - mb).abs().max() < 1e-10);
    assert!((ca - cb).abs().max() < 1e-10);
    // and the closed form, viewed in the flipped frame
    let closed = ising_moments(&to_matrix(&neg), t, FRAC_PI_2).unwrap().rotated(Vector3::x(), PI).unwrap();
    assert_close(&closed, (mb, cb), 1e-10);
}
