use super::Model;
use crate::dressing::{light_shift_unchecked, phase_integral, DressingParams, PulseShape};

/// Light shift versus detuning, `x = Delta`, parameters `(rabi_peak, n_up)`.
///
/// With a reference detuning set, the up-neighbour count is scaled as
/// `n_up * |Delta_ref / Delta|^{1/2}`, the volume change of the interaction
/// ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LightShiftModel {
    pub reference_detuning: Option<f64>,
}

impl LightShiftModel {
    fn neighbor_factor(&self, detuning: f64) -> f64 {
        match self.reference_detuning {
            Some(reference) => (reference / detuning).abs().sqrt(),
            None => 1.0,
        }
    }
}

impl Model for LightShiftModel {
    fn parameter_names(&self) -> Vec<String> {
        vec!["rabi_peak".into(), "n_up".into()]
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        light_shift_unchecked(x, p[0], p[1] * self.neighbor_factor(x))
    }

    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let (w, s) = (p[0], self.neighbor_factor(x));
        let n = p[1] * s;
        let r2 = (w / x).powi(2);
        let d = 1.0 + n * r2;
        let root = d.sqrt();
        out[0] = w / (2.0 * x) / root - n * w.powi(3) / (4.0 * x.powi(3)) / (d * root);
        out[1] = -w * w / (8.0 * x) * r2 * s / (d * root);
    }
}

/// `y = A exp(-rate x) + 1`, parameters `(amplitude, rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExpPlusOne;

impl Model for ExpPlusOne {
    fn parameter_names(&self) -> Vec<String> {
        vec!["amplitude".into(), "rate".into()]
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * (-p[1] * x).exp() + 1.0
    }

    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let e = (-p[1] * x).exp();
        out[0] = e;
        out[1] = -p[0] * x * e;
    }
}

/// Ramsey phase accumulated over `n_pulses` shaped pulses versus detuning,
/// parameters `(rabi_peak, n_up)`. Gradient by finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsePhaseModel {
    pub shape: PulseShape,
    pub n_pulses: usize,
    pub reference_detuning: Option<f64>,
}

impl Model for PulsePhaseModel {
    fn parameter_names(&self) -> Vec<String> {
        vec!["rabi_peak".into(), "n_up".into()]
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let scale = self.reference_detuning.map_or(1.0, |r| (r / x).abs().sqrt());
        let params = DressingParams { rabi_peak: p[0], detuning: x, c6: 0.0, rc_scale: nalgebra::Vector3::repeat(1.0) };
        match phase_integral(&self.shape, &params, (p[1] * scale).max(0.0)) {
            Ok(phase) => self.n_pulses as f64 * phase,
            Err(_) => f64::NAN,
        }
    }
}
