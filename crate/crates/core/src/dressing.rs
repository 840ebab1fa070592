//! Rydberg-dressing light shift, collective twisting rate, interaction range
//! and pulse-integrated phases.
//!
//! All frequencies are angular (rad/s), lengths in metres, times in seconds.

use nalgebra::Vector3;

use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate;

pub const QUADRATURE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressingParams {
    /// Peak Rabi frequency.
    pub rabi_peak: f64,
    /// Sign-carrying detuning from the Rydberg state.
    pub detuning: f64,
    /// Sign-carrying van der Waals coefficient in rad/s m^6.
    pub c6: f64,
    /// Per-axis factors applied to the isotropic critical radius.
    pub rc_scale: Vector3<f64>,
}

impl DressingParams {
    pub fn new(rabi_peak: f64, detuning: f64, c6: f64) -> Result<Self> {
        let p = Self { rabi_peak, detuning, c6, rc_scale: Vector3::new(1.0, 1.0, 1.0) };
        p.validate()?;
        Ok(p)
    }

    pub fn with_rc_scale(mut self, rc_scale: Vector3<f64>) -> Result<Self> {
        self.rc_scale = rc_scale;
        self.validate()?;
        Ok(self)
    }

    pub fn with_detuning(mut self, detuning: f64) -> Result<Self> {
        self.detuning = detuning;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.detuning == 0.0 {
            return Err(Error::ResonantDressing);
        }
        if !self.detuning.is_finite() || !self.c6.is_finite() {
            return Err(invalid("detuning", "must be finite"));
        }
        if !(self.rabi_peak >= 0.0 && self.rabi_peak.is_finite()) {
            return Err(invalid("rabi_peak", format!("{} must be finite and non-negative", self.rabi_peak)));
        }
        if self.rc_scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(invalid("rc_scale", "factors must be positive"));
        }
        if (self.rabi_peak / self.detuning).abs() >= 1.0 {
            log::warn!(
                "|rabi/detuning| = {:.3} is outside the perturbative dressing regime",
                (self.rabi_peak / self.detuning).abs()
            );
        }
        Ok(())
    }
}

/// `C6` that places the isotropic critical radius at `radius` for `detuning`.
pub fn c6_for_radius(radius: f64, detuning: f64) -> f64 {
    2.0 * detuning.abs() * radius.powi(6)
}

/// Single-atom shift `Omega^2/(4 Delta)` reduced by `n_up` blockading
/// neighbours: `U = Omega^2/(4 Delta) / sqrt(1 + n_up (Omega/Delta)^2)`.
pub fn light_shift(params: &DressingParams, omega: f64, n_up: f64) -> Result<f64> {
    if params.detuning == 0.0 {
        return Err(Error::ResonantDressing);
    }
    if n_up < 0.0 {
        return Err(invalid("n_up", format!("{n_up} is negative")));
    }
    Ok(light_shift_unchecked(params.detuning, omega, n_up))
}

#[inline]
pub(crate) fn light_shift_unchecked(detuning: f64, omega: f64, n_up: f64) -> f64 {
    let ratio = omega / detuning;
    omega * omega / (4.0 * detuning) / (1.0 + n_up * ratio * ratio).sqrt()
}

/// Collective twisting rate at the peak Rabi frequency.
pub fn chi_collective(params: &DressingParams, n_neighbors: f64) -> Result<f64> {
    chi_at(params, params.rabi_peak, n_neighbors)
}

/// `chi = N_c Omega^4 / (16 Delta_eff^3)` with
/// `Delta_eff = sqrt(Delta^2 + N_c Omega^2 / 2)`, carrying the sign of the
/// detuning so that `chi = -(N/2) dU/dS_z` at `S_z = 0`.
pub fn chi_at(params: &DressingParams, omega: f64, n_neighbors: f64) -> Result<f64> {
    if params.detuning == 0.0 {
        return Err(Error::ResonantDressing);
    }
    if n_neighbors < 0.0 {
        return Err(invalid("n_neighbors", format!("{n_neighbors} is negative")));
    }
    Ok(n_neighbors * chi_pair_unchecked(params.detuning, omega, n_neighbors))
}

/// Per-pair twisting rate `Omega^4 / (16 Delta_eff^3)`.
pub fn chi_pair(params: &DressingParams, omega: f64, n_neighbors: f64) -> Result<f64> {
    if params.detuning == 0.0 {
        return Err(Error::ResonantDressing);
    }
    Ok(chi_pair_unchecked(params.detuning, omega, n_neighbors.max(0.0)))
}

#[inline]
fn chi_pair_unchecked(detuning: f64, omega: f64, n_neighbors: f64) -> f64 {
    let omega2 = omega * omega;
    let eff = (detuning * detuning + 0.5 * n_neighbors * omega2).sqrt();
    detuning.signum() * omega2 * omega2 / (16.0 * eff.powi(3))
}

/// Per-axis critical radii `|C6/(2 Delta)|^{1/6} * rc_scale`.
pub fn critical_radius(params: &DressingParams) -> Result<Vector3<f64>> {
    if params.detuning == 0.0 {
        return Err(Error::ResonantDressing);
    }
    let isotropic = (params.c6 / (2.0 * params.detuning)).abs().powf(1.0 / 6.0);
    Ok(params.rc_scale * isotropic)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    /// Rectangular envelope.
    Flat,
    /// Flat top with `sin^2` rise and fall.
    SinSquaredRamps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShape {
    pub kind: PulseKind,
    /// Fraction of the duration spent in each ramp, in `(0, 0.5]`.
    pub ramp_fraction: f64,
    pub duration: f64,
}

impl PulseShape {
    pub fn flat(duration: f64) -> Result<Self> {
        let s = Self { kind: PulseKind::Flat, ramp_fraction: 0.0, duration };
        s.validate()?;
        Ok(s)
    }

    pub fn ramped(duration: f64, ramp_fraction: f64) -> Result<Self> {
        let s = Self { kind: PulseKind::SinSquaredRamps, ramp_fraction, duration };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(invalid("duration", format!("{} must be positive", self.duration)));
        }
        if self.kind == PulseKind::SinSquaredRamps && !(self.ramp_fraction > 0.0 && self.ramp_fraction <= 0.5) {
            return Err(invalid("ramp_fraction", format!("{} is outside (0, 0.5]", self.ramp_fraction)));
        }
        Ok(())
    }

    /// Envelope `s(t)` in `[0, 1]`; zero outside `[0, duration]`.
    pub fn envelope(&self, t: f64) -> f64 {
        if !(0.0..=self.duration).contains(&t) {
            return 0.0;
        }
        match self.kind {
            PulseKind::Flat => 1.0,
            PulseKind::SinSquaredRamps => {
                let ramp = self.ramp_fraction * self.duration;
                let edge = t.min(self.duration - t);
                if edge >= ramp {
                    1.0
                } else {
                    (std::f64::consts::FRAC_PI_2 * edge / ramp).sin().powi(2)
                }
            }
        }
    }

    /// Points where the envelope is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            PulseKind::Flat => Vec::new(),
            PulseKind::SinSquaredRamps => {
                let ramp = self.ramp_fraction * self.duration;
                vec![ramp, self.duration - ramp]
            }
        }
    }

    /// `int_0^duration g(Omega_p s(t)) dt`.
    pub fn integrate(&self, rabi_peak: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
        self.validate()?;
        Ok(integrate(
            |t| g(rabi_peak * self.envelope(t)),
            0.0,
            self.duration,
            &self.breakpoints(),
            QUADRATURE_REL_TOL,
        )?
        .value)
    }
}

/// Totals over a train of identical pulses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseIntegrals {
    /// `int chi dt`
    pub twist: f64,
    /// `int U dt` with half the neighbours up.
    pub phase: f64,
}

/// Twisting strength and single-atom phase accumulated over `n_pulses`.
///
/// The phase is evaluated with `n_neighbors / 2` up neighbours, the mean
/// occupancy of an equatorial state.
pub fn pulse_integrals(
    shape: &PulseShape,
    params: &DressingParams,
    n_neighbors: f64,
    n_pulses: usize,
) -> Result<PulseIntegrals> {
    if n_pulses == 0 {
        return Err(invalid("n_pulses", "at least one pulse is required"));
    }
    params.validate()?;
    if n_neighbors < 0.0 {
        return Err(invalid("n_neighbors", format!("{n_neighbors} is negative")));
    }
    let d = params.detuning;
    let twist = shape.integrate(params.rabi_peak, |w| n_neighbors * chi_pair_unchecked(d, w, n_neighbors))?;
    let phase = phase_integral(shape, params, 0.5 * n_neighbors)?;
    let m = n_pulses as f64;
    Ok(PulseIntegrals { twist: m * twist, phase: m * phase })
}

/// `int U(Omega(t), n_up) dt` over one pulse.
pub fn phase_integral(shape: &PulseShape, params: &DressingParams, n_up: f64) -> Result<f64> {
    if params.detuning == 0.0 {
        return Err(Error::ResonantDressing);
    }
    if n_up < 0.0 {
        return Err(invalid("n_up", format!("{n_up} is negative")));
    }
    let d = params.detuning;
    shape.integrate(params.rabi_peak, |w| light_shift_unchecked(d, w, n_up))
}

/// `int chi_pair(Omega(t)) dt` over one pulse.
pub fn pair_twist_integral(shape: &PulseShape, params: &DressingParams, n_neighbors: f64) -> Result<f64> {
    params.validate()?;
    let d = params.detuning;
    shape.integrate(params.rabi_peak, |w| chi_pair_unchecked(d, w, n_neighbors.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const MHZ: f64 = 2.0 * PI * 1e6;

    fn operating_point() -> DressingParams {
        DressingParams::new(1.2 * MHZ, 8.0 * MHZ, c6_for_radius(5e-6, 8.0 * MHZ)).unwrap()
    }

    #[test]
    fn resonant_dressing_rejected() {
        assert!(matches!(DressingParams::new(1.0, 0.0, 1.0), Err(Error::ResonantDressing)));
        let mut p = operating_point();
        p.detuning = 0.0;
        assert!(matches!(light_shift(&p, 1.0, 0.0), Err(Error::ResonantDressing)));
        assert!(matches!(chi_collective(&p, 1.0), Err(Error::ResonantDressing)));
        assert!(matches!(critical_radius(&p), Err(Error::ResonantDressing)));
    }

    #[test]
    fn single_atom_limit() {
        let p = operating_point();
        let w = p.rabi_peak;
        assert_eq!(light_shift(&p, w, 0.0).unwrap(), w * w / (4.0 * p.detuning));
        assert_eq!(chi_collective(&p, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn radius_follows_sixth_root() {
        let p = DressingParams::new(1.0, 3.0, 6.0e-36).unwrap();
        assert!((critical_radius(&p).unwrap().x - 1e-6).abs() < 1e-18);
        let doubled = p.with_detuning(6.0).unwrap();
        let ratio = critical_radius(&doubled).unwrap().x / critical_radius(&p).unwrap().x;
        assert!((ratio - 2f64.powf(-1.0 / 6.0)).abs() < 1e-14);
    }

    #[test]
    fn flat_envelope_has_no_breakpoints() {
        let s = PulseShape::flat(1e-6).unwrap();
        assert!(s.breakpoints().is_empty());
        assert_eq!(s.envelope(0.5e-6), 1.0);
        assert_eq!(s.envelope(2e-6), 0.0);
        let r = PulseShape::ramped(1e-6, 0.25).unwrap();
        assert!(r.envelope(0.0).abs() < 1e-30 && r.envelope(1e-6).abs() < 1e-30);
        assert!((r.envelope(0.125e-6) - 0.5).abs() < 1e-12);
        assert!(PulseShape::ramped(1e-6, 0.6).is_err());
        assert!(PulseShape::flat(0.0).is_err());
    }

    #[test]
    fn zero_pulses_rejected() {
        let s = PulseShape::flat(1e-6).unwrap();
        assert!(pulse_integrals(&s, &operating_point(), 13.0, 0).is_err());
    }
}
