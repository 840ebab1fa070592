//! Experiment schedules and their execution against the collective, Ising
//! and loss-augmented backends.
//!
//! Every schedule starts from all atoms in the down state; the first
//! rotation (about y by `theta - pi`) prepares the tilted coherent state.
//! The final [`Event::Measure`] carries the readout rotation applied just
//! before `S_z` is recorded: a quadrature readout is a rotation by `alpha`
//! about x, a Ramsey readout a quarter turn about an equatorial axis.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Rotation3, Unit, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dressing::{
    pair_twist_integral, phase_integral, pulse_integrals, DressingParams, PulseKind, PulseShape,
};
use crate::error::{invalid, Error, Result};
use crate::estimators::weighted_linear_fit;
use crate::ising::{ising_moments, CouplingMatrix};
use crate::loss::{simulate_shot, LossConfig};
use crate::seeds::{derive_seed, derived_rng};
use crate::spin::{CollectiveSpinState, MomentSet};
use crate::units::{Angle, AngularFrequency, Dispersion, Quantity, Time};

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// Collective microwave rotation `exp(-i angle axis.S)`.
    Rotation { axis: Vector3<f64>, angle: f64 },
    Dressing { shape: PulseShape, params: DressingParams },
    Delay { duration: f64 },
    /// Readout rotation followed by a measurement of `S_z`.
    Measure { axis: Vector3<f64>, angle: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    events: Vec<Event>,
}

/// Derived totals of a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleTotals {
    /// Interrogation time: pulse durations plus delays.
    pub duration: f64,
    pub n_pulses: usize,
    pub twist: f64,
    pub phase: f64,
}

fn check_axis(axis: &Vector3<f64>) -> Result<()> {
    let n = axis.norm();
    if n == 0.0 {
        return Err(Error::ZeroAxis);
    }
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::AxisNotNormalized(n));
    }
    Ok(())
}

impl PulseSchedule {
    /// Validates that there is exactly one measurement and that it is last.
    pub fn new(events: Vec<Event>) -> Result<Self> {
        let measures = events.iter().filter(|e| matches!(e, Event::Measure { .. })).count();
        if measures != 1 || !matches!(events.last(), Some(Event::Measure { .. })) {
            return Err(Error::InvalidSchedule("exactly one Measure event is required and it must be last".into()));
        }
        for e in &events {
            match e {
                Event::Rotation { axis, angle } | Event::Measure { axis, angle } => {
                    check_axis(axis)?;
                    if !angle.is_finite() {
                        return Err(invalid("angle", "must be finite"));
                    }
                }
                Event::Dressing { shape, params } => {
                    shape.validate()?;
                    params.validate()?;
                }
                Event::Delay { duration } => {
                    if !(*duration >= 0.0 && duration.is_finite()) {
                        return Err(invalid("duration", format!("delay {duration} must be non-negative")));
                    }
                }
            }
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn n_pulses(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, Event::Dressing { .. })).count()
    }

    /// `(axis, angle)` of the readout rotation.
    pub fn readout(&self) -> (Vector3<f64>, f64) {
        match self.events.last() {
            Some(Event::Measure { axis, angle }) => (*axis, *angle),
            _ => unreachable!("validated on construction"),
        }
    }

    /// Sums the per-pulse twisting strength and phase for `n_neighbors`.
    pub fn totals(&self, n_neighbors: f64) -> Result<ScheduleTotals> {
        let mut t = ScheduleTotals { duration: 0.0, n_pulses: 0, twist: 0.0, phase: 0.0 };
        for e in &self.events {
            match e {
                Event::Dressing { shape, params } => {
                    let p = pulse_integrals(shape, params, n_neighbors, 1)?;
                    t.duration += shape.duration;
                    t.n_pulses += 1;
                    t.twist += p.twist;
                    t.phase += p.phase;
                }
                Event::Delay { duration } => t.duration += duration,
                _ => {}
            }
        }
        Ok(t)
    }

    /// Declarative text form (TOML with one `[[event]]` table per event).
    /// Values are written in SI units with shortest round-trip formatting.
    pub fn to_toml(&self) -> String {
        let file = ScheduleFile { event: self.events.iter().map(EventSpec::from_event).collect() };
        toml::to_string(&file).expect("schedule serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScheduleFile = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        Self::new(file.event.into_iter().map(EventSpec::into_event).collect::<Result<Vec<_>>>()?)
    }

    /// Hex SHA-256 of [`to_toml`](Self::to_toml).
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleFile {
    event: Vec<EventSpec>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ShapeSpec {
    Flat,
    SinSquared,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum EventSpec {
    Rotation {
        axis: [f64; 3],
        angle: Quantity<Angle>,
    },
    Dressing {
        shape: ShapeSpec,
        #[serde(default)]
        ramp_fraction: f64,
        duration: Quantity<Time>,
        rabi_peak: Quantity<AngularFrequency>,
        detuning: Quantity<AngularFrequency>,
        c6: Quantity<Dispersion>,
        rc_scale: [f64; 3],
    },
    Delay {
        duration: Quantity<Time>,
    },
    Measure {
        axis: [f64; 3],
        angle: Quantity<Angle>,
    },
}

fn si<D: crate::units::Dimension>(value: f64, unit: &str) -> Quantity<D> {
    Quantity::parse(&format!("{value:?} {unit}")).expect("finite SI value")
}

impl EventSpec {
    fn from_event(e: &Event) -> Self {
        match e {
            Event::Rotation { axis, angle } => Self::Rotation { axis: (*axis).into(), angle: si(*angle, "rad") },
            Event::Measure { axis, angle } => Self::Measure { axis: (*axis).into(), angle: si(*angle, "rad") },
            Event::Delay { duration } => Self::Delay { duration: si(*duration, "s") },
            Event::Dressing { shape, params } => Self::Dressing {
                shape: match shape.kind {
                    PulseKind::Flat => ShapeSpec::Flat,
                    PulseKind::SinSquaredRamps => ShapeSpec::SinSquared,
                },
                ramp_fraction: shape.ramp_fraction,
                duration: si(shape.duration, "s"),
                rabi_peak: si(params.rabi_peak, "rad/s"),
                detuning: si(params.detuning, "rad/s"),
                c6: si(params.c6, "rad/s m^6"),
                rc_scale: params.rc_scale.into(),
            },
        }
    }

    fn into_event(self) -> Result<Event> {
        Ok(match self {
            Self::Rotation { axis, angle } => Event::Rotation { axis: axis.into(), angle: angle.si() },
            Self::Measure { axis, angle } => Event::Measure { axis: axis.into(), angle: angle.si() },
            Self::Delay { duration } => Event::Delay { duration: duration.si() },
            Self::Dressing { shape, ramp_fraction, duration, rabi_peak, detuning, c6, rc_scale } => {
                let shape = match shape {
                    ShapeSpec::Flat => PulseShape::flat(duration.si())?,
                    ShapeSpec::SinSquared => PulseShape::ramped(duration.si(), ramp_fraction)?,
                };
                let params = DressingParams::new(rabi_peak.si(), detuning.si(), c6.si())?.with_rc_scale(rc_scale.into())?;
                Event::Dressing { shape, params }
            }
        })
    }
}

fn preparation(theta: f64) -> Result<Event> {
    if !(0.0..=PI).contains(&theta) {
        return Err(invalid("theta", format!("{theta} is outside [0, pi]")));
    }
    Ok(Event::Rotation { axis: Vector3::y(), angle: theta - PI })
}

/// `n` pulses, each followed by a delay except the last.
fn pulse_train(n: usize, shape: &PulseShape, params: &DressingParams, delay: f64, events: &mut Vec<Event>) {
    for i in 0..n {
        events.push(Event::Dressing { shape: *shape, params: *params });
        if i + 1 < n {
            events.push(Event::Delay { duration: delay });
        }
    }
}

/// Ramsey readout axis at analysis phase `phase`.
pub fn ramsey_readout(phase: f64) -> Event {
    Event::Measure { axis: Vector3::new(phase.cos(), phase.sin(), 0.0), angle: FRAC_PI_2 }
}

/// Tilted-state preparation, `n_pulses` dressing pulses separated by
/// `delay`, and a quarter-turn readout about the equatorial axis at
/// `analysis_phase`.
pub fn build_ramsey(
    theta: f64,
    n_pulses: usize,
    shape: &PulseShape,
    params: &DressingParams,
    delay: f64,
    analysis_phase: f64,
) -> Result<PulseSchedule> {
    let mut events = vec![preparation(theta)?];
    pulse_train(n_pulses, shape, params, delay, &mut events);
    events.push(ramsey_readout(analysis_phase));
    PulseSchedule::new(events)
}

/// Tilted-state preparation and twisting with a spin echo: half the pulses,
/// a half turn about x, the other half, then `readout`.
pub fn build_echo(
    theta: f64,
    n_pulses: usize,
    shape: &PulseShape,
    params: &DressingParams,
    delay: f64,
    readout: Event,
) -> Result<PulseSchedule> {
    if !n_pulses.is_multiple_of(2) {
        return Err(Error::InvalidSchedule(format!("echo sequences need an even pulse count, got {n_pulses}")));
    }
    if !matches!(readout, Event::Measure { .. }) {
        return Err(Error::InvalidSchedule("readout must be a Measure event".into()));
    }
    let mut events = vec![preparation(theta)?];
    pulse_train(n_pulses / 2, shape, params, delay, &mut events);
    if n_pulses > 0 {
        events.push(Event::Delay { duration: delay });
    }
    events.push(Event::Rotation { axis: Vector3::x(), angle: PI });
    pulse_train(n_pulses / 2, shape, params, delay, &mut events);
    events.push(readout);
    PulseSchedule::new(events)
}

/// Squeezing sequence: equatorial state, echo twisting, readout of the
/// quadrature `S_z cos(alpha) + S_y sin(alpha)`.
pub fn build_squeezing(
    n_pulses: usize,
    shape: &PulseShape,
    params: &DressingParams,
    delay: f64,
    alpha: f64,
) -> Result<PulseSchedule> {
    build_echo(FRAC_PI_2, n_pulses, shape, params, delay, Event::Measure { axis: Vector3::x(), angle: alpha })
}

/// How dressing pulses act in the collective backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DressingModel {
    /// Exact level energies: with `n` atoms up, the `n`-th up atom is
    /// shifted by the light shift at `(n - 1) N_c / N` up neighbours.
    LightShift,
    /// Quadratic expansion: one-axis twisting with the pulse-integrated
    /// twisting strength and single-atom phase.
    Twisting,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Collective { n_atoms: usize, n_neighbors: f64, model: DressingModel },
    /// Finite-range Ising dynamics. `kernel` holds the dimensionless
    /// `1/(1 + d^6)` weights; the contact coupling follows from the dressing
    /// parameters with `n_neighbors` inside the effective detuning.
    Ising { kernel: CouplingMatrix, n_neighbors: f64 },
    CollectiveWithLoss { n_atoms: usize, n_neighbors: f64, model: DressingModel, loss: LossConfig },
}

impl Backend {
    pub fn n_atoms(&self) -> usize {
        match self {
            Self::Collective { n_atoms, .. } | Self::CollectiveWithLoss { n_atoms, .. } => *n_atoms,
            Self::Ising { kernel, .. } => kernel.len(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Collective { .. } => "collective",
            Self::Ising { .. } => "ising",
            Self::CollectiveWithLoss { .. } => "collective+loss",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub n_shots: usize,
    /// Detection-noise variance as a fraction of `N/4`.
    pub detection_noise_frac: f64,
    /// Transverse technical-noise variance as a fraction of `N/4`.
    pub technical_noise_frac: f64,
    /// Baseline Ramsey contrast from trap-light dephasing.
    pub contrast: f64,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { n_shots: 0, detection_noise_frac: 0.0, technical_noise_frac: 0.0, contrast: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub schedule_hash: String,
    pub backend: &'static str,
    pub n_atoms: usize,
    pub seed: u64,
    pub n_shots: usize,
    pub detection_noise_frac: f64,
    pub technical_noise_frac: f64,
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Moments before the readout rotation, including dephasing and
    /// technical noise.
    pub final_moments: MomentSet,
    /// Moments after the readout rotation.
    pub readout_moments: MomentSet,
    /// Exact mean of the recorded `S_z`.
    pub measured_mean: f64,
    /// Exact variance of the recorded `S_z`, detection noise included.
    pub measured_variance: f64,
    /// Sampled `S_z` values (empty when no shots were requested).
    pub samples: Vec<f64>,
    /// Atoms lost in each shot (loss backend only).
    pub lost_atoms: Vec<u64>,
    pub metadata: RunMetadata,
}

impl ExperimentResult {
    /// `measured_variance / (N/4)`.
    pub fn normalized_variance(&self) -> f64 {
        4.0 * self.measured_variance / self.metadata.n_atoms as f64
    }
}

/// `Phi(n) = sum_{l<n} int U(Omega(t), l N_c/N) dt` for `n = N - k`, indexed
/// by Dicke index `k`.
fn level_phases(shape: &PulseShape, params: &DressingParams, n_atoms: usize, n_neighbors: f64) -> Result<Vec<f64>> {
    let per_atom = (0..n_atoms)
        .map(|l| phase_integral(shape, params, l as f64 * n_neighbors / n_atoms as f64))
        .collect::<Result<Vec<_>>>()?;
    let mut cumulative = vec![0.0; n_atoms + 1];
    for n in 1..=n_atoms {
        cumulative[n] = cumulative[n - 1] + per_atom[n - 1];
    }
    Ok((0..=n_atoms).map(|k| cumulative[n_atoms - k]).collect())
}

fn evolve_collective(
    schedule: &PulseSchedule,
    n_atoms: usize,
    n_neighbors: f64,
    model: DressingModel,
) -> Result<MomentSet> {
    let mut state = CollectiveSpinState::coherent(n_atoms, PI, 0.0)?;
    let mut cache: Vec<(PulseShape, DressingParams, Vec<f64>)> = Vec::new();
    for e in schedule.events() {
        match e {
            Event::Rotation { axis, angle } => state = state.rotate(*axis, *angle)?,
            Event::Dressing { shape, params } => match model {
                DressingModel::Twisting => {
                    let p = pulse_integrals(shape, params, n_neighbors, 1)?;
                    state = state.oat_evolve(p.twist, p.phase);
                }
                DressingModel::LightShift => {
                    let idx = match cache.iter().position(|(s, p, _)| s == shape && p == params) {
                        Some(i) => i,
                        None => {
                            cache.push((*shape, *params, level_phases(shape, params, n_atoms, n_neighbors)?));
                            cache.len() - 1
                        }
                    };
                    state = state.evolve_diagonal(&cache[idx].2);
                }
            },
            Event::Delay { .. } | Event::Measure { .. } => {}
        }
    }
    Ok(state.moments())
}

/// Ising evolution for schedules of the form: preparation, `k` pulses,
/// optional half turn about x, `k` more pulses, readout. Pulses enter
/// through the time integral of the pair interaction; linear light shifts
/// are assumed removed by the echo.
fn evolve_ising(schedule: &PulseSchedule, kernel: &CouplingMatrix, n_neighbors: f64) -> Result<MomentSet> {
    let events = schedule.events();
    let mismatch = |why: &str| Error::BackendMismatch(format!("ising backend: {why}"));
    let theta = match events.first() {
        Some(Event::Rotation { axis, angle }) if (axis - Vector3::y()).norm() < 1e-12 && (-PI..=0.0).contains(angle) => {
            angle + PI
        }
        _ => return Err(mismatch("schedule must start with the tilt preparation about y")),
    };
    let mut before = 0usize;
    let mut after = 0usize;
    let mut echo = false;
    let mut pair_integral = 0.0;
    let mut reference: Option<DressingParams> = None;
    for e in &events[1..events.len() - 1] {
        match e {
            Event::Dressing { shape, params } => {
                if echo { after += 1 } else { before += 1 }
                pair_integral += 2.0 * pair_twist_integral(shape, params, n_neighbors)?;
                reference.get_or_insert(*params);
            }
            Event::Rotation { axis, angle } => {
                if echo || (axis - Vector3::x()).norm() > 1e-12 || (angle.abs() - PI).abs() > 1e-12 {
                    return Err(mismatch("only a single half-turn echo about x is supported"));
                }
                echo = true;
            }
            Event::Delay { .. } => {}
            Event::Measure { .. } => unreachable!("validated on construction"),
        }
    }
    if before + after > 0 && (!echo || before != after) {
        return Err(mismatch("dressing requires a symmetric echo to remove linear light shifts"));
    }
    // J_ij t = kernel_ij * int 2 chi_pair dt
    let moments = match reference {
        Some(_) => ising_moments(kernel, pair_integral, theta)?,
        None => ising_moments(kernel, 0.0, theta)?,
    };
    if echo {
        moments.rotated(Vector3::x(), PI)
    } else {
        Ok(moments)
    }
}

fn uniform_pulse_delay(schedule: &PulseSchedule) -> Result<f64> {
    let mut gaps = Vec::new();
    let mut current: Option<f64> = None;
    for e in schedule.events() {
        match e {
            Event::Dressing { .. } => {
                if let Some(g) = current.take() {
                    gaps.push(g);
                }
                current = Some(0.0);
            }
            Event::Delay { duration } => {
                if let Some(g) = current.as_mut() {
                    *g += duration;
                }
            }
            _ => {}
        }
    }
    let first = gaps.first().copied().unwrap_or(0.0);
    if gaps.iter().any(|g| (g - first).abs() > 1e-12 * first.max(1e-12)) {
        return Err(Error::BackendMismatch("loss backend needs equal delays between pulses".into()));
    }
    Ok(first)
}

/// Executes `schedule` on `backend`.
///
/// Moments are evolved exactly, dephased to the baseline contrast, given
/// transverse technical noise and rotated by the readout. Shots are Gaussian
/// draws of the recorded `S_z` with detection-noise variance added; with
/// the loss backend each shot also loses up atoms drawn from the loss model,
/// which shifts `S_z` by half the loss projected through the readout.
pub fn run_schedule(schedule: &PulseSchedule, backend: &Backend, options: &RunOptions) -> Result<ExperimentResult> {
    if !(options.detection_noise_frac >= 0.0) || !(options.technical_noise_frac >= 0.0) {
        return Err(invalid("noise", "noise fractions must be non-negative"));
    }
    let n_atoms = backend.n_atoms();
    let raw = match backend {
        Backend::Collective { n_atoms, n_neighbors, model }
        | Backend::CollectiveWithLoss { n_atoms, n_neighbors, model, .. } => {
            evolve_collective(schedule, *n_atoms, *n_neighbors, *model)?
        }
        Backend::Ising { kernel, n_neighbors } => evolve_ising(schedule, kernel, *n_neighbors)?,
    };
    let quarter = n_atoms as f64 / 4.0;
    let final_moments = raw.dephased(options.contrast)?.with_transverse_noise(options.technical_noise_frac * quarter);
    let (axis, angle) = schedule.readout();
    let readout_moments = final_moments.rotated(axis, angle)?;
    let detection = options.detection_noise_frac * quarter;
    let measured_mean = readout_moments.mean.z;
    let measured_variance = readout_moments.covariance[(2, 2)] + detection;

    let mut lost_atoms = Vec::new();
    let mut samples = Vec::with_capacity(options.n_shots);
    if options.n_shots > 0 {
        let sd = measured_variance.max(0.0).sqrt();
        let mut rng = derived_rng(options.seed, "readout", 0);
        let loss = match backend {
            Backend::CollectiveWithLoss { loss, .. } => {
                let delay = uniform_pulse_delay(schedule)?;
                Some(LossConfig { pulse_delay: delay, n_pulses: schedule.n_pulses(), ..*loss })
            }
            _ => None,
        };
        let projection = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).matrix()[(2, 2)];
        for shot in 0..options.n_shots {
            let mut value = measured_mean + sd * rng.sample::<f64, _>(StandardNormal);
            if let Some(cfg) = &loss {
                let record = simulate_shot(n_atoms, cfg, derive_seed(options.seed, "loss-shot", shot as u64))?;
                value -= 0.5 * record.n_lost as f64 * projection;
                lost_atoms.push(record.n_lost);
            }
            samples.push(value);
        }
    }
    Ok(ExperimentResult {
        final_moments,
        readout_moments,
        measured_mean,
        measured_variance,
        samples,
        lost_atoms,
        metadata: RunMetadata {
            schedule_hash: schedule.hash(),
            backend: backend.label(),
            n_atoms,
            seed: options.seed,
            n_shots: options.n_shots,
            detection_noise_frac: options.detection_noise_frac,
            technical_noise_frac: options.technical_noise_frac,
            contrast: options.contrast,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistCalibration {
    /// `slope * N / 2`.
    pub twist: f64,
    pub twist_err: f64,
    pub slope: f64,
    pub intercept: f64,
    /// `(theta, <S_z>_0, accumulated azimuth)` per tilt.
    pub points: Vec<(f64, f64, f64)>,
}

/// Runs the echo sequence at each tilt and regresses the accumulated
/// azimuth of the mean spin on the initial `<S_z> = (N/2) cos(theta)`.
///
/// Under the twisting convention used throughout, a twist `Q` rotates the
/// mean spin by `(2Q/N) <S_z>_0` after the echo, so `Q = slope N / 2`.
/// With shots requested, the azimuth is taken from the sample means of the
/// `S_x` and `S_y` readouts instead of the exact moments.
pub fn calibrate_twisting(
    thetas: &[f64],
    build: impl Fn(f64) -> Result<PulseSchedule>,
    backend: &Backend,
    options: &RunOptions,
) -> Result<TwistCalibration> {
    if thetas.len() < 3 {
        return Err(invalid("thetas", format!("need at least 3 tilts, got {}", thetas.len())));
    }
    let n = backend.n_atoms() as f64;
    let mut points = Vec::with_capacity(thetas.len());
    for (i, &theta) in thetas.iter().enumerate() {
        let schedule = build(theta)?;
        let opts = RunOptions { seed: derive_seed(options.seed, "twist-calibration", i as u64), ..*options };
        let azimuth = if options.n_shots == 0 {
            run_schedule(&schedule, backend, &opts)?.final_moments.azimuth()
        } else {
            // S_x and S_y through quarter turns about -y and +x
            let mean_of = |axis: Vector3<f64>, tag: u64| -> Result<f64> {
                let mut events = schedule.events().to_vec();
                *events.last_mut().expect("non-empty") = Event::Measure { axis, angle: FRAC_PI_2 };
                let o = RunOptions { seed: derive_seed(opts.seed, "quadrature", tag), ..opts };
                let r = run_schedule(&PulseSchedule::new(events)?, backend, &o)?;
                Ok(r.samples.iter().sum::<f64>() / r.samples.len() as f64)
            };
            let sx = mean_of(-Vector3::y(), 0)?;
            let sy = mean_of(Vector3::x(), 1)?;
            sy.atan2(sx)
        };
        points.push((theta, 0.5 * n * theta.cos(), azimuth));
    }
    let x: Vec<f64> = points.iter().map(|p| p.1).collect();
    let y: Vec<f64> = points.iter().map(|p| p.2).collect();
    let fit = weighted_linear_fit(&x, &y, None)?;
    Ok(TwistCalibration {
        twist: fit.slope * n / 2.0,
        twist_err: fit.slope_err * n / 2.0,
        slope: fit.slope,
        intercept: fit.intercept,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dressing::c6_for_radius;

    const MHZ: f64 = 2.0 * PI * 1e6;

    fn params() -> DressingParams {
        DressingParams::new(1.2 * MHZ, 8.0 * MHZ, c6_for_radius(5e-6, 8.0 * MHZ)).unwrap()
    }

    #[test]
    fn measure_must_be_last_and_unique() {
        let m = Event::Measure { axis: Vector3::x(), angle: 0.0 };
        assert!(PulseSchedule::new(vec![]).is_err());
        assert!(PulseSchedule::new(vec![m.clone(), Event::Delay { duration: 1.0 }]).is_err());
        assert!(PulseSchedule::new(vec![m.clone(), m.clone()]).is_err());
        assert!(PulseSchedule::new(vec![m]).is_ok());
    }

    #[test]
    fn odd_echo_rejected() {
        let shape = PulseShape::flat(1e-6).unwrap();
        assert!(matches!(build_squeezing(3, &shape, &params(), 1e-6, 0.0), Err(Error::InvalidSchedule(_))));
        assert!(build_ramsey(4.0, 2, &shape, &params(), 1e-6, 0.0).is_err());
    }

    #[test]
    fn text_form_round_trips() {
        let shape = PulseShape::ramped(628e-9, 0.2).unwrap();
        let s = build_squeezing(4, &shape, &params(), 100e-6, 0.37).unwrap();
        let text = s.to_toml();
        let back = PulseSchedule::from_toml(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.hash(), s.hash());
    }

    #[test]
    fn bare_numbers_rejected_in_text_form() {
        let text = "[[event]]\nkind = \"delay\"\nduration = 5\n\n[[event]]\nkind = \"measure\"\naxis = [1.0, 0.0, 0.0]\nangle = \"0 rad\"\n";
        assert!(PulseSchedule::from_toml(text).is_err());
        let ok = text.replace("duration = 5", "duration = \"5 us\"");
        assert!(PulseSchedule::from_toml(&ok).is_ok());
    }

    #[test]
    fn ising_rejects_unechoed_dressing() {
        let shape = PulseShape::flat(1e-6).unwrap();
        let s = build_ramsey(FRAC_PI_2, 2, &shape, &params(), 1e-6, 0.0).unwrap();
        let backend = Backend::Ising { kernel: CouplingMatrix::uniform(4, 1.0), n_neighbors: 3.0 };
        assert!(matches!(run_schedule(&s, &backend, &RunOptions::default()), Err(Error::BackendMismatch(_))));
    }
}
