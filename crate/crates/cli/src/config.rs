//! Declarative experiment description.
//!
//! Every dimensioned field is a unit-suffixed string (`"8 MHz"`, `"628 ns"`,
//! `"1.7 um"`); bare numbers are rejected for them. Frequencies in Hz
//! multiples are ordinary frequencies and become angular internally.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rydsqueeze_core::dressing::{c6_for_radius, DressingParams, PulseShape};
use rydsqueeze_core::loss::{GroupSizeDist, LossConfig, SeedingMode};
use rydsqueeze_core::units::{Angle, AngularFrequency, Density, Length, Quantity, Time};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// The shipped configuration: the experimental operating point.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub physics: Physics,
    pub schedule: Schedule,
    pub noise: Noise,
    pub loss: Loss,
    pub run: Run,
    pub spectroscopy: Spectroscopy,
    pub ising: Ising,
    pub sweep: Sweep,
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub n_atoms: usize,
    /// Gaussian rms widths of the cloud.
    pub cloud_rms: [Quantity<Length>; 3],
    pub rabi_peak: Quantity<AngularFrequency>,
    pub detuning: Quantity<AngularFrequency>,
    /// Isotropic critical radius at `detuning`; sets C6.
    pub critical_radius: Quantity<Length>,
    /// Per-axis factors on the critical radius.
    pub rc_scale: [f64; 3],
    /// Neighbours inside the interaction volume.
    pub n_neighbors: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    Flat,
    SinSquared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub n_pulses: usize,
    pub pulse_duration: Quantity<Time>,
    pub pulse_delay: Quantity<Time>,
    pub shape: ShapeKind,
    pub ramp_fraction: f64,
    /// Readout angles scanned for the squeezing curve.
    pub alpha_points: usize,
    /// Twisting strengths scanned for the reduced model, from 0 to `twist_max`.
    pub twist_points: usize,
    pub twist_max: f64,
    /// Initial tilts for spectroscopy and twist calibration.
    pub tilts: Vec<Quantity<Angle>>,
    /// Initial tilts for the twist calibration; the mean spin must stay
    /// away from the poles.
    pub calibration_tilts: Vec<Quantity<Angle>>,
    /// Phases of the Ramsey fringe used to calibrate contrast.
    pub fringe_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub contrast: f64,
    pub detection_fraction: f64,
    pub technical_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupSizeKind {
    Deterministic,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedingKind {
    SpinIndependent,
    PerAtom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Loss {
    /// Contaminant seed probability per up atom per pulse.
    pub seed_prob: f64,
    pub group_size: f64,
    pub group_size_dist: GroupSizeKind,
    pub seeding: SeedingKind,
    pub contaminant_lifetime: Quantity<Time>,
    /// Dark time used for the variance-versus-loss scan.
    pub scan_delay: Quantity<Time>,
    /// Seed probabilities for the variance-versus-loss scan.
    pub seed_prob_scan: Vec<f64>,
    pub scan_shots: usize,
    /// Dark times for the variance-versus-delay scan.
    pub delay_scan: Vec<Quantity<Time>>,
    pub delay_shots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    /// Dicke-basis evolution with the reduced twisting phase.
    Collective,
    /// Dicke-basis evolution with the full level-resolved light shift.
    LightShift,
    /// Exact finite-range Ising moments on a sampled cloud.
    Ising,
    /// Collective evolution plus correlated loss.
    CollectiveWithLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Run {
    pub seed: u64,
    pub shots: usize,
    pub backend: BackendKind,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spectroscopy {
    pub detuning_min: Quantity<AngularFrequency>,
    pub detuning_max: Quantity<AngularFrequency>,
    /// Log-spaced detunings between the two bounds.
    pub points: usize,
    pub relative_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ising {
    /// Disorder realisations of the Gaussian cloud.
    pub cloud_seeds: usize,
    /// Per-axis interaction radii for the finite-range limit.
    pub radii: [Quantity<Length>; 3],
    pub time_points: usize,
    pub density: Quantity<Density>,
    pub uniform_atoms: usize,
    /// Soft neighbour count the uniform-density radii are sized for.
    pub uniform_neighbors: f64,
    /// All-to-all sizes for the scaling reference.
    pub oat_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Relative trap intensity; scales the Rabi frequency squared.
    Intensity,
    /// Detuning in units of the configured detuning.
    Detuning,
    /// Dark time between pulses in units of the configured delay.
    PulseDelay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
    pub svg: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("shipped configuration is valid")
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.physics;
        if p.n_atoms == 0 {
            return Err(invalid("physics.n_atoms must be positive"));
        }
        if p.detuning.si() == 0.0 {
            return Err(invalid("physics.detuning must be nonzero (resonant dressing is outside the model)"));
        }
        if !(p.rabi_peak.si() >= 0.0) {
            return Err(invalid("physics.rabi_peak must be non-negative"));
        }
        if !(p.critical_radius.si() > 0.0) || p.cloud_rms.iter().any(|d| !(d.si() > 0.0)) {
            return Err(invalid("physics lengths must be positive"));
        }
        if p.rc_scale.iter().any(|s| !(*s > 0.0)) {
            return Err(invalid("physics.rc_scale factors must be positive"));
        }
        if !(p.n_neighbors >= 0.0 && p.n_neighbors <= p.n_atoms as f64) {
            return Err(invalid("physics.n_neighbors must lie in [0, n_atoms]"));
        }
        let s = &self.schedule;
        if s.n_pulses == 0 || s.n_pulses % 2 == 1 {
            return Err(invalid(format!("schedule.n_pulses = {} must be even for the echo split", s.n_pulses)));
        }
        if !(s.pulse_duration.si() > 0.0) || !(s.pulse_delay.si() >= 0.0) {
            return Err(invalid("schedule.pulse_duration must be positive and pulse_delay non-negative"));
        }
        if !(0.0..=0.5).contains(&s.ramp_fraction) {
            return Err(invalid("schedule.ramp_fraction must lie in [0, 0.5]"));
        }
        if s.alpha_points < 2 || s.twist_points < 2 || !(s.twist_max > 0.0) {
            return Err(invalid("schedule needs at least 2 readout and twist points and a positive twist_max"));
        }
        if s.tilts.len() < 3 || s.tilts.iter().any(|t| !(0.0..=std::f64::consts::PI).contains(&t.si())) {
            return Err(invalid("schedule.tilts needs at least 3 angles in [0, pi]"));
        }
        if s.calibration_tilts.len() < 3
            || s.calibration_tilts.iter().any(|t| !(t.si() > 0.0 && t.si() < std::f64::consts::PI))
        {
            return Err(invalid("schedule.calibration_tilts needs at least 3 angles strictly inside (0, pi)"));
        }
        if s.fringe_points < 5 {
            return Err(invalid("schedule.fringe_points must be at least 5"));
        }
        let n = &self.noise;
        if !(n.contrast > 0.0 && n.contrast <= 1.0) {
            return Err(invalid(format!("noise.contrast = {} must lie in (0, 1]", n.contrast)));
        }
        if !(n.detection_fraction >= 0.0) || !(n.technical_fraction >= 0.0) {
            return Err(invalid("noise fractions must be non-negative"));
        }
        let l = &self.loss;
        if !(0.0..=1.0).contains(&l.seed_prob) || l.seed_prob_scan.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(invalid("loss seed probabilities must lie in [0, 1]"));
        }
        if !(l.group_size >= 1.0) || !(l.contaminant_lifetime.si() > 0.0) {
            return Err(invalid("loss.group_size must be at least 1 and contaminant_lifetime positive"));
        }
        if l.seed_prob_scan.len() < 2 || l.delay_scan.len() < 3 {
            return Err(invalid("loss scans need at least 2 seed probabilities and 3 delays"));
        }
        if l.scan_shots < 2 || l.delay_shots < 2 {
            return Err(invalid("loss scans need at least 2 shots per point"));
        }
        if l.delay_scan.iter().any(|d| !(d.si() >= 0.0)) || !(l.scan_delay.si() >= 0.0) {
            return Err(invalid("loss.delay_scan entries must be non-negative"));
        }
        let sp = &self.spectroscopy;
        if sp.points < 3 || !(sp.relative_noise >= 0.0) {
            return Err(invalid("spectroscopy needs at least 3 points and non-negative noise"));
        }
        let (lo, hi) = (sp.detuning_min.si(), sp.detuning_max.si());
        if !(lo > 0.0 && hi > lo) {
            return Err(invalid("spectroscopy detunings must satisfy 0 < detuning_min < detuning_max"));
        }
        let i = &self.ising;
        if i.cloud_seeds == 0 || i.time_points < 3 || i.uniform_atoms < 2 || i.oat_sizes.len() < 2 {
            return Err(invalid("ising needs seeds, 3 time points, 2 uniform atoms and 2 all-to-all sizes"));
        }
        if i.radii.iter().any(|r| !(r.si() > 0.0)) || !(i.density.si() > 0.0) || !(i.uniform_neighbors > 0.0) {
            return Err(invalid("ising radii, density and uniform_neighbors must be positive"));
        }
        if i.oat_sizes.iter().any(|&n| n < 2) {
            return Err(invalid("ising.oat_sizes entries must be at least 2"));
        }
        if self.sweep.values.is_empty() || self.sweep.values.iter().any(|v| !(*v > 0.0)) {
            return Err(invalid("sweep.values must be a non-empty list of positive factors"));
        }
        Ok(())
    }

    pub fn dressing(&self) -> Result<DressingParams, CliError> {
        let p = &self.physics;
        let c6 = c6_for_radius(p.critical_radius.si(), p.detuning.si());
        let params = DressingParams::new(p.rabi_peak.si(), p.detuning.si(), c6)?
            .with_rc_scale(Vector3::from(p.rc_scale))?;
        Ok(params)
    }

    pub fn pulse_shape(&self) -> Result<PulseShape, CliError> {
        let s = &self.schedule;
        let shape = match s.shape {
            ShapeKind::Flat => PulseShape::flat(s.pulse_duration.si())?,
            ShapeKind::SinSquared => PulseShape::ramped(s.pulse_duration.si(), s.ramp_fraction)?,
        };
        Ok(shape)
    }

    pub fn cloud_rms(&self) -> Vector3<f64> {
        Vector3::from(self.physics.cloud_rms.clone().map(|q| q.si()))
    }

    pub fn loss_config(&self, rng_seed: u64) -> LossConfig {
        let l = &self.loss;
        LossConfig {
            seed_prob: l.seed_prob,
            group_size_mean: l.group_size,
            group_size_dist: match l.group_size_dist {
                GroupSizeKind::Deterministic => GroupSizeDist::Deterministic,
                GroupSizeKind::Geometric => GroupSizeDist::Geometric,
            },
            seeding: match l.seeding {
                SeedingKind::SpinIndependent => SeedingMode::SpinIndependent,
                SeedingKind::PerAtom => SeedingMode::PerAtom,
            },
            contaminant_decay: 1.0 / l.contaminant_lifetime.si(),
            pulse_delay: self.schedule.pulse_delay.si(),
            n_pulses: self.schedule.n_pulses,
            rng_seed,
        }
    }

    /// Log-spaced spectroscopy detunings in rad/s.
    pub fn spectroscopy_detunings(&self) -> Vec<f64> {
        let sp = &self.spectroscopy;
        let (lo, hi) = (sp.detuning_min.si(), sp.detuning_max.si());
        let k = (sp.points - 1) as f64;
        (0..sp.points).map(|i| lo * (hi / lo).powf(i as f64 / k)).collect()
    }
}
