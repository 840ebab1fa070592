//! One pipeline per subcommand. Each returns a typed report; `artifacts`
//! turns a report into curve sets and tables for emission.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector3;
use rayon::prelude::*;
use rydsqueeze_core::dressing::{critical_radius, DressingParams, PulseShape};
use rydsqueeze_core::estimators::{
    calibrate_atom_number, fit_neighbor_scaling, nlls_fit, ramsey_contrast_fit, weighted_linear_fit, AtomNumberEstimate,
    AtomNumberOptions, FitOptions, LightShiftModel, LinearFit, Model, Observation, RamseyFit,
};
use rydsqueeze_core::ising::{
    count_neighbors, ising_squeezing_curve, min_squeezing_over_time, soft_core_kernel, AtomCloud,
};
use rydsqueeze_core::loss::{
    normalized_variance, simulate_shots, variance_vs_delay, variance_vs_loss, DelayFit, LossConfig, LossSlopeFit,
    ShotRecord,
};
use rydsqueeze_core::seeds::{derive_seed, derived_rng};
use rydsqueeze_core::sequence::{
    build_echo, build_ramsey, build_squeezing, calibrate_twisting, run_schedule, Backend, DressingModel, Event,
    RunOptions, TwistCalibration,
};
use rydsqueeze_core::spin::TwistingModel;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{BackendKind, ExperimentConfig, SweepAxis};
use crate::output::{CurveSet, Point, Series, Table};
use crate::CliError;

const MHZ: f64 = 2.0 * PI * 1e6;
const MICRON: f64 = 1e-6;

fn summary_table(name: &str, entries: &[(&str, f64, f64)]) -> Table {
    let mut t = Table::new(name, &["quantity", "value", "error"]);
    for (k, v, e) in entries {
        t.push(vec![k.to_string(), v.to_string(), e.to_string()]);
    }
    t
}

/// What a pipeline hands to the emitter.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub curves: Vec<CurveSet>,
    pub tables: Vec<Table>,
}

fn run_options(config: &ExperimentConfig, n_shots: usize, seed: u64) -> RunOptions {
    RunOptions {
        n_shots,
        detection_noise_frac: config.noise.detection_fraction,
        technical_noise_frac: config.noise.technical_fraction,
        contrast: config.noise.contrast,
        seed,
    }
}

/// Gaussian cloud realisation `index` for the configured geometry.
pub fn gaussian_cloud(config: &ExperimentConfig, seed: u64, index: u64) -> Result<AtomCloud, CliError> {
    Ok(AtomCloud::sample_gaussian(config.physics.n_atoms, config.cloud_rms(), derive_seed(seed, "cloud", index))?)
}

pub fn backend(config: &ExperimentConfig, params: &DressingParams, seed: u64) -> Result<Backend, CliError> {
    let n_atoms = config.physics.n_atoms;
    let n_neighbors = config.physics.n_neighbors;
    Ok(match config.run.backend {
        BackendKind::Collective => Backend::Collective { n_atoms, n_neighbors, model: DressingModel::Twisting },
        BackendKind::LightShift => Backend::Collective { n_atoms, n_neighbors, model: DressingModel::LightShift },
        BackendKind::CollectiveWithLoss => Backend::CollectiveWithLoss {
            n_atoms,
            n_neighbors,
            model: DressingModel::Twisting,
            loss: config.loss_config(derive_seed(seed, "loss", 0)),
        },
        BackendKind::Ising => {
            let cloud = gaussian_cloud(config, seed, 0)?;
            Backend::Ising { kernel: soft_core_kernel(&cloud, &critical_radius(params)?)?, n_neighbors }
        }
    })
}

// ---------------------------------------------------------------- squeezing

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezingReport {
    /// Twisting strength of the configured schedule.
    pub twist: f64,
    pub alphas: Vec<f64>,
    pub xi2: Vec<f64>,
    pub xi2_min: f64,
    pub xi2_max: f64,
    pub alpha_opt: f64,
    pub contrast: f64,
    pub shots: Vec<f64>,
    /// `(Q, xi2_min, xi2_max)` of the reduced twisting model for the
    /// neighbour count with contrast and technical noise.
    pub reduced: Vec<(f64, f64, f64)>,
    pub reduced_optimum: (f64, f64),
    pub schedule_hash: String,
}

fn squeezing_with(
    config: &ExperimentConfig,
    params: &DressingParams,
    shape: &PulseShape,
    delay: f64,
    seed: u64,
) -> Result<SqueezingReport, CliError> {
    let s = &config.schedule;
    let backend = backend(config, params, seed)?;
    let n = config.physics.n_atoms as f64;
    let k = s.alpha_points;
    let alphas: Vec<f64> = (0..k).map(|i| PI * i as f64 / k as f64).collect();
    let exact = run_options(config, 0, seed);
    let mut xi2 = Vec::with_capacity(k);
    let mut contrast = 0.0;
    for &alpha in &alphas {
        let schedule = build_squeezing(s.n_pulses, shape, params, delay, alpha)?;
        let r = run_schedule(&schedule, &backend, &exact)?;
        let length = r.final_moments.spin_length();
        contrast = r.final_moments.contrast();
        if !(length > 0.0) {
            return Err(CliError::Numerical("mean spin vanished; squeezing is undefined".into()));
        }
        xi2.push(n * r.measured_variance / (length * length));
    }
    let (i_min, &xi2_min) = xi2.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("alpha grid");
    let xi2_max = xi2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let alpha_opt = alphas[i_min];
    let schedule = build_squeezing(s.n_pulses, shape, params, delay, alpha_opt)?;
    let twist = schedule.totals(config.physics.n_neighbors)?.twist;
    let sampled = run_schedule(&schedule, &backend, &run_options(config, config.run.shots, derive_seed(seed, "squeezing-shots", 0)))?;

    let model = TwistingModel {
        n_atoms: config.physics.n_neighbors.round().max(1.0) as usize,
        contrast: config.noise.contrast,
        technical_fraction: config.noise.technical_fraction,
    };
    let reduced = (0..s.twist_points)
        .map(|i| {
            let q = s.twist_max * i as f64 / (s.twist_points - 1) as f64;
            let (lo, hi) = model.xi2(q)?;
            Ok((q, lo, hi))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let reduced_optimum = model.optimum()?;
    Ok(SqueezingReport {
        twist,
        alphas,
        xi2,
        xi2_min,
        xi2_max,
        alpha_opt,
        contrast,
        shots: sampled.samples,
        reduced,
        reduced_optimum,
        schedule_hash: schedule.hash(),
    })
}

pub fn squeezing(config: &ExperimentConfig, seed: u64) -> Result<SqueezingReport, CliError> {
    squeezing_with(config, &config.dressing()?, &config.pulse_shape()?, config.schedule.pulse_delay.si(), seed)
}

impl SqueezingReport {
    pub fn artifacts(&self) -> Artifacts {
        let curve = CurveSet::new("squeezing_vs_alpha", "readout angle (rad)", "xi^2").with(Series::new(
            "schedule",
            self.alphas.iter().zip(&self.xi2).map(|(&a, &x)| Point::new(a, x)).collect(),
        ));
        let reduced = CurveSet::new("squeezing_vs_twist", "twisting strength Q (rad)", "xi^2")
            .with(Series::new("xi2_min", self.reduced.iter().map(|r| Point::new(r.0, r.1)).collect()))
            .with(Series::new("xi2_max", self.reduced.iter().map(|r| Point::new(r.0, r.2)).collect()));
        let mut shots = Table::new("squeezing_shots", &["shot", "s_z"]);
        for (i, v) in self.shots.iter().enumerate() {
            shots.push(vec![i.to_string(), v.to_string()]);
        }
        let summary = summary_table(
            "squeezing_summary",
            &[
                ("twist", self.twist, 0.0),
                ("xi2_min", self.xi2_min, 0.0),
                ("xi2_max", self.xi2_max, 0.0),
                ("alpha_opt", self.alpha_opt, 0.0),
                ("contrast", self.contrast, 0.0),
                ("reduced_twist_opt", self.reduced_optimum.0, 0.0),
                ("reduced_xi2_min", self.reduced_optimum.1, 0.0),
            ],
        );
        Artifacts { curves: vec![curve, reduced], tables: vec![summary, shots] }
    }
}

// --------------------------------------------------------------------- loss

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    /// No-light population difference `<D>_0`.
    pub reference_imbalance: f64,
    pub scan: LossSlopeFit,
    pub delay: DelayFit,
    /// `sigma^2` and its error at the configured seeding and delay.
    pub operating: (f64, f64),
    pub operating_loss: f64,
    pub shots: Vec<ShotRecord>,
}

pub fn loss_statistics(config: &ExperimentConfig, seed: u64) -> Result<LossReport, CliError> {
    let n = config.physics.n_atoms;
    let l = &config.loss;
    let reference = LossConfig { seed_prob: 0.0, ..config.loss_config(derive_seed(seed, "loss-reference", 0)) };
    let dark = simulate_shots(n, &reference, l.scan_shots)?;
    let reference_imbalance = dark.iter().map(|s| 2.0 * s.s_z).sum::<f64>() / dark.len() as f64;
    let groups = l
        .seed_prob_scan
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let c = LossConfig {
                seed_prob: p,
                pulse_delay: l.scan_delay.si(),
                ..config.loss_config(derive_seed(seed, "loss-scan", i as u64))
            };
            simulate_shots(n, &c, l.scan_shots)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let scan = variance_vs_loss(&groups, n, reference_imbalance)?;
    let delays: Vec<f64> = l.delay_scan.iter().map(|d| d.si()).collect();
    let delay = variance_vs_delay(n, &config.loss_config(derive_seed(seed, "loss-delay", 0)), &delays, l.delay_shots)?;
    let shots = simulate_shots(n, &config.loss_config(derive_seed(seed, "loss-operating", 0)), l.scan_shots)?;
    let operating = normalized_variance(&shots, n)?;
    let operating_loss = (reference_imbalance - shots.iter().map(|s| 2.0 * s.s_z).sum::<f64>() / shots.len() as f64) / n as f64;
    Ok(LossReport { reference_imbalance, scan, delay, operating, operating_loss, shots })
}


impl LossReport {
    pub fn artifacts(&self) -> Artifacts {
        let fit_line = |x: f64| self.scan.intercept + self.scan.slope * x;
        let scan = CurveSet::new("variance_vs_loss", "loss fraction", "normalized variance")
            .with(Series::new(
                "simulated",
                self.scan.points.iter().map(|p| Point::with_err(p.loss_fraction, p.sigma2, p.sigma2_err)).collect(),
            ))
            .with(Series::new(
                "fit",
                self.scan.points.iter().map(|p| Point::new(p.loss_fraction, fit_line(p.loss_fraction))).collect(),
            ));
        let model = |t: f64| self.delay.amplitude * (-self.delay.rate * t).exp() + 1.0;
        let delay = CurveSet::new("variance_vs_delay", "pulse delay (us)", "normalized variance")
            .with(Series::new(
                "simulated",
                self.delay.points.iter().map(|p| Point::with_err(p.delay / MICRON, p.sigma2, p.sigma2_err)).collect(),
            ))
            .with(Series::new(
                "fit",
                self.delay.points.iter().map(|p| Point::new(p.delay / MICRON, model(p.delay))).collect(),
            ));
        let mut shots = Table::new("loss_shots", &["shot", "n_up", "n_down", "s_z", "loss_fraction"]);
        for (i, s) in self.shots.iter().enumerate() {
            shots.push(vec![
                i.to_string(),
                s.n_up.to_string(),
                s.n_down.to_string(),
                s.s_z.to_string(),
                s.loss_fraction.to_string(),
            ]);
        }
        let summary = summary_table(
            "loss_summary",
            &[
                ("reference_imbalance", self.reference_imbalance, 0.0),
                ("slope", self.scan.slope, self.scan.slope_err),
                ("intercept", self.scan.intercept, self.scan.intercept_err),
                ("delay_amplitude", self.delay.amplitude, self.delay.amplitude_err),
                ("contaminant_lifetime_us", 1e6 / self.delay.rate, 1e6 * self.delay.rate_err / self.delay.rate.powi(2)),
                ("operating_sigma2", self.operating.0, self.operating.1),
                ("operating_loss_fraction", self.operating_loss, 0.0),
            ],
        );
        Artifacts { curves: vec![scan, delay], tables: vec![summary, shots] }
    }
}

// ------------------------------------------------------------- spectroscopy

#[derive(Debug, Clone, PartialEq)]
pub struct TiltFit {
    pub theta: f64,
    /// Up-neighbour count used to generate the spectrum.
    pub n_up_true: f64,
    /// Fitted Rabi frequency in rad/s.
    pub rabi: f64,
    pub rabi_err: f64,
    pub n_up: f64,
    pub n_up_err: f64,
    /// `(detuning, light shift, sigma)` in rad/s.
    pub data: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectroscopyReport {
    /// Equatorial spectrum at the operating point.
    pub operating: TiltFit,
    pub tilts: Vec<TiltFit>,
    pub scaling: LinearFit,
}

fn spectrum(config: &ExperimentConfig, theta: f64, seed: u64, index: u64) -> Result<TiltFit, CliError> {
    // fit in units of 2 pi MHz
    let model = LightShiftModel { reference_detuning: Some(config.physics.detuning.si() / MHZ) };
    let rabi = config.physics.rabi_peak.si() / MHZ;
    let n_up_true = config.physics.n_neighbors * (theta / 2.0).cos().powi(2);
    let noise = config.spectroscopy.relative_noise;
    let mut rng = derived_rng(seed, "spectroscopy", index);
    let data: Vec<Observation> = config
        .spectroscopy_detunings()
        .iter()
        .map(|&d| {
            let x = d / MHZ;
            let y = model.eval(x, &[rabi, n_up_true]);
            let sigma = if noise > 0.0 { noise * y.abs() } else { 1.0 };
            let z: f64 = StandardNormal.sample(&mut rng);
            Observation::new(x, y + if noise > 0.0 { sigma * z } else { 0.0 }, sigma)
        })
        .collect();
    // far-detuned point fixes the Rabi frequency guess
    let far = data.iter().max_by(|a, b| a.x.abs().total_cmp(&b.x.abs())).expect("detuning grid");
    let guess = [(4.0 * far.x * far.y).abs().sqrt(), 1.0];
    let fit = nlls_fit(&model, &data, &guess, FitOptions::default())?;
    let errs = fit.stderrs();
    Ok(TiltFit {
        theta,
        n_up_true,
        rabi: fit.params[0] * MHZ,
        rabi_err: errs[0] * MHZ,
        n_up: fit.params[1],
        n_up_err: errs[1],
        data: data.iter().map(|o| (o.x * MHZ, o.y * MHZ, o.sigma * MHZ)).collect(),
    })
}

pub fn spectroscopy(config: &ExperimentConfig, seed: u64) -> Result<SpectroscopyReport, CliError> {
    let thetas: Vec<f64> = config.schedule.tilts.iter().map(|t| t.si()).collect();
    let tilts = thetas
        .par_iter()
        .enumerate()
        .map(|(i, &t)| spectrum(config, t, seed, i as u64 + 1))
        .collect::<Result<Vec<_>, _>>()?;
    let operating = spectrum(config, FRAC_PI_2, seed, 0)?;
    let n_up: Vec<f64> = tilts.iter().map(|f| f.n_up).collect();
    let errs: Vec<f64> = tilts.iter().map(|f| f.n_up_err.max(1e-12)).collect();
    let scaling = fit_neighbor_scaling(&thetas, &n_up, Some(&errs))?;
    Ok(SpectroscopyReport { operating, tilts, scaling })
}

impl SpectroscopyReport {
    pub fn artifacts(&self) -> Artifacts {
        let mut spectra = CurveSet::new("light_shift_vs_detuning", "detuning (MHz)", "light shift (kHz)");
        for f in std::iter::once(&self.operating).chain(&self.tilts) {
            let label = format!("theta={:.4}", f.theta);
            let hz = |w: f64| w / (2.0 * PI);
            spectra.series.push(Series::new(
                label,
                f.data.iter().map(|&(d, u, s)| Point::with_err(hz(d) * 1e-6, hz(u) * 1e-3, hz(s) * 1e-3)).collect(),
            ));
        }
        let abscissa = |theta: f64| (theta / 2.0).cos().powi(2);
        let scaling = CurveSet::new("neighbors_vs_tilt", "cos^2(theta/2)", "fitted up neighbours")
            .with(Series::new(
                "fitted",
                self.tilts.iter().map(|f| Point::with_err(abscissa(f.theta), f.n_up, f.n_up_err)).collect(),
            ))
            .with(Series::new(
                "line",
                self.tilts
                    .iter()
                    .map(|f| Point::new(abscissa(f.theta), self.scaling.intercept + self.scaling.slope * abscissa(f.theta)))
                    .collect(),
            ));
        let mut fits = Table::new("spectroscopy_fits", &["theta", "n_up_true", "rabi_mhz", "rabi_err_mhz", "n_up", "n_up_err"]);
        for f in std::iter::once(&self.operating).chain(&self.tilts) {
            fits.push(vec![
                f.theta.to_string(),
                f.n_up_true.to_string(),
                (f.rabi / MHZ).to_string(),
                (f.rabi_err / MHZ).to_string(),
                f.n_up.to_string(),
                f.n_up_err.to_string(),
            ]);
        }
        let summary = summary_table(
            "spectroscopy_summary",
            &[
                ("rabi_mhz", self.operating.rabi / MHZ, self.operating.rabi_err / MHZ),
                ("n_up", self.operating.n_up, self.operating.n_up_err),
                ("neighbors_slope", self.scaling.slope, self.scaling.slope_err),
                ("neighbors_intercept", self.scaling.intercept, self.scaling.intercept_err),
            ],
        );
        Artifacts { curves: vec![spectra, scaling], tables: vec![summary, fits] }
    }
}

// -------------------------------------------------------------- calibration

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub atoms_raw: AtomNumberEstimate,
    /// With the configured detection and technical variances subtracted.
    pub atoms: AtomNumberEstimate,
    pub fringe: RamseyFit,
    /// `(phase, mean S_z, standard error)`
    pub fringe_points: Vec<(f64, f64, f64)>,
    pub twist: TwistCalibration,
    /// Twisting strength of the schedule from the dressing integrals.
    pub twist_predicted: f64,
}

pub fn calibrate(config: &ExperimentConfig, seed: u64) -> Result<CalibrationReport, CliError> {
    let params = config.dressing()?;
    let shape = config.pulse_shape()?;
    let s = &config.schedule;
    let delay = s.pulse_delay.si();
    let backend = backend(config, &params, seed)?;
    let n = config.physics.n_atoms as f64;
    let shots = config.run.shots.max(30);

    // equatorial coherent state, read out along the mean spin
    let css = build_squeezing(0, &shape, &params, delay, 0.0)?;
    let record = run_schedule(&css, &backend, &run_options(config, shots, derive_seed(seed, "atom-number", 0)))?;
    let bootstrap = AtomNumberOptions { seed: derive_seed(seed, "bootstrap", 0), ..AtomNumberOptions::default() };
    let atoms_raw = calibrate_atom_number(&record.samples, bootstrap)?;
    // every declared non-projection variance is removed
    let detection_variance = (config.noise.detection_fraction + config.noise.technical_fraction) * n / 4.0;
    let atoms = calibrate_atom_number(&record.samples, AtomNumberOptions { detection_variance, ..bootstrap })?;

    let k = s.fringe_points;
    let per_phase = (shots / k).max(2);
    let fringe_points = (0..k)
        .map(|i| {
            let phase = 2.0 * PI * i as f64 / k as f64;
            let schedule = build_ramsey(FRAC_PI_2, 0, &shape, &params, delay, phase)?;
            let r = run_schedule(&schedule, &backend, &run_options(config, per_phase, derive_seed(seed, "fringe", i as u64)))?;
            let m = r.samples.iter().sum::<f64>() / per_phase as f64;
            let var = r.samples.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (per_phase - 1) as f64;
            Ok((phase, m, (var / per_phase as f64).sqrt().max(1e-12)))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let phases: Vec<f64> = fringe_points.iter().map(|p| p.0).collect();
    let means: Vec<f64> = fringe_points.iter().map(|p| p.1).collect();
    let sems: Vec<f64> = fringe_points.iter().map(|p| p.2).collect();
    let fringe = ramsey_contrast_fit(&phases, &means, Some(&sems), n)?;

    let thetas: Vec<f64> = s.calibration_tilts.iter().map(|t| t.si()).collect();
    let build = |theta: f64| build_echo(theta, s.n_pulses, &shape, &params, delay, Event::Measure { axis: Vector3::x(), angle: 0.0 });
    let twist = calibrate_twisting(&thetas, build, &backend, &run_options(config, shots, derive_seed(seed, "twist", 0)))?;
    let twist_predicted = build(FRAC_PI_2)?.totals(config.physics.n_neighbors)?.twist;
    Ok(CalibrationReport { atoms_raw, atoms, fringe, fringe_points, twist, twist_predicted })
}

impl CalibrationReport {
    pub fn artifacts(&self) -> Artifacts {
        let f = &self.fringe;
        let fringe = CurveSet::new("ramsey_fringe", "analysis phase (rad)", "mean S_z")
            .with(Series::new("measured", self.fringe_points.iter().map(|&(p, m, e)| Point::with_err(p, m, e)).collect()))
            .with(Series::new(
                "fit",
                self.fringe_points
                    .iter()
                    .map(|&(p, _, _)| Point::new(p, f.amplitude * (p - f.phase_offset).cos() + f.offset))
                    .collect(),
            ));
        let t = &self.twist;
        let twist = CurveSet::new("twist_calibration", "initial S_z", "azimuth after echo (rad)")
            .with(Series::new("measured", t.points.iter().map(|&(_, sz, az)| Point::new(sz, az)).collect()))
            .with(Series::new("fit", t.points.iter().map(|&(_, sz, _)| Point::new(sz, t.intercept + t.slope * sz)).collect()));
        let summary = summary_table(
            "calibration_summary",
            &[
                ("atom_number_raw", self.atoms_raw.n_est, 0.5 * (self.atoms_raw.ci_high - self.atoms_raw.ci_low)),
                ("atom_number", self.atoms.n_est, 0.5 * (self.atoms.ci_high - self.atoms.ci_low)),
                ("contrast", f.contrast, f.contrast_err),
                ("fringe_phase", f.phase_offset, 0.0),
                ("twist", t.twist, t.twist_err),
                ("twist_predicted", self.twist_predicted, 0.0),
            ],
        );
        Artifacts { curves: vec![fringe, twist], tables: vec![summary] }
    }
}

// ------------------------------------------------------------- ising limit

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteRangePoint {
    pub n_atoms: usize,
    /// Mean soft-weighted and hard neighbour counts.
    pub soft_neighbors: f64,
    pub hard_neighbors: f64,
    /// Optimal time with unit peak coupling, and the squeezing reached.
    pub time: f64,
    pub xi2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingLimitReport {
    pub clouds: Vec<FiniteRangePoint>,
    pub mean_xi2: f64,
    pub xi2_sem: f64,
    pub mean_soft_neighbors: f64,
    pub soft_neighbors_sd: f64,
    /// `xi^2(t)` for the first cloud: `(t, xi2_min)`.
    pub first_cloud_curve: Vec<(f64, f64)>,
    pub uniform: FiniteRangePoint,
    pub uniform_radii: Vector3<f64>,
    pub oat: Vec<OatPoint>,
    pub oat_exponent: LinearFit,
}

fn finite_range_point(cloud: &AtomCloud, radii: &Vector3<f64>, grid: usize) -> Result<FiniteRangePoint, CliError> {
    let kernel = soft_core_kernel(cloud, radii)?;
    let counts = count_neighbors(cloud, radii)?;
    let n = cloud.len() as f64;
    let row = kernel.mean_row_sum();
    if !(row > 0.0) {
        return Err(CliError::Numerical("couplings vanish; no squeezing dynamics".into()));
    }
    // several all-to-all optimal times at the mean row sum
    let t_max = 2.0 * (3.0 * counts.weighted.max(1.0).cbrt() + 3.0) / row;
    let (time, xi2) = min_squeezing_over_time(&kernel, t_max, grid)?;
    Ok(FiniteRangePoint { n_atoms: n as usize, soft_neighbors: counts.weighted, hard_neighbors: counts.hard, time, xi2 })
}

/// Radii proportional to `shape` whose ellipsoid holds `neighbors` atoms
/// at `density` under the soft-core weight.
pub fn radii_for_neighbors(shape: Vector3<f64>, density: f64, neighbors: f64) -> Vector3<f64> {
    // integral of 1/(1 + d^6) over the unit-radius ellipsoid space is 2 pi^2 / 3
    let scale = (neighbors * 3.0 / (2.0 * PI * PI * density * shape.product())).cbrt();
    shape * scale
}

/// `(N, Q_opt, xi2_min)` of all-to-all twisting.
pub type OatPoint = (usize, f64, f64);

pub fn oat_scaling(sizes: &[usize]) -> Result<(Vec<OatPoint>, LinearFit), CliError> {
    let oat = sizes
        .par_iter()
        .map(|&n| {
            let (q, xi2) = TwistingModel::ideal(n).optimum()?;
            Ok((n, q, xi2))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let x: Vec<f64> = oat.iter().map(|p| (p.0 as f64).ln()).collect();
    let y: Vec<f64> = oat.iter().map(|p| p.2.ln()).collect();
    Ok((oat, weighted_linear_fit(&x, &y, None)?))
}

pub fn ising_limit(config: &ExperimentConfig, seed: u64) -> Result<IsingLimitReport, CliError> {
    let i = &config.ising;
    let radii = Vector3::from(i.radii.clone().map(|r| r.si()));
    let clouds = (0..i.cloud_seeds as u64)
        .into_par_iter()
        .map(|k| finite_range_point(&gaussian_cloud(config, seed, k)?, &radii, i.time_points))
        .collect::<Result<Vec<_>, CliError>>()?;
    let m = clouds.len() as f64;
    let mean_xi2 = clouds.iter().map(|c| c.xi2).sum::<f64>() / m;
    let mean_soft_neighbors = clouds.iter().map(|c| c.soft_neighbors).sum::<f64>() / m;
    let sd = |f: &dyn Fn(&FiniteRangePoint) -> f64, mean: f64| {
        if clouds.len() < 2 {
            0.0
        } else {
            (clouds.iter().map(|c| (f(c) - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
        }
    };
    let xi2_sem = sd(&|c| c.xi2, mean_xi2) / m.sqrt();
    let soft_neighbors_sd = sd(&|c| c.soft_neighbors, mean_soft_neighbors);

    let first = gaussian_cloud(config, seed, 0)?;
    let kernel = soft_core_kernel(&first, &radii)?;
    let t_end = 2.0 * clouds[0].time;
    let times: Vec<f64> = (0..i.time_points).map(|k| t_end * k as f64 / (i.time_points - 1) as f64).collect();
    let first_cloud_curve = ising_squeezing_curve(&kernel, &times, 64)?
        .iter()
        .zip(&times)
        .map(|(r, &t)| (t, r.xi2_min))
        .collect();

    let shape = Vector3::from(config.physics.rc_scale);
    let uniform_radii = radii_for_neighbors(shape, i.density.si(), i.uniform_neighbors);
    let box_cloud =
        AtomCloud::sample_uniform_density(i.uniform_atoms, i.density.si(), uniform_radii, derive_seed(seed, "uniform-cloud", 0))?;
    let uniform = finite_range_point(&box_cloud, &uniform_radii, i.time_points)?;

    let (oat, oat_exponent) = oat_scaling(&i.oat_sizes)?;
    Ok(IsingLimitReport {
        clouds,
        mean_xi2,
        xi2_sem,
        mean_soft_neighbors,
        soft_neighbors_sd,
        first_cloud_curve,
        uniform,
        uniform_radii,
        oat,
        oat_exponent,
    })
}

impl IsingLimitReport {
    pub fn artifacts(&self) -> Artifacts {
        let curve = CurveSet::new("finite_range_squeezing_vs_time", "time (1/peak coupling)", "xi^2")
            .with(Series::new("first_cloud", self.first_cloud_curve.iter().map(|&(t, x)| Point::new(t, x)).collect()));
        let oat = CurveSet::new("all_to_all_scaling", "atom number", "xi^2_min")
            .with(Series::new("optimum", self.oat.iter().map(|&(n, _, x)| Point::new(n as f64, x)).collect()));
        let mut clouds = Table::new("finite_range_clouds", &["realisation", "soft_neighbors", "hard_neighbors", "time", "xi2"]);
        for (k, c) in self.clouds.iter().enumerate() {
            clouds.push(vec![
                k.to_string(),
                c.soft_neighbors.to_string(),
                c.hard_neighbors.to_string(),
                c.time.to_string(),
                c.xi2.to_string(),
            ]);
        }
        let u = &self.uniform;
        let summary = summary_table(
            "ising_limit_summary",
            &[
                ("cloud_xi2", self.mean_xi2, self.xi2_sem),
                ("cloud_soft_neighbors", self.mean_soft_neighbors, self.soft_neighbors_sd),
                ("uniform_atoms", u.n_atoms as f64, 0.0),
                ("uniform_soft_neighbors", u.soft_neighbors, 0.0),
                ("uniform_xi2", u.xi2, 0.0),
                ("uniform_radius_x_um", self.uniform_radii.x / MICRON, 0.0),
                ("uniform_radius_y_um", self.uniform_radii.y / MICRON, 0.0),
                ("uniform_radius_z_um", self.uniform_radii.z / MICRON, 0.0),
                ("all_to_all_exponent", self.oat_exponent.slope, self.oat_exponent.slope_err),
            ],
        );
        Artifacts { curves: vec![curve, oat], tables: vec![summary, clouds] }
    }
}

// -------------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub twist: f64,
    pub xi2_min: f64,
    pub xi2_max: f64,
    pub alpha_opt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

pub fn sweep(config: &ExperimentConfig, seed: u64) -> Result<SweepReport, CliError> {
    let base = config.dressing()?;
    let shape = config.pulse_shape()?;
    let delay = config.schedule.pulse_delay.si();
    let axis = config.sweep.axis;
    let rows = config
        .sweep
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let (params, d) = match axis {
                SweepAxis::Intensity => (DressingParams { rabi_peak: base.rabi_peak * v.sqrt(), ..base }, delay),
                SweepAxis::Detuning => (base.with_detuning(base.detuning * v)?, delay),
                SweepAxis::PulseDelay => (base, delay * v),
            };
            let r = squeezing_with(config, &params, &shape, d, derive_seed(seed, "sweep", i as u64))?;
            Ok(SweepRow { value: v, twist: r.twist, xi2_min: r.xi2_min, xi2_max: r.xi2_max, alpha_opt: r.alpha_opt })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(SweepReport { axis, rows })
}

impl SweepReport {
    fn axis_label(&self) -> &'static str {
        match self.axis {
            SweepAxis::Intensity => "relative intensity",
            SweepAxis::Detuning => "relative detuning",
            SweepAxis::PulseDelay => "relative pulse delay",
        }
    }

    pub fn artifacts(&self) -> Artifacts {
        let x = self.axis_label();
        let series = |name: &str, f: fn(&SweepRow) -> f64| {
            CurveSet::new(format!("sweep_{name}"), x, name)
                .with(Series::new(name, self.rows.iter().map(|r| Point::new(r.value, f(r))).collect()))
        };
        let curves = vec![
            series("xi2_min", |r| r.xi2_min),
            series("xi2_max", |r| r.xi2_max),
            series("twist", |r| r.twist),
        ];
        let mut table = Table::new("sweep_table", &["value", "twist", "xi2_min", "xi2_max", "alpha_opt"]);
        for r in &self.rows {
            table.push(vec![
                r.value.to_string(),
                r.twist.to_string(),
                r.xi2_min.to_string(),
                r.xi2_max.to_string(),
                r.alpha_opt.to_string(),
            ]);
        }
        Artifacts { curves, tables: vec![table] }
    }
}
