//! Contaminant-seeded avalanche loss under stroboscopic dressing.
//!
//! Each shot starts from a binomial split of `N` atoms. During every pulse
//! new contaminants are seeded; each seed removes one up atom at once. A
//! contaminant that survives the following delay (probability
//! `exp(-gamma tau_d)`) is still present when the next pulse switches on
//! and triggers an avalanche that removes `G - 1` further up atoms, so one
//! surviving seed costs a group of `G` atoms in total. Loss only ever
//! removes up atoms, so it shows up entirely in the population difference.
//!
//! For Poisson seeding independent of the spin state, with `lambda` seeds
//! per shot and survival `s`, the loss fraction is
//! `l = lambda (1 + s (g - 1)) / N` and the excess normalized variance is
//! `lambda (1 + s (E[G^2] - 1)) / N`: slope `g` at `s = 1` for fixed group
//! size, and pure Poisson loss (slope 1) once contaminants decay between
//! pulses.

use std::io::Write;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric, Poisson};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::estimators::{nlls_fit, weighted_linear_fit, EstimatorError, ExpPlusOne, FitOptions, Observation};
use crate::seeds::{derive_seed, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupSizeDist {
    /// Always `g` atoms (non-integer means are met by randomized rounding).
    Deterministic,
    /// `1 + Geometric(1/g)`, mean `g`.
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedingMode {
    /// Poisson number of seeds with mean `p_c N / 2` per pulse, independent
    /// of the actual up population.
    SpinIndependent,
    /// Each up atom seeds with probability `p_c` per pulse.
    PerAtom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Seed probability per up atom per pulse.
    pub seed_prob: f64,
    pub group_size_mean: f64,
    pub group_size_dist: GroupSizeDist,
    pub seeding: SeedingMode,
    /// Contaminant decay rate in 1/s.
    pub contaminant_decay: f64,
    /// Dark time between pulses in s.
    pub pulse_delay: f64,
    pub n_pulses: usize,
    pub rng_seed: u64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            seed_prob: 5e-5,
            group_size_mean: 17.0,
            group_size_dist: GroupSizeDist::Deterministic,
            seeding: SeedingMode::SpinIndependent,
            contaminant_decay: 1.0 / 29e-6,
            pulse_delay: 100e-6,
            n_pulses: 48,
            rng_seed: 0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.seed_prob) {
            return Err(invalid("seed_prob", format!("{} is outside [0, 1]", self.seed_prob)));
        }
        if !(self.group_size_mean >= 1.0 && self.group_size_mean.is_finite()) {
            return Err(invalid("group_size_mean", format!("{} must be at least 1", self.group_size_mean)));
        }
        if !(self.contaminant_decay > 0.0 && self.contaminant_decay.is_finite()) {
            return Err(invalid("contaminant_decay", "must be positive"));
        }
        if !(self.pulse_delay >= 0.0 && self.pulse_delay.is_finite()) {
            return Err(invalid("pulse_delay", "must be non-negative"));
        }
        Ok(())
    }

    /// Probability that a contaminant survives one delay.
    pub fn survival(&self) -> f64 {
        (-self.contaminant_decay * self.pulse_delay).exp()
    }

    fn group_size(&self, r: &mut impl Rng) -> u64 {
        let g = self.group_size_mean;
        match self.group_size_dist {
            GroupSizeDist::Deterministic => {
                let base = g.floor();
                base as u64 + u64::from(r.random::<f64>() < g - base)
            }
            GroupSizeDist::Geometric => {
                if g <= 1.0 {
                    1
                } else {
                    1 + Geometric::new(1.0 / g).expect("0 < 1/g < 1").sample(r)
                }
            }
        }
    }

    /// Expected `(loss fraction, excess normalized variance)` for
    /// spin-independent seeding in the small-loss limit.
    pub fn expected_excess(&self, n_atoms: usize) -> (f64, f64) {
        let n = n_atoms as f64;
        let per_pulse = self.seed_prob * n / 2.0;
        let seeds = per_pulse * self.n_pulses as f64;
        let triggering = per_pulse * self.n_pulses.saturating_sub(1) as f64 * self.survival();
        let g = self.group_size_mean;
        let g2 = match self.group_size_dist {
            GroupSizeDist::Deterministic => {
                let f = g - g.floor();
                g.floor().powi(2) * (1.0 - f) + (g.floor() + 1.0).powi(2) * f
            }
            GroupSizeDist::Geometric => 2.0 * g * g - g,
        };
        ((seeds + triggering * (g - 1.0)) / n, (seeds + triggering * (g2 - 1.0)) / n)
    }
}

/// One experimental realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotRecord {
    pub n_up: u64,
    pub n_down: u64,
    /// `(n_up - n_down) / 2`
    pub s_z: f64,
    /// `(D0 - (n_up - n_down)) / N` with reference imbalance `D0 = 0`.
    pub loss_fraction: f64,
    /// Atoms removed during the sequence (simulation truth).
    pub n_lost: u64,
}

impl ShotRecord {
    fn new(n_atoms: usize, n_up: u64, n_down: u64, n_lost: u64) -> Self {
        let d = n_up as f64 - n_down as f64;
        Self { n_up, n_down, s_z: d / 2.0, loss_fraction: -d / n_atoms as f64, n_lost }
    }
}

/// Simulates one shot; deterministic in `seed`.
pub fn simulate_shot(n_atoms: usize, config: &LossConfig, seed: u64) -> Result<ShotRecord> {
    config.validate()?;
    if n_atoms == 0 {
        return Err(Error::InvalidEnsemble("ensemble must contain at least one atom".into()));
    }
    let mut r = rng(seed);
    let mut n_up = Binomial::new(n_atoms as u64, 0.5).expect("valid binomial").sample(&mut r);
    let n_down = n_atoms as u64 - n_up;
    let survival = config.survival();
    let spin_independent = Poisson::new(config.seed_prob * n_atoms as f64 / 2.0).ok();
    let mut pending = 0u64;
    let mut lost = 0u64;
    for _ in 0..config.n_pulses {
        // contaminants left from the previous pulse switch on with the light
        let survivors = if pending > 0 {
            Binomial::new(pending, survival).expect("valid binomial").sample(&mut r)
        } else {
            0
        };
        for _ in 0..survivors {
            let extra = (config.group_size(&mut r) - 1).min(n_up);
            n_up -= extra;
            lost += extra;
        }
        let seeds = match config.seeding {
            SeedingMode::SpinIndependent => spin_independent.map_or(0, |p| p.sample(&mut r) as u64),
            SeedingMode::PerAtom => Binomial::new(n_up, config.seed_prob).expect("valid binomial").sample(&mut r),
        }
        .min(n_up);
        n_up -= seeds;
        lost += seeds;
        pending = seeds;
    }
    Ok(ShotRecord::new(n_atoms, n_up, n_down, lost))
}

/// `n_shots` shots in parallel; shot `i` uses
/// `derive_seed(config.rng_seed, "loss-shot", i)`.
pub fn simulate_shots(n_atoms: usize, config: &LossConfig, n_shots: usize) -> Result<Vec<ShotRecord>> {
    config.validate()?;
    (0..n_shots)
        .into_par_iter()
        .map(|i| simulate_shot(n_atoms, config, derive_seed(config.rng_seed, "loss-shot", i as u64)))
        .collect()
}

/// Normalized variance `4 Var(S_z) / N` with its sampling error.
pub fn normalized_variance(shots: &[ShotRecord], n_atoms: usize) -> Result<(f64, f64)> {
    let n = shots.len();
    if n < 2 {
        return Err(EstimatorError::TooFewPoints { needed: 2, got: n }.into());
    }
    let mean = shots.iter().map(|s| s.s_z).sum::<f64>() / n as f64;
    let var = shots.iter().map(|s| (s.s_z - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sigma2 = 4.0 * var / n_atoms as f64;
    Ok((sigma2, sigma2 * (2.0 / (n - 1) as f64).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossPoint {
    pub loss_fraction: f64,
    pub sigma2: f64,
    pub sigma2_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossSlopeFit {
    pub slope: f64,
    pub slope_err: f64,
    pub intercept: f64,
    pub intercept_err: f64,
    pub points: Vec<LossPoint>,
}

/// Weighted straight-line fit of `sigma^2` against the loss fraction, one
/// point per shot group (e.g. one group per seeding rate).
///
/// The loss fraction of a group is `(D0 - <D>) / N` with `D` the
/// population difference and `D0` the no-light reference imbalance.
pub fn variance_vs_loss(groups: &[Vec<ShotRecord>], n_atoms: usize, reference_imbalance: f64) -> Result<LossSlopeFit> {
    let mut points = Vec::with_capacity(groups.len());
    for g in groups {
        let (sigma2, sigma2_err) = normalized_variance(g, n_atoms)?;
        let mean_d = g.iter().map(|s| 2.0 * s.s_z).sum::<f64>() / g.len() as f64;
        points.push(LossPoint { loss_fraction: (reference_imbalance - mean_d) / n_atoms as f64, sigma2, sigma2_err });
    }
    let x: Vec<f64> = points.iter().map(|p| p.loss_fraction).collect();
    let spread = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - x.iter().cloned().fold(f64::INFINITY, f64::min);
    if points.len() < 2 || !(spread > 1e-3) {
        return Err(invalid("groups", format!("loss fractions span {spread:.2e}; need a spread of at least 1e-3")));
    }
    let y: Vec<f64> = points.iter().map(|p| p.sigma2).collect();
    let s: Vec<f64> = points.iter().map(|p| p.sigma2_err).collect();
    let fit = weighted_linear_fit(&x, &y, Some(&s))?;
    Ok(LossSlopeFit {
        slope: fit.slope,
        slope_err: fit.slope_err,
        intercept: fit.intercept,
        intercept_err: fit.intercept_err,
        points,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayPoint {
    pub delay: f64,
    pub sigma2: f64,
    pub sigma2_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayFit {
    pub amplitude: f64,
    pub amplitude_err: f64,
    /// Fitted contaminant decay rate in 1/s.
    pub rate: f64,
    pub rate_err: f64,
    pub points: Vec<DelayPoint>,
}

/// Runs `shots_per_delay` shots at every delay and fits
/// `sigma^2 = A exp(-gamma tau_d) + 1`.
///
/// Delay `k` uses `derive_seed(base.rng_seed, "delay", k)` as its master
/// seed. The grid must start at zero and reach three decay times of the
/// configured rate.
pub fn variance_vs_delay(n_atoms: usize, base: &LossConfig, delays: &[f64], shots_per_delay: usize) -> Result<DelayFit> {
    base.validate()?;
    let lo = delays.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = delays.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if delays.len() < 3 || lo != 0.0 || hi < 3.0 / base.contaminant_decay {
        return Err(invalid("delays", "grid must contain 0 and reach at least 3 decay times"));
    }
    let points = delays
        .iter()
        .enumerate()
        .map(|(k, &delay)| {
            let config = LossConfig { pulse_delay: delay, rng_seed: derive_seed(base.rng_seed, "delay", k as u64), ..*base };
            let shots = simulate_shots(n_atoms, &config, shots_per_delay)?;
            let (sigma2, sigma2_err) = normalized_variance(&shots, n_atoms)?;
            Ok(DelayPoint { delay, sigma2, sigma2_err })
        })
        .collect::<Result<Vec<_>>>()?;
    // fit in microseconds for balanced parameter scales
    let data: Vec<Observation> = points.iter().map(|p| Observation::new(p.delay * 1e6, p.sigma2, p.sigma2_err)).collect();
    let amplitude0 = (points[0].sigma2 - 1.0).max(1e-3);
    let tail = points.iter().find(|p| p.sigma2 - 1.0 < amplitude0 / std::f64::consts::E);
    let rate0 = tail.map_or(1.0 / (hi * 1e6 / 3.0), |p| 1.0 / (p.delay * 1e6).max(1e-3));
    let fit = nlls_fit(&ExpPlusOne, &data, &[amplitude0, rate0], FitOptions::default())?;
    let errs = fit.stderrs();
    Ok(DelayFit {
        amplitude: fit.params[0],
        amplitude_err: errs[0],
        rate: fit.params[1] * 1e6,
        rate_err: errs[1] * 1e6,
        points,
    })
}

/// Columnar text: `shot,n_up,n_down,s_z,loss_fraction`.
pub fn write_shots_csv(shots: &[ShotRecord], mut out: impl Write) -> Result<()> {
    writeln!(out, "shot,n_up,n_down,s_z,loss_fraction")?;
    for (i, s) in shots.iter().enumerate() {
        writeln!(out, "{i},{},{},{},{:.12e}", s.n_up, s.n_down, s.s_z, s.loss_fraction)?;
    }
    Ok(())
}
