use rydsqueeze_cli::config::{ExperimentConfig, SweepAxis};
use rydsqueeze_cli::pipelines;

fn light() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.run.shots = 400;
    c.loss.scan_shots = 4000;
    c.loss.delay_shots = 4000;
    c.ising.cloud_seeds = 2;
    c.ising.uniform_atoms = 60;
    c.ising.oat_sizes = vec![20, 40, 80];
    c
}

#[test]
fn squeezing_curve_dips_below_the_coherent_level() {
    let r = pipelines::squeezing(&light(), 0).unwrap();
    assert!(r.twist > 0.0);
    assert_eq!(r.xi2.len(), r.alphas.len());
    assert!(r.xi2_min < 1.0 && r.xi2_max > 1.0, "{} {}", r.xi2_min, r.xi2_max);
    let at_opt = r.alphas.iter().position(|&a| a == r.alpha_opt).unwrap();
    assert_eq!(r.xi2[at_opt], r.xi2.iter().cloned().fold(f64::INFINITY, f64::min));
    assert_eq!(r.shots.len(), 400);
}

#[test]
fn no_dressing_light_leaves_only_readout_noise() {
    let mut c = light();
    c.physics.rabi_peak = rydsqueeze_cli::core::units::Quantity::parse("0 MHz").unwrap();
    let r = pipelines::squeezing(&c, 0).unwrap();
    assert_eq!(r.twist, 0.0);
    // readout noise on top of projection noise, over the dephased length
    let n = &c.noise;
    let expected = (1.0 + n.detection_fraction + n.technical_fraction) / (n.contrast * n.contrast);
    for x in &r.xi2 {
        assert!((x - expected).abs() < 1e-9, "{x} vs {expected}");
    }
}

#[test]
fn delay_curve_decays_to_projection_noise() {
    let r = pipelines::loss_statistics(&light(), 3).unwrap();
    let first = r.delay.points.first().unwrap();
    let last = r.delay.points.last().unwrap();
    assert!(first.sigma2 > 1.2, "{}", first.sigma2);
    assert!((last.sigma2 - 1.0).abs() < 5.0 * last.sigma2_err.max(0.01), "{} +- {}", last.sigma2, last.sigma2_err);
    assert!(r.delay.rate > 0.0);
    assert_eq!(r.scan.points.len(), 6);
}

#[test]
fn spectroscopy_recovers_the_neighbour_scaling() {
    let r = pipelines::spectroscopy(&light(), 5).unwrap();
    assert_eq!(r.tilts.len(), 5);
    assert!((r.scaling.slope - 13.0).abs() < 1.0, "{}", r.scaling.slope);
}

#[test]
fn calibration_reports_atom_number_and_contrast() {
    let r = pipelines::calibrate(&ExperimentConfig::default(), 1).unwrap();
    assert!((r.atoms.n_est - 200.0).abs() < 20.0, "{}", r.atoms.n_est);
    assert!(r.atoms_raw.n_est > r.atoms.n_est);
    assert!((r.fringe.contrast - 0.95).abs() < 0.02, "{}", r.fringe.contrast);
    assert!((r.twist.twist / r.twist_predicted - 1.0).abs() < 0.1);
}

#[test]
fn sweep_emits_one_row_per_value() {
    let c = ExperimentConfig::default();
    assert_eq!(c.sweep.axis, SweepAxis::Intensity);
    let r = pipelines::sweep(&c, 0).unwrap();
    assert_eq!(r.rows.len(), 9);
    // more light, more twisting
    for w in r.rows.windows(2) {
        assert!(w[1].twist > w[0].twist);
    }
    assert!(r.rows.last().unwrap().xi2_min < r.rows[0].xi2_min);
}

#[test]
fn ising_limit_scales_like_one_axis_twisting() {
    let r = pipelines::ising_limit(&light(), 0).unwrap();
    assert_eq!(r.clouds.len(), 2);
    assert!(r.mean_xi2 < 1.0);
    assert!(r.oat_exponent.slope < -0.5 && r.oat_exponent.slope > -0.9);
    assert!(r.oat.windows(2).all(|w| w[1].2 < w[0].2));
}
