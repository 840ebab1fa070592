use proptest::prelude::*;
use rydsqueeze_cli::config::{ExperimentConfig, DEFAULT_CONFIG};
use rydsqueeze_cli::core::units::Quantity;
use rydsqueeze_cli::CliError;

fn edited(from: &str, to: &str) -> String {
    assert!(DEFAULT_CONFIG.contains(from), "default config lacks `{from}`");
    DEFAULT_CONFIG.replacen(from, to, 1)
}

fn rejected(text: &str) -> String {
    match ExperimentConfig::parse(text) {
        Err(e @ CliError::Validation(_)) => {
            assert_eq!(e.exit_code(), 1);
            e.to_string()
        }
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn default_config_parses_and_round_trips() {
    let c = ExperimentConfig::default();
    assert_eq!(c.physics.n_atoms, 200);
    assert_eq!(c.schedule.n_pulses, 48);
    let again = ExperimentConfig::parse(&c.to_toml()).unwrap();
    assert_eq!(again, c);
    assert_eq!(again.to_toml(), c.to_toml());
}

#[test]
fn load_reads_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, DEFAULT_CONFIG).unwrap();
    assert_eq!(ExperimentConfig::load(&path).unwrap(), ExperimentConfig::default());
    let missing = ExperimentConfig::load(&dir.path().join("absent.toml")).unwrap_err();
    assert_eq!(missing.exit_code(), 1);
}

#[test]
fn resonant_dressing_is_rejected() {
    let msg = rejected(&edited(r#"detuning = "8 MHz""#, r#"detuning = "0 MHz""#));
    assert!(msg.contains("detuning"), "{msg}");
}

#[test]
fn odd_pulse_count_is_rejected() {
    let msg = rejected(&edited("n_pulses = 48", "n_pulses = 47"));
    assert!(msg.contains("n_pulses"), "{msg}");
    rejected(&edited("n_pulses = 48", "n_pulses = 0"));
}

#[test]
fn contrast_outside_unit_interval_is_rejected() {
    for bad in ["0.0", "1.2", "-0.5"] {
        rejected(&edited("contrast = 0.95", &format!("contrast = {bad}")));
    }
    ExperimentConfig::parse(&edited("contrast = 0.95", "contrast = 1.0")).unwrap();
}

#[test]
fn dimensioned_fields_need_units() {
    rejected(&edited(r#"rabi_peak = "1.2 MHz""#, "rabi_peak = 1.2"));
    rejected(&edited(r#"rabi_peak = "1.2 MHz""#, r#"rabi_peak = "1.2""#));
    rejected(&edited(r#"critical_radius = "5 um""#, r#"critical_radius = "5 MHz""#));
}

#[test]
fn unknown_keys_are_rejected() {
    rejected(&format!("{DEFAULT_CONFIG}\n[extra]\nkey = 1\n"));
    rejected(&edited("n_atoms = 200", "n_atoms = 200\natoms = 3"));
}

#[test]
fn units_are_converted_to_si() {
    let c = ExperimentConfig::parse(&edited(r#"pulse_delay = "100 us""#, r#"pulse_delay = "0.1 ms""#)).unwrap();
    assert!((c.schedule.pulse_delay.si() - 1e-4).abs() < 1e-18);
    let d = ExperimentConfig::default();
    assert!((d.physics.detuning.si() - 2.0 * std::f64::consts::PI * 8e6).abs() < 1e-6);
}

#[test]
fn spectroscopy_detunings_are_log_spaced() {
    let d = ExperimentConfig::default().spectroscopy_detunings();
    assert_eq!(d.len(), 24);
    let ratio = d[1] / d[0];
    for w in d.windows(2) {
        assert!((w[1] / w[0] - ratio).abs() < 1e-12);
    }
    assert!((d[23] / d[0] - 10.0).abs() < 1e-9);
}

proptest! {
    #[test]
    fn edited_configs_round_trip(
        n_atoms in 20usize..400,
        half_pulses in 1usize..40,
        contrast in 0.01f64..=1.0,
        seed in any::<u64>(),
        rabi in 0.1f64..3.0,
    ) {
        let mut c = ExperimentConfig::default();
        c.physics.n_atoms = n_atoms;
        c.physics.n_neighbors = c.physics.n_neighbors.min(n_atoms as f64);
        c.schedule.n_pulses = 2 * half_pulses;
        c.noise.contrast = contrast;
        c.run.seed = seed;
        c.physics.rabi_peak = Quantity::parse(&format!("{rabi} MHz")).unwrap();
        let again = ExperimentConfig::parse(&c.to_toml()).unwrap();
        prop_assert_eq!(&again, &c);
    }
}
