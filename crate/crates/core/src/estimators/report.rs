use std::io::Write;

use super::FitResult;

/// `parameter,estimate,stderr` rows.
pub fn write_fit_csv(fit: &FitResult, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "parameter,estimate,stderr")?;
    for ((name, value), err) in fit.names.iter().zip(&fit.params).zip(fit.stderrs()) {
        writeln!(out, "{name},{value:.12e},{err:.12e}")?;
    }
    Ok(())
}

/// `key = value` lines: parameters, their errors and fit diagnostics.
pub fn write_key_values(fit: &FitResult, mut out: impl Write) -> std::io::Result<()> {
    for ((name, value), err) in fit.names.iter().zip(&fit.params).zip(fit.stderrs()) {
        writeln!(out, "{name} = {value:.12e}")?;
        writeln!(out, "{name}_stderr = {err:.12e}")?;
    }
    writeln!(out, "residual_norm = {:.12e}", fit.residual_norm)?;
    writeln!(out, "degrees_of_freedom = {}", fit.degrees_of_freedom)?;
    writeln!(out, "iterations = {}", fit.n_iterations)?;
    writeln!(out, "converged = {}", fit.converged)
}
