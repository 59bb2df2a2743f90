use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use super::ExperimentResult;
use crate::codebook::{amplitude_phase_density, rician_phase_pdf, small_angle_phase_pdf};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "sweep_var,sweep_value,scheme,mean_rate_bps_hz,ci95_half,trials,seed";

/// C's `%.{digits}g`: `digits` significant digits, trailing zeros dropped,
/// exponent form outside `1e-4 <= |x| < 10^digits`.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(result: &ExperimentResult, mut w: W) -> io::Result<()> {
    let var = result.sweep_variable.as_str();
    writeln!(w, "{CSV_HEADER}")?;
    for row in &result.rows {
        writeln!(
            w,
            "{var},{},{},{},{},{},{}",
            format_significant(row.sweep_value, 9),
            row.scheme,
            format_significant(row.estimate.mean, 9),
            format_significant(row.estimate.half_ci95, 9),
            row.estimate.trials,
            row.estimate.seed,
        )?;
    }
    w.flush()
}

pub fn emit_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(result, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Samples of the phase densities at `points` equally spaced angles in
/// `[-pi, pi)`.
pub fn write_pdf_csv<W: Write>(k: f64, points: usize, mut w: W) -> io::Result<()> {
    writeln!(w, "phi_rad,rician_pdf,amplitude_density,small_angle_pdf")?;
    for i in 0..points {
        let phi = -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / points as f64;
        writeln!(
            w,
            "{},{},{},{}",
            format_significant(phi, 9),
            format_significant(rician_phase_pdf(k, phi), 9),
            format_significant(amplitude_phase_density(k, phi), 9),
            format_significant(small_angle_phase_pdf(k, phi), 9),
        )?;
    }
    w.flush()
}
