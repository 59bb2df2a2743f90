//! Quick self-check suite behind `irs-dps validate`.

use std::f64::consts::PI;

use super::{run_sweep_with, ExperimentSpec, SchemeName, SweepSpec, SweepVariable};
use crate::channel::{draw_channel, trial_rng, wrap_phase, LinkGeometry, RicianSpec};
use crate::codebook::{design_codebook, DesignConfig};
use crate::exec::Execution;
use crate::placement::{cascaded_phases, optimal_positions, ElementLayout};
use crate::Result;

/// Published reference codebooks: `(K, M, positive shifts)`. Each codebook
/// also holds `0`, `-pi` and the negated positive shifts.
pub const REFERENCE_CODEBOOKS: [(f64, usize, &[f64]); 4] = [
    (2.0, 4, &[0.5201]),
    (4.0, 4, &[0.3672]),
    (2.0, 8, &[0.2347, 0.4983, 0.8569]),
    (4.0, 8, &[0.1657, 0.3517, 0.6048]),
];

/// The full sorted reference codebook for a row of [`REFERENCE_CODEBOOKS`].
pub fn reference_shifts(positive: &[f64]) -> Vec<f64> {
    let mut s = vec![-PI, 0.0];
    for &p in positive {
        s.push(p);
        s.push(-p);
    }
    s.sort_by(f64::total_cmp);
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

pub fn circular_mean(samples: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = samples.fold((0.0, 0.0), |(s, c), x| (s + x.sin(), c + x.cos()));
    s.atan2(c)
}

/// Two-sample Kolmogorov-Smirnov statistic. Sorts its inputs.
pub fn ks_statistic(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `samples` draws of each element's total cascaded phase, one column per
/// element.
pub fn phase_columns(
    spec: &RicianSpec,
    layout: &ElementLayout,
    geometry: &LinkGeometry,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    let rows = exec.map_indexed(samples, |t| -> Result<Vec<f64>> {
        let draw = draw_channel(spec, layout, geometry, &mut trial_rng(seed, t as u64))?;
        Ok(cascaded_phases(&draw, layout, geometry))
    });
    let mut cols = vec![Vec::with_capacity(samples); spec.n];
    for row in rows {
        for (col, p) in cols.iter_mut().zip(row?) {
            col.push(p);
        }
    }
    Ok(cols)
}

fn table_check() -> Result<Check> {
    let mut worst = 0.0f64;
    for (k, m, positive) in REFERENCE_CODEBOOKS {
        let cb = design_codebook(&DesignConfig::new(k, m))?;
        let want = reference_shifts(positive);
        for (a, b) in cb.shifts().iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
        if cb.len() != want.len() {
            worst = f64::INFINITY;
        }
    }
    Ok(check(
        "reference codebooks",
        worst < 0.02,
        format!("max shift error {worst:.4} rad (limit 0.02)"),
    ))
}

fn offset_check(samples: usize, seed: u64, exec: Execution) -> Result<Vec<Check>> {
    let geometry = LinkGeometry::reference();
    let spec = RicianSpec::new(10.0, 6)?;
    let half_wave = ElementLayout::new(
        (0..spec.n)
            .map(|i| i as f64 * geometry.lambda / 2.0)
            .collect(),
    )?;
    let cols = phase_columns(&spec, &half_wave, &geometry, samples, seed, exec)?;
    let means: Vec<f64> = cols
        .iter()
        .map(|c| circular_mean(c.iter().copied()))
        .collect();
    let expected = 2.0 * PI * 0.5 * geometry.cos_sum();
    let step_err = means
        .windows(2)
        .map(|w| (wrap_phase(w[0] - w[1]) - expected).abs())
        .fold(0.0, f64::max);

    let aligned = optimal_positions(spec.n, &geometry)?;
    let mut cols = phase_columns(
        &spec,
        &aligned,
        &geometry,
        samples,
        seed.wrapping_add(1),
        exec,
    )?;
    let mut ks = 0.0f64;
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            let (left, right) = cols.split_at_mut(j);
            ks = ks.max(ks_statistic(&mut left[i], &mut right[0]));
        }
    }
    // 0.01 from 1e5 draws up; below that, the two-sample KS critical value at
    // 1% over all pairs, since 0.01 is under the noise floor
    let pairs = (cols.len() * (cols.len() - 1) / 2) as f64;
    let c_alpha = (-(0.01 / pairs / 2.0f64).ln() / 2.0).sqrt();
    let ks_limit = (c_alpha * (2.0 / samples as f64).sqrt()).max(0.01);
    Ok(vec![
        check(
            "offset step at half-wavelength spacing",
            step_err < 0.01,
            format!("max |step - {expected:.4}| = {step_err:.2e} rad over {samples} draws"),
        ),
        check(
            "offset removed by aligned placement",
            ks < ks_limit,
            format!("max pairwise KS = {ks:.4} over {samples} draws (limit {ks_limit:.4})"),
        ),
    ])
}

fn ordering_check(trials: u64, seed: u64, exec: Execution) -> Result<Vec<Check>> {
    let spec = ExperimentSpec {
        sweep: SweepSpec {
            variable: SweepVariable::N,
            values: vec![50.0],
        },
        trials,
        seed,
        ..ExperimentSpec::default()
    };
    let result = run_sweep_with(&spec, exec)?;
    let est = |s| result.row(50.0, s).expect("row present").estimate;
    let order = SchemeName::ALL.map(est);
    let mut ordered = true;
    let mut detail = Vec::new();
    for w in order.windows(2) {
        ordered &= w[0].mean + w[0].half_ci95 + w[1].half_ci95 >= w[1].mean;
    }
    for (name, e) in SchemeName::ALL.iter().zip(&order) {
        detail.push(format!("{name}={:.4}", e.mean));
    }
    let gap = (order[0].mean - order[1].mean) / order[0].mean;
    Ok(vec![
        check("scheme ordering at N=50", ordered, detail.join(" ")),
        check(
            "CPS-PROPOSED gap at N=50",
            gap < 0.02,
            format!("relative gap {:.3}% (limit 2%)", 100.0 * gap),
        ),
    ])
}

/// Runs all checks with `trials` Monte Carlo trials for the rate checks and
/// `10 * trials` draws for the phase-statistic checks.
pub fn run_validation(trials: u64, seed: u64, exec: Execution) -> Result<Vec<Check>> {
    let mut checks = vec![table_check()?];
    checks.extend(offset_check(10 * trials as usize, seed, exec)?);
    checks.extend(ordering_check(trials, seed, exec)?);
    Ok(checks)
}
