//! Monte Carlo and property checks that cut across modules.

use std::f64::consts::{PI, TAU};

use irs_dps::channel::{cascaded_gain, draw_channel, sample_nlos, trial_rng, wrap_phase};
use irs_dps::codebook::{
    design_codebook, design_codebook_traced, joint_amplitude_phase_moment, lloyd_step, quantize,
    residual, rician_phase_pdf, Arc,
};
use irs_dps::placement::{cascaded_phases, optimal_positions};
use irs_dps::rate::{average_rate_mc, rate_upper_bound};
use irs_dps::{
    DesignConfig, Execution, LinkGeometry, PhaseCodebook, RicianSpec, SchemeKind, Weighting,
};
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn arc_moment_matches_monte_carlo() {
    let (k, draws) = (4.0, 10_000_000usize);
    let geometry = LinkGeometry::reference();
    let chunks = 100;
    let per = draws / chunks;
    let parts = Execution::default().map_indexed(chunks, |c| {
        let mut rng = trial_rng(2024, c as u64);
        let (mut sum, mut sq) = (Complex64::new(0.0, 0.0), 0.0f64);
        for _ in 0..per {
            let h = cascaded_gain(k, sample_nlos(&mut rng), 0.0, &geometry);
            let v = if h.arg().abs() <= PI / 4.0 {
                h
            } else {
                Complex64::new(0.0, 0.0)
            };
            sum += v;
            sq += v.re * v.re;
        }
        (sum, sq)
    });
    let (sum, sq) = parts
        .iter()
        .fold((Complex64::new(0.0, 0.0), 0.0), |(s, q), (a, b)| {
            (s + a, q + b)
        });
    let n = draws as f64;
    let mc = sum / n;
    let se_re = ((sq / n - mc.re * mc.re) / n).sqrt();
    let q = joint_amplitude_phase_moment(k, Arc::new(-PI / 4.0, PI / 4.0), true, 4096);
    assert!(
        (q.re - mc.re).abs() < 3.0 * se_re,
        "{q} vs {mc} (se {se_re:e})"
    );
    assert!(q.im.abs() < 1e-12);
}

/// One-sample KS of element phases against the closed-form CDF.
#[test]
fn element_phases_follow_rician_law() {
    let geometry = LinkGeometry::reference();
    let spec = RicianSpec::new(4.0, 3).unwrap();
    let layout = optimal_positions(spec.n, &geometry).unwrap();
    let n = 100_000;
    let mut cols = vec![Vec::with_capacity(n); spec.n];
    for t in 0..n {
        let draw = draw_channel(&spec, &layout, &geometry, &mut trial_rng(5, t as u64)).unwrap();
        for (c, p) in cols
            .iter_mut()
            .zip(cascaded_phases(&draw, &layout, &geometry))
        {
            c.push(p);
        }
    }
    // cumulative table by the midpoint rule
    let grid = 1 << 16;
    let h = TAU / grid as f64;
    let mut cdf = Vec::with_capacity(grid + 1);
    cdf.push(0.0);
    for i in 0..grid {
        let t = -PI + (i as f64 + 0.5) * h;
        cdf.push(cdf[i] + rician_phase_pdf(4.0, t) * h);
    }
    let at = |x: f64| {
        let u = (x + PI) / h;
        let i = (u.floor() as usize).min(grid - 1);
        cdf[i] + (cdf[i + 1] - cdf[i]) * (u - i as f64)
    };
    for mut col in cols {
        col.sort_by(f64::total_cmp);
        let d = col
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = at(x);
                (f - i as f64 / n as f64)
                    .abs()
                    .max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value
        assert!(d < 1.63 / (n as f64).sqrt(), "KS {d}");
    }
}

#[test]
fn cps_rate_reproduces_under_another_seed() {
    let geometry = LinkGeometry::reference();
    let spec = RicianSpec::new(4.0, 50).unwrap();
    let a = average_rate_mc(&SchemeKind::Cps, &spec, &geometry, 100_000, 1).unwrap();
    let b = average_rate_mc(&SchemeKind::Cps, &spec, &geometry, 100_000, 2).unwrap();
    assert!((a.mean - b.mean).abs() < 3.0 * a.half_ci95, "{a:?} {b:?}");
}

#[test]
fn jensen_bound_is_tight_at_fifty_elements() {
    let geometry = LinkGeometry::reference();
    let spec = RicianSpec::new(4.0, 50).unwrap();
    let codebook = design_codebook(&DesignConfig::new(4.0, 4)).unwrap();
    let mc = average_rate_mc(
        &SchemeKind::Proposed {
            codebook: codebook.clone(),
        },
        &spec,
        &geometry,
        100_000,
        3,
    )
    .unwrap();
    let bound = rate_upper_bound(&spec, &codebook, &geometry).unwrap();
    assert!(bound >= mc.mean, "{bound} < {}", mc.mean);
    assert!(bound - mc.mean < 0.15, "{bound} - {}", mc.mean);
}

#[test]
fn design_objective_is_monotone() {
    for w in [
        Weighting::SmallAngleL1,
        Weighting::AmplitudeWeighted,
        Weighting::Unweighted,
    ] {
        for (k, m) in [(0.5, 3), (2.0, 4), (4.0, 8), (10.0, 5), (30.0, 16)] {
            let trace = design_codebook_traced(&DesignConfig::new(k, m).with_weighting(w)).unwrap();
            assert!(trace.codebook.converged(), "{w} K={k} M={m}");
            for pair in trace.history.windows(2) {
                let slack = 1e-10 * pair[0].abs();
                if w.maximises() {
                    assert!(pair[1] >= pair[0] - slack, "{w} K={k} M={m}: {pair:?}");
                } else {
                    assert!(pair[1] <= pair[0] + slack, "{w} K={k} M={m}: {pair:?}");
                }
            }
        }
    }
}

#[test]
fn converged_codebook_is_a_fixed_point() {
    for w in [
        Weighting::SmallAngleL1,
        Weighting::AmplitudeWeighted,
        Weighting::Unweighted,
    ] {
        for (k, m) in [(2.0, 4), (4.0, 8), (1.0, 6)] {
            let config = DesignConfig::new(k, m).with_weighting(w);
            let cb = design_codebook(&config).unwrap();
            assert!(cb.converged());
            let next = lloyd_step(&config, cb.shifts());
            for (a, b) in cb.shifts().iter().zip(&next) {
                assert!(
                    wrap_phase(a - b).abs() < 1e-6,
                    "{w} K={k} M={m}: {a} -> {b}"
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn designs_are_negation_symmetric(k in 0.0f64..25.0, m in 2usize..10, wi in 0usize..3) {
        let w = [Weighting::SmallAngleL1, Weighting::AmplitudeWeighted, Weighting::Unweighted][wi];
        let cb = design_codebook(&DesignConfig::new(k, m).with_weighting(w)).unwrap();
        for &s in cb.shifts() {
            prop_assert!(cb.contains(wrap_phase(-s), 1e-9), "{:?} lacks -{}", cb.shifts(), s);
        }
        prop_assert!(cb.shifts().windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn residual_is_within_half_the_widest_gap(
        mut raw in prop::collection::vec(-PI..PI, 2..12),
        phi in -10.0f64..10.0,
    ) {
        raw.sort_by(f64::total_cmp);
        raw.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        prop_assume!(raw.len() >= 2 && raw[0] + TAU - raw[raw.len() - 1] > 1e-6);
        let cb = PhaseCodebook::from_shifts(raw, 1.0, Weighting::Unweighted).unwrap();
        let s = cb.shifts();
        let mut gap = s[0] + TAU - s[s.len() - 1];
        for p in s.windows(2) {
            gap = gap.max(p[1] - p[0]);
        }
        let r = residual(phi, &cb);
        prop_assert!(r.abs() <= gap / 2.0 + 1e-12);
        prop_assert!((wrap_phase(phi + quantize(phi, &cb)) - r).abs() < 1e-15);
    }

    #[test]
    fn aligned_layout_leaves_phases_untouched(n in 2usize..64, c in 0.01f64..2.0, seed in any::<u64>()) {
        let geometry = LinkGeometry::reference().with_cos_sum(c).unwrap();
        let spec = RicianSpec::new(3.0, n).unwrap();
        let layout = optimal_positions(n, &geometry).unwrap();
        let draw = draw_channel(&spec, &layout, &geometry, &mut trial_rng(seed, 0)).unwrap();
        for (p, q) in draw.phases.iter().zip(cascaded_phases(&draw, &layout, &geometry)) {
            prop_assert!(wrap_phase(p - q).abs() < 1e-9);
        }
    }
}
