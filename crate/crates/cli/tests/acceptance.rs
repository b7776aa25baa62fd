// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance gate: one PASS/FAIL line per criterion, with measured values,
//! tolerances and runtimes. Exits non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nmkcorr::correlator::{step_analysis, Correlator, SpectrumSeries, Step, StepOptions};
use nmkcorr::liouville::Operator;
use nmkcorr::tleom::spectrum_from_correlation;
use nmkcorr_cli::checks;
use nmkcorr_cli::commands::{spectrum_series, steady_report};
use nmkcorr_cli::config::{resolve, Job, RunConfig};
use nmkcorr_cli::timedomain;

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn job(name: &str) -> Result<Job, String> {
    resolve(&RunConfig::default(), Some(name)).map(|mut v| v.remove(0)).map_err(|e| e.to_string())
}

fn series(name: &str, markovian: bool) -> Result<(Job, SpectrumSeries), String> {
    let j = job(name)?;
    let s = spectrum_series(&j, markovian).map_err(|e| e.to_string())?;
    Ok((j, s))
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    ((x - target) / target).abs() <= rel
}

/// kT of the presets; step windows extend ±0.8 around the expected position.
const KT: f64 = 0.1;
const HALF_WINDOW: f64 = 0.8;

fn steps_at(s: &SpectrumSeries, at: &[f64]) -> Vec<Option<Step>> {
    let windows: Vec<(f64, f64)> = at.iter().map(|&w| (w - HALF_WINDOW, w + HALF_WINDOW)).collect();
    step_analysis(s, &windows, &StepOptions::for_temperature(KT))
}

fn fmt_step(s: &Option<Step>) -> String {
    s.map_or("none".into(), |s| format!("{:.2} (h {:.3})", s.position, s.height))
}

fn c1_steady_state() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, want) in [("fig3", [0.5, 0.5]), ("fig3-asym", [1.0 / 3.0, 2.0 / 3.0])] {
        let r = steady_report(&job(name)?).map_err(|e| e.to_string())?;
        let ok = r.populations.iter().zip(want).all(|(&p, w)| within(p, w, 0.02));
        pass &= ok;
        detail.push(format!(
            "{name} ({:.4}, {:.4}) vs ({:.4}, {:.4})",
            r.populations[0], r.populations[1], want[0], want[1]
        ));
    }
    Ok((pass, format!("{} within 2%", detail.join("; "))))
}

fn c2_step_positions() -> Outcome {
    let start = Instant::now();
    let (_, s) = series("fig3", false)?;
    let elapsed = start.elapsed();
    let found = steps_at(&s, &[5.0, 7.0]);
    let ok = found.iter().zip([5.0, 7.0]).all(|(f, w)| f.is_some_and(|f| (f.position - w).abs() <= 0.3));
    let fast = elapsed < Duration::from_secs(10);
    Ok((
        ok && fast,
        format!(
            "steps at {} and {} (expected 5, 7 ± 0.3); {}-point sweep {:.2} s (< 10 s)",
            fmt_step(&found[0]),
            fmt_step(&found[1]),
            s.len(),
            elapsed.as_secs_f64()
        ),
    ))
}

fn c3_height_ratios() -> Outcome {
    let (j, s) = series("fig3-asym", false)?;
    let f = steps_at(&s, &[5.0, 7.0, -5.0, -7.0]);
    let h = |k: usize| f[k].map(|s| s.height).ok_or(format!("step {k} not detected"));
    let (gl, gr) = (j.leads[0].gamma, j.leads[1].gamma);
    let positive = h(0)? / h(1)?;
    let negative = h(2)? / h(3)?;
    let want = (gl / gr).powi(2);
    Ok((
        within(positive, want, 0.2) && within(negative, 1.0, 0.2),
        format!("h_L/h_R = {positive:.3} (expected {want:.1} ± 20%); h'_L/h'_R = {negative:.3} (expected 1 ± 20%)"),
    ))
}

fn c4_coulomb_steps() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    // ω_αU = |ε + U − μ_α| for ε = 1, μ = ±6.
    for (name, u) in [("fig4-u2", 2.0), ("fig4-u6", 6.0), ("fig4-u15", 15.0)] {
        let (_, s) = series(name, false)?;
        let at = [(1.0f64 + u - 6.0).abs(), 1.0 + u + 6.0];
        let f = steps_at(&s, &at);
        let ok = f.iter().zip(at).all(|(f, w)| f.is_some_and(|f| (f.position - w).abs() <= 0.3));
        pass &= ok;
        detail.push(format!("{name}: {} / {} (expected {}, {})", fmt_step(&f[0]), fmt_step(&f[1]), at[0], at[1]));
    }
    let (_, s) = series("fig4-u15", false)?;
    let negative = steps_at(&s, &[-10.0, -22.0]);
    let none = negative.iter().all(Option::is_none);
    pass &= none;
    detail.push(format!(
        "fig4-u15 at -10, -22: {}, {} (expected none)",
        fmt_step(&negative[0]),
        fmt_step(&negative[1])
    ));
    // Weak U, ω > 0: steps at ω_LU, ω_L0, ω_R0, ω_RU against
    // Γ_LΓ_R² : Γ_R³ : Γ_L²Γ_R : Γ_L³, compared up to a common scale (the
    // geometric mean of measured/expected).
    let (j, s) = series("fig4-u2", false)?;
    let f = steps_at(&s, &[3.0, 5.0, 7.0, 9.0]);
    let (gl, gr) = (j.leads[0].gamma, j.leads[1].gamma);
    let expected = [gl * gr * gr, gr.powi(3), gl * gl * gr, gl.powi(3)];
    let heights = f.iter().map(|s| s.map(|s| s.height)).collect::<Option<Vec<f64>>>().ok_or("weak-U step missing")?;
    let q: Vec<f64> = heights.iter().zip(expected).map(|(h, e)| h / e).collect();
    let scale = (q.iter().map(|x| x.ln()).sum::<f64>() / q.len() as f64).exp();
    let ratios: Vec<f64> = q.iter().map(|x| x / scale).collect();
    let ok = ratios.iter().all(|&r| within(r, 1.0, 0.25));
    pass &= ok;
    detail.push(format!(
        "fig4-u2 ratios/expected {:?} (each 1 ± 25%)",
        ratios.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    ));
    Ok((pass, detail.join("; ")))
}

fn local_maxima(s: &SpectrumSeries, lo: f64, hi: f64) -> Vec<f64> {
    (1..s.len().saturating_sub(1))
        .filter(|&k| s.omegas[k] > lo && s.omegas[k] < hi)
        .filter_map(|k| match (s.s_c[k - 1], s.s_c[k], s.s_c[k + 1]) {
            (Some(a), Some(b), Some(c)) if b > a && b > c => Some(s.omegas[k]),
            _ => None,
        })
        .collect()
}

fn c5_rabi_signature() -> Outcome {
    let start = Instant::now();
    let (_, strong) = series("fig5-u15", false)?;
    let (_, free) = series("fig5-u0", false)?;
    let elapsed = start.elapsed();
    let peaks = local_maxima(&strong, 3.8, 4.2);
    let spurious = local_maxima(&free, 3.0, 5.0);
    Ok((
        !peaks.is_empty() && spurious.is_empty() && elapsed < Duration::from_secs(30),
        format!(
            "U = 15 maxima in [3.8, 4.2]: {peaks:?} (expected one); U = 0 maxima in (3, 5): {spurious:?} (expected none); {:.2} s (< 30 s)",
            elapsed.as_secs_f64()
        ),
    ))
}

fn c6_markovian_low_frequency() -> Outcome {
    let (j, s) = series("fig3", true)?;
    let eps = match j.kind {
        nmkcorr::models::ModelKind::SingleDot { epsilon } => epsilon,
        _ => unreachable!("fig3 is a single dot"),
    };
    let band = 0.5 * j.leads.iter().map(|l| (eps - l.mu).abs()).fold(f64::INFINITY, f64::min);
    let m = s.markovian.as_ref().ok_or("no Markovian columns")?;
    let mut worst = (0.0f64, f64::NAN);
    for k in 0..s.len() {
        if s.omegas[k].abs() <= band {
            let (a, b) = (s.s_n[k].ok_or("gap")?, m.s_n[k].ok_or("gap")?);
            let rel = ((a - b) / b).abs();
            if rel > worst.0 {
                worst = (rel, s.omegas[k]);
            }
        }
    }
    Ok((
        worst.0 < 0.05,
        format!("max |S - S_markov|/S_markov = {:.4} at w = {} over |w| <= {band} (< 0.05)", worst.0, worst.1),
    ))
}

fn c7_route_equivalence() -> Outcome {
    let j = job("fig3")?;
    let run = timedomain::run(&j).map_err(|e| e.to_string())?;
    let r = timedomain::compare(&j, &run).map_err(|e| e.to_string())?;
    Ok((
        r.pass,
        format!(
            "max relative deviation {:.4} at w = {} over |w| <= {} ({} nodes) (<= {})",
            r.max_rel_deviation, r.worst_omega, r.band, run.grid_nodes, r.threshold
        ),
    ))
}

fn c8_bath_oracle() -> Outcome {
    let j = job("fig3")?;
    let mut worst = (0.0f64, f64::NAN);
    for lead in &j.leads {
        let w = checks::lambda_vs_principal_value(lead, -20.0, 20.0, 401);
        if !(w.0 <= worst.0) {
            worst = w;
        }
    }
    Ok((
        worst.0 <= 1e-6,
        format!("max relative error {:.2e} at w = {} on [-20, 20], 401 points (<= 1e-6)", worst.0, worst.1),
    ))
}

fn spectrum_csv(threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_nmkcorr"))
        .args(["spectrum", "--preset", "fig5-u15", "--markovian", "--threads", threads])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("spectrum exited with {}", out.status));
    }
    Ok(out.stdout)
}

fn c9_properties() -> Outcome {
    let mut fails = Vec::new();
    let mut detail = Vec::new();
    let mut record = |name: &str, ok: bool, text: String| {
        if !ok {
            fails.push(name.to_string());
        }
        detail.push(text);
    };

    // Trace conservation along the route trajectory and a double-dot one.
    let fig3 = job("fig3")?;
    let run = timedomain::run(&fig3).map_err(|e| e.to_string())?;
    let dd = checks::trace_conservation();
    let drift = run.corr.trace_drift.max(dd.measured);
    record("trace", drift <= 1e-8, format!("trace drift {drift:.1e} (<= 1e-8)"));

    // Stationary states of every preset.
    let mut jobs = Vec::new();
    for name in nmkcorr::models::preset_names() {
        jobs.extend(resolve(&RunConfig::default(), Some(name)).map_err(|e| e.to_string())?);
    }
    let st = checks::stationarity(&jobs);
    record("stationary", st.pass, format!("rho hermitian/unit trace/stationary {:.1e} (<= 1e-10)", st.measured));

    // S(ω) = L_fwd(ω) + L_rev(−ω), from independent vertex corrections.
    let mut worst_im = 0.0f64;
    for name in ["fig3", "fig4-u6", "fig5-u15"] {
        let j = job(name)?;
        let c = Correlator::new(&j.model).map_err(|e| e.to_string())?;
        let n = j.model.observable("N").map_err(|e| e.to_string())?;
        let a = n - &Operator::identity(j.model.dim()).scale(c.mean(n));
        for w in [-7.3, -2.0, -0.4, 0.3, 1.9, 4.0, 8.8] {
            let f = c.laplace_forward(&a, &a, w).map_err(|e| e.to_string())?;
            let r = c.laplace_reverse(&a, &a, -w).map_err(|e| e.to_string())?;
            worst_im = worst_im.max((f + r).im.abs() / (f + r).norm());
        }
    }
    record("real", worst_im <= 1e-10, format!("|Im S|/|S| {worst_im:.1e} (<= 1e-10)"));

    let (dev, orders) = checks::rk4_order_measure().map_err(|e| e.to_string())?;
    record(
        "rk4",
        dev <= 0.3,
        format!("RK4 orders {:?} (4 ± 0.3)", orders.iter().map(|o| (o * 1e3).round() / 1e3).collect::<Vec<_>>()),
    );

    // Doubling the number of frequency nodes at fixed span.
    let mut fine = fig3.clone();
    fine.echo.timedomain.omega_max = Some(run.grid_omega_max);
    fine.echo.timedomain.nodes = Some(2 * run.grid_nodes);
    let fine_run = timedomain::run(&fine).map_err(|e| e.to_string())?;
    let omegas: Vec<f64> = (-40..=40).filter(|&k| k != 0).map(|k| k as f64 * 0.25).collect();
    let taper = fig3.echo.timedomain.taper;
    let coarse_s = spectrum_from_correlation(&run.corr, &omegas, taper);
    let fine_s = spectrum_from_correlation(&fine_run.corr, &omegas, taper);
    let scale = fine_s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let grid_dev = coarse_s
        .iter()
        .zip(&fine_s)
        .filter(|(_, f)| f.abs() >= 1e-3 * scale)
        .map(|(c, f)| ((c - f) / f).abs())
        .fold(0.0, f64::max);
    record(
        "grid",
        grid_dev < 5e-3,
        format!(
            "grid doubling {} -> {} nodes changes S_N by {grid_dev:.1e} (< 5e-3)",
            run.grid_nodes, fine_run.grid_nodes
        ),
    );

    let one = spectrum_csv("1")?;
    let four = spectrum_csv("4")?;
    let again = spectrum_csv("4")?;
    record(
        "bytes",
        one == four && four == again,
        format!("CSV byte-identical across --threads 1/4 and reruns: {}", one == four && four == again),
    );

    let pass = fails.is_empty();
    if !pass {
        detail.push(format!("failed: {}", fails.join(", ")));
    }
    Ok((pass, detail.join("; ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("steady state", c1_steady_state),
        ("step positions", c2_step_positions),
        ("height ratios", c3_height_ratios),
        ("Coulomb steps", c4_coulomb_steps),
        ("Rabi signature", c5_rabi_signature),
        ("Markovian low-w agreement", c6_markovian_low_frequency),
        ("route equivalence", c7_route_equivalence),
        ("bath-function oracle", c8_bath_oracle),
        ("property suite", c9_properties),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        println!("{} [{}] {name}: {detail} [{secs:.2} s]", if pass { "PASS" } else { "FAIL" }, k + 1);
        if !pass {
            failed.push(k + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of 9 criteria fail: {failed:?}", failed.len());
        ExitCode::FAILURE
    }
}
