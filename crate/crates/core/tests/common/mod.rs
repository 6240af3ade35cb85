//! Checks shared by the acceptance runner and the invariant tests. Each one
//! returns a short description of what it measured, or why it failed.

#![allow(dead_code)]

use std::f64::consts::PI;

use pushdob::data::{plan_indices, plan_stride, read_trajectory, to_reference_frame, write_trajectory, RawSample};
use pushdob::dynamics::{
    accel_from_wrench, integrate_step, mat_mul, rotation_matrix, ObjectParams, PlanarState, Vec2, Wrench,
};
use pushdob::force_recon::{reconstruct, PidGains};
use pushdob::identify::ChannelModels;
use pushdob::identify::{rls_initialize, rls_update, IdentWindow, LinearModel};
use pushdob::metrics::summarize;
use pushdob::observer::{DisturbanceObserver, ObserverInput, QFilterParams, ResetMode};
use pushdob::predict::{predict_pose, predict_simple, run_pipeline, ForcePlan, PipelineConfig, PredictedTrack};
use pushdob::synth::{generate, NoiseLevels, PushProfile, SynthScenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Check = Result<String, String>;

pub const DT: f64 = 0.004;

pub fn rec2() -> ObjectParams<f64> {
    ObjectParams::rec2()
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Observer inputs for a body of mass `m̄/alpha` (same factor on the
/// inertia) pushed by constant `u` with constant disturbance `d` on every
/// channel, starting at rest at the origin.
pub fn constant_push_inputs(u: [f64; 3], d: [f64; 3], alpha: f64, n: usize) -> Vec<ObserverInput<f64>> {
    let p = rec2();
    let acc = [
        alpha * (u[0] + d[0]) / p.mass,
        alpha * (u[1] + d[1]) / p.mass,
        alpha * (u[2] + d[2]) / p.inertia,
    ];
    (0..n)
        .map(|k| {
            let t = k as f64 * DT;
            let q = acc.map(|a| 0.5 * a * t * t);
            ObserverInput {
                u: Wrench::from_channels(u),
                pos: Vec2::new(q[0], q[1]),
                theta: q[2],
            }
        })
        .collect()
}

pub fn run_observer(inputs: &[ObserverInput<f64>]) -> Vec<[f64; 3]> {
    let mut obs = DisturbanceObserver::new(&QFilterParams::default(), &rec2(), DT).unwrap();
    obs.reset(&inputs[0]);
    inputs
        .iter()
        .enumerate()
        .map(|(k, i)| obs.step(k as f64 * DT, i).unwrap().estimate.channels())
        .collect()
}

/// Largest relative deviation of `d̂` from `expected` at or after `after` s.
pub fn steady_deviation(est: &[[f64; 3]], expected: [f64; 3], after: f64) -> f64 {
    let first = (after / DT).round() as usize;
    est[first..]
        .iter()
        .flat_map(|e| (0..3).map(move |c| rel(e[c], expected[c])))
        .fold(0.0, f64::max)
}

pub fn observer_constant_disturbance() -> Check {
    let d = [0.5, -0.3, 0.004];
    let est = run_observer(&constant_push_inputs([0.8, 0.2, -0.01], d, 1.0, 250));
    let dev = steady_deviation(&est, d, 0.1);
    ensure(dev < 0.01, format!("max relative error after 0.1 s = {dev:.2e}"))
}

/// Steady state under inertia mismatch against `α·d + sign·(1−α)·u`.
/// `sign = 1` is the law as stated, `sign = −1` the one the observer
/// equations actually imply.
pub fn mismatch_law(alphas: &[f64], sign: f64) -> Check {
    let (u, d) = ([1.0, -0.6, 0.01], [-0.4, 0.25, -0.003]);
    let mut worst = (0.0f64, 0.0f64);
    for &a in alphas {
        let est = run_observer(&constant_push_inputs(u, d, a, 250));
        let expected = [0, 1, 2].map(|c| a * d[c] + sign * (1.0 - a) * u[c]);
        let dev = steady_deviation(&est, expected, 0.5);
        if dev > worst.1 {
            worst = (a, dev);
        }
    }
    ensure(
        worst.1 < 0.01,
        format!("worst relative error {:.3} at alpha = {}", worst.1, worst.0),
    )
}

pub fn log_frequencies(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// `(ω, discrete Q_A(e^{jωdt}), continuous Q(jω))` at the given frequencies.
pub fn q_responses(freqs: &[f64]) -> Vec<(f64, num_complex::Complex<f64>, num_complex::Complex<f64>)> {
    let q = QFilterParams::<f64>::default();
    let obs = DisturbanceObserver::new(&q, &rec2(), DT).unwrap();
    let qa = &obs.channel_filters()[0].u_branch;
    freqs
        .iter()
        .map(|&w| (w, qa.frequency_response(w, DT), q.response(w)))
        .collect()
}

/// Complex (magnitude and phase) agreement at 10 frequencies in
/// [1, 500] rad/s: 1% below the top decade, 5% inside it.
pub fn observer_frequency_response() -> Check {
    let mut failures = Vec::new();
    for (w, qd, qc) in q_responses(&log_frequencies(1.0, 500.0, 10)) {
        let err = (qd - qc).norm() / qc.norm();
        let tol = if w < 50.0 { 0.01 } else { 0.05 };
        if err > tol {
            failures.push(format!("{w:.0} rad/s: {:.1}%", err * 100.0));
        }
    }
    ensure(
        failures.is_empty(),
        if failures.is_empty() {
            "all 10 frequencies within tolerance".into()
        } else {
            failures.join(", ")
        },
    )
}

/// Magnitude agreement: 1% below 100 rad/s, 5% up to 500 rad/s.
pub fn q_magnitude_bands() -> Check {
    let mut freqs = log_frequencies(1.0, 100.0, 12);
    freqs.pop();
    freqs.extend(log_frequencies(100.0, 500.0, 8));
    let mut worst_low = 0.0f64;
    let mut failures = Vec::new();
    for (w, qd, qc) in q_responses(&freqs) {
        let err = (qd.norm() - qc.norm()).abs() / qc.norm();
        let tol = if w < 100.0 { 0.01 } else { 0.05 };
        if w < 100.0 {
            worst_low = worst_low.max(err);
        }
        if err > tol {
            failures.push(format!("{w:.0} rad/s: {:+.1}%", (qd.norm() / qc.norm() - 1.0) * 100.0));
        }
    }
    ensure(
        failures.is_empty(),
        format!(
            "worst below 100 rad/s {:.3}%; out of band: [{}]",
            worst_low * 100.0,
            failures.join(", ")
        ),
    )
}

pub fn observer_linearity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut series = || -> Vec<ObserverInput<f64>> {
        (0..400)
            .map(|_| ObserverInput {
                u: Wrench::new(
                    Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
                    rng.random_range(-0.02..0.02),
                ),
                pos: Vec2::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)),
                theta: rng.random_range(-0.5..0.5),
            })
            .collect()
    };
    let (s1, s2) = (series(), series());
    let (a, b) = (1.7, -0.6);
    let mix: Vec<_> = s1
        .iter()
        .zip(&s2)
        .map(|(x, y)| ObserverInput {
            u: x.u * a + y.u * b,
            pos: x.pos * a + y.pos * b,
            theta: x.theta * a + y.theta * b,
        })
        .collect();
    let run_zero = |s: &[ObserverInput<f64>]| {
        let mut obs = DisturbanceObserver::new(&QFilterParams::default(), &rec2(), DT).unwrap();
        s.iter()
            .enumerate()
            .map(|(k, i)| obs.step(k as f64 * DT, i).unwrap().estimate.channels())
            .collect::<Vec<_>>()
    };
    let (e1, e2, em) = (run_zero(&s1), run_zero(&s2), run_zero(&mix));
    let mut worst = 0.0f64;
    for k in 0..em.len() {
        for c in 0..3 {
            let lin = a * e1[k][c] + b * e2[k][c];
            worst = worst.max((em[k][c] - lin).abs() / (1.0 + lin.abs()));
        }
    }
    ensure(worst < 1e-9, format!("superposition residual {worst:.1e}"))
}

pub fn observer_bibo() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut g = || rng.sample::<f64, _>(StandardNormal);
    let inputs: Vec<_> = (0..2500)
        .map(|_| ObserverInput {
            u: Wrench::new(Vec2::new(g(), g()), g()),
            pos: Vec2::new(g(), g()),
            theta: g(),
        })
        .collect();
    let mut obs = DisturbanceObserver::new(&QFilterParams::default(), &rec2(), DT).unwrap();
    let mut peak = 0.0f64;
    for (k, i) in inputs.iter().enumerate() {
        let e = obs.step(k as f64 * DT, i).unwrap().estimate.channels();
        peak = e.iter().fold(peak, |m, v| m.max(v.abs()));
    }
    ensure(peak.is_finite() && peak < 1e6, format!("peak |d̂| = {peak:.3e}"))
}

fn random_window(rng: &mut ChaCha8Rng, len: usize) -> IdentWindow<f64> {
    let u: Vec<f64> = (0..len).map(|_| rng.random_range(-3.0..3.0)).collect();
    let d = u
        .iter()
        .map(|u| -0.8 * u + 0.1 + rng.sample::<f64, _>(StandardNormal) * 0.3)
        .collect();
    IdentWindow::new(u, d, 0.0, 1.0).unwrap()
}

pub fn batch_solution(windows: &[IdentWindow<f64>]) -> [f64; 2] {
    let (mut suu, mut su, mut n, mut sud, mut sd) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for w in windows {
        for (&u, &d) in w.u.iter().zip(&w.d) {
            suu += u * u;
            su += u;
            n += 1.0;
            sud += u * d;
            sd += d;
        }
    }
    let det = suu * n - su * su;
    [(n * sud - su * sd) / det, (suu * sd - su * sud) / det]
}

pub fn recursive_solution(windows: &[IdentWindow<f64>]) -> LinearModel<f64> {
    let mut m = rls_initialize(&windows[0]).unwrap();
    for w in &windows[1..] {
        m = rls_update(&m, w).unwrap();
    }
    m
}

pub fn rls_matches_batch(trials: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let count = rng.random_range(5..12);
        let windows: Vec<_> = (0..count)
            .map(|_| {
                let len = rng.random_range(3..200);
                random_window(&mut rng, len)
            })
            .collect();
        let m = recursive_solution(&windows);
        let b = batch_solution(&windows);
        worst = worst.max(rel(m.beta, b[0])).max(rel(m.epsilon, b[1]));
    }
    ensure(
        worst < 1e-9,
        format!("{trials} sequences, worst relative difference {worst:.1e}"),
    )
}

pub fn rls_permutation_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let windows: Vec<_> = (0..8).map(|i| random_window(&mut rng, 20 + 13 * i)).collect();
    let forward = recursive_solution(&windows);
    let mut reversed = windows.clone();
    reversed.reverse();
    let backward = recursive_solution(&reversed);
    let diff = rel(forward.beta, backward.beta).max(rel(forward.epsilon, backward.epsilon));
    ensure(diff < 1e-9, format!("forward vs reversed order {diff:.1e}"))
}

pub fn rls_scaling_equivariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let windows: Vec<_> = (0..6).map(|_| random_window(&mut rng, 50)).collect();
    let base = recursive_solution(&windows);
    let c = 3.7;
    let scaled: Vec<_> = windows
        .iter()
        .map(|w| {
            IdentWindow::new(
                w.u.iter().map(|v| v * c).collect(),
                w.d.iter().map(|v| v * c).collect(),
                0.0,
                1.0,
            )
            .unwrap()
        })
        .collect();
    let s = recursive_solution(&scaled);
    let diff = rel(s.beta, base.beta).max(rel(s.epsilon, base.epsilon * c));
    ensure(diff < 1e-9, format!("scaled by {c}: {diff:.1e}"))
}

pub fn rls_symmetric_information() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut m = rls_initialize(&random_window(&mut rng, 30)).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        m = rls_update(&m, &random_window(&mut rng, 17)).unwrap();
        worst = worst
            .max((m.info[0][1] - m.info[1][0]).abs())
            .max((m.cov[0][1] - m.cov[1][0]).abs());
    }
    ensure(worst <= 1e-12, format!("largest asymmetry over 50 updates {worst:.1e}"))
}

pub fn rk4_quadratic() -> Check {
    let p = rec2();
    let w = Wrench::new(Vec2::new(0.7, -1.3), 0.002);
    let (a, alpha) = accel_from_wrench(&w, &p);
    let mut s = PlanarState::at_rest(Vec2::new(0.1, 0.2), 0.3);
    for k in 0..250 {
        s = integrate_step(&s, |_| w, &p, k as f64 * DT, DT).unwrap();
    }
    let t = 250.0 * DT;
    let exact = [
        0.1 + 0.5 * a.x * t * t,
        0.2 + 0.5 * a.y * t * t,
        0.3 + 0.5 * alpha * t * t,
    ];
    let worst = rel(s.pos.x, exact[0])
        .max(rel(s.pos.y, exact[1]))
        .max(rel(s.theta, exact[2]));
    ensure(worst < 1e-10, format!("relative error after 1 s {worst:.1e}"))
}

pub fn rotation_inverse() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a: f64 = rng.random_range(-10.0..10.0);
        let m = mat_mul(&rotation_matrix(a), &rotation_matrix(-a));
        worst = worst
            .max((m[0][0] - 1.0).abs())
            .max((m[1][1] - 1.0).abs())
            .max(m[0][1].abs())
            .max(m[1][0].abs());
    }
    ensure(worst < 1e-12, format!("100 angles, worst deviation {worst:.1e}"))
}

pub fn mass_doubling() -> Check {
    let p = rec2();
    let heavy = ObjectParams {
        mass: 2.0 * p.mass,
        ..p
    };
    let w = Wrench::new(Vec2::new(0.37, -2.9), 0.0);
    let (a1, _) = accel_from_wrench(&w, &p);
    let (a2, _) = accel_from_wrench(&w, &heavy);
    ensure(a2.x == a1.x / 2.0 && a2.y == a1.y / 2.0, format!("{a1:?} -> {a2:?}"))
}

pub fn frame_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let raw = RawSample {
            t: 0.0,
            tip_pos_rbt: Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            tip_theta: rng.random_range(-PI..PI),
            obj_pos: Vec2::zero(),
            obj_theta: 0.0,
            tip_force_rbt: Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
            tip_torque: 0.0,
        };
        let r = to_reference_frame(&raw);
        let back_pos = r.tip_pos.rotated(-raw.tip_theta);
        let back_force = r.tip_force.rotated(-raw.tip_theta);
        worst = worst
            .max((back_pos - raw.tip_pos_rbt).norm())
            .max((back_force - raw.tip_force_rbt).norm());
    }
    ensure(worst < 1e-12, format!("200 samples, worst {worst:.1e}"))
}

pub fn csv_round_trip() -> Check {
    let out = generate(&SynthScenario::<f64>::default(), &rec2()).map_err(|e| e.to_string())?;
    let mut first = Vec::new();
    write_trajectory(&out.trajectory, &mut first).map_err(|e| e.to_string())?;
    let back = read_trajectory(first.as_slice(), std::path::Path::new("mem.csv"), rec2(), "synth")
        .map_err(|e| e.to_string())?;
    let mut second = Vec::new();
    write_trajectory(&back, &mut second).map_err(|e| e.to_string())?;
    let same_values = back.samples() == out.trajectory.samples();
    ensure(
        first == second && same_values,
        format!("{} bytes, values equal: {same_values}", first.len()),
    )
}

pub fn synth_truth_exact() -> Check {
    let s = SynthScenario::<f64>::default();
    let out = generate(&s, &rec2()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (d, u) in out.truth.iter().zip(&out.applied) {
        let uc = u.channels();
        for (c, dc) in d.channels().into_iter().enumerate() {
            worst = worst.max((dc - (s.true_beta[c] * uc[c] + s.true_epsilon[c])).abs());
        }
    }
    ensure(worst <= 1e-15, format!("largest residual {worst:.1e}"))
}

pub fn synth_noise_free_validates() -> Check {
    let s = SynthScenario::<f64> {
        noise: NoiseLevels::none(),
        ..SynthScenario::default()
    };
    let out = generate(&s, &rec2()).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_trajectory(&out.trajectory, &mut buf).map_err(|e| e.to_string())?;
    read_trajectory(buf.as_slice(), std::path::Path::new("mem.csv"), rec2(), "clean")
        .map(|t| format!("{} samples load cleanly", t.len()))
        .map_err(|e| e.to_string())
}

pub fn recon_bounded_tracking() -> Check {
    let s = SynthScenario::<f64> {
        duration: 20.0,
        ..SynthScenario::default()
    };
    let out = generate(&s, &rec2()).map_err(|e| e.to_string())?;
    let r = reconstruct(&out.trajectory, &PidGains::default()).map_err(|e| e.to_string())?;
    let worst = r
        .sim
        .iter()
        .zip(out.trajectory.samples())
        .map(|(sim, m)| (m.obj_pos - sim.pos).norm())
        .fold(0.0, f64::max);
    ensure(worst < 0.1, format!("max |e_r| over 20 s = {worst:.2e} m"))
}

pub fn recon_superposition() -> Check {
    let out = generate(&SynthScenario::<f64>::default(), &rec2()).map_err(|e| e.to_string())?;
    let c = 2.5;
    let scaled: Vec<RawSample<f64>> = out
        .trajectory
        .samples()
        .iter()
        .map(|s| RawSample {
            obj_pos: s.obj_pos * c,
            obj_theta: s.obj_theta * c,
            ..*s
        })
        .collect();
    let scaled = pushdob::data::PushTrajectory::new(scaled, rec2(), "scaled").map_err(|e| e.to_string())?;
    let a = reconstruct(&out.trajectory, &PidGains::default()).map_err(|e| e.to_string())?;
    let b = reconstruct(&scaled, &PidGains::default()).map_err(|e| e.to_string())?;
    let scale = a.f_total.iter().map(|f| f.norm()).fold(0.0, f64::max);
    let worst = a
        .f_total
        .iter()
        .zip(&b.f_total)
        .map(|(fa, fb)| (*fb - *fa * c).norm())
        .fold(0.0, f64::max)
        / scale;
    ensure(worst < 1e-9, format!("relative residual {worst:.1e}"))
}

/// Start pose of every prediction equals the measurement at its boundary.
pub fn phase_continuity() -> Check {
    let out = generate(&SynthScenario::<f64>::default(), &rec2()).map_err(|e| e.to_string())?;
    let run = run_pipeline(&out.trajectory, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let samples = out.trajectory.samples();
    for track in &run.tracks {
        let first = *run.schedule.sample_range(track.phase_index).start();
        let s = track.states[0];
        let m = samples[first];
        if s.pos != m.obj_pos || s.theta != m.obj_theta || s.vel != Vec2::zero() || s.omega != 0.0 {
            return Err(format!(
                "phase {} starts at {:?}, measured {:?}",
                track.phase_index, s, m
            ));
        }
    }
    Ok(format!("{} tracks start exactly on the measurement", run.tracks.len()))
}

fn constant_force_trajectory() -> pushdob::PushTrajectory {
    let s = SynthScenario::<f64> {
        // pushing straight through the centre keeps the wrench constant
        profile: PushProfile::Constant {
            force: Vec2::new(0.9, 0.0),
            torque: 0.0,
        },
        contact_offset: 0.0,
        true_epsilon: [0.05, -0.02, 0.0],
        noise: NoiseLevels::none(),
        duration: 4.0,
        ..SynthScenario::default()
    };
    generate(&s, &rec2()).unwrap().trajectory
}

pub fn plan_rate_robustness() -> Check {
    let traj = constant_force_trajectory();
    let refs = traj.reference_samples();
    let grid = traj.times();
    let models = ChannelModels {
        fx: LinearModel::from_coefficients(-0.9, 0.05),
        fy: LinearModel::from_coefficients(-0.85, -0.02),
        tau: LinearModel::from_coefficients(-0.7, 0.001),
    };
    let start = PlanarState::at_rest(refs[0].obj_pos, refs[0].obj_theta);
    let track = |rate: f64| -> PredictedTrack<f64> {
        let stride = plan_stride(traj.sample_rate(), rate).unwrap();
        let plan = ForcePlan::from_samples(&refs, &plan_indices(0..=refs.len() - 1, stride)).unwrap();
        predict_pose(start, &grid, &plan, &models, &traj.params).unwrap()
    };
    let (fast, slow) = (track(250.0), track(10.0));
    let worst = fast
        .states
        .iter()
        .zip(&slow.states)
        .map(|(a, b)| (a.pos - b.pos).norm().max((a.theta - b.theta).abs()))
        .fold(0.0, f64::max);
    ensure(worst < 1e-9, format!("250 Hz vs 10 Hz plan: {worst:.1e}"))
}

pub fn proposed_nominal_equals_frictionless() -> Check {
    let out = generate(&SynthScenario::<f64>::default(), &rec2()).map_err(|e| e.to_string())?;
    let refs = out.trajectory.reference_samples();
    let grid = out.trajectory.times();
    let plan = ForcePlan::from_samples(&refs, &plan_indices(0..=refs.len() - 1, 25.0)).unwrap();
    let start = PlanarState::at_rest(refs[0].obj_pos, refs[0].obj_theta);
    let p = predict_pose(start, &grid, &plan, &ChannelModels::nominal(), &rec2()).map_err(|e| e.to_string())?;
    let s = predict_simple(start, &grid, &plan, &rec2(), 0.0).map_err(|e| e.to_string())?;
    let worst = p
        .states
        .iter()
        .zip(&s.states)
        .map(|(a, b)| (a.pos - b.pos).norm().max((a.theta - b.theta).abs()))
        .fold(0.0, f64::max);
    ensure(worst <= 1e-12, format!("largest pose difference {worst:.1e}"))
}

pub fn moment_arm_in_torque() -> Check {
    let traj = generate(&SynthScenario::<f64>::default(), &rec2())
        .map_err(|e| e.to_string())?
        .trajectory;
    let p = rec2();
    let mut worst = 0.0f64;
    for r in traj.reference_samples() {
        let with = r.applied_wrench();
        let without = Wrench::new(r.tip_force, r.tip_torque);
        let (_, a1) = accel_from_wrench(&with, &p);
        let (_, a0) = accel_from_wrench(&without, &p);
        let expected = (r.tip_pos - r.obj_pos).cross(r.tip_force) / p.inertia;
        worst = worst.max(((a1 - a0) - expected).abs() / (1.0 + expected.abs()));
    }
    ensure(worst < 1e-12, format!("largest deviation {worst:.1e} rad/s²"))
}

pub fn metrics_translation_invariant() -> Check {
    let out = generate(&SynthScenario::<f64>::default(), &rec2()).map_err(|e| e.to_string())?;
    let run = run_pipeline(&out.trajectory, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let shift = Vec2::new(3.2, -1.7);
    let moved: Vec<RawSample<f64>> = out
        .trajectory
        .samples()
        .iter()
        .map(|s| RawSample {
            obj_pos: s.obj_pos + shift,
            ..*s
        })
        .collect();
    let moved = pushdob::data::PushTrajectory::new(moved, rec2(), "synth").map_err(|e| e.to_string())?;
    let tracks: Vec<PredictedTrack<f64>> = run
        .tracks
        .iter()
        .map(|t| PredictedTrack {
            states: t
                .states
                .iter()
                .map(|s| PlanarState {
                    pos: s.pos + shift,
                    ..*s
                })
                .collect(),
            ..t.clone()
        })
        .collect();
    let a = &run.report;
    let b = summarize(&tracks, &moved).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (pa, pb) in a.phases.iter().zip(&b.phases) {
        for (x, y) in pa.stats.means().iter().zip(pb.stats.means()) {
            worst = worst.max((x - y).abs());
        }
        worst = worst.max((pa.stats.std_err_x - pb.stats.std_err_x).abs());
    }
    ensure(worst < 1e-12, format!("largest change {worst:.1e}"))
}

pub fn report_deterministic() -> Check {
    let s = SynthScenario::<f64>::default();
    let run = || {
        let out = generate(&s, &rec2()).unwrap();
        let r = run_pipeline(&out.trajectory, &PipelineConfig::default()).unwrap();
        serde_json::to_string(&r.report).unwrap()
    };
    ensure(run() == run(), "two runs serialize identically".into())
}

pub fn defaults_match_published() -> Check {
    let c = pushdob::RunConfig::default();
    let g = c.gains;
    let ok = c.q.omega_n == 300.0
        && c.q.zeta == std::f64::consts::FRAC_1_SQRT_2
        && [g.kp, g.ki, g.kd, g.lp, g.li, g.ld] == [46.6, 34.6, 15.4, 117.2, 137.8, 24.5]
        && c.plan_rate == 10.0
        && c.phases == 4
        && c.mu == 0.14;
    ensure(ok, format!("{c:?}"))
}

/// Largest change of `d̂` across a switch at `at`, relative to the
/// uninterrupted observer on the same noise-free pushes.
pub fn switch_transient(mode: ResetMode, at: usize) -> (f64, f64) {
    let s = SynthScenario::<f64> {
        noise: NoiseLevels::none(),
        ..SynthScenario::default()
    };
    let out = generate(&s, &rec2()).unwrap();
    let refs = out.trajectory.reference_samples();
    let q = QFilterParams::default();
    let mut through = DisturbanceObserver::new(&q, &rec2(), DT).unwrap();
    let reference = through.run_segment(&refs, 0..refs.len(), ResetMode::Hold).unwrap();
    let mut switched = DisturbanceObserver::new(&q, &rec2(), DT).unwrap();
    switched.run_segment(&refs, 0..at, ResetMode::Hold).unwrap();
    let after = switched.run_segment(&refs, at..refs.len(), mode).unwrap();
    let scale = out
        .truth
        .iter()
        .flat_map(|d| [d.d_fx.abs(), d.d_fy.abs()])
        .fold(0.0, f64::max);
    let jump = after
        .iter()
        .zip(&reference[at..])
        .take(50)
        .map(|(a, r)| {
            (a.estimate.d_fx - r.estimate.d_fx)
                .abs()
                .max((a.estimate.d_fy - r.estimate.d_fy).abs())
        })
        .fold(0.0, f64::max);
    (jump, scale)
}
