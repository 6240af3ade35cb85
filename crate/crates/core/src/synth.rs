//! Synthetic push records with a known linear disturbance law.
//!
//! The true dynamics are `m r̈ = f + β∘f + ε` (per channel, the torque channel
//! using the full applied torque `T_C + r_m × f_C`). The applied wrench is
//! held over each sample and integrated with RK4; pose and wrench are then
//! written with additive Gaussian noise from a seeded generator.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{PushTrajectory, RawSample};
use crate::dynamics::{integrate_step, moment_arm_torque, ObjectParams, PlanarState, Vec2, Wrench};
use crate::error::{Error, Result};
use crate::observer::DisturbanceEstimate;
use crate::scalar::Real;

pub const TRUTH_HEADER: [&str; 4] = ["t", "d_fx", "d_fy", "d_tau"];

/// Smallest `|1 + β|` for which a kinematic profile can be inverted.
const MIN_GAIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevels<T> {
    /// [m]
    pub pos: T,
    /// [rad]
    pub theta: T,
    /// [N]
    pub force: T,
    /// [N·m]
    pub torque: T,
}

impl<T: Real> Default for NoiseLevels<T> {
    fn default() -> Self {
        Self {
            pos: T::lit(1e-4),
            theta: T::lit(1e-3),
            force: T::lit(1e-2),
            torque: T::lit(1e-4),
        }
    }
}

impl<T: Real> NoiseLevels<T> {
    pub fn none() -> Self {
        Self {
            pos: T::zero(),
            theta: T::zero(),
            force: T::zero(),
            torque: T::zero(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PushProfile<T> {
    /// Fixed contact force and contact torque `T_C`.
    Constant { force: Vec2<T>, torque: T },
    /// Stop-and-go pushes: in every cycle the object accelerates along
    /// `direction` to `velocity`, cruises, decelerates to rest and dwells for
    /// half a cycle. Angular acceleration `±spin` accompanies the speed-up
    /// and slow-down, alternating sign between cycles. Acceleration levels
    /// change every `period`; with `smooth` the change is spread over the
    /// period so that a hold of each period's first sample is exact at the
    /// period boundaries.
    Pushes {
        /// [rad]
        direction: T,
        /// [m/s]
        velocity: T,
        /// [m/s²]
        accel: T,
        /// [s]
        cycle: T,
        /// [rad/s²]
        spin: T,
        /// [s]
        period: T,
        smooth: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthScenario<T> {
    /// Per channel `[fx, fy, torque]`.
    pub true_beta: [T; 3],
    pub true_epsilon: [T; 3],
    pub profile: PushProfile<T>,
    /// [s]
    pub duration: T,
    /// [Hz]
    pub sample_rate: T,
    pub noise: NoiseLevels<T>,
    pub seed: u64,
    /// Contact point offset along the pushed face [m].
    pub contact_offset: T,
    /// Constant robot-to-reference frame angle [rad].
    pub tip_frame_angle: T,
    /// True inertia relative to the nominal one.
    pub inertia_scale: T,
    pub case_id: String,
}

impl<T: Real> Default for SynthScenario<T> {
    fn default() -> Self {
        Self {
            true_beta: [T::lit(-0.9), T::lit(-0.85), T::lit(-0.7)],
            true_epsilon: [T::lit(0.05), T::lit(-0.02), T::lit(0.001)],
            profile: PushProfile::Pushes {
                direction: T::lit(0.6),
                velocity: T::lit(0.05),
                accel: T::lit(0.5),
                cycle: T::lit(0.5),
                spin: T::lit(10.0),
                period: T::lit(0.1),
                smooth: true,
            },
            duration: T::lit(8.0),
            sample_rate: T::lit(250.0),
            noise: NoiseLevels::default(),
            seed: 0,
            contact_offset: T::lit(0.02),
            tip_frame_angle: T::lit(0.3),
            inertia_scale: T::one(),
            case_id: "synth".into(),
        }
    }
}

impl<T: Real> SynthScenario<T> {
    /// Friction cancels almost all of the applied force.
    pub fn friction_dominated() -> Self {
        Self {
            true_beta: [T::lit(-0.95), T::lit(-0.95), T::lit(-0.8)],
            true_epsilon: [T::lit(-0.05), T::lit(-0.03), T::zero()],
            case_id: "synth_friction".into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self
            .true_beta
            .iter()
            .chain(&self.true_epsilon)
            .chain([&self.contact_offset, &self.tip_frame_angle])
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Argument("scenario coefficients must be finite".into()));
        }
        if !(self.duration > T::zero() && self.duration.is_finite()) {
            return Err(Error::Argument(format!("duration must be > 0, got {}", self.duration)));
        }
        if !(self.sample_rate > T::zero() && self.sample_rate.is_finite()) {
            return Err(Error::Argument(format!(
                "sample rate must be > 0, got {}",
                self.sample_rate
            )));
        }
        if !(self.inertia_scale > T::zero()) {
            return Err(Error::Argument(format!(
                "inertia scale must be > 0, got {}",
                self.inertia_scale
            )));
        }
        let n = self.noise;
        if ![n.pos, n.theta, n.force, n.torque]
            .iter()
            .all(|s| *s >= T::zero() && s.is_finite())
        {
            return Err(Error::Argument("noise sigmas must be finite and >= 0".into()));
        }
        if let PushProfile::Pushes {
            direction,
            velocity,
            accel,
            cycle,
            spin,
            period,
            ..
        } = self.profile
        {
            let positive = [velocity, accel, cycle, period]
                .iter()
                .all(|v| *v > T::zero() && v.is_finite());
            if !(positive && direction.is_finite() && spin.is_finite()) {
                return Err(Error::Argument(
                    "push velocity, acceleration, cycle and period must be > 0".into(),
                ));
            }
            if let Some(c) = self
                .true_beta
                .iter()
                .position(|b| (T::one() + *b).abs() < T::lit(MIN_GAIN))
            {
                return Err(Error::Argument(format!(
                    "beta of channel {c} leaves no net force to shape the push"
                )));
            }
        }
        Ok(())
    }

    fn sample_count(&self) -> Result<usize> {
        let n = (self.duration * self.sample_rate).round().to_usize().unwrap_or(0) + 1;
        if n < 2 {
            return Err(Error::Argument("scenario yields fewer than 2 samples".into()));
        }
        Ok(n)
    }
}

#[derive(Clone, Debug)]
pub struct SynthOutput<T> {
    pub trajectory: PushTrajectory<T>,
    /// `β∘u + ε` at every sample.
    pub truth: Vec<DisturbanceEstimate<T>>,
    /// Noise-free applied wrench `(f_C, T_C + r_m × f_C)`.
    pub applied: Vec<Wrench<T>>,
    /// Noise-free object state.
    pub states: Vec<PlanarState<T>>,
}

/// Stop-and-go acceleration levels on a grid of `len` samples.
///
/// With smooth transitions, period `j` moves from level `j − 1` to level
/// `j` along a curve whose sum and first moment over the period vanish, so
/// holding the value at the start of each period reproduces the exact
/// velocity and position at every period boundary.
struct PushSchedule<T> {
    dir: Vec2<T>,
    accel: T,
    spin: T,
    len: usize,
    ramp: usize,
    cruise: usize,
    cycle: usize,
    shape: Option<Vec<T>>,
}

/// Transition weights `g_i`, `g_0 = 0`, rising smoothly towards 1 with
/// `Σ g_i = Σ i g_i = 0`.
fn transition_shape<T: Real>(len: usize) -> Vec<T> {
    let pi = T::PI();
    let two = T::lit(2.0);
    let s = |i: usize| T::from_usize_lossy(i) / T::from_usize_lossy(len);
    let rise = |x: T| (T::one() - (pi * x).cos()) / two;
    let bump = |x: T| T::one() - (two * pi * x).cos();
    let twist = |x: T| (two * pi * x).sin() - (T::lit(4.0) * pi * x).sin() / two;
    let (mut m, mut rhs) = ([[T::zero(); 2]; 2], [T::zero(); 2]);
    for i in 0..len {
        let (x, w) = (s(i), T::from_usize_lossy(i));
        m[0][0] += bump(x);
        m[0][1] += twist(x);
        m[1][0] += w * bump(x);
        m[1][1] += w * twist(x);
        rhs[0] -= rise(x);
        rhs[1] -= w * rise(x);
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let a = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    let b = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
    (0..len)
        .map(|i| rise(s(i)) + a * bump(s(i)) + b * twist(s(i)))
        .collect()
}

impl<T: Real> PushSchedule<T> {
    fn new(profile: &PushProfile<T>, rate: T) -> Result<Option<Self>> {
        let PushProfile::Pushes {
            direction,
            velocity,
            accel,
            cycle,
            spin,
            period,
            smooth,
        } = *profile
        else {
            return Ok(None);
        };
        let len = (period * rate).round().to_usize().unwrap_or(0);
        if len < 1 || (smooth && len < 4) {
            return Err(Error::Argument(format!("period of {period} s spans too few samples")));
        }
        let periods = |x: T| (x / period).round().to_usize().unwrap_or(0);
        let ramp = periods(velocity / accel).max(1);
        let cycle_n = periods(cycle);
        let push = cycle_n / 2;
        if push < 2 * ramp {
            return Err(Error::Argument(format!(
                "cycle of {cycle} s is too short to reach {velocity} m/s at {accel} m/s²"
            )));
        }
        Ok(Some(Self {
            dir: Vec2::new(direction.cos(), direction.sin()),
            // velocity reached exactly after `ramp` periods
            accel: velocity / (T::from_usize_lossy(ramp) * period),
            spin,
            len,
            ramp,
            cruise: push - 2 * ramp,
            cycle: cycle_n,
            shape: smooth.then(|| transition_shape(len)),
        }))
    }

    fn level(&self, j: usize) -> (T, T) {
        let within = j % self.cycle;
        let sign = if (j / self.cycle).is_multiple_of(2) {
            T::one()
        } else {
            -T::one()
        };
        if within < self.ramp {
            (self.accel, self.spin * sign)
        } else if within < self.ramp + self.cruise {
            (T::zero(), T::zero())
        } else if within < 2 * self.ramp + self.cruise {
            (-self.accel, -self.spin * sign)
        } else {
            (T::zero(), T::zero())
        }
    }

    fn at(&self, k: usize) -> (Vec2<T>, T) {
        let (j, i) = (k / self.len, k % self.len);
        let (a, alpha) = match &self.shape {
            None => self.level(j),
            Some(g) => {
                let (a0, s0) = if j == 0 {
                    (T::zero(), T::zero())
                } else {
                    self.level(j - 1)
                };
                let (a1, s1) = self.level(j);
                (a0 + (a1 - a0) * g[i], s0 + (s1 - s0) * g[i])
            }
        };
        (self.dir * a, alpha)
    }
}

fn contact_point<T: Real>(s: &PlanarState<T>, p: &ObjectParams<T>, offset: T) -> Vec2<T> {
    s.pos + Vec2::new(-p.length / T::lit(2.0), offset).rotated(s.theta)
}

/// Simulates `scenario` for an object whose nominal description is `p`.
pub fn generate<T: Real>(scenario: &SynthScenario<T>, p: &ObjectParams<T>) -> Result<SynthOutput<T>> {
    scenario.validate()?;
    p.validate()?;
    let n = scenario.sample_count()?;
    let dt = T::one() / scenario.sample_rate;
    let plant = p.scaled_inertia(scenario.inertia_scale);
    let schedule = PushSchedule::new(&scenario.profile, scenario.sample_rate)?;
    let (beta, eps) = (scenario.true_beta, scenario.true_epsilon);

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut noise = |sigma: T| -> T {
        let z: f64 = StandardNormal.sample(&mut rng);
        sigma * T::lit(z)
    };

    let mut state = PlanarState::default();
    let mut samples = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    let mut applied = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);

    for k in 0..n {
        let t = T::from_usize_lossy(k) * dt;
        let tip = contact_point(&state, p, scenario.contact_offset);
        let (force, torque_applied) = match &schedule {
            None => {
                let PushProfile::Constant { force, torque } = scenario.profile else {
                    unreachable!("schedule exists for pushes")
                };
                (force, torque + moment_arm_torque(tip, state.pos, force))
            }
            Some(sched) => {
                let (a, alpha) = sched.at(k);
                let fx = (plant.mass * a.x - eps[0]) / (T::one() + beta[0]);
                let fy = (plant.mass * a.y - eps[1]) / (T::one() + beta[1]);
                let tau = (plant.inertia * alpha - eps[2]) / (T::one() + beta[2]);
                (Vec2::new(fx, fy), tau)
            }
        };
        let u = Wrench::new(force, torque_applied);
        let uc = u.channels();
        let d = [0, 1, 2].map(|c| beta[c] * uc[c] + eps[c]);
        let contact_torque = torque_applied - moment_arm_torque(tip, state.pos, force);

        let nz = scenario.noise;
        let frame = scenario.tip_frame_angle;
        let tip_meas = tip + Vec2::new(noise(nz.pos), noise(nz.pos));
        let force_meas = force + Vec2::new(noise(nz.force), noise(nz.force));
        samples.push(RawSample {
            t,
            tip_pos_rbt: tip_meas.rotated(-frame),
            tip_theta: frame,
            obj_pos: state.pos + Vec2::new(noise(nz.pos), noise(nz.pos)),
            obj_theta: state.theta + noise(nz.theta),
            tip_force_rbt: force_meas.rotated(-frame),
            tip_torque: contact_torque + noise(nz.torque),
        });
        truth.push(DisturbanceEstimate {
            t,
            d_fx: d[0],
            d_fy: d[1],
            d_tau: d[2],
        });
        applied.push(u);
        states.push(state);

        if k + 1 < n {
            let total = u + Wrench::from_channels(d);
            state = integrate_step(&state, |_| total, &plant, t, dt)?;
        }
    }

    Ok(SynthOutput {
        trajectory: PushTrajectory::new(samples, *p, scenario.case_id.clone())?,
        truth,
        applied,
        states,
    })
}

pub fn write_truth<T: Real, W: Write>(truth: &[DisturbanceEstimate<T>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRUTH_HEADER)?;
    for d in truth {
        w.write_record([d.t, d.d_fx, d.d_fy, d.d_tau].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth<T: Real, R: Read>(reader: R) -> Result<Vec<DisturbanceEstimate<T>>> {
    let mut r = csv::Reader::from_reader(reader);
    if r.headers()?.iter().ne(TRUTH_HEADER) {
        return Err(Error::Schema(format!(
            "truth header must be {}",
            TRUTH_HEADER.join(",")
        )));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            let v: Vec<f64> = rec
                .iter()
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Schema(format!("truth row {:?}: {e}", rec.position().map(|p| p.line()))))?;
            if v.len() != 4 {
                return Err(Error::Schema("truth rows need 4 columns".into()));
            }
            Ok(DisturbanceEstimate {
                t: T::lit(v[0]),
                d_fx: T::lit(v[1]),
                d_fy: T::lit(v[2]),
                d_tau: T::lit(v[3]),
            })
        })
        .collect()
}
