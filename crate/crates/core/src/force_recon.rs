//! Total force/torque reconstruction by PID tracking of the measured pose.
//!
//! A simulated copy of the object is driven by two PID loops (translation and
//! rotation) that chase the measured pose. The loop outputs are the forces
//! and torques needed to reproduce the motion; subtracting the applied wrench
//! leaves the unknown (friction) part. The measured pose is interpolated
//! linearly between samples and its rate taken as a backward difference; the
//! closed loop (body plus integral state) is integrated with RK4 sub-steps
//! small enough for the stiff rotational loop.

use serde::{Deserialize, Serialize};

use crate::data::PushTrajectory;
use crate::dynamics::{PlanarState, Vec2};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Angular tracking error [rad] treated as divergence.
const THETA_ERROR_LIMIT: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PidGains<T> {
    pub kp: T,
    pub ki: T,
    pub kd: T,
    pub lp: T,
    pub li: T,
    pub ld: T,
}

impl<T: Real> Default for PidGains<T> {
    /// Gains tuned for the `rec2` block on the `abs` surface.
    fn default() -> Self {
        Self {
            kp: T::lit(46.6),
            ki: T::lit(34.6),
            kd: T::lit(15.4),
            lp: T::lit(117.2),
            li: T::lit(137.8),
            ld: T::lit(24.5),
        }
    }
}

impl<T: Real> PidGains<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [self.kp, self.ki, self.kd, self.lp, self.li, self.ld];
        if all.iter().all(|g| g.is_finite() && *g >= T::zero()) {
            Ok(())
        } else {
            Err(Error::Argument(format!("PID gains must be finite and >= 0: {self:?}")))
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReconResult<T> {
    pub t: Vec<T>,
    pub f_total: Vec<Vec2<T>>,
    pub t_total: Vec<T>,
    pub f_frt: Vec<Vec2<T>>,
    pub t_frt: Vec<T>,
    /// Pose of the simulated body at every sample.
    pub sim: Vec<PlanarState<T>>,
    pub tracking_rmse_pos: T,
    pub tracking_rmse_theta: T,
}

/// Backward difference with the first element set to zero.
pub fn derivative_of_error<T: Real>(e: &[T], dt: T) -> Vec<T> {
    let mut out = Vec::with_capacity(e.len());
    if e.is_empty() {
        return out;
    }
    out.push(T::zero());
    out.extend(e.windows(2).map(|w| (w[1] - w[0]) / dt));
    out
}

/// One decoupled axis of the simulated body under PID tracking.
struct Tracker<T> {
    p: T,
    i: T,
    d: T,
    inertia: T,
    pos: T,
    vel: T,
    integral: T,
}

impl<T: Real> Tracker<T> {
    fn new(p: T, i: T, d: T, inertia: T, pos: T) -> Self {
        Self {
            p,
            i,
            d,
            inertia,
            pos,
            vel: T::zero(),
            integral: T::zero(),
        }
    }

    /// Sub-steps per sample keeping RK4 inside its stability region; the
    /// closed-loop poles are bounded by the Fujiwara bound of
    /// `s³ + (d/I) s² + (p/I) s + i/I`.
    fn substeps(&self, dt: T) -> usize {
        let bound = T::lit(2.0)
            * (self.d / self.inertia)
                .max((self.p / self.inertia).sqrt())
                .max((self.i / self.inertia).cbrt());
        (dt * bound / T::lit(2.5)).ceil().to_usize().unwrap_or(1).max(1)
    }

    fn output(&self, measured: T, measured_rate: T) -> T {
        let e = measured - self.pos;
        self.p * e + self.i * self.integral + self.d * (measured_rate - self.vel)
    }

    /// Advances the closed loop while the measurement moves linearly from
    /// `m0` to `m1` over `dt`.
    fn advance(&mut self, m0: T, m1: T, dt: T) {
        let n = self.substeps(dt);
        let h = dt / T::from_usize_lossy(n);
        let slope = (m1 - m0) / dt;
        let deriv = |tau: T, z: [T; 3]| -> [T; 3] {
            let e = m0 + slope * tau - z[0];
            let force = self.p * e + self.i * z[2] + self.d * (slope - z[1]);
            [z[1], force / self.inertia, e]
        };
        let add = |z: [T; 3], k: [T; 3], c: T| [z[0] + k[0] * c, z[1] + k[1] * c, z[2] + k[2] * c];
        let half = h / T::lit(2.0);
        let mut z = [self.pos, self.vel, self.integral];
        for j in 0..n {
            let tau = T::from_usize_lossy(j) * h;
            let k1 = deriv(tau, z);
            let k2 = deriv(tau + half, add(z, k1, half));
            let k3 = deriv(tau + half, add(z, k2, half));
            let k4 = deriv(tau + h, add(z, k3, h));
            for c in 0..3 {
                z[c] += h / T::lit(6.0) * (k1[c] + T::lit(2.0) * (k2[c] + k3[c]) + k4[c]);
            }
        }
        [self.pos, self.vel, self.integral] = z;
    }
}

pub fn reconstruct<T: Real>(traj: &PushTrajectory<T>, gains: &PidGains<T>) -> Result<ReconResult<T>> {
    gains.validate()?;
    let params = &traj.params;
    let refs = traj.reference_samples();
    let n = refs.len();
    let dt = traj.dt();
    let pos_limit = params.length * T::lit(10.0);

    let meas: [Vec<T>; 3] = [
        refs.iter().map(|r| r.obj_pos.x).collect(),
        refs.iter().map(|r| r.obj_pos.y).collect(),
        refs.iter().map(|r| r.obj_theta).collect(),
    ];
    let rates = meas.clone().map(|m| derivative_of_error(&m, dt));

    let mut axes = [
        Tracker::new(gains.kp, gains.ki, gains.kd, params.mass, meas[0][0]),
        Tracker::new(gains.kp, gains.ki, gains.kd, params.mass, meas[1][0]),
        Tracker::new(gains.lp, gains.li, gains.ld, params.inertia, meas[2][0]),
    ];

    let mut out = ReconResult {
        t: Vec::with_capacity(n),
        f_total: Vec::with_capacity(n),
        t_total: Vec::with_capacity(n),
        f_frt: Vec::with_capacity(n),
        t_frt: Vec::with_capacity(n),
        sim: Vec::with_capacity(n),
        tracking_rmse_pos: T::zero(),
        tracking_rmse_theta: T::zero(),
    };
    let mut sq_pos = T::zero();
    let mut sq_theta = T::zero();

    for (k, r) in refs.iter().enumerate() {
        let state = PlanarState {
            pos: Vec2::new(axes[0].pos, axes[1].pos),
            theta: axes[2].pos,
            vel: Vec2::new(axes[0].vel, axes[1].vel),
            omega: axes[2].vel,
        };
        if !state.is_finite() {
            return Err(Error::IntegrationDiverged { t: r.t.to_f64_lossy() });
        }
        let e_r = r.obj_pos - state.pos;
        let e_th = r.obj_theta - state.theta;
        if !(e_r.norm() <= pos_limit) {
            return Err(Error::GainFailure {
                t: r.t.to_f64_lossy(),
                error: e_r.norm().to_f64_lossy(),
                limit: pos_limit.to_f64_lossy(),
            });
        }
        if !(e_th.abs() <= T::lit(THETA_ERROR_LIMIT)) {
            return Err(Error::GainFailure {
                t: r.t.to_f64_lossy(),
                error: e_th.abs().to_f64_lossy(),
                limit: THETA_ERROR_LIMIT,
            });
        }
        sq_pos += e_r.dot(e_r);
        sq_theta += e_th * e_th;

        let u: [T; 3] = [0, 1, 2].map(|c| axes[c].output(meas[c][k], rates[c][k]));
        let force = Vec2::new(u[0], u[1]);
        let applied = r.applied_wrench();

        out.t.push(r.t);
        out.f_total.push(force);
        out.t_total.push(u[2]);
        out.f_frt.push(force - applied.force);
        out.t_frt.push(u[2] - applied.torque);
        out.sim.push(state);

        if k + 1 < n {
            let step = refs[k + 1].t - r.t;
            for (c, axis) in axes.iter_mut().enumerate() {
                axis.advance(meas[c][k], meas[c][k + 1], step);
            }
        }
    }

    let count = T::from_usize_lossy(n);
    out.tracking_rmse_pos = (sq_pos / count).sqrt();
    out.tracking_rmse_theta = (sq_theta / count).sqrt();
    Ok(out)
}
