//! Q-filter disturbance observer.
//!
//! Each channel (x, y, θ) runs two discrete filters:
//!
//! * the u-branch `Q_A(s) = ωn² / (s² + 2ζωn s + ωn²)` applied to the input,
//! * the y-branch `Q_B(s)·P_n⁻¹(s) = M ωn² s² / (s² + 2ζωn s + ωn²)` applied
//!   to the measured coordinate, `M` being the nominal mass or inertia.
//!
//! `d̂ = y-branch − u-branch`. Both are Tustin-discretized and kept in
//! observable canonical form; the y-branch is biproper, so the measured pose is
//! never differentiated explicitly.

mod section;

use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use section::SecondOrderSection;

use crate::data::RefSample;
use crate::dynamics::{ObjectParams, Vec2, Wrench};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QFilterParams<T> {
    /// Natural frequency [rad/s].
    pub omega_n: T,
    pub zeta: T,
}

impl<T: Real> Default for QFilterParams<T> {
    fn default() -> Self {
        Self {
            omega_n: T::lit(300.0),
            zeta: T::FRAC_1_SQRT_2(),
        }
    }
}

impl<T: Real> QFilterParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_n.is_finite() && self.omega_n > T::zero()) {
            return Err(Error::Config(format!("omega_n must be > 0, got {}", self.omega_n)));
        }
        if !(self.zeta > T::zero() && self.zeta < T::lit(2.0)) {
            return Err(Error::Config(format!("zeta must lie in (0, 2), got {}", self.zeta)));
        }
        Ok(())
    }

    /// Continuous-time `Q(jω)`.
    pub fn response(&self, omega: T) -> num_complex::Complex<T> {
        let wn2 = self.omega_n * self.omega_n;
        let den = num_complex::Complex::new(wn2 - omega * omega, T::lit(2.0) * self.zeta * self.omega_n * omega);
        num_complex::Complex::new(wn2, T::zero()) / den
    }
}

/// The u-branch and y-branch of one observer channel.
#[derive(Clone, Debug)]
pub struct ChannelFilters<T> {
    pub u_branch: SecondOrderSection<T>,
    pub y_branch: SecondOrderSection<T>,
}

impl<T: Real> ChannelFilters<T> {
    /// Returns `(d̂, Q_A u)`.
    pub fn step(&mut self, u: T, y: T) -> (T, T) {
        let qu = self.u_branch.step(u);
        (self.y_branch.step(y) - qu, qu)
    }

    /// Inputs as `value + k·rate + k²·curv` around the current sample.
    fn reset_polynomial(&mut self, u: [T; 3], y: [T; 3]) {
        self.u_branch
            .set_state(self.u_branch.quadratic_steady_state(u[0], u[1], u[2]));
        self.y_branch
            .set_state(self.y_branch.quadratic_steady_state(y[0], y[1], y[2]));
    }

    fn clear(&mut self) {
        self.u_branch.set_state([T::zero(); 2]);
        self.y_branch.set_state([T::zero(); 2]);
    }
}

/// Discretizes the filter pair for the x, y and θ channels.
pub fn realize_filters<T: Real>(q: &QFilterParams<T>, p: &ObjectParams<T>, dt: T) -> Result<[ChannelFilters<T>; 3]> {
    q.validate()?;
    p.validate()?;
    if !(dt.is_finite() && dt > T::zero()) {
        return Err(Error::Config(format!("dt must be > 0, got {dt}")));
    }
    if !(q.omega_n * dt < T::lit(2.0)) {
        return Err(Error::Config(format!(
            "omega_n * dt = {} must stay below 2",
            q.omega_n * dt
        )));
    }
    let wn2 = q.omega_n * q.omega_n;
    let den = [T::one(), T::lit(2.0) * q.zeta * q.omega_n, wn2];
    let channel = |inertia: T| -> Result<ChannelFilters<T>> {
        let u_branch = SecondOrderSection::tustin([T::zero(), T::zero(), wn2], den, dt)?;
        let y_branch = SecondOrderSection::tustin([inertia * wn2, T::zero(), T::zero()], den, dt)?;
        if !(u_branch.is_stable() && y_branch.is_stable()) {
            return Err(Error::Config("discretized Q-filter is not stable".into()));
        }
        Ok(ChannelFilters { u_branch, y_branch })
    };
    Ok([channel(p.mass)?, channel(p.mass)?, channel(p.inertia)?])
}

/// Applied wrench and measured pose at one sample.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ObserverInput<T> {
    pub u: Wrench<T>,
    pub pos: Vec2<T>,
    pub theta: T,
}

impl<T: Real> ObserverInput<T> {
    pub fn from_sample(r: &RefSample<T>) -> Self {
        Self {
            u: r.applied_wrench(),
            pos: r.obj_pos,
            theta: r.obj_theta,
        }
    }

    fn channels(&self) -> [(T, T); 3] {
        [
            (self.u.force.x, self.pos.x),
            (self.u.force.y, self.pos.y),
            (self.u.torque, self.theta),
        ]
    }

    fn is_finite(&self) -> bool {
        self.u.is_finite() && self.pos.is_finite() && self.theta.is_finite()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceEstimate<T> {
    pub t: T,
    pub d_fx: T,
    pub d_fy: T,
    pub d_tau: T,
}

impl<T: Real> DisturbanceEstimate<T> {
    pub fn channels(&self) -> [T; 3] {
        [self.d_fx, self.d_fy, self.d_tau]
    }
}

/// Estimate together with the Q-filtered input `Q_A u` of the same sample.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ObserverOutput<T> {
    pub estimate: DisturbanceEstimate<T>,
    pub filtered_input: Wrench<T>,
}

/// How the filter state is initialised at the start of a segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResetMode {
    /// Steady state for the current inputs held constant.
    Hold,
    /// Steady state for inputs continuing the trend of the preceding samples.
    Track,
    /// All filter states zero.
    Zero,
}

#[derive(Clone, Debug)]
pub struct DisturbanceObserver<T> {
    channels: [ChannelFilters<T>; 3],
    dt: T,
}

impl<T: Real> DisturbanceObserver<T> {
    pub fn new(q: &QFilterParams<T>, p: &ObjectParams<T>, dt: T) -> Result<Self> {
        Ok(Self {
            channels: realize_filters(q, p, dt)?,
            dt,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn channel_filters(&self) -> &[ChannelFilters<T>; 3] {
        &self.channels
    }

    pub fn step(&mut self, t: T, input: &ObserverInput<T>) -> Result<ObserverOutput<T>> {
        if !input.is_finite() {
            return Err(Error::NonFiniteInput { t: t.to_f64_lossy() });
        }
        let mut d = [T::zero(); 3];
        let mut qu = [T::zero(); 3];
        for (i, (ch, (u, y))) in self.channels.iter_mut().zip(input.channels()).enumerate() {
            (d[i], qu[i]) = ch.step(u, y);
        }
        Ok(ObserverOutput {
            estimate: DisturbanceEstimate {
                t,
                d_fx: d[0],
                d_fy: d[1],
                d_tau: d[2],
            },
            filtered_input: Wrench::from_channels(qu),
        })
    }

    /// Puts both branches at their steady state for `input` held constant, so
    /// the next `step` with the same input produces no transient.
    pub fn reset(&mut self, input: &ObserverInput<T>) {
        for (ch, (u, y)) in self.channels.iter_mut().zip(input.channels()) {
            ch.reset_polynomial([u, T::zero(), T::zero()], [y, T::zero(), T::zero()]);
        }
    }

    /// Steady state for inputs that continue the trend of `recent` (oldest
    /// first, the last entry being the current sample): a parabola through
    /// the last three samples, a line through two, a constant for one. A body
    /// under constant acceleration sees no transient.
    pub fn reset_tracking(&mut self, recent: &[ObserverInput<T>]) {
        if recent.is_empty() {
            return;
        }
        let n = recent.len();
        let two = T::lit(2.0);
        for (c, ch) in self.channels.iter_mut().enumerate() {
            let at = |back: usize| recent[n - 1 - back].channels()[c];
            let fit = |pick: fn((T, T)) -> T| -> [T; 3] {
                let v0 = pick(at(0));
                match n {
                    1 => [v0, T::zero(), T::zero()],
                    2 => [v0, v0 - pick(at(1)), T::zero()],
                    _ => {
                        let (v1, v2) = (pick(at(1)), pick(at(2)));
                        let curv = (v0 - two * v1 + v2) / two;
                        [v0, v0 - v1 + curv, curv]
                    }
                }
            };
            ch.reset_polynomial(fit(|p| p.0), fit(|p| p.1));
        }
    }

    pub fn clear(&mut self) {
        for ch in &mut self.channels {
            ch.clear();
        }
    }

    /// Filters `refs[range]`, initialising the state per `mode` at the first
    /// sample of the range.
    pub fn run_segment(
        &mut self,
        refs: &[RefSample<T>],
        range: Range<usize>,
        mode: ResetMode,
    ) -> Result<Vec<ObserverOutput<T>>> {
        if range.is_empty() || range.end > refs.len() {
            return Err(Error::Argument(format!(
                "invalid observer segment {range:?} of {}",
                refs.len()
            )));
        }
        let first = ObserverInput::from_sample(&refs[range.start]);
        match mode {
            ResetMode::Zero => self.clear(),
            ResetMode::Hold => self.reset(&first),
            ResetMode::Track => {
                let recent: Vec<ObserverInput<T>> = refs[range.start.saturating_sub(2)..=range.start]
                    .iter()
                    .map(ObserverInput::from_sample)
                    .collect();
                self.reset_tracking(&recent)
            }
        }
        refs[range]
            .iter()
            .map(|r| self.step(r.t, &ObserverInput::from_sample(r)))
            .collect()
    }
}

/// Runs a fresh observer over a whole segment; the first sample uses
/// [`DisturbanceObserver::reset`].
pub fn run<T: Real>(
    refs: &[RefSample<T>],
    q: &QFilterParams<T>,
    p: &ObjectParams<T>,
    dt: T,
) -> Result<Vec<DisturbanceEstimate<T>>> {
    if refs.len() < 2 {
        return Err(Error::Argument(format!(
            "observer segment needs >= 2 samples, got {}",
            refs.len()
        )));
    }
    let mut obs = DisturbanceObserver::new(q, p, dt)?;
    Ok(obs
        .run_segment(refs, 0..refs.len(), ResetMode::Hold)?
        .into_iter()
        .map(|o| o.estimate)
        .collect())
}
