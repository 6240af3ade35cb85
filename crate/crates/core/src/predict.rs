//! Identification/prediction scheduling and pose prediction.
//!
//! The record is split into equal intervals that alternate between
//! identification (observer + RLS) and prediction. Prediction integrates the
//! planned wrench corrected by the identified law,
//! `m r̈ = f + diag(β_f) f + ε_f`, `I θ̈ = T + β_T T + ε_T`,
//! starting at rest from the last measured pose. A Coulomb-friction baseline
//! is run alongside for comparison.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::data::{plan_indices, plan_stride, PushTrajectory, RefSample};
use crate::dynamics::{integrate_step, ObjectParams, PlanarState, Vec2, Wrench};
use crate::error::{Error, Result};
use crate::identify::{ChannelModels, Identifier};
use crate::metrics::{summarize, PredictionReport};
use crate::observer::{DisturbanceEstimate, DisturbanceObserver, QFilterParams, ResetMode};
use crate::scalar::{Real, GRAVITY};

/// Minimum number of samples for a pipeline run.
pub const MIN_PIPELINE_SAMPLES: usize = 100;

/// Speed below which the baseline treats the object as resting [m/s].
const REST_SPEED: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKind {
    Identify,
    Predict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSchedule<T> {
    /// `phases + 1` boundary times.
    pub boundaries: Vec<T>,
    /// Sample index of every boundary.
    pub indices: Vec<usize>,
    pub kinds: Vec<PhaseKind>,
}

impl<T: Real> PhaseSchedule<T> {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    /// Inclusive sample range of phase `i`; consecutive phases share their
    /// boundary sample.
    pub fn sample_range(&self, i: usize) -> std::ops::RangeInclusive<usize> {
        self.indices[i]..=self.indices[i + 1]
    }
}

/// Splits the record into `phases` equal intervals (to the nearest sample),
/// alternating identification and prediction, starting with identification.
pub fn build_schedule<T: Real>(traj: &PushTrajectory<T>, phases: usize) -> Result<PhaseSchedule<T>> {
    if phases < 2 {
        return Err(Error::Schedule(format!("need at least 2 phases, got {phases}")));
    }
    let n = traj.len();
    if n < phases.max(4) || n - 1 < phases {
        return Err(Error::Schedule(format!(
            "{n} samples cannot be split into {phases} phases"
        )));
    }
    let last = n - 1;
    let indices: Vec<usize> = (0..=phases).map(|i| (i * last + phases / 2) / phases).collect();
    let times = traj.times();
    Ok(PhaseSchedule {
        boundaries: indices.iter().map(|&i| times[i]).collect(),
        indices,
        kinds: (0..phases)
            .map(|i| {
                if i % 2 == 0 {
                    PhaseKind::Identify
                } else {
                    PhaseKind::Predict
                }
            })
            .collect(),
    })
}

/// Planned wrench samples with zero-order hold between them.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcePlan<T> {
    samples: Vec<(T, Wrench<T>)>,
}

impl<T: Real> ForcePlan<T> {
    pub fn new(samples: Vec<(T, Wrench<T>)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Argument("force plan is empty".into()));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Argument("force plan timestamps must increase".into()));
        }
        Ok(Self { samples })
    }

    /// Plan built from measured samples `indices`; torques include the
    /// moment arm at each plan instant.
    pub fn from_samples(refs: &[RefSample<T>], indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| (refs[i].t, refs[i].applied_wrench())).collect())
    }

    pub fn samples(&self) -> &[(T, Wrench<T>)] {
        &self.samples
    }

    /// Held value at `t`: the last sample at or before `t`.
    pub fn wrench_at(&self, t: T) -> Wrench<T> {
        let tol = T::epsilon() * T::lit(1e3) * (T::one() + t.abs());
        let idx = self.samples.partition_point(|(ts, _)| *ts <= t + tol);
        self.samples[idx.saturating_sub(1)].1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Proposed,
    Simple,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::Simple => "simple",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictedTrack<T> {
    pub t: Vec<T>,
    pub states: Vec<PlanarState<T>>,
    pub phase_index: usize,
    pub algorithm: Algorithm,
}

fn check_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Argument("prediction grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("prediction grid must increase".into()));
    }
    Ok(())
}

/// Integrates the identified law on `grid` (the first entry is the start
/// time of `start`).
pub fn predict_pose<T: Real>(
    start: PlanarState<T>,
    grid: &[T],
    plan: &ForcePlan<T>,
    models: &ChannelModels<T>,
    p: &ObjectParams<T>,
) -> Result<PredictedTrack<T>> {
    check_grid(grid)?;
    let mut states = Vec::with_capacity(grid.len());
    let mut s = start;
    states.push(s);
    for w in grid.windows(2) {
        s = integrate_step(
            &s,
            |t| {
                let planned = plan.wrench_at(t);
                planned + models.disturbance(&planned)
            },
            p,
            w[0],
            w[1] - w[0],
        )?;
        states.push(s);
    }
    Ok(PredictedTrack {
        t: grid.to_vec(),
        states,
        phase_index: 0,
        algorithm: Algorithm::Proposed,
    })
}

/// Baseline with Coulomb friction `μ m̄ g` opposing the velocity and no
/// rotational correction. A resting object sticks while the planned force
/// stays below the friction limit, and a sliding one stops when friction
/// reverses its velocity.
pub fn predict_simple<T: Real>(
    start: PlanarState<T>,
    grid: &[T],
    plan: &ForcePlan<T>,
    p: &ObjectParams<T>,
    mu: T,
) -> Result<PredictedTrack<T>> {
    check_grid(grid)?;
    if !(mu >= T::zero()) {
        return Err(Error::Argument(format!("friction coefficient must be >= 0, got {mu}")));
    }
    let limit = mu * p.mass * T::lit(GRAVITY);
    let rest = T::lit(REST_SPEED);
    let mut states = Vec::with_capacity(grid.len());
    let mut s = start;
    states.push(s);
    for w in grid.windows(2) {
        let planned = plan.wrench_at(w[0]);
        let f = planned.force;
        let speed = s.vel.norm();
        // friction direction is frozen over the step
        let net = if speed > rest {
            f - s.vel * (limit / speed)
        } else if f.norm() > limit {
            f - f * (limit / f.norm())
        } else {
            Vec2::zero()
        };
        let mut next = integrate_step(&s, |_| Wrench::new(net, planned.torque), p, w[0], w[1] - w[0])?;
        if speed > rest && f.norm() <= limit && next.vel.dot(s.vel) <= T::zero() {
            next.vel = Vec2::zero();
        }
        s = next;
        states.push(s);
    }
    Ok(PredictedTrack {
        t: grid.to_vec(),
        states,
        phase_index: 0,
        algorithm: Algorithm::Simple,
    })
}

/// Input paired with `d̂` in the regression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regressor {
    /// The observer's own `Q_A u`, time-aligned with `d̂`.
    Filtered,
    /// The measured applied wrench.
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig<T> {
    pub q: QFilterParams<T>,
    /// [Hz]
    pub plan_rate: T,
    pub phases: usize,
    pub mu: T,
    /// RLS sub-window length [samples].
    pub window: usize,
    /// Observer settling time excluded after each reset [s].
    pub settle_time: T,
    /// Raised-cosine ramp on the regression weights at both ends of each
    /// identification segment (after the settling trim) [s]; 0 disables it.
    pub taper_time: T,
    pub reset_mode: ResetMode,
    pub regressor: Regressor,
}

impl<T: Real> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            q: QFilterParams::default(),
            plan_rate: T::lit(10.0),
            phases: 4,
            mu: T::lit(0.14),
            window: 125,
            settle_time: T::lit(0.1),
            taper_time: T::lit(0.1),
            reset_mode: ResetMode::Track,
            regressor: Regressor::Filtered,
        }
    }
}

/// Models in force when a prediction phase started.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseModels<T> {
    pub phase_index: usize,
    pub models: ChannelModels<T>,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput<T> {
    pub schedule: PhaseSchedule<T>,
    pub tracks: Vec<PredictedTrack<T>>,
    pub models: Vec<PhaseModels<T>>,
    /// Observer output of every identification phase (trimmed samples
    /// included), with the regressor that went with it.
    pub estimates: Vec<(Wrench<T>, DisturbanceEstimate<T>)>,
    pub report: PredictionReport<T>,
}

impl<T: Real> PipelineOutput<T> {
    pub fn final_models(&self) -> Option<&ChannelModels<T>> {
        self.models.last().map(|m| &m.models)
    }
}

/// Weights rising from 0 to 1 over `taper` samples at both ends.
///
/// Near a segment edge the observer output is dominated by the filtered
/// second difference of the pose noise, which does not average out over
/// the segment; down-weighting the edges removes most of that bias.
pub fn edge_taper<T: Real>(n: usize, taper: usize) -> Vec<T> {
    (0..n)
        .map(|k| {
            let edge = k.min(n - 1 - k);
            if edge >= taper {
                T::one()
            } else {
                let s = T::from_usize_lossy(edge) / T::from_usize_lossy(taper);
                (T::one() - (T::PI() * s).cos()) / T::lit(2.0)
            }
        })
        .collect()
}

/// Runs the observer over `range` and feeds its settled output to
/// `identifier`. Returns every (regressor, estimate) pair of the segment,
/// trimmed samples included.
pub fn identify_segment<T: Real>(
    observer: &mut DisturbanceObserver<T>,
    identifier: &mut Identifier<T>,
    refs: &[RefSample<T>],
    range: RangeInclusive<usize>,
    config: &PipelineConfig<T>,
) -> Result<Vec<(Wrench<T>, DisturbanceEstimate<T>)>> {
    if !(config.settle_time >= T::zero() && config.taper_time >= T::zero()) {
        return Err(Error::Argument(format!(
            "settle and taper times must be >= 0, got {} and {}",
            config.settle_time, config.taper_time
        )));
    }
    let (first, last) = (*range.start(), *range.end());
    if last >= refs.len() || first > last {
        return Err(Error::Argument(format!(
            "segment {first}..={last} outside {} samples",
            refs.len()
        )));
    }
    let dt = observer.dt();
    let trim = (config.settle_time / dt).round().to_usize().unwrap_or(0);
    let taper = (config.taper_time / dt).round().to_usize().unwrap_or(0);
    let out = observer.run_segment(refs, first..last + 1, config.reset_mode)?;
    let pairs: Vec<(Wrench<T>, DisturbanceEstimate<T>)> = out
        .iter()
        .zip(&refs[first..=last])
        .map(|(o, r)| {
            let u = match config.regressor {
                Regressor::Filtered => o.filtered_input,
                Regressor::Raw => r.applied_wrench(),
            };
            (u, o.estimate)
        })
        .collect();
    if pairs.len() > trim + 1 {
        let (u, d): (Vec<_>, Vec<_>) = pairs[trim..].iter().copied().unzip();
        identifier.absorb_weighted(&u, &d, &edge_taper(u.len(), taper), config.window)?;
    }
    Ok(pairs)
}

/// Runs the alternating identification/prediction procedure over `traj`.
pub fn run_pipeline<T: Real>(traj: &PushTrajectory<T>, config: &PipelineConfig<T>) -> Result<PipelineOutput<T>> {
    if traj.len() < MIN_PIPELINE_SAMPLES {
        return Err(Error::Schema(format!(
            "pipeline needs at least {MIN_PIPELINE_SAMPLES} samples, got {}",
            traj.len()
        )));
    }
    let schedule = build_schedule(traj, config.phases)?;
    let refs = traj.reference_samples();
    let times = traj.times();
    let dt = traj.dt();
    let stride = plan_stride(traj.sample_rate(), config.plan_rate)?;
    let params = &traj.params;

    let mut observer = DisturbanceObserver::new(&config.q, params, dt)?;
    let mut identifier = Identifier::new();
    let mut tracks = Vec::new();
    let mut models = Vec::new();
    let mut estimates = Vec::new();

    for (phase, kind) in schedule.kinds.iter().enumerate() {
        let range = schedule.sample_range(phase);
        let (first, last) = (*range.start(), *range.end());
        match kind {
            PhaseKind::Identify => {
                estimates.extend(identify_segment(&mut observer, &mut identifier, &refs, range, config)?);
            }
            PhaseKind::Predict => {
                let phase_models = identifier.models().unwrap_or_else(ChannelModels::nominal);
                let start = PlanarState::at_rest(refs[first].obj_pos, refs[first].obj_theta);
                let grid = &times[first..=last];
                let plan = ForcePlan::from_samples(&refs, &plan_indices(first..=last, stride))?;

                let mut proposed = predict_pose(start, grid, &plan, &phase_models, params)?;
                proposed.phase_index = phase;
                let mut simple = predict_simple(start, grid, &plan, params, config.mu)?;
                simple.phase_index = phase;
                tracks.push(proposed);
                tracks.push(simple);
                models.push(PhaseModels {
                    phase_index: phase,
                    models: phase_models,
                });
            }
        }
    }

    let report = summarize(&tracks, traj)?;
    Ok(PipelineOutput {
        schedule,
        tracks,
        models,
        estimates,
        report,
    })
}
