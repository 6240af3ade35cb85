//! Prediction error statistics.

use serde::Serialize;

use crate::data::PushTrajectory;
use crate::error::{Error, Result};
use crate::predict::{Algorithm, PredictedTrack};
use crate::scalar::Real;

/// Mean and population standard deviation of the absolute error per axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorStats<T> {
    pub mean_abs_err_x: T,
    pub mean_abs_err_y: T,
    pub mean_abs_err_theta: T,
    pub std_err_x: T,
    pub std_err_y: T,
    pub std_err_theta: T,
}

impl<T: Real> ErrorStats<T> {
    pub fn from_errors(errors: &[[T; 3]]) -> Self {
        if errors.is_empty() {
            return Self::default();
        }
        let n = T::from_usize_lossy(errors.len());
        let mut mean = [T::zero(); 3];
        for e in errors {
            for c in 0..3 {
                mean[c] += e[c].abs();
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = [T::zero(); 3];
        for e in errors {
            for c in 0..3 {
                let d = e[c].abs() - mean[c];
                var[c] += d * d;
            }
        }
        let std = var.map(|v| (v / n).sqrt());
        Self {
            mean_abs_err_x: mean[0],
            mean_abs_err_y: mean[1],
            mean_abs_err_theta: mean[2],
            std_err_x: std[0],
            std_err_y: std[1],
            std_err_theta: std[2],
        }
    }

    pub fn means(&self) -> [T; 3] {
        [self.mean_abs_err_x, self.mean_abs_err_y, self.mean_abs_err_theta]
    }
}

/// Signed error (`predicted − measured`) at one prediction sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorSample<T> {
    pub t: T,
    /// Time since the start of the prediction phase.
    pub elapsed: T,
    pub predicted: [T; 3],
    pub measured: [T; 3],
    pub error: [T; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseReport<T> {
    pub case_id: String,
    pub phase_index: usize,
    pub algorithm: Algorithm,
    pub horizon_length: T,
    pub samples: usize,
    #[serde(flatten)]
    pub stats: ErrorStats<T>,
    #[serde(skip)]
    pub series: Vec<ErrorSample<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictionReport<T> {
    pub phases: Vec<PhaseReport<T>>,
}

impl<T: Real> PredictionReport<T> {
    pub fn phase(&self, phase_index: usize, algorithm: Algorithm) -> Option<&PhaseReport<T>> {
        self.phases
            .iter()
            .find(|p| p.phase_index == phase_index && p.algorithm == algorithm)
    }

    pub fn phase_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = self.phases.iter().map(|p| p.phase_index).collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    /// Statistics pooled over all samples of all phases of `algorithm`.
    pub fn aggregate(&self, algorithm: Algorithm) -> Option<ErrorStats<T>> {
        let errors: Vec<[T; 3]> = self
            .phases
            .iter()
            .filter(|p| p.algorithm == algorithm)
            .flat_map(|p| p.series.iter().map(|s| s.error))
            .collect();
        (!errors.is_empty()).then(|| ErrorStats::from_errors(&errors))
    }

    /// Per-phase means of `algorithm`, averaged over phases.
    pub fn mean_of_phase_means(&self, algorithm: Algorithm) -> Option<[T; 3]> {
        let means: Vec<[T; 3]> = self
            .phases
            .iter()
            .filter(|p| p.algorithm == algorithm)
            .map(|p| p.stats.means())
            .collect();
        if means.is_empty() {
            return None;
        }
        let n = T::from_usize_lossy(means.len());
        let mut out = [T::zero(); 3];
        for m in &means {
            for c in 0..3 {
                out[c] += m[c] / n;
            }
        }
        Some(out)
    }
}

/// Pointwise errors of `track` against the measurement sharing its grid.
pub fn pointwise_errors<T: Real>(
    track: &PredictedTrack<T>,
    measured: &PushTrajectory<T>,
) -> Result<Vec<ErrorSample<T>>> {
    if track.t.len() != track.states.len() || track.t.is_empty() {
        return Err(Error::Alignment(
            "track times and states differ in length or are empty".into(),
        ));
    }
    let samples = measured.samples();
    let tol = measured.dt() * T::lit(1e-6);
    let t0 = track.t[0];
    let start = samples.partition_point(|s| s.t < t0 - tol);
    if start + track.t.len() > samples.len() {
        return Err(Error::Alignment(format!(
            "track starting at t={t0} runs past the measurement"
        )));
    }
    track
        .t
        .iter()
        .zip(&track.states)
        .zip(&samples[start..])
        .map(|((&t, s), m)| {
            if (t - m.t).abs() > tol {
                return Err(Error::Alignment(format!(
                    "prediction time {t} has no measurement (nearest {})",
                    m.t
                )));
            }
            let predicted = [s.pos.x, s.pos.y, s.theta];
            let meas = [m.obj_pos.x, m.obj_pos.y, m.obj_theta];
            Ok(ErrorSample {
                t,
                elapsed: t - t0,
                predicted,
                measured: meas,
                error: [predicted[0] - meas[0], predicted[1] - meas[1], predicted[2] - meas[2]],
            })
        })
        .collect()
}

pub fn summarize<T: Real>(tracks: &[PredictedTrack<T>], measured: &PushTrajectory<T>) -> Result<PredictionReport<T>> {
    let phases = tracks
        .iter()
        .map(|track| {
            let series = pointwise_errors(track, measured)?;
            let errors: Vec<[T; 3]> = series.iter().map(|s| s.error).collect();
            Ok(PhaseReport {
                case_id: measured.case_id.clone(),
                phase_index: track.phase_index,
                algorithm: track.algorithm,
                horizon_length: series.last().map(|s| s.elapsed).unwrap_or_else(T::zero),
                samples: series.len(),
                stats: ErrorStats::from_errors(&errors),
                series,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictionReport { phases })
}

/// Baseline over proposed mean error for one phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ImprovementRatio<T> {
    pub phase_index: usize,
    /// `+∞` when the proposed error is exactly zero (serialized as null).
    pub x: T,
    pub y: T,
    pub theta: T,
}

fn ratio<T: Real>(simple: T, proposed: T) -> T {
    if proposed == T::zero() {
        T::infinity()
    } else {
        simple / proposed
    }
}

pub fn improvement_ratio<T: Real>(report: &PredictionReport<T>) -> Result<Vec<ImprovementRatio<T>>> {
    report
        .phase_indices()
        .into_iter()
        .map(|idx| {
            let missing = |a: Algorithm| Error::Argument(format!("phase {idx} has no {} prediction", a.name()));
            let p = report
                .phase(idx, Algorithm::Proposed)
                .ok_or_else(|| missing(Algorithm::Proposed))?;
            let s = report
                .phase(idx, Algorithm::Simple)
                .ok_or_else(|| missing(Algorithm::Simple))?;
            Ok(ImprovementRatio {
                phase_index: idx,
                x: ratio(s.stats.mean_abs_err_x, p.stats.mean_abs_err_x),
                y: ratio(s.stats.mean_abs_err_y, p.stats.mean_abs_err_y),
                theta: ratio(s.stats.mean_abs_err_theta, p.stats.mean_abs_err_theta),
            })
        })
        .collect()
}
