//! Canonical push-trajectory schema: CSV ingestion, validation, frame
//! transforms and plan subsampling.
//!
//! One row per sample, SI units, header
//! `t,tip_x_rbt,tip_y_rbt,tip_theta,obj_x,obj_y,obj_theta,fx_rbt,fy_rbt,tau`.
//! Tip quantities are in the robot frame; the object pose is already in the
//! reference frame. Forces are those applied *to* the object.

use std::fs::File;
use std::io::{Read, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dynamics::{moment_arm_torque, ObjectParams, Vec2, Wrench};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const CSV_HEADER: [&str; 10] = [
    "t",
    "tip_x_rbt",
    "tip_y_rbt",
    "tip_theta",
    "obj_x",
    "obj_y",
    "obj_theta",
    "fx_rbt",
    "fy_rbt",
    "tau",
];

/// Relative tolerance on the sample spacing.
pub const SPACING_TOLERANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSample<T> {
    pub t: T,
    pub tip_pos_rbt: Vec2<T>,
    pub tip_theta: T,
    pub obj_pos: Vec2<T>,
    pub obj_theta: T,
    pub tip_force_rbt: Vec2<T>,
    pub tip_torque: T,
}

impl<T: Real> RawSample<T> {
    fn values(&self) -> [T; 10] {
        [
            self.t,
            self.tip_pos_rbt.x,
            self.tip_pos_rbt.y,
            self.tip_theta,
            self.obj_pos.x,
            self.obj_pos.y,
            self.obj_theta,
            self.tip_force_rbt.x,
            self.tip_force_rbt.y,
            self.tip_torque,
        ]
    }

    fn from_values(v: [T; 10]) -> Self {
        Self {
            t: v[0],
            tip_pos_rbt: Vec2::new(v[1], v[2]),
            tip_theta: v[3],
            obj_pos: Vec2::new(v[4], v[5]),
            obj_theta: v[6],
            tip_force_rbt: Vec2::new(v[7], v[8]),
            tip_torque: v[9],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// A sample with every quantity expressed in the reference frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefSample<T> {
    pub t: T,
    pub tip_pos: Vec2<T>,
    pub obj_pos: Vec2<T>,
    pub obj_theta: T,
    pub tip_force: Vec2<T>,
    pub tip_torque: T,
}

impl<T: Real> RefSample<T> {
    /// Wrench applied to the object about its centre: `f_C` and
    /// `T_C + r_m × f_C`.
    pub fn applied_wrench(&self) -> Wrench<T> {
        Wrench::new(
            self.tip_force,
            self.tip_torque + moment_arm_torque(self.tip_pos, self.obj_pos, self.tip_force),
        )
    }
}

pub fn to_reference_frame<T: Real>(raw: &RawSample<T>) -> RefSample<T> {
    RefSample {
        t: raw.t,
        tip_pos: raw.tip_pos_rbt.rotated(raw.tip_theta),
        obj_pos: raw.obj_pos,
        obj_theta: raw.obj_theta,
        tip_force: raw.tip_force_rbt.rotated(raw.tip_theta),
        tip_torque: raw.tip_torque,
    }
}

/// Uniformly sampled push record with its object description.
#[derive(Clone, Debug)]
pub struct PushTrajectory<T> {
    samples: Vec<RawSample<T>>,
    sample_rate: T,
    pub params: ObjectParams<T>,
    pub case_id: String,
}

impl<T: Real> PushTrajectory<T> {
    /// Validates spacing and finiteness; timestamps are shifted to start at 0.
    pub fn new(mut samples: Vec<RawSample<T>>, params: ObjectParams<T>, case_id: impl Into<String>) -> Result<Self> {
        params.validate()?;
        if samples.len() < 2 {
            return Err(Error::Schema(format!("need at least 2 samples, got {}", samples.len())));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Schema(format!("sample {i} has non-finite values")));
        }
        let t0 = samples[0].t;
        for s in &mut samples {
            s.t -= t0;
        }
        for (i, pair) in samples.windows(2).enumerate() {
            if pair[1].t <= pair[0].t {
                return Err(Error::Schema(format!(
                    "time not strictly increasing at sample {}: {} after {}",
                    i + 1,
                    pair[1].t,
                    pair[0].t
                )));
            }
        }
        let n = samples.len();
        let dt = samples[n - 1].t / T::from_usize_lossy(n - 1);
        let tol = dt * T::lit(SPACING_TOLERANCE);
        for (i, pair) in samples.windows(2).enumerate() {
            let step = pair[1].t - pair[0].t;
            if (step - dt).abs() > tol {
                return Err(Error::Schema(format!(
                    "irregular sampling at sample {}: spacing {} vs nominal {}",
                    i + 1,
                    step,
                    dt
                )));
            }
        }
        Ok(Self {
            samples,
            sample_rate: dt.recip(),
            params,
            case_id: case_id.into(),
        })
    }

    pub fn samples(&self) -> &[RawSample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> T {
        self.sample_rate
    }

    pub fn dt(&self) -> T {
        self.sample_rate.recip()
    }

    pub fn duration(&self) -> T {
        self.samples[self.samples.len() - 1].t
    }

    pub fn times(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn reference_samples(&self) -> Vec<RefSample<T>> {
        self.samples.iter().map(to_reference_frame).collect()
    }
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads the canonical CSV from any reader. `origin` is only used in messages.
pub fn read_trajectory<T: Real, R: Read>(
    reader: R,
    origin: &Path,
    params: ObjectParams<T>,
    case_id: impl Into<String>,
) -> Result<PushTrajectory<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| parse_error(origin, 1, e.to_string()))?
        .clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(parse_error(
            origin,
            1,
            format!(
                "expected header `{}`, found `{}`",
                CSV_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(origin, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != CSV_HEADER.len() {
            return Err(parse_error(
                origin,
                line,
                format!("expected 10 fields, found {}", record.len()),
            ));
        }
        let mut values = [T::zero(); 10];
        for (slot, (field, name)) in values.iter_mut().zip(record.iter().zip(CSV_HEADER)) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(origin, line, format!("column `{name}`: cannot parse `{field}`")))?;
            if !v.is_finite() {
                return Err(parse_error(
                    origin,
                    line,
                    format!("column `{name}`: non-finite value `{field}`"),
                ));
            }
            *slot = T::lit(v);
        }
        samples.push(RawSample::from_values(values));
    }
    PushTrajectory::new(samples, params, case_id)
}

/// Loads a canonical CSV file. The case id is the file stem.
pub fn load_trajectory<T: Real>(path: impl AsRef<Path>, params: ObjectParams<T>) -> Result<PushTrajectory<T>> {
    let path = path.as_ref();
    let case_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file = File::open(path)?;
    read_trajectory(file, path, params, case_id)
}

pub fn write_trajectory<T: Real, W: Write>(traj: &PushTrajectory<T>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for s in traj.samples() {
        w.write_record(s.values().iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trajectory<T: Real>(traj: &PushTrajectory<T>, path: impl AsRef<Path>) -> Result<()> {
    write_trajectory(traj, File::create(path)?)
}

/// Reads `{"mass": …, "inertia": …, "width": …, "length": …}`.
pub fn load_params<T: Real + DeserializeOwned>(path: impl AsRef<Path>) -> Result<ObjectParams<T>> {
    let params: ObjectParams<T> = serde_json::from_reader(File::open(path)?)?;
    params.validate()?;
    Ok(params)
}

pub fn save_params<T: Real + Serialize>(params: &ObjectParams<T>, path: impl AsRef<Path>) -> Result<()> {
    serde_json::to_writer_pretty(File::create(path)?, params)?;
    Ok(())
}

/// Sample stride corresponding to `plan_rate`.
pub fn plan_stride<T: Real>(sample_rate: T, plan_rate: T) -> Result<T> {
    if !(plan_rate > T::zero()) || !plan_rate.is_finite() {
        return Err(Error::Argument(format!("plan rate must be > 0, got {plan_rate}")));
    }
    if plan_rate > sample_rate * T::lit(1.0 + SPACING_TOLERANCE) {
        return Err(Error::Argument(format!(
            "plan rate {plan_rate} Hz exceeds sample rate {sample_rate} Hz"
        )));
    }
    Ok((sample_rate / plan_rate).max(T::one()))
}

/// Indices retained when subsampling `range` with the given stride.
pub fn plan_indices<T: Real>(range: RangeInclusive<usize>, stride: T) -> Vec<usize> {
    let (start, end) = (*range.start(), *range.end());
    let mut out = Vec::new();
    let mut j = 0usize;
    loop {
        let offset = (T::from_usize_lossy(j) * stride)
            .round()
            .to_usize()
            .unwrap_or(usize::MAX);
        let idx = start.saturating_add(offset);
        if idx > end {
            break;
        }
        if out.last() != Some(&idx) {
            out.push(idx);
        }
        j += 1;
    }
    out
}

/// Zero-order-hold wrench sequence at `plan_rate`; torques include the
/// moment-arm term.
pub fn subsample_plan<T: Real>(traj: &PushTrajectory<T>, plan_rate: T) -> Result<Vec<(T, Wrench<T>)>> {
    let stride = plan_stride(traj.sample_rate(), plan_rate)?;
    let refs = traj.reference_samples();
    Ok(plan_indices(0..=refs.len() - 1, stride)
        .into_iter()
        .map(|i| (refs[i].t, refs[i].applied_wrench()))
        .collect())
}
