//! Recursive least-squares fit of the per-channel law `d̂ = β·u + ε`.
//!
//! The estimator is kept in information form: `P⁻¹` accumulates `HᵀH` of
//! every absorbed window, so the recursive solution equals the batch normal
//! equations over all samples seen so far, regardless of window order.
//! Samples may carry weights; unit weights give ordinary least squares.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Mat2, Wrench};
use crate::error::{Error, Result};
use crate::observer::DisturbanceEstimate;
use crate::scalar::Real;

/// Condition number of `HᵀH` above which a fit is considered degenerate.
pub const CONDITION_LIMIT: f64 = 1e10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel<T> {
    pub beta: T,
    pub epsilon: T,
    /// Information matrix `P⁻¹ = Σ HᵀH`.
    pub info: Mat2<T>,
    /// Covariance-shaped `P`; zero when degenerate.
    pub cov: Mat2<T>,
    pub n_samples: usize,
    /// True for the bias-only fallback `β = 0, ε = mean(d̂)`.
    pub degenerate: bool,
}

impl<T: Real> LinearModel<T> {
    /// `β = 0, ε = 0`: nominal dynamics.
    pub fn nominal() -> Self {
        Self::from_coefficients(T::zero(), T::zero())
    }

    pub fn from_coefficients(beta: T, epsilon: T) -> Self {
        Self {
            beta,
            epsilon,
            info: [[T::zero(); 2]; 2],
            cov: [[T::zero(); 2]; 2],
            n_samples: 0,
            degenerate: false,
        }
    }

    pub fn predict(&self, u: T) -> T {
        self.beta * u + self.epsilon
    }

    pub fn coefficients(&self) -> [T; 2] {
        [self.beta, self.epsilon]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentWindow<T> {
    pub u: Vec<T>,
    pub d: Vec<T>,
    /// Per-sample regression weights, all 1 unless set.
    pub w: Vec<T>,
    pub t_start: T,
    pub t_end: T,
}

impl<T: Real> IdentWindow<T> {
    pub fn new(u: Vec<T>, d: Vec<T>, t_start: T, t_end: T) -> Result<Self> {
        if u.len() != d.len() {
            return Err(Error::Argument(format!(
                "window lengths differ: {} vs {}",
                u.len(),
                d.len()
            )));
        }
        if u.len() < 2 {
            return Err(Error::Argument(format!("window needs >= 2 samples, got {}", u.len())));
        }
        if !u.iter().chain(d.iter()).all(|v| v.is_finite()) {
            return Err(Error::Argument("window contains non-finite values".into()));
        }
        let w = vec![T::one(); u.len()];
        Ok(Self {
            u,
            d,
            w,
            t_start,
            t_end,
        })
    }

    pub fn with_weights(mut self, w: Vec<T>) -> Result<Self> {
        if w.len() != self.u.len() {
            return Err(Error::Argument(format!(
                "{} weights for {} samples",
                w.len(),
                self.u.len()
            )));
        }
        if !w.iter().all(|v| v.is_finite() && *v >= T::zero()) {
            return Err(Error::Argument("weights must be finite and >= 0".into()));
        }
        self.w = w;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `(HᵀWH, HᵀWd)` with `H = [u 1]`.
    fn normal_terms(&self) -> (Mat2<T>, [T; 2]) {
        let mut suu = T::zero();
        let mut su = T::zero();
        let mut sw = T::zero();
        let mut sud = T::zero();
        let mut sd = T::zero();
        for ((&u, &d), &w) in self.u.iter().zip(&self.d).zip(&self.w) {
            suu += w * u * u;
            su += w * u;
            sw += w;
            sud += w * u * d;
            sd += w * d;
        }
        ([[suu, su], [su, sw]], [sud, sd])
    }

    fn degenerate_error(&self, condition: T) -> Error {
        Error::DegenerateWindow {
            t_start: self.t_start.to_f64_lossy(),
            t_end: self.t_end.to_f64_lossy(),
            condition: condition.to_f64_lossy(),
        }
    }
}

/// Ratio of the eigenvalues of a symmetric 2×2 matrix (∞ if singular).
pub fn condition_number<T: Real>(m: &Mat2<T>) -> T {
    let half_tr = (m[0][0] + m[1][1]) / T::lit(2.0);
    let half_diff = (m[0][0] - m[1][1]) / T::lit(2.0);
    let r = half_diff.hypot(m[0][1]);
    let (hi, lo) = (half_tr + r, half_tr - r);
    if lo <= T::zero() {
        T::infinity()
    } else {
        hi / lo
    }
}

fn inverse<T: Real>(m: &Mat2<T>) -> Option<Mat2<T>> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(det > T::zero()) || !(m[0][0] > T::zero()) {
        return None;
    }
    let off = (m[0][1] + m[1][0]) / T::lit(2.0);
    Some([[m[1][1] / det, -off / det], [-off / det, m[0][0] / det]])
}

fn mat_vec<T: Real>(m: &Mat2<T>, v: [T; 2]) -> [T; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Batch least squares on the first window.
pub fn rls_initialize<T: Real>(w: &IdentWindow<T>) -> Result<LinearModel<T>> {
    let (info, htd) = w.normal_terms();
    let condition = condition_number(&info);
    if !(condition <= T::lit(CONDITION_LIMIT)) {
        return Err(w.degenerate_error(condition));
    }
    let cov = inverse(&info).ok_or_else(|| w.degenerate_error(condition))?;
    let [beta, epsilon] = mat_vec(&cov, htd);
    Ok(LinearModel {
        beta,
        epsilon,
        info,
        cov,
        n_samples: w.len(),
        degenerate: false,
    })
}

/// Absorbs a new window: `P⁻¹ += HᵀH`, `x += P Hᵀ (d − H x)`.
pub fn rls_update<T: Real>(model: &LinearModel<T>, w: &IdentWindow<T>) -> Result<LinearModel<T>> {
    let (gram, _) = w.normal_terms();
    let mut info = model.info;
    for r in 0..2 {
        for c in 0..2 {
            info[r][c] += gram[r][c];
        }
    }
    let sym = (info[0][1] + info[1][0]) / T::lit(2.0);
    info[0][1] = sym;
    info[1][0] = sym;
    let cov = inverse(&info).ok_or(Error::Conditioning)?;

    let x = model.coefficients();
    let mut ht_innov = [T::zero(); 2];
    for ((&u, &d), &wt) in w.u.iter().zip(&w.d).zip(&w.w) {
        let innov = wt * (d - (x[0] * u + x[1]));
        ht_innov[0] += u * innov;
        ht_innov[1] += innov;
    }
    let dx = mat_vec(&cov, ht_innov);
    Ok(LinearModel {
        beta: x[0] + dx[0],
        epsilon: x[1] + dx[1],
        info,
        cov,
        n_samples: model.n_samples + w.len(),
        degenerate: false,
    })
}

/// Sequential identifier for one channel across any number of windows.
///
/// Windows are buffered until their union is well-conditioned; from then
/// on each new window goes through [`rls_update`].
#[derive(Clone, Debug, Default)]
pub struct ChannelIdentifier<T> {
    model: Option<LinearModel<T>>,
    pending_u: Vec<T>,
    pending_d: Vec<T>,
    pending_w: Vec<T>,
    pending_start: Option<T>,
    sum_wd: T,
    sum_w: T,
    count: usize,
}

impl<T: Real> ChannelIdentifier<T> {
    pub fn new() -> Self {
        Self {
            model: None,
            pending_u: Vec::new(),
            pending_d: Vec::new(),
            pending_w: Vec::new(),
            pending_start: None,
            sum_wd: T::zero(),
            sum_w: T::zero(),
            count: 0,
        }
    }

    pub fn absorb(&mut self, w: &IdentWindow<T>) -> Result<()> {
        for (&d, &wt) in w.d.iter().zip(&w.w) {
            self.sum_wd += wt * d;
            self.sum_w += wt;
        }
        self.count += w.len();
        if let Some(model) = &self.model {
            self.model = Some(rls_update(model, w)?);
            return Ok(());
        }
        self.pending_u.extend_from_slice(&w.u);
        self.pending_d.extend_from_slice(&w.d);
        self.pending_w.extend_from_slice(&w.w);
        let start = *self.pending_start.get_or_insert(w.t_start);
        let union = IdentWindow::new(self.pending_u.clone(), self.pending_d.clone(), start, w.t_end)?
            .with_weights(self.pending_w.clone())?;
        match rls_initialize(&union) {
            Ok(model) => {
                self.model = Some(model);
                self.pending_u.clear();
                self.pending_d.clear();
                self.pending_w.clear();
                self.pending_start = None;
                Ok(())
            }
            Err(Error::DegenerateWindow { .. }) => Ok(()),
            Err(e) => Err(e),
        }
    }

    pub fn is_identified(&self) -> bool {
        self.model.is_some()
    }

    pub fn samples_absorbed(&self) -> usize {
        self.count
    }

    /// The identified model, or the bias-only fallback when the data never
    /// became well-conditioned (`None` if nothing was absorbed at all).
    pub fn model(&self) -> Option<LinearModel<T>> {
        if let Some(m) = &self.model {
            return Some(m.clone());
        }
        if self.count == 0 {
            return None;
        }
        let (info, _) = IdentWindow {
            u: self.pending_u.clone(),
            d: self.pending_d.clone(),
            w: self.pending_w.clone(),
            t_start: T::zero(),
            t_end: T::zero(),
        }
        .normal_terms();
        let epsilon = if self.sum_w > T::zero() {
            self.sum_wd / self.sum_w
        } else {
            T::zero()
        };
        Some(LinearModel {
            beta: T::zero(),
            epsilon,
            info,
            cov: [[T::zero(); 2]; 2],
            n_samples: self.count,
            degenerate: true,
        })
    }
}

/// Models for the fx, fy and torque channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelModels<T> {
    pub fx: LinearModel<T>,
    pub fy: LinearModel<T>,
    pub tau: LinearModel<T>,
}

impl<T: Real> ChannelModels<T> {
    pub fn nominal() -> Self {
        Self {
            fx: LinearModel::nominal(),
            fy: LinearModel::nominal(),
            tau: LinearModel::nominal(),
        }
    }

    pub fn as_array(&self) -> [&LinearModel<T>; 3] {
        [&self.fx, &self.fy, &self.tau]
    }

    /// `diag(β)·w + ε` per channel.
    pub fn disturbance(&self, w: &Wrench<T>) -> Wrench<T> {
        let u = w.channels();
        Wrench::from_channels([self.fx.predict(u[0]), self.fy.predict(u[1]), self.tau.predict(u[2])])
    }
}

/// Three independent identifiers fed window by window.
#[derive(Clone, Debug, Default)]
pub struct Identifier<T> {
    channels: [ChannelIdentifier<T>; 3],
}

impl<T: Real> Identifier<T> {
    pub fn new() -> Self {
        Self {
            channels: [
                ChannelIdentifier::new(),
                ChannelIdentifier::new(),
                ChannelIdentifier::new(),
            ],
        }
    }

    /// Splits the aligned series into windows of `window` samples (a short
    /// tail is merged into the preceding window) and absorbs them.
    pub fn absorb_series(&mut self, u: &[Wrench<T>], d: &[DisturbanceEstimate<T>], window: usize) -> Result<()> {
        self.absorb_weighted(u, d, &vec![T::one(); u.len()], window)
    }

    /// As [`Self::absorb_series`] with one regression weight per sample.
    pub fn absorb_weighted(
        &mut self,
        u: &[Wrench<T>],
        d: &[DisturbanceEstimate<T>],
        weights: &[T],
        window: usize,
    ) -> Result<()> {
        if u.len() != d.len() || u.len() != weights.len() {
            return Err(Error::Argument(format!(
                "series lengths differ: {} inputs, {} estimates, {} weights",
                u.len(),
                d.len(),
                weights.len()
            )));
        }
        if window < 2 {
            return Err(Error::Argument(format!("window must be >= 2 samples, got {window}")));
        }
        for range in window_ranges(u.len(), window) {
            let (t0, t1) = (d[range.start].t, d[range.end - 1].t);
            for (c, ident) in self.channels.iter_mut().enumerate() {
                let uc = u[range.clone()].iter().map(|w| w.channels()[c]).collect();
                let dc = d[range.clone()].iter().map(|e| e.channels()[c]).collect();
                let wc = weights[range.clone()].to_vec();
                ident.absorb(&IdentWindow::new(uc, dc, t0, t1)?.with_weights(wc)?)?;
            }
        }
        Ok(())
    }

    pub fn channel(&self, i: usize) -> &ChannelIdentifier<T> {
        &self.channels[i]
    }

    /// `None` until at least one sample was absorbed.
    pub fn models(&self) -> Option<ChannelModels<T>> {
        Some(ChannelModels {
            fx: self.channels[0].model()?,
            fy: self.channels[1].model()?,
            tau: self.channels[2].model()?,
        })
    }
}

fn window_ranges(len: usize, window: usize) -> Vec<std::ops::Range<usize>> {
    let mut out: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    while start < len {
        let end = (start + window).min(len);
        if end - start < 2 {
            if let Some(last) = out.last_mut() {
                last.end = end;
            }
            break;
        }
        out.push(start..end);
        start = end;
    }
    out
}

/// Fits one model per channel, feeding consecutive windows through
/// initialise/update. Channels without enough excitation fall back to
/// `β = 0, ε = mean(d̂)` and are flagged `degenerate`.
pub fn identify_channels<T: Real>(
    u: &[Wrench<T>],
    d: &[DisturbanceEstimate<T>],
    window: usize,
) -> Result<ChannelModels<T>> {
    let mut ident = Identifier::new();
    ident.absorb_series(u, d, window)?;
    ident
        .models()
        .ok_or_else(|| Error::Argument("identification needs at least 2 samples".into()))
}
