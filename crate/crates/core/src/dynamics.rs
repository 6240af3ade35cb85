//! Planar rigid-body types, Newton-Euler equations of motion and a
//! fixed-step RK4 integrator.
//!
//! Angles are kept unwrapped everywhere; wrapping is a reporting concern.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product `self × other`.
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Component-wise product.
    pub fn scale(self, other: Self) -> Self {
        Self::new(self.x * other.x, self.y * other.y)
    }

    pub fn rotated(self, alpha: T) -> Self {
        apply(&rotation_matrix(alpha), self)
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Real> AddAssign for Vec2<T> {
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl<T: Real> SubAssign for Vec2<T> {
    fn sub_assign(&mut self, rhs: Self) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

impl<T: Real> Div<T> for Vec2<T> {
    type Output = Self;
    fn div(self, rhs: T) -> Self {
        Self::new(self.x / rhs, self.y / rhs)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Nominal inertia properties and footprint of the pushed object.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectParams<T> {
    /// Nominal mass [kg].
    pub mass: T,
    /// Nominal moment of inertia about the vertical axis [kg·m²].
    pub inertia: T,
    /// [m]
    pub width: T,
    /// [m]
    pub length: T,
}

impl<T: Real> ObjectParams<T> {
    pub fn new(mass: T, inertia: T, width: T, length: T) -> Result<Self> {
        let params = Self {
            mass,
            inertia,
            width,
            length,
        };
        params.validate()?;
        Ok(params)
    }

    /// The rectangular `rec2` block used in the MCube push experiments.
    pub fn rec2() -> Self {
        Self {
            mass: T::lit(1.045),
            inertia: T::lit(0.0018),
            width: T::lit(0.090),
            length: T::lit(0.1125),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("inertia", self.inertia),
            ("width", self.width),
            ("length", self.length),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > T::zero()) {
                return Err(Error::Params(format!("{name} must be finite and > 0, got {value}")));
            }
        }
        Ok(())
    }

    /// Same geometry with the mass and inertia scaled by `factor`.
    pub fn scaled_inertia(&self, factor: T) -> Self {
        Self {
            mass: self.mass * factor,
            inertia: self.inertia * factor,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanarState<T> {
    pub pos: Vec2<T>,
    pub theta: T,
    pub vel: Vec2<T>,
    pub omega: T,
}

impl<T: Real> PlanarState<T> {
    /// Pose with zero velocities.
    pub fn at_rest(pos: Vec2<T>, theta: T) -> Self {
        Self {
            pos,
            theta,
            vel: Vec2::zero(),
            omega: T::zero(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.theta.is_finite() && self.vel.is_finite() && self.omega.is_finite()
    }
}

/// Planar force and torque about the object centre.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Wrench<T> {
    pub force: Vec2<T>,
    pub torque: T,
}

impl<T: Real> Wrench<T> {
    pub const fn new(force: Vec2<T>, torque: T) -> Self {
        Self { force, torque }
    }

    pub fn zero() -> Self {
        Self::new(Vec2::zero(), T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.force.is_finite() && self.torque.is_finite()
    }

    /// Channel view `[fx, fy, torque]`.
    pub fn channels(&self) -> [T; 3] {
        [self.force.x, self.force.y, self.torque]
    }

    pub fn from_channels(c: [T; 3]) -> Self {
        Self::new(Vec2::new(c[0], c[1]), c[2])
    }
}

impl<T: Real> Add for Wrench<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.force + rhs.force, self.torque + rhs.torque)
    }
}

impl<T: Real> Mul<T> for Wrench<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        Self::new(self.force * rhs, self.torque * rhs)
    }
}

pub type Mat2<T> = [[T; 2]; 2];

/// Direction cosine matrix `[[cos α, −sin α], [sin α, cos α]]`.
pub fn rotation_matrix<T: Real>(alpha: T) -> Mat2<T> {
    let (s, c) = alpha.sin_cos();
    [[c, -s], [s, c]]
}

pub fn apply<T: Real>(m: &Mat2<T>, v: Vec2<T>) -> Vec2<T> {
    Vec2::new(m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y)
}

pub fn mat_mul<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    let mut out = [[T::zero(); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn transpose<T: Real>(m: &Mat2<T>) -> Mat2<T> {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

/// Newton-Euler: linear acceleration `f / m̄` and angular acceleration `τ / Ī`.
pub fn accel_from_wrench<T: Real>(w: &Wrench<T>, p: &ObjectParams<T>) -> (Vec2<T>, T) {
    (w.force / p.mass, w.torque / p.inertia)
}

/// Torque of `force` applied at `tip_pos` about the object centre `obj_pos`.
pub fn moment_arm_torque<T: Real>(tip_pos: Vec2<T>, obj_pos: Vec2<T>, force: Vec2<T>) -> T {
    (tip_pos - obj_pos).cross(force)
}

#[derive(Clone, Copy)]
struct Derivative<T> {
    vel: Vec2<T>,
    omega: T,
    accel: Vec2<T>,
    alpha: T,
}

fn derivative<T: Real>(s: &PlanarState<T>, w: &Wrench<T>, p: &ObjectParams<T>) -> Derivative<T> {
    let (accel, alpha) = accel_from_wrench(w, p);
    Derivative {
        vel: s.vel,
        omega: s.omega,
        accel,
        alpha,
    }
}

fn advance<T: Real>(s: &PlanarState<T>, d: &Derivative<T>, h: T) -> PlanarState<T> {
    PlanarState {
        pos: s.pos + d.vel * h,
        theta: s.theta + d.omega * h,
        vel: s.vel + d.accel * h,
        omega: s.omega + d.alpha * h,
    }
}

/// One RK4 step where the wrench may depend on the stage time and state.
///
/// Callers that want a sampled input hold it constant inside the closure.
pub fn integrate_step_with<T, F>(
    s: &PlanarState<T>,
    wrench_fn: F,
    p: &ObjectParams<T>,
    t: T,
    dt: T,
) -> Result<PlanarState<T>>
where
    T: Real,
    F: Fn(T, &PlanarState<T>) -> Wrench<T>,
{
    let half = dt / T::lit(2.0);
    let k1 = derivative(s, &wrench_fn(t, s), p);
    let s2 = advance(s, &k1, half);
    let k2 = derivative(&s2, &wrench_fn(t + half, &s2), p);
    let s3 = advance(s, &k2, half);
    let k3 = derivative(&s3, &wrench_fn(t + half, &s3), p);
    let s4 = advance(s, &k3, dt);
    let k4 = derivative(&s4, &wrench_fn(t + dt, &s4), p);

    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let next = PlanarState {
        pos: s.pos + (k1.vel + k2.vel * two + k3.vel * two + k4.vel) * sixth,
        theta: s.theta + (k1.omega + k2.omega * two + k3.omega * two + k4.omega) * sixth,
        vel: s.vel + (k1.accel + k2.accel * two + k3.accel * two + k4.accel) * sixth,
        omega: s.omega + (k1.alpha + k2.alpha * two + k3.alpha * two + k4.alpha) * sixth,
    };
    if !next.is_finite() {
        return Err(Error::IntegrationDiverged {
            t: (t + dt).to_f64_lossy(),
        });
    }
    Ok(next)
}

/// One RK4 step of the double-integrator dynamics with the wrench sampled at
/// `t` and held for the whole step.
pub fn integrate_step<T, F>(
    s: &PlanarState<T>,
    wrench_fn: F,
    p: &ObjectParams<T>,
    t: T,
    dt: T,
) -> Result<PlanarState<T>>
where
    T: Real,
    F: Fn(T) -> Wrench<T>,
{
    let held = wrench_fn(t);
    integrate_step_with(s, |_, _| held, p, t, dt)
}
