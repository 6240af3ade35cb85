//! Discrete second-order SISO system in observable canonical form.

use num_complex::Complex;

use crate::dynamics::Mat2;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `x' = A x + B u`, `y = C x + D u` realizing
/// `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderSection<T> {
    num: [T; 3],
    den: [T; 3],
    a: Mat2<T>,
    b: [T; 2],
    c: [T; 2],
    d: T,
    x: [T; 2],
}

impl<T: Real> SecondOrderSection<T> {
    /// From z⁻¹ polynomial coefficients; `den[0]` must be non-zero.
    pub fn from_discrete(num: [T; 3], den: [T; 3]) -> Result<Self> {
        if den[0] == T::zero() || !den.iter().chain(num.iter()).all(|v| v.is_finite()) {
            return Err(Error::Config(format!(
                "invalid discrete coefficients {num:?} / {den:?}"
            )));
        }
        let n = num.map(|v| v / den[0]);
        let a = den.map(|v| v / den[0]);
        Ok(Self {
            num: n,
            den: a,
            a: [[-a[1], T::one()], [-a[2], T::zero()]],
            b: [n[1] - a[1] * n[0], n[2] - a[2] * n[0]],
            c: [T::one(), T::zero()],
            d: n[0],
            x: [T::zero(); 2],
        })
    }

    /// Bilinear (Tustin) discretization of
    /// `(n2 s² + n1 s + n0) / (d2 s² + d1 s + d0)` with sample period `dt`.
    pub fn tustin(num_s: [T; 3], den_s: [T; 3], dt: T) -> Result<Self> {
        let k = T::lit(2.0) / dt;
        let k2 = k * k;
        let two = T::lit(2.0);
        let map = |p: [T; 3]| {
            let [c2, c1, c0] = p;
            [c2 * k2 + c1 * k + c0, two * (c0 - c2 * k2), c2 * k2 - c1 * k + c0]
        };
        Self::from_discrete(map(num_s), map(den_s))
    }

    pub fn numerator(&self) -> [T; 3] {
        self.num
    }

    pub fn denominator(&self) -> [T; 3] {
        self.den
    }

    pub fn feedthrough(&self) -> T {
        self.d
    }

    /// Jury test on the monic denominator.
    pub fn is_stable(&self) -> bool {
        let (a1, a2) = (self.den[1], self.den[2]);
        a2.abs() < T::one() && a1.abs() < T::one() + a2
    }

    pub fn dc_gain(&self) -> T {
        self.num.iter().copied().sum::<T>() / self.den.iter().copied().sum::<T>()
    }

    /// `H(e^{jω·dt})`.
    pub fn frequency_response(&self, omega: T, dt: T) -> Complex<T> {
        let zinv = Complex::from_polar(T::one(), -omega * dt);
        let eval = |p: &[T; 3]| Complex::new(p[0], T::zero()) + zinv * p[1] + zinv * zinv * p[2];
        eval(&self.num) / eval(&self.den)
    }

    pub fn state(&self) -> [T; 2] {
        self.x
    }

    pub fn set_state(&mut self, x: [T; 2]) {
        self.x = x;
    }

    pub fn output(&self, u: T) -> T {
        self.c[0] * self.x[0] + self.c[1] * self.x[1] + self.d * u
    }

    pub fn step(&mut self, u: T) -> T {
        let y = self.output(u);
        let x = self.x;
        self.x = [
            self.a[0][0] * x[0] + self.a[0][1] * x[1] + self.b[0] * u,
            self.a[1][0] * x[0] + self.a[1][1] * x[1] + self.b[1] * u,
        ];
        y
    }

    fn solve_i_minus_a(&self, rhs: [T; 2]) -> [T; 2] {
        let m = [
            [T::one() - self.a[0][0], -self.a[0][1]],
            [-self.a[1][0], T::one() - self.a[1][1]],
        ];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        [
            (m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det,
            (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
        ]
    }

    /// State consistent with a constant input held forever.
    pub fn steady_state(&self, u: T) -> [T; 2] {
        self.ramp_steady_state(u, T::zero())
    }

    /// State at the current sample for the input ramp `u + k·rate`
    /// (`k` in samples) that has been running forever.
    pub fn ramp_steady_state(&self, u: T, rate: T) -> [T; 2] {
        self.quadratic_steady_state(u, rate, T::zero())
    }

    /// State at the current sample for the input `u + k·rate + k²·curv`
    /// that has been running forever.
    ///
    /// The state trajectory is `x_k = p + k q + k² s` with
    /// `(I − A) s = B curv`, `(I − A) q = B rate − 2 s` and
    /// `(I − A) p = B u − q − s`.
    pub fn quadratic_steady_state(&self, u: T, rate: T, curv: T) -> [T; 2] {
        let two = T::lit(2.0);
        let s = self.solve_i_minus_a([self.b[0] * curv, self.b[1] * curv]);
        let q = self.solve_i_minus_a([self.b[0] * rate - two * s[0], self.b[1] * rate - two * s[1]]);
        self.solve_i_minus_a([self.b[0] * u - q[0] - s[0], self.b[1] * u - q[1] - s[1]])
    }
}
