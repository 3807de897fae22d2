//! Scalar abstraction shared by plain evaluation and forward-mode
//! differentiation of the node-local residual.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub(crate) trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn cst(v: f64) -> Self;
    fn val(self) -> f64;

    /// Applies a scalar function given its value and derivative at `self.val()`.
    fn lift(self, f: f64, df: f64) -> Self;
    /// Applies a two-argument function given its value and partials.
    fn lift2(a: Self, b: Self, f: f64, fa: f64, fb: f64) -> Self;

    fn scale(self, c: f64) -> Self {
        self * Self::cst(c)
    }
    fn sqrt(self) -> Self {
        let s = self.val().sqrt();
        self.lift(s, 0.5 / s)
    }
    fn cosh(self) -> Self {
        let x = self.val();
        self.lift(x.cosh(), x.sinh())
    }
    fn sinh(self) -> Self {
        let x = self.val();
        self.lift(x.sinh(), x.cosh())
    }
    fn tanh(self) -> Self {
        let t = self.val().tanh();
        self.lift(t, 1.0 - t * t)
    }
    fn powf(self, e: f64) -> Self {
        let x = self.val();
        self.lift(x.powf(e), e * x.powf(e - 1.0))
    }
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn val(self) -> f64 {
        self
    }
    #[inline]
    fn lift(self, f: f64, _df: f64) -> Self {
        f
    }
    #[inline]
    fn lift2(_a: Self, _b: Self, f: f64, _fa: f64, _fb: f64) -> Self {
        f
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    #[inline]
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
}

/// Forward-mode dual number carrying `N` tangent directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dual<const N: usize> {
    pub v: f64,
    pub d: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn var(v: f64, slot: usize) -> Self {
        let mut d = [0.0; N];
        d[slot] = 1.0;
        Dual { v, d }
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(o.d) {
            *a += b;
        }
        Dual { v: self.v + o.v, d }
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(o.d) {
            *a -= b;
        }
        Dual { v: self.v - o.v, d }
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = self.d[i] * o.v + self.v * o.d[i];
        }
        Dual { v: self.v * o.v, d }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let q = self.v / o.v;
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = (self.d[i] - q * o.d[i]) / o.v;
        }
        Dual { v: q, d }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual { v: -self.v, d: self.d.map(|x| -x) }
    }
}

impl<const N: usize> Real for Dual<N> {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual { v, d: [0.0; N] }
    }
    #[inline]
    fn val(self) -> f64 {
        self.v
    }
    #[inline]
    fn lift(self, f: f64, df: f64) -> Self {
        Dual { v: f, d: self.d.map(|x| df * x) }
    }
    #[inline]
    fn lift2(a: Self, b: Self, f: f64, fa: f64, fb: f64) -> Self {
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = fa * a.d[i] + fb * b.d[i];
        }
        Dual { v: f, d }
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        Dual { v: self.v * c, d: self.d.map(|x| c * x) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<T: Real>(x: T, y: T) -> T {
        (x * y).tanh() + x.cosh() / (T::cst(1.0) + y * y).sqrt() - y.sinh().powf(3.0)
    }

    #[test]
    fn dual_matches_central_differences() {
        let (x, y) = (0.7, 0.4);
        let d = f(Dual::<2>::var(x, 0), Dual::<2>::var(y, 1));
        let h = 1e-6;
        let fx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
        let fy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
        assert!((d.v - f(x, y)).abs() < 1e-15);
        assert!((d.d[0] - fx).abs() < 1e-8);
        assert!((d.d[1] - fy).abs() < 1e-8);
    }
}
