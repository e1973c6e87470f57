//! Truncated power series in one variable with complex coefficients.
//!
//! Used for generating functions in λ: ⟨exp(λ S·n)⟩, symbols of exp(λ S·n),
//! and their Gaussian averages. Moments are read off as `r! · [λ^r]`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    coeffs: Vec<Complex64>,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl Series {
    /// Zero series keeping terms up to λ^order.
    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![ZERO; order + 1] }
    }

    pub fn constant(c: Complex64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(ONE, order)
    }

    /// The series of `c·λ`.
    pub fn linear(c: Complex64, order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = c;
        }
        s
    }

    pub fn from_real(coeffs: &[f64], order: usize) -> Self {
        let mut s = Self::zero(order);
        for (dst, c) in s.coeffs.iter_mut().zip(coeffs) {
            *dst = Complex64::new(*c, 0.0);
        }
        s
    }

    pub fn cosh(order: usize) -> Self {
        let mut s = Self::zero(order);
        let mut fact = 1.0;
        for j in 0..=order {
            if j > 0 {
                fact *= j as f64;
            }
            if j % 2 == 0 {
                s.coeffs[j] = Complex64::new(1.0 / fact, 0.0);
            }
        }
        s
    }

    pub fn sinh(order: usize) -> Self {
        let mut s = Self::zero(order);
        let mut fact = 1.0;
        for j in 0..=order {
            if j > 0 {
                fact *= j as f64;
            }
            if j % 2 == 1 {
                s.coeffs[j] = Complex64::new(1.0 / fact, 0.0);
            }
        }
        s
    }

    /// `exp(c·λ)`.
    pub fn exp_linear(c: Complex64, order: usize) -> Self {
        let mut s = Self::zero(order);
        let mut term = ONE;
        for j in 0..=order {
            s.coeffs[j] = term;
            term = term * c / (j + 1) as f64;
        }
        s
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[inline]
    pub fn coeff(&self, j: usize) -> Complex64 {
        self.coeffs.get(j).copied().unwrap_or(ZERO)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `r! · [λ^r]`, the r-th derivative at zero.
    pub fn derivative_at_zero(&self, r: usize) -> Complex64 {
        self.coeff(r) * factorial(r)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Formal derivative d/dλ (drops the top coefficient's information).
    fn derivative(&self) -> Self {
        let order = self.order();
        let mut d = Self::zero(order);
        for j in 1..=order {
            d.coeffs[j - 1] = self.coeffs[j] * j as f64;
        }
        d
    }

    /// `exp(f)` via f' exp(f) = (exp f)'.
    pub fn exp(&self) -> Self {
        let order = self.order();
        let mut out = Self::zero(order);
        out.coeffs[0] = self.coeffs[0].exp();
        for r in 1..=order {
            let mut acc = ZERO;
            for j in 1..=r {
                acc += self.coeffs[j] * j as f64 * out.coeffs[r - j];
            }
            out.coeffs[r] = acc / r as f64;
        }
        out
    }

    /// Principal logarithm; requires a nonzero constant term.
    pub fn ln(&self) -> Self {
        let order = self.order();
        let c0 = self.coeffs[0];
        assert!(c0.norm() > 0.0, "logarithm of a series with zero constant term");
        // g = ln f  ⇒  f g' = f'
        let fp = self.derivative();
        let mut gp = Self::zero(order);
        for r in 0..order {
            let mut acc = fp.coeffs[r];
            for j in 1..=r {
                acc -= self.coeffs[j] * gp.coeffs[r - j];
            }
            gp.coeffs[r] = acc / c0;
        }
        let mut out = Self::zero(order);
        out.coeffs[0] = c0.ln();
        for r in 1..=order {
            out.coeffs[r] = gp.coeffs[r - 1] / r as f64;
        }
        out
    }

    /// `f^p` for real `p`; requires a nonzero constant term.
    pub fn powf(&self, p: f64) -> Self {
        if p == 0.0 {
            return Self::one(self.order());
        }
        self.ln().scale_re(p).exp()
    }

    /// `f^p` for integer `p` by repeated squaring; no restriction on f(0).
    pub fn powi(&self, mut p: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.order());
        while p > 0 {
            if p & 1 == 1 {
                acc = &acc * &base;
            }
            p >>= 1;
            if p > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// `f(s·λ)`: coefficient j is multiplied by s^j.
    pub fn rescale_argument(&self, s: f64) -> Self {
        let mut pow = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let out = c * pow;
                pow *= s;
                out
            })
            .collect();
        Self { coeffs }
    }

    /// Coefficient-wise real part.
    pub fn re(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| Complex64::new(c.re, 0.0)).collect() }
    }
}

pub fn factorial(r: usize) -> f64 {
    (1..=r).fold(1.0, |acc, j| acc * j as f64)
}

impl Add for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        let order = self.order().min(rhs.order());
        Series { coeffs: (0..=order).map(|j| self.coeffs[j] + rhs.coeffs[j]).collect() }
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        let order = self.order().min(rhs.order());
        Series { coeffs: (0..=order).map(|j| self.coeffs[j] - rhs.coeffs[j]).collect() }
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale_re(-1.0)
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        let order = self.order().min(rhs.order());
        let mut out = Series::zero(order);
        for i in 0..=order {
            if self.coeffs[i] == ZERO {
                continue;
            }
            for j in 0..=order - i {
                out.coeffs[i + j] += self.coeffs[i] * rhs.coeffs[j];
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Series {
            type Output = Series;
            fn $m(self, rhs: Series) -> Series {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Series, b: &Series, tol: f64) -> bool {
        a.coeffs.iter().zip(&b.coeffs).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn hyperbolic_identity() {
        let c = Series::cosh(8);
        let s = Series::sinh(8);
        let id = &(&c * &c) - &(&s * &s);
        assert!(close(&id, &Series::one(8), 1e-14));
    }

    #[test]
    fn exp_ln_round_trip() {
        let f = &Series::cosh(7) + &Series::sinh(7).scale_re(0.3);
        assert!(close(&f.ln().exp(), &f, 1e-13));
        // cosh + sinh = exp(λ)
        let e = (&Series::cosh(7) + &Series::sinh(7)).ln();
        assert!(close(&e, &Series::linear(ONE, 7), 1e-14));
    }

    #[test]
    fn integer_and_real_powers_agree() {
        let f = &Series::cosh(6) + &Series::sinh(6).scale_re(-0.7);
        assert!(close(&f.powi(13), &f.powf(13.0), 1e-10));
        let s5 = Series::sinh(6).powi(5);
        assert!((s5.coeff(5) - 1.0).norm() < 1e-15);
        assert!(s5.coeff(4).norm() == 0.0);
    }

    #[test]
    fn binomial_moments() {
        // (cosh λ)^N is the MGF of a sum of N fair ±1 variables: E[S^4] = 3N² − 2N.
        let n = 9u64;
        let m = Series::cosh(4).powi(n);
        assert!((m.derivative_at_zero(4).re - (3.0 * 81.0 - 18.0)).abs() < 1e-10);
    }
}
