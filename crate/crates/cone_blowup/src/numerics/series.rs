use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Truncated Taylor expansion `Σ_{i<len} c_i h^i` of a function around a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor {
    pub c: Vec<f64>,
}

impl Taylor {
    pub fn new(c: Vec<f64>) -> Self {
        assert!(!c.is_empty(), "empty Taylor jet");
        Self { c }
    }

    pub fn constant(v: f64, len: usize) -> Self {
        let mut c = vec![0.0; len];
        c[0] = v;
        Self { c }
    }

    /// Jet of the identity `x` around `x0`.
    pub fn variable(x0: f64, len: usize) -> Self {
        let mut c = vec![0.0; len];
        c[0] = x0;
        if len > 1 {
            c[1] = 1.0;
        }
        Self { c }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `k`-th derivative at the expansion point (zero beyond the truncation).
    pub fn deriv(&self, k: usize) -> f64 {
        if k >= self.c.len() {
            return 0.0;
        }
        let mut f = 1.0;
        for i in 2..=k {
            f *= i as f64;
        }
        self.c[k] * f
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { c: self.c.iter().map(|v| a * v).collect() }
    }

    pub fn add_const(&self, a: f64) -> Self {
        let mut c = self.c.clone();
        c[0] += a;
        Self { c }
    }

    pub fn truncate(&self, len: usize) -> Self {
        Self { c: self.c[..len.min(self.c.len())].to_vec() }
    }

    /// Derivative with respect to the expansion variable; one order shorter.
    pub fn derivative(&self) -> Self {
        if self.c.len() == 1 {
            return Self { c: vec![0.0] };
        }
        Self { c: (1..self.c.len()).map(|i| i as f64 * self.c[i]).collect() }
    }

    pub fn recip(&self) -> Result<Self> {
        let a0 = self.c[0];
        if a0 == 0.0 || !a0.is_finite() {
            return Err(Error::DivisionNearZero(format!("reciprocal of a jet with value {a0}")));
        }
        let n = self.c.len();
        let mut r = vec![0.0; n];
        r[0] = 1.0 / a0;
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.c[j] * r[k - j]).sum();
            r[k] = -s / a0;
        }
        Ok(Self { c: r })
    }

    pub fn div(&self, other: &Taylor) -> Result<Self> {
        Ok(self * &other.recip()?)
    }

    pub fn exp(&self) -> Self {
        let n = self.c.len();
        let mut e = vec![0.0; n];
        e[0] = self.c[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * self.c[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Self { c: e }
    }

    pub fn ln(&self) -> Result<Self> {
        let a0 = self.c[0];
        if !(a0 > 0.0) {
            return Err(Error::DivisionNearZero(format!("logarithm of a jet with value {a0}")));
        }
        let n = self.c.len();
        let mut l = vec![0.0; n];
        l[0] = a0.ln();
        for k in 1..n {
            let s: f64 = (1..k).map(|j| j as f64 * l[j] * self.c[k - j]).sum();
            l[k] = (self.c[k] - s / k as f64) / a0;
        }
        Ok(Self { c: l })
    }

    /// `self^p` for a jet with positive value.
    pub fn powf(&self, p: f64) -> Result<Self> {
        let a0 = self.c[0];
        if !(a0 > 0.0) {
            return Err(Error::DivisionNearZero(format!("real power of a jet with value {a0}")));
        }
        let n = self.c.len();
        let mut r = vec![0.0; n];
        r[0] = a0.powf(p);
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| (p * j as f64 - (k - j) as f64) * self.c[j] * r[k - j]).sum();
            r[k] = s / (k as f64 * a0);
        }
        Ok(Self { c: r })
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.powf(0.5)
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut out = Taylor::constant(1.0, self.len());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Evaluate the truncated polynomial at offset `h`.
    pub fn eval_at(&self, h: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, v| acc * h + v)
    }
}

impl Add for &Taylor {
    type Output = Taylor;
    fn add(self, o: &Taylor) -> Taylor {
        let n = self.c.len().min(o.c.len());
        Taylor { c: (0..n).map(|i| self.c[i] + o.c[i]).collect() }
    }
}

impl Sub for &Taylor {
    type Output = Taylor;
    fn sub(self, o: &Taylor) -> Taylor {
        let n = self.c.len().min(o.c.len());
        Taylor { c: (0..n).map(|i| self.c[i] - o.c[i]).collect() }
    }
}

impl Mul for &Taylor {
    type Output = Taylor;
    fn mul(self, o: &Taylor) -> Taylor {
        let n = self.c.len().min(o.c.len());
        let mut c = vec![0.0; n];
        for (i, a) in self.c.iter().enumerate().take(n) {
            if *a == 0.0 {
                continue;
            }
            for j in 0..n - i {
                c[i + j] += a * o.c[j];
            }
        }
        Taylor { c }
    }
}

impl Neg for &Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}

/// Coefficient ring for [`TruncSeries`].
pub trait Coeff: Clone {
    fn zero_like(&self) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn scale(&self, a: f64) -> Self;
    fn add_const(&self, a: f64) -> Self;
    fn recip(&self) -> Result<Self>;
}

impl Coeff for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, a: f64) -> Self {
        a * self
    }
    fn add_const(&self, a: f64) -> Self {
        self + a
    }
    fn recip(&self) -> Result<Self> {
        if *self == 0.0 || !self.is_finite() {
            return Err(Error::DivisionNearZero(format!("reciprocal of {self}")));
        }
        Ok(1.0 / self)
    }
}

impl Coeff for Taylor {
    fn zero_like(&self) -> Self {
        Taylor { c: vec![0.0; self.c.len()] }
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, a: f64) -> Self {
        Taylor::scale(self, a)
    }
    fn add_const(&self, a: f64) -> Self {
        Taylor::add_const(self, a)
    }
    fn recip(&self) -> Result<Self> {
        Taylor::recip(self)
    }
}

/// Power series `Σ_{k<len} a_k ε^k` in a formal parameter, truncated at a
/// fixed length, with coefficients in a [`Coeff`] ring.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncSeries<C> {
    pub a: Vec<C>,
}

impl<C: Coeff> TruncSeries<C> {
    pub fn new(a: Vec<C>) -> Self {
        assert!(!a.is_empty(), "empty series");
        Self { a }
    }

    /// Series with only an `ε^0` term.
    pub fn constant(c: C, len: usize) -> Self {
        let z = c.zero_like();
        let mut a = vec![z; len];
        a[0] = c;
        Self { a }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeff(&self, k: usize) -> &C {
        &self.a[k]
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { a: self.a.iter().zip(&o.a).map(|(x, y)| x.add(y)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { a: self.a.iter().zip(&o.a).map(|(x, y)| x.sub(y)).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { a: self.a.iter().map(|x| x.scale(s)).collect() }
    }

    pub fn add_const(&self, s: f64) -> Self {
        let mut a = self.a.clone();
        a[0] = a[0].add_const(s);
        Self { a }
    }

    /// Multiply every coefficient by the same ring element.
    pub fn mul_coeff(&self, c: &C) -> Self {
        Self { a: self.a.iter().map(|x| x.mul(c)).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.a.len().min(o.a.len());
        let mut a: Vec<C> = (0..n).map(|_| self.a[0].zero_like()).collect();
        for i in 0..n {
            for j in 0..n - i {
                a[i + j] = a[i + j].add(&self.a[i].mul(&o.a[j]));
            }
        }
        Self { a }
    }

    pub fn recip(&self) -> Result<Self> {
        let n = self.a.len();
        let inv0 = self.a[0].recip()?;
        let mut r = vec![inv0.clone()];
        for k in 1..n {
            let mut s = self.a[0].zero_like();
            for j in 1..=k {
                s = s.add(&self.a[j].mul(&r[k - j]));
            }
            r.push(s.mul(&inv0).scale(-1.0));
        }
        Ok(Self { a: r })
    }

    /// Multiply by `ε^shift`, dropping terms past the truncation.
    pub fn shift_up(&self, shift: usize) -> Self {
        let n = self.a.len();
        let z = self.a[0].zero_like();
        let mut a = vec![z; n];
        for k in 0..n.saturating_sub(shift) {
            a[k + shift] = self.a[k].clone();
        }
        Self { a }
    }
}
