use std::ops::{Add, Mul, Neg, Sub};

/// Second-order jet of a function of `(t, r)`: value and all partial
/// derivatives up to order two.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub f: f64,
    pub ft: f64,
    pub fr: f64,
    pub ftt: f64,
    pub ftr: f64,
    pub frr: f64,
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Self { f: v, ..Default::default() }
    }

    pub fn t(t: f64) -> Self {
        Self { f: t, ft: 1.0, ..Default::default() }
    }

    pub fn r(r: f64) -> Self {
        Self { f: r, fr: 1.0, ..Default::default() }
    }

    /// Compose with a scalar function given its value and first two derivatives
    /// at `self.f`.
    pub fn chain(&self, g0: f64, g1: f64, g2: f64) -> Self {
        Self {
            f: g0,
            ft: g1 * self.ft,
            fr: g1 * self.fr,
            ftt: g2 * self.ft * self.ft + g1 * self.ftt,
            ftr: g2 * self.ft * self.fr + g1 * self.ftr,
            frr: g2 * self.fr * self.fr + g1 * self.frr,
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            f: a * self.f,
            ft: a * self.ft,
            fr: a * self.fr,
            ftt: a * self.ftt,
            ftr: a * self.ftr,
            frr: a * self.frr,
        }
    }

    pub fn add_const(&self, a: f64) -> Self {
        Self { f: self.f + a, ..*self }
    }

    pub fn recip(&self) -> Self {
        let v = 1.0 / self.f;
        self.chain(v, -v * v, 2.0 * v * v * v)
    }

    pub fn powf(&self, p: f64) -> Self {
        let v = self.f.powf(p);
        self.chain(v, p * v / self.f, p * (p - 1.0) * v / (self.f * self.f))
    }

    pub fn exp(&self) -> Self {
        let e = self.f.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        self.chain(self.f.ln(), 1.0 / self.f, -1.0 / (self.f * self.f))
    }

    pub fn div(&self, o: &Self) -> Self {
        *self * o.recip()
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            f: self.f + o.f,
            ft: self.ft + o.ft,
            fr: self.fr + o.fr,
            ftt: self.ftt + o.ftt,
            ftr: self.ftr + o.ftr,
            frr: self.frr + o.frr,
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + o.scale(-1.0)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            f: self.f * o.f,
            ft: self.ft * o.f + self.f * o.ft,
            fr: self.fr * o.f + self.f * o.fr,
            ftt: self.ftt * o.f + 2.0 * self.ft * o.ft + self.f * o.ftt,
            ftr: self.ftr * o.f + self.ft * o.fr + self.fr * o.ft + self.f * o.ftr,
            frr: self.frr * o.f + 2.0 * self.fr * o.fr + self.f * o.frr,
        }
    }
}
