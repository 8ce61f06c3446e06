//! Truncated Taylor jets in three variables through order three.
//!
//! A jet stores the Taylor coefficients `c_α = ∂^α f / α!` for `|α| ≤ 3`.
//! Taking a partial derivative lowers the order to which the jet is valid;
//! arithmetic keeps the smaller order of its operands.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::geometry::Point;

pub const JET_LEN: usize = 20;

struct Tables {
    /// Multi-index of each coefficient, graded by total degree.
    index: [[u8; 3]; JET_LEN],
    degree: [u8; JET_LEN],
    /// `(a, b, a + b)` for all pairs with `|a| + |b| ≤ 3`, sorted by
    /// `|a| + |b|`.
    products: Vec<(u8, u8, u8)>,
    /// `upto[o]`: number of products with `|a| + |b| ≤ o`.
    upto: [usize; 4],
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut index = [[0u8; 3]; JET_LEN];
        let mut degree = [0u8; JET_LEN];
        let mut k = 0;
        for d in 0..=3u8 {
            for a in (0..=d).rev() {
                for b in (0..=d - a).rev() {
                    index[k] = [a, b, d - a - b];
                    degree[k] = d;
                    k += 1;
                }
            }
        }
        let find = |m: [u8; 3]| index.iter().position(|x| *x == m);
        let mut products = Vec::new();
        let mut upto = [0; 4];
        for (o, n) in upto.iter_mut().enumerate() {
            for i in 0..JET_LEN {
                for j in 0..JET_LEN {
                    if usize::from(degree[i] + degree[j]) == o {
                        let s = [0, 1, 2].map(|q| index[i][q] + index[j][q]);
                        products.push((i as u8, j as u8, find(s).expect("in range") as u8));
                    }
                }
            }
            *n = products.len();
        }
        Tables {
            index,
            degree,
            products,
            upto,
        }
    })
}

fn position(alpha: [u8; 3]) -> Option<usize> {
    tables().index.iter().position(|x| *x == alpha)
}

fn factorial(n: u8) -> f64 {
    (1..=n).map(f64::from).product()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet3 {
    c: [f64; JET_LEN],
    order: u8,
}

impl Jet3 {
    pub fn constant(v: f64) -> Jet3 {
        let mut c = [0.0; JET_LEN];
        c[0] = v;
        Jet3 { c, order: 3 }
    }

    /// The coordinate function `x_i` expanded at `x`.
    pub fn variable(x: Point, i: usize) -> Jet3 {
        let mut j = Jet3::constant(x[i]);
        j.c[1 + i] = 1.0;
        j
    }

    /// The three coordinate jets at `x`.
    pub fn coordinates(x: Point) -> [Jet3; 3] {
        [0, 1, 2].map(|i| Jet3::variable(x, i))
    }

    /// Coordinate jets carrying derivatives up to `order` only; arithmetic
    /// on them is cheaper.
    pub fn coordinates_to_order(x: Point, order: u8) -> [Jet3; 3] {
        assert!(order <= 3, "jets carry at most third derivatives");
        Jet3::coordinates(x).map(|mut j| {
            j.order = order;
            j.truncated()
        })
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Highest derivative order carried by this jet.
    pub fn order(&self) -> u8 {
        self.order
    }

    /// `∂^α f` at the expansion point; panics if `|α|` exceeds the order.
    pub fn derivative(&self, alpha: [u8; 3]) -> f64 {
        let d: u8 = alpha.iter().sum();
        assert!(d <= self.order, "derivative of order {d} from a jet of order {}", self.order);
        let k = position(alpha).expect("order at most 3");
        self.c[k] * alpha.iter().map(|&a| factorial(a)).product::<f64>()
    }

    pub fn gradient(&self) -> Point {
        [0, 1, 2].map(|i| {
            let mut a = [0; 3];
            a[i] = 1;
            self.derivative(a)
        })
    }

    pub fn hessian(&self) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut a = [0; 3];
                a[i] += 1;
                a[j] += 1;
                h[i][j] = self.derivative(a);
            }
        }
        h
    }

    /// `∂_i f` as a jet of one order less.
    pub fn partial(&self, i: usize) -> Jet3 {
        assert!(self.order >= 1, "cannot differentiate a jet of order 0");
        let t = tables();
        let mut c = [0.0; JET_LEN];
        for k in 0..JET_LEN {
            if t.degree[k] >= 3 {
                continue;
            }
            let mut up = t.index[k];
            up[i] += 1;
            let src = position(up).expect("degree at most 3");
            c[k] = self.c[src] * f64::from(up[i]);
        }
        Jet3 {
            c,
            order: self.order - 1,
        }
    }

    fn truncated(mut self) -> Jet3 {
        let t = tables();
        for k in 0..JET_LEN {
            if t.degree[k] > self.order {
                self.c[k] = 0.0;
            }
        }
        self
    }

    /// `f(self)` from the value and first three derivatives of `f` at the
    /// constant term.
    fn compose(self, d: [f64; 4]) -> Jet3 {
        let mut h = self;
        h.c[0] = 0.0;
        let h2 = h * h;
        let h3 = h2 * h;
        let mut out = Jet3::constant(d[0]);
        out.order = self.order;
        for k in 1..JET_LEN {
            out.c[k] = d[1] * h.c[k] + d[2] / 2.0 * h2.c[k] + d[3] / 6.0 * h3.c[k];
        }
        out.truncated()
    }

    pub fn sin(self) -> Jet3 {
        let (s, c) = self.c[0].sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(self) -> Jet3 {
        let (s, c) = self.c[0].sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn exp(self) -> Jet3 {
        let e = self.c[0].exp();
        self.compose([e; 4])
    }

    pub fn ln(self) -> Jet3 {
        let x = self.c[0];
        self.compose([x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)])
    }

    pub fn sqrt(self) -> Jet3 {
        self.powf(0.5)
    }

    /// `self^p` for real `p`; the constant term must be positive unless `p`
    /// is a nonnegative integer.
    pub fn powf(self, p: f64) -> Jet3 {
        let x = self.c[0];
        self.compose([
            x.powf(p),
            p * x.powf(p - 1.0),
            p * (p - 1.0) * x.powf(p - 2.0),
            p * (p - 1.0) * (p - 2.0) * x.powf(p - 3.0),
        ])
    }

    pub fn powi(self, n: u32) -> Jet3 {
        let mut out = Jet3::constant(1.0);
        out.order = self.order;
        let (mut base, mut n) = (self, n);
        while n > 0 {
            if n & 1 == 1 {
                out = out * base;
            }
            n >>= 1;
            if n > 0 {
                base = base * base;
            }
        }
        out
    }

    pub fn recip(self) -> Jet3 {
        let x = self.c[0];
        self.compose([1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x), -6.0 / (x * x * x * x)])
    }

    pub fn atan(self) -> Jet3 {
        let x = self.c[0];
        let q = 1.0 + x * x;
        self.compose([x.atan(), 1.0 / q, -2.0 * x / (q * q), (6.0 * x * x - 2.0) / (q * q * q)])
    }

    /// Angle of `(x, y)` continued smoothly from `atan2` at the expansion
    /// point (no branch cut inside the jet's neighbourhood).
    pub fn atan2(y: Jet3, x: Jet3) -> Jet3 {
        let (x0, y0) = (x.c[0], y.c[0]);
        let theta0 = y0.atan2(x0);
        // tan(θ − θ0) = (x0 y − y0 x) / (x0 x + y0 y)
        let num = y * x0 - x * y0;
        let den = x * x0 + y * y0;
        let mut rel = (num / den).atan();
        rel.c[0] = 0.0;
        rel + theta0
    }
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(mut self, o: Jet3) -> Jet3 {
        for k in 0..JET_LEN {
            self.c[k] += o.c[k];
        }
        self.order = self.order.min(o.order);
        self.truncated()
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, o: Jet3) -> Jet3 {
        self + (-o)
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(mut self) -> Jet3 {
        self.c.iter_mut().for_each(|x| *x = -*x);
        self
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, o: Jet3) -> Jet3 {
        let t = tables();
        let order = self.order.min(o.order);
        let mut c = [0.0; JET_LEN];
        for &(i, j, k) in &t.products[..t.upto[usize::from(order)]] {
            c[k as usize] += self.c[i as usize] * o.c[j as usize];
        }
        Jet3 { c, order }
    }
}

impl Div for Jet3 {
    type Output = Jet3;
    fn div(self, o: Jet3) -> Jet3 {
        self * o.recip()
    }
}

impl Add<f64> for Jet3 {
    type Output = Jet3;
    fn add(mut self, s: f64) -> Jet3 {
        self.c[0] += s;
        self
    }
}

impl Sub<f64> for Jet3 {
    type Output = Jet3;
    fn sub(mut self, s: f64) -> Jet3 {
        self.c[0] -= s;
        self
    }
}

impl Mul<f64> for Jet3 {
    type Output = Jet3;
    fn mul(mut self, s: f64) -> Jet3 {
        self.c.iter_mut().for_each(|x| *x *= s);
        self
    }
}

impl Mul<Jet3> for f64 {
    type Output = Jet3;
    fn mul(self, j: Jet3) -> Jet3 {
        j * self
    }
}

impl Add<Jet3> for f64 {
    type Output = Jet3;
    fn add(self, j: Jet3) -> Jet3 {
        j + self
    }
}

impl Sub<Jet3> for f64 {
    type Output = Jet3;
    fn sub(self, j: Jet3) -> Jet3 {
        (-j) + self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let [x, y, z] = Jet3::coordinates([0.5, -1.0, 2.0]);
        let f = x * x * y + z * z * z;
        assert_eq!(f.value(), 0.25 * -1.0 + 8.0);
        assert_eq!(f.gradient(), [2.0 * 0.5 * -1.0, 0.25, 12.0]);
        assert_eq!(f.derivative([2, 1, 0]), 2.0);
        assert_eq!(f.derivative([0, 0, 3]), 6.0);
        assert_eq!(f.hessian()[0][1], 1.0);
    }

    #[test]
    fn partial_lowers_order() {
        let [x, _, _] = Jet3::coordinates([0.3, 0.0, 0.0]);
        let f = x.powi(4);
        let d = f.partial(0);
        assert_eq!(d.order(), 2);
        assert!((d.value() - 4.0 * 0.3f64.powi(3)).abs() < 1e-15);
        assert!((d.derivative([2, 0, 0]) - 24.0 * 0.3).abs() < 1e-14);
    }

    #[test]
    fn lower_order_jets_agree() {
        let x = [0.3, -0.2, 0.7];
        let f = |v: [Jet3; 3]| (v[0] * v[1]).sin() * v[2].exp() + v[1].powi(3) / (v[2] + 2.0);
        let full = f(Jet3::coordinates(x));
        for o in 0..3 {
            let low = f(Jet3::coordinates_to_order(x, o));
            assert_eq!(low.order(), o);
            assert!((low.value() - full.value()).abs() < 1e-15);
            if o >= 1 {
                for (a, b) in low.gradient().iter().zip(full.gradient()) {
                    assert!((a - b).abs() < 1e-14);
                }
            }
            if o == 2 {
                assert!((low.derivative([1, 0, 1]) - full.derivative([1, 0, 1])).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn angle_matches_atan2() {
        for &(px, py) in &[(0.3, 0.4), (-0.5, 0.2), (-0.4, -0.7), (0.2, -0.9)] {
            let [x, y, _] = Jet3::coordinates([px, py, 0.0]);
            let t = Jet3::atan2(y, x);
            assert!((t.value() - f64::atan2(py, px)).abs() < 1e-15);
            let r2 = px * px + py * py;
            let g = t.gradient();
            assert!((g[0] + py / r2).abs() < 1e-14);
            assert!((g[1] - px / r2).abs() < 1e-14);
        }
    }
}
