//! Truncated Taylor-series arithmetic (jets).
//!
//! Propagating Taylor coefficients through the elementary operations gives
//! exact derivatives of arbitrary order for the composed multiplier symbols
//! without finite-difference noise. `Jet::var(x, n)` seeds the series of the
//! identity at x; after composition, coefficient k times k! is the k-th
//! derivative.

#[derive(Debug, Clone)]
pub struct Jet {
    /// Taylor coefficients c[0..=order] around the expansion point.
    pub c: Vec<f64>,
}

impl Jet {
    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn constant(v: f64, order: usize) -> Jet {
        let mut c = vec![0.0; order + 1];
        c[0] = v;
        Jet { c }
    }

    pub fn var(x: f64, order: usize) -> Jet {
        let mut c = vec![0.0; order + 1];
        c[0] = x;
        if order >= 1 {
            c[1] = 1.0;
        }
        Jet { c }
    }

    /// k-th derivative encoded by this jet.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.c[k] * fact
    }

    pub fn add(&self, rhs: &Jet) -> Jet {
        let c = self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect();
        Jet { c }
    }

    pub fn sub(&self, rhs: &Jet) -> Jet {
        let c = self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect();
        Jet { c }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            c: self.c.iter().map(|a| a * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut c = self.c.clone();
        c[0] += s;
        Jet { c }
    }

    pub fn mul(&self, rhs: &Jet) -> Jet {
        let n = self.c.len();
        let mut c = vec![0.0; n];
        for k in 0..n {
            let mut s = 0.0;
            for i in 0..=k {
                s += self.c[i] * rhs.c[k - i];
            }
            c[k] = s;
        }
        Jet { c }
    }

    pub fn div(&self, rhs: &Jet) -> Jet {
        let n = self.c.len();
        let mut c = vec![0.0; n];
        for k in 0..n {
            let mut s = self.c[k];
            for i in 1..=k {
                s -= rhs.c[i] * c[k - i];
            }
            c[k] = s / rhs.c[0];
        }
        Jet { c }
    }

    /// Natural logarithm; requires c[0] > 0.
    pub fn ln(&self) -> Jet {
        let n = self.c.len();
        let mut c = vec![0.0; n];
        c[0] = self.c[0].ln();
        for k in 1..n {
            let mut s = k as f64 * self.c[k];
            for i in 1..k {
                s -= i as f64 * c[i] * self.c[k - i];
            }
            c[k] = s / (k as f64 * self.c[0]);
        }
        Jet { c }
    }

    pub fn exp(&self) -> Jet {
        let n = self.c.len();
        let mut c = vec![0.0; n];
        c[0] = self.c[0].exp();
        for k in 1..n {
            let mut s = 0.0;
            for i in 1..=k {
                s += i as f64 * self.c[i] * c[k - i];
            }
            c[k] = s / k as f64;
        }
        Jet { c }
    }

    /// Real power a^p; requires c[0] > 0.
    pub fn powf(&self, p: f64) -> Jet {
        let n = self.c.len();
        let mut c = vec![0.0; n];
        c[0] = self.c[0].powf(p);
        for k in 1..n {
            // a0 * k * c_k = p * sum_{i=0}^{k-1} c_i (k-i) a_{k-i}
            //                - sum_{i=1}^{k-1} a_i (k-i) c_{k-i}
            let mut s = 0.0;
            for i in 0..k {
                s += p * c[i] * (k - i) as f64 * self.c[k - i];
            }
            for i in 1..k {
                s -= self.c[i] * (k - i) as f64 * c[k - i];
            }
            c[k] = s / (k as f64 * self.c[0]);
        }
        Jet { c }
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn sin_cos(&self) -> (Jet, Jet) {
        let n = self.c.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = self.c[0].sin();
        c[0] = self.c[0].cos();
        for k in 1..n {
            let mut ds = 0.0;
            let mut dc = 0.0;
            for i in 1..=k {
                ds += i as f64 * self.c[i] * c[k - i];
                dc -= i as f64 * self.c[i] * s[k - i];
            }
            s[k] = ds / k as f64;
            c[k] = dc / k as f64;
        }
        (Jet { c: s }, Jet { c })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derivatives_of_log_composition() {
        // f(r) = log(1 + log(1 + r^2)) at r = 3
        let order = 5;
        let r = Jet::var(3.0, order);
        let f = r.mul(&r).add_scalar(1.0).ln().add_scalar(1.0).ln();
        // f'(r) = 2r / ((1+r^2)(1+log(1+r^2)))
        let u: f64 = 1.0 + (10.0f64).ln();
        let expect1 = 6.0 / (10.0 * u);
        assert_relative_eq!(f.derivative(1), expect1, max_relative = 1e-13);
        // second derivative via analytic expression
        // f = ln(u), u = 1 + ln(1+r^2); f'' = (u'' u - u'^2)/u^2
        let up = 6.0 / 10.0;
        let upp = (2.0 * 10.0 - 6.0 * 6.0) / 100.0;
        let expect2 = (upp * u - up * up) / (u * u);
        assert_relative_eq!(f.derivative(2), expect2, max_relative = 1e-12);
    }

    #[test]
    fn powf_matches_falling_factorial() {
        let order = 6;
        let a = 0.7;
        let r = Jet::var(2.0, order).powf(a);
        let mut coeff = 1.0;
        for k in 0..=order {
            let expect = coeff * (2.0f64).powf(a - k as f64);
            assert_relative_eq!(r.derivative(k), expect, max_relative = 1e-12);
            coeff *= a - k as f64;
        }
    }

    #[test]
    fn exp_ln_roundtrip() {
        let r = Jet::var(1.7, 6);
        let back = r.ln().exp();
        for k in 0..=6 {
            assert_relative_eq!(back.c[k], r.c[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn sin_cos_derivatives() {
        let (s, c) = Jet::var(0.9, 4).sin_cos();
        assert_relative_eq!(s.derivative(1), 0.9f64.cos(), max_relative = 1e-14);
        assert_relative_eq!(s.derivative(2), -0.9f64.sin(), max_relative = 1e-13);
        assert_relative_eq!(c.derivative(1), -0.9f64.sin(), max_relative = 1e-14);
    }
}
