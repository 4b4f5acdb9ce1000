//! Trigonometric interpolation of periodically sampled closed curves.
//!
//! A curve sampled at uniform ξ_i ∈ [0, 2π) is treated as the complex
//! signal z = x + iy. The FFT gives Fourier coefficients from which the
//! curve, its ξ-derivatives and off-node values are evaluated with spectral
//! accuracy.

use crate::geometry::Vec2;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Debug, Clone)]
pub struct CurveSpectrum {
    /// Coefficients in fftfreq order: k = 0, 1, .., n/2-1, -n/2, .., -1.
    coeffs: Vec<Complex64>,
}

fn freq(i: usize, n: usize) -> i64 {
    if i <= (n - 1) / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl CurveSpectrum {
    pub fn from_nodes(nodes: &[Vec2]) -> CurveSpectrum {
        let n = nodes.len();
        let mut buf: Vec<Complex64> = nodes.iter().map(|p| Complex64::new(p.x, p.y)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        for c in &mut buf {
            *c *= scale;
        }
        CurveSpectrum { coeffs: buf }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Evaluate the interpolant at an arbitrary parameter value.
    pub fn eval(&self, xi: f64) -> Vec2 {
        let n = self.coeffs.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = freq(i, n) as f64;
            acc += c * Complex64::from_polar(1.0, k * xi);
        }
        Vec2::new(acc.re, acc.im)
    }

    /// Evaluate d/dξ of the interpolant at an arbitrary parameter value.
    pub fn eval_deriv(&self, xi: f64) -> Vec2 {
        let n = self.coeffs.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = freq(i, n);
            if n % 2 == 0 && k == -(n as i64) / 2 {
                continue; // Nyquist mode has no well-defined derivative
            }
            let kf = k as f64;
            acc += c * Complex64::new(0.0, kf) * Complex64::from_polar(1.0, kf * xi);
        }
        Vec2::new(acc.re, acc.im)
    }

    /// Samples of the order-`order` ξ-derivative on a finer uniform grid of
    /// `m >= n` points (zero-padded inverse transform).
    pub fn derivative_padded(&self, order: usize, m: usize) -> Vec<Vec2> {
        let n = self.coeffs.len();
        assert!(m >= n);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = freq(i, n);
            if n % 2 == 0 && k == -(n as i64) / 2 && order > 0 {
                continue;
            }
            let ik = Complex64::new(0.0, k as f64);
            let target = if k >= 0 { k as usize } else { (m as i64 + k) as usize };
            buf[target] = c * ik.powu(order as u32);
        }
        FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
        buf.iter().map(|c| Vec2::new(c.re, c.im)).collect()
    }

    /// Samples of the order-`order` ξ-derivative at the original nodes.
    ///
    /// For order ≥ 2 the upper third of the spectrum is zeroed (2/3-rule)
    /// to suppress amplification of rounding noise.
    pub fn derivative_at_nodes(&self, order: usize) -> Vec<Vec2> {
        let n = self.coeffs.len();
        let cutoff = n as i64 / 3;
        let mut buf: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = freq(i, n);
                if n % 2 == 0 && k == -(n as i64) / 2 && order > 0 {
                    return Complex64::new(0.0, 0.0);
                }
                if order >= 2 && k.abs() > cutoff {
                    return Complex64::new(0.0, 0.0);
                }
                let ik = Complex64::new(0.0, k as f64);
                c * ik.powu(order as u32)
            })
            .collect();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        buf.iter().map(|c| Vec2::new(c.re, c.im)).collect()
    }
}
