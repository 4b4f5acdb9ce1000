//! Quadrature building blocks: Gauss-Legendre rules, adaptive
//! Gauss-Kronrod integration, iterated Aitken series acceleration and
//! Gregory end-corrected trapezoid weights.

use crate::{Error, Result};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; nodes are symmetric and
/// deterministic.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j as f64 + 1.0) * z * p1 - j as f64 * p2) / (j as f64 + 1.0);
            }
            pp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK).
static XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
static WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
static WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod 7/15 panel. Returns (integral, error estimate).
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_k = WGK[7] * fc;
    let mut res_g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let f1 = f(c - x);
        let f2 = f(c + x);
        res_k += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            res_g += WG[i / 2] * (f1 + f2);
        }
    }
    (res_k * h, ((res_k - res_g) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature of `f` over [a, b].
///
/// Bisects until each panel satisfies `err <= max(abs_tol, rel_tol*|I|)`
/// scaled by the panel fraction of the interval. Kronrod nodes are interior,
/// so integrable endpoint singularities are handled by refinement.
pub fn adaptive_quad<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    const MAX_DEPTH: u32 = 52;
    if a == b {
        return Ok(0.0);
    }
    let (i0, _) = gk15(f, a, b);
    let scale = i0.abs().max(1e-300);
    let mut total = 0.0;
    // explicit stack keeps evaluation order deterministic
    let mut stack: Vec<(f64, f64, u32)> = vec![(a, b, 0)];
    let width = (b - a).abs();
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(f, lo, hi);
        let frac = ((hi - lo).abs() / width).max(1e-300);
        let tol = (abs_tol * frac).max(rel_tol * scale * frac);
        if err <= tol || depth >= MAX_DEPTH || (hi - lo).abs() < 1e-15 * width {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(total)
}

/// Adaptive Gauss-Kronrod quadrature of a small-array-valued integrand with
/// an absolute total error target.
///
/// Panels are accepted on a fixed share of the budget, so integrable
/// endpoint singularities refine dyadically toward the singular point
/// instead of exhausting a width-proportional allowance.
pub fn adaptive_quad_array<const N: usize, F: FnMut(f64) -> [f64; N]>(
    f: &mut F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> [f64; N] {
    const MAX_DEPTH: u32 = 48;
    let mut total = [0.0; N];
    if a == b {
        return total;
    }
    let width = (b - a).abs();
    let mut stack: Vec<(f64, f64, u32)> = vec![(a, b, 0)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let fc = f(c);
        let mut res_k = [0.0; N];
        let mut res_g = [0.0; N];
        for n in 0..N {
            res_k[n] = WGK[7] * fc[n];
            res_g[n] = WG[3] * fc[n];
        }
        for i in 0..7 {
            let x = h * XGK[i];
            let f1 = f(c - x);
            let f2 = f(c + x);
            for n in 0..N {
                res_k[n] += WGK[i] * (f1[n] + f2[n]);
                if i % 2 == 1 {
                    res_g[n] += WG[i / 2] * (f1[n] + f2[n]);
                }
            }
        }
        let mut err = 0.0f64;
        for n in 0..N {
            err = err.max(((res_k[n] - res_g[n]) * h).abs());
        }
        if err <= abs_tol / 50.0 || depth >= MAX_DEPTH || (hi - lo).abs() < 1e-14 * width {
            for n in 0..N {
                total[n] += res_k[n] * h;
            }
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    total
}

fn gk15_array<const N: usize, F: FnMut(f64) -> [f64; N]>(
    f: &mut F,
    a: f64,
    b: f64,
) -> ([f64; N], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_k = [0.0; N];
    let mut res_g = [0.0; N];
    for n in 0..N {
        res_k[n] = WGK[7] * fc[n];
        res_g[n] = WG[3] * fc[n];
    }
    for i in 0..7 {
        let x = h * XGK[i];
        let f1 = f(c - x);
        let f2 = f(c + x);
        for n in 0..N {
            res_k[n] += WGK[i] * (f1[n] + f2[n]);
            if i % 2 == 1 {
                res_g[n] += WG[i / 2] * (f1[n] + f2[n]);
            }
        }
    }
    let mut err = 0.0f64;
    for n in 0..N {
        res_k[n] *= h;
        err = err.max((res_k[n] - res_g[n] * h).abs());
    }
    (res_k, err)
}

fn gk15_bisect<const N: usize, F: FnMut(f64) -> [f64; N]>(
    f: &mut F,
    a: f64,
    b: f64,
    tol: f64,
    rel_tol: f64,
    depth: u32,
    out: &mut [f64; N],
) {
    let (val, err) = gk15_array(f, a, b);
    let mut scale = 0.0f64;
    for v in &val {
        scale = scale.max(v.abs());
    }
    if err <= tol.max(rel_tol * scale) || depth >= 10 {
        for n in 0..N {
            out[n] += val[n];
        }
    } else {
        let c = 0.5 * (a + b);
        gk15_bisect(f, a, c, 0.5 * tol, rel_tol, depth + 1, out);
        gk15_bisect(f, c, b, 0.5 * tol, rel_tol, depth + 1, out);
    }
}

/// Relative error admitted per window panel on top of the absolute share.
/// Tabulated kernels are piecewise-cubic, so their interpolation knots carry
/// curvature jumps that keep Kronrod estimates pessimistically high; the
/// committed relative error stays orders of magnitude below the accuracy of
/// the tabulated kernel itself.
const WINDOW_PANEL_REL: f64 = 1e-7;

/// Quadrature over [center - half_width, center + half_width] of an
/// integrand that is singular (or sharply peaked at scale `floor`) at
/// `center`: geometrically graded panels toward the center (ratio 8) with
/// a Gauss-Kronrod pair per panel and bisection on the rare panel that
/// misses its error share.
///
/// With `floor = 0` the innermost sliver of relative width 1e-11 is
/// dropped, which for an integrable log-type singularity contributes below
/// any practical `abs_tol`. With `floor > 0` the center panel
/// [center - s, center + s] (s ≈ floor/2) is integrated as well.
pub fn graded_window_quad<const N: usize, F: FnMut(f64) -> [f64; N]>(
    f: &mut F,
    center: f64,
    half_width: f64,
    floor: f64,
    abs_tol: f64,
) -> [f64; N] {
    let s_stop = (half_width * 1e-11).max(0.5 * floor).min(half_width);
    // ratio 4 keeps the Kronrod estimate of a log-type panel near rounding
    // level, so the nominal mesh almost never bisects
    let panels_per_side = ((half_width / s_stop).ln() / (4.0f64).ln()).ceil().max(1.0) as usize;
    let tol_panel = abs_tol / (1.5 * (2 * panels_per_side + 1) as f64);
    let mut total = [0.0; N];
    for side in [-1.0, 1.0] {
        let mut outer = half_width;
        while outer > s_stop * (1.0 + 1e-12) {
            let inner = (outer / 4.0).max(s_stop);
            let (a, b) = if side < 0.0 {
                (center - outer, center - inner)
            } else {
                (center + inner, center + outer)
            };
            gk15_bisect(f, a, b, tol_panel, WINDOW_PANEL_REL, 0, &mut total);
            outer = inner;
        }
    }
    if floor > 0.0 {
        gk15_bisect(f, center - s_stop, center + s_stop, tol_panel, WINDOW_PANEL_REL, 0, &mut total);
    }
    total
}

/// Iterated Aitken Δ² acceleration of a sequence of partial sums.
///
/// Returns the accelerated limit and a bracket-width error estimate taken
/// from the last two entries of the deepest usable column. Degenerate
/// second differences terminate the iteration (the sequence has already
/// converged at that depth).
pub fn aitken(partial: &[f64], depth: usize) -> (f64, f64) {
    let mut seq: Vec<f64> = partial.to_vec();
    if seq.len() >= 2 {
        let last = seq[seq.len() - 1];
        let prev = seq[seq.len() - 2];
        if (last - prev).abs() <= 1e-300 {
            return (last, (last - prev).abs());
        }
    }
    let mut best = *seq.last().unwrap();
    let mut bracket = if seq.len() >= 2 {
        (seq[seq.len() - 1] - seq[seq.len() - 2]).abs()
    } else {
        f64::INFINITY
    };
    for _ in 0..depth {
        if seq.len() < 3 {
            break;
        }
        let mut next = Vec::with_capacity(seq.len() - 2);
        for i in 0..seq.len() - 2 {
            let d1 = seq[i + 1] - seq[i];
            let d2 = seq[i + 2] - 2.0 * seq[i + 1] + seq[i];
            if d2.abs() <= 1e-300 {
                continue;
            }
            let v = seq[i] - d1 * d1 / d2;
            if v.is_finite() {
                next.push(v);
            }
        }
        if next.len() < 2 {
            if let Some(&v) = next.last() {
                best = v;
            }
            break;
        }
        let nb = (next[next.len() - 1] - next[next.len() - 2]).abs();
        best = next[next.len() - 1];
        bracket = nb;
        seq = next;
    }
    (best, bracket)
}

/// Convenience wrapper: accelerate and fail when the bracket stays above
/// tolerance.
pub fn accelerate_to_tol(partial: &[f64], depth: usize, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let (val, bracket) = aitken(partial, depth);
    if bracket <= abs_tol.max(rel_tol * val.abs()) {
        Ok(val)
    } else {
        Err(Error::QuadratureNonConvergence {
            bracket,
            blocks: partial.len(),
        })
    }
}

// Gregory end corrections of order 6 (difference corrections through Δ⁴):
// end-point weights 95/288, 317/240, 23/30, 793/720, 157/160.
static GREGORY_END: [f64; 5] = [
    95.0 / 288.0,
    317.0 / 240.0,
    23.0 / 30.0,
    793.0 / 720.0,
    157.0 / 160.0,
];

/// Weights of the Gregory end-corrected trapezoid rule for `n` equispaced
/// samples spanning an interval of n-1 steps (multiply by the step h).
///
/// Falls back to the plain trapezoid for n < 10.
pub fn gregory_weights(n: usize) -> Vec<f64> {
    let mut w = vec![1.0; n];
    if n < 10 {
        if n >= 2 {
            w[0] = 0.5;
            w[n - 1] = 0.5;
        }
        return w;
    }
    for (i, &g) in GREGORY_END.iter().enumerate() {
        w[i] = g;
        w[n - 1 - i] = g;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre(12);
        // degree-23 polynomial x^22 integrates exactly to 2/23
        let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(22)).sum();
        assert_relative_eq!(s, 2.0 / 23.0, max_relative = 1e-13);
        let s1: f64 = w.iter().sum();
        assert_relative_eq!(s1, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let mut f = |x: f64| x.powf(-0.5);
        let v = adaptive_quad(&mut f, 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn adaptive_log_singularity() {
        // int_0^1 ln(x) dx = -1
        let mut f = |x: f64| x.ln();
        let v = adaptive_quad(&mut f, 0.0, 1.0, 1e-13, 1e-13).unwrap();
        assert_relative_eq!(v, -1.0, max_relative = 1e-11);
    }

    #[test]
    fn aitken_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = 0.0;
        let partial: Vec<f64> = (1..=20)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        let (v, _) = aitken(&partial, 6);
        assert_relative_eq!(v, std::f64::consts::LN_2, max_relative = 1e-12);
    }

    #[test]
    fn aitken_divergent_abel_sum() {
        // 1 - 1 + 1 - 1 + ... has Abel sum 1/2
        let partial: Vec<f64> = (0..20).map(|k| if k % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let (v, b) = aitken(&partial, 6);
        assert_relative_eq!(v, 0.5, epsilon = 1e-12);
        assert!(b < 1e-12);
    }

    #[test]
    fn aitken_constant_sequence() {
        let partial = vec![3.0; 8];
        let (v, b) = aitken(&partial, 6);
        assert_eq!(v, 3.0);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn gregory_converges_fast() {
        // integrand with large end derivatives: f(x) = 1/(1+x) on [0,3]
        let f = |x: f64| 1.0 / (1.0 + x);
        let exact = 4.0f64.ln();
        let n = 48;
        let h = 3.0 / (n as f64 - 1.0);
        let w = gregory_weights(n);
        let s: f64 = (0..n).map(|i| w[i] * f(i as f64 * h)).sum::<f64>() * h;
        let trap: f64 = {
            let mut t = 0.5 * (f(0.0) + f(3.0));
            for i in 1..n - 1 {
                t += f(i as f64 * h);
            }
            t * h
        };
        assert!((s - exact).abs() < 1e-2 * (trap - exact).abs());
        assert!((s - exact).abs() < 1e-6);
    }
}
