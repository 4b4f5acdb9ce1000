//! The radial kernel G(ρ) of the Biot-Savart law, its derivatives, the
//! stream kernel R̃(ρ) and the vector kernel K with its gradient split.
//!
//! G is the Hankel-type integral
//!
//!   G(ρ) = m(0⁺)/2π + (1/2π) ∫₀^∞ J₀(ρr) m'(r) dr,
//!
//! evaluated in the scaled variable t = ρr as a smooth head on [0, j₀,₁]
//! (after one integration by parts that trades J₀ m' for J₁ m, removing
//! both the m(0⁺) boundary term and any integrable derivative singularity
//! at r = 0) plus blocks between consecutive zeros of J₀ whose alternating
//! partial sums are accelerated by iterated Aitken Δ². The same machinery
//! evaluates the derivative recursion
//!
//!   G^{(l)}(ρ) = Σ_{j<l} a_{j,l} G^{(j)}(ρ)/ρ^{l-j}
//!                + (-1)^l/(2πρ^l) ∫₀^∞ J₀(ρr) M_l(r) dr,
//!
//! with M_l = (r M_{l-1})', M₀ = m', expanded as Σ_j b_{j,l} r^{j-1} m^{(j)}.
//!
//! Sign convention: K(x) = (-x₂, x₁) G(|x|)/|x|², so a positive-strength
//! Euler patch induces counterclockwise rotation.

use crate::geometry::{Mat2, Vec2};
use crate::interp::Pchip;
use crate::multiplier::MultiplierSymbol;
use crate::quad::{adaptive_quad, aitken, gauss_legendre};
use crate::special::{j0, j0_zero, j1};
use crate::{Error, Result};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock, RwLock};

/// Parameters of the oscillatory quadrature.
#[derive(Debug, Clone)]
pub struct HankelQuadratureConfig {
    /// Fraction of [0, j₀,₁] integrated as the smooth head (default 1).
    pub head_split: f64,
    /// Bessel-zero intervals grouped per acceleration block.
    pub zeros_per_block: usize,
    pub max_blocks: usize,
    /// Iterated Aitken depth applied to the block partial sums.
    pub acceleration_depth: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for HankelQuadratureConfig {
    fn default() -> Self {
        HankelQuadratureConfig {
            head_split: 1.0,
            zeros_per_block: 1,
            max_blocks: 64,
            acceleration_depth: 6,
            abs_tol: 1e-13,
            rel_tol: 1e-9,
        }
    }
}

impl HankelQuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.head_split > 0.0 && self.head_split <= 1.0) {
            return Err(Error::BadParameter("head_split must lie in (0, 1]".into()));
        }
        if self.zeros_per_block == 0 {
            return Err(Error::BadParameter("zeros_per_block must be >= 1".into()));
        }
        if self.max_blocks < self.acceleration_depth + 2 {
            return Err(Error::BadParameter(
                "max_blocks must be >= acceleration_depth + 2".into(),
            ));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::BadParameter("tolerances must be positive".into()));
        }
        Ok(())
    }
}

fn gl24() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(24))
}

/// Coefficients b_{j,l} of M_l(r) = Σ_{j=1}^{l+1} b_{j,l} r^{j-1} m^{(j)}(r).
fn m_coeffs(l: usize) -> Vec<f64> {
    let mut b = vec![1.0]; // l = 0: M_0 = m'
    for lev in 1..=l {
        let mut next = vec![0.0; lev + 1];
        for (j, nj) in next.iter_mut().enumerate() {
            // b_{j,l} = j b_{j,l-1} + b_{j-1,l-1} with 1-based j
            let jj = j + 1;
            let own = if j < b.len() { jj as f64 * b[j] } else { 0.0 };
            let carry = if j >= 1 { b[j - 1] } else { 0.0 };
            *nj = own + carry;
        }
        b = next;
    }
    b
}

/// Coefficients a_{j,l} of 𝒢_l(ρ) = Σ_{j=1}^{l-1} a_{j,l} G^{(j)}(ρ)/ρ^{l-j}.
fn g_coeffs(l: usize) -> Vec<f64> {
    let mut a: Vec<f64> = vec![]; // l = 1: empty
    for lev in 2..=l {
        let mut next = vec![0.0; lev - 1];
        for (j, nj) in next.iter_mut().enumerate() {
            let jj = j + 1;
            let own = if j < a.len() { jj as f64 * a[j] } else { 0.0 };
            let carry = if j >= 1 && j - 1 < a.len() { a[j - 1] } else { 0.0 };
            let boundary = if jj == lev - 1 { -((lev - 1) as f64) } else { 0.0 };
            *nj = own + carry + boundary;
        }
        a = next;
    }
    a
}

/// M_l(r) from the symbol derivatives.
fn m_l(sym: &MultiplierSymbol, r: f64, l: usize, b: &[f64]) -> f64 {
    if l == 0 {
        return sym.m1(r);
    }
    let d = sym.derivs(r, l + 1);
    let mut acc = 0.0;
    let mut rpow = 1.0;
    for (j, bj) in b.iter().enumerate() {
        acc += bj * rpow * d[j + 1];
        rpow *= r;
    }
    acc
}

/// V_l(r): an antiderivative weight for the smooth head. V₀ = m,
/// V_l = r·M_{l-1} for l ≥ 1; in both cases V_l' = W_l and V_l(0⁺) is
/// m(0⁺) for l = 0 and 0 otherwise.
fn v_l(sym: &MultiplierSymbol, r: f64, l: usize, b_prev: &[f64]) -> f64 {
    if l == 0 {
        sym.m(r)
    } else {
        r * m_l(sym, r, l - 1, b_prev)
    }
}

/// I_l(ρ) = ∫₀^∞ J₀(ρr) M_l(r) dr (M₀ = m'), by head + accelerated blocks.
fn hankel_integral(
    sym: &MultiplierSymbol,
    rho: f64,
    l: usize,
    cfg: &HankelQuadratureConfig,
) -> Result<f64> {
    let b_l = m_coeffs(l);
    let b_prev = if l >= 1 { m_coeffs(l - 1) } else { Vec::new() };
    let z1 = j0_zero(1);
    let t_head = cfg.head_split * z1;

    // head by parts: J₀ W_l -> J₁ V_l, in the scaled variable t = ρr
    let mut head_f = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        j1(t) * v_l(sym, t / rho, l, &b_prev)
    };
    let mut head = adaptive_quad(&mut head_f, 0.0, t_head, cfg.abs_tol, cfg.rel_tol)?;
    head += j0(t_head) * v_l(sym, t_head / rho, l, &b_prev);
    if l == 0 {
        head -= sym.m_zero();
    }

    if sym.is_constant() && l == 0 {
        // m' identically zero: no oscillatory tail
        return Ok(head);
    }

    let (xs, ws) = gl24();
    let gl_piece = |a: f64, b: f64| -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in xs.iter().zip(ws) {
            let t = c + h * x;
            s += w * j0(t) * m_l(sym, t / rho, l, &b_l);
        }
        s * h / rho
    };

    // partial piece of the first zero interval not covered by the head
    let pre_block = if cfg.head_split < 1.0 {
        let mut f = |t: f64| j0(t) * m_l(sym, t / rho, l, &b_l) / rho;
        adaptive_quad(&mut f, t_head, z1, cfg.abs_tol, cfg.rel_tol)?
    } else {
        0.0
    };

    let mut partial = Vec::with_capacity(cfg.max_blocks);
    let mut sum = 0.0;
    let scale_base = head.abs().max(1e-300);
    for k in 0..cfg.max_blocks {
        let mut block = 0.0;
        for sub in 0..cfg.zeros_per_block {
            let i = 1 + k * cfg.zeros_per_block + sub;
            block += gl_piece(j0_zero(i), j0_zero(i + 1));
        }
        sum += block;
        partial.push(sum);
        if partial.len() >= cfg.acceleration_depth + 2 {
            let (val, bracket) = aitken(&partial, cfg.acceleration_depth);
            let scale = scale_base.max(val.abs());
            if bracket <= cfg.abs_tol.max(cfg.rel_tol * scale) {
                return Ok(head + pre_block + val);
            }
        }
    }
    let (_, bracket) = aitken(&partial, cfg.acceleration_depth);
    Err(Error::QuadratureNonConvergence {
        bracket,
        blocks: cfg.max_blocks,
    })
}

/// G(ρ) by direct quadrature.
pub fn g_eval(sym: &MultiplierSymbol, rho: f64, cfg: &HankelQuadratureConfig) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("g_eval requires rho > 0, got {rho}")));
    }
    cfg.validate()?;
    Ok(sym.m_zero() / (2.0 * PI) + hankel_integral(sym, rho, 0, cfg)? / (2.0 * PI))
}

/// G^{(l)}(ρ) through the derivative recursion (l = 0 falls back to `g_eval`).
pub fn g_deriv(
    sym: &MultiplierSymbol,
    rho: f64,
    l: usize,
    cfg: &HankelQuadratureConfig,
) -> Result<f64> {
    if l == 0 {
        return g_eval(sym, rho, cfg);
    }
    if l + 1 > sym.max_order() {
        return Err(Error::OrderOutOfRange {
            order: l + 1,
            max_order: sym.max_order(),
        });
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("g_deriv requires rho > 0, got {rho}")));
    }
    cfg.validate()?;
    let mut g = vec![0.0; l + 1]; // g[j] = G^{(j)}, g[0] unused here
    for lev in 1..=l {
        let a = g_coeffs(lev);
        let mut recur = 0.0;
        for (j, aj) in a.iter().enumerate() {
            recur += aj * g[j + 1] / rho.powi((lev - (j + 1)) as i32);
        }
        let integral = hankel_integral(sym, rho, lev, cfg)?;
        let sign = if lev % 2 == 0 { 1.0 } else { -1.0 };
        g[lev] = recur + sign * integral / (2.0 * PI * rho.powi(lev as i32));
    }
    Ok(g[l])
}

/// R̃(ρ) = ∫_ρ^1 G(r)/r dr by direct adaptive quadrature over `g_eval`
/// (the slow reference route; tables carry the fast one).
pub fn r_tilde_direct(
    sym: &MultiplierSymbol,
    rho: f64,
    cfg: &HankelQuadratureConfig,
    tol: f64,
) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("r_tilde requires rho > 0, got {rho}")));
    }
    // integrate in x = log r where the integrand is just G(e^x)
    let mut err: Option<Error> = None;
    let mut f = |x: f64| match g_eval(sym, x.exp(), cfg) {
        Ok(v) => v,
        Err(e) => {
            err = Some(e);
            0.0
        }
    };
    let val = adaptive_quad(&mut f, rho.ln(), 0.0, tol, tol)?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(val)
}

/// Log-spaced ρ range of a kernel table.
#[derive(Debug, Clone, Copy)]
pub struct RhoRange {
    pub min: f64,
    pub max: f64,
}

impl Default for RhoRange {
    fn default() -> Self {
        RhoRange {
            min: 1e-8,
            max: 1e3,
        }
    }
}

/// Precomputed G, G', G'', R̃ on a log-ρ grid with monotone piecewise-cubic
/// interpolation. Construction is single-writer; a finished table is
/// immutable (higher derivatives are tabulated lazily behind a lock) and
/// can be shared across threads.
pub struct KernelTable {
    sym: MultiplierSymbol,
    cfg: HankelQuadratureConfig,
    tol: f64,
    range: RhoRange,
    x_grid: Vec<f64>,
    g_values: Vec<f64>,
    g1_values: Vec<f64>,
    g2_values: Vec<f64>,
    rt_values: Vec<f64>,
    p_g: Pchip,
    p_g1: Pchip,
    p_g2: Pchip,
    p_rt: Pchip,
    c0_bar: f64,
    higher: RwLock<BTreeMap<usize, Arc<Pchip>>>,
    near_field: OnceLock<Pchip>,
    extrapolations: AtomicU64,
}

impl std::fmt::Debug for KernelTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelTable")
            .field("sym", self.sym.spec())
            .field("points", &self.x_grid.len())
            .field("range", &self.range)
            .field("c0_bar", &self.c0_bar)
            .finish()
    }
}

fn envelope_scale(sym: &MultiplierSymbol, rho: f64) -> f64 {
    (sym.m(1.0 / rho) + 1.0) / (2.0 * PI)
}

/// Build a kernel table; grid density doubles until the piecewise-cubic
/// interpolant agrees with direct quadrature at all interval midpoints
/// within 10·tol (relative, floored at 1e-4 of the kernel envelope scale).
pub fn build_table(
    sym: &MultiplierSymbol,
    range: RhoRange,
    tol: f64,
    cfg: &HankelQuadratureConfig,
) -> Result<KernelTable> {
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(Error::BadParameter(format!("tol must be in (0, 1e-4], got {tol}")));
    }
    if !(range.min > 0.0 && range.min < 1.0 && range.max > 1.0 && range.max.is_finite()) {
        return Err(Error::BadParameter(
            "rho range must satisfy 0 < min < 1 < max".into(),
        ));
    }
    cfg.validate()?;
    let a = range.min.ln();
    let b = range.max.ln();
    // two log-uniform sections joined exactly at rho = 1 so that R̃(1) = 0
    // lands on a grid node
    let mut n_lo = ((-a) / (b - a) * 48.0).ceil().max(8.0) as usize;
    let mut n_hi = (b / (b - a) * 48.0).ceil().max(8.0) as usize;

    let mut cache: BTreeMap<u64, (f64, f64, f64)> = BTreeMap::new();
    let eval_at = |x: f64, cache: &mut BTreeMap<u64, (f64, f64, f64)>| -> Result<(f64, f64, f64)> {
        let key = x.to_bits();
        if let Some(v) = cache.get(&key) {
            return Ok(*v);
        }
        let rho = x.exp();
        let g = g_eval(sym, rho, cfg)?;
        let g1 = g_deriv(sym, rho, 1, cfg)?;
        let g2 = g_deriv(sym, rho, 2, cfg)?;
        cache.insert(key, (g, g1, g2));
        Ok((g, g1, g2))
    };

    let grid_of = |n_lo: usize, n_hi: usize| -> Vec<f64> {
        let mut xs = Vec::with_capacity(n_lo + n_hi + 1);
        for i in 0..=n_lo {
            xs.push(a - a * i as f64 / n_lo as f64); // a -> 0
        }
        for i in 1..=n_hi {
            xs.push(b * i as f64 / n_hi as f64); // -> b
        }
        // snap the join exactly
        xs[n_lo] = 0.0;
        xs
    };

    loop {
        let xs = grid_of(n_lo, n_hi);
        let mut g = Vec::with_capacity(xs.len());
        let mut g1 = Vec::with_capacity(xs.len());
        let mut g2 = Vec::with_capacity(xs.len());
        for &x in &xs {
            let (v0, v1, v2) = eval_at(x, &mut cache)?;
            g.push(v0);
            g1.push(v1);
            g2.push(v2);
        }
        let p_g = Pchip::new(xs.clone(), g.clone());
        let p_g1 = Pchip::new(xs.clone(), g1.clone());
        let p_g2 = Pchip::new(xs.clone(), g2.clone());

        let mut worst = 0.0f64;
        for w in xs.windows(2) {
            let xm = 0.5 * (w[0] + w[1]);
            let rho = xm.exp();
            let (d0, d1, d2) = eval_at(xm, &mut cache)?;
            let env = envelope_scale(sym, rho);
            // measured against the kernel envelope with an absolute noise
            // floor: beyond the rapid-decay region the direct quadrature
            // itself only resolves values down to its own tolerance
            let err = |interp: f64, direct: f64, env_l: f64| {
                (interp - direct).abs()
                    / (10.0 * tol * direct.abs().max(1e-2 * env_l) + 1e-12 * (1.0 + env_l))
            };
            let e0 = err(p_g.eval(xm), d0, env);
            let e1 = err(p_g1.eval(xm), d1, env / rho);
            let e2 = err(p_g2.eval(xm), d2, env / (rho * rho));
            worst = worst.max(e0).max(e1).max(e2);
        }
        if worst < 1.0 || n_lo + n_hi >= 4096 {
            // cumulative stream kernel in x = log r: R̃(ρ) = ∫_{logρ}^{0} G(e^x) dx
            let mut f_cum = vec![0.0; xs.len()];
            for i in 1..xs.len() {
                let mut f = |x: f64| p_g.eval(x);
                let seg = adaptive_quad(&mut f, xs[i - 1], xs[i], tol * 1e-3, tol * 1e-3)?;
                f_cum[i] = f_cum[i - 1] + seg;
            }
            let join = xs.iter().position(|&x| x == 0.0).expect("join node");
            let f_one = f_cum[join];
            let rt: Vec<f64> = f_cum.iter().map(|f| f_one - f).collect();
            let p_rt = Pchip::new(xs.clone(), rt.clone());

            // empirical crossover: largest rho up to which G/m(1/rho) stays
            // within twice the small-rho ratio band
            let ratios: Vec<f64> = xs
                .iter()
                .zip(&g)
                .map(|(&x, &gv)| gv / sym.m((-x).exp()))
                .collect();
            let decades = ((b - a) / std::f64::consts::LN_10).max(1.0);
            let head_count =
                ((3.0 / decades * xs.len() as f64).ceil() as usize).clamp(4, xs.len());
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &q in &ratios[..head_count] {
                lo = lo.min(q);
                hi = hi.max(q);
            }
            let (band_lo, band_hi) = (0.5 * lo, 2.0 * hi);
            let mut c0_bar = range.max;
            for (i, &q) in ratios.iter().enumerate() {
                if q < band_lo || q > band_hi || !q.is_finite() {
                    c0_bar = xs[i].exp();
                    break;
                }
            }

            return Ok(KernelTable {
                sym: sym.clone(),
                cfg: cfg.clone(),
                tol,
                range,
                x_grid: xs,
                g_values: g,
                g1_values: g1,
                g2_values: g2,
                rt_values: rt,
                p_g,
                p_g1,
                p_g2,
                p_rt,
                c0_bar,
                higher: RwLock::new(BTreeMap::new()),
                near_field: OnceLock::new(),
                extrapolations: AtomicU64::new(0),
            });
        }
        n_lo *= 2;
        n_hi *= 2;
    }
}

impl KernelTable {
    pub fn symbol(&self) -> &MultiplierSymbol {
        &self.sym
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn range(&self) -> RhoRange {
        self.range
    }

    /// Empirical crossover below which G(ρ) tracks m(ρ⁻¹).
    pub fn c0_bar(&self) -> f64 {
        self.c0_bar
    }

    pub fn len(&self) -> usize {
        self.x_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_grid.is_empty()
    }

    /// Number of beyond-range extrapolations served so far.
    pub fn extrapolation_count(&self) -> u64 {
        self.extrapolations.load(Ordering::Relaxed)
    }

    fn check_low(&self, rho: f64) -> Result<()> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Domain(format!("rho = {rho}")));
        }
        if rho < self.range.min {
            return Err(Error::TableRange {
                rho,
                min: self.range.min,
                max: self.range.max,
            });
        }
        Ok(())
    }

    /// Interpolated G(ρ). Beyond ρ_max the kernel integral term has decayed
    /// and G is extrapolated as m(0⁺)/2π (counted; see
    /// [`Self::extrapolation_count`]).
    pub fn g(&self, rho: f64) -> Result<f64> {
        self.check_low(rho)?;
        if rho > self.range.max {
            self.extrapolations.fetch_add(1, Ordering::Relaxed);
            return Ok(self.sym.m_zero() / (2.0 * PI));
        }
        Ok(self.p_g.eval(rho.ln()))
    }

    pub fn g1(&self, rho: f64) -> Result<f64> {
        self.check_low(rho)?;
        if rho > self.range.max {
            self.extrapolations.fetch_add(1, Ordering::Relaxed);
            return Ok(0.0);
        }
        Ok(self.p_g1.eval(rho.ln()))
    }

    pub fn g2(&self, rho: f64) -> Result<f64> {
        self.check_low(rho)?;
        if rho > self.range.max {
            self.extrapolations.fetch_add(1, Ordering::Relaxed);
            return Ok(0.0);
        }
        Ok(self.p_g2.eval(rho.ln()))
    }

    /// Interpolated G^{(l)}; orders above 2 are tabulated on first request.
    pub fn g_l(&self, rho: f64, l: usize) -> Result<f64> {
        match l {
            0 => return self.g(rho),
            1 => return self.g1(rho),
            2 => return self.g2(rho),
            _ => {}
        }
        self.check_low(rho)?;
        if rho > self.range.max {
            self.extrapolations.fetch_add(1, Ordering::Relaxed);
            return Ok(0.0);
        }
        if let Some(p) = self.higher.read().unwrap().get(&l) {
            return Ok(p.eval(rho.ln()));
        }
        let mut vals = Vec::with_capacity(self.x_grid.len());
        for &x in &self.x_grid {
            vals.push(g_deriv(&self.sym, x.exp(), l, &self.cfg)?);
        }
        let p = Arc::new(Pchip::new(self.x_grid.clone(), vals));
        let out = p.eval(rho.ln());
        self.higher.write().unwrap().entry(l).or_insert(p);
        Ok(out)
    }

    /// R̃ continued below the table range with the small-ρ kernel model
    /// G(r) ≈ q·m(1/r), q = G(ρ_min)/m(1/ρ_min):
    /// R̃(ρ) = R̃(ρ_min) + q ∫_{log(1/ρ_min)}^{log(1/ρ)} m(eˢ) ds. Exact for
    /// the constant symbol; for slowly varying symbols the model error is a
    /// fraction of the kernel's own asymptotic spread. Clamped 60 e-folds
    /// below ρ_min (counted as extrapolation).
    pub fn r_tilde_near_field(&self, rho: f64) -> Result<f64> {
        if rho >= self.range.min {
            return self.r_tilde(rho);
        }
        if !(rho > 0.0) {
            return Err(Error::Domain(format!("rho = {rho}")));
        }
        self.extrapolations.fetch_add(1, Ordering::Relaxed);
        let accum = self.near_field.get_or_init(|| {
            // cumulative integral of m(e^s), s measured in e-folds below
            // the table floor
            let s0 = (1.0 / self.range.min).ln();
            let n = 481;
            let smax = 60.0;
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            let mut acc = 0.0;
            let (gl_x, gl_w) = gauss_legendre(8);
            let mut prev = 0.0;
            for i in 0..n {
                let s = smax * i as f64 / (n - 1) as f64;
                if i > 0 {
                    let (a, b) = (prev, s);
                    let c = 0.5 * (a + b);
                    let h = 0.5 * (b - a);
                    let mut seg = 0.0;
                    for (x, w) in gl_x.iter().zip(&gl_w) {
                        seg += w * self.sym.m_tilde(s0 + c + h * x);
                    }
                    acc += seg * h;
                }
                xs.push(s);
                ys.push(acc);
                prev = s;
            }
            Pchip::new(xs, ys)
        });
        let base = self.p_rt.eval(self.range.min.ln());
        let q = self.p_g.eval(self.range.min.ln()) / self.sym.m(1.0 / self.range.min);
        let s = (self.range.min / rho).ln().min(60.0);
        Ok(base + q * accum.eval(s))
    }

    /// R̃(ρ) = ∫_ρ^1 G(r)/r dr with R̃(1) = 0; decreasing in ρ.
    pub fn r_tilde(&self, rho: f64) -> Result<f64> {
        self.check_low(rho)?;
        if rho > self.range.max {
            self.extrapolations.fetch_add(1, Ordering::Relaxed);
            let tail = self.sym.m_zero() / (2.0 * PI) * (rho / self.range.max).ln();
            return Ok(self.rt_values.last().unwrap() - tail);
        }
        Ok(self.p_rt.eval(rho.ln()))
    }

    /// K(x) = x⊥ G(|x|)/|x|², x⊥ = (-x₂, x₁).
    pub fn k_eval(&self, x: Vec2) -> Result<Vec2> {
        let rho = x.norm();
        if rho == 0.0 {
            return Err(Error::Domain("K is singular at x = 0".into()));
        }
        let g = self.g(rho)?;
        Ok(x.perp() * (g / (rho * rho)))
    }

    /// ∇K split into its symmetric (traceless) and antisymmetric parts.
    pub fn grad_k(&self, x: Vec2) -> Result<(Mat2, Mat2)> {
        let rho = x.norm();
        if rho == 0.0 {
            return Err(Error::Domain("grad K is singular at x = 0".into()));
        }
        let g = self.g(rho)?;
        let g1 = self.g1(rho)?;
        let rho2 = rho * rho;
        let sigma = Mat2::new(
            2.0 * x.x * x.y / rho2,
            (x.y * x.y - x.x * x.x) / rho2,
            (x.y * x.y - x.x * x.x) / rho2,
            -2.0 * x.x * x.y / rho2,
        );
        let sym_part = sigma.scale(0.5 * (2.0 * g - rho * g1) / rho2);
        let anti = Mat2::new(0.0, 1.0, -1.0, 0.0).scale(-g1 / (2.0 * rho));
        Ok((sym_part, anti))
    }

    /// CSV rows `rho,G,G1,G2,Rtilde`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "rho,G,G1,G2,Rtilde")?;
        for (i, &x) in self.x_grid.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                x.exp(),
                self.g_values[i],
                self.g1_values[i],
                self.g2_values[i],
                self.rt_values[i]
            )?;
        }
        Ok(())
    }

    /// JSON metadata header for artifact emission.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "symbol": self.sym.spec(),
            "rho_min": self.range.min,
            "rho_max": self.range.max,
            "tol": self.tol,
            "points": self.x_grid.len(),
            "c0_bar": self.c0_bar,
            "digest": self.digest(),
        })
    }

    /// SHA-256 over the tabulated values; identical configs give identical
    /// digests.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for arr in [
            &self.x_grid,
            &self.g_values,
            &self.g1_values,
            &self.g2_values,
            &self.rt_values,
        ] {
            for v in arr.iter() {
                h.update(v.to_le_bytes());
            }
        }
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}


#[cfg(test)]
impl Mat2 {
    fn sub_check_symmetric(&self) -> bool {
        (self.b - self.c).abs() <= 1e-14 * self.frobenius().max(1e-300)
    }
}
