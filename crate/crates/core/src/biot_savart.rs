//! Boundary-integral evaluation of the velocity u = K ∗ ω and its
//! symmetric gradient for multi-patch states, plus a brute-force
//! area-quadrature oracle.
//!
//! The contour form of the velocity is
//!
//!   u(x) = Σ_j a_j ∮ R̃(|x - z_j(η)|) ∂_η z_j(η) dη,
//!
//! evaluated by the periodic trapezoid rule when the target is far from the
//! curve (spectrally accurate for smooth integrands). When the target lies
//! on or near a curve, a window around the close parameter value is removed
//! from the node sum (with Gregory end corrections restoring high order at
//! the cut) and integrated by error-controlled adaptive quadrature on the
//! locally interpolated curve; the R̃ singularity is integrable (log type
//! times m).
//!
//! The symmetric gradient uses the boundary reduction
//!
//!   S(∇u)(x) = -Σ_j a_j sym ∮ K(x - z_j(η)) ⊗ n(η) dS(η),
//!
//! valid off the boundary because the small-circle contribution to the
//! principal value vanishes for the symmetric part.

use crate::contour::{PatchCurve, SimulationState};
use crate::geometry::{Mat2, Vec2};
use crate::kernel::KernelTable;
use crate::quad::{graded_window_quad, gregory_weights};
use crate::{Error, Result};
use rayon::prelude::*;
use std::f64::consts::TAU;

/// Default singular-window half width in node spacings.
pub const DEFAULT_WINDOW_SPACINGS: f64 = 8.0;

/// Absolute tolerance of the window quadrature.
pub const WINDOW_ABS_TOL: f64 = 1e-10;

/// A velocity evaluation request.
#[derive(Debug, Clone, Copy)]
pub struct VelocityQuery {
    pub target: Vec2,
    /// set when the target is node `1` of patch `0` of the state
    pub on_boundary: Option<(usize, usize)>,
    /// singular-window half width (radians of parameter)
    pub quad_window: Option<f64>,
}

struct PreparedCurve {
    /// spectral ∂_ξ z at the nodes
    dz: Vec<Vec2>,
    /// parameter spacing 2π/N
    h: f64,
    /// window half width in nodes
    w_nodes: usize,
    max_spacing: f64,
}

/// Immutable per-state evaluation context: node derivatives and window
/// geometry for every curve.
pub struct VelocityContext {
    curves: Vec<PreparedCurve>,
}

impl VelocityContext {
    pub fn new(state: &SimulationState, window: Option<f64>) -> VelocityContext {
        let curves = state
            .curves
            .iter()
            .map(|c| {
                let n = c.len();
                let h = TAU / n as f64;
                let w_rad = window.unwrap_or(DEFAULT_WINDOW_SPACINGS * h);
                let w_nodes = ((w_rad / h).round() as usize).clamp(2, n / 4);
                let dz = c.spectrum().derivative_at_nodes(1);
                let max_spacing = c.spacing_bounds().1;
                PreparedCurve {
                    dz,
                    h,
                    w_nodes,
                    max_spacing,
                }
            })
            .collect();
        VelocityContext { curves }
    }
}

/// 8-point local Lagrange interpolation of the periodic node polygon:
/// position and parameter derivative at ξ.
fn lagrange8(nodes: &[Vec2], h: f64, xi: f64) -> (Vec2, Vec2) {
    let n = nodes.len();
    let u = xi / h;
    let i0 = u.floor();
    let t = u - i0; // in [0, 1)
    let base = i0 as i64;
    // stencil offsets -3..=4 around the containing interval
    let mut pts = [Vec2::ZERO; 8];
    for (j, p) in pts.iter_mut().enumerate() {
        let idx = (base + j as i64 - 3).rem_euclid(n as i64) as usize;
        *p = nodes[idx];
    }
    // inverse denominators 1/prod_{m!=j}(p_j - p_m) for offsets -3..=4
    const INV_DEN: [f64; 8] = [
        -1.0 / 5040.0,
        1.0 / 720.0,
        -1.0 / 240.0,
        1.0 / 144.0,
        -1.0 / 144.0,
        1.0 / 240.0,
        -1.0 / 720.0,
        1.0 / 5040.0,
    ];
    let offs = [-3.0f64, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0];
    let d: [f64; 8] = std::array::from_fn(|m| t - offs[m]);
    let mut val = Vec2::ZERO;
    let mut der = Vec2::ZERO;
    for j in 0..8 {
        // prefix/suffix products over the 7 factors omitting j
        let mut e = [0.0f64; 7];
        let mut idx = 0;
        for (m, dm) in d.iter().enumerate() {
            if m != j {
                e[idx] = *dm;
                idx += 1;
            }
        }
        let mut pre = [1.0f64; 8];
        for m in 0..7 {
            pre[m + 1] = pre[m] * e[m];
        }
        let mut suf = [1.0f64; 8];
        for m in (0..7).rev() {
            suf[m] = suf[m + 1] * e[m];
        }
        let num = pre[7];
        let mut dnum = 0.0;
        for m in 0..7 {
            dnum += pre[m] * suf[m + 1];
        }
        val += pts[j] * (num * INV_DEN[j]);
        der += pts[j] * (dnum * INV_DEN[j] / h);
    }
    (val, der)
}

/// R̃ continued below the table range (the singular window probes
/// distances down to the graded-mesh floor).
fn stream_kernel(table: &KernelTable, rho: f64) -> Result<f64> {
    table.r_tilde_near_field(rho)
}

/// Contribution of one curve to u(x) when x is far from it.
fn curve_velocity_smooth(
    table: &KernelTable,
    curve: &PatchCurve,
    prep: &PreparedCurve,
    x: Vec2,
) -> Result<Vec2> {
    let mut acc = Vec2::ZERO;
    let mut min_d2 = f64::INFINITY;
    for (z, dz) in curve.nodes.iter().zip(&prep.dz) {
        let d2 = (x - *z).norm2();
        min_d2 = min_d2.min(d2);
        let rt = stream_kernel(table, d2.sqrt())?;
        acc += *dz * rt;
    }
    if min_d2 < 1e-24 {
        return Err(Error::Contact {
            dist: min_d2.sqrt(),
        });
    }
    Ok(acc * (prep.h * curve.strength))
}

/// Contribution of one curve when x sits on (`peak_scale` = 0) or near
/// (`peak_scale` = parameter-space distance) node `center` of it.
fn curve_velocity_windowed(
    table: &KernelTable,
    curve: &PatchCurve,
    prep: &PreparedCurve,
    x: Vec2,
    center: usize,
    peak_scale: f64,
) -> Result<Vec2> {
    let n = curve.len();
    let w = prep.w_nodes;
    let h = prep.h;

    // complement arc: nodes center+w .. center+n-w with Gregory end weights
    let count = n - 2 * w + 1;
    let gw = gregory_weights(count);
    let mut acc = Vec2::ZERO;
    for (k, wgt) in gw.iter().enumerate() {
        let idx = (center + w + k) % n;
        let rho = (x - curve.nodes[idx]).norm();
        if rho < 1e-12 {
            return Err(Error::Contact { dist: rho });
        }
        let rt = stream_kernel(table, rho)?;
        acc += prep.dz[idx] * (rt * wgt);
    }
    acc = acc * h;

    // window integral on the interpolated curve
    let xi_c = center as f64 * h;
    let mut table_err: Option<Error> = None;
    let mut integrand = |eta: f64| -> [f64; 2] {
        let (z, dz) = lagrange8(&curve.nodes, h, eta);
        let rho = (x - z).norm();
        if rho == 0.0 {
            return [0.0, 0.0]; // measure-zero tip of the integrable singularity
        }
        match stream_kernel(table, rho) {
            Ok(rt) => [dz.x * rt, dz.y * rt],
            Err(e) => {
                table_err = Some(e);
                [0.0, 0.0]
            }
        }
    };
    let win = graded_window_quad(
        &mut integrand,
        xi_c,
        w as f64 * h,
        peak_scale,
        WINDOW_ABS_TOL,
    );
    if let Some(e) = table_err {
        return Err(e);
    }
    Ok((acc + Vec2::new(win[0], win[1])) * curve.strength)
}

fn nearest_node(curve: &PatchCurve, x: Vec2) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, z) in curve.nodes.iter().enumerate() {
        let d = (x - *z).norm();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn velocity_impl(
    state: &SimulationState,
    ctx: &VelocityContext,
    x: Vec2,
    on_boundary: Option<(usize, usize)>,
) -> Result<Vec2> {
    let table = &state.table;
    let mut u = Vec2::ZERO;
    for (ci, curve) in state.curves.iter().enumerate() {
        let prep = &ctx.curves[ci];
        let contribution = match on_boundary {
            Some((bc, bi)) if bc == ci => {
                curve_velocity_windowed(table, curve, prep, x, bi, 0.0)?
            }
            _ => {
                let (near_idx, dist) = nearest_node(curve, x);
                if on_boundary.is_none() && dist < 1e-12 {
                    return Err(Error::Contact { dist });
                }
                if dist < 3.0 * prep.max_spacing {
                    // peak width in parameter units sets the graded floor
                    let speed = prep.dz[near_idx].norm().max(1e-300);
                    curve_velocity_windowed(table, curve, prep, x, near_idx, dist / speed)?
                } else {
                    curve_velocity_smooth(table, curve, prep, x)?
                }
            }
        };
        u += contribution;
    }
    Ok(u)
}

/// u(x) for a single query.
pub fn velocity(state: &SimulationState, query: &VelocityQuery) -> Result<Vec2> {
    if let Some(w) = query.quad_window {
        if !(w > 0.0 && w <= std::f64::consts::FRAC_PI_4) {
            return Err(Error::BadParameter(format!(
                "quad_window must lie in (0, pi/4], got {w}"
            )));
        }
    }
    if let Some((ci, ni)) = query.on_boundary {
        if ci >= state.curves.len() || ni >= state.curves[ci].len() {
            return Err(Error::BadParameter("on_boundary index out of range".into()));
        }
    }
    let ctx = VelocityContext::new(state, query.quad_window);
    velocity_impl(state, &ctx, query.target, query.on_boundary)
}

/// Node velocities of all patches, flattened curve by curve: the right-hand
/// side of the contour dynamics equation. Node batches are evaluated in
/// parallel; each node's sums run in a fixed order, so results do not
/// depend on the thread count.
pub fn velocity_nodes_flat(state: &SimulationState, ctx: &VelocityContext) -> Result<Vec<Vec2>> {
    let mut jobs = Vec::new();
    for (ci, c) in state.curves.iter().enumerate() {
        for ni in 0..c.len() {
            jobs.push((ci, ni));
        }
    }
    jobs.par_iter()
        .map(|&(ci, ni)| velocity_impl(state, ctx, state.curves[ci].nodes[ni], Some((ci, ni))))
        .collect()
}

/// Velocities at passive points (tracers).
pub fn velocity_tracers(
    state: &SimulationState,
    ctx: &VelocityContext,
    points: &[Vec2],
) -> Result<Vec<Vec2>> {
    points
        .par_iter()
        .map(|&p| velocity_impl(state, ctx, p, None))
        .collect()
}

/// Per-curve node velocities (convenience wrapper).
pub fn velocity_nodes(state: &SimulationState) -> Result<Vec<Vec<Vec2>>> {
    let ctx = VelocityContext::new(state, None);
    let flat = velocity_nodes_flat(state, &ctx)?;
    let mut out = Vec::new();
    let mut k = 0;
    for c in &state.curves {
        out.push(flat[k..k + c.len()].to_vec());
        k += c.len();
    }
    Ok(out)
}

/// S(∇u)(x): symmetric, trace-projected. Requires x off every boundary by
/// at least 1e-10.
pub fn grad_u_sym(state: &SimulationState, x: Vec2) -> Result<Mat2> {
    let ctx = VelocityContext::new(state, None);
    grad_u_sym_with_ctx(state, &ctx, x)
}

pub fn grad_u_sym_with_ctx(
    state: &SimulationState,
    ctx: &VelocityContext,
    x: Vec2,
) -> Result<Mat2> {
    let table = &state.table;
    let mut total = Mat2::ZERO;
    for (ci, curve) in state.curves.iter().enumerate() {
        let prep = &ctx.curves[ci];
        let (near_idx, dist) = nearest_node(curve, x);
        if dist < 1e-10 {
            return Err(Error::Contact { dist });
        }
        let n = curve.len();
        let h = prep.h;
        let mut b = Mat2::ZERO;
        if dist >= 3.0 * prep.max_spacing {
            for (z, dz) in curve.nodes.iter().zip(&prep.dz) {
                let k = table.k_eval(x - *z)?;
                b = b.add(Mat2::outer(k, dz.perp_cw()).scale(h));
            }
        } else {
            let w = prep.w_nodes;
            let count = n - 2 * w + 1;
            let gw = gregory_weights(count);
            for (k, wgt) in gw.iter().enumerate() {
                let idx = (near_idx + w + k) % n;
                let kv = table.k_eval(x - curve.nodes[idx])?;
                b = b.add(Mat2::outer(kv, prep.dz[idx].perp_cw()).scale(h * wgt));
            }
            let xi_c = near_idx as f64 * h;
            let mut table_err: Option<Error> = None;
            let mut integrand = |eta: f64| -> [f64; 4] {
                let (z, dz) = lagrange8(&curve.nodes, h, eta);
                match table.k_eval(x - z) {
                    Ok(kv) => {
                        let m = Mat2::outer(kv, dz.perp_cw());
                        [m.a, m.b, m.c, m.d]
                    }
                    Err(e) => {
                        table_err = Some(e);
                        [0.0; 4]
                    }
                }
            };
            let speed = prep.dz[near_idx].norm().max(1e-300);
            let win = graded_window_quad(
                &mut integrand,
                xi_c,
                w as f64 * h,
                dist / speed,
                WINDOW_ABS_TOL,
            );
            if let Some(e) = table_err {
                return Err(e);
            }
            b = b.add(Mat2::new(win[0], win[1], win[2], win[3]));
        }
        total = total.add(b.sym().scale(-curve.strength));
    }
    Ok(total.deviatoric())
}

/// Raw trace of the boundary-integral gradient before projection (a
/// consistency diagnostic; analytically zero).
pub fn grad_u_trace_defect(state: &SimulationState, x: Vec2) -> Result<f64> {
    let ctx = VelocityContext::new(state, None);
    let table = &state.table;
    let mut tr = 0.0;
    for (ci, curve) in state.curves.iter().enumerate() {
        let prep = &ctx.curves[ci];
        let h = prep.h;
        let mut b = Mat2::ZERO;
        for (z, dz) in curve.nodes.iter().zip(&prep.dz) {
            let k = table.k_eval(x - *z)?;
            b = b.add(Mat2::outer(k, dz.perp_cw()).scale(h));
        }
        tr += -curve.strength * b.trace();
    }
    Ok(tr)
}

/// Outward volume flux ∮ u·n ds around each patch boundary (zero for an
/// incompressible field).
pub fn boundary_flux(state: &SimulationState) -> Result<Vec<f64>> {
    let ctx = VelocityContext::new(state, None);
    let flat = velocity_nodes_flat(state, &ctx)?;
    let mut out = Vec::new();
    let mut k = 0;
    for (ci, c) in state.curves.iter().enumerate() {
        let h = ctx.curves[ci].h;
        let mut flux = 0.0;
        for ni in 0..c.len() {
            flux += flat[k + ni].dot(ctx.curves[ci].dz[ni].perp_cw()) * h;
        }
        out.push(flux);
        k += c.len();
    }
    Ok(out)
}

/// Direct 2D midpoint quadrature of ∫_D K(x-y) dy over a bounding-box grid
/// with inside testing. O(resolution²); a validation oracle, independent of
/// the contour reduction.
pub fn velocity_oracle(state: &SimulationState, x: Vec2, resolution: usize) -> Result<Vec2> {
    if resolution < 8 {
        return Err(Error::BadParameter("resolution must be >= 8".into()));
    }
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in &state.curves {
        for p in &c.nodes {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
    }
    let pad = 1e-9 * (hi - lo).norm().max(1.0);
    lo = lo - Vec2::new(pad, pad);
    hi = hi + Vec2::new(pad, pad);
    let dx = (hi.x - lo.x) / resolution as f64;
    let dy = (hi.y - lo.y) / resolution as f64;
    let cell = dx * dy;
    let table = &state.table;

    let rows: Vec<Vec2> = (0..resolution)
        .into_par_iter()
        .map(|iy| {
            let yc = lo.y + (iy as f64 + 0.5) * dy;
            let mut row_sum = Vec2::ZERO;
            for c in &state.curves {
                // crossings of the horizontal line with the polygon
                let n = c.len();
                let mut crossings: Vec<f64> = Vec::new();
                for i in 0..n {
                    let a = c.nodes[i];
                    let b = c.nodes[(i + 1) % n];
                    if (a.y > yc) != (b.y > yc) {
                        crossings.push(a.x + (yc - a.y) / (b.y - a.y) * (b.x - a.x));
                    }
                }
                crossings.sort_by(|p, q| p.partial_cmp(q).unwrap());
                for pair in crossings.chunks(2) {
                    if pair.len() < 2 {
                        continue;
                    }
                    let ix_lo = (((pair[0] - lo.x) / dx - 0.5).ceil().max(0.0)) as usize;
                    let ix_hi_f = (pair[1] - lo.x) / dx - 0.5;
                    if ix_hi_f < 0.0 {
                        continue;
                    }
                    let ix_hi = (ix_hi_f.floor() as usize).min(resolution - 1);
                    for ix in ix_lo..=ix_hi.min(resolution - 1) {
                        let yq = Vec2::new(lo.x + (ix as f64 + 0.5) * dx, yc);
                        if let Ok(k) = table.k_eval(x - yq) {
                            row_sum += k * c.strength;
                        }
                    }
                }
            }
            row_sum
        })
        .collect();
    let mut u = Vec2::ZERO;
    for r in rows {
        u += r;
    }
    Ok(u * cell)
}
