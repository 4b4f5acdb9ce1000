//! Patch boundaries as periodically parameterized closed curves, RK4 time
//! stepping of the contour dynamics, and arc-length reparameterization.

use crate::biot_savart::{self, VelocityContext};
use crate::geometry::{self, Vec2};
use crate::kernel::KernelTable;
use crate::osgood::OsgoodProfile;
use crate::spectral::CurveSpectrum;
use crate::{Error, Result};
use std::f64::consts::TAU;
use std::sync::Arc;

/// A closed, counterclockwise patch boundary sampled at uniform parameter
/// values ξ_i = 2π i / N.
#[derive(Debug, Clone)]
pub struct PatchCurve {
    pub id: usize,
    /// vorticity amplitude a_j of the patch
    pub strength: f64,
    pub nodes: Vec<Vec2>,
}

impl PatchCurve {
    /// Wraps a node polygon as a patch boundary; reverses the orientation
    /// if necessary so the signed area is positive.
    pub fn new(id: usize, strength: f64, mut nodes: Vec<Vec2>) -> Result<PatchCurve> {
        if nodes.len() < 8 {
            return Err(Error::DegenerateCurve(format!(
                "need at least 8 nodes, got {}",
                nodes.len()
            )));
        }
        if !strength.is_finite() || strength == 0.0 {
            return Err(Error::BadParameter(format!("strength = {strength}")));
        }
        if nodes.iter().any(|p| !p.is_finite()) {
            return Err(Error::DegenerateCurve("non-finite node".into()));
        }
        if geometry::signed_area(&nodes) < 0.0 {
            nodes.reverse();
        }
        let curve = PatchCurve {
            id,
            strength,
            nodes,
        };
        curve.validate(true)?;
        Ok(curve)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Area enclosed by the trigonometric interpolant of the nodes,
    /// ½∮(x y' - y x') dξ with spectral derivatives. The node sum is exact
    /// for the interpolant, so the value is invariant under resampling of
    /// the same underlying curve (unlike the shoelace area of the node
    /// polygon, which carries an O(N⁻²) inscription defect).
    pub fn area(&self) -> f64 {
        let dz = self.spectrum().derivative_at_nodes(1);
        let h = TAU / self.nodes.len() as f64;
        let mut acc = 0.0;
        for (z, d) in self.nodes.iter().zip(&dz) {
            acc += z.x * d.y - z.y * d.x;
        }
        0.5 * h * acc
    }

    /// Shoelace area of the node polygon.
    pub fn polygon_area(&self) -> f64 {
        geometry::signed_area(&self.nodes)
    }

    pub fn perimeter(&self) -> f64 {
        geometry::perimeter(&self.nodes)
    }

    pub fn spacing_bounds(&self) -> (f64, f64) {
        let n = self.nodes.len();
        let mut min = f64::INFINITY;
        let mut max: f64 = 0.0;
        for i in 0..n {
            let d = self.nodes[i].dist(self.nodes[(i + 1) % n]);
            min = min.min(d);
            max = max.max(d);
        }
        (min, max)
    }

    pub fn spectrum(&self) -> CurveSpectrum {
        CurveSpectrum::from_nodes(&self.nodes)
    }

    /// Invariant checks. `full` includes the O(N²) self-intersection scan.
    pub fn validate(&self, full: bool) -> Result<()> {
        if self.area() <= 0.0 {
            return Err(Error::DegenerateCurve(format!(
                "patch {} has non-positive area",
                self.id
            )));
        }
        let (min_sp, max_sp) = self.spacing_bounds();
        if min_sp <= 0.0 {
            return Err(Error::DegenerateCurve(format!(
                "patch {} has duplicate adjacent nodes",
                self.id
            )));
        }
        if full && geometry::is_self_intersecting(&self.nodes) {
            return Err(Error::SelfIntersection { patch_id: self.id });
        }
        let _ = max_sp;
        Ok(())
    }

    /// Spacing uniformity; below 0.1 the curve needs redistribution.
    pub fn spacing_ratio(&self) -> f64 {
        let (min_sp, max_sp) = self.spacing_bounds();
        min_sp / max_sp
    }
}

/// Uniformly sampled circle.
pub fn circle(id: usize, strength: f64, center: Vec2, radius: f64, n: usize) -> Result<PatchCurve> {
    let nodes = (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            center + Vec2::new(radius * t.cos(), radius * t.sin())
        })
        .collect();
    PatchCurve::new(id, strength, nodes)
}

/// Ellipse with semi-axes (a, b), rotated by `angle`.
pub fn ellipse(
    id: usize,
    strength: f64,
    center: Vec2,
    a: f64,
    b: f64,
    angle: f64,
    n: usize,
) -> Result<PatchCurve> {
    let (ca, sa) = (angle.cos(), angle.sin());
    let nodes = (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            let p = Vec2::new(a * t.cos(), b * t.sin());
            center + Vec2::new(ca * p.x - sa * p.y, sa * p.x + ca * p.y)
        })
        .collect();
    PatchCurve::new(id, strength, nodes)
}

/// Radial Fourier perturbation of a circle: r(θ) = r₀(1 + Σ c_k cos kθ + s_k sin kθ).
pub fn fourier_star(
    id: usize,
    strength: f64,
    center: Vec2,
    base_radius: f64,
    modes: &[(usize, f64, f64)],
    n: usize,
) -> Result<PatchCurve> {
    let nodes = (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            let mut r = 1.0;
            for &(k, c, s) in modes {
                r += c * (k as f64 * t).cos() + s * (k as f64 * t).sin();
            }
            center + Vec2::new(base_radius * r * t.cos(), base_radius * r * t.sin())
        })
        .collect();
    PatchCurve::new(id, strength, nodes)
}

/// The multi-patch configuration at a moment in time.
pub struct SimulationState {
    pub curves: Vec<PatchCurve>,
    /// passive tracers advected with the flow (the discrete flow map)
    pub tracers: Vec<Vec2>,
    pub t: f64,
    pub table: Arc<KernelTable>,
    pub profile: Arc<OsgoodProfile>,
}

impl std::fmt::Debug for SimulationState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimulationState")
            .field("t", &self.t)
            .field("curves", &self.curves.len())
            .field("tracers", &self.tracers.len())
            .finish()
    }
}

impl SimulationState {
    pub fn new(
        table: Arc<KernelTable>,
        profile: Arc<OsgoodProfile>,
        curves: Vec<PatchCurve>,
        tracers: Vec<Vec2>,
    ) -> Result<SimulationState> {
        let st = SimulationState {
            curves,
            tracers,
            t: 0.0,
            table,
            profile,
        };
        if st.curves.len() > 1 && st.min_inter_patch_distance() <= 0.0 {
            return Err(Error::Config("patches must be pairwise disjoint".into()));
        }
        Ok(st)
    }

    pub fn min_inter_patch_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.curves.len() {
            for j in i + 1..self.curves.len() {
                best = best.min(geometry::polygon_min_distance(
                    &self.curves[i].nodes,
                    &self.curves[j].nodes,
                ));
            }
        }
        best
    }

    fn clone_shape(&self) -> SimulationState {
        SimulationState {
            curves: self.curves.clone(),
            tracers: self.tracers.clone(),
            t: self.t,
            table: Arc::clone(&self.table),
            profile: Arc::clone(&self.profile),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepConfig {
    pub dt: f64,
    pub t_end: f64,
    /// reparameterize every this many steps (0 disables)
    pub reparam_every: usize,
    pub target_nodes: usize,
    /// singular-window half width in radians; None picks 8 node spacings
    pub quad_window: Option<f64>,
    pub snapshot_every: usize,
    pub diagnostics_every: usize,
    /// halt when the inter-patch distance falls below this multiple of the
    /// largest node spacing
    pub contact_factor: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            dt: 1e-3,
            t_end: 1.0,
            reparam_every: 20,
            target_nodes: 256,
            quad_window: None,
            snapshot_every: 0,
            diagnostics_every: 10,
            contact_factor: 5.0,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.target_nodes < 64 {
            return Err(Error::Config(format!(
                "target_nodes must be >= 64, got {}",
                self.target_nodes
            )));
        }
        if let Some(w) = self.quad_window {
            if !(w > 0.0 && w <= std::f64::consts::FRAC_PI_4) {
                return Err(Error::Config(format!(
                    "quad_window must lie in (0, pi/4], got {w}"
                )));
            }
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::Config("t_end must be nonnegative".into()));
        }
        Ok(())
    }
}

fn gather(state: &SimulationState) -> Vec<Vec2> {
    let mut v = Vec::new();
    for c in &state.curves {
        v.extend_from_slice(&c.nodes);
    }
    v.extend_from_slice(&state.tracers);
    v
}

fn scatter(state: &mut SimulationState, flat: &[Vec2]) {
    let mut k = 0;
    for c in &mut state.curves {
        let n = c.nodes.len();
        c.nodes.copy_from_slice(&flat[k..k + n]);
        k += n;
    }
    let n = state.tracers.len();
    state.tracers.copy_from_slice(&flat[k..k + n]);
}

fn rhs(state: &SimulationState, window: Option<f64>) -> Result<Vec<Vec2>> {
    let ctx = VelocityContext::new(state, window);
    let mut out = biot_savart::velocity_nodes_flat(state, &ctx)?;
    out.extend(biot_savart::velocity_tracers(state, &ctx, &state.tracers)?);
    Ok(out)
}

/// One classical RK4 step applied to every node and tracer simultaneously.
pub fn step(state: &mut SimulationState, dt: f64, window: Option<f64>) -> Result<()> {
    let y0 = gather(state);
    let k1 = rhs(state, window)?;
    let mut work = state.clone_shape();

    let advance = |y0: &[Vec2], k: &[Vec2], h: f64| -> Vec<Vec2> {
        y0.iter().zip(k).map(|(y, v)| *y + *v * h).collect()
    };

    scatter(&mut work, &advance(&y0, &k1, 0.5 * dt));
    work.t = state.t + 0.5 * dt;
    let k2 = rhs(&work, window)?;

    scatter(&mut work, &advance(&y0, &k2, 0.5 * dt));
    let k3 = rhs(&work, window)?;

    scatter(&mut work, &advance(&y0, &k3, dt));
    work.t = state.t + dt;
    let k4 = rhs(&work, window)?;

    let combined: Vec<Vec2> = (0..y0.len())
        .map(|i| y0[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0))
        .collect();
    scatter(state, &combined);
    state.t += dt;

    for c in &state.curves {
        c.validate(false)?;
    }
    Ok(())
}

/// Resample a closed curve to `target_nodes` uniform arc-length nodes using
/// trigonometric interpolation of the periodic node data.
pub fn reparameterize(curve: &PatchCurve, target_nodes: usize) -> Result<PatchCurve> {
    if target_nodes < 8 {
        return Err(Error::BadParameter("target_nodes must be >= 8".into()));
    }
    let spectrum = curve.spectrum();
    let n = curve.nodes.len();
    let fine = 4 * n.max(target_nodes);
    let speeds: Vec<f64> = spectrum
        .derivative_padded(1, fine)
        .iter()
        .map(|d| d.norm())
        .collect();
    if speeds.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(Error::DegenerateCurve(
            "vanishing parameterization speed".into(),
        ));
    }
    // cumulative arc length on the fine grid
    let hf = TAU / fine as f64;
    let mut s_cum = Vec::with_capacity(fine + 1);
    let mut acc = 0.0;
    s_cum.push(0.0);
    for i in 0..fine {
        let s_next = speeds[(i + 1) % fine];
        acc += 0.5 * (speeds[i] + s_next) * hf;
        s_cum.push(acc);
    }
    let total = acc;

    let mut nodes = Vec::with_capacity(target_nodes);
    for k in 0..target_nodes {
        let target = total * k as f64 / target_nodes as f64;
        // bracket on the fine grid, then Newton with the spectral speed
        let idx = s_cum.partition_point(|&s| s < target).max(1) - 1;
        let mut xi = hf
            * (idx as f64
                + ((target - s_cum[idx]) / (s_cum[idx + 1] - s_cum[idx])).clamp(0.0, 1.0));
        for _ in 0..4 {
            // s(xi) by local correction from the bracket anchor
            let base = xi / hf;
            let i0 = (base.floor() as usize).min(fine - 1);
            let frac = xi - i0 as f64 * hf;
            let s_here = s_cum[i0]
                + 0.5 * frac * (speeds[i0] + spectrum.eval_deriv(xi).norm());
            let speed = spectrum.eval_deriv(xi).norm();
            let dxi = (target - s_here) / speed;
            xi += dxi;
            if dxi.abs() < 1e-12 {
                break;
            }
        }
        nodes.push(spectrum.eval(xi));
    }
    let out = PatchCurve::new(curve.id, curve.strength, nodes)?;
    let drift = (out.area() - curve.area()).abs() / curve.area();
    if drift > 1e-8 {
        return Err(Error::DegenerateCurve(format!(
            "area drift {drift:.3e} after resampling patch {}",
            curve.id
        )));
    }
    Ok(out)
}

/// Why a run stopped.
#[derive(Debug)]
pub enum RunHalt {
    Finished,
    /// solver stopped early; the final snapshot was still emitted
    Halted(Error),
}

#[derive(Debug)]
pub struct RunSummary {
    pub steps: usize,
    pub final_t: f64,
    pub halt: RunHalt,
}

/// Advance the state to `t_end`, invoking the observers at their cadences.
/// `on_snapshot(state, index)` and `on_diagnostics(state)` both see the
/// initial state before the first step.
pub fn run(
    state: &mut SimulationState,
    cfg: &StepConfig,
    mut on_snapshot: impl FnMut(&SimulationState, usize) -> Result<()>,
    mut on_diagnostics: impl FnMut(&SimulationState) -> Result<()>,
) -> Result<RunSummary> {
    cfg.validate()?;
    let n_steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut snapshot_idx = 0;
    on_snapshot(state, snapshot_idx)?;
    snapshot_idx += 1;
    on_diagnostics(state)?;

    let mut halted: Option<Error> = None;
    let mut steps_done = 0;
    for istep in 1..=n_steps {
        if let Err(e) = step(state, cfg.dt, cfg.quad_window) {
            halted = Some(e);
            break;
        }
        steps_done = istep;

        // contact guard: boundary-integral quadrature degrades when patches
        // come within a few node spacings of each other
        if state.curves.len() > 1 {
            let max_sp = state
                .curves
                .iter()
                .map(|c| c.spacing_bounds().1)
                .fold(0.0f64, f64::max);
            let dmin = state.min_inter_patch_distance();
            if dmin < cfg.contact_factor * max_sp {
                halted = Some(Error::PatchContact {
                    dist: dmin,
                    threshold: cfg.contact_factor * max_sp,
                });
                break;
            }
        }

        if cfg.reparam_every > 0 && istep % cfg.reparam_every == 0 {
            let mut halt_err = None;
            for c in &mut state.curves {
                match reparameterize(c, cfg.target_nodes) {
                    Ok(nc) => *c = nc,
                    Err(e) => {
                        halt_err = Some(e);
                        break;
                    }
                }
                if let Err(e) = c.validate(true) {
                    halt_err = Some(e);
                    break;
                }
            }
            if let Some(e) = halt_err {
                halted = Some(e);
                break;
            }
        }

        if cfg.diagnostics_every > 0 && istep % cfg.diagnostics_every == 0 {
            on_diagnostics(state)?;
        }
        if cfg.snapshot_every > 0 && istep % cfg.snapshot_every == 0 {
            on_snapshot(state, snapshot_idx)?;
            snapshot_idx += 1;
        }
    }

    // final (or halt-diagnostic) snapshot; a zero-length run already
    // emitted its only state
    if steps_done > 0 || halted.is_some() {
        on_snapshot(state, snapshot_idx)?;
    }
    Ok(RunSummary {
        steps: steps_done,
        final_t: state.t,
        halt: match halted {
            None => RunHalt::Finished,
            Some(e) => RunHalt::Halted(e),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_table, HankelQuadratureConfig, RhoRange};
    use crate::multiplier::{MultiplierSymbol, SymbolSpec};
    use approx::assert_relative_eq;

    fn euler_state(curves: Vec<PatchCurve>, tracers: Vec<Vec2>) -> SimulationState {
        let sym = MultiplierSymbol::new(SymbolSpec::Euler).unwrap();
        let table = Arc::new(
            build_table(&sym, RhoRange::default(), 1e-6, &HankelQuadratureConfig::default())
                .unwrap(),
        );
        let profile = Arc::new(OsgoodProfile::new(&sym).unwrap());
        SimulationState::new(table, profile, curves, tracers).unwrap()
    }

    #[test]
    fn curve_orientation_normalized() {
        let mut nodes: Vec<Vec2> = (0..64)
            .map(|i| {
                let t = TAU * i as f64 / 64.0;
                Vec2::new(t.cos(), t.sin())
            })
            .collect();
        nodes.reverse(); // clockwise input
        let c = PatchCurve::new(0, 1.0, nodes).unwrap();
        assert!(c.area() > 0.0);
    }

    #[test]
    fn reparameterize_circle_is_identity() {
        let c = circle(0, 1.0, Vec2::ZERO, 1.0, 128).unwrap();
        let r = reparameterize(&c, 128).unwrap();
        for (a, b) in c.nodes.iter().zip(&r.nodes) {
            assert!(a.dist(*b) < 1e-12);
        }
    }

    #[test]
    fn reparameterize_ellipse_preserves_area() {
        let c = ellipse(0, 1.0, Vec2::ZERO, 2.0, 1.0, 0.3, 256).unwrap();
        let r = reparameterize(&c, 512).unwrap();
        assert_eq!(r.len(), 512);
        assert_relative_eq!(r.area(), c.area(), max_relative = 1e-9);
        // arc-length uniformity within 1%
        assert!(r.spacing_ratio() > 0.99, "ratio {}", r.spacing_ratio());
    }

    #[test]
    fn reparameterize_declusters() {
        // strongly clustered parameterization of the unit circle
        let n = 256;
        let nodes: Vec<Vec2> = (0..n)
            .map(|i| {
                let s = TAU * i as f64 / n as f64;
                let t = s - 0.7 * s.sin(); // smooth non-uniform angle map
                Vec2::new(t.cos(), t.sin())
            })
            .collect();
        let c = PatchCurve::new(0, 1.0, nodes).unwrap();
        assert!(c.spacing_ratio() < 0.8);
        let r = reparameterize(&c, 256).unwrap();
        assert!(r.spacing_ratio() > 0.99, "ratio {}", r.spacing_ratio());
        assert_relative_eq!(r.area(), std::f64::consts::PI, max_relative = 1e-4);
    }

    #[test]
    fn zero_length_run_emits_single_snapshot() {
        let mut st = euler_state(
            vec![circle(0, 1.0, Vec2::ZERO, 1.0, 64).unwrap()],
            vec![],
        );
        let cfg = StepConfig {
            t_end: 0.0,
            ..Default::default()
        };
        let mut snaps = 0;
        let summary = run(&mut st, &cfg, |_, _| {
            snaps += 1;
            Ok(())
        }, |_| Ok(()))
        .unwrap();
        assert_eq!(summary.steps, 0);
        assert_eq!(snaps, 1);
        assert!(matches!(summary.halt, RunHalt::Finished));
    }
}
