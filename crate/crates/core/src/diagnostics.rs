//! Boundary-regularity diagnostics on discrete curves and checks of the
//! theoretical envelope bounds.
//!
//! The tangential field along a patch boundary is W = ∂_ξ z; higher
//! ξ-derivatives of the curve stand in for the striated derivatives of W,
//! so boundary regularity is measured directly by discrete Hölder
//! seminorms of ∂_ξ^k z (ambient chord distance in the denominator) and by
//! the non-degeneracy ratio Δ_γ = ‖∂_ξ z‖_{Ċγ}/min|∂_ξ z| + 1.
//!
//! The geometric defect at a near-boundary point x measures how far the
//! set of directions into the patch at radius ρ deviates from the
//! half-circle against the inward normal at the nearest boundary point;
//! the comparison bound is 2π((1+2^γ) d_x/ρ + 2^γ (ρ/δ_γ)^γ) with
//! δ_γ = Δ_γ^{-1/γ}.

use crate::contour::{PatchCurve, SimulationState};
use crate::geometry::{self, Vec2};
use crate::osgood::{envelope_flow_bound, envelope_separation, EnvelopeBound, OsgoodProfile};
use crate::{biot_savart, Error, Result};
use serde::Serialize;
use std::f64::consts::TAU;
#[cfg(test)]
use std::f64::consts::PI;

/// Discrete Hölder seminorm of ∂_ξ^k z: max over node pairs of
/// |∂^k z(ξ_i) - ∂^k z(ξ_j)| / |z_i - z_j|^γ.
pub fn holder_seminorm(curve: &PatchCurve, k: usize, gamma: f64) -> Result<f64> {
    if k < 1 {
        return Err(Error::BadParameter("derivative order k must be >= 1".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::BadParameter(format!(
            "gamma must lie in (0,1), got {gamma}"
        )));
    }
    let n = curve.len();
    if n < 4 * k + 4 {
        return Err(Error::BadParameter(format!(
            "need at least {} nodes for order {k}",
            4 * k + 4
        )));
    }
    let d = curve.spectrum().derivative_at_nodes(k);
    let mut sup = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let chord = curve.nodes[i].dist(curve.nodes[j]);
            if chord < 1e-15 {
                return Err(Error::DegenerateCurve(format!(
                    "duplicate nodes {i} and {j}"
                )));
            }
            let num = (d[i] - d[j]).norm();
            let v = num / chord.powf(gamma);
            if v > sup {
                sup = v;
            }
        }
    }
    Ok(sup)
}

/// min_i |∂_ξ z(ξ_i)|: the discrete |W|_inf.
pub fn w_inf(curve: &PatchCurve) -> f64 {
    curve
        .spectrum()
        .derivative_at_nodes(1)
        .iter()
        .map(|v| v.norm())
        .fold(f64::INFINITY, f64::min)
}

/// Δ_γ = ‖∂_ξ z‖_{Ċγ} / |W|_inf + 1.
pub fn delta_gamma(curve: &PatchCurve, gamma: f64) -> Result<f64> {
    let wi = w_inf(curve);
    if wi <= 0.0 {
        return Err(Error::DegenerateCurve("vanishing tangent".into()));
    }
    Ok(holder_seminorm(curve, 1, gamma)? / wi + 1.0)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DefectResult {
    /// angular measure of the symmetric difference (radians)
    pub defect: f64,
    /// distance from the probe point to the boundary
    pub d_x: f64,
    /// nearest-point selection was ambiguous (tie broken by lowest angle)
    pub ambiguous: bool,
}

/// Angular defect ℋ¹(𝒮_ρ Δ Σ): directions at radius ρ that lie inside
/// the patch, against the half-circle of the inward normal at the nearest
/// boundary point. Dense midpoint sampling of the inside predicate.
pub fn geometric_defect(
    curve: &PatchCurve,
    x: Vec2,
    rho: f64,
    angular_samples: usize,
) -> Result<DefectResult> {
    if !(rho > 0.0) {
        return Err(Error::BadParameter(format!("rho must be positive, got {rho}")));
    }
    if angular_samples < 16 {
        return Err(Error::BadParameter("need at least 16 angular samples".into()));
    }
    let (d_x, nearest, ambiguous) = geometry::project_to_polygon(x, &curve.nodes);
    // inward normal at the nearest boundary point: the patch interior lies
    // on the side of x iff x itself is inside
    let dir = (x - nearest).normalize();
    let inward = if geometry::point_in_polygon(x, &curve.nodes) {
        dir
    } else {
        -dir
    };
    let mut mismatch = 0usize;
    for i in 0..angular_samples {
        let theta = TAU * (i as f64 + 0.5) / angular_samples as f64;
        let z = Vec2::new(theta.cos(), theta.sin());
        let in_patch = geometry::point_in_polygon(x + z * rho, &curve.nodes);
        let in_half = inward.dot(z) >= 0.0;
        if in_patch != in_half {
            mismatch += 1;
        }
    }
    Ok(DefectResult {
        defect: TAU * mismatch as f64 / angular_samples as f64,
        d_x,
        ambiguous,
    })
}

/// Right-hand side of the geometric defect bound.
pub fn defect_bound(d_x: f64, rho: f64, gamma: f64, delta_gamma_value: f64) -> f64 {
    let small_delta = delta_gamma_value.powf(-1.0 / gamma);
    TAU * ((1.0 + 2f64.powf(gamma)) * d_x / rho
        + 2f64.powf(gamma) * (rho / small_delta).powf(gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnvelopeKind {
    /// two-sided particle-pair envelope
    FlowPair,
    /// one-sided patch-separation lower bound
    Separation,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeCheck {
    pub kind: EnvelopeKind,
    /// (t, value) series that was checked
    pub series: Vec<(f64, f64)>,
    /// lower envelope evaluated at the fitted constant
    pub envelope: Vec<(f64, f64)>,
    pub fitted_c: f64,
    pub pass: bool,
    /// fitted_c at doubled resolution over fitted_c, when supplied
    pub refinement_ratio: Option<f64>,
}

const C_MAX: f64 = 1e6;

fn dominated(
    profile: &OsgoodProfile,
    kind: EnvelopeKind,
    base: f64,
    series: &[(f64, f64)],
    c: f64,
) -> Result<bool> {
    // slack for the profile round-trip rounding (the envelope at t = 0 is
    // the identity only up to the inverse solve tolerance)
    const SLACK: f64 = 1e-8;
    for &(t, v) in series {
        match kind {
            EnvelopeKind::Separation => {
                match envelope_separation(profile, base, t, c)? {
                    EnvelopeBound::Value(lower) => {
                        if v < lower * (1.0 - SLACK) {
                            return Ok(false);
                        }
                    }
                    // beyond the validity horizon the bound is vacuous
                    EnvelopeBound::BeyondHorizon { .. } => {}
                }
            }
            EnvelopeKind::FlowPair => {
                let (lo, hi) = envelope_flow_bound(profile, base, t, c)?;
                if let EnvelopeBound::Value(l) = lo {
                    if v < l * (1.0 - SLACK) {
                        return Ok(false);
                    }
                }
                if let EnvelopeBound::Value(h) = hi {
                    if v > h * (1.0 + SLACK) {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Fit the smallest envelope constant C that dominates the series
/// (bisection; `pass = false` when no C up to 1e6 works). `base` is the
/// initial separation (FlowPair) or initial patch distance d₀ (Separation).
pub fn envelope_check(
    series: &[(f64, f64)],
    profile: &OsgoodProfile,
    kind: EnvelopeKind,
    base: f64,
) -> Result<EnvelopeCheck> {
    if series.is_empty() {
        return Err(Error::BadParameter("empty series".into()));
    }
    let mut out = EnvelopeCheck {
        kind,
        series: series.to_vec(),
        envelope: Vec::new(),
        fitted_c: f64::INFINITY,
        pass: false,
        refinement_ratio: None,
    };
    if !dominated(profile, kind, base, series, C_MAX)? {
        return Ok(out);
    }
    let mut lo = 1e-12;
    let mut hi = C_MAX;
    if dominated(profile, kind, base, series, lo)? {
        hi = lo;
    } else {
        while hi / lo > 1.001 {
            let mid = (lo * hi).sqrt();
            if dominated(profile, kind, base, series, mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    out.fitted_c = hi;
    out.pass = true;
    out.envelope = series
        .iter()
        .map(|&(t, _)| {
            let v = match kind {
                EnvelopeKind::Separation => envelope_separation(profile, base, t, hi)
                    .ok()
                    .and_then(|b| b.value())
                    .unwrap_or(0.0),
                EnvelopeKind::FlowPair => envelope_flow_bound(profile, base, t, hi)
                    .ok()
                    .and_then(|(l, _)| l.value())
                    .unwrap_or(0.0),
            };
            (t, v)
        })
        .collect();
    Ok(out)
}

/// Stability indicator (c₂ + ε)/(c₁ + ε) for fitted constants of a base
/// and a refined run.
pub fn refinement_ratio(c1: f64, c2: f64) -> f64 {
    const EPS: f64 = 1e-12;
    (c2 + EPS) / (c1 + EPS)
}

/// Normalized mean tracer discrepancy δ(t) between two runs with identical
/// tracer seeds: per time, Σ w_i |Φ^A(x_i) - Φ^B(x_i)| / Σ w_i.
pub fn flow_divergence(
    run_a: &[(f64, Vec<Vec2>)],
    run_b: &[(f64, Vec<Vec2>)],
    weights: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if run_a.len() != run_b.len() {
        return Err(Error::BadParameter(
            "runs have different numbers of records".into(),
        ));
    }
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 {
        return Err(Error::BadParameter("weights must have positive sum".into()));
    }
    let mut out = Vec::with_capacity(run_a.len());
    for ((ta, pa), (tb, pb)) in run_a.iter().zip(run_b) {
        if (ta - tb).abs() > 1e-12 * (1.0 + ta.abs()) {
            return Err(Error::BadParameter(format!(
                "record times differ: {ta} vs {tb}"
            )));
        }
        if pa.len() != pb.len() || pa.len() != weights.len() {
            return Err(Error::BadParameter("mismatched tracer sets".into()));
        }
        let mut acc = 0.0;
        for ((a, b), w) in pa.iter().zip(pb).zip(weights) {
            acc += w * a.dist(*b);
        }
        out.push((*ta, acc / wsum));
    }
    Ok(out)
}

/// max over boundary nodes of |S(∇u) w·w|, w the unit tangent; nodes are
/// offset inward by 1e-6 node spacings (boundary values are principal
/// values; the offset regularizes).
pub fn grad_u_tangential_max(state: &SimulationState) -> Result<f64> {
    let ctx = biot_savart::VelocityContext::new(state, None);
    let mut worst = 0.0f64;
    for curve in &state.curves {
        let dz = curve.spectrum().derivative_at_nodes(1);
        let spacing = curve.perimeter() / curve.len() as f64;
        for (node, d) in curve.nodes.iter().zip(&dz) {
            let w = d.normalize();
            // CCW curve: rotating the tangent by +90 degrees points inward
            let x = *node + d.perp().normalize() * (1e-6 * spacing);
            let s = biot_savart::grad_u_sym_with_ctx(state, &ctx, x)?;
            let val = s.apply(w).dot(w).abs();
            if val > worst {
                worst = val;
            }
        }
    }
    Ok(worst)
}

/// Per-patch diagnostic row entries.
#[derive(Debug, Clone, Serialize)]
pub struct PatchDiagnostics {
    pub patch_id: usize,
    pub area: f64,
    pub perimeter: f64,
    pub w_inf: f64,
    /// (k, gamma, seminorm) in the configured order
    pub holder: Vec<(usize, f64, f64)>,
    /// (gamma, delta) in the configured order
    pub delta: Vec<(f64, f64)>,
    pub max_curvature: f64,
}

/// One diagnostics record: a pure function of the state snapshot.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub patches: Vec<PatchDiagnostics>,
    /// min inter-patch boundary distance (infinite for a single patch)
    pub min_dist: f64,
    /// separations of consecutive tracer pairs (0-1, 2-3, ...)
    pub tracer_pairs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DiagnosticsParams {
    pub gamma_list: Vec<f64>,
    pub max_k: usize,
}

impl Default for DiagnosticsParams {
    fn default() -> Self {
        DiagnosticsParams {
            gamma_list: vec![0.5],
            max_k: 1,
        }
    }
}

pub fn compute_record(
    state: &SimulationState,
    params: &DiagnosticsParams,
) -> Result<DiagnosticRecord> {
    compute_record_parts(&state.curves, &state.tracers, state.t, params)
}

/// Record computation from raw snapshot parts (no kernel machinery is
/// involved, so re-ingested snapshots reproduce rows bit-identically).
pub fn compute_record_parts(
    curves: &[PatchCurve],
    tracers: &[Vec2],
    t: f64,
    params: &DiagnosticsParams,
) -> Result<DiagnosticRecord> {
    let mut patches = Vec::with_capacity(curves.len());
    for curve in curves {
        let spectrum = curve.spectrum();
        let d1 = spectrum.derivative_at_nodes(1);
        let d2 = spectrum.derivative_at_nodes(2);
        let wi = d1.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        let mut holder = Vec::new();
        for k in 1..=params.max_k {
            for &g in &params.gamma_list {
                holder.push((k, g, holder_seminorm(curve, k, g)?));
            }
        }
        let delta: Vec<(f64, f64)> = params
            .gamma_list
            .iter()
            .map(|&g| {
                holder
                    .iter()
                    .find(|(k, gg, _)| *k == 1 && *gg == g)
                    .map(|(_, _, s)| (g, s / wi + 1.0))
                    .unwrap_or((g, f64::NAN))
            })
            .collect();
        let max_curvature = d1
            .iter()
            .zip(&d2)
            .map(|(a, b)| a.cross(*b).abs() / a.norm().powi(3))
            .fold(0.0f64, f64::max);
        patches.push(PatchDiagnostics {
            patch_id: curve.id,
            area: curve.area(),
            perimeter: curve.perimeter(),
            w_inf: wi,
            holder,
            delta,
            max_curvature,
        });
    }
    let min_dist = if curves.len() > 1 {
        let mut best = f64::INFINITY;
        for i in 0..curves.len() {
            for j in i + 1..curves.len() {
                best = best.min(geometry::polygon_min_distance(
                    &curves[i].nodes,
                    &curves[j].nodes,
                ));
            }
        }
        best
    } else {
        f64::INFINITY
    };
    let tracer_pairs = tracers
        .chunks(2)
        .filter(|c| c.len() == 2)
        .map(|c| c[0].dist(c[1]))
        .collect();
    Ok(DiagnosticRecord {
        t,
        patches,
        min_dist,
        tracer_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{circle, ellipse};
    use approx::assert_relative_eq;

    #[test]
    fn circle_holder_seminorm() {
        // |W(xi) - W(eta)| equals the chord on the unit circle, so the
        // seminorm is the max chord to the power 1 - gamma
        let c = circle(0, 1.0, Vec2::ZERO, 1.0, 512).unwrap();
        for gamma in [0.25, 0.5, 0.75] {
            let s = holder_seminorm(&c, 1, gamma).unwrap();
            let expect = 2f64.powf(1.0 - gamma);
            assert_relative_eq!(s, expect, max_relative = 1e-2);
        }
        assert_relative_eq!(w_inf(&c), 1.0, max_relative = 1e-10);
        let d = delta_gamma(&c, 0.5).unwrap();
        assert_relative_eq!(d, 2f64.sqrt() + 1.0, max_relative = 1e-2);
        assert!(d >= 1.0);
    }

    #[test]
    fn holder_scaling_under_dilation() {
        let c = ellipse(0, 1.0, Vec2::ZERO, 1.3, 0.9, 0.2, 128).unwrap();
        let lambda = 3.7;
        let scaled =
            PatchCurve::new(0, 1.0, c.nodes.iter().map(|p| *p * lambda).collect()).unwrap();
        for &gamma in &[0.25, 0.5] {
            let s1 = holder_seminorm(&c, 1, gamma).unwrap();
            let s2 = holder_seminorm(&scaled, 1, gamma).unwrap();
            assert_relative_eq!(s2, s1 * lambda.powf(1.0 - gamma), max_relative = 1e-10);
        }
    }

    #[test]
    fn delta_gamma_isometry_invariance() {
        let c = ellipse(0, 1.0, Vec2::ZERO, 1.3, 0.9, 0.0, 128).unwrap();
        let (cos_a, sin_a) = (0.6f64, 0.8f64);
        let moved = PatchCurve::new(
            0,
            1.0,
            c.nodes
                .iter()
                .map(|p| {
                    Vec2::new(
                        cos_a * p.x - sin_a * p.y + 4.0,
                        sin_a * p.x + cos_a * p.y - 2.0,
                    )
                })
                .collect(),
        )
        .unwrap();
        let d1 = delta_gamma(&c, 0.5).unwrap();
        let d2 = delta_gamma(&moved, 0.5).unwrap();
        assert_relative_eq!(d1, d2, max_relative = 1e-10);
    }

    #[test]
    fn defect_deep_inside_disk() {
        let c = circle(0, 1.0, Vec2::ZERO, 1.0, 512).unwrap();
        // x deep inside, rho below the boundary distance: the full circle
        // of directions is inside, the reference is the half circle
        let r = geometric_defect(&c, Vec2::new(0.2, 0.0), 0.5, 10_000).unwrap();
        assert_relative_eq!(r.defect, PI, max_relative = 2e-3);
        assert_relative_eq!(r.d_x, 0.8, max_relative = 1e-3);
    }

    #[test]
    fn defect_flat_boundary_limit() {
        // a point on the boundary of a huge disk sees an effectively
        // straight edge: the direction set is the half circle itself
        let c = circle(0, 1.0, Vec2::ZERO, 100.0, 4096).unwrap();
        let r = geometric_defect(&c, Vec2::new(99.9999999, 0.0), 0.2, 10_000).unwrap();
        assert!(r.defect < 5e-3, "defect {}", r.defect);
    }

    #[test]
    fn defect_circle_closed_form() {
        // unit disk, |x| = 0.9, rho = 0.5: closed form 2 asin(1/15)
        let c = circle(0, 1.0, Vec2::ZERO, 1.0, 512).unwrap();
        let r = geometric_defect(&c, Vec2::new(0.9, 0.0), 0.5, 10_000).unwrap();
        let expect = 2.0 * (1.0f64 / 15.0).asin();
        assert!(
            (r.defect - expect).abs() <= 1e-3,
            "defect {} vs {expect}",
            r.defect
        );
        assert!(!r.ambiguous);
    }

    #[test]
    fn defect_obeys_geometric_bound() {
        for curve in [
            circle(0, 1.0, Vec2::ZERO, 1.0, 512).unwrap(),
            ellipse(0, 1.0, Vec2::ZERO, 2.0, 1.0, 0.0, 512).unwrap(),
        ] {
            let gamma = 0.5;
            let dg = delta_gamma(&curve, gamma).unwrap();
            let small_delta = dg.powf(-1.0 / gamma);
            // probes along the inward x-axis at assorted (d_x, rho)
            let right = curve
                .nodes
                .iter()
                .map(|p| p.x)
                .fold(f64::NEG_INFINITY, f64::max);
            for &dx in &[0.2 * small_delta, 0.5 * small_delta, 0.9 * small_delta] {
                for &rho_f in &[1.0, 2.0, 5.0] {
                    let rho = rho_f * dx;
                    let x = Vec2::new(right - dx, 0.0);
                    let r = geometric_defect(&curve, x, rho, 4000).unwrap();
                    let bound = defect_bound(r.d_x, rho, gamma, dg);
                    assert!(
                        r.defect <= bound + 1e-2,
                        "defect {} > bound {bound} at dx={dx} rho={rho}",
                        r.defect
                    );
                }
            }
        }
    }

    #[test]
    fn envelope_check_constant_series() {
        let sym =
            crate::multiplier::MultiplierSymbol::new(crate::multiplier::SymbolSpec::Euler)
                .unwrap();
        let p = OsgoodProfile::new(&sym).unwrap();
        let series: Vec<(f64, f64)> = (0..20).map(|i| (i as f64 * 0.1, 0.3)).collect();
        let chk = envelope_check(&series, &p, EnvelopeKind::FlowPair, 0.3).unwrap();
        assert!(chk.pass);
        assert!(chk.fitted_c < 1e-6, "fitted C {}", chk.fitted_c);
        // a wildly growing fake series cannot be dominated
        let fake: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let t = i as f64 * 0.1;
                (t, 0.3 * (40.0 * t).exp().exp())
            })
            .collect();
        let chk = envelope_check(&fake, &p, EnvelopeKind::FlowPair, 0.3).unwrap();
        assert!(!chk.pass);
    }

    #[test]
    fn flow_divergence_basics() {
        let run_a = vec![
            (0.0, vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]),
            (1.0, vec![Vec2::new(0.1, 0.0), Vec2::new(1.0, 0.2)]),
        ];
        let d0 = flow_divergence(&run_a, &run_a, &[1.0, 1.0]).unwrap();
        assert!(d0.iter().all(|&(_, v)| v == 0.0));
        let run_b = vec![
            (0.0, vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]),
            (1.0, vec![Vec2::new(0.1, 0.1), Vec2::new(1.0, 0.0)]),
        ];
        let d = flow_divergence(&run_a, &run_b, &[1.0, 3.0]).unwrap();
        assert_relative_eq!(d[1].1, (0.1 + 3.0 * 0.2) / 4.0, max_relative = 1e-12);
        assert!(flow_divergence(&run_a, &run_b[..1].to_vec(), &[1.0, 1.0]).is_err());
    }
}
