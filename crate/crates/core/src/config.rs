//! Run configuration: JSON schema, validation and initial-state
//! construction.

use crate::contour::{self, PatchCurve, SimulationState, StepConfig};
use crate::geometry::Vec2;
use crate::kernel::{build_table, HankelQuadratureConfig, KernelTable, RhoRange};
use crate::multiplier::{MultiplierSymbol, SymbolSpec};
use crate::osgood::OsgoodProfile;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: usize,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PatchSpec {
    Circle {
        radius: f64,
        center: [f64; 2],
        strength: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        angle: f64,
        center: [f64; 2],
        strength: f64,
    },
    /// circle with radial Fourier perturbation r(θ) = r₀(1 + Σ modes)
    Fourier {
        base_radius: f64,
        modes: Vec<FourierMode>,
        center: [f64; 2],
        strength: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
        strength: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_target_nodes")]
    pub target_nodes: usize,
    #[serde(default = "default_reparam_every")]
    pub reparam_every: usize,
    /// singular-window half width (radians); omitted = 8 node spacings
    #[serde(default)]
    pub quad_window: Option<f64>,
}

fn default_target_nodes() -> usize {
    256
}

fn default_reparam_every() -> usize {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default = "default_gammas")]
    pub gamma_list: Vec<f64>,
    #[serde(default = "default_max_k")]
    pub max_k: usize,
    /// passive tracer seed points
    #[serde(default)]
    pub tracers: Vec<[f64; 2]>,
}

fn default_cadence() -> usize {
    10
}

fn default_gammas() -> Vec<f64> {
    vec![0.5]
}

fn default_max_k() -> usize {
    1
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            cadence: default_cadence(),
            gamma_list: default_gammas(),
            max_k: default_max_k(),
            tracers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelConfig {
    #[serde(default = "default_rho_min")]
    pub rho_min: f64,
    #[serde(default = "default_rho_max")]
    pub rho_max: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_rho_min() -> f64 {
    1e-8
}

fn default_rho_max() -> f64 {
    1e3
}

fn default_tol() -> f64 {
    1e-6
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            rho_min: default_rho_min(),
            rho_max: default_rho_max(),
            tol: default_tol(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    pub directory: String,
    /// any of "csv", "json", "svg"
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

fn default_snapshot_every() -> usize {
    0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub multiplier: SymbolSpec,
    pub patches: Vec<PatchSpec>,
    pub solver: SolverConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!(
                "malformed config at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.patches.is_empty() {
            return Err(Error::Config("at least one patch is required".into()));
        }
        for (i, p) in self.patches.iter().enumerate() {
            let strength = match p {
                PatchSpec::Circle { strength, .. }
                | PatchSpec::Ellipse { strength, .. }
                | PatchSpec::Fourier { strength, .. }
                | PatchSpec::Polygon { strength, .. } => *strength,
            };
            if !strength.is_finite() || strength == 0.0 {
                return Err(Error::Config(format!("patch {i}: bad strength {strength}")));
            }
            match p {
                PatchSpec::Circle { radius, .. } if !(radius > &0.0) => {
                    return Err(Error::Config(format!("patch {i}: radius must be positive")));
                }
                PatchSpec::Ellipse { a, b, .. } if !(a > &0.0 && b > &0.0) => {
                    return Err(Error::Config(format!("patch {i}: axes must be positive")));
                }
                PatchSpec::Fourier { base_radius, .. } if !(base_radius > &0.0) => {
                    return Err(Error::Config(format!(
                        "patch {i}: base_radius must be positive"
                    )));
                }
                PatchSpec::Polygon { vertices, .. } if vertices.len() < 8 => {
                    return Err(Error::Config(format!(
                        "patch {i}: polygon needs at least 8 vertices"
                    )));
                }
                _ => {}
            }
        }
        self.step_config().validate()?;
        for &g in &self.diagnostics.gamma_list {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::Config(format!("gamma {g} outside (0,1)")));
            }
        }
        if self.diagnostics.max_k < 1 {
            return Err(Error::Config("max_k must be >= 1".into()));
        }
        if !(self.kernel.rho_min > 0.0
            && self.kernel.rho_min < 1.0
            && self.kernel.rho_max > 1.0)
        {
            return Err(Error::Config(
                "kernel range must satisfy 0 < rho_min < 1 < rho_max".into(),
            ));
        }
        if !(self.kernel.tol > 0.0 && self.kernel.tol <= 1e-4) {
            return Err(Error::Config("kernel tol must lie in (0, 1e-4]".into()));
        }
        for f in &self.output.formats {
            if !matches!(f.as_str(), "csv" | "json" | "svg") {
                return Err(Error::Config(format!("unknown output format '{f}'")));
            }
        }
        Ok(())
    }

    pub fn step_config(&self) -> StepConfig {
        StepConfig {
            dt: self.solver.dt,
            t_end: self.solver.t_end,
            reparam_every: self.solver.reparam_every,
            target_nodes: self.solver.target_nodes,
            quad_window: self.solver.quad_window,
            snapshot_every: self.output.snapshot_every,
            diagnostics_every: self.diagnostics.cadence,
            contact_factor: 5.0,
        }
    }

    pub fn build_symbol(&self) -> Result<MultiplierSymbol> {
        MultiplierSymbol::new(self.multiplier.clone())
    }

    pub fn build_kernel_table(&self, sym: &MultiplierSymbol) -> Result<KernelTable> {
        build_table(
            sym,
            RhoRange {
                min: self.kernel.rho_min,
                max: self.kernel.rho_max,
            },
            self.kernel.tol,
            &HankelQuadratureConfig::default(),
        )
    }

    pub fn build_curves(&self) -> Result<Vec<PatchCurve>> {
        let n = self.solver.target_nodes;
        let curves: Result<Vec<PatchCurve>> = self
            .patches
            .iter()
            .enumerate()
            .map(|(id, p)| build_patch(id, p, n))
            .collect();
        let curves = curves?;
        // initial disjointness with a safety margin of 10 node spacings
        for i in 0..curves.len() {
            for j in i + 1..curves.len() {
                let d = crate::geometry::polygon_min_distance(&curves[i].nodes, &curves[j].nodes);
                let spacing = curves[i]
                    .spacing_bounds()
                    .1
                    .max(curves[j].spacing_bounds().1);
                if d < 10.0 * spacing {
                    return Err(Error::Config(format!(
                        "patches {i} and {j} are closer ({d:.3e}) than 10 node spacings"
                    )));
                }
            }
        }
        Ok(curves)
    }

    /// Build the full initial state (kernel table, profile, curves,
    /// tracers).
    pub fn build_state(&self) -> Result<SimulationState> {
        let sym = self.build_symbol()?;
        let table = Arc::new(self.build_kernel_table(&sym)?);
        let profile = Arc::new(OsgoodProfile::new(&sym)?);
        let tracers = self
            .diagnostics
            .tracers
            .iter()
            .map(|p| Vec2::new(p[0], p[1]))
            .collect();
        SimulationState::new(table, profile, self.build_curves()?, tracers)
    }
}

fn build_patch(id: usize, spec: &PatchSpec, n: usize) -> Result<PatchCurve> {
    match spec {
        PatchSpec::Circle {
            radius,
            center,
            strength,
        } => contour::circle(id, *strength, Vec2::new(center[0], center[1]), *radius, n),
        PatchSpec::Ellipse {
            a,
            b,
            angle,
            center,
            strength,
        } => contour::ellipse(
            id,
            *strength,
            Vec2::new(center[0], center[1]),
            *a,
            *b,
            *angle,
            n,
        ),
        PatchSpec::Fourier {
            base_radius,
            modes,
            center,
            strength,
        } => {
            let m: Vec<(usize, f64, f64)> = modes.iter().map(|m| (m.k, m.cos, m.sin)).collect();
            contour::fourier_star(
                id,
                *strength,
                Vec2::new(center[0], center[1]),
                *base_radius,
                &m,
                n,
            )
        }
        PatchSpec::Polygon { vertices, strength } => {
            let pts: Vec<Vec2> = vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect();
            polygon_to_curve(id, *strength, &pts, n)
        }
    }
}

/// Resample a polygon to n nodes uniformly by arc length along its edges.
fn polygon_to_curve(id: usize, strength: f64, pts: &[Vec2], n: usize) -> Result<PatchCurve> {
    let m = pts.len();
    let mut cum = vec![0.0];
    for i in 0..m {
        let d = pts[i].dist(pts[(i + 1) % m]);
        cum.push(cum[i] + d);
    }
    let total = *cum.last().unwrap();
    if total <= 0.0 {
        return Err(Error::Config("degenerate polygon".into()));
    }
    let mut nodes = Vec::with_capacity(n);
    for k in 0..n {
        let target = total * k as f64 / n as f64;
        let seg = cum.partition_point(|&s| s <= target).min(m) - 1;
        let local = (target - cum[seg]) / (cum[seg + 1] - cum[seg]);
        let a = pts[seg];
        let b = pts[(seg + 1) % m];
        nodes.push(a + (b - a) * local);
    }
    PatchCurve::new(id, strength, nodes)
}
