use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stconvex::curvature_bounds::BoundDirection;
use stconvex::manifolds::{Catalog, WarpedProductSpec};
use stconvex::submanifolds::{AuditMode, PatchFamily};
use stconvex::triangles::ComparisonDirection;

use crate::error::CliError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

fn default_schema() -> u32 {
    CONFIG_SCHEMA_VERSION
}

/// A batch of checks. JSON, unknown keys rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    /// Master seed; checks without their own seed derive one from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// User warped products, addressable as `grw:<id>`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub charts: Vec<UserChart>,
    pub checks: Vec<CheckSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserChart {
    pub id: String,
    pub spec: WarpedProductSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Vec<f64>>,
    pub star_radius: f64,
}

/// Where the comparison function lives: chart, `K`, base point and radius
/// (the last two default to the catalog entry's).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub chart: String,
    pub k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_radius: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    /// `Hess f_{K,q} = (1 − K f) g` on constant-curvature charts.
    Hessian,
    /// `(f∘γ)''(0) = −1` for unit timelike geodesics at `q`.
    Vertex,
    /// `∇̄f = f'(E) ∇̄E`.
    GradientFormula,
    /// Both sides of the restricted-Laplacian identity on a patch.
    LaplacianIdentity,
    /// Drift of `g(γ', γ')` along integrated geodesics.
    SpeedDrift,
    /// `exp_q⁻¹(exp_q(w)) = w`.
    RoundTrip,
}

impl Identity {
    pub fn label(self) -> &'static str {
        match self {
            Identity::Hessian => "hessian",
            Identity::Vertex => "vertex",
            Identity::GradientFormula => "gradient-formula",
            Identity::LaplacianIdentity => "laplacian-identity",
            Identity::SpeedDrift => "speed-drift",
            Identity::RoundTrip => "round-trip",
        }
    }
}

fn d_samples() -> usize {
    100
}
fn d_tol5() -> f64 {
    1e-5
}
fn d_tol6() -> f64 {
    1e-6
}
fn d_grid() -> usize {
    401
}
fn d_arcs() -> usize {
    20
}
fn d_times() -> usize {
    4
}
fn d_triangles() -> usize {
    50
}
fn d_pairs() -> usize {
    5
}
fn d_scale() -> f64 {
    0.5
}
fn d_patch_grid() -> usize {
    5
}
fn d_half_width() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckSpec {
    /// Sampled `R ≤ K` / `R ≥ K`; on warped products optionally cross-checked
    /// against the closed-form criterion.
    Bound {
        chart: String,
        k: f64,
        direction: BoundDirection,
        #[serde(default = "d_samples")]
        n_samples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default = "d_tol6")]
        tol: f64,
        #[serde(default)]
        cross_validate: bool,
        #[serde(default = "d_grid")]
        grid_n: usize,
    },
    /// `f_{K,q}` is `λ`-convex, `λ = 1 − K f` unless a constant is given.
    Convexity {
        field: FieldSpec,
        #[serde(default = "d_samples")]
        n_samples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default = "d_tol5")]
        tol: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
    },
    /// `−f²/2` on a warped-product chart over a `τ` range.
    SpacetimeConvexity {
        chart: String,
        tau: [f64; 2],
        #[serde(default = "d_half_width")]
        fiber_half_width: f64,
        #[serde(default = "d_samples")]
        n_samples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default = "d_tol5")]
        tol: f64,
    },
    ShapeTrack {
        field: FieldSpec,
        #[serde(default = "d_arcs")]
        n_arcs: usize,
        #[serde(default = "d_times")]
        times_per_arc: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default = "d_tol5")]
        tol: f64,
    },
    Triangles {
        field: FieldSpec,
        direction: ComparisonDirection,
        #[serde(default = "d_scale")]
        scale: f64,
        #[serde(default = "d_triangles")]
        n_triangles: usize,
        #[serde(default = "d_pairs")]
        pairs_per_triangle: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default = "d_tol5")]
        tol: f64,
    },
    SubmanifoldAudit {
        field: FieldSpec,
        patch: PatchFamily,
        mode: AuditMode,
        #[serde(default = "d_patch_grid")]
        grid_n: usize,
        #[serde(default = "d_tol5")]
        tol: f64,
    },
    Identities {
        field: FieldSpec,
        identity: Identity,
        #[serde(default = "d_samples")]
        n_samples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default = "d_tol5")]
        tol: f64,
        /// Required by `laplacian-identity`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        patch: Option<PatchFamily>,
        #[serde(default = "d_patch_grid")]
        grid_n: usize,
    },
}

impl CheckSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            CheckSpec::Bound { .. } => "bound",
            CheckSpec::Convexity { .. } => "convexity",
            CheckSpec::SpacetimeConvexity { .. } => "spacetime-convexity",
            CheckSpec::ShapeTrack { .. } => "shape-track",
            CheckSpec::Triangles { .. } => "triangles",
            CheckSpec::SubmanifoldAudit { .. } => "submanifold-audit",
            CheckSpec::Identities { .. } => "identities",
        }
    }

    pub fn chart(&self) -> &str {
        match self {
            CheckSpec::Bound { chart, .. } | CheckSpec::SpacetimeConvexity { chart, .. } => chart,
            CheckSpec::Convexity { field, .. }
            | CheckSpec::ShapeTrack { field, .. }
            | CheckSpec::Triangles { field, .. }
            | CheckSpec::SubmanifoldAudit { field, .. }
            | CheckSpec::Identities { field, .. } => &field.chart,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            CheckSpec::Bound { seed, .. }
            | CheckSpec::Convexity { seed, .. }
            | CheckSpec::SpacetimeConvexity { seed, .. }
            | CheckSpec::ShapeTrack { seed, .. }
            | CheckSpec::Triangles { seed, .. }
            | CheckSpec::Identities { seed, .. } => *seed,
            CheckSpec::SubmanifoldAudit { .. } => None,
        }
    }

    fn field(&self) -> Option<&FieldSpec> {
        match self {
            CheckSpec::Convexity { field, .. }
            | CheckSpec::ShapeTrack { field, .. }
            | CheckSpec::Triangles { field, .. }
            | CheckSpec::SubmanifoldAudit { field, .. }
            | CheckSpec::Identities { field, .. } => Some(field),
            _ => None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigInvalid {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text, path)
    }

    /// Canonical serialization, the input of the config hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configs serialize")
    }

    /// Catalog with the user charts registered.
    pub fn catalog(&self) -> Result<Catalog, CliError> {
        let mut cat = Catalog::new();
        for c in &self.charts {
            cat.add_user_grw(&c.id, c.spec.clone(), c.base_point.clone(), c.star_radius)
                .map_err(|e| self.invalid(&format!("chart `{}`: {e}", c.id)))?;
        }
        Ok(cat)
    }

    fn invalid(&self, message: &str) -> CliError {
        CliError::ConfigInvalid {
            path: PathBuf::from("<config>"),
            message: message.to_string(),
        }
    }

    /// Everything that can be checked without running a check.
    pub fn validate(&self, catalog: &Catalog) -> Result<(), CliError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(self.invalid(&format!(
                "schema_version {} unsupported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.checks.is_empty() {
            return Err(self.invalid("no checks"));
        }
        for (i, check) in self.checks.iter().enumerate() {
            let at = |m: String| self.invalid(&format!("checks[{i}] ({}): {m}", check.kind()));
            let entry = catalog.lookup(check.chart()).map_err(|e| at(e.to_string()))?;
            let n = entry.chart.dim();
            if let Some(f) = check.field() {
                if let Some(q) = &f.q {
                    if q.len() != n {
                        return Err(at(format!("q has {} coordinates, chart dimension is {n}", q.len())));
                    }
                }
                if f.region_radius.is_some_and(|r| !(r > 0.0)) {
                    return Err(at("region_radius must be positive".into()));
                }
                if !f.k.is_finite() {
                    return Err(at("k must be finite".into()));
                }
            }
            match check {
                CheckSpec::Bound { n_samples, .. }
                | CheckSpec::Convexity { n_samples, .. }
                | CheckSpec::SpacetimeConvexity { n_samples, .. }
                | CheckSpec::Identities { n_samples, .. }
                    if *n_samples == 0 =>
                {
                    return Err(at("n_samples must be positive".into()))
                }
                _ => {}
            }
            match check {
                CheckSpec::SpacetimeConvexity { tau, .. } => {
                    if entry.grw.is_none() {
                        return Err(at("spacetime-convexity needs a warped-product chart".into()));
                    }
                    if !(tau[0] < tau[1]) {
                        return Err(at("tau must be an increasing pair".into()));
                    }
                }
                CheckSpec::Bound { cross_validate: true, .. } if entry.grw.is_none() => {
                    return Err(at("cross_validate needs a warped-product chart".into()));
                }
                CheckSpec::Identities { identity, patch, .. } => {
                    if *identity == Identity::LaplacianIdentity && patch.is_none() {
                        return Err(at("laplacian-identity needs a patch".into()));
                    }
                    if *identity == Identity::Vertex && entry.chart.index() != 1 {
                        return Err(at("vertex identity needs a Lorentzian chart".into()));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}
