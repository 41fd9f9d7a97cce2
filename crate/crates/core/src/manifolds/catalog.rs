use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::chart::ChartRef;
use super::minkowski::Minkowski;
use super::warped::{ConformalSpaceForm, Interval, WarpedProductChart, WarpedProductSpec, Warping};
use crate::error::{GeomError, Result};
use crate::linalg::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Builtin,
    User,
}

/// A named chart with its base point and validated star-region radius.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub id: String,
    pub chart: ChartRef,
    pub base_point: Point,
    /// Radius (coordinate norm of initial velocities at the base point) of
    /// the star-shaped region used by default.
    pub star_radius: f64,
    pub provenance: Provenance,
    pub grw: Option<WarpedProductSpec>,
    pub constant_curvature: Option<f64>,
    pub notes: String,
}

impl CatalogEntry {
    pub fn is_lorentzian(&self) -> bool {
        self.chart.index() == 1
    }
}

/// Chart catalog addressable by id strings such as `minkowski:3`,
/// `desitter:3`, `antidesitter-sin:3`, `grw-cosh-hyperbolic:3`,
/// `model-surface:K=1,index=1` or `grw:<user-id>`.
#[derive(Clone, Debug, Default)]
pub struct Catalog {
    user: BTreeMap<String, CatalogEntry>,
}

/// Ids listed by [`Catalog::list`] in addition to user entries.
pub const BUILTIN_IDS: &[&str] = &[
    "minkowski:2",
    "minkowski:3",
    "minkowski:4",
    "desitter:3",
    "antidesitter-sin:3",
    "grw-cosh-hyperbolic:3",
    "static-hyperbolic:3",
    "minkowski-grw:3",
    "model-surface:K=1,index=0",
    "model-surface:K=0,index=0",
    "model-surface:K=-1,index=0",
    "model-surface:K=1,index=1",
    "model-surface:K=0,index=1",
    "model-surface:K=-1,index=1",
];

fn parse_dim(id: &str, raw: &str) -> Result<usize> {
    match raw.parse::<usize>() {
        Ok(d) if (2..=8).contains(&d) => Ok(d),
        _ => Err(GeomError::UnknownChart(id.to_string())),
    }
}

fn grw_entry(
    id: &str,
    spec: WarpedProductSpec,
    base_point: Point,
    star_radius: f64,
    constant_curvature: Option<f64>,
    notes: &str,
) -> Result<CatalogEntry> {
    let chart = WarpedProductChart::new(id, spec.clone())?;
    Ok(CatalogEntry {
        id: id.to_string(),
        chart: Arc::new(chart),
        base_point,
        star_radius,
        provenance: Provenance::Builtin,
        grw: Some(spec),
        constant_curvature,
        notes: notes.to_string(),
    })
}

/// Lorentzian surface of constant curvature `k` as a warped product with a
/// one-dimensional fiber.
pub fn lorentzian_model_surface_spec(k: f64) -> WarpedProductSpec {
    if k > 0.0 {
        WarpedProductSpec::new(
            Interval::real_line(),
            Warping::Cosh { amplitude: 1.0, rate: k.sqrt() },
            1,
            0.0,
        )
    } else if k < 0.0 {
        let r = (-k).sqrt();
        let half = 0.5 * PI / r;
        WarpedProductSpec::new(
            Interval::new(-half, half),
            Warping::Cos { amplitude: 1.0, rate: r },
            1,
            0.0,
        )
    } else {
        WarpedProductSpec::new(Interval::real_line(), Warping::constant(1.0), 1, 0.0)
    }
}

fn parse_model_surface(id: &str, rest: &str) -> Result<(f64, usize)> {
    let mut k = None;
    let mut index = None;
    for part in rest.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| GeomError::UnknownChart(id.to_string()))?;
        match key.trim() {
            "K" => k = value.trim().parse::<f64>().ok().filter(|v| v.is_finite()),
            "index" => index = value.trim().parse::<usize>().ok().filter(|&i| i <= 1),
            _ => return Err(GeomError::UnknownChart(id.to_string())),
        }
    }
    match (k, index) {
        (Some(k), Some(i)) => Ok((k, i)),
        _ => Err(GeomError::UnknownChart(id.to_string())),
    }
}

fn builtin(id: &str) -> Result<CatalogEntry> {
    let (family, rest) = id
        .split_once(':')
        .ok_or_else(|| GeomError::UnknownChart(id.to_string()))?;
    let origin = |n: usize| Point::zeros(n);
    match family {
        "minkowski" => {
            let n = parse_dim(id, rest)?;
            Ok(CatalogEntry {
                id: id.to_string(),
                chart: Arc::new(Minkowski::new(n)),
                base_point: origin(n),
                star_radius: 2.0,
                provenance: Provenance::Builtin,
                grw: None,
                constant_curvature: Some(0.0),
                notes: "flat; R<=0 and R>=0".into(),
            })
        }
        "desitter" => {
            let n = parse_dim(id, rest)?;
            let spec = WarpedProductSpec::new(Interval::real_line(), Warping::cosh(), n - 1, 1.0);
            grw_entry(id, spec, origin(n), 1.0, Some(1.0), "constant curvature 1; -R x_cosh S^(n-1)")
        }
        "antidesitter-sin" => {
            let n = parse_dim(id, rest)?;
            let spec = WarpedProductSpec::new(Interval::new(0.0, PI), Warping::sin(), n - 1, -1.0);
            let mut q = origin(n);
            q[0] = 0.5 * PI;
            grw_entry(id, spec, q, 0.8, Some(-1.0), "constant curvature -1; -(0,pi) x_sin H^(n-1)")
        }
        "grw-cosh-hyperbolic" => {
            let n = parse_dim(id, rest)?;
            let spec = WarpedProductSpec::new(Interval::real_line(), Warping::cosh(), n - 1, -1.0);
            grw_entry(id, spec, origin(n), 1.0, None, "-R x_cosh H^(n-1); R<=1 strictly on fiber planes")
        }
        "static-hyperbolic" => {
            let n = parse_dim(id, rest)?;
            let spec = WarpedProductSpec::new(Interval::real_line(), Warping::constant(1.0), n - 1, -1.0);
            grw_entry(id, spec, origin(n), 1.0, None, "static product -R x H^(n-1); R<=0 and R<=-1")
        }
        "minkowski-grw" => {
            let n = parse_dim(id, rest)?;
            let spec = WarpedProductSpec::new(Interval::real_line(), Warping::constant(1.0), n - 1, 0.0);
            grw_entry(id, spec, origin(n), 2.0, Some(0.0), "Minkowski written as a static product")
        }
        "model-surface" => {
            let (k, index) = parse_model_surface(id, rest)?;
            let radius = if index == 0 { 1.0 } else { 0.8 } / k.abs().sqrt().max(1.0);
            if index == 0 {
                Ok(CatalogEntry {
                    id: id.to_string(),
                    chart: Arc::new(ConformalSpaceForm::new(id, 2, k)),
                    base_point: origin(2),
                    star_radius: radius,
                    provenance: Provenance::Builtin,
                    grw: None,
                    constant_curvature: Some(k),
                    notes: "Riemannian model surface".into(),
                })
            } else {
                grw_entry(
                    id,
                    lorentzian_model_surface_spec(k),
                    origin(2),
                    radius,
                    Some(k),
                    "Lorentzian model surface",
                )
            }
        }
        _ => Err(GeomError::UnknownChart(id.to_string())),
    }
}

impl Catalog {
    pub fn new() -> Self {
        Catalog::default()
    }

    /// Registers a user warped product under `grw:<custom_id>`.
    pub fn add_user_grw(
        &mut self,
        custom_id: &str,
        spec: WarpedProductSpec,
        base_point: Option<Vec<f64>>,
        star_radius: f64,
    ) -> Result<&CatalogEntry> {
        let id = format!("grw:{custom_id}");
        let n = spec.fiber_dim + 1;
        let base_point = match base_point {
            Some(p) if p.len() == n => Point::from_vec(p),
            Some(p) => {
                return Err(GeomError::InvalidArgument(format!(
                    "base point of `{id}` has {} coordinates, expected {n}",
                    p.len()
                )))
            }
            None => {
                let (lo, hi) = spec.interval.compact_part(1e-3);
                let mut q = Point::zeros(n);
                q[0] = if lo <= 0.0 && 0.0 <= hi { 0.0 } else { 0.5 * (lo + hi) };
                q
            }
        };
        if !(star_radius > 0.0) {
            return Err(GeomError::InvalidArgument("star radius must be positive".into()));
        }
        let chart = WarpedProductChart::new(id.clone(), spec.clone())?;
        let entry = CatalogEntry {
            id: id.clone(),
            chart: Arc::new(chart),
            base_point,
            star_radius,
            provenance: Provenance::User,
            grw: Some(spec),
            constant_curvature: None,
            notes: "user warped product".into(),
        };
        if !entry.chart.in_domain(entry.base_point.as_slice()) {
            return Err(GeomError::OutOfDomain(entry.base_point.iter().copied().collect()));
        }
        self.user.insert(id.clone(), entry);
        Ok(&self.user[&id])
    }

    pub fn lookup(&self, id: &str) -> Result<CatalogEntry> {
        if let Some(entry) = self.user.get(id) {
            return Ok(entry.clone());
        }
        if id.starts_with("grw:") {
            return Err(GeomError::UnknownChart(id.to_string()));
        }
        builtin(id)
    }

    pub fn list(&self) -> Vec<CatalogEntry> {
        let mut out: Vec<CatalogEntry> = BUILTIN_IDS
            .iter()
            .map(|id| builtin(id).expect("builtin ids parse"))
            .collect();
        out.extend(self.user.values().cloned());
        out
    }

    /// Plain-text table of the catalog.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<28} {:>3} {:>5} {:>7} {:<8} notes",
            "id", "dim", "index", "radius", "origin"
        );
        for e in self.list() {
            let provenance = match e.provenance {
                Provenance::Builtin => "builtin",
                Provenance::User => "user",
            };
            let _ = writeln!(
                s,
                "{:<28} {:>3} {:>5} {:>7.3} {:<8} {}",
                e.id,
                e.chart.dim(),
                e.chart.index(),
                e.star_radius,
                provenance,
                e.notes
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_builtin_ids() {
        let cat = Catalog::new();
        for id in BUILTIN_IDS {
            let e = cat.lookup(id).unwrap();
            assert_eq!(&e.id, id);
            assert!(e.chart.in_domain(e.base_point.as_slice()), "{id}");
        }
        assert_eq!(cat.lookup("desitter:4").unwrap().chart.dim(), 4);
    }

    #[test]
    fn rejects_unknown_ids() {
        let cat = Catalog::new();
        for id in ["foo", "minkowski:x", "minkowski:1", "grw:nothing", "model-surface:K=1", "model-surface:K=1,index=2"] {
            assert!(matches!(cat.lookup(id), Err(GeomError::UnknownChart(_))), "{id}");
        }
    }

    #[test]
    fn user_grw_appears_with_user_provenance() {
        let mut cat = Catalog::new();
        assert_eq!(cat.list().len(), BUILTIN_IDS.len());
        let spec = WarpedProductSpec::new(Interval::real_line(), Warping::Exp { amplitude: 1.0, rate: 0.5 }, 2, 0.0);
        cat.add_user_grw("expanding", spec, None, 0.5).unwrap();
        let e = cat.lookup("grw:expanding").unwrap();
        assert_eq!(e.provenance, Provenance::User);
        assert!(cat.table().contains("grw:expanding"));
        assert!(cat.table().lines().any(|l| l.contains("grw:expanding") && l.contains("user")));
    }
}
