//! JSON and CSV formats.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Direction, Polygon, Vec2};
use crate::measure::SurfaceMeasure;
use crate::mesh::TriMesh;
use crate::solver::{project_balance, IterateRecord, SolveReport, TargetMeasure};
use crate::verify::CheckReport;

fn pair(v: Vec2) -> [f64; 2] {
    [v.x, v.y]
}

fn direction(v: [f64; 2], what: &str) -> Result<Direction> {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    if !((n - 1.0).abs() <= 1e-6) {
        return Err(Error::InvariantViolation(format!(
            "{what} [{}, {}] is not a unit vector",
            v[0], v[1]
        )));
    }
    Direction::normalize(Vec2::new(v[0], v[1]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonJson {
    pub vertices: Vec<[f64; 2]>,
}

impl PolygonJson {
    pub fn from_polygon(p: &Polygon) -> Self {
        PolygonJson {
            vertices: p.vertices().iter().map(|v| pair(*v)).collect(),
        }
    }

    pub fn to_polygon(&self) -> Result<Polygon> {
        Polygon::from_vertices(self.vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureJson {
    pub normals: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl MeasureJson {
    pub fn from_measure(mu: &SurfaceMeasure) -> Self {
        MeasureJson {
            normals: mu.normals.iter().map(|n| pair(n.vec())).collect(),
            weights: mu.weights.clone(),
        }
    }

    pub fn to_measure(&self) -> Result<SurfaceMeasure> {
        if self.normals.len() != self.weights.len() {
            return Err(Error::InvariantViolation(format!(
                "{} normals but {} weights",
                self.normals.len(),
                self.weights.len()
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvariantViolation(format!("weight {w} is negative")));
        }
        Ok(SurfaceMeasure {
            normals: self
                .normals
                .iter()
                .map(|n| direction(*n, "normal"))
                .collect::<Result<_>>()?,
            weights: self.weights.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshJson {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// `[a, b, facet]` per boundary edge.
    pub boundary: Vec<[usize; 3]>,
}

impl MeshJson {
    pub fn from_mesh(m: &TriMesh) -> Self {
        MeshJson {
            nodes: m.nodes().iter().map(|v| pair(*v)).collect(),
            triangles: m.triangles().to_vec(),
            boundary: m.boundary_edges().iter().map(|e| [e.a, e.b, e.facet]).collect(),
        }
    }
}

/// Options block of a problem spec; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SpecOptions {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("mesh_h", self.mesh_h), ("tol", self.tol)] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(Error::InvariantViolation(format!("{name} must be positive")));
                }
            }
        }
        if self.max_iters == Some(0) {
            return Err(Error::InvariantViolation("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normals: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles_deg: Option<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub options: SpecOptions,
}

impl TargetJson {
    pub fn from_target(t: &TargetMeasure, options: SpecOptions) -> Self {
        TargetJson {
            normals: Some(t.normals().iter().map(|n| pair(n.vec())).collect()),
            angles_deg: None,
            weights: t.weights().to_vec(),
            options,
        }
    }

    pub fn to_target(&self) -> Result<TargetMeasure> {
        self.options.validate()?;
        let normals: Vec<Direction> = match (&self.normals, &self.angles_deg) {
            (Some(n), None) => n.iter().map(|v| direction(*v, "normal")).collect::<Result<_>>()?,
            (None, Some(a)) => a.iter().map(|d| Direction::from_degrees(*d)).collect(),
            _ => {
                return Err(Error::InvariantViolation(
                    "give exactly one of \"normals\" and \"angles_deg\"".into(),
                ))
            }
        };
        if normals.len() != self.weights.len() {
            return Err(Error::InvariantViolation(format!(
                "{} normals but {} weights",
                normals.len(),
                self.weights.len()
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvariantViolation(format!("weights must be > 0, got {w}")));
        }
        let mut pairs: Vec<(Direction, f64)> = normals.into_iter().zip(self.weights.clone()).collect();
        pairs.sort_by(|a, b| a.0.angle().total_cmp(&b.0.angle()));
        let angles: Vec<f64> = pairs.iter().map(|p| p.0.angle()).collect();
        if !spans_plane(&angles) {
            return Err(Error::InvariantViolation(
                "normals do not positively span the plane".into(),
            ));
        }
        let (normals, weights): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        project_balance(&weights, &normals)
    }
}

/// Every open half-circle contains one of the sorted `angles`.
fn spans_plane(angles: &[f64]) -> bool {
    let n = angles.len();
    n >= 3
        && (0..n).all(|i| {
            let gap = if i + 1 == n {
                angles[0] + std::f64::consts::TAU - angles[i]
            } else {
                angles[i + 1] - angles[i]
            };
            gap < std::f64::consts::PI - 1e-12
        })
}

/// A parsed input file.
#[derive(Debug, Clone, PartialEq)]
pub enum Spec {
    Target(TargetMeasure, SpecOptions),
    Polygon(Polygon),
}

pub fn parse_spec_str(text: &str) -> Result<Spec> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("vertices").is_some() {
        let p: PolygonJson = serde_json::from_str(text)?;
        Ok(Spec::Polygon(p.to_polygon()?))
    } else {
        let t: TargetJson = serde_json::from_str(text)?;
        let target = t.to_target()?;
        Ok(Spec::Target(target, t.options))
    }
}

pub fn parse_spec(path: impl AsRef<Path>) -> Result<Spec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_spec_str(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateJson {
    pub iter: usize,
    #[serde(rename = "J")]
    pub j: f64,
    pub residual: f64,
    pub tau: f64,
    pub inradius: f64,
    pub circumradius: f64,
    pub diameter: f64,
    pub step: f64,
}

impl From<&IterateRecord> for IterateJson {
    fn from(r: &IterateRecord) -> Self {
        IterateJson {
            iter: r.iter,
            j: r.j,
            residual: r.residual,
            tau: r.tau,
            inradius: r.inradius,
            circumradius: r.circumradius,
            diameter: r.diameter,
            step: r.step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReportJson {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub multiplier_m: f64,
    pub support_numbers: Vec<f64>,
    pub polygon: PolygonJson,
    pub measure: MeasureJson,
    pub objective_history: Vec<f64>,
    pub residual_history: Vec<f64>,
    pub diagnostics: Vec<IterateJson>,
}

impl SolveReportJson {
    pub fn from_report(r: &SolveReport) -> Self {
        SolveReportJson {
            converged: r.converged,
            iterations: r.iterations,
            residual: r.residual,
            multiplier_m: r.multiplier_m,
            support_numbers: r.h_final.values().to_vec(),
            polygon: PolygonJson::from_polygon(&r.polygon),
            measure: MeasureJson::from_measure(&r.mu_final),
            objective_history: r.objective_history.clone(),
            residual_history: r.residual_history.clone(),
            diagnostics: r.diagnostics.iter().map(IterateJson::from).collect(),
        }
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(Error::from)
}

/// Convergence log with columns `iter,J,residual,tau,inradius,circumradius,step`.
pub fn write_convergence_csv(records: &[IterateRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "J", "residual", "tau", "inradius", "circumradius", "step"])
        .map_err(csv_error)?;
    for r in records {
        w.write_record(&[
            r.iter.to_string(),
            r.j.to_string(),
            r.residual.to_string(),
            r.tau.to_string(),
            r.inradius.to_string(),
            r.circumradius.to_string(),
            r.step.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Summary table with columns `name,trials,failures,worst_margin`.
pub fn write_summary_csv(reports: &[CheckReport], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "trials", "failures", "worst_margin"])
        .map_err(csv_error)?;
    for r in reports {
        w.write_record(&[
            r.name.clone(),
            r.trials.to_string(),
            r.failures.to_string(),
            r.worst_margin.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}
