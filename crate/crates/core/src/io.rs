//! File formats: curve and sweepout JSON, CSV logs, SVG plots.
//!
//! Curve JSON: `{"ambient_dim": 3, "params": [...], "samples": [[x, y, z], ...],
//! "endpoints_on_constraint": true}`. Floats are written in shortest
//! round-trip form, so reading back is bit-exact.

use crate::curve::{CurveError, DiscreteCurve};
use crate::manifold::{Point, Surface};
use crate::scenario::ScenarioDescriptor;
use crate::shortening::{GeodesicCertificate, PsiTrace, ReplacementRecord, StageRecord};
use crate::sweepout::Sweepout;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema: {0}")]
    Schema(String),
    #[error("curve: {0}")]
    Curve(#[from] CurveError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveDocument {
    pub ambient_dim: usize,
    pub params: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    pub endpoints_on_constraint: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<GeodesicCertificate>,
}

impl CurveDocument {
    pub fn from_curve(c: &DiscreteCurve) -> Self {
        Self {
            ambient_dim: 3,
            params: c.params(),
            samples: c.samples().iter().map(|p| vec![p.x, p.y, p.z]).collect(),
            endpoints_on_constraint: c.endpoints_on_constraint(),
            certificate: None,
        }
    }

    pub fn with_certificate(mut self, cert: GeodesicCertificate) -> Self {
        self.certificate = Some(cert);
        self
    }

    /// Planar (`ambient_dim = 2`) samples are embedded at `z = 0`.
    pub fn to_curve(&self) -> Result<DiscreteCurve, IoError> {
        if !(2..=3).contains(&self.ambient_dim) {
            return Err(IoError::Schema(format!("ambient_dim must be 2 or 3, got {}", self.ambient_dim)));
        }
        let mut samples = Vec::with_capacity(self.samples.len());
        for (i, s) in self.samples.iter().enumerate() {
            if s.len() != self.ambient_dim {
                return Err(IoError::Schema(format!("sample {i} has {} coordinates, expected {}", s.len(), self.ambient_dim)));
            }
            samples.push(Point::new(s[0], s[1], s.get(2).copied().unwrap_or(0.0)));
        }
        if self.params.len() != samples.len() {
            return Err(IoError::Schema(format!("{} params for {} samples", self.params.len(), samples.len())));
        }
        let k = samples.len().saturating_sub(1).max(1) as f64;
        if let Some(j) = self.params.iter().enumerate().position(|(j, t)| (t - j as f64 / k).abs() > 1e-12) {
            return Err(IoError::Schema(format!("params must be the uniform grid j/K; entry {j} is off")));
        }
        Ok(DiscreteCurve::new(samples, self.endpoints_on_constraint)?)
    }
}

pub fn write_curve_json<W: Write>(w: W, c: &DiscreteCurve, cert: Option<GeodesicCertificate>) -> Result<(), IoError> {
    let mut doc = CurveDocument::from_curve(c);
    doc.certificate = cert;
    serde_json::to_writer_pretty(w, &doc)?;
    Ok(())
}

pub fn curve_to_json(c: &DiscreteCurve) -> String {
    serde_json::to_string_pretty(&CurveDocument::from_curve(c)).expect("curve documents serialize")
}

pub fn read_curve_json<R: Read>(r: R) -> Result<DiscreteCurve, IoError> {
    let doc: CurveDocument = serde_json::from_reader(r)?;
    doc.to_curve()
}

pub fn curve_from_json(s: &str) -> Result<DiscreteCurve, IoError> {
    serde_json::from_str::<CurveDocument>(s)?.to_curve()
}

/// One sample per row: `t,x,y,z`.
pub fn write_curve_csv<W: Write>(w: W, c: &DiscreteCurve) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "x", "y", "z"])?;
    for (j, p) in c.samples().iter().enumerate() {
        out.serialize((c.param(j), p.x, p.y, p.z))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes serialisable rows with a header derived from the field names.
pub fn write_records_csv<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepoutDocument {
    pub scenario: ScenarioDescriptor,
    pub params: Vec<f64>,
    pub slices: Vec<CurveDocument>,
}

impl SweepoutDocument {
    pub fn from_sweepout(sw: &Sweepout) -> Self {
        Self {
            scenario: sw.scenario.clone(),
            params: (0..sw.slices.len()).map(|i| sw.param(i)).collect(),
            slices: sw.slices.iter().map(CurveDocument::from_curve).collect(),
        }
    }

    pub fn to_sweepout(&self) -> Result<Sweepout, IoError> {
        let slices = self.slices.iter().map(CurveDocument::to_curve).collect::<Result<Vec<_>, _>>()?;
        Sweepout::new(slices, self.scenario.clone()).map_err(|e| IoError::Schema(e.to_string()))
    }
}

pub fn write_sweepout_json<W: Write>(w: W, sw: &Sweepout) -> Result<(), IoError> {
    serde_json::to_writer(w, &SweepoutDocument::from_sweepout(sw))?;
    Ok(())
}

pub fn read_sweepout_json<R: Read>(r: R) -> Result<Sweepout, IoError> {
    serde_json::from_reader::<_, SweepoutDocument>(r)?.to_sweepout()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiTraceDocument {
    pub stages: Vec<StageRecord>,
    pub steps: Vec<f64>,
    pub break_images: Vec<f64>,
    pub replacements: Vec<ReplacementRecord>,
    pub curves: Vec<CurveDocument>,
}

pub fn psi_trace_document(t: &PsiTrace) -> PsiTraceDocument {
    PsiTraceDocument {
        stages: t.stages.clone(),
        steps: t.steps.clone(),
        break_images: t.break_images.clone(),
        replacements: t.replacements.clone(),
        curves: t.curves.iter().map(CurveDocument::from_curve).collect(),
    }
}

/// Plot of the ambient xy-projection; sphere curves also get an azimuthal
/// (north-pole) projection panel.
pub fn render_svg(curves: &[&DiscreteCurve], surface: &Surface, highlight: Option<usize>) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 20.0;
    let extent = curves.iter().flat_map(|c| c.samples().iter()).map(|p| p.x.abs().max(p.y.abs())).fold(1e-9, f64::max);
    let azimuthal = matches!(surface, Surface::Sphere { .. });
    let panels = if azimuthal { 2.0 } else { 1.0 };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        panels * (SIZE + 2.0 * PAD),
        SIZE + 2.0 * PAD,
        panels * (SIZE + 2.0 * PAD),
        SIZE + 2.0 * PAD
    );
    let mut panel = |offset: f64, project: &dyn Fn(&Point) -> (f64, f64), scale: f64| {
        let map = |u: f64, v: f64| (offset + PAD + SIZE / 2.0 * (1.0 + u / scale), PAD + SIZE / 2.0 * (1.0 - v / scale));
        let _ =
            writeln!(svg, r##"<rect x="{}" y="{PAD}" width="{SIZE}" height="{SIZE}" fill="none" stroke="#ccc"/>"##, offset + PAD);
        for (i, c) in curves.iter().enumerate() {
            let pts: Vec<String> = c
                .samples()
                .iter()
                .map(|p| {
                    let (u, v) = project(p);
                    let (x, y) = map(u, v);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let (stroke, width) = if Some(i) == highlight { ("#c0392b", 2.0) } else { ("#2c3e50", 0.6) };
            let _ =
                writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#, pts.join(" "));
        }
    };
    panel(0.0, &|p| (p.x, p.y), extent * 1.05);
    if let Surface::Sphere { radius } = *surface {
        // Distance-preserving azimuthal projection about the north pole.
        let proj = move |p: &Point| {
            let theta = (p.z / radius).clamp(-1.0, 1.0).acos();
            let rho = (p.x * p.x + p.y * p.y).sqrt();
            if rho == 0.0 {
                (0.0, 0.0)
            } else {
                (radius * theta * p.x / rho, radius * theta * p.y / rho)
            }
        };
        panel(SIZE + 2.0 * PAD, &proj, radius * std::f64::consts::PI * 1.05);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    fn curve() -> DiscreteCurve {
        DiscreteCurve::from_fn(7, true, |t| Point::new(0.1 * t, (3.0 * t).sin() / 3.0, 1.0 / 7.0))
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let c = curve();
        let back = curve_from_json(&curve_to_json(&c)).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn planar_documents_are_embedded() {
        let s = r#"{"ambient_dim": 2, "params": [0, 0.5, 1], "samples": [[16, 0], [0, 16], [-16, 0]],
                    "endpoints_on_constraint": true}"#;
        let c = curve_from_json(s).unwrap();
        assert_eq!(c.samples()[1], Point::new(0.0, 16.0, 0.0));
    }

    #[test]
    fn malformed_documents_are_rejected() {
        let bad_dim = r#"{"ambient_dim": 3, "params": [0, 1], "samples": [[0, 0], [1, 1]], "endpoints_on_constraint": false}"#;
        assert!(matches!(curve_from_json(bad_dim), Err(IoError::Schema(_))));
        let bad_params =
            r#"{"ambient_dim": 2, "params": [0, 0.7, 1], "samples": [[0, 0], [1, 1], [2, 2]], "endpoints_on_constraint": false}"#;
        assert!(matches!(curve_from_json(bad_params), Err(IoError::Schema(_))));
        assert!(matches!(curve_from_json("{"), Err(IoError::Json(_))));
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &curve()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("t,x,y,z\n0.0,0.0,0.0,"));
    }

    #[test]
    fn sweepout_round_trip() {
        let s = Scenario::disk_circle();
        let sw = crate::sweepout::generate_scenario_sweepout(crate::scenario::SweepoutKind::Disk, &s, 4, 8).unwrap();
        let mut buf = Vec::new();
        write_sweepout_json(&mut buf, &sw).unwrap();
        assert_eq!(read_sweepout_json(&buf[..]).unwrap(), sw);
    }

    #[test]
    fn svg_has_a_polyline_per_curve() {
        let c = curve();
        let svg = render_svg(&[&c, &c], &Surface::Sphere { radius: 16.0 }, Some(1));
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert!(svg.ends_with("</svg>\n"));
    }
}
