//! Height policy, normalized feature vectors, the feature CSV and the radar chart.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{surface_area, CurvePath, TriMesh};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("feature dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("expected {expected} explicit heights, got {got}")]
    HeightCount { expected: usize, got: usize },
    #[error("height {1} of curve {0} is not positive")]
    NonPositiveHeight(usize, f64),
    #[error("bad feature csv: {0}")]
    Csv(String),
    #[error("subject {0} not found")]
    UnknownSubject(String),
}

/// How the prescribed heights `h_k` are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "values")]
pub enum HeightPolicy {
    /// Curve length over the square root of the surface area.
    #[default]
    CurveLength,
    Uniform,
    Explicit(Vec<f64>),
}

pub fn curve_length(mesh: &TriMesh, curve: &CurvePath) -> f64 {
    curve.segments().map(|(a, b)| mesh.edge_length(a, b)).sum()
}

pub fn prescribed_heights(mesh: &TriMesh, curves: &[CurvePath], policy: &HeightPolicy) -> Result<Vec<f64>, FeatureError> {
    let heights = match policy {
        HeightPolicy::CurveLength => {
            let root = surface_area(mesh).sqrt();
            curves.iter().map(|c| curve_length(mesh, c) / root).collect()
        }
        HeightPolicy::Uniform => vec![1.0; curves.len()],
        HeightPolicy::Explicit(h) => {
            if h.len() != curves.len() {
                return Err(FeatureError::HeightCount { expected: curves.len(), got: h.len() });
            }
            h.clone()
        }
    };
    for (k, &h) in heights.iter().enumerate() {
        if !(h > 0.0 && h.is_finite()) {
            return Err(FeatureError::NonPositiveHeight(k, h));
        }
    }
    Ok(heights)
}

/// `(H_1, C_1, ..., H_n, C_n)` for one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub subject: String,
    pub label: String,
    pub features: Vec<f64>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// Heights and circumferences normalized by the total flat area `sum h_k l_k`.
pub fn normalized_features(modules: &[(f64, f64)]) -> Vec<f64> {
    let area: f64 = modules.iter().map(|&(h, l)| h * l).sum();
    let root = area.sqrt();
    modules.iter().flat_map(|&(h, l)| [h / root, l / root]).collect()
}

pub fn feature_vector(subject: &str, label: &str, modules: &[(f64, f64)]) -> FeatureVector {
    FeatureVector { subject: subject.to_string(), label: label.to_string(), features: normalized_features(modules) }
}

pub fn feature_names(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("{}{}", if i % 2 == 0 { 'H' } else { 'C' }, i / 2 + 1)).collect()
}

/// `subject,label,H1,C1,...`; every row must have the same dimension.
pub fn write_features_csv(rows: &[FeatureVector]) -> Result<String, FeatureError> {
    let dim = rows.first().map_or(0, |r| r.dim());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["subject".to_string(), "label".to_string()];
    header.extend(feature_names(dim));
    w.write_record(&header).map_err(|e| FeatureError::Csv(e.to_string()))?;
    for r in rows {
        if r.dim() != dim {
            return Err(FeatureError::DimensionMismatch(dim, r.dim()));
        }
        let mut rec = vec![r.subject.clone(), r.label.clone()];
        rec.extend(r.features.iter().map(|x| format!("{x:?}")));
        w.write_record(&rec).map_err(|e| FeatureError::Csv(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| FeatureError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| FeatureError::Csv(e.to_string()))
}

pub fn read_features_csv(text: &str) -> Result<Vec<FeatureVector>, FeatureError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| FeatureError::Csv(e.to_string()))?.clone();
    if header.len() < 2 || &header[0] != "subject" || &header[1] != "label" {
        return Err(FeatureError::Csv("header must start with subject,label".into()));
    }
    let dim = header.len() - 2;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| FeatureError::Csv(e.to_string()))?;
        let features = rec
            .iter()
            .skip(2)
            .map(|s| s.trim().parse::<f64>().map_err(|_| FeatureError::Csv(format!("row {}: bad number {s:?}", i + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        if features.len() != dim {
            return Err(FeatureError::DimensionMismatch(dim, features.len()));
        }
        rows.push(FeatureVector { subject: rec[0].to_string(), label: rec[1].to_string(), features });
    }
    Ok(rows)
}

const SIZE: f64 = 480.0;
const RADIUS: f64 = 170.0;
const COLORS: [&str; 2] = ["#c0392b", "#2471a3"];

/// Two-subject radar chart. Each axis is scaled to the larger of the two
/// values on it, so the outer ring is 1 on every axis.
pub fn radar_svg(a: &FeatureVector, b: &FeatureVector, labels: &[String]) -> Result<String, FeatureError> {
    let n = a.dim();
    if n == 0 || b.dim() != n {
        return Err(FeatureError::DimensionMismatch(n, b.dim()));
    }
    if labels.len() != n {
        return Err(FeatureError::DimensionMismatch(n, labels.len()));
    }
    let c = SIZE / 2.0;
    let at = |i: usize, r: f64| {
        let angle = -PI / 2.0 + 2.0 * PI * i as f64 / n as f64;
        (c + r * angle.cos(), c + r * angle.sin())
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    for ring in 1..=4 {
        let r = RADIUS * ring as f64 / 4.0;
        let pts: Vec<String> = (0..n).map(|i| at(i, r)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(s, r##"<polygon points="{}" fill="none" stroke="#cccccc"/>"##, pts.join(" "));
    }
    for (i, label) in labels.iter().enumerate() {
        let (x, y) = at(i, RADIUS);
        let (lx, ly) = at(i, RADIUS + 18.0);
        let _ = writeln!(s, r##"<line x1="{c:.2}" y1="{c:.2}" x2="{x:.2}" y2="{y:.2}" stroke="#999999"/>"##);
        let _ = writeln!(
            s,
            r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
            escape(label)
        );
    }
    for (k, v) in [a, b].into_iter().enumerate() {
        let pts: Vec<String> = (0..n)
            .map(|i| {
                let top = a.features[i].abs().max(b.features[i].abs());
                let r = if top > 0.0 { RADIUS * v.features[i].abs() / top } else { 0.0 };
                let (x, y) = at(i, r);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon class="subject" data-subject="{}" points="{}" fill="{}" fill-opacity="0.2" stroke="{}" stroke-width="2"/>"#,
            escape(&v.subject),
            pts.join(" "),
            COLORS[k],
            COLORS[k]
        );
        let _ = writeln!(
            s,
            r#"<text x="12" y="{}" fill="{}">{}</text>"#,
            20 + 16 * k,
            COLORS[k],
            escape(&format!("{} ({})", v.subject, v.label))
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cylinder_product_is_one() {
        let f = normalized_features(&[(0.7, 2.3)]);
        assert!((f[0] * f[1] - 1.0).abs() < 1e-15);
        assert!((f[0] - (0.7f64 / 2.3).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn names_alternate() {
        assert_eq!(feature_names(4), ["H1", "C1", "H2", "C2"]);
    }

    #[test]
    fn explicit_heights_are_checked() {
        let g = crate::generate::flat_torus(1.0, 1.0, 6).unwrap();
        assert_eq!(
            prescribed_heights(&g.mesh, &g.curves, &HeightPolicy::Explicit(vec![1.0, 2.0])),
            Err(FeatureError::HeightCount { expected: 1, got: 2 })
        );
        assert_eq!(
            prescribed_heights(&g.mesh, &g.curves, &HeightPolicy::Explicit(vec![-1.0])),
            Err(FeatureError::NonPositiveHeight(0, -1.0))
        );
    }
}
