//! Rectangular observation windows and finite point patterns.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An axis-aligned box `prod_i [a_i, b_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    /// Per-axis intervals `[a_i, b_i]`.
    pub bounds: Vec<[f64; 2]>,
}

impl Window {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidWindow("window has no axes".into()));
        }
        for (i, b) in bounds.iter().enumerate() {
            if !(b[1] > b[0]) || !b[0].is_finite() || !b[1].is_finite() {
                return Err(Error::InvalidWindow(format!(
                    "axis {i}: [{}, {}] is not a proper interval",
                    b[0], b[1]
                )));
            }
        }
        Ok(Window { bounds })
    }

    /// The square `[-n, n]^2` used throughout the simulation study.
    pub fn centred_square(n: f64) -> Result<Self> {
        Window::new(vec![[-n, n], [-n, n]])
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.bounds[axis][1] - self.bounds[axis][0]
    }

    pub fn min_side(&self) -> f64 {
        (0..self.dimension())
            .map(|i| self.side(i))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dimension()).map(|i| self.side(i)).product()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dimension()
            && point
                .iter()
                .zip(&self.bounds)
                .all(|(x, b)| *x >= b[0] && *x <= b[1])
    }

    /// Translate the window by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Window {
        Window {
            bounds: self
                .bounds
                .iter()
                .zip(shift)
                .map(|(b, s)| [b[0] + s, b[1] + s])
                .collect(),
        }
    }
}

/// A finite set of pairwise distinct points together with the window they
/// were observed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPattern {
    pub window: Window,
    pub points: Vec<Vec<f64>>,
}

impl PointPattern {
    /// Wrap points observed in `window`, checking containment.
    pub fn new(window: Window, points: Vec<Vec<f64>>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !window.contains(p) {
                return Err(Error::InvalidWindow(format!(
                    "point {i} at {p:?} lies outside the window"
                )));
            }
        }
        Ok(PointPattern { window, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.window.dimension()
    }

    /// Translate pattern and window by the same vector.
    pub fn translated(&self, shift: &[f64]) -> PointPattern {
        PointPattern {
            window: self.window.translated(shift),
            points: self
                .points
                .iter()
                .map(|p| p.iter().zip(shift).map(|(x, s)| x + s).collect())
                .collect(),
        }
    }

    /// CSV serialisation: header `x,y[,...]`, one point per row.
    pub fn to_csv(&self) -> String {
        let names = ["x", "y", "z", "w"];
        let mut out = String::new();
        for i in 0..self.dimension() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(names.get(i).copied().unwrap_or("c"));
        }
        out.push('\n');
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parse the CSV form produced by [`PointPattern::to_csv`]. The window is
    /// not part of the CSV and must be supplied.
    pub fn from_csv(text: &str, window: Window) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::MalformedPattern {
            line: 1,
            reason: "empty file".into(),
        })?;
        let dim = header.split(',').count();
        if dim != window.dimension() {
            return Err(Error::MalformedPattern {
                line: 1,
                reason: format!(
                    "header has {dim} columns but the window is {}-dimensional",
                    window.dimension()
                ),
            });
        }
        let mut points = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let coords: Vec<f64> = line
                .split(',')
                .map(|c| {
                    c.trim().parse::<f64>().map_err(|e| Error::MalformedPattern {
                        line: idx + 1,
                        reason: format!("bad coordinate {c:?}: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            if coords.len() != dim {
                return Err(Error::MalformedPattern {
                    line: idx + 1,
                    reason: format!("expected {dim} coordinates, found {}", coords.len()),
                });
            }
            points.push(coords);
        }
        PointPattern::new(window, points)
    }
}

/// JSON record for a sampled pattern: window, points, seed and a digest of
/// the model that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternRecord {
    pub window: Window,
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
    pub model_digest: String,
}

/// FNV-1a digest of a canonical description string; used to fingerprint
/// model/config provenance in sidecars.
pub fn digest(text: &str) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}
