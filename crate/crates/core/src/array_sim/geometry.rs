use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_SOUND: f64 = 343.0;

/// Inter-microphone spacing (linear) and circumradius (polygons), in meters.
pub const DEFAULT_SPACING: f64 = 0.1;

/// Polar position relative to the reference microphone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicPosition {
    pub radius: f64,
    pub angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    mics: Vec<MicPosition>,
    speed_of_sound: f64,
}

/// The array families swept in the geometry experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeometryKind {
    Linear,
    Triangle,
    Square,
    Pentagon,
    Hexagon,
}

impl GeometryKind {
    pub const ALL: [GeometryKind; 5] = [
        GeometryKind::Linear,
        GeometryKind::Triangle,
        GeometryKind::Square,
        GeometryKind::Pentagon,
        GeometryKind::Hexagon,
    ];

    /// Vertex count for polygons; `None` for the linear family.
    pub fn vertices(self) -> Option<usize> {
        match self {
            GeometryKind::Linear => None,
            GeometryKind::Triangle => Some(3),
            GeometryKind::Square => Some(4),
            GeometryKind::Pentagon => Some(5),
            GeometryKind::Hexagon => Some(6),
        }
    }

    /// Default geometry of this family with `mics` microphones (ignored for polygons).
    pub fn build(self, mics: usize) -> Result<ArrayGeometry> {
        match self.vertices() {
            None => ArrayGeometry::linear(mics, DEFAULT_SPACING),
            Some(n) => ArrayGeometry::polygon(n, DEFAULT_SPACING),
        }
    }
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GeometryKind::Linear => "linear",
            GeometryKind::Triangle => "triangle",
            GeometryKind::Square => "square",
            GeometryKind::Pentagon => "pentagon",
            GeometryKind::Hexagon => "hexagon",
        };
        f.write_str(s)
    }
}

impl FromStr for GeometryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(GeometryKind::Linear),
            "triangle" => Ok(GeometryKind::Triangle),
            "square" => Ok(GeometryKind::Square),
            "pentagon" => Ok(GeometryKind::Pentagon),
            "hexagon" => Ok(GeometryKind::Hexagon),
            other => Err(Error::invalid(format!("unknown geometry family '{other}'"))),
        }
    }
}

impl ArrayGeometry {
    /// Microphone 0 must sit at the origin; at least two microphones.
    pub fn new(mics: Vec<MicPosition>, speed_of_sound: f64) -> Result<Self> {
        if mics.len() < 2 {
            return Err(Error::invalid(format!(
                "an array needs at least 2 microphones, got {}",
                mics.len()
            )));
        }
        if mics[0].radius != 0.0 {
            return Err(Error::invalid("reference microphone must have radius 0"));
        }
        if let Some(m) = mics
            .iter()
            .find(|m| !(m.radius >= 0.0) || !m.radius.is_finite() || !m.angle_deg.is_finite())
        {
            return Err(Error::invalid(format!("invalid microphone position {m:?}")));
        }
        if !(speed_of_sound > 0.0) {
            return Err(Error::invalid("speed of sound must be positive"));
        }
        Ok(Self {
            mics,
            speed_of_sound,
        })
    }

    /// Uniform linear array laid along the 90° axis, so that 0° is broadside
    /// and every DOA in [-90°, 90°] maps to a distinct delay.
    pub fn linear(mics: usize, spacing: f64) -> Result<Self> {
        Self::linear_along(mics, spacing, 90.0)
    }

    pub fn linear_along(mics: usize, spacing: f64, axis_deg: f64) -> Result<Self> {
        let positions = (0..mics)
            .map(|m| MicPosition {
                radius: m as f64 * spacing,
                angle_deg: if m == 0 { 0.0 } else { axis_deg },
            })
            .collect();
        Self::new(positions, SPEED_OF_SOUND)
    }

    /// Regular polygon with the given circumradius; the reference sits on a vertex.
    pub fn polygon(vertices: usize, circumradius: f64) -> Result<Self> {
        if vertices < 3 {
            return Err(Error::invalid("a polygon needs at least 3 vertices"));
        }
        let step = 2.0 * PI / vertices as f64;
        let positions = (0..vertices)
            .map(|k| {
                let a = step * k as f64;
                let x = circumradius * (a.cos() - 1.0);
                let y = circumradius * a.sin();
                let radius = x.hypot(y);
                MicPosition {
                    radius: if k == 0 { 0.0 } else { radius },
                    angle_deg: if k == 0 { 0.0 } else { y.atan2(x).to_degrees() },
                }
            })
            .collect();
        Self::new(positions, SPEED_OF_SOUND)
    }

    pub fn mics(&self) -> &[MicPosition] {
        &self.mics
    }

    pub fn num_mics(&self) -> usize {
        self.mics.len()
    }

    pub fn speed_of_sound(&self) -> f64 {
        self.speed_of_sound
    }

    /// Parses the plain-text format: one `radius angle_deg` pair per line,
    /// the first line being `0 0`. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut mics = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::invalid(format!(
                    "geometry line {}: expected 'radius angle', got '{line}'",
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::invalid(format!("geometry line {}: bad number '{s}'", lineno + 1))
                })
            };
            let radius = parse(fields[0])?;
            let angle_deg = parse(fields[1])?;
            if mics.is_empty() && (radius != 0.0 || angle_deg != 0.0) {
                return Err(Error::invalid("geometry line 1 must be '0 0' (reference microphone)"));
            }
            mics.push(MicPosition { radius, angle_deg });
        }
        Self::new(mics, SPEED_OF_SOUND)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::data(path, e.to_string()))?;
        Self::parse(&text).map_err(|e| Error::data(path, e.to_string()))
    }

    pub fn to_text(&self) -> String {
        self.mics
            .iter()
            .map(|m| format!("{} {}\n", m.radius, m.angle_deg))
            .collect()
    }
}
