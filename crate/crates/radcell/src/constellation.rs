//! Square QAM constellations at unit average power.
//!
//! Points are stored row-major over the in-phase/quadrature lattice, most
//! negative level first, so index `i * m + q` holds in-phase level `i` and
//! quadrature level `q` of an `m x m` grid.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Axis-aligned decision region around a constellation point, as signed
/// offsets from the point. Offsets facing away from the hull are infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRegion {
    pub d_lr: f64,
    pub d_ur: f64,
    pub d_li: f64,
    pub d_ui: f64,
}

impl DecisionRegion {
    /// Whether the offset `u` (relative to the point) lies in the closed region.
    pub fn contains(&self, u: Complex64) -> bool {
        u.re >= self.d_lr && u.re <= self.d_ur && u.im >= self.d_li && u.im <= self.d_ui
    }

    pub fn is_bounded(&self) -> bool {
        self.d_lr.is_finite() && self.d_ur.is_finite() && self.d_li.is_finite() && self.d_ui.is_finite()
    }

    /// Distance from the point to the farthest corner, infinite for unbounded regions.
    pub fn circumradius(&self) -> f64 {
        let x = self.d_lr.abs().max(self.d_ur.abs());
        let y = self.d_li.abs().max(self.d_ui.abs());
        x.hypot(y)
    }

    /// Distance from the point to the nearest edge.
    pub fn inradius(&self) -> f64 {
        self.d_lr.abs().min(self.d_ur).min(self.d_li.abs()).min(self.d_ui)
    }
}

#[derive(Debug, Clone)]
pub struct Constellation {
    order: usize,
    side: usize,
    scale: f64,
    points: Vec<Complex64>,
    d_c: f64,
    boundary: Vec<usize>,
    interior: Vec<usize>,
}

impl Constellation {
    pub fn qam(order: usize) -> Result<Self> {
        build_qam(order)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of levels per axis.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Minimum distance between two points.
    pub fn d_c(&self) -> f64 {
        self.d_c
    }

    pub fn boundary_set(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior_set(&self) -> &[usize] {
        &self.interior
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        let (i, q) = (index / self.side, index % self.side);
        i == 0 || q == 0 || i + 1 == self.side || q + 1 == self.side
    }

    /// Brute-force nearest point. Ties go to the lowest index.
    pub fn nearest_neighbor(&self, y: Complex64) -> Result<(usize, f64)> {
        if !y.re.is_finite() || !y.im.is_finite() {
            return Err(Error::Input(format!("non-finite symbol {y}")));
        }
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (j, p) in self.points.iter().enumerate() {
            let d2 = (y - p).norm_sqr();
            if d2 < best_d2 {
                best = j;
                best_d2 = d2;
            }
        }
        Ok((best, best_d2.sqrt()))
    }

    /// Nearest point by per-axis slicing, O(1). Agrees with
    /// [`nearest_neighbor`](Self::nearest_neighbor) including the tie rule.
    /// The caller guarantees `y` is finite.
    pub fn slice(&self, y: Complex64) -> usize {
        match (self.slice_axis(y.re), self.slice_axis(y.im)) {
            (Some(i), Some(q)) => i * self.side + q,
            // On a decision boundary rounding decides; defer to the brute-force rule.
            _ => self.nearest_neighbor(y).map_or(0, |(j, _)| j),
        }
    }

    fn slice_axis(&self, v: f64) -> Option<usize> {
        let m = self.side as f64;
        let t = (v / self.scale + (m - 1.0)) / 2.0;
        let f = t.floor();
        let frac = t - f;
        if (frac - 0.5).abs() < 1e-9 && t > 0.0 && t < m - 1.0 {
            return None;
        }
        let level = if frac > 0.5 { f + 1.0 } else { f };
        Some(level.clamp(0.0, m - 1.0) as usize)
    }

    pub fn decision_region(&self, index: usize) -> DecisionRegion {
        let (i, q) = (index / self.side, index % self.side);
        let h = self.d_c / 2.0;
        let last = self.side - 1;
        DecisionRegion {
            d_lr: if i == 0 { f64::NEG_INFINITY } else { -h },
            d_ur: if i == last { f64::INFINITY } else { h },
            d_li: if q == 0 { f64::NEG_INFINITY } else { -h },
            d_ui: if q == last { f64::INFINITY } else { h },
        }
    }
}

/// Builds a square QAM constellation of order 4, 16 or 64 with unit
/// average power.
pub fn build_qam(order: usize) -> Result<Constellation> {
    let side = match order {
        4 => 2,
        16 => 4,
        64 => 8,
        _ => return Err(Error::Config(format!("unsupported QAM order {order}"))),
    };
    // Mean energy of the odd-integer lattice {±1, ±3, ...}² is 2(M-1)/3.
    let scale = 1.0 / (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
    let level = |i: usize| (2.0 * i as f64 - (side as f64 - 1.0)) * scale;
    let mut points = Vec::with_capacity(order);
    let mut boundary = Vec::new();
    let mut interior = Vec::new();
    for i in 0..side {
        for q in 0..side {
            let idx = points.len();
            points.push(Complex64::new(level(i), level(q)));
            if i == 0 || q == 0 || i + 1 == side || q + 1 == side {
                boundary.push(idx);
            } else {
                interior.push(idx);
            }
        }
    }
    Ok(Constellation { order, side, scale, points, d_c: 2.0 * scale, boundary, interior })
}

/// Modulation schemes used by the link model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub const ALL: [Modulation; 3] = [Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64];

    pub fn order(self) -> usize {
        match self {
            Modulation::Qpsk => 4,
            Modulation::Qam16 => 16,
            Modulation::Qam64 => 64,
        }
    }

    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            4 => Ok(Modulation::Qpsk),
            16 => Ok(Modulation::Qam16),
            64 => Ok(Modulation::Qam64),
            _ => Err(Error::Config(format!("unsupported QAM order {order}"))),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
            Modulation::Qam64 => "64qam",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Ok(Modulation::Qpsk),
            "16qam" | "qam16" => Ok(Modulation::Qam16),
            "64qam" | "qam64" => Ok(Modulation::Qam64),
            _ => Err(Error::Config(format!("unknown modulation '{s}'"))),
        }
    }

    pub fn constellation(self) -> Constellation {
        build_qam(self.order()).expect("supported order")
    }
}
