//! Manhattan-grid road geometry and line-of-sight queries.
//!
//! The grid is built from axis-aligned road strips spanning the full extent;
//! everything between the strips is filled with building rectangles. Roads in
//! each direction are evenly spaced with the outermost road edges flush with
//! the grid boundary (a single road is centred instead), so a 3+3 road grid
//! yields exactly four interior building blocks.

use serde::{Deserialize, Serialize};

use super::ScenarioError;

/// A point in metres within the grid extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Orientation of a road strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// The road runs along x; its strip is a band in y.
    Horizontal,
    /// The road runs along y; its strip is a band in x.
    Vertical,
}

/// An axis-aligned road spanning the full grid extent along its axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Road {
    pub axis: Axis,
    /// Centre coordinate of the strip on the perpendicular axis.
    pub center: f64,
    pub lanes: u32,
    pub lane_width: f64,
}

impl Road {
    pub fn half_width(&self) -> f64 {
        self.lanes as f64 * self.lane_width / 2.0
    }

    /// Perpendicular-axis coordinate of a lane centreline. Lanes are indexed
    /// from the low-coordinate edge of the strip.
    pub fn lane_center(&self, lane: u32) -> f64 {
        debug_assert!(lane < self.lanes);
        self.center - self.half_width() + (lane as f64 + 0.5) * self.lane_width
    }

    /// Lanes carrying traffic in the positive axis direction occupy the low
    /// half of the strip (the first `ceil(lanes/2)` indices).
    pub fn lanes_for_direction(&self, positive: bool) -> std::ops::Range<u32> {
        let split = self.lanes.div_ceil(2);
        if positive {
            0..split
        } else {
            split..self.lanes
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        let c = match self.axis {
            Axis::Horizontal => p.y,
            Axis::Vertical => p.x,
        };
        (c - self.center).abs() <= self.half_width() + 1e-9
    }
}

/// Axis-aligned building rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min: Point, max: Point) -> Self {
        Rect { min, max }
    }

    pub fn contains_strict(&self, p: Point) -> bool {
        self.min.x < p.x && p.x < self.max.x && self.min.y < p.y && p.y < self.max.y
    }
}

/// Parameters for [`build_manhattan_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub extent_m: (f64, f64),
    pub horizontal_roads: u32,
    pub vertical_roads: u32,
    pub lanes_per_road: u32,
    pub lane_width_m: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            extent_m: (100.0, 100.0),
            horizontal_roads: 3,
            vertical_roads: 3,
            lanes_per_road: 4,
            lane_width_m: 3.2,
        }
    }
}

/// Immutable road/building layout for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub extent: (f64, f64),
    pub roads: Vec<Road>,
    pub buildings: Vec<Rect>,
}

impl Geometry {
    pub fn within_extent(&self, p: Point) -> bool {
        0.0 <= p.x && p.x <= self.extent.0 && 0.0 <= p.y && p.y <= self.extent.1
    }

    pub fn is_on_road(&self, p: Point) -> bool {
        self.within_extent(p) && self.roads.iter().any(|r| r.contains(p))
    }

    /// True iff the open segment `(a, b)` crosses no building interior.
    /// A segment grazing exactly along a building edge keeps line of sight.
    pub fn is_los(&self, a: Point, b: Point) -> bool {
        !self
            .buildings
            .iter()
            .any(|rect| segment_crosses_interior(a, b, rect))
    }

    pub fn roads_along(&self, axis: Axis) -> impl Iterator<Item = (usize, &Road)> {
        self.roads
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.axis == axis)
    }
}

/// Liang–Barsky clip of the segment against the closed rectangle; the segment
/// blocks only when the clipped portion has positive length and its midpoint
/// is strictly inside (open-intersection convention).
fn segment_crosses_interior(a: Point, b: Point, rect: &Rect) -> bool {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    let bounds = [
        (-dx, a.x - rect.min.x),
        (dx, rect.max.x - a.x),
        (-dy, a.y - rect.min.y),
        (dy, rect.max.y - a.y),
    ];
    for (p, q) in bounds {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                if t > t1 {
                    return false;
                }
                if t > t0 {
                    t0 = t;
                }
            } else {
                if t < t0 {
                    return false;
                }
                if t < t1 {
                    t1 = t;
                }
            }
        }
    }
    if t1 <= t0 {
        return false;
    }
    let tm = 0.5 * (t0 + t1);
    rect.contains_strict(Point::new(a.x + tm * dx, a.y + tm * dy))
}

/// Distance from point `c` to the closed segment `(a, b)`.
pub(crate) fn segment_point_distance(a: Point, b: Point, c: Point) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return a.distance(c);
    }
    let t = (((c.x - a.x) * dx + (c.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    Point::new(a.x + t * dx, a.y + t * dy).distance(c)
}

/// Builds the road grid and fills every gap between road strips with a
/// building rectangle. Deterministic for a given config.
pub fn build_manhattan_grid(config: &GeometryConfig) -> Result<Geometry, ScenarioError> {
    let (w, h) = config.extent_m;
    if !(w > 0.0 && h > 0.0) {
        return Err(ScenarioError::InvalidGeometry(format!(
            "extent must be positive, got {w} x {h}"
        )));
    }
    if config.horizontal_roads < 1 || config.vertical_roads < 1 {
        return Err(ScenarioError::InvalidGeometry(
            "road counts must be >= 1".into(),
        ));
    }
    if config.lanes_per_road < 1 {
        return Err(ScenarioError::InvalidGeometry(
            "lanes_per_road must be >= 1".into(),
        ));
    }
    if !(config.lane_width_m > 0.0) {
        return Err(ScenarioError::InvalidGeometry(
            "lane_width_m must be > 0".into(),
        ));
    }

    let road_width = config.lanes_per_road as f64 * config.lane_width_m;
    let centers = |n: u32, extent: f64| -> Result<Vec<f64>, ScenarioError> {
        if road_width * n as f64 > extent + 1e-9 {
            return Err(ScenarioError::InvalidGeometry(format!(
                "{n} roads of width {road_width} m do not fit in {extent} m"
            )));
        }
        if n == 1 {
            return Ok(vec![extent / 2.0]);
        }
        let step = (extent - road_width) / (n as f64 - 1.0);
        if step < road_width - 1e-9 {
            return Err(ScenarioError::InvalidGeometry(format!(
                "{n} roads of width {road_width} m overlap in {extent} m"
            )));
        }
        Ok((0..n)
            .map(|k| road_width / 2.0 + k as f64 * step)
            .collect())
    };

    let h_centers = centers(config.horizontal_roads, h)?;
    let v_centers = centers(config.vertical_roads, w)?;

    let mut roads = Vec::new();
    for &c in &h_centers {
        roads.push(Road {
            axis: Axis::Horizontal,
            center: c,
            lanes: config.lanes_per_road,
            lane_width: config.lane_width_m,
        });
    }
    for &c in &v_centers {
        roads.push(Road {
            axis: Axis::Vertical,
            center: c,
            lanes: config.lanes_per_road,
            lane_width: config.lane_width_m,
        });
    }

    // Gaps between road strips on each axis; their cartesian product is the
    // building set.
    let gaps = |cs: &[f64], extent: f64| -> Vec<(f64, f64)> {
        let half = road_width / 2.0;
        let mut out = Vec::new();
        let mut cursor = 0.0;
        for &c in cs {
            let lo = c - half;
            if lo - cursor > 1e-9 {
                out.push((cursor, lo));
            }
            cursor = c + half;
        }
        if extent - cursor > 1e-9 {
            out.push((cursor, extent));
        }
        out
    };

    let x_gaps = gaps(&v_centers, w);
    let y_gaps = gaps(&h_centers, h);
    let mut buildings = Vec::new();
    for &(x0, x1) in &x_gaps {
        for &(y0, y1) in &y_gaps {
            buildings.push(Rect::new(Point::new(x0, y0), Point::new(x1, y1)));
        }
    }

    Ok(Geometry {
        extent: config.extent_m,
        roads,
        buildings,
    })
}
