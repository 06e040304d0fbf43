//! Polygons, axis-aligned rectangles and polygon IoU.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Axis-aligned rectangle `(x_min, y_min, x_max, y_max)` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

/// A proposal box. Same layout as [`Rect`], but construction guarantees a
/// positive extent.
pub type ProposalRect = Rect;

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let r = Self {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.y_min, self.x_max, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::invalid(format!("rectangle {self:?} has no positive extent")));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    /// Half-open containment, `[x_min, x_max) x [y_min, y_max)`.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x < self.x_max && p.y >= self.y_min && p.y < self.y_max
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        let iw = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let ih = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        let inter = iw * ih;
        let union = self.area() + other.area() - inter;
        if union > 0.0 {
            inter / union
        } else {
            0.0
        }
    }

    pub fn to_polygon(&self) -> Polygon {
        Polygon {
            vertices: vec![
                Point::new(self.x_min, self.y_min),
                Point::new(self.x_max, self.y_min),
                Point::new(self.x_max, self.y_max),
                Point::new(self.x_min, self.y_max),
            ],
        }
    }
}

/// Closed polygon with any number (≥ 3) of vertices. Self-intersection is
/// allowed; zero-area polygons are valid but [`Polygon::is_degenerate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl TryFrom<Vec<[f64; 2]>> for Polygon {
    type Error = Error;

    fn try_from(pts: Vec<[f64; 2]>) -> Result<Self> {
        Polygon::new(pts.into_iter().map(|[x, y]| Point::new(x, y)).collect())
    }
}

impl From<Polygon> for Vec<[f64; 2]> {
    fn from(p: Polygon) -> Self {
        p.vertices.iter().map(|v| [v.x, v.y]).collect()
    }
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::invalid(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::invalid("polygon has a non-finite vertex"));
        }
        Ok(Self { vertices })
    }

    pub fn from_coords(coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(coords.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Shoelace area, positive for counter-clockwise (y-up) ordering.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
            / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn is_degenerate(&self) -> bool {
        self.area() <= f64::EPSILON * self.bounding_rect_unchecked().1
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                (b.x - a.x).hypot(b.y - a.y)
            })
            .sum()
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().copied().map(f).collect(),
        }
    }

    /// Winding number of the boundary around `p`.
    pub fn winding_number(&self, p: Point) -> i32 {
        let n = self.vertices.len();
        let mut wn = 0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if a.y <= p.y {
                if b.y > p.y && cross(a, b, p) > 0.0 {
                    wn += 1;
                }
            } else if b.y <= p.y && cross(a, b, p) < 0.0 {
                wn -= 1;
            }
        }
        wn
    }

    /// Nonzero winding rule.
    pub fn contains(&self, p: Point) -> bool {
        self.winding_number(p) != 0
    }

    fn bounding_rect_unchecked(&self) -> (Rect, f64) {
        let mut r = Rect {
            x_min: f64::INFINITY,
            y_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for v in &self.vertices {
            r.x_min = r.x_min.min(v.x);
            r.y_min = r.y_min.min(v.y);
            r.x_max = r.x_max.max(v.x);
            r.y_max = r.y_max.max(v.y);
        }
        let scale = (r.x_max - r.x_min).max(r.y_max - r.y_min).powi(2).max(1.0);
        (r, scale)
    }

    /// Smallest axis-aligned rectangle covering the polygon. Fails only when
    /// the polygon is flat along an axis.
    pub fn bounding_rect(&self) -> Result<Rect> {
        let (r, _) = self.bounding_rect_unchecked();
        r.validate()?;
        Ok(r)
    }

    /// Fan decomposition from the first vertex into signed triangles. The sum
    /// of their signed indicator functions equals the winding number almost
    /// everywhere.
    fn signed_triangles(&self) -> impl Iterator<Item = ([Point; 3], f64)> + '_ {
        let p0 = self.vertices[0];
        self.vertices[1..].windows(2).filter_map(move |w| {
            let a = cross(p0, w[0], w[1]) / 2.0;
            if a > 0.0 {
                Some(([p0, w[0], w[1]], 1.0))
            } else if a < 0.0 {
                Some(([p0, w[1], w[0]], -1.0))
            } else {
                None
            }
        })
    }
}

/// Area of the intersection of two counter-clockwise convex polygons
/// (Sutherland-Hodgman).
fn convex_intersection_area(subject: &[Point], clip: &[Point]) -> f64 {
    let mut poly: Vec<Point> = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if poly.is_empty() {
            return 0.0;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let input = std::mem::take(&mut poly);
        let n = input.len();
        for j in 0..n {
            let cur = input[j];
            let prev = input[(j + n - 1) % n];
            let cur_in = cross(a, b, cur) >= 0.0;
            let prev_in = cross(a, b, prev) >= 0.0;
            if cur_in {
                if !prev_in {
                    poly.push(segment_line_intersection(prev, cur, a, b));
                }
                poly.push(cur);
            } else if prev_in {
                poly.push(segment_line_intersection(prev, cur, a, b));
            }
        }
    }
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let p = poly[i];
            let q = poly[(i + 1) % n];
            p.x * q.y - q.x * p.y
        })
        .sum();
    (twice / 2.0).max(0.0)
}

fn segment_line_intersection(p: Point, q: Point, a: Point, b: Point) -> Point {
    let dp = cross(a, b, p);
    let dq = cross(a, b, q);
    let t = dp / (dp - dq);
    Point::new(p.x + (q.x - p.x) * t, p.y + (q.y - p.y) * t)
}

/// Area of `a ∩ b`, with each polygon's interior weighted by its winding
/// number (orientation-normalized). Exact for simple polygons.
pub fn intersection_area(a: &Polygon, b: &Polygon) -> f64 {
    let sa = a.signed_area().signum();
    let sb = b.signed_area().signum();
    if sa == 0.0 || sb == 0.0 {
        return 0.0;
    }
    let tb: Vec<_> = b.signed_triangles().collect();
    let mut total = 0.0;
    for (ta, wa) in a.signed_triangles() {
        for (tri, wb) in &tb {
            total += wa * wb * convex_intersection_area(&ta, tri);
        }
    }
    (total * sa * sb).max(0.0)
}

/// Intersection over union of two polygons; 0 when the union is empty.
pub fn polygon_iou(a: &Polygon, b: &Polygon) -> f64 {
    let inter = intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(c: &[(f64, f64)]) -> Polygon {
        Polygon::from_coords(c).unwrap()
    }

    fn square(x: f64, y: f64, s: f64) -> Polygon {
        poly(&[(x, y), (x + s, y), (x + s, y + s), (x, y + s)])
    }

    #[test]
    fn rejects_short_or_nonfinite() {
        assert!(Polygon::from_coords(&[(0.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(Polygon::from_coords(&[(0.0, 0.0), (1.0, f64::NAN), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn iou_examples() {
        let a = square(0.0, 0.0, 1.0);
        assert!((polygon_iou(&a, &a) - 1.0).abs() < 1e-12);
        assert_eq!(polygon_iou(&a, &square(5.0, 5.0, 1.0)), 0.0);
        let b = square(0.5, 0.0, 1.0);
        assert!((polygon_iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn iou_ignores_orientation() {
        let a = square(0.0, 0.0, 2.0);
        let rev = Polygon::new(a.vertices().iter().rev().copied().collect()).unwrap();
        let b = square(1.0, 1.0, 2.0);
        assert!((polygon_iou(&rev, &b) - polygon_iou(&a, &b)).abs() < 1e-12);
        assert!((polygon_iou(&rev, &b) - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn iou_non_convex() {
        // L-shape of area 3 against the unit square filling its notch.
        let l = poly(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]);
        assert!((l.area() - 3.0).abs() < 1e-12);
        assert_eq!(intersection_area(&l, &square(1.0, 1.0, 1.0)), 0.0);
        let full = square(0.0, 0.0, 2.0);
        assert!((polygon_iou(&l, &full) - 0.75).abs() < 1e-12);
        assert!((intersection_area(&l, &square(0.5, 0.5, 1.0)) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn degenerate_polygon() {
        let flat = poly(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]);
        assert!(flat.is_degenerate());
        assert_eq!(polygon_iou(&flat, &flat), 0.0);
        assert!(!square(0.0, 0.0, 1.0).is_degenerate());
    }

    #[test]
    fn bounding_rect_examples() {
        let sq = square(1.0, 2.0, 3.0);
        assert_eq!(sq.bounding_rect().unwrap(), Rect::new(1.0, 2.0, 4.0, 5.0).unwrap());
        let tri = poly(&[(0.0, 0.0), (4.0, 0.0), (0.0, 2.0)]);
        assert_eq!(tri.bounding_rect().unwrap(), Rect::new(0.0, 0.0, 4.0, 2.0).unwrap());
        let diamond = poly(&[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]);
        assert_eq!(diamond.bounding_rect().unwrap(), Rect::new(-1.0, -1.0, 1.0, 1.0).unwrap());
    }

    #[test]
    fn winding_rule() {
        let sq = square(0.0, 0.0, 2.0);
        assert!(sq.contains(Point::new(1.0, 1.0)));
        assert!(!sq.contains(Point::new(3.0, 1.0)));
        // Pentagram: the centre has winding number 2 and is inside under nonzero.
        let star: Vec<(f64, f64)> = (0..5)
            .map(|k| {
                let a = std::f64::consts::FRAC_PI_2 + k as f64 * 4.0 * std::f64::consts::PI / 5.0;
                (a.cos(), a.sin())
            })
            .collect();
        let star = poly(&star);
        assert_eq!(star.winding_number(Point::new(0.0, 0.0)).abs(), 2);
        assert!(star.contains(Point::new(0.0, 0.0)));
    }

    fn rect_strategy() -> impl Strategy<Value = Rect> {
        (-20.0f64..20.0, -20.0f64..20.0, 0.1f64..15.0, 0.1f64..15.0)
            .prop_map(|(x, y, w, h)| Rect::new(x, y, x + w, y + h).unwrap())
    }

    proptest! {
        #[test]
        fn polygon_iou_matches_rectangle_closed_form(a in rect_strategy(), b in rect_strategy()) {
            let pa = a.to_polygon();
            let pb = b.to_polygon();
            let got = polygon_iou(&pa, &pb);
            prop_assert!((got - a.iou(&b)).abs() < 1e-9);
            prop_assert!((got - polygon_iou(&pb, &pa)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&got));
        }
    }
}
