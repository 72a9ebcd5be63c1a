/// A polygon in projected meters, ready for repeated point-in-polygon tests.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPolygon {
    pts: Vec<(f64, f64)>,
    min: (f64, f64),
    max: (f64, f64),
}

impl PlanarPolygon {
    /// Builds a polygon from its vertices. A closing vertex equal to the first
    /// one is dropped.
    pub fn new(mut pts: Vec<(f64, f64)>) -> Self {
        if pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        let mut min = (f64::INFINITY, f64::INFINITY);
        let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &pts {
            min = (min.0.min(x), min.1.min(y));
            max = (max.0.max(x), max.1.max(y));
        }
        PlanarPolygon { pts, min, max }
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.pts
    }

    pub fn bbox(&self) -> ((f64, f64), (f64, f64)) {
        (self.min, self.max)
    }

    /// Signed shoelace area; positive for counter-clockwise winding.
    pub fn signed_area(&self) -> f64 {
        let n = self.pts.len();
        if n < 3 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..n {
            let (x0, y0) = self.pts[i];
            let (x1, y1) = self.pts[(i + 1) % n];
            acc += x0 * y1 - x1 * y0;
        }
        acc / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Area centroid.
    pub fn centroid(&self) -> (f64, f64) {
        let n = self.pts.len();
        let a = self.signed_area();
        if a == 0.0 {
            let sx: f64 = self.pts.iter().map(|p| p.0).sum();
            let sy: f64 = self.pts.iter().map(|p| p.1).sum();
            return (sx / n.max(1) as f64, sy / n.max(1) as f64);
        }
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let (x0, y0) = self.pts[i];
            let (x1, y1) = self.pts[(i + 1) % n];
            let cross = x0 * y1 - x1 * y0;
            cx += (x0 + x1) * cross;
            cy += (y0 + y1) * cross;
        }
        (cx / (6.0 * a), cy / (6.0 * a))
    }

    /// Even-odd ray casting towards +x. Points on a left or bottom edge count
    /// as inside, points on a right or top edge as outside, so a tiling of
    /// polygons assigns every point to at most one of them.
    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        if x < self.min.0 || x > self.max.0 || y < self.min.1 || y > self.max.1 {
            return false;
        }
        let n = self.pts.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (xi, yi) = self.pts[i];
            let (xj, yj) = self.pts[j];
            if (yi > y) != (yj > y) {
                let x_cross = xi + (y - yi) * (xj - xi) / (yj - yi);
                if x < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// True when no two non-adjacent edges intersect.
    pub fn is_simple(&self) -> bool {
        let n = self.pts.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            let a = (self.pts[i], self.pts[(i + 1) % n]);
            for j in (i + 1)..n {
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                let b = (self.pts[j], self.pts[(j + 1) % n]);
                if segments_intersect(a.0, a.1, b.0, b.1) {
                    return false;
                }
            }
        }
        true
    }

    /// Shortest distance from a point to the polygon boundary.
    pub fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        let n = self.pts.len();
        (0..n)
            .map(|i| segment_distance((x, y), self.pts[i], self.pts[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Bounding boxes overlap (cheap pre-check for disjointness).
    pub fn bbox_overlaps(&self, other: &PlanarPolygon) -> bool {
        self.min.0 <= other.max.0
            && other.min.0 <= self.max.0
            && self.min.1 <= other.max.1
            && other.min.1 <= self.max.1
    }
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

pub(crate) fn segments_intersect(
    p1: (f64, f64),
    p2: (f64, f64),
    q1: (f64, f64),
    q2: (f64, f64),
) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, side: f64) -> PlanarPolygon {
        PlanarPolygon::new(vec![(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)])
    }

    #[test]
    fn area_and_centroid_of_square() {
        let sq = square(0.0, 0.0, 10.0);
        assert_eq!(sq.area(), 100.0);
        assert_eq!(sq.centroid(), (5.0, 5.0));
    }

    #[test]
    fn contains_interior_and_edges() {
        let sq = square(0.0, 0.0, 10.0);
        assert!(sq.contains(5.0, 5.0));
        assert!(sq.contains(0.0, 5.0));
        assert!(!sq.contains(10.0, 5.0));
        assert!(!sq.contains(-0.1, 5.0));
        assert!(!sq.contains(5.0, 10.5));
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bowtie = PlanarPolygon::new(vec![(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]);
        assert!(!bowtie.is_simple());
        assert!(square(0.0, 0.0, 1.0).is_simple());
    }

    #[test]
    fn closing_vertex_is_dropped() {
        let p = PlanarPolygon::new(vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 0.0)]);
        assert_eq!(p.vertices().len(), 3);
    }

    #[test]
    fn boundary_distance_of_centre() {
        assert!((square(0.0, 0.0, 10.0).boundary_distance(5.0, 5.0) - 5.0).abs() < 1e-12);
    }
}
