//! Uniform hash grid for fixed-radius neighbor queries over ball centers.

use std::collections::HashMap;

use crate::geom::Point3;

type Key = (i64, i64, i64);

#[derive(Debug, Clone)]
pub struct CellGrid {
    cell: f64,
    points: Vec<Point3>,
    buckets: HashMap<Key, Vec<usize>>,
}

impl CellGrid {
    pub fn new(points: &[Point3], cell: f64) -> Self {
        assert!(cell > 0.0, "cell size must be positive");
        let mut grid = Self {
            cell,
            points: Vec::with_capacity(points.len()),
            buckets: HashMap::new(),
        };
        for &p in points {
            grid.insert(p);
        }
        grid
    }

    #[inline]
    fn key(&self, p: Point3) -> Key {
        (
            (p.x / self.cell).floor() as i64,
            (p.y / self.cell).floor() as i64,
            (p.z / self.cell).floor() as i64,
        )
    }

    /// Adds a point and returns its index.
    pub fn insert(&mut self, p: Point3) -> usize {
        let idx = self.points.len();
        self.points.push(p);
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(idx);
        idx
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    /// Indices of points within distance `r` of `q` (closed ball), sorted.
    pub fn within(&self, q: Point3, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(q, r, |i, _| out.push(i));
        out.sort_unstable();
        out
    }

    pub fn for_each_within(&self, q: Point3, r: f64, mut f: impl FnMut(usize, f64)) {
        let lo = self.key(q - Point3::new(r, r, r));
        let hi = self.key(q + Point3::new(r, r, r));
        let r2 = r * r;
        for i in lo.0..=hi.0 {
            for j in lo.1..=hi.1 {
                for k in lo.2..=hi.2 {
                    if let Some(b) = self.buckets.get(&(i, j, k)) {
                        for &idx in b {
                            let d2 = self.points[idx].distance_squared(q);
                            if d2 <= r2 {
                                f(idx, d2.sqrt());
                            }
                        }
                    }
                }
            }
        }
    }

    /// True when some point lies strictly closer than `r` to `q`.
    pub fn any_closer_than(&self, q: Point3, r: f64) -> bool {
        let lo = self.key(q - Point3::new(r, r, r));
        let hi = self.key(q + Point3::new(r, r, r));
        let r2 = r * r;
        for i in lo.0..=hi.0 {
            for j in lo.1..=hi.1 {
                for k in lo.2..=hi.2 {
                    if let Some(b) = self.buckets.get(&(i, j, k)) {
                        if b.iter().any(|&idx| self.points[idx].distance_squared(q) < r2) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Distance from `q` to the nearest point, `None` when empty.
    pub fn nearest_distance(&self, q: Point3) -> Option<f64> {
        if self.points.is_empty() {
            return None;
        }
        let c = self.key(q);
        let mut best = f64::INFINITY;
        let mut ring: i64 = 0;
        loop {
            for i in -ring..=ring {
                for j in -ring..=ring {
                    for k in -ring..=ring {
                        if i.abs().max(j.abs()).max(k.abs()) != ring {
                            continue;
                        }
                        if let Some(b) = self.buckets.get(&(c.0 + i, c.1 + j, c.2 + k)) {
                            for &idx in b {
                                best = best.min(self.points[idx].distance_squared(q));
                            }
                        }
                    }
                }
            }
            // Every point outside the searched cube is at least `ring * cell` away.
            let reach = ring as f64 * self.cell;
            if best.is_finite() && best.sqrt() <= reach {
                return Some(best.sqrt());
            }
            ring += 1;
            if ring > 1 << 20 {
                return Some(best.sqrt());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn within_matches_brute_force() {
        let pts: Vec<Point3> = (0..200)
            .map(|i| {
                let t = i as f64;
                Point3::new((t * 0.37).sin() * 7.0, (t * 0.91).cos() * 7.0, (t * 0.13).sin() * 7.0)
            })
            .collect();
        let grid = CellGrid::new(&pts, 2.0);
        let q = Point3::new(0.5, -1.0, 2.0);
        let mut brute: Vec<usize> = (0..pts.len())
            .filter(|&i| pts[i].distance(q) <= 3.3)
            .collect();
        brute.sort_unstable();
        assert_eq!(grid.within(q, 3.3), brute);
        let near = pts.iter().map(|p| p.distance(q)).fold(f64::INFINITY, f64::min);
        assert_eq!(grid.nearest_distance(q), Some(near));
        let far = Point3::new(40.0, 0.0, 0.0);
        let near = pts.iter().map(|p| p.distance(far)).fold(f64::INFINITY, f64::min);
        assert_eq!(grid.nearest_distance(far), Some(near));
    }
}
