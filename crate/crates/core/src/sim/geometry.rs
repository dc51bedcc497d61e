//! Square torus window, PPP sampling and nearest-point lookups.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::SimError;
use crate::model::NetworkModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// Square window [0, L)² with wrap-around distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    side: f64,
}

impl Window {
    /// Minimum expected BS count of the sparsest tier in an auto-sized window.
    pub const MIN_EXPECTED_BS: f64 = 50.0;

    pub fn new(side_length: f64) -> Result<Self, SimError> {
        if side_length.is_finite() && side_length > 0.0 {
            Ok(Window { side: side_length })
        } else {
            Err(SimError::InvalidArgument(format!(
                "window side must be positive, got {side_length}"
            )))
        }
    }

    /// Smallest window in which the sparsest tier has at least
    /// [`Window::MIN_EXPECTED_BS`] BSs on average.
    pub fn auto_sized(model: &NetworkModel) -> Result<Self, SimError> {
        let sparsest = model
            .tiers
            .iter()
            .map(|t| t.density)
            .fold(f64::INFINITY, f64::min);
        Window::new((Self::MIN_EXPECTED_BS / sparsest).sqrt())
    }

    pub fn side_length(&self) -> f64 {
        self.side
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    fn wrap(&self, d: f64) -> f64 {
        let d = d.abs() % self.side;
        d.min(self.side - d)
    }

    /// Squared toroidal distance.
    pub fn dist2(&self, a: Point, b: Point) -> f64 {
        let dx = self.wrap(a.x - b.x);
        let dy = self.wrap(a.y - b.y);
        dx * dx + dy * dy
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point {
            x: rng.random::<f64>() * self.side,
            y: rng.random::<f64>() * self.side,
        }
    }
}

/// Homogeneous PPP of the given intensity [1/m²] on the window.
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, window: &Window, rng: &mut R) -> Vec<Point> {
    let mean = density * window.area();
    if !mean.is_finite() || mean <= 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(mean)
        .expect("positive finite Poisson mean")
        .sample(rng) as usize;
    (0..count).map(|_| window.sample_uniform(rng)).collect()
}

/// Bucket grid over a torus window for nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    window: Window,
    cells: usize,
    cell_side: f64,
    buckets: Vec<Vec<u32>>,
    points: Vec<Point>,
}

impl SpatialIndex {
    pub fn new(points: &[Point], window: Window) -> Self {
        // About two points per bucket.
        let cells = ((points.len() as f64 / 2.0).sqrt().floor() as usize).clamp(1, 4096);
        let cell_side = window.side_length() / cells as f64;
        let mut buckets = vec![Vec::new(); cells * cells];
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = Self::cell_of(p, cell_side, cells);
            buckets[cy * cells + cx].push(i as u32);
        }
        SpatialIndex {
            window,
            cells,
            cell_side,
            buckets,
            points: points.to_vec(),
        }
    }

    fn cell_of(p: &Point, side: f64, cells: usize) -> (usize, usize) {
        let cx = ((p.x / side) as usize).min(cells - 1);
        let cy = ((p.y / side) as usize).min(cells - 1);
        (cx, cy)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and squared distance of the nearest point; ties go to the
    /// lower index.
    pub fn nearest(&self, q: Point) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let n = self.cells as i64;
        let (cx, cy) = Self::cell_of(&q, self.cell_side, self.cells);
        let mut best: Option<(usize, f64)> = None;
        let consider = |i: usize, best: &mut Option<(usize, f64)>| {
            let d2 = self.window.dist2(q, self.points[i]);
            let better = match *best {
                None => true,
                Some((bi, bd)) => d2 < bd || (d2 == bd && i < bi),
            };
            if better {
                *best = Some((i, d2));
            }
        };
        let mut ring = 0i64;
        // Rings stay distinct on the torus while 2r+1 ≤ n.
        while 2 * ring < n {
            // Every point in ring r or beyond is at least (r−1)·cell_side away.
            if let Some((_, d2)) = best {
                let reach = (ring - 1).max(0) as f64 * self.cell_side;
                if reach * reach > d2 {
                    return best;
                }
            }
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    let bx = (cx as i64 + dx).rem_euclid(n) as usize;
                    let by = (cy as i64 + dy).rem_euclid(n) as usize;
                    for &i in &self.buckets[by * self.cells + bx] {
                        consider(i as usize, &mut best);
                    }
                }
            }
            ring += 1;
        }
        if let Some((_, d2)) = best {
            let reach = (ring - 1).max(0) as f64 * self.cell_side;
            if reach * reach > d2 {
                return best;
            }
        }
        // Unvisited buckets wrap onto visited ones; scan everything.
        for i in 0..self.points.len() {
            consider(i, &mut best);
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[Point], w: &Window, q: Point) -> (usize, f64) {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, w.dist2(q, *p)))
            .fold(
                (usize::MAX, f64::INFINITY),
                |a, b| if b.1 < a.1 { b } else { a },
            )
    }

    #[test]
    fn torus_distance_wraps() {
        let w = Window::new(10.0).unwrap();
        let d = w.dist2(Point { x: 0.5, y: 9.5 }, Point { x: 9.5, y: 0.5 });
        assert!((d - 2.0).abs() < 1e-12);
        assert!(Window::new(0.0).is_err());
    }

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 2, 5, 17, 300] {
            let w = Window::new(100.0).unwrap();
            let pts: Vec<Point> = (0..n).map(|_| w.sample_uniform(&mut rng)).collect();
            let idx = SpatialIndex::new(&pts, w);
            for _ in 0..200 {
                let q = w.sample_uniform(&mut rng);
                let (i, d) = idx.nearest(q).unwrap();
                let (bi, bd) = brute(&pts, &w, q);
                assert_eq!(d, bd);
                assert_eq!(i, bi);
            }
        }
        assert!(SpatialIndex::new(&[], Window::new(1.0).unwrap())
            .nearest(Point { x: 0.0, y: 0.0 })
            .is_none());
    }

    #[test]
    fn ppp_is_deterministic_per_seed() {
        let w = Window::new(1000.0).unwrap();
        let a = sample_ppp(1e-4, &w, &mut ChaCha8Rng::seed_from_u64(9));
        let b = sample_ppp(1e-4, &w, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert!(sample_ppp(0.0, &w, &mut ChaCha8Rng::seed_from_u64(9)).is_empty());
    }

    #[test]
    fn ppp_count_moments() {
        // λ = 1/km², L = 20 km: counts ~ Poisson(400).
        let w = Window::new(20_000.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let counts: Vec<f64> = (0..10_000)
            .map(|_| sample_ppp(1e-6, &w, &mut rng).len() as f64)
            .collect();
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 400.0).abs() < 4.0 * (400.0 / n).sqrt());
        // Dispersion index (n−1)·s²/mean is χ²(n−1); check the 0.5% tails.
        let stat = (n - 1.0) * var / mean;
        let z = (stat - (n - 1.0)) / (2.0 * (n - 1.0)).sqrt();
        assert!(z.abs() < 2.81, "dispersion z = {z}");
    }
}
