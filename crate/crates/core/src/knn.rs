//! Exact k-nearest-neighbor queries over a uniform grid of buckets.

use crate::geometry::Point3;

pub struct GridIndex<'a> {
    points: &'a [Point3],
    origin: Point3,
    cell: f64,
    dims: [usize; 3],
    /// `starts[c]..starts[c + 1]` indexes `order` for cell `c`.
    starts: Vec<usize>,
    order: Vec<u32>,
}

impl<'a> GridIndex<'a> {
    /// Builds an index sized for roughly `k` points per occupied bucket.
    pub fn new(points: &'a [Point3], k: usize) -> Self {
        assert!(!points.is_empty(), "grid index over an empty point set");
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let extent = (hi - lo).max().max(f64::MIN_POSITIVE);
        let n = points.len() as f64;
        let k = k.max(1) as f64;
        let span = hi - lo;
        let volume = span.iter().map(|s| s.max(extent * 1e-6)).product::<f64>();
        let mut cell = (volume * k / n).cbrt();
        let mut index = Self::build(points, lo, cell, extent);
        // surface-like data leaves most volume cells empty; refine until
        // occupied buckets hold about k points
        for _ in 0..8 {
            let occupied = index.starts.windows(2).filter(|w| w[1] > w[0]).count().max(1);
            let mean = n / occupied as f64;
            if mean <= 2.0 * k {
                break;
            }
            cell *= (k / mean).sqrt().max(0.25);
            index = Self::build(points, lo, cell, extent);
        }
        index
    }

    fn build(points: &'a [Point3], origin: Point3, cell: f64, extent: f64) -> Self {
        let cell = cell.max(extent * 1e-9);
        let max_cells = (points.len() * 8).max(1);
        let mut cell = cell;
        let mut dims;
        loop {
            dims = [0usize; 3];
            let mut total = 1usize;
            for (axis, d) in dims.iter_mut().enumerate() {
                let hi = points.iter().map(|p| p[axis]).fold(f64::NEG_INFINITY, f64::max);
                *d = (((hi - origin[axis]) / cell).floor() as usize) + 1;
                total = total.saturating_mul(*d);
            }
            if total <= max_cells {
                break;
            }
            cell *= 1.5;
        }
        let mut index = Self { points, origin, cell, dims, starts: Vec::new(), order: Vec::new() };
        let n_cells = dims[0] * dims[1] * dims[2];
        let cell_of: Vec<usize> = points.iter().map(|p| index.flat(index.coords(p))).collect();
        let mut counts = vec![0usize; n_cells + 1];
        for &c in &cell_of {
            counts[c + 1] += 1;
        }
        for c in 0..n_cells {
            counts[c + 1] += counts[c];
        }
        let mut fill = counts.clone();
        let mut order = vec![0u32; points.len()];
        for (i, &c) in cell_of.iter().enumerate() {
            order[fill[c]] = i as u32;
            fill[c] += 1;
        }
        index.starts = counts;
        index.order = order;
        index
    }

    fn coords(&self, p: &Point3) -> [usize; 3] {
        let mut c = [0usize; 3];
        for axis in 0..3 {
            let v = ((p[axis] - self.origin[axis]) / self.cell).floor();
            c[axis] = if v <= 0.0 { 0 } else { (v as usize).min(self.dims[axis] - 1) };
        }
        c
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Indices of the `k` points closest to `query`, nearest first; ties go
    /// to the lower index.
    pub fn nearest(&self, query: &Point3, k: usize) -> Vec<usize> {
        let k = k.min(self.points.len());
        if k == 0 {
            return Vec::new();
        }
        let center = self.coords(query);
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        let max_r = *self.dims.iter().max().unwrap();
        for r in 0..=max_r {
            self.visit_shell(center, r, |i| {
                let d = (self.points[i] - query).norm_squared();
                let entry = (d, i);
                if best.len() < k || entry < *best.last().unwrap() {
                    let pos = best.partition_point(|e| *e < entry);
                    best.insert(pos, entry);
                    best.truncate(k);
                }
            });
            if best.len() == k {
                let reach = r as f64 * self.cell;
                if best[k - 1].0 <= reach * reach {
                    break;
                }
            }
        }
        best.into_iter().map(|(_, i)| i).collect()
    }

    fn visit_shell(&self, center: [usize; 3], r: usize, mut f: impl FnMut(usize)) {
        let r = r as isize;
        let range = |axis: usize| {
            let c = center[axis] as isize;
            (c - r).max(0)..=(c + r).min(self.dims[axis] as isize - 1)
        };
        for z in range(2) {
            for y in range(1) {
                for x in range(0) {
                    let cheb = (x - center[0] as isize)
                        .abs()
                        .max((y - center[1] as isize).abs())
                        .max((z - center[2] as isize).abs());
                    if cheb != r {
                        continue;
                    }
                    let c = self.flat([x as usize, y as usize, z as usize]);
                    for &i in &self.order[self.starts[c]..self.starts[c + 1]] {
                        f(i as usize);
                    }
                }
            }
        }
    }
}
