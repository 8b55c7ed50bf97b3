use std::collections::HashMap;

use super::geom::{distance, Vec3};

pub type CellKey = [i64; 3];

/// Uniform spatial hash over a set of positions. Lookups only; callers that
/// iterate cells go through [`VoxelGrid::sorted_keys`] to stay deterministic.
#[derive(Debug, Clone)]
pub struct VoxelGrid {
    cell: f64,
    origin: Vec3,
    cells: HashMap<CellKey, Vec<usize>>,
}

impl VoxelGrid {
    pub fn build(positions: &[Vec3], cell: f64, origin: Vec3) -> Self {
        assert!(cell > 0.0, "grid cell size must be positive");
        let mut grid = Self {
            cell,
            origin,
            cells: HashMap::new(),
        };
        for (i, p) in positions.iter().enumerate() {
            let k = grid.key(*p);
            grid.cells.entry(k).or_default().push(i);
        }
        grid
    }

    pub fn insert(&mut self, index: usize, p: Vec3) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(index);
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn key(&self, p: Vec3) -> CellKey {
        [
            ((p[0] - self.origin[0]) / self.cell).floor() as i64,
            ((p[1] - self.origin[1]) / self.cell).floor() as i64,
            ((p[2] - self.origin[2]) / self.cell).floor() as i64,
        ]
    }

    pub fn get(&self, key: &CellKey) -> &[usize] {
        self.cells.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn sorted_keys(&self) -> Vec<CellKey> {
        let mut keys: Vec<_> = self.cells.keys().copied().collect();
        keys.sort_unstable();
        keys
    }

    /// Indices stored in cells within `reach` cells of `key` along every axis,
    /// visited in lexicographic cell order.
    pub fn around(&self, key: CellKey, reach: i64) -> impl Iterator<Item = usize> + '_ {
        let span = -reach..=reach;
        span.clone()
            .flat_map(move |dx| {
                let span = -reach..=reach;
                span.clone()
                    .flat_map(move |dy| (-reach..=reach).map(move |dz| [key[0] + dx, key[1] + dy, key[2] + dz]))
            })
            .flat_map(move |k| self.get(&k).iter().copied())
    }

    /// Indices of positions within `radius` of `p`, in ascending index order.
    /// Requires `radius <= cell size`.
    pub fn within(&self, positions: &[Vec3], p: Vec3, radius: f64) -> Vec<usize> {
        debug_assert!(radius <= self.cell * (1.0 + 1e-12));
        let mut out: Vec<usize> = self
            .around(self.key(p), 1)
            .filter(|&i| distance(positions[i], p) <= radius)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn any_within(&self, positions: &[Vec3], p: Vec3, radius: f64) -> bool {
        debug_assert!(radius <= self.cell * (1.0 + 1e-12));
        self.around(self.key(p), 1).any(|i| distance(positions[i], p) <= radius)
    }
}
