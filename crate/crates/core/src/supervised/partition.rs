use serde::{Deserialize, Serialize};

use crate::error::{param, EisError, Result};
use crate::game::{GameState, Player, Region};
use crate::scalar::{stable_ceil, Real};

/// Axis-aligned cell of a partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
    pub player: Player,
}

impl<T: Real> Cell<T> {
    pub fn center(&self) -> Vec<T> {
        let two = T::lit(2.0);
        self.lo.iter().zip(&self.hi).map(|(&l, &h)| (l + h) / two).collect()
    }

    /// Diameter in the l-infinity metric.
    pub fn diameter(&self) -> T {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| h - l)
            .fold(T::zero(), T::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RegionGrid<T> {
    region: Region<T>,
    counts: Vec<usize>,
    offset: usize,
}

impl<T: Real> RegionGrid<T> {
    fn side(&self, axis: usize) -> T {
        (self.region.hi[axis] - self.region.lo[axis]) / T::lit(self.counts[axis] as f64)
    }

    fn cell_count(&self) -> usize {
        self.counts.iter().product()
    }

    /// Row-major index of the cell containing `coords`, clamped to the grid.
    fn locate(&self, coords: &[T]) -> usize {
        let mut index = 0usize;
        for (axis, &count) in self.counts.iter().enumerate() {
            let x = coords.get(axis).copied().unwrap_or(self.region.lo[axis]);
            let side = self.side(axis);
            let raw = if side > T::zero() {
                ((x - self.region.lo[axis]) / side).floor().to_i64().unwrap_or(0)
            } else {
                0
            };
            index = index * count + raw.clamp(0, count as i64 - 1) as usize;
        }
        self.offset + index
    }
}

/// Cover of the state space by boxes of l-infinity diameter at most `h`.
///
/// Each player region is split into a uniform grid; cells are numbered
/// region by region in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition<T> {
    h: T,
    cells: Vec<Cell<T>>,
    grids: Vec<RegionGrid<T>>,
}

/// Uniform grid partition with cells of side at most `h` in every region.
pub fn build_partition<T: Real>(regions: &[Region<T>], h: T) -> Result<Partition<T>> {
    if !(h > T::zero() && h.is_finite()) {
        return Err(param("partition width h must be positive and finite"));
    }
    if regions.is_empty() {
        return Err(param("no regions to partition"));
    }
    let mut cells = Vec::new();
    let mut grids = Vec::new();
    for region in regions {
        if !region.is_bounded() {
            return Err(EisError::Unsupported(
                "cannot partition an unbounded region".into(),
            ));
        }
        let counts: Vec<usize> = region
            .lo
            .iter()
            .zip(&region.hi)
            .map(|(&l, &u)| (stable_ceil(((u - l) / h).as_f64()) as usize).max(1))
            .collect();
        let grid = RegionGrid {
            region: region.clone(),
            counts,
            offset: cells.len(),
        };
        let dim = region.dim();
        for flat in 0..grid.cell_count() {
            let mut rest = flat;
            let mut idx = vec![0usize; dim];
            for axis in (0..dim).rev() {
                idx[axis] = rest % grid.counts[axis];
                rest /= grid.counts[axis];
            }
            let lo: Vec<T> = (0..dim)
                .map(|a| region.lo[a] + grid.side(a) * T::lit(idx[a] as f64))
                .collect();
            let hi: Vec<T> = (0..dim)
                .map(|a| {
                    if idx[a] + 1 == grid.counts[a] {
                        region.hi[a]
                    } else {
                        region.lo[a] + grid.side(a) * T::lit((idx[a] + 1) as f64)
                    }
                })
                .collect();
            cells.push(Cell {
                lo,
                hi,
                player: region.player,
            });
        }
        grids.push(grid);
    }
    Ok(Partition { h, cells, grids })
}

impl<T: Real> Partition<T> {
    pub fn h(&self) -> T {
        self.h
    }

    /// Number of cells, the covering number `N(h)`.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell<T>] {
        &self.cells
    }

    pub fn cell(&self, index: usize) -> &Cell<T> {
        &self.cells[index]
    }

    /// Cell index of a state. Total: states outside every region of their
    /// player are clamped onto the player's first region.
    pub fn locate(&self, state: &GameState<T>) -> usize {
        let own = || self.grids.iter().filter(|g| g.region.player == state.player);
        let grid = own()
            .find(|g| g.region.contains(&state.coords))
            .or_else(|| own().next())
            .unwrap_or(&self.grids[0]);
        grid.locate(&state.coords)
    }

    /// Number of states falling into each cell.
    pub fn cell_counts(&self, states: &[GameState<T>]) -> Vec<usize> {
        let mut counts = vec![0usize; self.len()];
        for s in states {
            counts[self.locate(s)] += 1;
        }
        counts
    }
}

/// Whether every cell holds at least `k` of the states.
pub fn is_representative<T: Real>(states: &[GameState<T>], partition: &Partition<T>, k: usize) -> bool {
    partition.cell_counts(states).iter().all(|&c| c >= k)
}
