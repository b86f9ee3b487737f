//! Minimum-cost grid planning over the combined costmap.
//!
//! Moves are 8-connected. A diagonal step is only allowed when both
//! orthogonal cells it squeezes between are passable. Step cost is
//! `len * (1 + w * mean(endpoint costs) / 255)` with `len` in cells (1 or
//! sqrt 2), which keeps the octile distance admissible and consistent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::costmap::{CostmapLayer, COST_LETHAL};
use crate::error::{Error, Result};

pub type Cell = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    /// Multiplier on normalised cell cost in the step cost.
    pub traversal_weight: f64,
    /// Cells at or above this cost are impassable.
    pub lethal_cost: u8,
    /// A remaining path cell rising to this cost triggers a replan.
    pub replan_threshold: u8,
    /// Distance the vehicle needs to stop or turn away, m.
    pub stop_margin: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            traversal_weight: 10.0,
            lethal_cost: COST_LETHAL,
            replan_threshold: 128,
            stop_margin: 0.2,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.traversal_weight.is_finite() && self.traversal_weight >= 0.0) {
            return Err(Error::param(
                "traversal_weight",
                format!("must be >= 0, got {}", self.traversal_weight),
            ));
        }
        if self.lethal_cost == 0 {
            return Err(Error::param("lethal_cost", "must be > 0"));
        }
        if !(self.stop_margin.is_finite() && self.stop_margin >= 0.0) {
            return Err(Error::param(
                "stop_margin",
                format!("must be >= 0, got {}", self.stop_margin),
            ));
        }
        Ok(())
    }
}

/// Planned cell sequence with the costs seen at planning time.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub cells: Vec<Cell>,
    pub total_cost: f64,
    planned_costs: Vec<u8>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `index,x,y,cell_cost` with cell centres in meters.
    pub fn to_csv(&self, grid: &CostmapLayer) -> String {
        let mut out = String::from("index,x,y,cell_cost\n");
        for (i, &(c, r)) in self.cells.iter().enumerate() {
            let (x, y) = grid.cell_center(c, r);
            let _ = writeln!(out, "{i},{x:.6},{y:.6},{}", self.planned_costs[i]);
        }
        out
    }
}

/// Octile distance in cells.
pub fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a.0.abs_diff(b.0) as f64;
    let dy = a.1.abs_diff(b.1) as f64;
    dx.max(dy) + (SQRT_2 - 1.0) * dx.min(dy)
}

pub fn step_cost(len: f64, cost_a: u8, cost_b: u8, weight: f64) -> f64 {
    len * (1.0 + weight * (cost_a as f64 + cost_b as f64) / (2.0 * 255.0))
}

/// Passable neighbours of a cell with their step lengths.
pub fn neighbors(grid: &CostmapLayer, cell: Cell, lethal: u8) -> Vec<(Cell, f64)> {
    let (cols, rows) = grid.dims();
    let passable = |c: i64, r: i64| {
        c >= 0
            && r >= 0
            && (c as usize) < cols
            && (r as usize) < rows
            && grid.cost_or(c as usize, r as usize, 0) < lethal
    };
    let (c, r) = (cell.0 as i64, cell.1 as i64);
    let mut out = Vec::with_capacity(8);
    for dr in -1..=1i64 {
        for dc in -1..=1i64 {
            if (dc, dr) == (0, 0) || !passable(c + dc, r + dr) {
                continue;
            }
            let diagonal = dc != 0 && dr != 0;
            if diagonal && !(passable(c + dc, r) && passable(c, r + dr)) {
                continue;
            }
            let len = if diagonal { SQRT_2 } else { 1.0 };
            out.push((((c + dc) as usize, (r + dr) as usize), len));
        }
    }
    out
}

/// Sum of step costs along a cell sequence.
pub fn path_cost(grid: &CostmapLayer, cells: &[Cell], weight: f64) -> f64 {
    cells
        .windows(2)
        .map(|w| {
            let len = if w[0].0 != w[1].0 && w[0].1 != w[1].1 {
                SQRT_2
            } else {
                1.0
            };
            step_cost(
                len,
                grid.cost_or(w[0].0, w[0].1, 0),
                grid.cost_or(w[1].0, w[1].1, 0),
                weight,
            )
        })
        .sum()
}

#[derive(Debug, PartialEq)]
struct Node {
    f: f64,
    h: f64,
    idx: usize,
}

impl Eq for Node {}

impl Ord for Node {
    // Reversed for a min-heap: lowest f, then lowest h, then lowest index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* from `start` to `goal`. `Ok(None)` means lethal cells cut them apart.
pub fn plan(
    grid: &CostmapLayer,
    start: Cell,
    goal: Cell,
    cfg: &PlannerConfig,
) -> Result<Option<Path>> {
    let (cols, rows) = grid.dims();
    for (name, cell) in [("start", start), ("goal", goal)] {
        if cell.0 >= cols || cell.1 >= rows {
            return Err(Error::param(
                name,
                format!("cell {cell:?} outside {cols}x{rows} grid"),
            ));
        }
        if grid.cost_or(cell.0, cell.1, 0) >= cfg.lethal_cost {
            return Err(Error::param(name, format!("cell {cell:?} is lethal")));
        }
    }
    let idx = |c: Cell| c.1 * cols + c.0;
    let n = cols * rows;
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[idx(start)] = 0.0;
    let h0 = octile(start, goal);
    open.push(Node {
        f: h0,
        h: h0,
        idx: idx(start),
    });
    while let Some(Node { idx: cur, .. }) = open.pop() {
        if closed[cur] {
            continue;
        }
        closed[cur] = true;
        let cell = (cur % cols, cur / cols);
        if cell == goal {
            break;
        }
        let cost_here = grid.cost_or(cell.0, cell.1, 0);
        for (next, len) in neighbors(grid, cell, cfg.lethal_cost) {
            let ni = idx(next);
            if closed[ni] {
                continue;
            }
            let tentative = g[cur]
                + step_cost(
                    len,
                    cost_here,
                    grid.cost_or(next.0, next.1, 0),
                    cfg.traversal_weight,
                );
            if tentative < g[ni] {
                g[ni] = tentative;
                parent[ni] = cur;
                let h = octile(next, goal);
                open.push(Node {
                    f: tentative + h,
                    h,
                    idx: ni,
                });
            }
        }
    }
    let gi = idx(goal);
    if !g[gi].is_finite() {
        return Ok(None);
    }
    let mut cells = vec![goal];
    let mut at = gi;
    while at != idx(start) {
        at = parent[at];
        cells.push((at % cols, at / cols));
    }
    cells.reverse();
    let planned_costs = cells.iter().map(|&(c, r)| grid.cost_or(c, r, 0)).collect();
    Ok(Some(Path {
        cells,
        total_cost: g[gi],
        planned_costs,
    }))
}

/// True when a cell at or after `progress` has risen to `threshold` since planning.
pub fn needs_replan(path: &Path, grid: &CostmapLayer, threshold: u8, progress: usize) -> bool {
    path.cells
        .iter()
        .zip(&path.planned_costs)
        .skip(progress)
        .any(|(&(c, r), &was)| was < threshold && grid.cost_or(c, r, 0) >= threshold)
}

/// Whether the vehicle can react to a hazard first seen at the sensor
/// lookahead: distance covered during one sample period plus analysis, plus
/// the stopping margin, must fit inside the lookahead.
pub fn reaction_feasible(
    speed: f64,
    measurement_rate: f64,
    analysis_s: f64,
    lookahead: f64,
    stop_margin: f64,
) -> bool {
    speed * (1.0 / measurement_rate + analysis_s) + stop_margin <= lookahead
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(n: usize) -> CostmapLayer {
        CostmapLayer::filled(n as f64, n as f64, 1.0, Some(0)).unwrap()
    }

    #[test]
    fn empty_grid_diagonal() {
        let g = free(10);
        let p = plan(&g, (0, 0), (9, 9), &PlannerConfig::default())
            .unwrap()
            .unwrap();
        assert!((p.total_cost - 9.0 * SQRT_2).abs() < 1e-12);
        assert_eq!(p.cells.len(), 10);
        assert!((path_cost(&g, &p.cells, 10.0) - p.total_cost).abs() < 1e-12);
    }

    #[test]
    fn wall_blocks() {
        let mut g = free(10);
        for r in 0..10 {
            g.set(5, r, Some(255));
        }
        assert!(plan(&g, (0, 0), (9, 9), &PlannerConfig::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn diagonal_wall_not_squeezed() {
        let mut g = free(6);
        for i in 0..6 {
            g.set(i, 5 - i, Some(255));
        }
        assert!(plan(&g, (0, 0), (5, 5), &PlannerConfig::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn lethal_endpoints_rejected() {
        let mut g = free(5);
        g.set(0, 0, Some(255));
        assert!(plan(&g, (0, 0), (4, 4), &PlannerConfig::default()).is_err());
        assert!(plan(&g, (1, 1), (9, 9), &PlannerConfig::default()).is_err());
    }

    #[test]
    fn avoids_costly_band() {
        let mut g = free(10);
        for r in 0..9 {
            g.set(5, r, Some(250));
        }
        let cfg = PlannerConfig {
            traversal_weight: 50.0,
            ..PlannerConfig::default()
        };
        let p = plan(&g, (0, 0), (9, 0), &cfg).unwrap().unwrap();
        assert!(p.cells.contains(&(5, 9)));
        assert!(p.cells.windows(2).all(|w| {
            w[0].0.abs_diff(w[1].0) <= 1 && w[0].1.abs_diff(w[1].1) <= 1 && w[0] != w[1]
        }));
    }

    #[test]
    fn deterministic_plan() {
        let g = free(12);
        let cfg = PlannerConfig::default();
        let a = plan(&g, (0, 3), (11, 7), &cfg).unwrap().unwrap();
        let b = plan(&g, (0, 3), (11, 7), &cfg).unwrap().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn replan_detection() {
        let mut g = free(10);
        let p = plan(&g, (0, 5), (9, 5), &PlannerConfig::default())
            .unwrap()
            .unwrap();
        assert!(!needs_replan(&p, &g, 128, 0));
        let behind = p.cells[1];
        g.set(behind.0, behind.1, Some(255));
        assert!(!needs_replan(&p, &g, 128, 3));
        assert!(needs_replan(&p, &g, 128, 0));
        let ahead = p.cells[6];
        g.set(ahead.0, ahead.1, Some(255));
        assert!(needs_replan(&p, &g, 128, 3));
    }

    #[test]
    fn reaction_arithmetic() {
        assert!(reaction_feasible(0.1, 1.0, 0.031, 0.5, 0.2));
        assert!(reaction_feasible(0.1, 0.5, 0.031, 0.5, 0.2));
        assert!(!reaction_feasible(0.2, 0.5, 0.031, 0.5, 0.2));
        assert!(!reaction_feasible(0.01, 1.0, 0.031, 0.0, 0.2));
        assert!(!reaction_feasible(0.01, 1.0, 0.031, 0.0, 0.0));
    }

    #[test]
    fn csv_schema() {
        let g = free(3);
        let p = plan(&g, (0, 0), (1, 0), &PlannerConfig::default())
            .unwrap()
            .unwrap();
        assert_eq!(
            p.to_csv(&g),
            "index,x,y,cell_cost\n0,0.500000,0.500000,0\n1,1.500000,0.500000,0\n"
        );
    }
}
