//! Terrain grid and the moisture events applied to it.
//!
//! Cells are stored row-major with row `j` spanning `y` in
//! `(j * res, (j + 1) * res]` and column `i` spanning `x` the same way; a point
//! sitting exactly on a shared edge belongs to the lower-index cell. The last
//! row/column may extend past the nominal extent when the extent is not a
//! multiple of the resolution.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dielectric::MaterialState;
use crate::error::{Error, Result};

const EDGE_EPS: f64 = 1e-9;

/// Axis-aligned rectangle in meters, `x0 < x1`, `y0 < y1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Region {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::param(
                "region",
                format!("needs x1 > x0 and y1 > y0, got ({x0}, {y0}, {x1}, {y1})"),
            ));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    /// `width` x `height` rectangle centred on `(cx, cy)`.
    pub fn centered(cx: f64, cy: f64, width: f64, height: f64) -> Result<Self> {
        Self::new(
            cx - width / 2.0,
            cy - height / 2.0,
            cx + width / 2.0,
            cy + height / 2.0,
        )
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Regular lattice of surface states.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainGrid {
    resolution: f64,
    width: f64,
    height: f64,
    cols: usize,
    rows: usize,
    cells: Vec<MaterialState>,
}

impl TerrainGrid {
    pub fn new(width: f64, height: f64, resolution: f64, base: MaterialState) -> Result<Self> {
        for (name, v) in [
            ("width", width),
            ("height", height),
            ("resolution", resolution),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        base.validate()?;
        let cols = cells_along(width, resolution);
        let rows = cells_along(height, resolution);
        Ok(Self {
            resolution,
            width,
            height,
            cols,
            rows,
            cells: vec![base; cols * rows],
        })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.width, self.height)
    }

    /// `(cols, rows)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }

    pub fn in_bounds(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= self.width && y <= self.height
    }

    fn check_point(&self, x: f64, y: f64) -> Result<()> {
        if self.in_bounds(x, y) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            })
        }
    }

    fn check_region(&self, region: &Region) -> Result<()> {
        self.check_point(region.x0, region.y0)?;
        self.check_point(region.x1, region.y1)
    }

    fn axis_index(&self, v: f64, n: usize) -> usize {
        let k = (v / self.resolution - EDGE_EPS).ceil() as i64 - 1;
        k.clamp(0, n as i64 - 1) as usize
    }

    /// Cell `(col, row)` containing a point.
    pub fn cell_of(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        self.check_point(x, y)?;
        Ok((self.axis_index(x, self.cols), self.axis_index(y, self.rows)))
    }

    /// Centre of a cell in meters.
    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            (col as f64 + 0.5) * self.resolution,
            (row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn cell(&self, col: usize, row: usize) -> &MaterialState {
        &self.cells[row * self.cols + col]
    }

    pub fn water_fraction(&self, col: usize, row: usize) -> f64 {
        self.cell(col, row).water_fraction
    }

    pub fn sample_state(&self, x: f64, y: f64) -> Result<MaterialState> {
        let (c, r) = self.cell_of(x, y)?;
        Ok(*self.cell(c, r))
    }

    /// Column and row ranges of every cell whose area overlaps `region`.
    fn region_span(&self, region: &Region) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let span = |lo: f64, hi: f64, n: usize| {
            let a = ((lo / self.resolution + EDGE_EPS).floor().max(0.0) as usize).min(n - 1);
            let b = ((hi / self.resolution - EDGE_EPS).ceil().max(1.0) as usize).min(n);
            a..b.max(a + 1)
        };
        (
            span(region.x0, region.x1, self.cols),
            span(region.y0, region.y1, self.rows),
        )
    }

    fn for_region(&mut self, region: &Region, mut f: impl FnMut(&mut MaterialState)) {
        let (cs, rs) = self.region_span(region);
        for r in rs {
            for c in cs.clone() {
                f(&mut self.cells[r * self.cols + c]);
            }
        }
    }

    /// Wet-cloth dampening: raises each overlapped cell to at least `fraction`.
    pub fn apply_damp(&mut self, region: &Region, fraction: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::param(
                "water_fraction",
                format!("must lie in [0, 1], got {fraction}"),
            ));
        }
        self.check_region(region)?;
        self.for_region(region, |s| {
            s.water_fraction = s.water_fraction.max(fraction)
        });
        Ok(())
    }

    /// Spreads `volume_ml` of water as a film over `region`, converting it to
    /// a volumetric fraction through the effective interaction depth.
    pub fn deposit_water(&mut self, region: &Region, volume_ml: f64, depth_m: f64) -> Result<()> {
        if !(volume_ml.is_finite() && volume_ml >= 0.0) {
            return Err(Error::param(
                "volume_ml",
                format!("must be >= 0, got {volume_ml}"),
            ));
        }
        if !(depth_m.is_finite() && depth_m > 0.0) {
            return Err(Error::param(
                "interaction_depth",
                format!("must be > 0, got {depth_m}"),
            ));
        }
        self.check_region(region)?;
        let increment = deposit_increment(volume_ml, region.area(), depth_m);
        self.for_region(region, |s| {
            s.water_fraction = (s.water_fraction + increment).min(1.0)
        });
        Ok(())
    }

    /// Row-major water-fraction matrix with a geometry header.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# extent_x_m={:.6},extent_y_m={:.6},resolution_m={:.6},cols={},rows={}\n",
            self.width, self.height, self.resolution, self.cols, self.rows
        );
        for row in self.cells.chunks(self.cols) {
            let line: Vec<String> = row
                .iter()
                .map(|s| format!("{:.6}", s.water_fraction))
                .collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }
}

fn cells_along(extent: f64, resolution: f64) -> usize {
    ((extent / resolution - EDGE_EPS).ceil() as usize).max(1)
}

/// Fraction increment for a film of `volume_ml` over `area_m2` probed to `depth_m`.
pub fn deposit_increment(volume_ml: f64, area_m2: f64, depth_m: f64) -> f64 {
    (volume_ml * 1e-6 / (area_m2 * depth_m)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dry_grid(w: f64, h: f64, res: f64) -> TerrainGrid {
        TerrainGrid::new(w, h, res, MaterialState::dry_concrete()).unwrap()
    }

    #[test]
    fn construction_dims() {
        let g = dry_grid(2.0, 1.0, 0.01);
        assert_eq!(g.dims(), (200, 100));
        assert!(g.cells.iter().all(|s| s.water_fraction == 0.0));
        assert_eq!(dry_grid(0.3, 0.2, 1.0).dims(), (1, 1));
        assert_eq!(dry_grid(1.05, 0.5, 0.1).dims(), (11, 5));
        assert!(TerrainGrid::new(0.0, 1.0, 0.1, MaterialState::dry_concrete()).is_err());
        assert!(TerrainGrid::new(1.0, 1.0, -0.1, MaterialState::dry_concrete()).is_err());
    }

    #[test]
    fn damp_semantics() {
        let mut g = dry_grid(1.0, 1.0, 0.1);
        let before = g.clone();
        let full = Region::new(0.0, 0.0, 1.0, 1.0).unwrap();
        g.apply_damp(&full, 0.0).unwrap();
        assert_eq!(g, before);
        g.apply_damp(&full, 0.05).unwrap();
        assert!(g.cells.iter().all(|s| s.water_fraction == 0.05));
        g.apply_damp(&full, 0.03).unwrap();
        assert!(g.cells.iter().all(|s| s.water_fraction == 0.05));
        assert!(g.apply_damp(&full, 1.2).is_err());
        let outside = Region::new(0.5, 0.5, 1.5, 0.9).unwrap();
        assert!(matches!(
            g.apply_damp(&outside, 0.1),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn deposit_semantics() {
        let mut g = dry_grid(1.0, 1.0, 0.01);
        let before = g.clone();
        let region = Region::new(0.4, 0.4, 0.6, 0.5).unwrap();
        assert!((region.area() - 0.02).abs() < 1e-12);
        g.deposit_water(&region, 0.0, 0.005).unwrap();
        assert_eq!(g, before);
        g.deposit_water(&region, 20.0, 0.005).unwrap();
        // 20e-6 / (0.02 * 0.005) = 0.2
        let s = g.sample_state(0.5, 0.45).unwrap();
        assert!((s.water_fraction - 0.2).abs() < 1e-9);
        assert_eq!(g.sample_state(0.3, 0.3).unwrap().water_fraction, 0.0);
        let (cs, rs) = g.region_span(&region);
        assert_eq!((cs.len(), rs.len()), (20, 10));

        g.deposit_water(&region, 1_000.0, 0.005).unwrap();
        assert_eq!(g.sample_state(0.5, 0.45).unwrap().water_fraction, 1.0);
        assert!(g.deposit_water(&region, -1.0, 0.005).is_err());
    }

    #[test]
    fn deposits_are_additive_below_cap() {
        let region = Region::new(0.1, 0.1, 0.3, 0.2).unwrap();
        let mut a = dry_grid(1.0, 1.0, 0.05);
        let mut b = a.clone();
        a.deposit_water(&region, 10.0, 0.005).unwrap();
        a.deposit_water(&region, 10.0, 0.005).unwrap();
        b.deposit_water(&region, 20.0, 0.005).unwrap();
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert!((x.water_fraction - y.water_fraction).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_tie_break_goes_low() {
        let g = dry_grid(1.0, 1.0, 0.1);
        assert_eq!(g.cell_of(0.3, 0.55).unwrap(), (2, 5));
        assert_eq!(g.cell_of(0.0, 0.0).unwrap(), (0, 0));
        assert_eq!(g.cell_of(1.0, 1.0).unwrap(), (9, 9));
        assert_eq!(g.cell_of(0.31, 0.05).unwrap(), (3, 0));
        assert!(g.cell_of(1.01, 0.5).is_err());
    }

    #[test]
    fn csv_header_and_shape() {
        let g = dry_grid(0.3, 0.2, 0.1);
        let csv = g.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "# extent_x_m=0.300000,extent_y_m=0.200000,resolution_m=0.100000,cols=3,rows=2"
        );
        assert_eq!(lines.next().unwrap(), "0.000000,0.000000,0.000000");
        assert_eq!(csv.lines().count(), 3);
    }

    #[derive(Debug, Clone)]
    enum Op {
        Damp(Region, f64),
        Deposit(Region, f64),
    }

    fn region_strategy() -> impl Strategy<Value = Region> {
        (0.0..0.9f64, 0.0..0.9f64, 0.01..0.5f64, 0.01..0.5f64)
            .prop_map(|(x, y, w, h)| Region::new(x, y, (x + w).min(1.0), (y + h).min(1.0)).unwrap())
    }

    fn op_strategy() -> impl Strategy<Value = Op> {
        prop_oneof![
            (region_strategy(), 0.0..=1.0f64).prop_map(|(r, f)| Op::Damp(r, f)),
            (region_strategy(), 0.0..200.0f64).prop_map(|(r, v)| Op::Deposit(r, v)),
        ]
    }

    proptest! {
        #[test]
        fn fractions_stay_in_unit_interval(ops in prop::collection::vec(op_strategy(), 1..12)) {
            let mut g = dry_grid(1.0, 1.0, 0.05);
            for op in ops {
                match op {
                    Op::Damp(r, f) => g.apply_damp(&r, f).unwrap(),
                    Op::Deposit(r, v) => g.deposit_water(&r, v, 0.005).unwrap(),
                }
                prop_assert!(g.cells.iter().all(|s| (0.0..=1.0).contains(&s.water_fraction)));
            }
        }

        #[test]
        fn cells_outside_region_untouched(r in region_strategy(), v in 0.0..100.0f64) {
            let mut g = dry_grid(1.0, 1.0, 0.05);
            g.deposit_water(&r, v, 0.005).unwrap();
            let res = g.resolution();
            let (cols, rows) = g.dims();
            for row in 0..rows {
                for col in 0..cols {
                    let overlaps = (col as f64) * res < r.x1 - 1e-9
                        && ((col + 1) as f64) * res > r.x0 + 1e-9
                        && (row as f64) * res < r.y1 - 1e-9
                        && ((row + 1) as f64) * res > r.y0 + 1e-9;
                    if !overlaps {
                        prop_assert_eq!(g.water_fraction(col, row), 0.0);
                    }
                }
            }
        }
    }
}
