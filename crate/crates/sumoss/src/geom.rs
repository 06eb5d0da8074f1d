//! Planar geometry: positions, area bounds, and candidate grids.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A point in the plane, in meters. Coordinates are always finite.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Position {
    x: f64,
    y: f64,
}

impl Position {
    /// Rejects NaN and infinite coordinates.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::NonFinite(format!("position ({x}, {y})")));
        }
        Ok(Self { x, y })
    }

    /// For internal construction from values already known finite.
    pub(crate) fn new_unchecked(x: f64, y: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite());
        Self { x, y }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn squared_distance(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: &Position) -> f64 {
        libm::sqrt(self.squared_distance(other))
    }

    /// Shift by a finite offset.
    pub fn offset(&self, dx: f64, dy: f64) -> Result<Self> {
        Position::new(self.x + dx, self.y + dy)
    }

    /// True when a deserialized value kept the finiteness invariant.
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned rectangle delimiting the deployment area.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Area {
    pub origin: Position,
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn new(origin: Position, width: f64, height: f64) -> Result<Self> {
        if !(width.is_finite() && height.is_finite()) {
            return Err(Error::NonFinite(format!("area extent ({width}, {height})")));
        }
        if width <= 0.0 || height <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "area extent must be positive, got ({width}, {height})"
            )));
        }
        Ok(Self { origin, width, height })
    }

    pub fn centroid(&self) -> Position {
        Position::new_unchecked(
            self.origin.x() + self.width / 2.0,
            self.origin.y() + self.height / 2.0,
        )
    }

    pub fn contains(&self, p: &Position) -> bool {
        p.x() >= self.origin.x()
            && p.x() <= self.origin.x() + self.width
            && p.y() >= self.origin.y()
            && p.y() <= self.origin.y() + self.height
    }

    pub fn validate(&self) -> Result<()> {
        if !self.origin.is_finite() {
            return Err(Error::NonFinite("area origin".into()));
        }
        Area::new(self.origin, self.width, self.height).map(|_| ())
    }
}

/// How grid nodes are placed inside the area rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GridLayout {
    /// Nodes at cell centers; no node touches the boundary.
    #[default]
    CellCenter,
    /// Nodes span the boundary inclusively, spacing extent/(count-1).
    EdgeInclusive,
}

/// A regular rows x cols grid of candidate target positions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub area: Area,
    pub rows: usize,
    pub cols: usize,
    pub layout: GridLayout,
}

impl GridSpec {
    pub fn new(area: Area, rows: usize, cols: usize, layout: GridLayout) -> Result<Self> {
        let spec = Self { area, rows, cols, layout };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.area.validate()?;
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::InvalidInput(format!(
                "grid must be at least 2x2, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node position for row-major index `i = row * cols + col`.
    pub fn node(&self, i: usize) -> Position {
        let (row, col) = (i / self.cols, i % self.cols);
        let o = self.area.origin;
        let (x, y) = match self.layout {
            GridLayout::CellCenter => (
                o.x() + (col as f64 + 0.5) * self.area.width / self.cols as f64,
                o.y() + (row as f64 + 0.5) * self.area.height / self.rows as f64,
            ),
            GridLayout::EdgeInclusive => (
                o.x() + col as f64 * self.area.width / (self.cols - 1) as f64,
                o.y() + row as f64 * self.area.height / (self.rows - 1) as f64,
            ),
        };
        Position::new_unchecked(x, y)
    }

    pub fn nodes(&self) -> Vec<Position> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn position_rejects_non_finite() {
        assert!(Position::new(f64::NAN, 0.0).is_err());
        assert!(Position::new(0.0, f64::INFINITY).is_err());
        assert!(Position::new(-3.0, 2.5).is_ok());
    }

    #[test]
    fn distance_matches_hand_value() {
        let a = Position::new(0.0, 0.0).unwrap();
        let b = Position::new(3.0, 4.0).unwrap();
        assert_eq!(a.distance(&b), 5.0);
        assert_eq!(a.squared_distance(&b), 25.0);
    }

    #[test]
    fn cell_center_grid_covers_unit_square() {
        let area = Area::new(Position::new(0.0, 0.0).unwrap(), 5.0, 5.0).unwrap();
        let grid = GridSpec::new(area, 5, 5, GridLayout::CellCenter).unwrap();
        assert_eq!(grid.len(), 25);
        let first = grid.node(0);
        assert_eq!((first.x(), first.y()), (0.5, 0.5));
        let last = grid.node(24);
        assert_eq!((last.x(), last.y()), (4.5, 4.5));
        // row-major: index 1 advances along x
        let second = grid.node(1);
        assert_eq!((second.x(), second.y()), (1.5, 0.5));
    }

    #[test]
    fn edge_inclusive_grid_touches_bounds() {
        let area = Area::new(Position::new(1.0, 1.0).unwrap(), 4.0, 4.0).unwrap();
        let grid = GridSpec::new(area, 3, 3, GridLayout::EdgeInclusive).unwrap();
        let first = grid.node(0);
        assert_eq!((first.x(), first.y()), (1.0, 1.0));
        let last = grid.node(8);
        assert_eq!((last.x(), last.y()), (5.0, 5.0));
    }

    #[test]
    fn degenerate_grids_rejected() {
        let area = Area::new(Position::new(0.0, 0.0).unwrap(), 5.0, 5.0).unwrap();
        assert!(GridSpec::new(area, 1, 5, GridLayout::CellCenter).is_err());
        assert!(Area::new(Position::new(0.0, 0.0).unwrap(), 0.0, 5.0).is_err());
    }
}
