//! Grid coordinates, the Chebyshev metric and a compact visited-cell bitmap.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A cell address: `x` is the column, `y` the row, both zero based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub x: u32,
    pub y: u32,
}

impl Coord {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    /// Row-major index on a grid of the given width.
    #[inline]
    pub fn index(self, width: u32) -> usize {
        self.y as usize * width as usize + self.x as usize
    }

    #[inline]
    pub fn in_bounds(self, width: u32, height: u32) -> bool {
        self.x < width && self.y < height
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

/// L-infinity distance between two cells.
#[inline]
pub fn chebyshev(a: Coord, b: Coord) -> u32 {
    a.x.abs_diff(b.x).max(a.y.abs_diff(b.y))
}

/// Width and height of a rectangular grid, plus torus wrapping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub width: u32,
    pub height: u32,
}

impl Dims {
    pub const fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    #[inline]
    pub fn area(self) -> u64 {
        self.width as u64 * self.height as u64
    }

    /// Maps an unbounded signed position onto the grid torus.
    #[inline]
    pub fn wrap(self, x: i64, y: i64) -> Coord {
        Coord {
            x: x.rem_euclid(self.width as i64) as u32,
            y: y.rem_euclid(self.height as i64) as u32,
        }
    }
}

/// One bit per grid cell.
#[derive(Clone, Debug)]
pub struct BitGrid {
    width: u32,
    words: Vec<u64>,
}

impl BitGrid {
    pub fn new(dims: Dims) -> Self {
        let bits = dims.area() as usize;
        Self {
            width: dims.width,
            words: vec![0; bits.div_ceil(64)],
        }
    }

    /// Sets the bit for `p`, returning whether it was clear before.
    #[inline]
    pub fn insert(&mut self, p: Coord) -> bool {
        let i = p.index(self.width);
        let (word, mask) = (i >> 6, 1u64 << (i & 63));
        let fresh = self.words[word] & mask == 0;
        self.words[word] |= mask;
        fresh
    }

    #[inline]
    pub fn contains(&self, p: Coord) -> bool {
        let i = p.index(self.width);
        self.words[i >> 6] & (1u64 << (i & 63)) != 0
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_examples() {
        assert_eq!(chebyshev(Coord::new(0, 0), Coord::new(0, 0)), 0);
        assert_eq!(chebyshev(Coord::new(1, 2), Coord::new(4, 3)), 3);
        assert_eq!(chebyshev(Coord::new(5, 5), Coord::new(2, 9)), 4);
    }

    #[test]
    fn wrap_handles_negative_offsets() {
        let dims = Dims::new(10, 8);
        assert_eq!(dims.wrap(-1, -1), Coord::new(9, 7));
        assert_eq!(dims.wrap(10, 17), Coord::new(0, 1));
    }

    #[test]
    fn bitgrid_insert_reports_first_time_only() {
        let mut g = BitGrid::new(Dims::new(7, 9));
        assert!(g.insert(Coord::new(6, 8)));
        assert!(!g.insert(Coord::new(6, 8)));
        assert!(g.contains(Coord::new(6, 8)));
        assert!(!g.contains(Coord::new(5, 8)));
        assert_eq!(g.count(), 1);
    }

    proptest::proptest! {
        #[test]
        fn chebyshev_is_a_metric(ax in 0u32..500, ay in 0u32..500, bx in 0u32..500, by in 0u32..500,
                                 cx in 0u32..500, cy in 0u32..500) {
            let (a, b, c) = (Coord::new(ax, ay), Coord::new(bx, by), Coord::new(cx, cy));
            proptest::prop_assert_eq!(chebyshev(a, b), chebyshev(b, a));
            proptest::prop_assert_eq!(chebyshev(a, b) == 0, a == b);
            proptest::prop_assert!(chebyshev(a, c) <= chebyshev(a, b) + chebyshev(b, c));
        }
    }
}
