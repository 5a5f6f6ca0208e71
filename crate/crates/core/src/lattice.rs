//! Geometry of the rotated square lattice `L = {(x, y) : x + y even}`.
//!
//! Every site has two outgoing oriented edges, to `(x - 1, y + 1)` and
//! `(x + 1, y + 1)`. Rectangles are closed integer intervals intersected with
//! the lattice.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// `true` iff `(x, y)` belongs to the lattice.
#[inline]
pub fn is_site(x: i64, y: i64) -> bool {
    (x ^ y) & 1 == 0
}

/// A lattice site. Construction checks parity, so every `Site` is in `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    x: i64,
    y: i64,
}

impl Site {
    pub fn new(x: i64, y: i64) -> Result<Site> {
        if is_site(x, y) {
            Ok(Site { x, y })
        } else {
            Err(Error::NotASite { x, y })
        }
    }

    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    #[inline]
    pub fn x(self) -> i64 {
        self.x
    }

    #[inline]
    pub fn y(self) -> i64 {
        self.y
    }

    /// Targets of the left and right edges, in that order.
    #[inline]
    pub fn up_neighbors(self) -> (Site, Site) {
        (self.step(Dir::Left), self.step(Dir::Right))
    }

    #[inline]
    pub fn step(self, dir: Dir) -> Site {
        Site {
            x: self.x + dir.dx(),
            y: self.y + 1,
        }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Checked form of [`Site::up_neighbors`] for raw coordinates.
pub fn up_neighbors(x: i64, y: i64) -> Result<(Site, Site)> {
    Site::new(x, y).map(Site::up_neighbors)
}

/// Direction of an oriented edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    Left,
    Right,
}

impl Dir {
    #[inline]
    pub fn dx(self) -> i64 {
        match self {
            Dir::Left => -1,
            Dir::Right => 1,
        }
    }

    pub fn mirrored(self) -> Dir {
        match self {
            Dir::Left => Dir::Right,
            Dir::Right => Dir::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrientedEdge {
    pub from: Site,
    pub dir: Dir,
}

impl OrientedEdge {
    pub fn target(&self) -> Site {
        self.from.step(self.dir)
    }
}

/// Closed rectangle `[x_min, x_max] x [y_min, y_max]`, intersected with `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: i64,
    pub x_max: i64,
    pub y_min: i64,
    pub y_max: i64,
}

impl Rect {
    pub fn new(x_min: i64, x_max: i64, y_min: i64, y_max: i64) -> Result<Rect> {
        if x_min > x_max || y_min > y_max {
            return Err(Error::EmptyRect {
                x_min,
                x_max,
                y_min,
                y_max,
            });
        }
        Ok(Rect {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// `[0, m] x [0, n]`.
    pub fn with_dims(m: i64, n: i64) -> Result<Rect> {
        Rect::new(0, m, 0, n)
    }

    /// `[0, ceil(r)] x [0, ceil(s)]`, the convention for real-valued dimensions.
    pub fn with_real_dims(r: f64, s: f64) -> Result<Rect> {
        if !(r.is_finite() && s.is_finite()) || r < 0.0 || s < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "box dimensions must be finite and non-negative, got ({r}, {s})"
            )));
        }
        Rect::with_dims(r.ceil() as i64, s.ceil() as i64)
    }

    #[inline]
    pub fn width(&self) -> i64 {
        self.x_max - self.x_min
    }

    #[inline]
    pub fn height(&self) -> i64 {
        self.y_max - self.y_min
    }

    #[inline]
    pub fn contains(&self, s: Site) -> bool {
        self.contains_xy(s.x, s.y)
    }

    #[inline]
    pub fn contains_xy(&self, x: i64, y: i64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Lattice columns of row `y` inside the rectangle, ascending.
    pub fn row_sites(&self, y: i64) -> Result<Vec<i64>> {
        if y < self.y_min || y > self.y_max {
            return Err(Error::RowOutsideRect { y, rect: *self });
        }
        let first = if is_site(self.x_min, y) {
            self.x_min
        } else {
            self.x_min + 1
        };
        Ok((first..=self.x_max).step_by(2).collect())
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (self.y_min..=self.y_max).flat_map(move |y| {
            (self.x_min..=self.x_max)
                .filter(move |&x| is_site(x, y))
                .map(move |x| Site { x, y })
        })
    }

    pub fn site_count(&self) -> usize {
        self.sites().count()
    }

    /// Edges with both endpoints inside the rectangle, ordered by source row,
    /// then column, then `Left` before `Right`.
    pub fn edges(&self) -> Vec<OrientedEdge> {
        let mut out = Vec::new();
        for from in self.sites() {
            for dir in [Dir::Left, Dir::Right] {
                let e = OrientedEdge { from, dir };
                if self.contains(e.target()) {
                    out.push(e);
                }
            }
        }
        out
    }

    /// Mirror image under `x -> c - x` with `c` even, so parity is preserved.
    pub fn mirrored(&self, c: i64) -> Rect {
        debug_assert!(c & 1 == 0);
        Rect {
            x_min: c - self.x_max,
            x_max: c - self.x_min,
            y_min: self.y_min,
            y_max: self.y_max,
        }
    }

    /// The even reflection axis closest to the rectangle's centre line.
    pub fn mirror_axis(&self) -> i64 {
        let s = self.x_min + self.x_max;
        s + (s & 1)
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{},{}]x[{},{}]",
            self.x_min, self.x_max, self.y_min, self.y_max
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parity() {
        assert!(is_site(0, 0));
        assert!(!is_site(1, 0));
        assert!(is_site(-3, 5));
        assert!(!is_site(-3, 4));
    }

    #[test]
    fn neighbors() {
        let (a, b) = up_neighbors(0, 0).unwrap();
        assert_eq!((a.x(), a.y(), b.x(), b.y()), (-1, 1, 1, 1));
        let (a, b) = up_neighbors(2, 4).unwrap();
        assert_eq!((a.x(), a.y(), b.x(), b.y()), (1, 5, 3, 5));
        assert!(matches!(up_neighbors(1, 0), Err(Error::NotASite { .. })));
    }

    #[test]
    fn rows() {
        let b = Rect::new(0, 2, 0, 1).unwrap();
        assert_eq!(b.row_sites(0).unwrap(), vec![0, 2]);
        assert_eq!(b.row_sites(1).unwrap(), vec![1]);
        assert_eq!(Rect::new(0, 0, 0, 0).unwrap().row_sites(0).unwrap(), vec![0]);
        assert!(b.row_sites(2).is_err());
        assert!(b.row_sites(-1).is_err());
    }

    #[test]
    fn rect_validation() {
        assert!(Rect::new(1, 0, 0, 0).is_err());
        assert!(Rect::new(0, 0, 1, 0).is_err());
        assert_eq!(
            Rect::with_real_dims(2.2, 3.0).unwrap(),
            Rect::new(0, 3, 0, 3).unwrap()
        );
    }

    #[test]
    fn small_edge_counts() {
        assert_eq!(Rect::new(0, 2, 0, 1).unwrap().edges().len(), 2);
        assert_eq!(Rect::new(0, 2, 0, 2).unwrap().edges().len(), 4);
        assert_eq!(Rect::new(0, 1, 0, 1).unwrap().edges().len(), 1);
    }

    proptest! {
        #[test]
        fn neighbors_are_sites(x in -1000i64..1000, y in -1000i64..1000) {
            prop_assume!(is_site(x, y));
            let (a, b) = up_neighbors(x, y).unwrap();
            prop_assert!(is_site(a.x(), a.y()) && is_site(b.x(), b.y()));
        }

        #[test]
        fn row_counts_match_double_loop(
            x0 in -20i64..20, w in 0i64..15, y0 in -20i64..20, h in 0i64..15
        ) {
            let b = Rect::new(x0, x0 + w, y0, y0 + h).unwrap();
            let by_rows: usize = (b.y_min..=b.y_max).map(|y| b.row_sites(y).unwrap().len()).sum();
            let mut direct = 0;
            for y in b.y_min..=b.y_max {
                for x in b.x_min..=b.x_max {
                    if (x + y).rem_euclid(2) == 0 { direct += 1; }
                }
            }
            prop_assert_eq!(by_rows, direct);
            prop_assert_eq!(b.site_count(), direct);
        }

        #[test]
        fn consecutive_rows_interleave(x0 in -20i64..20, w in 1i64..15, y0 in -20i64..20) {
            let b = Rect::new(x0, x0 + w, y0, y0 + 1).unwrap();
            let lower = b.row_sites(y0).unwrap();
            let upper = b.row_sites(y0 + 1).unwrap();
            let mut reach: Vec<i64> = lower.iter()
                .flat_map(|&x| [x - 1, x + 1])
                .filter(|&x| x >= b.x_min && x <= b.x_max)
                .collect();
            reach.sort();
            reach.dedup();
            prop_assert_eq!(reach, upper);
        }

        #[test]
        fn mirror_preserves_parity(x in -50i64..50, y in -50i64..50, x0 in -10i64..10, w in 0i64..10) {
            let b = Rect::new(x0, x0 + w, 0, 3).unwrap();
            let c = b.mirror_axis();
            prop_assert_eq!(is_site(x, y), is_site(c - x, y));
            let m = b.mirrored(c);
            prop_assert_eq!(m.width(), b.width());
            prop_assert_eq!(m.mirrored(c), b);
        }
    }
}
