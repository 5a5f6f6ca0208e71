//! Open paths and the top-most left-right crossing.
//!
//! A left-right crossing of a box is a path inside the box whose first site is
//! in the left column, whose last site is in the right column, and which meets
//! the right column nowhere else. Crossings are ordered first by the row of
//! their first site (higher is greater), then by their move sequences read
//! from the start, with `Left > Right` and a proper prefix below its
//! extensions. The maximum under this order is determined by the edges on
//! and above it, so the region below it is left unexplored.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{is_site, Dir, Rect, Site};
use crate::randfield::{parity_mask, EdgeField};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    sites: Vec<Site>,
}

impl Path {
    /// Checks that consecutive sites are joined by oriented edges.
    pub fn new(sites: Vec<Site>) -> Result<Path> {
        if sites.is_empty() {
            return Err(Error::invalid("a path needs at least one site"));
        }
        for w in sites.windows(2) {
            let (a, b) = w[0].up_neighbors();
            if w[1] != a && w[1] != b {
                return Err(Error::invalid(format!("{} -> {} is not an edge", w[0], w[1])));
            }
        }
        Ok(Path { sites })
    }

    pub fn from_moves(start: Site, moves: &[Dir]) -> Path {
        let mut sites = Vec::with_capacity(moves.len() + 1);
        sites.push(start);
        let mut s = start;
        for &d in moves {
            s = s.step(d);
            sites.push(s);
        }
        Path { sites }
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn start(&self) -> Site {
        self.sites[0]
    }

    pub fn end(&self) -> Site {
        *self.sites.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn moves(&self) -> Vec<Dir> {
        self.sites
            .windows(2)
            .map(|w| if w[1].x() < w[0].x() { Dir::Left } else { Dir::Right })
            .collect()
    }

    /// Every edge of the path is open in `cfg`.
    pub fn is_open<F: EdgeField + ?Sized>(&self, cfg: &F) -> bool {
        self.sites
            .windows(2)
            .zip(self.moves())
            .all(|(w, d)| cfg.is_open(w[0], d))
    }

    /// `self` is a left-right crossing of `b` in the sense of the module docs.
    pub fn is_lr_crossing_of(&self, b: &Rect) -> bool {
        let n = self.sites.len();
        self.sites.iter().all(|s| b.contains(*s))
            && self.start().x() == b.x_min
            && self.end().x() == b.x_max
            && self.sites[..n - 1].iter().all(|s| s.x() != b.x_max)
    }
}

/// The crossing order described in the module docs.
pub fn path_order(a: &Path, b: &Path) -> Ordering {
    a.start().y().cmp(&b.start().y()).then_with(|| {
        let (ma, mb) = (a.moves(), b.moves());
        for (x, y) in ma.iter().zip(mb.iter()) {
            if x != y {
                return if *x == Dir::Left {
                    Ordering::Greater
                } else {
                    Ordering::Less
                };
            }
        }
        ma.len().cmp(&mb.len())
    })
}

/// The maximal left-right crossing of `b`, or `None` if `b` has none.
///
/// A backward pass marks the sites that can reach the right column through
/// open edges inside `b`; the walk then starts from the highest marked site of
/// the left column and always takes the left edge when it stays marked.
pub fn topmost_lr_crossing<F: EdgeField + ?Sized>(cfg: &F, b: &Rect) -> Option<Path> {
    let reach = CoReach::new(cfg, b);
    let start_y = (b.y_min..=b.y_max)
        .rev()
        .find(|&y| is_site(b.x_min, y) && reach.get(b.x_min, y))?;
    let mut s = Site::new(b.x_min, start_y).unwrap();
    let mut sites = vec![s];
    while s.x() != b.x_max {
        let l = s.step(Dir::Left);
        s = if l.x() >= b.x_min && reach.get(l.x(), l.y()) && cfg.is_open(s, Dir::Left) {
            l
        } else {
            s.step(Dir::Right)
        };
        debug_assert!(reach.get(s.x(), s.y()));
        sites.push(s);
    }
    Some(Path { sites })
}

/// Sites of `b` with an open path inside `b` to the right column.
struct CoReach {
    base: i64,
    y_min: i64,
    rows: Vec<Vec<u64>>,
}

impl CoReach {
    fn new<F: EdgeField + ?Sized>(cfg: &F, b: &Rect) -> CoReach {
        let base = b.x_min.div_euclid(64);
        let len = (b.x_max.div_euclid(64) - base + 1) as usize;
        let mut col_mask = vec![u64::MAX; len];
        col_mask[0] &= u64::MAX << b.x_min.rem_euclid(64);
        let top = b.x_max.rem_euclid(64);
        if top < 63 {
            col_mask[len - 1] &= (1u64 << (top + 1)) - 1;
        }
        let right_word = (b.x_max.div_euclid(64) - base) as usize;
        let right_bit = 1u64 << b.x_max.rem_euclid(64);
        let h = (b.height() + 1) as usize;
        let mut rows = vec![vec![0u64; len]; h];
        for yi in (0..h).rev() {
            let y = b.y_min + yi as i64;
            let (below, above) = rows.split_at_mut(yi + 1);
            let cur = &mut below[yi];
            if yi + 1 < h {
                let next = &above[0];
                for i in 0..len {
                    let need = col_mask[i] & parity_mask((base + i as i64) * 64, y);
                    if need == 0 {
                        continue;
                    }
                    // Bit x of `from_left` is set iff x - 1 is marked in the next row.
                    let from_left = (next[i] << 1) | if i > 0 { next[i - 1] >> 63 } else { 0 };
                    let from_right =
                        (next[i] >> 1) | if i + 1 < len { next[i + 1] << 63 } else { 0 };
                    let want = need & (from_left | from_right);
                    if want == 0 {
                        continue;
                    }
                    let (l, r) = cfg.word_masks(y, base + i as i64, want);
                    cur[i] = want & ((l & from_left) | (r & from_right));
                }
            }
            if is_site(b.x_max, y) {
                cur[right_word] |= right_bit;
            }
        }
        CoReach {
            base,
            y_min: b.y_min,
            rows,
        }
    }

    fn get(&self, x: i64, y: i64) -> bool {
        let i = (x.div_euclid(64) - self.base) as usize;
        (self.rows[(y - self.y_min) as usize][i] >> x.rem_euclid(64)) & 1 == 1
    }
}
