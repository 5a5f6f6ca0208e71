//! Row occupancy stored as globally aligned 64-column words.

use crate::lattice::{is_site, Rect};
use crate::randfield::EdgeField;

/// Occupied sites of one row of a rectangle. Word `i` holds global columns
/// `64 * (base + i) ..`, so edge masks can be fetched without realignment.
#[derive(Debug, Clone)]
pub(crate) struct Front {
    rect: Rect,
    base: i64,
    words: Vec<u64>,
    col_mask: Vec<u64>,
    ml: Vec<u64>,
    mr: Vec<u64>,
    lo: usize,
    hi: usize,
    empty: bool,
    y: i64,
}

impl Front {
    pub(crate) fn new(rect: Rect) -> Front {
        Front::new_at(rect, rect.y_min)
    }

    pub(crate) fn new_at(rect: Rect, y: i64) -> Front {
        let base = rect.x_min.div_euclid(64);
        let last = rect.x_max.div_euclid(64);
        let len = (last - base + 1) as usize;
        let mut col_mask = vec![u64::MAX; len];
        col_mask[0] &= u64::MAX << rect.x_min.rem_euclid(64);
        let top = rect.x_max.rem_euclid(64);
        if top < 63 {
            col_mask[len - 1] &= (1u64 << (top + 1)) - 1;
        }
        Front {
            rect,
            base,
            words: vec![0; len],
            col_mask,
            ml: vec![0; len],
            mr: vec![0; len],
            lo: 0,
            hi: 0,
            empty: true,
            y,
        }
    }

    #[inline]
    pub(crate) fn y(&self) -> i64 {
        self.y
    }

    #[inline]
    pub(crate) fn is_empty(&self) -> bool {
        self.empty
    }

    #[inline]
    fn locate(&self, x: i64) -> (usize, u32) {
        ((x.div_euclid(64) - self.base) as usize, x.rem_euclid(64) as u32)
    }

    /// Occupy `(x, y)` if it is a lattice site of the current row inside the rectangle.
    pub(crate) fn insert(&mut self, x: i64) -> bool {
        if x < self.rect.x_min || x > self.rect.x_max || !is_site(x, self.y) {
            return false;
        }
        let (i, b) = self.locate(x);
        self.words[i] |= 1 << b;
        if self.empty {
            self.lo = i;
            self.hi = i;
            self.empty = false;
        } else {
            self.lo = self.lo.min(i);
            self.hi = self.hi.max(i);
        }
        true
    }

    /// Occupy every lattice site of the current row in `[x_lo, x_hi]`.
    pub(crate) fn insert_range(&mut self, x_lo: i64, x_hi: i64) -> usize {
        let x_lo = x_lo.max(self.rect.x_min);
        let x_hi = x_hi.min(self.rect.x_max);
        if x_lo > x_hi {
            return 0;
        }
        let first = if is_site(x_lo, self.y) { x_lo } else { x_lo + 1 };
        let mut n = 0;
        let mut x = first;
        while x <= x_hi {
            self.insert(x);
            n += 1;
            x += 2;
        }
        n
    }

    #[inline]
    pub(crate) fn contains(&self, x: i64) -> bool {
        if self.empty || x < self.rect.x_min || x > self.rect.x_max {
            return false;
        }
        let (i, b) = self.locate(x);
        (self.words[i] >> b) & 1 == 1
    }

    pub(crate) fn max_x(&self) -> Option<i64> {
        if self.empty {
            return None;
        }
        let w = self.words[self.hi];
        Some((self.base + self.hi as i64) * 64 + 63 - w.leading_zeros() as i64)
    }

    pub(crate) fn min_x(&self) -> Option<i64> {
        if self.empty {
            return None;
        }
        let w = self.words[self.lo];
        Some((self.base + self.lo as i64) * 64 + w.trailing_zeros() as i64)
    }

    /// Occupied columns of the current row, ascending.
    pub(crate) fn columns(&self) -> Vec<i64> {
        let mut out = Vec::new();
        if self.empty {
            return out;
        }
        for i in self.lo..=self.hi {
            let mut w = self.words[i];
            while w != 0 {
                let b = w.trailing_zeros() as i64;
                w &= w - 1;
                out.push((self.base + i as i64) * 64 + b);
            }
        }
        out
    }

    /// Snapshot of the active words: `(first global word, words)`.
    pub(crate) fn snapshot(&self) -> (i64, Vec<u64>) {
        if self.empty {
            return (self.base, Vec::new());
        }
        (self.base + self.lo as i64, self.words[self.lo..=self.hi].to_vec())
    }

    /// Fetch the edge masks of the active words and advance one row.
    pub(crate) fn advance<F: EdgeField + ?Sized>(&mut self, f: &F) {
        if self.empty {
            self.y += 1;
            return;
        }
        let y = self.y;
        for i in self.lo..=self.hi {
            let o = self.words[i];
            if o == 0 {
                self.ml[i] = 0;
                self.mr[i] = 0;
            } else {
                let (l, r) = f.word_masks(y, self.base + i as i64, o);
                self.ml[i] = l;
                self.mr[i] = r;
            }
        }
        let (lo, hi) = (self.lo, self.hi);
        propagate(
            &mut self.words,
            &self.ml,
            &self.mr,
            &self.col_mask,
            lo,
            hi,
        );
        self.y += 1;
        self.retrim(lo.saturating_sub(1), (hi + 1).min(self.words.len() - 1));
    }

    /// Advance a front that is a subset of `leader`, reusing the edge masks the
    /// leader fetched on its last `advance`. Call right after `leader.advance`.
    pub(crate) fn advance_following(&mut self, leader: &Front) {
        debug_assert_eq!(self.base, leader.base);
        debug_assert_eq!(self.y + 1, leader.y);
        if self.empty {
            self.y += 1;
            return;
        }
        let (lo, hi) = (self.lo, self.hi);
        propagate(
            &mut self.words,
            &leader.ml,
            &leader.mr,
            &self.col_mask,
            lo,
            hi,
        );
        self.y += 1;
        self.retrim(lo.saturating_sub(1), (hi + 1).min(self.words.len() - 1));
    }

    fn retrim(&mut self, start: usize, end: usize) {
        let mut lo = start;
        while lo <= end && self.words[lo] == 0 {
            lo += 1;
        }
        if lo > end {
            self.empty = true;
            return;
        }
        let mut hi = end;
        while self.words[hi] == 0 {
            hi -= 1;
        }
        self.lo = lo;
        self.hi = hi;
    }
}

/// `occ(y+1) = shl(occ & right) | shr(occ & left)`, clipped to the box, in place.
#[inline]
fn propagate(words: &mut [u64], ml: &[u64], mr: &[u64], col_mask: &[u64], lo: usize, hi: usize) {
    let len = words.len();
    let start = lo.saturating_sub(1);
    let end = (hi + 1).min(len - 1);
    let and_lr = |words: &[u64], i: usize| -> (u64, u64) {
        if i >= lo && i <= hi {
            (words[i] & ml[i], words[i] & mr[i])
        } else {
            (0, 0)
        }
    };
    let mut r_prev = if start >= 1 { and_lr(words, start - 1).1 } else { 0 };
    let (mut l_cur, mut r_cur) = and_lr(words, start);
    for i in start..=end {
        let (l_next, r_next) = if i + 1 < len { and_lr(words, i + 1) } else { (0, 0) };
        let v = (r_cur << 1) | (r_prev >> 63) | (l_cur >> 1) | (l_next << 63);
        words[i] = v & col_mask[i];
        r_prev = r_cur;
        l_cur = l_next;
        r_cur = r_next;
    }
}
