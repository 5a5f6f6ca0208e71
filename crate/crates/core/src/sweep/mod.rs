//! Reachability by a single upward bit-parallel pass.
//!
//! Row `y + 1` of the occupied set is obtained from row `y` as
//! `shl(occ & open_right) | shr(occ & open_left)`, clipped to the box columns.
//! Only the words that currently hold occupied sites are touched, and edge
//! masks are requested only for those sites.

mod front;
mod path;
mod threshold;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{is_site, Rect, Site};
use crate::randfield::EdgeField;
use front::Front;

pub use path::{path_order, topmost_lr_crossing, Path};
pub use threshold::crossing_threshold;

/// Where the occupied set starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceSpec {
    /// The site `(0, 0)`.
    SingleOrigin,
    /// Every site of the bottom row of the box.
    BottomRow,
    /// Every site of the left column, injected at its own row.
    LeftColumn,
    /// Every site of the right column, injected at its own row.
    RightColumn,
    /// The even sites `(x, 0)` with `-w <= x <= 0`.
    HalfLineLeft { w: i64 },
}

/// The three crossing events of a box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Crossing {
    /// Bottom row to top row.
    Vertical,
    /// Left column to right column.
    LeftRight,
    /// Right column to left column.
    RightLeft,
}

/// Occupied sites of every swept row, stored as packed words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    y_min: i64,
    rows: Vec<(i64, Vec<u64>)>,
}

impl Trace {
    pub fn y_min(&self) -> i64 {
        self.y_min
    }

    pub fn height(&self) -> usize {
        self.rows.len()
    }

    /// Occupied columns of row `y`, ascending.
    pub fn row(&self, y: i64) -> Vec<i64> {
        let Some((base, words)) = usize::try_from(y - self.y_min)
            .ok()
            .and_then(|i| self.rows.get(i))
        else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for (i, &w) in words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                out.push((base + i as i64) * 64 + w.trailing_zeros() as i64);
                w &= w - 1;
            }
        }
        out
    }

    /// All occupied sites, row by row.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.rows.len()).flat_map(move |i| {
            let y = self.y_min + i as i64;
            self.row(y)
                .into_iter()
                .map(move |x| Site::new(x, y).expect("trace holds lattice sites only"))
        })
    }

    pub fn len(&self) -> usize {
        self.rows
            .iter()
            .map(|(_, w)| w.iter().map(|v| v.count_ones() as usize).sum::<usize>())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepResult {
    pub rect: Rect,
    /// Some site of the top row is occupied.
    pub reached_top: bool,
    /// Some site of the left column is occupied.
    pub reached_left: bool,
    /// Some site of the right column is occupied.
    pub reached_right: bool,
    /// Highest row holding an occupied site.
    pub highest_row: Option<i64>,
    /// Occupied columns of the top row.
    pub top_row: Vec<i64>,
    pub trace: Option<Trace>,
}

fn check_sources(b: &Rect, src: &SourceSpec) -> Result<()> {
    let any = match *src {
        SourceSpec::SingleOrigin => b.contains_xy(0, 0),
        SourceSpec::BottomRow => b.x_min < b.x_max || is_site(b.x_min, b.y_min),
        SourceSpec::LeftColumn => {
            b.y_min < b.y_max || is_site(b.x_min, b.y_min)
        }
        SourceSpec::RightColumn => {
            b.y_min < b.y_max || is_site(b.x_max, b.y_min)
        }
        SourceSpec::HalfLineLeft { w } => {
            if w <= 0 {
                return Err(Error::invalid(format!("half-line width must be positive, got {w}")));
            }
            b.y_min <= 0 && b.y_max >= 0 && b.x_min <= 0 && b.x_max >= -w && {
                let lo = b.x_min.max(-w);
                let hi = b.x_max.min(0);
                lo < hi || is_site(lo, 0)
            }
        }
    };
    if any {
        Ok(())
    } else {
        Err(Error::DegenerateSource { rect: *b })
    }
}

fn inject(front: &mut Front, b: &Rect, src: &SourceSpec) {
    let y = front.y();
    match *src {
        SourceSpec::SingleOrigin => {
            if y == 0 {
                front.insert(0);
            }
        }
        SourceSpec::BottomRow => {
            if y == b.y_min {
                front.insert_range(b.x_min, b.x_max);
            }
        }
        SourceSpec::LeftColumn => {
            front.insert(b.x_min);
        }
        SourceSpec::RightColumn => {
            front.insert(b.x_max);
        }
        SourceSpec::HalfLineLeft { w } => {
            if y == 0 {
                front.insert_range(-w, 0);
            }
        }
    }
}

/// Occupied set of `b` reachable from `src` by open paths inside `b`.
pub fn sweep<F: EdgeField + ?Sized>(
    cfg: &F,
    b: &Rect,
    src: &SourceSpec,
    keep_trace: bool,
) -> Result<SweepResult> {
    check_sources(b, src)?;
    let mut front = Front::new(*b);
    let mut trace = keep_trace.then(|| Trace {
        y_min: b.y_min,
        rows: Vec::with_capacity((b.height() + 1) as usize),
    });
    let mut res = SweepResult {
        rect: *b,
        reached_top: false,
        reached_left: false,
        reached_right: false,
        highest_row: None,
        top_row: Vec::new(),
        trace: None,
    };
    loop {
        inject(&mut front, b, src);
        let y = front.y();
        if !front.is_empty() {
            res.highest_row = Some(y);
            res.reached_left |= front.contains(b.x_min);
            res.reached_right |= front.contains(b.x_max);
        }
        if let Some(t) = trace.as_mut() {
            t.rows.push(front.snapshot());
        }
        if y == b.y_max {
            res.reached_top = !front.is_empty();
            res.top_row = front.columns();
            break;
        }
        front.advance(cfg);
    }
    res.trace = trace;
    Ok(res)
}

/// `true` iff an open path inside `b` joins its bottom row to its top row.
pub fn crossed_vertically<F: EdgeField + ?Sized>(cfg: &F, b: &Rect) -> bool {
    let mut front = Front::new(*b);
    if front.insert_range(b.x_min, b.x_max) == 0 {
        return false;
    }
    while front.y() < b.y_max {
        front.advance(cfg);
        if front.is_empty() {
            return false;
        }
    }
    true
}

/// `true` iff an open path inside `b` joins its left column to its right column.
pub fn crossed_lr<F: EdgeField + ?Sized>(cfg: &F, b: &Rect) -> bool {
    side_crossing(cfg, b, b.x_min, b.x_max)
}

/// `true` iff an open path inside `b` joins its right column to its left column.
pub fn crossed_rl<F: EdgeField + ?Sized>(cfg: &F, b: &Rect) -> bool {
    side_crossing(cfg, b, b.x_max, b.x_min)
}

fn side_crossing<F: EdgeField + ?Sized>(cfg: &F, b: &Rect, from: i64, to: i64) -> bool {
    let mut front = Front::new(*b);
    loop {
        front.insert(from);
        if front.contains(to) {
            return true;
        }
        if front.y() == b.y_max {
            return false;
        }
        front.advance(cfg);
    }
}

/// Dispatch over [`Crossing`].
pub fn crosses<F: EdgeField + ?Sized>(cfg: &F, b: &Rect, kind: Crossing) -> bool {
    match kind {
        Crossing::Vertical => crossed_vertically(cfg, b),
        Crossing::LeftRight => crossed_lr(cfg, b),
        Crossing::RightLeft => crossed_rl(cfg, b),
    }
}

/// Summary of the cluster grown from a source up to height `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub n: i64,
    /// The source reaches row `n`.
    pub hit: bool,
    /// Right-most occupied column of row `n`.
    pub rn: Option<i64>,
    /// Left-most occupied column of row `n`. Only for [`SourceSpec::SingleOrigin`].
    pub ln: Option<i64>,
    /// Rows holding exactly one occupied site. Only for [`SourceSpec::SingleOrigin`].
    pub renewal_heights: Vec<i64>,
    /// `max - min` occupied column for each row from 0 up to the highest reached row.
    pub row_width: Vec<i64>,
    /// Highest row holding an occupied site.
    pub height: Option<i64>,
    /// For half-line sources: the maximiser of row `n` may start in the
    /// left-most quarter of the truncated source segment.
    pub truncation_flag: bool,
    /// Truncation width used, for half-line sources.
    pub w: Option<i64>,
}

/// Cluster statistics at height `n` for a single origin or a truncated half-line.
///
/// The sweep box is chosen so that it contains every site reachable from the
/// sources within `n` rows, so nothing is clipped.
pub fn cluster_stats<F: EdgeField + ?Sized>(
    cfg: &F,
    n: i64,
    src: &SourceSpec,
) -> Result<ClusterStats> {
    if n < 0 {
        return Err(Error::invalid(format!("height must be non-negative, got {n}")));
    }
    match *src {
        SourceSpec::SingleOrigin => Ok(origin_stats(cfg, n)),
        SourceSpec::HalfLineLeft { w } => halfline_stats_at(cfg, n, w),
        _ => Err(Error::invalid(
            "cluster statistics need a SingleOrigin or HalfLineLeft source",
        )),
    }
}

fn origin_stats<F: EdgeField + ?Sized>(cfg: &F, n: i64) -> ClusterStats {
    let b = Rect {
        x_min: -n,
        x_max: n,
        y_min: 0,
        y_max: n,
    };
    let mut front = Front::new(b);
    front.insert(0);
    let mut renewal_heights = Vec::new();
    let mut row_width = Vec::new();
    let mut height = None;
    loop {
        if front.is_empty() {
            break;
        }
        height = Some(front.y());
        let (lo, hi) = (front.min_x().unwrap(), front.max_x().unwrap());
        row_width.push(hi - lo);
        if lo == hi {
            renewal_heights.push(front.y());
        }
        if front.y() == n {
            break;
        }
        front.advance(cfg);
    }
    let hit = height == Some(n);
    ClusterStats {
        n,
        hit,
        rn: if hit { front.max_x() } else { None },
        ln: if hit { front.min_x() } else { None },
        renewal_heights,
        row_width,
        height,
        truncation_flag: false,
        w: None,
    }
}

fn halfline_rect(n: i64, w: i64) -> Rect {
    Rect {
        x_min: -w - n,
        x_max: n,
        y_min: 0,
        y_max: n,
    }
}

fn halfline_stats_at<F: EdgeField + ?Sized>(cfg: &F, n: i64, w: i64) -> Result<ClusterStats> {
    let b = halfline_rect(n, w);
    check_sources(&b, &SourceSpec::HalfLineLeft { w })?;
    let mut full = Front::new(b);
    full.insert_range(-w, 0);
    // Sources at distance more than w/4 from the truncation boundary.
    let mut inner = Front::new(b);
    inner.insert_range(-(3 * w / 4), 0);
    let mut row_width = Vec::new();
    let mut height = None;
    loop {
        if full.is_empty() {
            break;
        }
        height = Some(full.y());
        row_width.push(full.max_x().unwrap() - full.min_x().unwrap());
        if full.y() == n {
            break;
        }
        full.advance(cfg);
        inner.advance_following(&full);
    }
    let hit = height == Some(n);
    let rn = if hit { full.max_x() } else { None };
    Ok(ClusterStats {
        n,
        hit,
        rn,
        ln: None,
        renewal_heights: Vec::new(),
        row_width,
        height,
        truncation_flag: hit && inner.max_x() != rn,
        w: Some(w),
    })
}

/// Half-line statistics with the truncation width chosen automatically:
/// start at `w0` (default `2n`) and double while the truncation flag is
/// raised, up to `8n`.
pub fn halfline_stats<F: EdgeField + ?Sized>(
    cfg: &F,
    n: i64,
    w0: Option<i64>,
) -> Result<ClusterStats> {
    let n1 = n.max(1);
    let mut w = w0.unwrap_or(2 * n1);
    loop {
        let s = halfline_stats_at(cfg, n, w)?;
        if !s.truncation_flag || 2 * w > 8 * n1 {
            return Ok(s);
        }
        w *= 2;
    }
}

/// `R_k` for `k = 0..=n`: right-most column of row `k` reachable from the
/// truncated half-line `{(x, 0) : -w <= x <= 0}`.
pub fn rightmost_profile<F: EdgeField + ?Sized>(
    cfg: &F,
    n: i64,
    w: i64,
) -> Result<Vec<Option<i64>>> {
    let b = halfline_rect(n, w);
    check_sources(&b, &SourceSpec::HalfLineLeft { w })?;
    let mut front = Front::new(b);
    front.insert_range(-w, 0);
    let mut out = Vec::with_capacity(n as usize + 1);
    loop {
        out.push(front.max_x());
        if front.y() == n {
            break;
        }
        front.advance(cfg);
    }
    Ok(out)
}

/// `R⁺_{m,n}`: how far right of `R⁺_m = max(0, R_m)` row `n` can be reached
/// from the sites of row `m` left of `R⁺_m`, with half-line truncation `w`.
pub fn rightmost_segment<F: EdgeField + ?Sized>(cfg: &F, m: i64, n: i64, w: i64) -> Result<i64> {
    if !(0 <= m && m <= n) {
        return Err(Error::invalid(format!("need 0 <= m <= n, got m={m}, n={n}")));
    }
    let profile = rightmost_profile(cfg, m, w)?;
    let r_plus = profile[m as usize].unwrap_or(0).max(0);
    Ok(segment_gain(cfg, m, n, w, r_plus))
}

/// `R⁺_{m,n}` given `R⁺_m`, in the box `[-w-n, n] x [0, n]`.
pub fn segment_gain<F: EdgeField + ?Sized>(cfg: &F, m: i64, n: i64, w: i64, r_plus: i64) -> i64 {
    let b = halfline_rect(n, w);
    let mut front = Front::new_at(b, m);
    front.insert_range(b.x_min, r_plus);
    while front.y() < n && !front.is_empty() {
        front.advance(cfg);
    }
    match front.max_x() {
        Some(r) if front.y() == n => (r - r_plus).max(0),
        _ => 0,
    }
}

/// Lattice positions swept per row by a single-origin sweep of height `n`,
/// summed over rows; used for throughput reporting.
pub fn origin_sweep_work<F: EdgeField + ?Sized>(cfg: &F, n: i64) -> u64 {
    let b = Rect {
        x_min: -n,
        x_max: n,
        y_min: 0,
        y_max: n,
    };
    let mut front = Front::new(b);
    front.insert(0);
    let mut work = 0u64;
    while front.y() < n && !front.is_empty() {
        let (lo, hi) = (front.min_x().unwrap(), front.max_x().unwrap());
        work += ((hi - lo) / 2 + 1) as u64;
        front.advance(cfg);
    }
    work
}

#[cfg(test)]
mod tests;
