//! Virtual edge configurations.
//!
//! Edge states are never stored. Each one is a pure function of the master
//! seed, the replica index, the edge's global coordinates and `p`, computed on
//! demand from a Philox stream. Two generation modes exist:
//!
//! * [`Mode::Fast`] draws whole 64-lane Bernoulli words by comparing the binary
//!   expansion of `p` against successive uniform words, stopping once every
//!   requested lane is decided.
//! * [`Mode::Coupled`] gives every edge its own 32-bit uniform `u` and opens it
//!   iff `u < q(p)`. For a fixed seed, openness is then nondecreasing in `p`.
//!
//! In both modes `p` is quantized to `q(p) = round(p * 2^32)`.

pub mod philox;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{is_site, Dir, Rect, Site};
use philox::{philox4x64, splitmix64};

const TAG_FAST_LEFT: u64 = 1;
const TAG_FAST_RIGHT: u64 = 2;
const TAG_COUPLED: u64 = 3;
const TAG_BULK: u64 = 4;

const REPLICA_SALT: u64 = 0x6A09_E667_F3BC_C908;

/// One unit of quantized probability: `q = 2^32` means "always open".
pub const P_ONE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master: u64,
    pub replica: u64,
}

impl SeedSpec {
    pub fn new(master: u64, replica: u64) -> SeedSpec {
        SeedSpec { master, replica }
    }
}

/// Philox key plus the fixed half of the counter for one `(row, word)` stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub key: [u64; 2],
    pub ctr: [u64; 2],
}

impl StreamKey {
    #[inline]
    fn block(&self, lo: u64, tag: u64) -> [u64; 4] {
        philox4x64([self.ctr[0], self.ctr[1], lo, tag], self.key)
    }
}

/// Maps `(master, replica, row, word)` to a generator stream.
///
/// The key is `[splitmix64(master), splitmix64(replica ^ REPLICA_SALT)]` and the
/// counter prefix is `[row, word]` reinterpreted as unsigned. Each component is
/// a bijection, so the whole map is injective. This layout is part of the
/// output format: changing it changes every simulated configuration.
#[inline]
pub fn seed_derivation(master: u64, replica: u64, row: i64, word: i64) -> StreamKey {
    StreamKey {
        key: replica_key(SeedSpec { master, replica }),
        ctr: [row as u64, word as u64],
    }
}

#[inline]
fn replica_key(seed: SeedSpec) -> [u64; 2] {
    [
        splitmix64(seed.master),
        splitmix64(seed.replica ^ REPLICA_SALT),
    ]
}

/// Quantize a probability to 32 bits.
pub fn quantize(p: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(((p * P_ONE as f64).round() as u64).min(P_ONE))
}

pub fn dequantize(q: u64) -> f64 {
    q as f64 / P_ONE as f64
}

/// Lanes of `need` that come out 1 with probability `q / 2^32`, from the
/// binary-expansion comparison against uniform words of the stream.
#[inline]
fn bernoulli_lanes(stream: &StreamKey, tag: u64, q: u64, need: u64) -> u64 {
    if q == 0 || need == 0 {
        return 0;
    }
    if q >= P_ONE {
        return need;
    }
    let mut undecided = need;
    let mut ones = 0u64;
    let mut bit = 0;
    let mut blk = 0u64;
    while bit < 32 {
        let words = stream.block(blk, tag);
        for u in words {
            if (q >> (31 - bit)) & 1 == 1 {
                ones |= undecided & !u;
                undecided &= u;
            } else {
                undecided &= !u;
            }
            bit += 1;
            if undecided == 0 || bit == 32 {
                return ones;
            }
        }
        blk += 1;
    }
    ones
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Fast,
    Coupled,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s.to_ascii_lowercase().as_str() {
            "fast" => Ok(Mode::Fast),
            "coupled" => Ok(Mode::Coupled),
            other => Err(Error::invalid(format!("unknown mode '{other}'"))),
        }
    }
}

/// Source of open/closed states, addressed by global 64-column words.
///
/// `word_masks(y, w, need)` returns the `(left, right)` open masks of row `y`
/// for columns `64*w .. 64*w + 63` (bit `b` is column `64*w + b`). Only the
/// lanes in `need` are meaningful; others are returned as zero.
pub trait EdgeField: Sync {
    fn word_masks(&self, y: i64, word: i64, need: u64) -> (u64, u64);

    fn is_open(&self, from: Site, dir: Dir) -> bool {
        let bit = 1u64 << from.x().rem_euclid(64);
        let (l, r) = self.word_masks(from.y(), from.x().div_euclid(64), bit);
        match dir {
            Dir::Left => l != 0,
            Dir::Right => r != 0,
        }
    }
}

impl<F: EdgeField + ?Sized> EdgeField for &F {
    #[inline]
    fn word_masks(&self, y: i64, word: i64, need: u64) -> (u64, u64) {
        (**self).word_masks(y, word, need)
    }
}

/// Masks for the 64 columns starting at an arbitrary column `start`.
#[inline]
pub fn window_masks<F: EdgeField + ?Sized>(f: &F, y: i64, start: i64, need: u64) -> (u64, u64) {
    let off = start.rem_euclid(64) as u32;
    let w0 = start.div_euclid(64);
    if off == 0 {
        return f.word_masks(y, w0, need);
    }
    let need_lo = need << off;
    let need_hi = need >> (64 - off);
    let (l0, r0) = if need_lo != 0 {
        f.word_masks(y, w0, need_lo)
    } else {
        (0, 0)
    };
    let (l1, r1) = if need_hi != 0 {
        f.word_masks(y, w0 + 1, need_hi)
    } else {
        (0, 0)
    };
    (
        (l0 >> off) | (l1 << (64 - off)),
        (r0 >> off) | (r1 << (64 - off)),
    )
}

/// Bits of a 64-column window starting at `start` that are lattice sites on row `y`.
#[inline]
pub fn parity_mask(start: i64, y: i64) -> u64 {
    if is_site(start, y) {
        0x5555_5555_5555_5555
    } else {
        0xAAAA_AAAA_AAAA_AAAA
    }
}

/// A seeded Bernoulli edge field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeConfig {
    seed: SeedSpec,
    p: f64,
    q: u64,
    mode: Mode,
    key: [u64; 2],
}

impl EdgeConfig {
    pub fn new(seed: SeedSpec, p: f64, mode: Mode) -> Result<EdgeConfig> {
        let q = quantize(p)?;
        Ok(EdgeConfig {
            seed,
            p,
            q,
            mode,
            key: replica_key(seed),
        })
    }

    /// Same seed and mode at a different `p`.
    pub fn with_p(&self, p: f64) -> Result<EdgeConfig> {
        EdgeConfig::new(self.seed, p, self.mode)
    }

    pub fn with_q(&self, q: u64) -> EdgeConfig {
        EdgeConfig {
            q: q.min(P_ONE),
            p: dequantize(q.min(P_ONE)),
            ..*self
        }
    }

    pub fn seed(&self) -> SeedSpec {
        self.seed
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn mode(&self) -> Mode {
        self.mode
    }

    #[inline]
    fn stream(&self, y: i64, word: i64) -> StreamKey {
        StreamKey {
            key: self.key,
            ctr: [y as u64, word as u64],
        }
    }

    /// The 32 coupled-mode uniform pairs of a word. Entry `s` belongs to
    /// the site at bit `2s + (y & 1)`; its low half drives the left edge and
    /// its high half the right edge.
    pub fn coupled_word_uniforms(&self, y: i64, word: i64) -> [u64; 32] {
        let st = self.stream(y, word);
        let mut out = [0u64; 32];
        for blk in 0..8 {
            let b = st.block(blk as u64, TAG_COUPLED);
            out[blk * 4..blk * 4 + 4].copy_from_slice(&b);
        }
        out
    }

    /// Coupled-mode uniforms `(left, right)` of a single site.
    pub fn coupled_site_uniforms(&self, s: Site) -> (u32, u32) {
        let word = s.x().div_euclid(64);
        let b = s.x().rem_euclid(64) as usize;
        let idx = b >> 1;
        let u = self.stream(s.y(), word).block((idx >> 2) as u64, TAG_COUPLED)[idx & 3];
        (u as u32, (u >> 32) as u32)
    }

    fn coupled_masks(&self, y: i64, word: i64, need: u64) -> (u64, u64) {
        if self.q == 0 {
            return (0, 0);
        }
        if self.q >= P_ONE {
            return (need, need);
        }
        let st = self.stream(y, word);
        let mut rest = need & parity_mask(word * 64, y);
        let (mut l, mut r) = (0u64, 0u64);
        let mut cached_blk = u64::MAX;
        let mut block = [0u64; 4];
        while rest != 0 {
            let b = rest.trailing_zeros();
            rest &= rest - 1;
            let idx = (b >> 1) as u64;
            if idx >> 2 != cached_blk {
                cached_blk = idx >> 2;
                block = st.block(cached_blk, TAG_COUPLED);
            }
            let u = block[(idx & 3) as usize];
            if (u & 0xFFFF_FFFF) < self.q {
                l |= 1 << b;
            }
            if (u >> 32) < self.q {
                r |= 1 << b;
            }
        }
        (l, r)
    }
}

impl EdgeField for EdgeConfig {
    #[inline]
    fn word_masks(&self, y: i64, word: i64, need: u64) -> (u64, u64) {
        match self.mode {
            Mode::Fast => {
                let st = self.stream(y, word);
                let need = need & parity_mask(word * 64, y);
                (
                    bernoulli_lanes(&st, TAG_FAST_LEFT, self.q, need),
                    bernoulli_lanes(&st, TAG_FAST_RIGHT, self.q, need),
                )
            }
            Mode::Coupled => self.coupled_masks(y, word, need),
        }
    }
}

/// Open-edge masks of one row of a rectangle, indexed from `x_min`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerMasks {
    pub y: i64,
    pub x_min: i64,
    pub width: usize,
    pub open_left: Vec<u64>,
    pub open_right: Vec<u64>,
}

impl LayerMasks {
    pub fn left(&self, x: i64) -> bool {
        bit_at(&self.open_left, x - self.x_min)
    }
    pub fn right(&self, x: i64) -> bool {
        bit_at(&self.open_right, x - self.x_min)
    }
}

fn bit_at(v: &[u64], i: i64) -> bool {
    i >= 0 && (i as usize) < v.len() * 64 && (v[i as usize / 64] >> (i % 64)) & 1 == 1
}

/// Edge states out of row `y` of `b`, for rows `y_min <= y < y_max`.
pub fn layer_masks<F: EdgeField + ?Sized>(f: &F, b: &Rect, y: i64) -> Result<LayerMasks> {
    if y < b.y_min || y >= b.y_max {
        return Err(Error::RowOutsideRect { y, rect: *b });
    }
    let width = (b.width() + 1) as usize;
    let nwords = width.div_ceil(64);
    let mut open_left = Vec::with_capacity(nwords);
    let mut open_right = Vec::with_capacity(nwords);
    for i in 0..nwords {
        let start = b.x_min + 64 * i as i64;
        let cols = (width - 64 * i).min(64);
        let span = if cols == 64 { u64::MAX } else { (1u64 << cols) - 1 };
        let need = span & parity_mask(start, y);
        let (l, r) = window_masks(f, y, start, need);
        open_left.push(l & need);
        open_right.push(r & need);
    }
    Ok(LayerMasks {
        y,
        x_min: b.x_min,
        width,
        open_left,
        open_right,
    })
}

/// `count` words of independent Bernoulli(p) bits from a bulk stream.
pub fn bernoulli_words(p: f64, count: usize, seed: SeedSpec, offset: u64) -> Result<Vec<u64>> {
    let q = quantize(p)?;
    let key = replica_key(seed);
    Ok((0..count)
        .map(|i| {
            let st = StreamKey {
                key,
                ctr: [offset, i as u64],
            };
            bernoulli_lanes(&st, TAG_BULK, q, u64::MAX)
        })
        .collect())
}

/// A configuration seen through the reflection `x -> c - x` (`c` even).
/// Left and right edges exchange roles.
#[derive(Debug, Clone, Copy)]
pub struct Mirrored<F> {
    inner: F,
    c: i64,
}

impl<F: EdgeField> Mirrored<F> {
    pub fn new(inner: F, c: i64) -> Result<Mirrored<F>> {
        if c & 1 != 0 {
            return Err(Error::invalid(format!(
                "reflection axis {c} must be even to preserve parity"
            )));
        }
        Ok(Mirrored { inner, c })
    }

    pub fn axis(&self) -> i64 {
        self.c
    }

    pub fn into_inner(self) -> F {
        self.inner
    }
}

impl<F: EdgeField> EdgeField for Mirrored<F> {
    fn word_masks(&self, y: i64, word: i64, need: u64) -> (u64, u64) {
        let start = self.c - 64 * word - 63;
        let (l, r) = window_masks(&self.inner, y, start, need.reverse_bits());
        (r.reverse_bits(), l.reverse_bits())
    }
}

/// The reflection of `cfg` about `b`'s centre axis, together with the image of `b`.
pub fn reflect_config<F: EdgeField>(cfg: F, b: &Rect) -> (Mirrored<F>, Rect) {
    let c = b.mirror_axis();
    (Mirrored { inner: cfg, c }, b.mirrored(c))
}

/// Dense index of the edges inside a rectangle, for explicit configurations.
#[derive(Debug, Clone)]
pub struct EdgeIndex {
    rect: Rect,
    edges: Vec<crate::lattice::OrientedEdge>,
    slot: Vec<i32>,
}

impl EdgeIndex {
    pub fn new(rect: Rect) -> EdgeIndex {
        let edges = rect.edges();
        let cols = (rect.width() + 1) as usize;
        let rows = (rect.height() + 1) as usize;
        let mut slot = vec![-1i32; cols * rows * 2];
        for (i, e) in edges.iter().enumerate() {
            let k = Self::slot_of(&rect, e.from.x(), e.from.y(), e.dir);
            slot[k] = i as i32;
        }
        EdgeIndex { rect, edges, slot }
    }

    #[inline]
    fn slot_of(rect: &Rect, x: i64, y: i64, dir: Dir) -> usize {
        let cols = (rect.width() + 1) as usize;
        (((y - rect.y_min) as usize * cols + (x - rect.x_min) as usize) << 1) | (dir == Dir::Right) as usize
    }

    pub fn rect(&self) -> &Rect {
        &self.rect
    }

    pub fn edges(&self) -> &[crate::lattice::OrientedEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    #[inline]
    pub fn index_of(&self, x: i64, y: i64, dir: Dir) -> Option<usize> {
        if !self.rect.contains_xy(x, y) {
            return None;
        }
        let s = self.slot[Self::slot_of(&self.rect, x, y, dir)];
        (s >= 0).then_some(s as usize)
    }

    pub fn with_open(&self, open: u64) -> FixedEdges<'_> {
        FixedEdges { index: self, open }
    }
}

/// An explicit configuration: edge `i` of the index is open iff bit `i` of
/// `open` is set. Edges outside the rectangle are closed.
#[derive(Debug, Clone, Copy)]
pub struct FixedEdges<'a> {
    index: &'a EdgeIndex,
    open: u64,
}

impl FixedEdges<'_> {
    pub fn open_mask(&self) -> u64 {
        self.open
    }
}

impl EdgeField for FixedEdges<'_> {
    fn word_masks(&self, y: i64, word: i64, need: u64) -> (u64, u64) {
        let (mut l, mut r) = (0u64, 0u64);
        let mut rest = need;
        while rest != 0 {
            let b = rest.trailing_zeros();
            rest &= rest - 1;
            let x = word * 64 + b as i64;
            if let Some(i) = self.index.index_of(x, y, Dir::Left) {
                l |= ((self.open >> i) & 1) << b;
            }
            if let Some(i) = self.index.index_of(x, y, Dir::Right) {
                r |= ((self.open >> i) & 1) << b;
            }
        }
        (l, r)
    }
}
