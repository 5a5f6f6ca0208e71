//! Crossing thresholds of a coupled configuration.
//!
//! In coupled mode an edge with uniform `u` is open at quantized level `q` iff
//! `u < q`. A crossing exists at level `q` iff some crossing path has all its
//! uniforms below `q`, i.e. iff `q` is at least the minimax cost
//! `min over paths of max over edges of (u + 1)`. That cost is computed row by
//! row like a sweep, with `min` and `max` in place of `or` and `and`.

use crate::lattice::{is_site, Rect};
use crate::randfield::{EdgeConfig, Mode, P_ONE};

use super::Crossing;

const UNREACHED: u64 = u64::MAX;

/// Smallest quantized level `q` at which `cfg` (re-thresholded) has the
/// crossing `kind` of `b`, or `None` if `b` has no geometric crossing.
///
/// `q = 0` means the crossing needs no edge at all. The crossing exists at
/// level `q` iff the returned value is `<= q`, so every replica contributes a
/// step function of `q`, and counts over replicas are monotone in `q`.
///
/// # Panics
/// If `cfg` is not in [`Mode::Coupled`].
pub fn crossing_threshold(cfg: &EdgeConfig, b: &Rect, kind: Crossing) -> Option<u64> {
    assert_eq!(cfg.mode(), Mode::Coupled, "thresholds need coupled uniforms");
    let width = (b.width() + 1) as usize;
    let mut cur = vec![UNREACHED; width];
    let mut next = vec![UNREACHED; width];
    let (src_col, dst_col) = match kind {
        Crossing::Vertical => (None, None),
        Crossing::LeftRight => (Some(0), Some(width - 1)),
        Crossing::RightLeft => (Some(width - 1), Some(0)),
    };
    if kind == Crossing::Vertical {
        for (i, c) in cur.iter_mut().enumerate() {
            if is_site(b.x_min + i as i64, b.y_min) {
                *c = 0;
            }
        }
    }
    let mut best = UNREACHED;
    let mut y = b.y_min;
    let mut uniforms = [0u64; 32];
    loop {
        if let Some(s) = src_col {
            if is_site(b.x_min + s as i64, y) {
                cur[s] = 0;
            }
        }
        if let Some(d) = dst_col {
            best = best.min(cur[d]);
        }
        if y == b.y_max {
            if kind == Crossing::Vertical {
                best = cur.iter().copied().min().unwrap_or(UNREACHED);
            }
            break;
        }
        next.fill(UNREACHED);
        let first = if is_site(b.x_min, y) { 0 } else { 1 };
        let mut loaded_word = i64::MIN;
        let mut any = false;
        for i in (first..width).step_by(2) {
            let c = cur[i];
            if c >= best {
                continue;
            }
            any = true;
            let x = b.x_min + i as i64;
            let word = x.div_euclid(64);
            if word != loaded_word {
                uniforms = cfg.coupled_word_uniforms(y, word);
                loaded_word = word;
            }
            let u = uniforms[(x.rem_euclid(64) >> 1) as usize];
            if i > 0 {
                let v = c.max((u & 0xFFFF_FFFF) + 1);
                next[i - 1] = next[i - 1].min(v);
            }
            if i + 1 < width {
                let v = c.max((u >> 32) + 1);
                next[i + 1] = next[i + 1].min(v);
            }
        }
        std::mem::swap(&mut cur, &mut next);
        y += 1;
        if !any && src_col.is_none() {
            break;
        }
    }
    (best <= P_ONE).then_some(best)
}
