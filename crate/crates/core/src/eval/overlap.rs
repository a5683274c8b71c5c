//! Window overlap profiles and the two bounds built on them: some block
//! covers a `1/(2 m')` share of every window, and the resulting conditional
//! variance floor `1/(16 m'^2)` under the Bernoulli adversary.

use num::{BigInt, BigRational, ToPrimitive, Zero};

use super::{BoundReport, EvalError};
use crate::instance::{approximate_uniformity, BlockRepresentation};

/// Share of the window `(t, t + w]` falling in each block. `t` and the block
/// positions are relative to the instance origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapProfile {
    pub t: u128,
    pub w: u128,
    /// 0-based index of the first block not yet observed at time `t`.
    pub first_unseen: usize,
    /// `(block, overlap)` for every block meeting the window, in order.
    pub counts: Vec<(usize, u128)>,
    /// The last block the window meets and the length `delta` it takes of it,
    /// when that block is not fully covered.
    pub partial: Option<(usize, u128)>,
    m: usize,
}

impl OverlapProfile {
    /// Dense `alpha` over all `m` blocks.
    pub fn alphas(&self) -> Vec<BigRational> {
        let mut a = vec![BigRational::zero(); self.m];
        let w = BigInt::from(self.w);
        for &(r, c) in &self.counts {
            a[r] = BigRational::new(BigInt::from(c), w.clone());
        }
        a
    }

    pub fn max_count(&self) -> u128 {
        self.counts.iter().map(|&(_, c)| c).max().unwrap_or(0)
    }

    /// `sum alpha_r^2`, exact.
    pub fn sum_of_squares(&self) -> BigRational {
        let q: BigInt = self.counts.iter().map(|&(_, c)| BigInt::from(c) * BigInt::from(c)).sum();
        BigRational::new(q, BigInt::from(self.w) * BigInt::from(self.w))
    }
}

pub fn window_overlap_profile(
    b: &BlockRepresentation,
    t: u128,
    w: u128,
) -> Result<OverlapProfile, EvalError> {
    let first_unseen = b
        .block_starting_at(t)
        .ok_or(EvalError::NotStoppingTime(t))?;
    if w == 0 || w > b.total() - t {
        return Err(EvalError::WindowOutOfRange { t, w });
    }
    let mut counts = Vec::new();
    let mut partial = None;
    let mut left = w;
    let mut r = first_unseen;
    while left > 0 {
        let l = b.lengths()[r] as u128;
        let c = l.min(left);
        counts.push((r, c));
        if c < l {
            partial = Some((r, c));
        }
        left -= c;
        r += 1;
    }
    Ok(OverlapProfile {
        t,
        w,
        first_unseen,
        counts,
        partial,
        m: b.m(),
    })
}

/// Visits every `(t, w)` in increasing order, passing the overlap counts.
/// Quadratic in `n`; intended for small instances and as a test oracle.
pub fn for_each_window(b: &BlockRepresentation, mut f: impl FnMut(u128, u128, &[u128])) {
    for i0 in 0..b.m() {
        let t = b.block_start(i0);
        let mut counts: Vec<u128> = Vec::new();
        for r in i0..b.m() {
            counts.push(0);
            for _ in 0..b.lengths()[r] {
                *counts.last_mut().expect("pushed") += 1;
                let w = b.block_start(r) - t + counts[r - i0];
                f(t, w, &counts);
            }
        }
    }
}

// For a window starting at block i0 and ending inside block j, with the full
// blocks i0..j contributing total `full` and largest `top`, and `delta` units
// of block j: the candidates for delta that can minimize each criterion.
struct Segment {
    t: u128,
    full: u128,
    top: u128,
    squares: u128,
    last: u128,
}

fn segments(b: &BlockRepresentation, mut f: impl FnMut(&Segment)) {
    for i0 in 0..b.m() {
        let mut seg = Segment {
            t: b.block_start(i0),
            full: 0,
            top: 0,
            squares: 0,
            last: 0,
        };
        for j in i0..b.m() {
            seg.last = b.lengths()[j] as u128;
            f(&seg);
            seg.full += seg.last;
            seg.top = seg.top.max(seg.last);
            seg.squares += seg.last * seg.last;
        }
    }
}

/// Checks `max_r alpha_r >= 1 / (2 m')` over every `(t, w)`, reporting the
/// smallest `max_r alpha_r`.
///
/// For a window ending inside block `j`, `max_r alpha_r = max(top, delta) / w`
/// with `w = full + delta`; that ratio is smallest at `delta = top` (clamped
/// to `1..=l_j`), so one window per `(i0, j)` pair decides the bound.
pub fn check_block_overlap(b: &BlockRepresentation) -> BoundReport {
    let u = approximate_uniformity(b);
    let mut worst: Option<(BigRational, u128, u128)> = None;
    segments(b, |s| {
        let delta = s.top.clamp(1, s.last);
        let w = s.full + delta;
        let share = BigRational::new(BigInt::from(s.top.max(delta)), BigInt::from(w));
        if worst.as_ref().is_none_or(|(v, _, _)| share < *v) {
            worst = Some((share, s.t, w));
        }
    });
    let (measured, t, w) = worst.expect("at least one window");
    let bound = BigRational::new(BigInt::from(u.max), BigInt::from(2u8) * BigInt::from(u.sum));
    BoundReport::exact("block_overlap", b, measured, bound, Some((t, w)), true)
}

/// Checks `min (1/4) sum alpha_r^2 >= 1 / (16 m'^2)` over every `(t, w)`.
///
/// For a window ending inside block `j`, `(1/4) sum alpha^2 =
/// (squares + delta^2) / (4 (full + delta)^2)`, which decreases until
/// `delta = squares / full` and increases after, so the integer neighbours of
/// that point (clamped to `1..=l_j`) are the only candidates.
pub fn variance_lower_bound_report(b: &BlockRepresentation) -> BoundReport {
    let u = approximate_uniformity(b);
    let mut worst: Option<(BigRational, u128, u128)> = None;
    segments(b, |s| {
        let mut candidates = vec![1, s.last];
        if let Some(lo) = s.squares.checked_div(s.full) {
            candidates.extend([lo, lo + 1]);
        }
        for delta in candidates {
            let delta = delta.clamp(1, s.last);
            let w = s.full + delta;
            let num = BigInt::from(s.squares) + BigInt::from(delta) * BigInt::from(delta);
            let den = BigInt::from(4u8) * BigInt::from(w) * BigInt::from(w);
            let v = BigRational::new(num, den);
            if worst.as_ref().is_none_or(|(cur, _, _)| v < *cur) {
                worst = Some((v, s.t, w));
            }
        }
    });
    let (measured, t, w) = worst.expect("at least one window");
    let ratio = u.ratio();
    let bound = BigRational::new(BigInt::from(1), BigInt::from(16)) / (&ratio * &ratio);
    BoundReport::exact("conditional_variance", b, measured, bound, Some((t, w)), true)
}

/// Smallest `(1/4) sum alpha^2` over all windows by direct enumeration.
pub fn min_conditional_variance_bruteforce(b: &BlockRepresentation) -> BigRational {
    let mut best: Option<BigRational> = None;
    for_each_window(b, |_, w, counts| {
        let q: u128 = counts.iter().map(|c| c * c).sum();
        let v = BigRational::new(BigInt::from(q), BigInt::from(4 * w * w));
        if best.as_ref().is_none_or(|cur| v < *cur) {
            best = Some(v);
        }
    });
    best.expect("at least one window")
}

/// Smallest `max alpha` over all windows by direct enumeration.
pub fn min_max_share_bruteforce(b: &BlockRepresentation) -> BigRational {
    let mut best: Option<BigRational> = None;
    for_each_window(b, |_, w, counts| {
        let top = counts.iter().copied().max().unwrap_or(0);
        let v = BigRational::new(BigInt::from(top), BigInt::from(w));
        if best.as_ref().is_none_or(|cur| v < *cur) {
            best = Some(v);
        }
    });
    best.expect("at least one window")
}

pub(crate) fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
