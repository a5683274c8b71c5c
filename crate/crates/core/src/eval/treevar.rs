//! Smallest window variance under the tree adversary.

use super::montecarlo::parallel_map;
use super::EvalError;
use crate::adversary::AdversaryTree;
use crate::instance::BlockRepresentation;

/// `Var(X_{t,w})` at the minimizing window, where `X_{t,w}` is the mean of
/// `(t, t + w]` under the tree adversary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowVariance {
    pub variance: f64,
    pub t: u128,
    pub w: u128,
}

/// Minimum over every stopping time `t` and width `w` of `Var(X_{t,w})`.
///
/// With `cnt(v)` the window length below node `v`,
/// `Var = sum_v g(v) cnt(v)^2 / (4 w^2)`. Growing the window by one step in
/// block `r` raises `cnt` by one along the path from `r`'s leaf to the root,
/// so the numerator is updated in `O(depth)` per step.
pub fn min_window_variance(
    b: &BlockRepresentation,
    tree: &AdversaryTree,
) -> Result<WindowVariance, EvalError> {
    if tree.m() != b.m() {
        return Err(crate::adversary::AdversaryError::Dimension {
            model: tree.m(),
            got: b.m(),
        }
        .into());
    }
    let paths: Vec<Vec<(usize, f64)>> = (0..b.m())
        .map(|r| {
            let mut path = Vec::new();
            let mut v = Some(tree.leaf_of_block(r));
            while let Some(id) = v {
                path.push((id, tree.increment(id)));
                v = tree.node(id).parent;
            }
            path
        })
        .collect();
    let per_start = parallel_map(b.m() as u64, |i0| {
        let i0 = i0 as usize;
        let t = b.block_start(i0);
        let mut cnt = vec![0u64; tree.len()];
        let mut q = 0.0f64;
        let mut w: u128 = 0;
        let mut best = WindowVariance {
            variance: f64::INFINITY,
            t,
            w: 0,
        };
        for (r, path) in paths.iter().enumerate().skip(i0) {
            for _ in 0..b.lengths()[r] {
                for &(v, g) in path {
                    q += g * (2 * cnt[v] + 1) as f64;
                    cnt[v] += 1;
                }
                w += 1;
                let var = q / (4.0 * (w as f64) * (w as f64));
                if var < best.variance {
                    best = WindowVariance { variance: var, t, w };
                }
            }
        }
        Ok(best)
    })?;
    Ok(per_start
        .into_iter()
        .reduce(|a, c| if c.variance < a.variance { c } else { a })
        .expect("at least two blocks"))
}
