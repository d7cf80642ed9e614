//! Globally adaptive Gauss-Kronrod (7/15) quadrature in one dimension, and
//! an iterated version for double integrals over regions whose inner limits
//! depend on the outer variable.
//!
//! Integrands that are only piecewise smooth should be split at their kinks
//! with `breakpoints`; every initial panel is then smooth and the 15-point
//! rule converges in a handful of bisections.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{DomainError, Result};

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Cap on panels held by one 1-D integration.
pub const MAX_PANELS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Upper estimate of the absolute error.
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Panel {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(centre);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for (j, (&x, &w)) in KRONROD_NODES[..7]
        .iter()
        .zip(&KRONROD_WEIGHTS[..7])
        .enumerate()
    {
        let pair = f(centre - half * x) + f(centre + half * x);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += GAUSS_WEIGHTS[j / 2] * pair;
        }
    }
    Panel {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrate `f` over `[lo, hi]` to absolute accuracy `tolerance`.
///
/// Breakpoints outside the open interval are ignored. An empty or reversed
/// interval integrates to zero.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    tolerance: f64,
) -> Result<Estimate> {
    if hi <= lo {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let mut edges = vec![lo];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > lo && b < hi)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(hi);

    let mut heap: BinaryHeap<Panel> = edges
        .windows(2)
        .map(|w| kronrod15(&mut f, w[0], w[1]))
        .collect();

    loop {
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if error <= tolerance {
            let value = heap.iter().map(|p| p.value).sum();
            return Ok(Estimate { value, error });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.lo + worst.hi);
        if heap.len() + 2 > MAX_PANELS || mid <= worst.lo || mid >= worst.hi {
            heap.push(worst);
            let value = heap.iter().map(|p| p.value).sum();
            return Err(DomainError::QuadratureFailed {
                estimate: value,
                error,
                tolerance,
            });
        }
        heap.push(kronrod15(&mut f, worst.lo, mid));
        heap.push(kronrod15(&mut f, mid, worst.hi));
    }
}

/// Iterated double integral `int_{x0}^{x1} int_{lo(x)}^{hi(x)} f(x, y) dy dx`.
///
/// `inner_breaks(x)` lists kinks of `f(x, .)`; `outer_breaks` lists kinks of
/// the inner integral as a function of `x`. Inner integrations run at a
/// tighter tolerance so their error stays a small share of the total.
#[allow(clippy::too_many_arguments)]
pub fn integrate_2d<F, L, H, B>(
    f: F,
    x0: f64,
    x1: f64,
    outer_breaks: &[f64],
    lo: L,
    hi: H,
    inner_breaks: B,
    tolerance: f64,
) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64,
    L: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
    B: Fn(f64) -> Vec<f64>,
{
    let width = (x1 - x0).max(f64::MIN_POSITIVE);
    let inner_tol = 0.1 * tolerance / width;
    let mut failure = None;
    let mut worst_inner = 0.0f64;
    let outer = integrate(
        |x| {
            let breaks = inner_breaks(x);
            match integrate(|y| f(x, y), lo(x), hi(x), &breaks, inner_tol) {
                Ok(e) => {
                    worst_inner = worst_inner.max(e.error);
                    e.value
                }
                Err(err) => {
                    failure.get_or_insert(err);
                    f64::NAN
                }
            }
        },
        x0,
        x1,
        outer_breaks,
        0.9 * tolerance,
    );
    if let Some(err) = failure {
        return Err(err);
    }
    let outer = outer?;
    Ok(Estimate {
        value: outer.value,
        error: outer.error + worst_inner * width,
    })
}
