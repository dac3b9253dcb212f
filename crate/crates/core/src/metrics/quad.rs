//! Adaptive Gauss–Kronrod (G7/K15) quadrature for complex scalar and
//! complex vector integrands.

use std::collections::BinaryHeap;

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The 15 Kronrod nodes mapped to `[a, b]`, in ascending order.
pub(crate) fn nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [0.0; 15];
    for i in 0..7 {
        x[i] = c - h * XGK[i];
        x[14 - i] = c + h * XGK[i];
    }
    x[7] = c;
    x
}

/// Kronrod and Gauss weights aligned with [`nodes`], scaled to `[a, b]`.
pub(crate) fn weights(a: f64, b: f64) -> ([f64; 15], [f64; 15]) {
    let h = 0.5 * (b - a);
    let mut wk = [0.0; 15];
    let mut wg = [0.0; 15];
    for i in 0..7 {
        wk[i] = h * WGK[i];
        wk[14 - i] = h * WGK[i];
    }
    wk[7] = h * WGK[7];
    // Gauss nodes are the odd-indexed Kronrod nodes 1, 3, 5 and the centre.
    for (j, i) in [1usize, 3, 5].iter().enumerate() {
        wg[*i] = h * WG[j];
        wg[14 - *i] = h * WG[j];
    }
    wg[7] = h * WG[3];
    (wk, wg)
}

struct Piece {
    err: f64,
    a: f64,
    b: f64,
    val: Vec<Complex64>,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone)]
pub(crate) struct Integral {
    pub value: Vec<Complex64>,
    /// Sum over intervals of the max-norm Kronrod–Gauss difference.
    pub error: f64,
    pub converged: bool,
}

/// Integrates a vector-valued integrand over `breaks` (ascending, at least
/// two points), bisecting the worst interval until the summed error is
/// below `abs_tol` or `max_intervals` is reached. `f(x, out)` writes the
/// integrand at `x` into `out`.
pub(crate) fn integrate_vec<F>(
    mut f: F,
    breaks: &[f64],
    dim: usize,
    abs_tol: f64,
    max_intervals: usize,
) -> Integral
where
    F: FnMut(f64, &mut [Complex64]),
{
    let mut buf = vec![Complex64::new(0.0, 0.0); dim];
    let mut eval = |a: f64, b: f64, buf: &mut Vec<Complex64>| -> Piece {
        let x = nodes(a, b);
        let (wk, wg) = weights(a, b);
        let mut k = vec![Complex64::new(0.0, 0.0); dim];
        let mut g = vec![Complex64::new(0.0, 0.0); dim];
        for i in 0..15 {
            f(x[i], buf);
            for d in 0..dim {
                k[d] += buf[d] * wk[i];
                if wg[i] != 0.0 {
                    g[d] += buf[d] * wg[i];
                }
            }
        }
        let err = k
            .iter()
            .zip(&g)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        Piece { err, a, b, val: k }
    };
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let p = eval(w[0], w[1], &mut buf);
            total += p.err;
            heap.push(p);
        }
    }
    loop {
        if total <= abs_tol || heap.len() >= max_intervals {
            // Re-sum to shed the drift of the running total.
            total = heap.iter().map(|p| p.err).sum();
            if total <= abs_tol || heap.len() >= max_intervals {
                let mut value = vec![Complex64::new(0.0, 0.0); dim];
                for p in heap.iter() {
                    for d in 0..dim {
                        value[d] += p.val[d];
                    }
                }
                return Integral {
                    value,
                    error: total,
                    converged: total <= abs_tol,
                };
            }
        }
        let worst = heap.pop().expect("non-empty heap");
        total -= worst.err;
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval at floating-point resolution; keep it as is.
            heap.push(Piece { err: 0.0, ..worst });
            continue;
        }
        let left = eval(worst.a, mid, &mut buf);
        let right = eval(mid, worst.b, &mut buf);
        total += left.err + right.err;
        heap.push(left);
        heap.push(right);
    }
}

/// Scalar convenience wrapper over [`integrate_vec`].
pub(crate) fn integrate<F>(mut f: F, breaks: &[f64], abs_tol: f64, max_intervals: usize) -> (Complex64, f64, bool)
where
    F: FnMut(f64) -> Complex64,
{
    let r = integrate_vec(|x, out| out[0] = f(x), breaks, 1, abs_tol, max_intervals);
    (r.value[0], r.error, r.converged)
}
