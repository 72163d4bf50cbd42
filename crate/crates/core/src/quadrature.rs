//! Globally adaptive Gauss-Kronrod (7/15) quadrature on intervals, and the
//! nested form used for two-dimensional simplex integrals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
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
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        k += WGK[j] * pair;
        if j % 2 == 1 {
            g += WG[j / 2] * pair;
        }
    }
    let value = k * half;
    let error = ((k - g) * half).abs();
    Panel { a, b, value, error }
}

/// Adaptive integrator configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_panels: 2000,
        }
    }
}

impl Quadrature {
    pub fn with_tolerance(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
            ..Self::default()
        }
    }

    /// Integrates `f` over `[points[0], points[last]]`, starting from one
    /// panel per consecutive pair of `points`. Splits the panel with the
    /// largest error estimate until the summed estimate meets the tolerance.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, points: &[f64]) -> Integral {
        let mut heap: BinaryHeap<Panel> = points
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| kronrod(&mut f, w[0], w[1]))
            .collect();
        let mut evaluations = 15 * heap.len();
        let mut value: f64 = heap.iter().map(|p| p.value).sum();
        let mut error: f64 = heap.iter().map(|p| p.error).sum();
        loop {
            let target = self.abs_tol.max(self.rel_tol * value.abs());
            let done = error <= target;
            if done || heap.len() >= self.max_panels {
                return Integral {
                    value: heap.iter().map(|p| p.value).sum(),
                    error: heap.iter().map(|p| p.error).sum(),
                    evaluations,
                    converged: done,
                };
            }
            let worst = heap.pop().expect("non-empty heap");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // interval exhausted at machine resolution
                error -= worst.error;
                heap.push(Panel {
                    error: 0.0,
                    ..worst
                });
                continue;
            }
            let left = kronrod(&mut f, worst.a, mid);
            let right = kronrod(&mut f, mid, worst.b);
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
            evaluations += 30;
        }
    }
}

/// Sorted integration points on `[lo, hi]`: the limits plus
/// `center +- k * scale` for each multiple `k` that falls strictly inside.
pub fn breakpoints(lo: f64, hi: f64, center: f64, scale: f64, multiples: &[f64]) -> Vec<f64> {
    let mut pts = vec![lo, hi, center];
    for &k in multiples {
        pts.push(center - k * scale);
        pts.push(center + k * scale);
    }
    let mut pts: Vec<f64> = pts.into_iter().filter(|&p| p >= lo && p <= hi).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Default multiples of a standard deviation used to seed panels around a mode.
pub const SD_MULTIPLES: [f64; 9] = [0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 20.0];
