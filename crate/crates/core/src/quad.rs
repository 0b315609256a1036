//! Quadrature primitives: Gauss-Legendre rules, a 21-point Gauss-Kronrod
//! panel rule and a globally adaptive integrator built on it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error(
        "adaptive quadrature did not converge after {subdivisions} subdivisions \
         (estimated error {achieved:e}, requested {requested:e})"
    )]
    NotConverged {
        achieved: f64,
        requested: f64,
        subdivisions: usize,
    },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

/// Integral estimate together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Composite rule over `panels` equal panels of `[a, b]`.
    pub fn composite<F>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64
    where
        F: FnMut(f64) -> f64,
    {
        let h = (b - a) / panels as f64;
        let mut sum = 0.0;
        for p in 0..panels {
            let lo = a + h * p as f64;
            let hi = if p + 1 == panels { b } else { lo + h };
            for (x, w) in self.mapped(lo, hi) {
                sum += w * f(x);
            }
        }
        sum
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    if n == 0 {
        (1.0, 0.0)
    } else {
        (p1, d)
    }
}

#[allow(clippy::excessive_precision)]
const XGK21: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// One 21-point Gauss-Kronrod panel with the QUADPACK error heuristic.
pub fn gauss_kronrod21<F>(f: &mut F, a: f64, b: f64) -> Result<Estimate, QuadError>
where
    F: FnMut(f64) -> f64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<f64, QuadError> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadError::NonFinite { x })
        }
    };

    let fc = eval(center)?;
    let mut res_k = fc * WGK21[10];
    let mut res_g = 0.0;
    let mut res_abs = (fc * WGK21[10]).abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK21[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK21[j] * (f1 + f2);
        res_abs += WGK21[j] * (f1.abs() + f2.abs());
        // odd positions are the embedded Gauss nodes
        if j % 2 == 1 {
            res_g += WG10[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK21[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK21[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Estimate { value, error: err })
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
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
        self.est
            .error
            .total_cmp(&other.est.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Tolerances for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_subdivisions: usize,
}

/// Globally adaptive Gauss-Kronrod integration over the union of the
/// consecutive intervals delimited by `breakpoints` (which must be sorted).
///
/// The panel with the largest error estimate is bisected until the summed
/// error drops below `max(tol.abs, tol.rel * |value|)`.
pub fn adaptive<F>(mut f: F, breakpoints: &[f64], tol: Tolerance) -> Result<Estimate, QuadError>
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(breakpoints.windows(2).all(|w| w[0] <= w[1]));
    let mut heap = BinaryHeap::new();
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            let est = gauss_kronrod21(&mut f, w[0], w[1])?;
            heap.push(Panel {
                a: w[0],
                b: w[1],
                est,
            });
        }
    }
    let mut value: f64 = heap.iter().map(|p| p.est.value).sum();
    let mut error: f64 = heap.iter().map(|p| p.est.error).sum();
    let mut subdivisions = 0;
    loop {
        let requested = tol.abs.max(tol.rel * value.abs());
        if error <= requested {
            break;
        }
        if subdivisions >= tol.max_subdivisions {
            return Err(QuadError::NotConverged {
                achieved: error,
                requested,
                subdivisions,
            });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine resolution
            return Err(QuadError::NotConverged {
                achieved: error,
                requested,
                subdivisions,
            });
        }
        let left = gauss_kronrod21(&mut f, worst.a, mid)?;
        let right = gauss_kronrod21(&mut f, mid, worst.b)?;
        value += left.value + right.value - worst.est.value;
        error += left.error + right.error - worst.est.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            est: right,
        });
        subdivisions += 1;
    }
    // final sums in left-to-right order
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    Ok(Estimate {
        value: panels.iter().map(|p| p.est.value).sum(),
        error: panels.iter().map(|p| p.est.error).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..=16 {
            let rule = GaussLegendre::new(n);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-14, "n={n}");
            for deg in 0..2 * n {
                let got: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn kronrod_weights_are_consistent() {
        let mut one = |_x: f64| 1.0;
        let est = gauss_kronrod21(&mut one, -1.0, 1.0).unwrap();
        assert!((est.value - 2.0).abs() < 1e-15);
        let mut poly = |x: f64| x.powi(30);
        let est = gauss_kronrod21(&mut poly, 0.0, 1.0).unwrap();
        assert!((est.value - 1.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let tol = Tolerance {
            abs: 1e-13,
            rel: 1e-12,
            max_subdivisions: 200,
        };
        let est = adaptive(|x: f64| x.powf(0.3), &[0.0, 1.0], tol).unwrap();
        assert!((est.value - 1.0 / 1.3).abs() < 1e-12);
        assert!(est.error <= 1e-12);
    }

    #[test]
    fn adaptive_reports_budget_exhaustion() {
        let tol = Tolerance {
            abs: 1e-15,
            rel: 1e-15,
            max_subdivisions: 2,
        };
        let err = adaptive(|x: f64| x.powf(-0.9), &[0.0, 1.0], tol).unwrap_err();
        assert!(matches!(
            err,
            QuadError::NotConverged {
                subdivisions: 2,
                ..
            }
        ));
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let tol = Tolerance {
            abs: 1e-10,
            rel: 1e-10,
            max_subdivisions: 10,
        };
        let err = adaptive(
            |x: f64| if x > 0.5 { f64::NAN } else { x },
            &[0.0, 1.0],
            tol,
        );
        assert!(matches!(err, Err(QuadError::NonFinite { .. })));
    }
}
