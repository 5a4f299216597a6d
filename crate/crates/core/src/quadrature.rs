//! Gaussian-expectation quadrature.
//!
//! [`QuadratureRule`] is a probabilist Gauss–Hermite rule: `Σ wᵢ f(xᵢ) ≈ E[f(N)]` for
//! `N ∼ N(0,1)`. Every population quantity in the crate reduces to such an expectation.
//! [`adaptive`] is a globally adaptive Gauss–Kronrod integrator used as an independent oracle
//! and for integrands with kinks (indicator-restricted expectations).

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 64;
pub const MIN_ORDER: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Probabilist Gauss–Hermite rule with `order` nodes.
    ///
    /// Nodes are the roots of the physicist Hermite polynomial, located by Newton's method on
    /// the orthonormal three-term recurrence, then rescaled by `√2`.
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::domain(format!("quadrature order must be >= 2, got {order}")));
        }
        let n = order;
        let nf = n as f64;
        let pim4 = PI.powf(-0.25);
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let m = n.div_ceil(2);
        let mut z = 0.0;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            let mut converged = false;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Internal(format!(
                    "Gauss-Hermite node {i} of order {n} did not converge"
                )));
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        let norm = PI.sqrt();
        let mut nodes: Vec<f64> = x.iter().map(|v| v * SQRT_2).collect();
        let mut weights: Vec<f64> = w.iter().map(|v| v / norm).collect();
        nodes.reverse();
        weights.reverse();
        Ok(QuadratureRule { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(N)]`.
    #[inline]
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// `E[f(μ + rN)]`.
    #[inline]
    pub fn expect_affine(&self, mu: f64, r: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.expect(|z| f(mu + r * z))
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_hermite(DEFAULT_ORDER).expect("default Gauss-Hermite order converges")
    }
}

pub mod adaptive {
    //! Globally adaptive 15-point Gauss–Kronrod integration (bisect the interval with the
    //! largest error estimate until the total estimate meets the tolerance).

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
    // Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
    const WG: [f64; 4] = [
        0.129_484_966_168_869_693_270_611_432_679_082,
        0.279_705_391_489_276_667_901_467_771_423_780,
        0.381_830_050_505_118_944_950_369_775_488_975,
        0.417_959_183_673_469_387_755_102_040_816_327,
    ];

    const MAX_SEGMENTS: usize = 4000;

    #[derive(Debug, Clone, Copy)]
    struct Segment {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
    }

    impl PartialEq for Segment {
        fn eq(&self, other: &Self) -> bool {
            self.error == other.error
        }
    }
    impl Eq for Segment {}
    impl PartialOrd for Segment {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Segment {
        fn cmp(&self, other: &Self) -> Ordering {
            self.error.total_cmp(&other.error)
        }
    }

    fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Segment {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut kronrod = WGK[7] * fc;
        let mut gauss = WG[3] * fc;
        for j in 0..7 {
            let dx = h * XGK[j];
            let s = f(c - dx) + f(c + dx);
            kronrod += WGK[j] * s;
            if j % 2 == 1 {
                gauss += WG[j / 2] * s;
            }
        }
        Segment {
            a,
            b,
            value: kronrod * h,
            error: ((kronrod - gauss) * h).abs(),
        }
    }

    /// `∫ₐᵇ f`.
    pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
        integrate_breaks(f, &[a, b], rel_tol, abs_tol)
    }

    /// Integral of `f` over `[breaks[0], breaks[last]]`, with the given interior points used as
    /// initial subdivision (put kinks and peaks there).
    ///
    /// Stops when the summed error estimate is below `max(abs_tol, rel_tol·|I|)` or when it
    /// reaches the floating-point floor of the accumulated sum.
    pub fn integrate_breaks(f: impl Fn(f64) -> f64, breaks: &[f64], rel_tol: f64, abs_tol: f64) -> f64 {
        assert!(breaks.len() >= 2, "need at least one interval");
        let mut heap = BinaryHeap::new();
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                heap.push(gk15(&f, w[0], w[1]));
            }
        }
        loop {
            let (value, error, magnitude) = heap.iter().fold((0.0, 0.0, 0.0), |acc, s| {
                (acc.0 + s.value, acc.1 + s.error, acc.2 + s.value.abs())
            });
            let floor = 50.0 * f64::EPSILON * magnitude;
            let tol = abs_tol.max(rel_tol * value.abs()).max(floor);
            if error <= tol || heap.len() >= MAX_SEGMENTS {
                return value;
            }
            let worst = heap.pop().expect("heap is non-empty");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // interval cannot be split further; keep it and give up refining
                heap.push(worst);
                return heap.iter().map(|s| s.value).sum();
            }
            heap.push(gk15(&f, worst.a, mid));
            heap.push(gk15(&f, mid, worst.b));
        }
    }

    /// `E[f(μ + rN)]` with `N ∼ N(0,1)`, integrated over `|z| ≤ 40`.
    ///
    /// `kinks` are points in the argument of `f` (not in `z`) where `f` is non-smooth.
    pub fn gaussian_expectation(
        f: impl Fn(f64) -> f64,
        mu: f64,
        r: f64,
        kinks: &[f64],
        rel_tol: f64,
        abs_tol: f64,
    ) -> f64 {
        const Z_MAX: f64 = 40.0;
        let mut breaks = vec![-Z_MAX, 0.0, Z_MAX];
        for &k in kinks {
            let z = (k - mu) / r;
            if z.abs() < Z_MAX {
                breaks.push(z);
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let integrand = |z: f64| f(mu + r * z) * crate::special::gaussian_pdf(z);
        integrate_breaks(integrand, &breaks, rel_tol, abs_tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_and_moments() {
        for &n in &[32, 64, 128] {
            let q = QuadratureRule::gauss_hermite(n).unwrap();
            assert_eq!(q.order(), n);
            let total: f64 = q.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "order {n}: {total}");
            assert!((q.expect(|x| x * x) - 1.0).abs() < 1e-10);
            assert!(q.expect(|x| x).abs() < 1e-13);
            assert!((q.expect(|x| x.powi(4)) - 3.0).abs() < 1e-10);
            assert!((q.expect(|x| x.powi(6)) - 15.0).abs() < 1e-9);
            assert!(q.weights().iter().all(|&w| w > 0.0));
            assert!(q.nodes().windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn small_rule_matches_closed_form() {
        // 3-point probabilist rule: nodes 0, ±√3, weights 2/3, 1/6
        let q = QuadratureRule::gauss_hermite(3).unwrap();
        assert_relative_eq!(q.nodes()[2], 3f64.sqrt(), max_relative = 1e-14);
        assert!(q.nodes()[1].abs() < 1e-15);
        assert_relative_eq!(q.weights()[1], 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(q.weights()[0], 1.0 / 6.0, max_relative = 1e-14);
    }

    #[test]
    fn expectation_of_cosine() {
        let q = QuadratureRule::default();
        assert_relative_eq!(q.expect(f64::cos), (-0.5f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(
            q.expect_affine(0.3, 0.7, f64::exp),
            (0.3 + 0.5 * 0.49f64).exp(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn kronrod_rule_is_exact_on_polynomials() {
        for k in 0..=22 {
            let v = adaptive::integrate(|x| x.powi(k), -1.0, 1.0, 0.0, f64::INFINITY);
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((v - exact).abs() < 1e-14, "x^{k}: {v} vs {exact}");
        }
    }

    #[test]
    fn adaptive_handles_peaks_and_kinks() {
        let v = adaptive::integrate(|x: f64| (-x * x * 1e4).exp(), -1.0, 1.0, 1e-14, 0.0);
        assert_relative_eq!(v, PI.sqrt() / 100.0, max_relative = 1e-13);
        let v = adaptive::integrate_breaks(|x: f64| x.abs(), &[-1.0, 0.0, 2.0], 1e-14, 0.0);
        assert_relative_eq!(v, 2.5, max_relative = 1e-14);
        let m = adaptive::gaussian_expectation(|x| if x > 1.0 { 1.0 } else { 0.0 }, 0.0, 1.0, &[1.0], 1e-13, 0.0);
        assert_relative_eq!(m, crate::special::gaussian_tail(1.0), max_relative = 1e-12);
    }
}
