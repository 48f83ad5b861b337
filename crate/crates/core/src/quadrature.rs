//! Deterministic tensor-product quadrature over ℝⁿ and the two mass-shell
//! pairing measures.
//!
//! Integrals use Gauss-Legendre nodes per axis after a tanh rescaling of
//! [−1, 1], truncated to a finite box.  Evaluations may run in parallel but
//! the reduction is a fixed balanced pairwise tree over the flat node index,
//! so results are bit-identical for any worker count.  Error control is a
//! posteriori: the estimate is the difference between the requested level
//! and the next coarser one.

use crate::error::{Error, Result};
use crate::kinematics::{lc_lift_into, mu_plus_of, omega_lift_into, omega_of, ModelParams, SqueezeSign};
use crate::testfn::MAX_DIM;
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Level ℓ selects 2^ℓ·16 Gauss-Legendre nodes per axis.
pub const MIN_LEVEL: u32 = 1;
pub const MAX_LEVEL: u32 = 12;

/// Steepness of the tanh node rescaling.
const TANH_ALPHA: f64 = 1.0;

/// Below this many nodes a region is summed sequentially.
const LEAF_NODES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOpts {
    pub level: u32,
    /// Half-width of the integration box; `None` picks
    /// 10·max(1, σ)·√(1+m) with σ = 1 when the pairing knows `m`,
    /// else [`DEFAULT_EXTENT`].
    pub extent: Option<f64>,
}

pub const DEFAULT_EXTENT: f64 = 14.142135623730951;

impl Default for QuadOpts {
    fn default() -> Self {
        Self { level: 7, extent: None }
    }
}

impl QuadOpts {
    pub fn new(level: u32, extent: f64) -> Self {
        Self { level, extent: Some(extent) }
    }

    pub fn with_level(level: u32) -> Self {
        Self { level, extent: None }
    }

    fn extent_for_mass(&self, m: f64) -> f64 {
        self.extent.unwrap_or_else(|| default_extent(1.0, m))
    }
}

/// Default box half-width 10·max(1, σ_max)·√(1+m).
pub fn default_extent(sigma_max: f64, m: f64) -> f64 {
    10.0 * sigma_max.max(1.0) * (1.0 + m).sqrt()
}

/// Quadrature value together with a two-level Richardson error estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error_estimate: f64,
}

fn gauss_legendre_cache() -> &'static Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss-Legendre nodes and weights on [−1, 1], memoized per count.
pub fn gauss_legendre(count: usize) -> Arc<Vec<(f64, f64)>> {
    if let Some(hit) = gauss_legendre_cache().lock().unwrap().get(&count) {
        return hit.clone();
    }
    let computed = Arc::new(compute_gauss_legendre(count));
    gauss_legendre_cache()
        .lock()
        .unwrap()
        .entry(count)
        .or_insert(computed)
        .clone()
}

fn compute_gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 2);
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pd(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (p2, d2) = legendre_pd(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        let (_, d) = legendre_pd(n, 0.0);
        out[n / 2] = (0.0, 2.0 / (d * d));
    }
    out
}

/// Legendre P_n and its derivative at x by the three-term recurrence.
fn legendre_pd(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Per-axis node/weight table on [a, b] after the tanh rescaling.
fn axis_nodes(a: f64, b: f64, count: usize) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(count);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let norm = TANH_ALPHA.tanh();
    gl.iter()
        .map(|&(t, w)| {
            let y = (TANH_ALPHA * t).tanh() / norm;
            let jac = TANH_ALPHA / norm * (1.0 - (TANH_ALPHA * t).tanh().powi(2));
            (c + h * y, w * h * jac)
        })
        .collect()
}

struct TensorRule {
    axes: Vec<Vec<(f64, f64)>>,
}

impl TensorRule {
    fn new(ranges: &[(f64, f64)], count: usize) -> Self {
        Self {
            axes: ranges.iter().map(|&(a, b)| axis_nodes(a, b, count)).collect(),
        }
    }

    fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    #[inline]
    fn node(&self, flat: usize, coords: &mut [f64]) -> f64 {
        let mut rem = flat;
        let mut w = 1.0;
        for (i, ax) in self.axes.iter().enumerate().rev() {
            let (x, wi) = ax[rem % ax.len()];
            coords[i] = x;
            w *= wi;
            rem /= ax.len();
        }
        w
    }

    /// Fixed balanced pairwise reduction over [lo, hi); the tree shape
    /// depends only on the index range, never on scheduling.
    fn sum<F>(&self, f: &F, lo: usize, hi: usize) -> Result<Complex64>
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        if hi - lo <= LEAF_NODES {
            let dim = self.axes.len();
            let mut coords = [0.0f64; MAX_DIM];
            let mut acc = Complex64::new(0.0, 0.0);
            for flat in lo..hi {
                let w = self.node(flat, &mut coords[..dim]);
                let v = f(&coords[..dim]);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFinite(format!(
                        "integrand at {:?}",
                        &coords[..dim]
                    )));
                }
                acc += w * v;
            }
            Ok(acc)
        } else {
            let mid = lo + (hi - lo) / 2;
            let (left, right) = rayon::join(|| self.sum(f, lo, mid), || self.sum(f, mid, hi));
            Ok(left? + right?)
        }
    }
}

fn nodes_for_level(level: u32) -> Result<usize> {
    if !(MIN_LEVEL..=MAX_LEVEL).contains(&level) {
        return Err(Error::InvalidParams(format!(
            "quadrature level must be in {MIN_LEVEL}..={MAX_LEVEL}, got {level}"
        )));
    }
    Ok((1usize << level) * 16)
}

/// Single-level integral over an arbitrary box.
pub fn integrate_box<F>(f: &F, ranges: &[(f64, f64)], level: u32) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    if ranges.is_empty() || ranges.len() > MAX_DIM {
        return Err(Error::DimensionMismatch { expected: MAX_DIM, got: ranges.len() });
    }
    let rule = TensorRule::new(ranges, nodes_for_level(level)?);
    rule.sum(f, 0, rule.len())
}

/// Integral over a box with the two-level Richardson error estimate.
pub fn integrate_box_estimated<F>(f: &F, ranges: &[(f64, f64)], level: u32) -> Result<QuadResult>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let fine = integrate_box(f, ranges, level)?;
    let coarse_level = level.saturating_sub(1).max(MIN_LEVEL);
    let coarse = if coarse_level == level {
        fine
    } else {
        integrate_box(f, ranges, coarse_level)?
    };
    Ok(QuadResult {
        value: fine,
        error_estimate: (fine - coarse).norm(),
    })
}

/// ∫_{ℝⁿ} f, truncated to [−extent, extent]ⁿ.  The integrand must decay
/// rapidly; that is the caller's responsibility.
pub fn integrate_rn<F>(f: &F, n: usize, opts: &QuadOpts) -> Result<QuadResult>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let extent = opts.extent.unwrap_or(DEFAULT_EXTENT);
    let ranges = vec![(-extent, extent); n];
    integrate_box_estimated(f, &ranges, opts.level)
}

/// Pairing of a density a(𝐩) on ℝⁿ against a function f on ℝ^{1+n} through
/// the invariant measure on one mass-shell sheet:
/// ∫ dⁿ𝐩 a(𝐩) f(±ω(𝐩), 𝐩) / (2ω(𝐩)).
pub fn pair_minkowski_delta<A, F>(
    a: &A,
    f: &F,
    sign: SqueezeSign,
    params: &ModelParams,
    opts: &QuadOpts,
) -> Result<QuadResult>
where
    A: Fn(&[f64]) -> Complex64 + Sync,
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let n = params.n;
    let m = params.m;
    let integrand = move |p: &[f64]| {
        let mut full = [0.0f64; MAX_DIM];
        omega_lift_into(sign, p, m, &mut full[..n + 1]);
        let w = full[0].abs();
        a(p) * f(&full[..n + 1]) / (2.0 * w)
    };
    let extent = opts.extent_for_mass(m);
    let ranges = vec![(-extent, extent); n];
    integrate_box_estimated(&integrand, &ranges, opts.level)
}

/// Which light-cone half-space(s) a pairing covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSide {
    Plus,
    Minus,
    Both,
}

impl PairSide {
    fn signs(self) -> &'static [SqueezeSign] {
        match self {
            PairSide::Plus => &[SqueezeSign::Plus],
            PairSide::Minus => &[SqueezeSign::Minus],
            PairSide::Both => &SqueezeSign::BOTH,
        }
    }
}

/// Pairing of a light-cone density b(𝐩̃) against f on ℝ^{1+n}:
/// ∫ dⁿ𝐩̃ Θ(±p⁺)/(2|p⁺|) b(𝐩̃) f(Ω̃(𝐩̃)).
///
/// Computed in Minkowski variables through the substitution 𝐩̃ = μ±(𝐩),
/// under which dⁿ𝐩̃/(2|p⁺|) = dⁿ𝐩/(2ω(𝐩)); the 1/|p⁺| singularity never
/// appears.  `b` must either be squeezed-decaying near p⁺ = 0 or the caller
/// must have symmetrized the integrand.
pub fn pair_lc_delta<B, F>(
    b: &B,
    f: &F,
    side: PairSide,
    params: &ModelParams,
    opts: &QuadOpts,
) -> Result<QuadResult>
where
    B: Fn(&[f64]) -> Complex64 + Sync,
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let n = params.n;
    let m = params.m;
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for &sign in side.signs() {
        let integrand = move |p: &[f64]| {
            // 𝐩̃ = μ±(𝐩)
            let p_plus = mu_plus_of(sign, p, m);
            let mut pt = [0.0f64; MAX_DIM];
            pt[0] = p_plus;
            pt[1..n].copy_from_slice(&p[..n - 1]);
            // Ω̃(𝐩̃) = (p⁺, p⊥, ω̃)
            let mut full = [0.0f64; MAX_DIM];
            lc_lift_into(p_plus, &p[..n - 1], m, &mut full[..n + 1]);
            let w = omega_of(p, m);
            b(&pt[..n]) * f(&full[..n + 1]) / (2.0 * w)
        };
        let extent = opts.extent_for_mass(m);
        let ranges = vec![(-extent, extent); n];
        let r = integrate_box_estimated(&integrand, &ranges, opts.level)?;
        total += r.value;
        err += r.error_estimate;
    }
    Ok(QuadResult { value: total, error_estimate: err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::Spec;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const SQRT_PI: f64 = 1.7724538509055159;

    /// Frozen by an independent high-precision oracle:
    /// ∫ e^{−p²}·e^{−(1+2p²)}/(2√(1+p²)) dp.
    const PAIR_GAUSS_ORACLE: f64 = 0.176252889465492244;

    /// Composite-Simpson oracle, independent of the Gauss-Legendre path.
    fn simpson_oracle(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut acc = f(a) + f(b);
        for i in 1..panels {
            let x = a + h * i as f64;
            acc += if i % 2 == 0 { 2.0 } else { 4.0 } * f(x);
        }
        acc * h / 3.0
    }

    #[test]
    fn gauss_legendre_basics() {
        // degree-5 rule integrates x^8 over [−1,1] inexactly but x^9 exactly (odd),
        // and sums weights to 2.
        let rule = gauss_legendre(16);
        let wsum: f64 = rule.iter().map(|&(_, w)| w).sum();
        assert_relative_eq!(wsum, 2.0, max_relative = 1e-14);
        let x2: f64 = rule.iter().map(|&(x, w)| w * x * x).sum();
        assert_relative_eq!(x2, 2.0 / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn gaussian_integrals() {
        let one_d = integrate_rn(&|x: &[f64]| Complex64::new((-x[0] * x[0]).exp(), 0.0), 1,
            &QuadOpts::with_level(6)).unwrap();
        assert_relative_eq!(one_d.value.re, SQRT_PI, max_relative = 1e-12);

        let two_d = integrate_rn(
            &|x: &[f64]| Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0),
            2,
            &QuadOpts::with_level(5),
        )
        .unwrap();
        assert_relative_eq!(two_d.value.re, PI, max_relative = 1e-10);

        let odd = integrate_rn(&|x: &[f64]| Complex64::new(x[0] * (-x[0] * x[0]).exp(), 0.0), 1,
            &QuadOpts::with_level(6)).unwrap();
        assert!(odd.value.norm() <= 1e-14);
    }

    #[test]
    fn richardson_estimate_shrinks_monotonically() {
        let f = |x: &[f64]| Complex64::new((-x[0] * x[0]).exp(), 0.0);
        let mut last = f64::INFINITY;
        for level in 2..=4 {
            let r = integrate_rn(&f, 1, &QuadOpts::with_level(level)).unwrap();
            assert!(
                r.error_estimate < last,
                "estimate did not shrink at level {level}: {} vs {last}",
                r.error_estimate
            );
            last = r.error_estimate;
            if last < 1e-13 {
                break;
            }
        }
    }

    #[test]
    fn rejects_non_finite_integrands() {
        let f = |x: &[f64]| Complex64::new(1.0 / x[0], 0.0);
        // 1/x is infinite at no Gauss node, so force a NaN instead
        let g = |_: &[f64]| Complex64::new(f64::NAN, 0.0);
        assert!(integrate_rn(&g, 1, &QuadOpts::with_level(1)).is_err());
        assert!(integrate_rn(&f, 1, &QuadOpts::with_level(1)).is_ok());
    }

    #[test]
    fn pairing_zero_density() {
        let params = ModelParams::new(1.0, 1).unwrap();
        let zero = |_: &[f64]| Complex64::new(0.0, 0.0);
        let f = |x: &[f64]| Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0);
        let r = pair_minkowski_delta(&zero, &f, SqueezeSign::Plus, &params, &QuadOpts::default())
            .unwrap();
        assert_eq!(r.value, Complex64::new(0.0, 0.0));
        let r = pair_lc_delta(&zero, &f, PairSide::Both, &params, &QuadOpts::default()).unwrap();
        assert_eq!(r.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn pairing_even_function_is_sign_symmetric() {
        let params = ModelParams::new(1.0, 1).unwrap();
        let a = |p: &[f64]| Complex64::new((-p[0] * p[0]).exp(), 0.0);
        // even in p⁰
        let f = |x: &[f64]| Complex64::new((-(x[0] * x[0]) - x[1] * x[1]).exp(), 0.0);
        let plus = pair_minkowski_delta(&a, &f, SqueezeSign::Plus, &params, &QuadOpts::default())
            .unwrap();
        let minus = pair_minkowski_delta(&a, &f, SqueezeSign::Minus, &params, &QuadOpts::default())
            .unwrap();
        assert_relative_eq!(plus.value.re, minus.value.re, max_relative = 1e-13);
    }

    #[test]
    fn pairing_matches_independent_oracle() {
        // a = e^{−p²}, f = e^{−(p⁰)²−p²}, m = 1, n = 1:
        // ∫ e^{−1−3p²}/(2√(1+p²)) dp.
        let oracle = simpson_oracle(
            |p| (-1.0 - 3.0 * p * p).exp() / (2.0 * (1.0 + p * p).sqrt()),
            -12.0,
            12.0,
            400_000,
        );
        assert_relative_eq!(oracle, PAIR_GAUSS_ORACLE, max_relative = 1e-13);

        let params = ModelParams::new(1.0, 1).unwrap();
        let a = |p: &[f64]| Complex64::new((-p[0] * p[0]).exp(), 0.0);
        let f = |x: &[f64]| Complex64::new((-x[0] * x[0] - x[1] * x[1]).exp(), 0.0);
        let r = pair_minkowski_delta(&a, &f, SqueezeSign::Plus, &params, &QuadOpts::with_level(6))
            .unwrap();
        assert_relative_eq!(r.value.re, PAIR_GAUSS_ORACLE, max_relative = 1e-12);
        assert!(r.value.im.abs() <= 1e-15);
    }

    #[test]
    fn lc_pairing_agrees_with_minkowski_route() {
        // Pullback densities make both pairings evaluate the same measure
        // through different arithmetic.
        let params = ModelParams::new(1.0, 1).unwrap();
        let a_spec = Spec::gauss_hermite(vec![0.3], 1.1, vec![0]).unwrap();
        let f_spec = Spec::gauss_hermite(vec![-0.2, 0.4], 0.9, vec![0, 0]).unwrap();
        let opts = QuadOpts::with_level(6);

        for sign in SqueezeSign::BOTH {
            let b_spec = Spec::pullback(a_spec.clone(), sign, params.m).unwrap();
            let a = |p: &[f64]| a_spec.eval_unchecked(p);
            let b = |pt: &[f64]| b_spec.eval_unchecked(pt);
            // LHS: Minkowski pairing of a against f∘κ
            let f_kappa = |p: &[f64]| {
                let mut lc = [0.0f64; 2];
                crate::kinematics::kappa_coords(p, &mut lc);
                f_spec.eval_unchecked(&lc)
            };
            let lhs =
                pair_minkowski_delta(&a, &f_kappa, sign, &params, &opts).unwrap();
            // RHS: LC pairing of the pullback density against f
            let side = match sign {
                SqueezeSign::Plus => PairSide::Plus,
                SqueezeSign::Minus => PairSide::Minus,
            };
            let f = |x: &[f64]| f_spec.eval_unchecked(x);
            let rhs = pair_lc_delta(&b, &f, side, &params, &opts).unwrap();
            assert_relative_eq!(lhs.value.re, rhs.value.re, max_relative = 1e-10);
            assert_relative_eq!(lhs.value.im, rhs.value.im, epsilon = 1e-14);
        }
    }

    #[test]
    fn half_line_box_reproduces_pauli_jordan_value() {
        // (i/2π) ∫₀^∞ (1/2p)(f̂(−p) − f̂(p)) dp with f̂ = −i√π p e^{−p²/4}
        // collapses to −(√π/2π) ∫₀^∞ e^{−p²/4} dp = −1/2.
        let integrand = |p: &[f64]| {
            let fhat = |q: f64| -Complex64::i() * SQRT_PI * q * (-q * q / 4.0).exp();
            Complex64::i() / (2.0 * PI) * (fhat(-p[0]) - fhat(p[0])) / (2.0 * p[0])
        };
        let v = integrate_box(&integrand, &[(0.0, 20.0)], 5).unwrap();
        assert_relative_eq!(v.re, -0.5, max_relative = 1e-10);
        assert!(v.im.abs() <= 1e-15);
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let params = ModelParams::new(1.0, 2).unwrap();
        let a = |p: &[f64]| Complex64::new((-(p[0] * p[0]) - 0.5 * p[1] * p[1]).exp(), 0.1 * p[0]);
        let f = |x: &[f64]| {
            Complex64::new((-(x[0] * x[0]) - x[1] * x[1] - x[2] * x[2]).exp(), 0.0)
        };
        let run = || {
            pair_minkowski_delta(&a, &f, SqueezeSign::Plus, &params, &QuadOpts::with_level(4))
                .unwrap()
                .value
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(run);
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(2)
            .build()
            .unwrap()
            .install(run);
        assert_eq!(single.re.to_bits(), multi.re.to_bits());
        assert_eq!(single.im.to_bits(), multi.im.to_bits());
    }
}
