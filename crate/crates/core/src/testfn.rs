//! Closed-form test-function families used for all distributional pairings:
//! Gaussian-Hermite profiles, flat-at-zero "squeezed" variants, pullbacks
//! through the squeezing map, and x⁻-derivative families.
//!
//! Every family member evaluates exactly; low-order derivatives and Fourier
//! transforms are exact where a closed form exists and fall back to a
//! documented 4th-order finite-difference stencil otherwise.

use crate::error::{Error, Result};
use crate::kinematics::{nu_unsqueeze_into, SqueezeSign};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Largest supported point dimension (1+n with n ≤ 3 plus headroom).
pub const MAX_DIM: usize = 8;

/// Finite-difference step for derivatives without a closed form.
pub const FD_STEP: f64 = 1e-4;

/// A closed-form evaluable function on ℝᵈ.
///
/// `GaussHermite` is the rapid-decrease workhorse
/// `(x−c)^α e^{−|x−c|²/(2σ²)}`.  `FlatAtZero` multiplies a base profile by
/// `e^{−s/t²}` on one axis (extended by zero at t = 0), producing functions
/// all of whose derivatives vanish at t = 0.  `Pullback` composes a base
/// profile with the squeezing map ν on the half-space `±p⁺ > 0` and is zero
/// elsewhere.  `XMinusDerivative` is the k-fold derivative family along the
/// last axis, with the sign normalized so the forward partial light-cone
/// transform multiplies by `(i p⁺)^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum TestFunctionSpec {
    Constant {
        value: Complex64,
        dim: usize,
    },
    GaussHermite {
        center: Vec<f64>,
        width: f64,
        poly: Vec<u32>,
    },
    FlatAtZero {
        base: Box<TestFunctionSpec>,
        flat_axis: usize,
        flat_scale: f64,
    },
    Pullback {
        base: Box<TestFunctionSpec>,
        sign: SqueezeSign,
        mass: f64,
    },
    XMinusDerivative {
        base: Box<TestFunctionSpec>,
        order: u32,
    },
    Sum {
        terms: Vec<(Complex64, TestFunctionSpec)>,
    },
    Product {
        factors: Vec<TestFunctionSpec>,
    },
}

pub use TestFunctionSpec as Spec;

impl TestFunctionSpec {
    pub fn constant(value: impl Into<Complex64>, dim: usize) -> Self {
        Self::Constant {
            value: value.into(),
            dim,
        }
    }

    /// `(x−c)^α e^{−|x−c|²/(2σ²)}` with σ = `width` > 0.
    pub fn gauss_hermite(center: Vec<f64>, width: f64, poly: Vec<u32>) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidParams(format!("width must be > 0, got {width}")));
        }
        if poly.len() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                got: poly.len(),
            });
        }
        Ok(Self::GaussHermite { center, width, poly })
    }

    /// Centered Gaussian `e^{−|x|²/(2σ²)}` on ℝᵈ.
    pub fn gaussian(dim: usize, width: f64) -> Result<Self> {
        Self::gauss_hermite(vec![0.0; dim], width, vec![0; dim])
    }

    pub fn flat_at_zero(base: TestFunctionSpec, flat_axis: usize, flat_scale: f64) -> Result<Self> {
        if flat_axis >= base.dim() {
            return Err(Error::InvalidAxis(format!(
                "flat axis {flat_axis} out of range for dimension {}",
                base.dim()
            )));
        }
        if !(flat_scale.is_finite() && flat_scale > 0.0) {
            return Err(Error::InvalidParams(format!(
                "flat scale must be > 0, got {flat_scale}"
            )));
        }
        Ok(Self::FlatAtZero {
            base: Box::new(base),
            flat_axis,
            flat_scale,
        })
    }

    pub fn pullback(base: TestFunctionSpec, sign: SqueezeSign, mass: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidParams(format!("mass must be > 0, got {mass}")));
        }
        Ok(Self::Pullback {
            base: Box::new(base),
            sign,
            mass,
        })
    }

    pub fn x_minus_derivative(base: TestFunctionSpec, order: u32) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParams("derivative order must be >= 1".into()));
        }
        Ok(Self::XMinusDerivative {
            base: Box::new(base),
            order,
        })
    }

    pub fn sum(terms: Vec<(Complex64, TestFunctionSpec)>) -> Result<Self> {
        let dim = terms
            .first()
            .map(|(_, s)| s.dim())
            .ok_or_else(|| Error::InvalidParams("empty sum".into()))?;
        for (_, s) in &terms {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.dim(),
                });
            }
        }
        Ok(Self::Sum { terms })
    }

    pub fn product(factors: Vec<TestFunctionSpec>) -> Result<Self> {
        let dim = factors
            .first()
            .map(|s| s.dim())
            .ok_or_else(|| Error::InvalidParams("empty product".into()))?;
        for s in &factors {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.dim(),
                });
            }
        }
        Ok(Self::Product { factors })
    }

    pub fn scaled(self, c: impl Into<Complex64>) -> Self {
        Self::Sum {
            terms: vec![(c.into(), self)],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Constant { dim, .. } => *dim,
            Self::GaussHermite { center, .. } => center.len(),
            Self::FlatAtZero { base, .. } => base.dim(),
            Self::Pullback { base, .. } => base.dim(),
            Self::XMinusDerivative { base, .. } => base.dim(),
            Self::Sum { terms } => terms[0].1.dim(),
            Self::Product { factors } => factors[0].dim(),
        }
    }

    /// Pointwise evaluation.  `FlatAtZero` returns 0 at t = 0; `Pullback`
    /// returns 0 on the wrong half-space and at p⁺ = 0.
    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without the dimension check; used by hot quadrature loops
    /// after a single up-front validation.
    pub fn eval_unchecked(&self, x: &[f64]) -> Complex64 {
        match self {
            Self::Constant { value, .. } => *value,
            Self::GaussHermite { center, width, poly } => {
                let inv2s2 = 1.0 / (2.0 * width * width);
                let mut q = 0.0;
                let mut mono = 1.0;
                for i in 0..center.len() {
                    let d = x[i] - center[i];
                    q += d * d;
                    match poly[i] {
                        0 => {}
                        1 => mono *= d,
                        k => mono *= d.powi(k as i32),
                    }
                }
                Complex64::new(mono * (-q * inv2s2).exp(), 0.0)
            }
            Self::FlatAtZero {
                base,
                flat_axis,
                flat_scale,
            } => {
                let t = x[*flat_axis];
                if t == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let damp = (-flat_scale / (t * t)).exp();
                base.eval_unchecked(x) * damp
            }
            Self::Pullback { base, sign, mass } => {
                let p_plus = x[0];
                if p_plus == 0.0 || p_plus.signum() != sign.signum() {
                    return Complex64::new(0.0, 0.0);
                }
                let n = x.len();
                let mut buf = [0.0f64; MAX_DIM];
                nu_unsqueeze_into(p_plus, &x[1..n], *mass, &mut buf[..n]);
                base.eval_unchecked(&buf[..n])
            }
            Self::XMinusDerivative { .. } => match self.expand_x_minus() {
                Ok(expanded) => expanded.eval_unchecked(x),
                Err(_) => Complex64::new(f64::NAN, f64::NAN),
            },
            Self::Sum { terms } => terms
                .iter()
                .map(|(c, s)| c * s.eval_unchecked(x))
                .fold(Complex64::new(0.0, 0.0), |a, b| a + b),
            Self::Product { factors } => factors
                .iter()
                .map(|s| s.eval_unchecked(x))
                .fold(Complex64::new(1.0, 0.0), |a, b| a * b),
        }
    }

    /// Exact single-axis derivative as a new spec, where a closed form
    /// exists.  `FlatAtZero` along its flat axis and `Pullback` have no
    /// closed form here; use [`TestFunctionSpec::deriv`] for those.
    pub fn differentiate(&self, axis: usize) -> Result<TestFunctionSpec> {
        if axis >= self.dim() {
            return Err(Error::InvalidAxis(format!(
                "axis {axis} out of range for dimension {}",
                self.dim()
            )));
        }
        match self {
            Self::Constant { dim, .. } => Ok(Self::constant(0.0, *dim)),
            Self::GaussHermite { center, width, poly } => {
                // d/dx_j [(x−c)^α e^{−q}] = α_j (x−c)^{α−e_j} e^{−q}
                //                           − (x−c)^{α+e_j} e^{−q} / σ².
                let mut terms = Vec::with_capacity(2);
                if poly[axis] > 0 {
                    let mut lower = poly.clone();
                    lower[axis] -= 1;
                    terms.push((
                        Complex64::new(poly[axis] as f64, 0.0),
                        Self::GaussHermite {
                            center: center.clone(),
                            width: *width,
                            poly: lower,
                        },
                    ));
                }
                let mut upper = poly.clone();
                upper[axis] += 1;
                terms.push((
                    Complex64::new(-1.0 / (width * width), 0.0),
                    Self::GaussHermite {
                        center: center.clone(),
                        width: *width,
                        poly: upper,
                    },
                ));
                Ok(Self::Sum { terms })
            }
            Self::FlatAtZero {
                base,
                flat_axis,
                flat_scale,
            } if axis != *flat_axis => Ok(Self::FlatAtZero {
                base: Box::new(base.differentiate(axis)?),
                flat_axis: *flat_axis,
                flat_scale: *flat_scale,
            }),
            Self::FlatAtZero { .. } => Err(Error::Unsupported(
                "no closed-form spec for the flat-axis derivative of FlatAtZero".into(),
            )),
            Self::Pullback { .. } => Err(Error::Unsupported(
                "no closed-form spec for derivatives of Pullback".into(),
            )),
            Self::XMinusDerivative { .. } => self.expand_x_minus()?.differentiate(axis),
            Self::Sum { terms } => Ok(Self::Sum {
                terms: terms
                    .iter()
                    .map(|(c, s)| s.differentiate(axis).map(|d| (*c, d)))
                    .collect::<Result<Vec<_>>>()?,
            }),
            Self::Product { factors } => {
                let mut terms = Vec::with_capacity(factors.len());
                for i in 0..factors.len() {
                    let mut fs = factors.clone();
                    fs[i] = fs[i].differentiate(axis)?;
                    terms.push((Complex64::new(1.0, 0.0), Self::Product { factors: fs }));
                }
                Ok(Self::Sum { terms })
            }
        }
    }

    /// Expand `XMinusDerivative` into the equivalent exact sum of
    /// Gauss-Hermite terms: (−∂_{x⁻})^k base.
    pub fn expand_x_minus(&self) -> Result<TestFunctionSpec> {
        match self {
            Self::XMinusDerivative { base, order } => {
                let axis = base.dim() - 1;
                let mut cur = base.as_ref().clone();
                for _ in 0..*order {
                    cur = cur.differentiate(axis)?;
                }
                if order % 2 == 1 {
                    cur = cur.scaled(-1.0);
                }
                Ok(cur)
            }
            _ => Ok(self.clone()),
        }
    }

    /// Partial derivative ∂^α at a point.  Exact for variants with closed
    /// forms (Gauss-Hermite and combinations, FlatAtZero up to |α| ≤ 2);
    /// 4th-order central differences with step [`FD_STEP`] otherwise.
    pub fn deriv(&self, alpha: &[u32], x: &[f64]) -> Result<Complex64> {
        if alpha.len() != self.dim() || x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: alpha.len().max(x.len()),
            });
        }
        let total: u32 = alpha.iter().sum();
        if total == 0 {
            return self.eval(x);
        }
        match self {
            Self::FlatAtZero {
                base,
                flat_axis,
                flat_scale,
            } if total <= 2 => {
                // Leibniz in the flat factor g(t) = e^{−s/t²}:
                // ∂^α (b·g) = Σ_j C(α_f, j) (∂^{α − j e_f} b) g^{(j)}.
                let t = x[*flat_axis];
                let s = *flat_scale;
                let kf = alpha[*flat_axis];
                if t == 0.0 {
                    // all derivatives of the extension vanish at t = 0
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let g0 = (-s / (t * t)).exp();
                let g1 = 2.0 * s / (t * t * t) * g0;
                let g2 = (-6.0 * s / t.powi(4) + 4.0 * s * s / t.powi(6)) * g0;
                let g = [g0, g1, g2];
                let binom = |n: u32, k: u32| -> f64 {
                    match (n, k) {
                        (_, 0) => 1.0,
                        (n, k) if n == k => 1.0,
                        (2, 1) => 2.0,
                        _ => 1.0,
                    }
                };
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..=kf {
                    let mut rest = alpha.to_vec();
                    rest[*flat_axis] -= j;
                    let b = base.deriv(&rest, x)?;
                    acc += binom(kf, j) * b * g[j as usize];
                }
                Ok(acc)
            }
            _ => match self.try_exact_deriv(alpha, x) {
                Some(v) => v,
                None => self.deriv_fd(alpha, x),
            },
        }
    }

    fn try_exact_deriv(&self, alpha: &[u32], x: &[f64]) -> Option<Result<Complex64>> {
        let mut cur = self.clone();
        for (axis, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                match cur.differentiate(axis) {
                    Ok(d) => cur = d,
                    Err(_) => return None,
                }
            }
        }
        Some(cur.eval(x))
    }

    /// 4th-order central finite differences applied axis by axis.
    fn deriv_fd(&self, alpha: &[u32], x: &[f64]) -> Result<Complex64> {
        let axis = match alpha.iter().position(|&k| k > 0) {
            Some(a) => a,
            None => return self.eval(x),
        };
        let mut rest = alpha.to_vec();
        rest[axis] -= 1;
        let h = FD_STEP;
        let at = |offset: f64| -> Result<Complex64> {
            let mut y = x.to_vec();
            y[axis] += offset;
            self.deriv(&rest, &y)
        };
        let v = (-at(2.0 * h)? + 8.0 * at(h)? - 8.0 * at(-h)? + at(-2.0 * h)?) / (12.0 * h);
        Ok(v)
    }

    /// Exact Euclidean Fourier transform `∫ f(x) e^{−i x·p} dx` where a
    /// closed form exists: centered Gauss-Hermite terms and sums thereof.
    /// A Gaussian of width σ maps to width 1/σ with factor (2π)^{d/2} σᵈ;
    /// monomial factors map through (i d/dp)^α.  Returns `None` otherwise
    /// and callers fall back to the numeric DFT.
    pub fn fourier_exact(&self) -> Option<TestFunctionSpec> {
        match self {
            Self::GaussHermite { center, width, poly } => {
                if center.iter().any(|&c| c != 0.0) {
                    return None;
                }
                let d = center.len();
                let s = *width;
                // Per axis: transform of x^a e^{−x²/(2σ²)} is
                // P_a(p) e^{−σ²p²/2} with P_0 = σ√(2π) and
                // P_{a+1} = i (P_a' − σ² p P_a).
                let axis_polys: Vec<Vec<Complex64>> = poly
                    .iter()
                    .map(|&a| {
                        let mut coeffs = vec![Complex64::new(s * (2.0 * std::f64::consts::PI).sqrt(), 0.0)];
                        for _ in 0..a {
                            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
                            for (k, &c) in coeffs.iter().enumerate() {
                                if k > 0 {
                                    next[k - 1] += Complex64::i() * (k as f64) * c;
                                }
                                next[k + 1] -= Complex64::i() * s * s * c;
                            }
                            coeffs = next;
                        }
                        coeffs
                    })
                    .collect();
                // Tensor the per-axis polynomials into Gauss-Hermite terms.
                let mut terms: Vec<(Complex64, Vec<u32>)> =
                    vec![(Complex64::new(1.0, 0.0), Vec::new())];
                for coeffs in &axis_polys {
                    let mut next = Vec::with_capacity(terms.len() * coeffs.len());
                    for (c, idx) in &terms {
                        for (k, ck) in coeffs.iter().enumerate() {
                            if ck.norm_sqr() == 0.0 {
                                continue;
                            }
                            let mut idx2 = idx.clone();
                            idx2.push(k as u32);
                            next.push((c * ck, idx2));
                        }
                    }
                    terms = next;
                }
                let out = Self::Sum {
                    terms: terms
                        .into_iter()
                        .map(|(c, idx)| {
                            (
                                c,
                                Self::GaussHermite {
                                    center: vec![0.0; d],
                                    width: 1.0 / s,
                                    poly: idx,
                                },
                            )
                        })
                        .collect(),
                };
                Some(out)
            }
            Self::Sum { terms } => {
                let mut out = Vec::with_capacity(terms.len());
                for (c, s) in terms {
                    match s.fourier_exact()? {
                        Self::Sum { terms: inner } => {
                            out.extend(inner.into_iter().map(|(ci, si)| (c * ci, si)))
                        }
                        other => out.push((*c, other)),
                    }
                }
                Some(Self::Sum { terms: out })
            }
            Self::XMinusDerivative { .. } => self.expand_x_minus().ok()?.fourier_exact(),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gauss_hermite_eval() {
        let g = Spec::gauss_hermite(vec![0.0], 1.0 / 2.0f64.sqrt(), vec![0]).unwrap();
        assert_eq!(g.eval(&[0.0]).unwrap(), c(1.0, 0.0));
        // e^{−x²} at x=1
        assert_relative_eq!(g.eval(&[1.0]).unwrap().re, (-1.0f64).exp(), max_relative = 1e-15);
        assert!(g.eval(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn constant_eval() {
        let one = Spec::constant(1.0, 3);
        assert_eq!(one.eval(&[4.0, -1.0, 0.3]).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn flat_at_zero_vanishes_at_origin() {
        let base = Spec::gaussian(1, 1.0).unwrap();
        let f = Spec::flat_at_zero(base, 0, 1.0).unwrap();
        assert_eq!(f.eval(&[0.0]).unwrap(), c(0.0, 0.0));
        assert!(f.eval(&[0.5]).unwrap().re > 0.0);
        // derivative at t = 0 is exactly zero
        assert_eq!(f.deriv(&[1], &[0.0]).unwrap(), c(0.0, 0.0));
        assert_eq!(f.deriv(&[2], &[0.0]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn pullback_support() {
        let base = Spec::gaussian(1, 1.0).unwrap();
        let f = Spec::pullback(base, SqueezeSign::Plus, 1.0).unwrap();
        assert_eq!(f.eval(&[-1.0]).unwrap(), c(0.0, 0.0));
        assert_eq!(f.eval(&[0.0]).unwrap(), c(0.0, 0.0));
        assert!(f.eval(&[1.0]).unwrap().re > 0.0);
    }

    #[test]
    fn gaussian_derivatives_exact() {
        // f = e^{−x²}: f'(0) = 0, f''(0) = −2.
        let g = Spec::gauss_hermite(vec![0.0], 1.0 / 2.0f64.sqrt(), vec![0]).unwrap();
        assert_eq!(g.deriv(&[1], &[0.0]).unwrap(), c(0.0, 0.0));
        assert_relative_eq!(g.deriv(&[2], &[0.0]).unwrap().re, -2.0, max_relative = 1e-14);
        // cross-check against the finite-difference path at a generic point
        let exact = g.deriv(&[2], &[0.7]).unwrap().re;
        let fd = g.deriv_fd(&[2], &[0.7]).unwrap().re;
        assert_relative_eq!(exact, fd, max_relative = 1e-9);
    }

    #[test]
    fn pullback_derivative_is_finite_difference() {
        let base = Spec::gaussian(2, 1.0).unwrap();
        let f = Spec::pullback(base, SqueezeSign::Plus, 1.0).unwrap();
        // smooth point well inside the half-space
        let v = f.deriv(&[1, 0], &[0.8, 0.3]).unwrap();
        assert!(v.re.is_finite());
        // compare with a crude central difference
        let h = 1e-5;
        let crude = (f.eval(&[0.8 + h, 0.3]).unwrap() - f.eval(&[0.8 - h, 0.3]).unwrap())
            / (2.0 * h);
        assert_relative_eq!(v.re, crude.re, max_relative = 1e-4);
    }

    #[test]
    fn fourier_gaussian() {
        // e^{−x²/2} → √(2π) e^{−p²/2}
        let g = Spec::gaussian(1, 1.0).unwrap();
        let hat = g.fourier_exact().unwrap();
        let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
        for &p in &[0.0f64, 0.5, 1.0, 2.3] {
            let expect = sqrt_2pi * (-p * p / 2.0).exp();
            assert_relative_eq!(hat.eval(&[p]).unwrap().re, expect, max_relative = 1e-14);
            assert_relative_eq!(hat.eval(&[p]).unwrap().im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn fourier_hermite_example() {
        // x e^{−x²} → −i (√π/2) p e^{−p²/4}
        let g = Spec::gauss_hermite(vec![0.0], 1.0 / 2.0f64.sqrt(), vec![1]).unwrap();
        let hat = g.fourier_exact().unwrap();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        for &p in &[0.0, 0.7, -1.9, 3.0] {
            let expect = -Complex64::i() * (sqrt_pi / 2.0) * p * (-p * p / 4.0).exp();
            let got = hat.eval(&[p]).unwrap();
            assert_relative_eq!(got.re, expect.re, epsilon = 1e-15);
            assert_relative_eq!(got.im, expect.im, epsilon = 1e-14, max_relative = 1e-14);
        }
    }

    #[test]
    fn fourier_unavailable_for_flat_and_shifted() {
        let base = Spec::gaussian(1, 1.0).unwrap();
        assert!(Spec::flat_at_zero(base, 0, 1.0)
            .unwrap()
            .fourier_exact()
            .is_none());
        let shifted = Spec::gauss_hermite(vec![0.5], 1.0, vec![0]).unwrap();
        assert!(shifted.fourier_exact().is_none());
    }

    #[test]
    fn x_minus_derivative_expansion() {
        // (−∂_x)(e^{−x²}) = 2x e^{−x²}
        let base = Spec::gauss_hermite(vec![0.0], 1.0 / 2.0f64.sqrt(), vec![0]).unwrap();
        let d = Spec::x_minus_derivative(base, 1).unwrap();
        for &x in &[0.0f64, 0.4, -1.2] {
            let expect = 2.0 * x * (-x * x).exp();
            assert_relative_eq!(d.eval(&[x]).unwrap().re, expect, epsilon = 1e-15, max_relative = 1e-14);
        }
    }

    #[test]
    fn json_round_trip() {
        let base = Spec::gaussian(2, 1.3).unwrap();
        let spec = Spec::pullback(base, SqueezeSign::Minus, 0.5).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"variant\":\"pullback\""));
        let back: Spec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }
}
