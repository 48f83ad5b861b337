//! On-shell kinematics: energies, the light-cone coordinate map and the
//! squeezing maps between momentum parametrizations.
//!
//! Conventions: a Minkowski event is `x = (x⁰, x¹, …, xⁿ)`; light-cone
//! coordinates are `x̃ = (x⁺, x⊥, x⁻)` with `x⁺ = (x⁰+xⁿ)/√2`,
//! `x⁻ = (x⁰−xⁿ)/√2` and `x⊥ = (x¹, …, xⁿ⁻¹)` unchanged.  Spatial momenta
//! are `𝐩 = (p¹, …, pⁿ)` on the Minkowski side and `𝐩̃ = (p⁺, p⊥)` on the
//! light-cone side.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Mass and spatial dimension.  The mass must be strictly positive: the
/// massless measure 1/(2ω) is singular at 𝐩 = 0 and is rejected everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub m: f64,
    pub n: usize,
}

impl ModelParams {
    pub fn new(m: f64, n: usize) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidParams(format!(
                "mass must be finite and > 0, got {m}"
            )));
        }
        if n < 1 {
            return Err(Error::InvalidParams(format!(
                "spatial dimension must be >= 1, got {n}"
            )));
        }
        Ok(Self { m, n })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.m, self.n).map(|_| ())
    }
}

/// Spatial Minkowski momentum 𝐩 ∈ ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct MinkMomentum(pub Vec<f64>);

/// Spatial light-cone momentum 𝐩̃ = (p⁺, p⊥) with p⁺ ≠ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LCMomentum {
    pub p_plus: f64,
    pub p_perp: Vec<f64>,
}

impl LCMomentum {
    pub fn new(p_plus: f64, p_perp: Vec<f64>) -> Result<Self> {
        if p_plus == 0.0 {
            return Err(Error::PPlusZero);
        }
        Ok(Self { p_plus, p_perp })
    }

    /// Flat coordinates (p⁺, p⊥₁, …, p⊥ₙ₋₁).
    pub fn coords(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(1 + self.p_perp.len());
        c.push(self.p_plus);
        c.extend_from_slice(&self.p_perp);
        c
    }
}

/// Coordinate frame tag for full (1+n)-vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Minkowski,
    Lightcone,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::Minkowski => "minkowski",
            Frame::Lightcone => "lightcone",
        }
    }
}

/// A full (1+n)-vector tagged with the frame it lives in.
/// Minkowski ordering is (x⁰, x¹, …, xⁿ); light-cone ordering is
/// (x⁺, x⊥, x⁻).
#[derive(Debug, Clone, PartialEq)]
pub struct FullVector {
    pub frame: Frame,
    pub coords: Vec<f64>,
}

impl FullVector {
    pub fn minkowski(coords: Vec<f64>) -> Self {
        Self {
            frame: Frame::Minkowski,
            coords,
        }
    }

    pub fn lightcone(coords: Vec<f64>) -> Self {
        Self {
            frame: Frame::Lightcone,
            coords,
        }
    }
}

/// Branch selector for the mass-shell sheets and the squeezing maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SqueezeSign {
    Plus,
    Minus,
}

impl SqueezeSign {
    pub fn signum(self) -> f64 {
        match self {
            SqueezeSign::Plus => 1.0,
            SqueezeSign::Minus => -1.0,
        }
    }

    pub const BOTH: [SqueezeSign; 2] = [SqueezeSign::Plus, SqueezeSign::Minus];
}

#[inline]
fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// On-shell energy ω(𝐩) = √(𝐩² + m²) ≥ m.
#[inline]
pub fn omega(p: &MinkMomentum, params: &ModelParams) -> f64 {
    omega_of(&p.0, params.m)
}

#[inline]
pub fn omega_of(p: &[f64], m: f64) -> f64 {
    (sq_norm(p) + m * m).sqrt()
}

/// Light-cone on-shell energy ω̃(𝐩̃) = (p⊥² + m²)/(2p⁺); same sign as p⁺.
#[inline]
pub fn lc_omega(pt: &LCMomentum, params: &ModelParams) -> Result<f64> {
    if pt.p_plus == 0.0 {
        return Err(Error::PPlusZero);
    }
    Ok(lc_omega_of(pt.p_plus, &pt.p_perp, params.m))
}

#[inline]
pub fn lc_omega_of(p_plus: f64, p_perp: &[f64], m: f64) -> f64 {
    (sq_norm(p_perp) + m * m) / (2.0 * p_plus)
}

/// κ on raw coordinates: `src` Minkowski (x⁰, 𝐱) to `dst` light-cone
/// (x⁺, x⊥, x⁻).  Both slices have length 1+n.
#[inline]
pub fn kappa_coords(src: &[f64], dst: &mut [f64]) {
    let d = src.len();
    debug_assert!(d >= 2 && dst.len() == d);
    dst[0] = (src[0] + src[d - 1]) / SQRT_2;
    dst[d - 1] = (src[0] - src[d - 1]) / SQRT_2;
    dst[1..d - 1].copy_from_slice(&src[1..d - 1]);
}

/// κ⁻¹ on raw coordinates: light-cone (x⁺, x⊥, x⁻) to Minkowski (x⁰, 𝐱).
#[inline]
pub fn kappa_inv_coords(src: &[f64], dst: &mut [f64]) {
    let d = src.len();
    debug_assert!(d >= 2 && dst.len() == d);
    dst[0] = (src[0] + src[d - 1]) / SQRT_2;
    dst[d - 1] = (src[0] - src[d - 1]) / SQRT_2;
    dst[1..d - 1].copy_from_slice(&src[1..d - 1]);
}

/// Coordinate map to the light-cone frame.  Preserves the bilinear form:
/// ⟨x, y⟩_M = [κx, κy]_L.
pub fn kappa(v: &FullVector) -> Result<FullVector> {
    if v.frame != Frame::Minkowski {
        return Err(Error::FrameMismatch {
            expected: "minkowski",
            got: v.frame.name(),
        });
    }
    let mut out = vec![0.0; v.coords.len()];
    kappa_coords(&v.coords, &mut out);
    Ok(FullVector::lightcone(out))
}

/// Inverse coordinate map back to the Minkowski frame.
pub fn kappa_inv(v: &FullVector) -> Result<FullVector> {
    if v.frame != Frame::Lightcone {
        return Err(Error::FrameMismatch {
            expected: "lightcone",
            got: v.frame.name(),
        });
    }
    let mut out = vec![0.0; v.coords.len()];
    kappa_inv_coords(&v.coords, &mut out);
    Ok(FullVector::minkowski(out))
}

/// Minkowski bilinear form ⟨x, y⟩ = x⁰y⁰ − 𝐱·𝐲.
pub fn minkowski_bilinear(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let spatial: f64 = x[1..].iter().zip(&y[1..]).map(|(a, b)| a * b).sum();
    x[0] * y[0] - spatial
}

/// Light-cone bilinear form [x̃, ỹ] = x⁺y⁻ + x⁻y⁺ − x⊥·y⊥.
pub fn lc_bilinear(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let d = x.len();
    let perp: f64 = x[1..d - 1]
        .iter()
        .zip(&y[1..d - 1])
        .map(|(a, b)| a * b)
        .sum();
    x[0] * y[d - 1] + x[d - 1] * y[0] - perp
}

/// Graph parametrization Ω±(𝐩) = (±ω(𝐩), 𝐩) of the mass-shell sheets.
pub fn omega_lift(sign: SqueezeSign, p: &[f64], m: f64) -> Vec<f64> {
    let mut full = Vec::with_capacity(p.len() + 1);
    full.push(sign.signum() * omega_of(p, m));
    full.extend_from_slice(p);
    full
}

/// Write Ω±(𝐩) into `dst` (length 1+n) without allocating.
#[inline]
pub fn omega_lift_into(sign: SqueezeSign, p: &[f64], m: f64, dst: &mut [f64]) {
    debug_assert_eq!(dst.len(), p.len() + 1);
    dst[0] = sign.signum() * omega_of(p, m);
    dst[1..].copy_from_slice(p);
}

/// Light-cone graph parametrization Ω̃(𝐩̃) = (p⁺, p⊥, ω̃(𝐩̃)).
pub fn lc_lift(pt: &LCMomentum, params: &ModelParams) -> Result<Vec<f64>> {
    let w = lc_omega(pt, params)?;
    let mut full = pt.coords();
    full.push(w);
    Ok(full)
}

/// Write Ω̃ at raw coordinates (p⁺, p⊥) into `dst` (length 1+n).
#[inline]
pub fn lc_lift_into(p_plus: f64, p_perp: &[f64], m: f64, dst: &mut [f64]) {
    debug_assert_eq!(dst.len(), p_perp.len() + 2);
    dst[0] = p_plus;
    dst[1..1 + p_perp.len()].copy_from_slice(p_perp);
    dst[p_perp.len() + 1] = lc_omega_of(p_plus, p_perp, m);
}

/// The unsqueezing map μ± = ν±⁻¹: 𝐩 ↦ ((pⁿ ± ω(𝐩))/√2, p¹, …, pⁿ⁻¹).
///
/// The p⁺ component is evaluated in the cancellation-free form
/// (p⊥² + m²)/(√2(ω ∓ pⁿ)) whenever pⁿ ± ω would lose digits, so the
/// round trip ν∘μ stays exact to near machine precision for all 𝐩.
pub fn mu_squeeze(sign: SqueezeSign, p: &MinkMomentum, params: &ModelParams) -> LCMomentum {
    let (p_plus, p_perp) = mu_squeeze_raw(sign, &p.0, params.m);
    LCMomentum { p_plus, p_perp }
}

#[inline]
pub fn mu_plus_of(sign: SqueezeSign, p: &[f64], m: f64) -> f64 {
    let n = p.len();
    let pn = p[n - 1];
    let w = omega_of(p, m);
    let perp_m2 = sq_norm(&p[..n - 1]) + m * m;
    match sign {
        SqueezeSign::Plus => {
            if pn >= 0.0 {
                (pn + w) / SQRT_2
            } else {
                perp_m2 / (SQRT_2 * (w - pn))
            }
        }
        SqueezeSign::Minus => {
            if pn <= 0.0 {
                (pn - w) / SQRT_2
            } else {
                -perp_m2 / (SQRT_2 * (w + pn))
            }
        }
    }
}

#[inline]
pub fn mu_squeeze_raw(sign: SqueezeSign, p: &[f64], m: f64) -> (f64, Vec<f64>) {
    let n = p.len();
    (mu_plus_of(sign, p, m), p[..n - 1].to_vec())
}

/// The squeezing map ν±: {±p⁺ > 0} → ℝⁿ,
/// 𝐩̃ ↦ (p⊥, (p⁺ − ω̃(𝐩̃))/√2).
///
/// Rejects p⁺ = 0 and p⁺ of the wrong sign.
pub fn nu_unsqueeze(
    sign: SqueezeSign,
    pt: &LCMomentum,
    params: &ModelParams,
) -> Result<MinkMomentum> {
    if pt.p_plus == 0.0 {
        return Err(Error::PPlusZero);
    }
    if pt.p_plus.signum() != sign.signum() {
        return Err(Error::PPlusSignMismatch {
            expected: sign.signum() as i8,
            got: pt.p_plus,
        });
    }
    let mut p = vec![0.0; pt.p_perp.len() + 1];
    nu_unsqueeze_into(pt.p_plus, &pt.p_perp, params.m, &mut p);
    Ok(MinkMomentum(p))
}

/// ν without the sign checks, writing 𝐩 into `dst` (length n).  The caller
/// guarantees p⁺ ≠ 0; the branch is implied by the sign of p⁺.
#[inline]
pub fn nu_unsqueeze_into(p_plus: f64, p_perp: &[f64], m: f64, dst: &mut [f64]) {
    let n = dst.len();
    debug_assert_eq!(n, p_perp.len() + 1);
    dst[..n - 1].copy_from_slice(p_perp);
    dst[n - 1] = (p_plus - lc_omega_of(p_plus, p_perp, m)) / SQRT_2;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(m: f64, n: usize) -> ModelParams {
        ModelParams::new(m, n).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(0.0, 1).is_err());
        assert!(ModelParams::new(-1.0, 1).is_err());
        assert!(ModelParams::new(f64::NAN, 1).is_err());
        assert!(ModelParams::new(1.0, 0).is_err());
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega(&MinkMomentum(vec![0.0]), &params(1.0, 1)), 1.0);
        assert_relative_eq!(
            omega(&MinkMomentum(vec![1.0]), &params(1.0, 1)),
            2.0f64.sqrt(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            omega(&MinkMomentum(vec![3.0, 4.0]), &params(0.5, 2)),
            25.25f64.sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn lc_omega_examples() {
        let pt = LCMomentum::new(1.0 / SQRT_2, vec![]).unwrap();
        assert_relative_eq!(
            lc_omega(&pt, &params(1.0, 1)).unwrap(),
            1.0 / SQRT_2,
            max_relative = 1e-15
        );
        let pt = LCMomentum::new(-1.0, vec![0.0, 0.0]).unwrap();
        assert_eq!(lc_omega(&pt, &params(1.0, 3)).unwrap(), -0.5);
        assert!(LCMomentum::new(0.0, vec![]).is_err());
    }

    #[test]
    fn lc_lift_is_on_shell() {
        // 2 p⁺p⁻ − p⊥² = m² for the lifted point.
        let pr = params(1.3, 3);
        let pt = LCMomentum::new(0.37, vec![-0.8, 2.1]).unwrap();
        let full = lc_lift(&pt, &pr).unwrap();
        let q = lc_bilinear(&full, &full);
        assert_relative_eq!(q, pr.m * pr.m, max_relative = 1e-14);
    }

    #[test]
    fn kappa_example_and_inverse() {
        let v = FullVector::minkowski(vec![1.0, 0.0, 0.0, 1.0]);
        let lc = kappa(&v).unwrap();
        assert_relative_eq!(lc.coords[0], SQRT_2, max_relative = 1e-15);
        assert_eq!(lc.coords[1], 0.0);
        assert_eq!(lc.coords[2], 0.0);
        assert_eq!(lc.coords[3], 0.0);
        let back = kappa_inv(&lc).unwrap();
        for (a, b) in back.coords.iter().zip(&v.coords) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
        assert!(kappa(&lc).is_err());
        assert!(kappa_inv(&v).is_err());
    }

    #[test]
    fn kappa_preserves_bilinear_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let d = rng.gen_range(2..=4usize);
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let mut xt = vec![0.0; d];
            let mut yt = vec![0.0; d];
            kappa_coords(&x, &mut xt);
            kappa_coords(&y, &mut yt);
            assert_relative_eq!(
                minkowski_bilinear(&x, &y),
                lc_bilinear(&xt, &yt),
                epsilon = 1e-13,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn mu_examples() {
        let pt = mu_squeeze(
            SqueezeSign::Plus,
            &MinkMomentum(vec![0.0]),
            &params(1.0, 1),
        );
        assert_relative_eq!(pt.p_plus, 1.0 / SQRT_2, max_relative = 1e-15);
        let pt = mu_squeeze(
            SqueezeSign::Minus,
            &MinkMomentum(vec![0.0]),
            &params(1.0, 1),
        );
        assert_relative_eq!(pt.p_plus, -1.0 / SQRT_2, max_relative = 1e-15);
        let pt = mu_squeeze(
            SqueezeSign::Plus,
            &MinkMomentum(vec![0.0, 0.0, 0.0]),
            &params(2.0, 3),
        );
        assert_relative_eq!(pt.p_plus, SQRT_2, max_relative = 1e-15);
        assert_eq!(pt.p_perp, vec![0.0, 0.0]);
    }

    #[test]
    fn mu_sign_is_constant() {
        // |pⁿ| < ω forces sign(p⁺) = branch sign everywhere.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.gen_range(1..=3usize);
            let m = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let pr = params(m, n);
            let plus = mu_squeeze(SqueezeSign::Plus, &MinkMomentum(p.clone()), &pr);
            let minus = mu_squeeze(SqueezeSign::Minus, &MinkMomentum(p), &pr);
            assert!(plus.p_plus > 0.0);
            assert!(minus.p_plus < 0.0);
        }
    }

    #[test]
    fn nu_example_and_errors() {
        let pr = params(1.0, 1);
        let pt = LCMomentum::new(1.0 / SQRT_2, vec![]).unwrap();
        let p = nu_unsqueeze(SqueezeSign::Plus, &pt, &pr).unwrap();
        assert_relative_eq!(p.0[0], 0.0, epsilon = 1e-15);
        assert!(nu_unsqueeze(SqueezeSign::Minus, &pt, &pr).is_err());
    }

    #[test]
    fn nu_mu_inverse_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10_000 {
            let n = rng.gen_range(1..=3usize);
            let m = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
            let pr = params(m, n);
            let sign = if rng.gen::<bool>() {
                SqueezeSign::Plus
            } else {
                SqueezeSign::Minus
            };

            // ν∘μ = id on ℝⁿ
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let pt = mu_squeeze(sign, &MinkMomentum(p.clone()), &pr);
            let back = nu_unsqueeze(sign, &pt, &pr).unwrap();
            for (a, b) in back.0.iter().zip(&p) {
                assert!((a - b).abs() <= 1e-12, "nu(mu(p)) drifted: {a} vs {b}");
            }

            // μ∘ν = id on {±p⁺ > 0}
            let p_plus = sign.signum() * 10f64.powf(rng.gen_range(-2.0..1.0));
            let p_perp: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let pt = LCMomentum::new(p_plus, p_perp).unwrap();
            let p = nu_unsqueeze(sign, &pt, &pr).unwrap();
            let back = mu_squeeze(sign, &p, &pr);
            assert!((back.p_plus - pt.p_plus).abs() <= 1e-12 * pt.p_plus.abs().max(1.0));
        }
    }

    #[test]
    fn composition_identity_on_shell() {
        // Last component of κ(Ω±(𝐩)) equals ω̃(μ±(𝐩)).
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..500 {
            let n = rng.gen_range(1..=3usize);
            let m = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
            let pr = params(m, n);
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-8.0..8.0)).collect();
            for sign in SqueezeSign::BOTH {
                let full = omega_lift(sign, &p, m);
                let mut lc = vec![0.0; n + 1];
                kappa_coords(&full, &mut lc);
                let pt = mu_squeeze(sign, &MinkMomentum(p.clone()), &pr);
                let w = lc_omega(&pt, &pr).unwrap();
                assert_relative_eq!(lc[n], w, epsilon = 1e-12, max_relative = 1e-12);
                assert_relative_eq!(lc[0], pt.p_plus, epsilon = 1e-12, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn nu_diverges_monotonically_near_zero() {
        // pⁿ(ν₊) → −∞ monotonically as p⁺ → 0⁺.
        let pr = params(1.0, 1);
        let mut last = f64::INFINITY;
        for j in 0..12 {
            let p_plus = 10f64.powi(-j);
            let pt = LCMomentum::new(p_plus, vec![]).unwrap();
            let p = nu_unsqueeze(SqueezeSign::Plus, &pt, &pr).unwrap();
            assert!(p.0[0] < last);
            last = p.0[0];
        }
        assert!(last < -1e6);
    }
}
