//! The commutator-function example computed by independent routes.
//!
//! The fundamental solution with u₀ = 0, ∂₀u|₀ = δ has the characteristic
//! datum ũ̂₀ = i/(2p⁺) — independent of the mass and of p⊥.  Its pairing
//! with a test function f can be computed three ways:
//!
//! 1. momentum-space quadrature of
//!    (i/(2π)ⁿ) ∫_{p⁺>0} dⁿ𝐩̃/(2p⁺) (f̂(−𝐩̃) − f̂(𝐩̃)),
//! 2. the closed position-space form (1/4)∫ dx⁻ ε(x⁻) f(0⊥, x⁻),
//! 3. the generic pipeline: solve the characteristic problem for the datum,
//!    take the x⁺ = 0 profile, and pair it discretely with f̂.
//!
//! Route agreement across these is the strongest end-to-end check the
//! normalization conventions get.

use crate::error::{Error, Result};
use crate::grids_io::MomentumGrid;
use crate::kinematics::ModelParams;
use crate::massshell::{CharacteristicData, Density};
use crate::quadrature::{integrate_box, integrate_box_estimated, QuadOpts};
use crate::testfn::TestFunctionSpec;
use crate::transform::partial_lc_closed_form;
use num_complex::Complex64;
use std::f64::consts::PI;

/// The closed-form characteristic datum i/(2p⁺) on the given grid.
/// Independent of the mass.
pub fn pj_characteristic_data(
    params: &ModelParams,
    lc_grid: &MomentumGrid,
) -> Result<CharacteristicData> {
    let u = Density::InvPPlus {
        value: Complex64::new(0.0, 0.5),
    };
    CharacteristicData::from_density(u, lc_grid.clone(), *params)
}

/// The default probe −2x⁻ e^{−(x⁻)²} (times e^{−|x⊥|²} for n > 1), whose
/// pairing value is −1/2 for every n.
pub fn pj_default_probe(n: usize) -> Result<TestFunctionSpec> {
    let mut poly = vec![0u32; n];
    poly[n - 1] = 1;
    let gh = TestFunctionSpec::gauss_hermite(vec![0.0; n], 1.0 / 2.0f64.sqrt(), poly)?;
    Ok(gh.scaled(-2.0))
}

/// Momentum-space route:
/// (i/(2π)ⁿ) ∫_{p⁺>0} dⁿ𝐩̃/(2p⁺) (f̂(−𝐩̃) − f̂(𝐩̃)).
///
/// The odd part of f̂ vanishes at p⁺ = 0 for the supported families, so the
/// integrand extends smoothly; a non-shrinking error estimate is reported
/// as divergence.
pub fn pj_pairing_quadrature(
    f: &TestFunctionSpec,
    params: &ModelParams,
    opts: &QuadOpts,
) -> Result<Complex64> {
    let n = f.dim();
    if n != params.n {
        return Err(Error::DimensionMismatch { expected: params.n, got: n });
    }
    let fhat = partial_lc_closed_form(f).ok_or_else(|| {
        Error::Unsupported("probe has no closed-form transform; sample it on a grid first".into())
    })?;
    let extent = opts.extent.unwrap_or_else(|| crate::quadrature::default_extent(2.0, params.m));
    let mut ranges = vec![(-extent, extent); n];
    ranges[0] = (0.0, extent);
    let integrand = |pt: &[f64]| {
        let p_plus = pt[0];
        let p_perp = &pt[1..];
        let mirrored: Vec<f64> = p_perp.iter().map(|x| -x).collect();
        let plus = fhat.eval(p_plus, p_perp).unwrap_or(Complex64::new(f64::NAN, 0.0));
        let minus = fhat.eval(-p_plus, &mirrored).unwrap_or(Complex64::new(f64::NAN, 0.0));
        (minus - plus) / (2.0 * p_plus)
    };
    let r = integrate_box_estimated(&integrand, &ranges, opts.level)?;
    let value = Complex64::i() / (2.0 * PI).powi(n as i32) * r.value;
    if r.error_estimate > 1e-3 * (r.value.norm() + 1e-12) {
        return Err(Error::NonFinite(format!(
            "pairing quadrature did not converge: estimate {} for value {}",
            r.error_estimate,
            r.value.norm()
        )));
    }
    Ok(value)
}

/// Position-space route: (1/4) ∫ dx⁻ ε(x⁻) f(0⊥, x⁻).
pub fn pj_pairing_closed_form(
    f: &TestFunctionSpec,
    params: &ModelParams,
    opts: &QuadOpts,
) -> Result<Complex64> {
    let n = f.dim();
    if n != params.n {
        return Err(Error::DimensionMismatch { expected: params.n, got: n });
    }
    let extent = opts.extent.unwrap_or_else(|| crate::quadrature::default_extent(2.0, params.m));
    // ε(x⁻)-weighted line integral along x⁻ at x⊥ = 0, folded to (0, L).
    let integrand = |t: &[f64]| {
        let mut xp = vec![0.0; n];
        xp[n - 1] = t[0];
        let mut xm = vec![0.0; n];
        xm[n - 1] = -t[0];
        f.eval_unchecked(&xp) - f.eval_unchecked(&xm)
    };
    let v = integrate_box(&integrand, &[(0.0, extent)], opts.level)?;
    Ok(v / 4.0)
}

/// Generic-pipeline route: solve the characteristic problem for the datum
/// on `lc_grid`, take the x⁺ = 0 profile, and pair it with f̂ by the
/// symmetrized midpoint rule the half-step grid provides:
/// (1/(2π)ⁿ) Σ_{p⁺>0} stepⁿ [ũ(𝐩̃) f̂(−𝐩̃) + ũ(−𝐩̃) f̂(𝐩̃)].
pub fn pj_pipeline_route(f: &TestFunctionSpec, lc_grid: &MomentumGrid) -> Result<Complex64> {
    let params = lc_grid.params;
    if f.dim() != params.n {
        return Err(Error::DimensionMismatch { expected: params.n, got: f.dim() });
    }
    let fhat = partial_lc_closed_form(f).ok_or_else(|| {
        Error::Unsupported("probe has no closed-form transform".into())
    })?;
    let data = pj_characteristic_data(&params, lc_grid)?;
    // grid representation end to end
    let data = CharacteristicData::from_grid(data.grid_values()?)?;
    let msd = crate::evolution::solve_characteristic(&data)?;
    let profile = crate::evolution::tame_profile(&msd, 0.0)?.profile;

    let grid = profile.grid();
    let n = grid.dim();
    let cell: f64 = grid.axes.iter().map(|a| a.step).product();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut coords = vec![0.0; n];
    let mut mirrored = vec![0.0; n];
    for (flat, u) in profile.values().iter().enumerate() {
        grid.coords_into(flat, &mut coords);
        if coords[0] <= 0.0 {
            continue;
        }
        for (m, c) in mirrored.iter_mut().zip(&coords) {
            *m = -c;
        }
        let mirror_flat = match mirror_index(grid, &mirrored) {
            Some(idx) => idx,
            None => continue, // mirror outside the box: tail already decayed
        };
        let u_m = profile.values()[mirror_flat];
        let f_minus = fhat.eval(mirrored[0], &mirrored[1..])?;
        let f_plus = fhat.eval(coords[0], &coords[1..])?;
        acc += u * f_minus + u_m * f_plus;
    }
    Ok(acc * cell / (2.0 * PI).powi(n as i32))
}

/// Flat index of the node at exactly `-coords`, when it exists.
fn mirror_index(grid: &MomentumGrid, coords: &[f64]) -> Option<usize> {
    let mut flat = 0usize;
    for (ax, &c) in grid.axes.iter().zip(coords) {
        let j = (c - ax.min) / ax.step;
        let idx = j.round();
        if (j - idx).abs() > 1e-9 || idx < 0.0 || idx as usize >= ax.count {
            return None;
        }
        flat = flat * ax.count + idx as usize;
    }
    Some(flat)
}
