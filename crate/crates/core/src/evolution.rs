//! Time evolution of Cauchy data, the rescaled (tame) profile family in
//! light-cone time, the characteristic solve/restriction pair, and the
//! finite-difference residual check of the field equation.
//!
//! In the Minkowski picture a solution with densities (a₀, a₁) has time
//! slices whose spatial transforms are
//!
//! ```text
//! û(x⁰)  = (a₀ e^{−iωx⁰} + a₁ e^{iωx⁰}) / (4πω)
//! ∂̂₀u(x⁰) = (a₀ e^{−iωx⁰} − a₁ e^{iωx⁰}) / (4πi)
//! ```
//!
//! On the light-cone side the x⁺-family is ũ(x⁺) = e^{−iω̃x⁺} b/(4π|p⁺|);
//! its value at x⁺ = 0 is exactly the characteristic datum, and
//! b = 4π|p⁺|·ũ̂₀ solves the characteristic problem uniquely.

use crate::error::{Error, Result};
use crate::grids_io::{GridFunction, GridKind, MomentumGrid};
use crate::kinematics::{lc_omega_of, omega_of, Frame, ModelParams};
use crate::massshell::{CharacteristicData, MassShellDensityLC, MassShellDensityM};
use crate::transform::{dft, TransformConvention};
use num_complex::Complex64;
use std::f64::consts::PI;

/// One time slice of a solution, carried by the spatial Fourier transform
/// of the slice on the matching momentum grid.
#[derive(Debug, Clone)]
pub struct EvolvedProfile {
    pub time: f64,
    pub frame: Frame,
    pub profile: GridFunction,
}

/// û(x⁰) on the density's grid.
pub fn evolve_profile(msd: &MassShellDensityM, x0: f64) -> Result<EvolvedProfile> {
    profile_m(msd, x0, false)
}

/// ∂̂₀u(x⁰) on the density's grid.
pub fn d0_profile(msd: &MassShellDensityM, x0: f64) -> Result<EvolvedProfile> {
    profile_m(msd, x0, true)
}

fn profile_m(msd: &MassShellDensityM, x0: f64, derivative: bool) -> Result<EvolvedProfile> {
    let grid = &msd.grid;
    let m = msd.params.m;
    let n = grid.dim();
    let mut values = Vec::with_capacity(grid.len());
    let mut coords = vec![0.0; n];
    for flat in 0..grid.len() {
        grid.coords_into(flat, &mut coords);
        let w = omega_of(&coords, m);
        let a0 = msd.a0.eval(&coords)?;
        let a1 = msd.a1.eval(&coords)?;
        let phase_neg = Complex64::from_polar(1.0, -w * x0);
        let phase_pos = Complex64::from_polar(1.0, w * x0);
        let v = if derivative {
            (a0 * phase_neg - a1 * phase_pos) / (4.0 * PI * Complex64::i())
        } else {
            (a0 * phase_neg + a1 * phase_pos) / (4.0 * PI * w)
        };
        values.push(v);
    }
    Ok(EvolvedProfile {
        time: x0,
        frame: Frame::Minkowski,
        profile: GridFunction::new(grid.clone(), values)?,
    })
}

/// The light-cone family ũ(x⁺) = e^{−iω̃x⁺} b/(4π|p⁺|) on the density's
/// grid.  At x⁺ = 0 this is the characteristic datum itself.
pub fn tame_profile(msd: &MassShellDensityLC, xplus: f64) -> Result<EvolvedProfile> {
    let grid = &msd.grid;
    let m = msd.params.m;
    let n = grid.dim();
    let scaled = msd.scaled_values()?;
    let mut values = Vec::with_capacity(scaled.len());
    let mut coords = vec![0.0; n];
    for (flat, u) in scaled.iter().enumerate() {
        grid.coords_into(flat, &mut coords);
        let w = lc_omega_of(coords[0], &coords[1..], m);
        values.push(u * Complex64::from_polar(1.0, -w * xplus));
    }
    Ok(EvolvedProfile {
        time: xplus,
        frame: Frame::Lightcone,
        profile: GridFunction::new(grid.clone(), values)?,
    })
}

/// Tame restriction at the density level: ũ̂₀ = b/(4π|p⁺|).
/// Mutually inverse with [`solve_characteristic`], bit-for-bit on grids.
pub fn tame_restrict(msd: &MassShellDensityLC) -> Result<CharacteristicData> {
    if let Some(values) = msd.rep_scaled() {
        let gf = GridFunction::new(msd.grid.clone(), values.to_vec())?;
        return CharacteristicData::from_grid(gf);
    }
    let b = msd.b_density()?;
    CharacteristicData::from_density(b.lc_scaled(-1), msd.grid.clone(), msd.params)
}

/// The unique solution with the given characteristic datum:
/// b = 4π|p⁺|·ũ̂₀.
pub fn solve_characteristic(data: &CharacteristicData) -> Result<MassShellDensityLC> {
    if let Some(values) = data.rep_values() {
        let gf = GridFunction::new(data.grid.clone(), values.to_vec())?;
        return MassShellDensityLC::from_scaled_grid(gf);
    }
    let u = data.rep_density().expect("spec rep").clone();
    MassShellDensityLC::from_b_density(u.lc_scaled(1), data.grid.clone(), data.params)
}

/// Result of the discretized field-equation residual check.
#[derive(Debug, Clone, Copy)]
pub struct KgResidual {
    /// max-norm of the discrete (∂₀² − Δ + m²)u over interior slices,
    /// relative to the solution's max-norm.
    pub relative_residual: f64,
    /// Set when the solution is identically zero (0/0 guarded).
    pub degenerate: bool,
}

/// Second-order centered discretization of the field operator across
/// equally spaced time slices obtained by spectral evolution and inverse
/// transform.  Needs at least 5 slices; the position grid must be the
/// reciprocal of the density's momentum grid.
pub fn kg_residual(
    msd: &MassShellDensityM,
    pos_grid: &MomentumGrid,
    x0_list: &[f64],
) -> Result<KgResidual> {
    if x0_list.len() < 5 {
        return Err(Error::InvalidParams(format!(
            "need at least 5 time slices, got {}",
            x0_list.len()
        )));
    }
    let dt = x0_list[1] - x0_list[0];
    for w in x0_list.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-12 * dt.abs().max(1.0) {
            return Err(Error::InvalidParams("time slices must be equally spaced".into()));
        }
    }
    if pos_grid.kind != GridKind::MinkowskiPosition {
        return Err(Error::GridMismatch("position grid must be minkowski-position".into()));
    }
    // Position slices via the inverse transform of each profile.
    let mut slices: Vec<Vec<Complex64>> = Vec::with_capacity(x0_list.len());
    for &x0 in x0_list {
        let prof = evolve_profile(msd, x0)?;
        let slice = dft(&prof.profile, TransformConvention::EuclidInverse)?;
        if slice.grid().axes != pos_grid.axes {
            return Err(Error::GridMismatch(
                "position grid is not the reciprocal of the momentum grid".into(),
            ));
        }
        slices.push(slice.into_values());
    }

    let shape: Vec<usize> = pos_grid.axes.iter().map(|a| a.count).collect();
    let total: usize = shape.iter().product();
    let m2 = msd.params.m * msd.params.m;
    let mut umax = 0.0f64;
    for s in &slices {
        for v in s {
            umax = umax.max(v.norm());
        }
    }
    if umax == 0.0 {
        return Ok(KgResidual {
            relative_residual: 0.0,
            degenerate: true,
        });
    }

    // strides for the periodic spatial stencil
    let n = shape.len();
    let mut strides = vec![1usize; n];
    for i in (0..n - 1).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    let mut rmax = 0.0f64;
    let mut idx = vec![0usize; n];
    for t in 1..slices.len() - 1 {
        let (prev, cur, next) = (&slices[t - 1], &slices[t], &slices[t + 1]);
        for flat in 0..total {
            // ∂₀² by centered difference in time
            let mut val = (next[flat] - 2.0 * cur[flat] + prev[flat]) / (dt * dt);
            // −Δ by periodic centered differences per axis
            let mut rem = flat;
            for (i, &len) in shape.iter().enumerate().rev() {
                idx[i] = rem % len;
                rem /= len;
            }
            for i in 0..n {
                let len = shape[i];
                let s = strides[i];
                let here = idx[i];
                let up = flat - here * s + ((here + 1) % len) * s;
                let dn = flat - here * s + ((here + len - 1) % len) * s;
                let dx = pos_grid.axes[i].step;
                val -= (cur[up] - 2.0 * cur[flat] + cur[dn]) / (dx * dx);
            }
            val += m2 * cur[flat];
            rmax = rmax.max(val.norm());
        }
    }
    Ok(KgResidual {
        relative_residual: rmax / umax,
        degenerate: false,
    })
}

/// Reciprocal position grid for a Minkowski momentum grid.
pub fn position_grid_for(momentum: &MomentumGrid) -> Result<MomentumGrid> {
    if momentum.kind != GridKind::MinkowskiMomentum {
        return Err(Error::GridMismatch("expected a minkowski-momentum grid".into()));
    }
    let axes = momentum
        .axes
        .iter()
        .map(|a| a.reciprocal(crate::grids_io::AxisOffset::Centered))
        .collect::<Result<Vec<_>>>()?;
    MomentumGrid::new(momentum.params, axes, GridKind::MinkowskiPosition)
}
