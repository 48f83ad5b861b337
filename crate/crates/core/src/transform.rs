//! Fourier transforms in the exact sign conventions used throughout, on
//! grids and on closed-form specs, plus the initial-data conversion laws
//! between the Minkowski and characteristic pictures.
//!
//! The six conventions:
//!
//! * `Euclid`            f̂(𝐩) = ∫ f(𝐱) e^{−i 𝐱·𝐩} d𝐱
//! * `EuclidInverse`     (2π)^{−n} ∫ f(𝐩) e^{+i 𝐱·𝐩} d𝐩
//! * `PartialLc`         f̂(𝐩̃) = ∫ f(𝐱̃) e^{+i(x⁻p⁺ − x⊥·p⊥)} d𝐱̃
//! * `PartialLcInverse`  (2π)^{−n} ∫ f̂(𝐩̃) e^{−i(x⁻p⁺ − x⊥·p⊥)} d𝐩̃
//! * `MinkowskiFull`     f̂(p) = ∫ f(x) e^{+i⟨x,p⟩} dx
//! * `LcFull`            f̂(p̃) = ∫ f(x̃) e^{+i[x̃,p̃]} dx̃
//!
//! Note the partial light-cone kernel pairs x⁻ with p⁺ at the *opposite*
//! sign from the transverse pairing; on grids that axis also swaps position
//! (x⁻ is last, p⁺ is first) and picks up the half-step offset.  Grid
//! transforms handle arbitrary axis minima with exact multiplicative phase
//! ramps around an FFT kernel, so forward-then-inverse is an identity to
//! rounding.

use crate::error::{Error, Result};
use crate::grids_io::{AxisOffset, AxisSpec, GridFunction, GridKind, MomentumGrid};
use crate::kinematics::{lc_bilinear, minkowski_bilinear};
use crate::massshell::{CauchyComponent, CauchyData, CharacteristicData, Density};
use crate::quadrature::{integrate_rn, QuadOpts};
use crate::testfn::TestFunctionSpec;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformConvention {
    Euclid,
    EuclidInverse,
    PartialLc,
    PartialLcInverse,
    MinkowskiFull,
    LcFull,
}

impl TransformConvention {
    /// Kernel phase θ in e^{iθ} for the pointwise (quadrature) transform,
    /// with x and p in the convention's coordinate ordering.
    pub fn kernel_phase(self, x: &[f64], p: &[f64]) -> f64 {
        let d = x.len();
        debug_assert_eq!(d, p.len());
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(u, v)| u * v).sum() };
        match self {
            TransformConvention::Euclid => -dot(x, p),
            TransformConvention::EuclidInverse => dot(x, p),
            // x̃ = (x⊥, x⁻), 𝐩̃ = (p⁺, p⊥)
            TransformConvention::PartialLc => {
                x[d - 1] * p[0] - dot(&x[..d - 1], &p[1..])
            }
            TransformConvention::PartialLcInverse => {
                -(x[d - 1] * p[0] - dot(&x[..d - 1], &p[1..]))
            }
            TransformConvention::MinkowskiFull => minkowski_bilinear(x, p),
            TransformConvention::LcFull => lc_bilinear(x, p),
        }
    }

    /// Overall normalization: inverse conventions carry (2π)^{−d}.
    pub fn normalization(self, d: usize) -> f64 {
        match self {
            TransformConvention::EuclidInverse | TransformConvention::PartialLcInverse => {
                (2.0 * PI).powi(-(d as i32))
            }
            _ => 1.0,
        }
    }
}

/// Pointwise transform of a closed-form spec by quadrature; works for all
/// six conventions and backs the intertwining checks at random points.
pub fn transform_spec_at(
    spec: &TestFunctionSpec,
    conv: TransformConvention,
    p: &[f64],
    opts: &QuadOpts,
) -> Result<Complex64> {
    let d = spec.dim();
    if p.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: p.len() });
    }
    let integrand = |x: &[f64]| {
        let phase = conv.kernel_phase(x, p);
        spec.eval_unchecked(x) * Complex64::from_polar(1.0, phase)
    };
    let r = integrate_rn(&integrand, d, opts)?;
    Ok(r.value * conv.normalization(d))
}

/// Exact partial light-cone transform of a spec, available when its
/// Euclidean transform has a closed form:
/// f̂^{lc}(p⁺, p⊥) = f̂^{euclid}(p⊥, −p⁺).
pub struct PartialLcClosedForm {
    hat: TestFunctionSpec,
}

impl PartialLcClosedForm {
    pub fn eval(&self, p_plus: f64, p_perp: &[f64]) -> Result<Complex64> {
        let mut q = Vec::with_capacity(p_perp.len() + 1);
        q.extend_from_slice(p_perp);
        q.push(-p_plus);
        self.hat.eval(&q)
    }
}

pub fn partial_lc_closed_form(f: &TestFunctionSpec) -> Option<PartialLcClosedForm> {
    f.fourier_exact().map(|hat| PartialLcClosedForm { hat })
}

/// Per-axis plan: kernel sign, where the axis lands in the output, and the
/// output offset convention.
struct AxisPlan {
    sign: f64,
    out_pos: usize,
    out_offset: AxisOffset,
}

fn grid_plan(
    conv: TransformConvention,
    kind: GridKind,
    n: usize,
) -> Result<(Vec<AxisPlan>, GridKind)> {
    use GridKind::*;
    use TransformConvention::*;
    let identity_centered = |sign: f64| -> Vec<AxisPlan> {
        (0..n)
            .map(|i| AxisPlan { sign, out_pos: i, out_offset: AxisOffset::Centered })
            .collect()
    };
    match (conv, kind) {
        (Euclid, MinkowskiPosition) => Ok((identity_centered(-1.0), MinkowskiMomentum)),
        (Euclid, MinkowskiMomentum) => Ok((identity_centered(-1.0), MinkowskiPosition)),
        (EuclidInverse, MinkowskiMomentum) => Ok((identity_centered(1.0), MinkowskiPosition)),
        (EuclidInverse, MinkowskiPosition) => Ok((identity_centered(1.0), MinkowskiMomentum)),
        (PartialLc, LcPosition) => {
            // (x⊥…, x⁻) → (p⁺, p⊥…): the last axis moves to the front and
            // becomes the half-step p⁺ axis with kernel sign +1.
            let mut plans = Vec::with_capacity(n);
            for i in 0..n - 1 {
                plans.push(AxisPlan { sign: -1.0, out_pos: i + 1, out_offset: AxisOffset::Centered });
            }
            plans.push(AxisPlan { sign: 1.0, out_pos: 0, out_offset: AxisOffset::HalfStep });
            Ok((plans, LcMomentum))
        }
        (PartialLcInverse, LcMomentum) => {
            // (p⁺, p⊥…) → (x⊥…, x⁻)
            let mut plans = Vec::with_capacity(n);
            plans.push(AxisPlan { sign: -1.0, out_pos: n - 1, out_offset: AxisOffset::Centered });
            for i in 1..n {
                plans.push(AxisPlan { sign: 1.0, out_pos: i - 1, out_offset: AxisOffset::Centered });
            }
            Ok((plans, LcPosition))
        }
        (MinkowskiFull | LcFull, _) => Err(Error::Unsupported(
            "full spacetime conventions are evaluated by quadrature on specs, not on grids".into(),
        )),
        (conv, kind) => Err(Error::GridMismatch(format!(
            "convention {conv:?} does not apply to grid kind {kind:?}"
        ))),
    }
}

/// Discrete transform of a grid function under one of the spatial
/// conventions.  The output grid has reciprocal axes
/// (step′ = 2π/(step·count)); applying the matching inverse returns the
/// original values to rounding.
pub fn dft(gf: &GridFunction, conv: TransformConvention) -> Result<GridFunction> {
    let grid = gf.grid();
    let n = grid.dim();
    let (plans, out_kind) = grid_plan(conv, grid.kind, n)?;

    let shape: Vec<usize> = grid.axes.iter().map(|a| a.count).collect();
    let mut values = gf.values().to_vec();

    // Output axes in input order first; permute at the end.
    let mut out_axes_by_in: Vec<AxisSpec> = Vec::with_capacity(n);
    for (ax, plan) in grid.axes.iter().zip(&plans) {
        out_axes_by_in.push(ax.reciprocal(plan.out_offset)?);
    }

    let mut planner = FftPlanner::<f64>::new();
    for axis in 0..n {
        transform_axis(
            &mut values,
            &shape,
            axis,
            &grid.axes[axis],
            &out_axes_by_in[axis],
            plans[axis].sign,
            &mut planner,
        );
    }

    // Normalization.
    let norm = conv.normalization(n);
    if norm != 1.0 {
        for v in &mut values {
            *v *= norm;
        }
    }

    // Permute axes into output order.
    let mut perm = vec![0usize; n];
    for (in_axis, plan) in plans.iter().enumerate() {
        perm[plan.out_pos] = in_axis;
    }
    let permuted = permute_axes(&values, &shape, &perm);
    let out_axes: Vec<AxisSpec> = perm.iter().map(|&i| out_axes_by_in[i]).collect();
    let out_grid = MomentumGrid::new(grid.params, out_axes, out_kind)?;
    GridFunction::new(out_grid, permuted)
}

/// One exact 1-D convention transform along `axis` of a row-major array:
/// F_k = Δx · e^{s·i·x₀p_k} Σ_j [f_j e^{s·i·jΔx·p₀}] e^{s·2πi jk/N}.
fn transform_axis(
    values: &mut [Complex64],
    shape: &[usize],
    axis: usize,
    ax_in: &AxisSpec,
    ax_out: &AxisSpec,
    sign: f64,
    planner: &mut FftPlanner<f64>,
) {
    let len = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let fft = if sign < 0.0 {
        planner.plan_fft_forward(len)
    } else {
        planner.plan_fft_inverse(len)
    };

    let ramp_in: Vec<Complex64> = (0..len)
        .map(|j| Complex64::from_polar(1.0, sign * (j as f64) * ax_in.step * ax_out.min))
        .collect();
    let ramp_out: Vec<Complex64> = (0..len)
        .map(|k| Complex64::from_polar(ax_in.step, sign * ax_in.min * ax_out.node(k)))
        .collect();

    let mut line = vec![Complex64::new(0.0, 0.0); len];
    for o in 0..outer {
        for i in 0..stride {
            let base = o * len * stride + i;
            for j in 0..len {
                line[j] = values[base + j * stride] * ramp_in[j];
            }
            fft.process(&mut line);
            for k in 0..len {
                values[base + k * stride] = line[k] * ramp_out[k];
            }
        }
    }
}

/// Reorder axes: output axis d is input axis perm[d].
fn permute_axes(values: &[Complex64], shape: &[usize], perm: &[usize]) -> Vec<Complex64> {
    let n = shape.len();
    if perm.iter().enumerate().all(|(d, &p)| d == p) {
        return values.to_vec();
    }
    let out_shape: Vec<usize> = perm.iter().map(|&i| shape[i]).collect();
    let mut in_strides = vec![1usize; n];
    for i in (0..n - 1).rev() {
        in_strides[i] = in_strides[i + 1] * shape[i + 1];
    }
    let total: usize = shape.iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); total];
    let mut out_idx = vec![0usize; n];
    for slot in out.iter_mut() {
        let mut flat_in = 0;
        for d in 0..n {
            flat_in += out_idx[d] * in_strides[perm[d]];
        }
        *slot = values[flat_in];
        for d in (0..n).rev() {
            out_idx[d] += 1;
            if out_idx[d] < out_shape[d] {
                break;
            }
            out_idx[d] = 0;
        }
    }
    out
}

/// Initial-data conversion, Minkowski → characteristic:
/// ũ̂₀(𝐩̃) = (1/2|p⁺|)[ν₊*(ω û₀ + i û₁) + ν₋*(ω û₀ − i û₁)],
/// evaluated at every node of `lc_grid`.  The returned data also carries
/// the closed form so the opposite conversion can use it exactly.
pub fn convert_m_to_lc(
    data: &CauchyData,
    lc_grid: &MomentumGrid,
) -> Result<CharacteristicData> {
    let expr = Density::CharFromCauchy {
        u0: Box::new(data.u0_hat.clone()),
        u1: Box::new(data.u1_hat.clone()),
        params: data.params,
    };
    // Sampling validates the data is evaluable at every node.
    expr.sample_on(lc_grid)?;
    CharacteristicData::from_density(expr, lc_grid.clone(), data.params)
}

/// Initial-data conversion, characteristic → Minkowski:
/// û₀ = (1/ω)[(|p⁺|Θ(p⁺)ũ̂₀)∘μ₊ + (|p⁺|Θ(−p⁺)ũ̂₀)∘μ₋] and
/// û₁ = (1/i)[(|p⁺|Θ(p⁺)ũ̂₀)∘μ₊ − (|p⁺|Θ(−p⁺)ũ̂₀)∘μ₋].
/// Spec-backed data evaluates exactly; grid-backed data interpolates, with
/// off-box queries reading as zero.
pub fn convert_lc_to_m(data: &CharacteristicData, grid: &MomentumGrid) -> Result<CauchyData> {
    let u_lc = data.density()?;
    let u0 = Density::CauchyFromChar {
        u_lc: Box::new(u_lc.clone()),
        component: CauchyComponent::U0,
        params: data.params,
    };
    let u1 = Density::CauchyFromChar {
        u_lc: Box::new(u_lc),
        component: CauchyComponent::U1,
        params: data.params,
    };
    CauchyData::new(u0, u1, grid.clone(), data.params)
}
