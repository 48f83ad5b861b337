//! Mass-shell densities and initial data: construction from Cauchy data,
//! sign splitting, transport between the Minkowski and light-cone
//! parametrizations, and the division-problem residual.
//!
//! A solution is carried by its density — the pair (a₀, a₁) over 𝐩 in the
//! Minkowski parametrization, or the single b over 𝐩̃ = (p⁺, p⊥) on the
//! light-cone side.  Densities are kept in closed (evaluable) form whenever
//! possible; grid-backed densities use separable cubic interpolation for the
//! off-grid evaluations that the transports need.
//!
//! Light-cone densities store the rescaled profile ũ = b/(4π|p⁺|)
//! internally: the characteristic solve and the tame restriction are then
//! exact mutual inverses at the representation level, which is what the
//! uniqueness statement they implement asserts.

use crate::error::{Error, Result};
use crate::grids_io::{sample, GridFunction, GridKind, MomentumGrid};
use crate::kinematics::{
    lc_omega_of, mu_squeeze_raw, nu_unsqueeze_into, omega_of, ModelParams, SqueezeSign,
};
use crate::quadrature::{pair_lc_delta, pair_minkowski_delta, PairSide, QuadOpts, QuadResult};
use crate::testfn::{TestFunctionSpec, MAX_DIM};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A complex function of spatial momentum, evaluable at arbitrary points.
///
/// Beyond closed-form specs and grid samples this includes the handful of
/// compositions the initial-data machinery produces: the Cauchy combination
/// 2π(ω û₀ ± i û₁), transports through ν and μ, restriction to a half-space,
/// and powers of the light-cone weight 4π|p⁺|.  Everything except `Grid` has
/// a JSON form, used by file sidecars and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Density {
    Spec { spec: TestFunctionSpec },
    #[serde(skip)]
    Grid(GridFunction),
    Const { value: Complex64 },
    /// c·ε(p⁺) with the first coordinate read as p⁺.
    SignPPlus { value: Complex64 },
    /// c/p⁺.
    InvPPlus { value: Complex64 },
    Sum { terms: Vec<(Complex64, Density)> },
    /// 2π(ω(𝐩) û₀(𝐩) + i s û₁(𝐩)) with s = ±1.
    CauchyCombo {
        u0: Box<Density>,
        u1: Box<Density>,
        sign: SqueezeSign,
        params: ModelParams,
    },
    /// b(𝐩̃) = a₀(ν₊(𝐩̃)) on p⁺ > 0, a₁(ν₋(𝐩̃)) on p⁺ < 0.
    NuTransport {
        a0: Box<Density>,
        a1: Box<Density>,
        params: ModelParams,
    },
    /// a(𝐩) = b(μ±(𝐩)).
    MuTransport {
        b: Box<Density>,
        side: SqueezeSign,
        params: ModelParams,
    },
    /// Restriction to one half-space: inner on ±p⁺ > 0, zero elsewhere.
    Restrict {
        inner: Box<Density>,
        side: SqueezeSign,
    },
    /// (4π|p⁺|)^power · inner.
    LcScale {
        inner: Box<Density>,
        power: i32,
    },
    /// Characteristic transform straight from Cauchy transforms:
    /// ũ̂₀(𝐩̃) = (ω û₀ ± i û₁)(ν±(𝐩̃)) / (2|p⁺|), branch by sign of p⁺.
    /// Deliberately its own arithmetic, independent of the density-transport
    /// composition, so the two routes cross-check each other.
    CharFromCauchy {
        u0: Box<Density>,
        u1: Box<Density>,
        params: ModelParams,
    },
    /// Cauchy transforms straight from the characteristic transform, with
    /// A = (|p⁺| ũ̂₀)∘μ₊ and B = (|p⁺| ũ̂₀)∘μ₋:
    /// û₀ = (A+B)/ω and û₁ = (A−B)/i.
    CauchyFromChar {
        u_lc: Box<Density>,
        component: CauchyComponent,
        params: ModelParams,
    },
}

/// Which Cauchy transform a [`Density::CauchyFromChar`] node yields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CauchyComponent {
    U0,
    U1,
}

impl Density {
    pub fn spec(spec: TestFunctionSpec) -> Self {
        Density::Spec { spec }
    }

    pub fn constant(value: impl Into<Complex64>) -> Self {
        Density::Const {
            value: value.into(),
        }
    }

    /// (4π|p⁺|)^power·self, cancelling adjacent inverse scalings exactly.
    pub fn lc_scaled(self, power: i32) -> Self {
        match self {
            Density::LcScale { inner, power: p0 } => {
                let total = p0 + power;
                if total == 0 {
                    *inner
                } else {
                    Density::LcScale {
                        inner,
                        power: total,
                    }
                }
            }
            other if power == 0 => other,
            other => Density::LcScale {
                inner: Box::new(other),
                power,
            },
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        match self {
            Density::Spec { spec } => spec.eval(x),
            Density::Grid(gf) => gf.interp_at(x),
            Density::Const { value } => Ok(*value),
            Density::SignPPlus { value } => Ok(match x[0] {
                p if p > 0.0 => *value,
                p if p < 0.0 => -*value,
                _ => Complex64::new(0.0, 0.0),
            }),
            Density::InvPPlus { value } => {
                if x[0] == 0.0 {
                    return Err(Error::PPlusZero);
                }
                Ok(value / x[0])
            }
            Density::Sum { terms } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, d) in terms {
                    acc += c * d.eval(x)?;
                }
                Ok(acc)
            }
            Density::CauchyCombo {
                u0,
                u1,
                sign,
                params,
            } => {
                let w = omega_of(x, params.m);
                Ok(2.0 * PI
                    * (w * u0.eval(x)? + Complex64::i() * sign.signum() * u1.eval(x)?))
            }
            Density::NuTransport { a0, a1, params } => {
                let p_plus = x[0];
                if p_plus == 0.0 {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let n = x.len();
                let mut buf = [0.0f64; MAX_DIM];
                nu_unsqueeze_into(p_plus, &x[1..n], params.m, &mut buf[..n]);
                if p_plus > 0.0 {
                    eval_decaying(a0, &buf[..n])
                } else {
                    eval_decaying(a1, &buf[..n])
                }
            }
            Density::MuTransport { b, side, params } => {
                let (p_plus, p_perp) = mu_squeeze_raw(*side, x, params.m);
                let mut pt = Vec::with_capacity(x.len());
                pt.push(p_plus);
                pt.extend_from_slice(&p_perp);
                eval_decaying(b, &pt)
            }
            Density::Restrict { inner, side } => {
                if x[0] == 0.0 || x[0].signum() != side.signum() {
                    Ok(Complex64::new(0.0, 0.0))
                } else {
                    inner.eval(x)
                }
            }
            Density::LcScale { inner, power } => {
                let w = 4.0 * PI * x[0].abs();
                if w == 0.0 && *power < 0 {
                    return Err(Error::PPlusZero);
                }
                Ok(inner.eval(x)? * w.powi(*power))
            }
            Density::CharFromCauchy { u0, u1, params } => {
                let p_plus = x[0];
                if p_plus == 0.0 {
                    return Err(Error::PPlusZero);
                }
                let n = x.len();
                let mut p = [0.0f64; MAX_DIM];
                nu_unsqueeze_into(p_plus, &x[1..n], params.m, &mut p[..n]);
                let w = omega_of(&p[..n], params.m);
                let v0 = eval_decaying(u0, &p[..n])?;
                let v1 = eval_decaying(u1, &p[..n])?;
                let s = if p_plus > 0.0 { 1.0 } else { -1.0 };
                Ok((w * v0 + Complex64::i() * s * v1) / (2.0 * p_plus.abs()))
            }
            Density::CauchyFromChar {
                u_lc,
                component,
                params,
            } => {
                let mut fetch = |side: SqueezeSign| -> Result<Complex64> {
                    let (p_plus, p_perp) = mu_squeeze_raw(side, x, params.m);
                    let mut pt = Vec::with_capacity(x.len());
                    pt.push(p_plus);
                    pt.extend_from_slice(&p_perp);
                    Ok(p_plus.abs() * eval_decaying(u_lc, &pt)?)
                };
                let a = fetch(SqueezeSign::Plus)?;
                let b = fetch(SqueezeSign::Minus)?;
                match component {
                    CauchyComponent::U0 => Ok((a + b) / omega_of(x, params.m)),
                    CauchyComponent::U1 => Ok(-Complex64::i() * (a - b)),
                }
            }
        }
    }

    /// Closure adapter for the quadrature pairings; evaluation errors
    /// surface as NaN and are caught by the integrator.
    pub fn closure(&self) -> impl Fn(&[f64]) -> Complex64 + Sync + '_ {
        move |x| {
            self.eval(x)
                .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
        }
    }

    /// Sample onto a grid (exact at nodes; grid-backed inputs reproduce
    /// their node values exactly).
    pub fn sample_on(&self, grid: &MomentumGrid) -> Result<GridFunction> {
        let n = grid.dim();
        let mut values = Vec::with_capacity(grid.len());
        let mut coords = vec![0.0; n];
        for flat in 0..grid.len() {
            grid.coords_into(flat, &mut coords);
            values.push(self.eval(&coords)?);
        }
        GridFunction::new(grid.clone(), values)
    }
}

/// Evaluation for transported densities: queries that land outside a
/// grid-backed density's sampled box read as zero, since the data is
/// rapidly decreasing by construction.  Other errors still propagate.
fn eval_decaying(d: &Density, x: &[f64]) -> Result<Complex64> {
    match d.eval(x) {
        Err(Error::InterpOutOfRange { .. }) => Ok(Complex64::new(0.0, 0.0)),
        other => other,
    }
}

/// The light-cone weight 4π|p⁺| at a node.
#[inline]
fn lc_weight(p_plus: f64) -> f64 {
    4.0 * PI * p_plus.abs()
}

/// Minkowski mass-shell density pair: a₀ on the upper sheet, a₁ on the
/// lower, together with the sampling grid they belong to.
#[derive(Debug, Clone)]
pub struct MassShellDensityM {
    pub a0: Density,
    pub a1: Density,
    pub grid: MomentumGrid,
    pub params: ModelParams,
}

impl MassShellDensityM {
    pub fn new(a0: Density, a1: Density, grid: MomentumGrid, params: ModelParams) -> Result<Self> {
        if grid.kind != GridKind::MinkowskiMomentum {
            return Err(Error::GridMismatch(
                "Minkowski density needs a minkowski-momentum grid".into(),
            ));
        }
        if grid.params != params {
            return Err(Error::GridMismatch("grid parameters differ".into()));
        }
        Ok(Self {
            a0,
            a1,
            grid,
            params,
        })
    }

    pub fn sample_a0(&self) -> Result<GridFunction> {
        self.a0.sample_on(&self.grid)
    }

    pub fn sample_a1(&self) -> Result<GridFunction> {
        self.a1.sample_on(&self.grid)
    }
}

/// Light-cone mass-shell density b(𝐩̃) on a grid with no p⁺ = 0 node.
///
/// Internally grid-backed values store ũ = b/(4π|p⁺|); see the module
/// docs.  `b` itself is always available through [`Self::b_density`] and
/// [`Self::sample_b`].
#[derive(Debug, Clone)]
pub struct MassShellDensityLC {
    rep: LcRep,
    pub grid: MomentumGrid,
    pub params: ModelParams,
}

#[derive(Debug, Clone)]
enum LcRep {
    /// b in closed form.
    Spec(Density),
    /// ũ = b/(4π|p⁺|) at the grid nodes.
    Scaled(Vec<Complex64>),
}

impl MassShellDensityLC {
    fn check_grid(grid: &MomentumGrid, params: &ModelParams) -> Result<()> {
        if grid.kind != GridKind::LcMomentum {
            return Err(Error::GridMismatch(
                "light-cone density needs an lc-momentum grid".into(),
            ));
        }
        if grid.params != *params {
            return Err(Error::GridMismatch("grid parameters differ".into()));
        }
        Ok(())
    }

    pub fn from_b_density(b: Density, grid: MomentumGrid, params: ModelParams) -> Result<Self> {
        Self::check_grid(&grid, &params)?;
        Ok(Self {
            rep: LcRep::Spec(b),
            grid,
            params,
        })
    }

    /// Construct from sampled b values (divides by 4π|p⁺| once).
    pub fn from_b_grid(b: GridFunction) -> Result<Self> {
        let grid = b.grid().clone();
        let params = grid.params;
        Self::check_grid(&grid, &params)?;
        let mut coords = vec![0.0; grid.dim()];
        let scaled = b
            .values()
            .iter()
            .enumerate()
            .map(|(flat, v)| {
                grid.coords_into(flat, &mut coords);
                v / lc_weight(coords[0])
            })
            .collect();
        Ok(Self {
            rep: LcRep::Scaled(scaled),
            grid,
            params,
        })
    }

    /// Construct directly from the rescaled profile ũ = b/(4π|p⁺|).
    pub fn from_scaled_grid(u: GridFunction) -> Result<Self> {
        let grid = u.grid().clone();
        let params = grid.params;
        Self::check_grid(&grid, &params)?;
        Ok(Self {
            rep: LcRep::Scaled(u.into_values()),
            grid,
            params,
        })
    }

    pub fn is_spec(&self) -> bool {
        matches!(self.rep, LcRep::Spec(_))
    }

    /// The density b as an evaluable.
    pub fn b_density(&self) -> Result<Density> {
        match &self.rep {
            LcRep::Spec(b) => Ok(b.clone()),
            LcRep::Scaled(values) => {
                let gf = GridFunction::new(self.grid.clone(), values.clone())?;
                Ok(Density::Grid(gf).lc_scaled(1))
            }
        }
    }

    /// b sampled at the grid nodes.
    pub fn sample_b(&self) -> Result<GridFunction> {
        match &self.rep {
            LcRep::Spec(b) => b.sample_on(&self.grid),
            LcRep::Scaled(values) => {
                let mut coords = vec![0.0; self.grid.dim()];
                let b = values
                    .iter()
                    .enumerate()
                    .map(|(flat, u)| {
                        self.grid.coords_into(flat, &mut coords);
                        u * lc_weight(coords[0])
                    })
                    .collect();
                GridFunction::new(self.grid.clone(), b)
            }
        }
    }

    /// ũ = b/(4π|p⁺|) at the grid nodes (the x⁺ = 0 tame profile).
    pub fn scaled_values(&self) -> Result<Vec<Complex64>> {
        match &self.rep {
            LcRep::Scaled(values) => Ok(values.clone()),
            LcRep::Spec(b) => {
                let scaled = b.clone().lc_scaled(-1);
                Ok(scaled.sample_on(&self.grid)?.into_values())
            }
        }
    }

    /// ũ in closed form when the density is spec-backed.
    pub fn scaled_density(&self) -> Option<Density> {
        match &self.rep {
            LcRep::Spec(b) => Some(b.clone().lc_scaled(-1)),
            LcRep::Scaled(_) => None,
        }
    }

    pub(crate) fn rep_scaled(&self) -> Option<&[Complex64]> {
        match &self.rep {
            LcRep::Scaled(v) => Some(v),
            LcRep::Spec(_) => None,
        }
    }
}

/// Non-characteristic initial data (û₀, û₁): the spatial Fourier transforms
/// of the field and its time derivative on {x⁰ = 0}.
#[derive(Debug, Clone)]
pub struct CauchyData {
    pub u0_hat: Density,
    pub u1_hat: Density,
    pub grid: MomentumGrid,
    pub params: ModelParams,
}

impl CauchyData {
    pub fn new(
        u0_hat: Density,
        u1_hat: Density,
        grid: MomentumGrid,
        params: ModelParams,
    ) -> Result<Self> {
        if grid.kind != GridKind::MinkowskiMomentum {
            return Err(Error::GridMismatch(
                "Cauchy data needs a minkowski-momentum grid".into(),
            ));
        }
        if grid.params != params {
            return Err(Error::GridMismatch("grid parameters differ".into()));
        }
        Ok(Self {
            u0_hat,
            u1_hat,
            grid,
            params,
        })
    }
}

/// Characteristic initial data: the partial light-cone Fourier transform of
/// the tame restriction ũ|{x⁺=0}, carried on an lc-momentum grid.
#[derive(Debug, Clone)]
pub struct CharacteristicData {
    rep: CharRep,
    pub grid: MomentumGrid,
    pub params: ModelParams,
}

#[derive(Debug, Clone)]
enum CharRep {
    Spec(Density),
    Grid(Vec<Complex64>),
}

impl CharacteristicData {
    pub fn from_density(u: Density, grid: MomentumGrid, params: ModelParams) -> Result<Self> {
        MassShellDensityLC::check_grid(&grid, &params)?;
        Ok(Self {
            rep: CharRep::Spec(u),
            grid,
            params,
        })
    }

    pub fn from_grid(u: GridFunction) -> Result<Self> {
        let grid = u.grid().clone();
        let params = grid.params;
        MassShellDensityLC::check_grid(&grid, &params)?;
        Ok(Self {
            rep: CharRep::Grid(u.into_values()),
            grid,
            params,
        })
    }

    pub fn is_spec(&self) -> bool {
        matches!(self.rep, CharRep::Spec(_))
    }

    /// The transform ũ̂₀ as an evaluable (grid-backed data interpolates).
    pub fn density(&self) -> Result<Density> {
        match &self.rep {
            CharRep::Spec(u) => Ok(u.clone()),
            CharRep::Grid(values) => {
                let gf = GridFunction::new(self.grid.clone(), values.clone())?;
                Ok(Density::Grid(gf))
            }
        }
    }

    /// Samples at the grid nodes.
    pub fn grid_values(&self) -> Result<GridFunction> {
        match &self.rep {
            CharRep::Spec(u) => u.sample_on(&self.grid),
            CharRep::Grid(values) => GridFunction::new(self.grid.clone(), values.clone()),
        }
    }

    pub(crate) fn rep_values(&self) -> Option<&[Complex64]> {
        match &self.rep {
            CharRep::Grid(v) => Some(v),
            CharRep::Spec(_) => None,
        }
    }

    pub(crate) fn rep_density(&self) -> Option<&Density> {
        match &self.rep {
            CharRep::Spec(d) => Some(d),
            CharRep::Grid(_) => None,
        }
    }
}

/// Densities from Cauchy data: a₀ = 2π(ω û₀ + i û₁), a₁ = 2π(ω û₀ − i û₁).
pub fn from_cauchy(data: &CauchyData) -> Result<MassShellDensityM> {
    let a0 = Density::CauchyCombo {
        u0: Box::new(data.u0_hat.clone()),
        u1: Box::new(data.u1_hat.clone()),
        sign: SqueezeSign::Plus,
        params: data.params,
    };
    let a1 = Density::CauchyCombo {
        u0: Box::new(data.u0_hat.clone()),
        u1: Box::new(data.u1_hat.clone()),
        sign: SqueezeSign::Minus,
        params: data.params,
    };
    MassShellDensityM::new(a0, a1, data.grid.clone(), data.params)
}

/// Split a light-cone density into its p⁺ > 0 and p⁺ < 0 parts.
/// The parts add back to the whole exactly (no node sits at p⁺ = 0).
pub fn split_pm(msd: &MassShellDensityLC) -> Result<(MassShellDensityLC, MassShellDensityLC)> {
    match &msd.rep {
        LcRep::Scaled(values) => {
            let n = msd.grid.dim();
            let mut coords = vec![0.0; n];
            let mut plus = Vec::with_capacity(values.len());
            let mut minus = Vec::with_capacity(values.len());
            for (flat, v) in values.iter().enumerate() {
                msd.grid.coords_into(flat, &mut coords);
                if coords[0] > 0.0 {
                    plus.push(*v);
                    minus.push(Complex64::new(0.0, 0.0));
                } else {
                    plus.push(Complex64::new(0.0, 0.0));
                    minus.push(*v);
                }
            }
            Ok((
                MassShellDensityLC {
                    rep: LcRep::Scaled(plus),
                    grid: msd.grid.clone(),
                    params: msd.params,
                },
                MassShellDensityLC {
                    rep: LcRep::Scaled(minus),
                    grid: msd.grid.clone(),
                    params: msd.params,
                },
            ))
        }
        LcRep::Spec(b) => {
            let mk = |side| MassShellDensityLC {
                rep: LcRep::Spec(Density::Restrict {
                    inner: Box::new(b.clone()),
                    side,
                }),
                grid: msd.grid.clone(),
                params: msd.params,
            };
            Ok((mk(SqueezeSign::Plus), mk(SqueezeSign::Minus)))
        }
    }
}

/// Transport a Minkowski density pair to the light-cone parametrization:
/// b(𝐩̃) = a₀(ν₊(𝐩̃)) on p⁺ > 0 and a₁(ν₋(𝐩̃)) on p⁺ < 0.
pub fn lc_from_m(msd: &MassShellDensityM, lc_grid: &MomentumGrid) -> Result<MassShellDensityLC> {
    let b = Density::NuTransport {
        a0: Box::new(msd.a0.clone()),
        a1: Box::new(msd.a1.clone()),
        params: msd.params,
    };
    MassShellDensityLC::from_b_density(b, lc_grid.clone(), msd.params)
}

/// Transport a light-cone density back: a₀ = b∘μ₊, a₁ = b∘μ₋.
pub fn m_from_lc(msd: &MassShellDensityLC, grid: &MomentumGrid) -> Result<MassShellDensityM> {
    let b = msd.b_density()?;
    let a0 = Density::MuTransport {
        b: Box::new(b.clone()),
        side: SqueezeSign::Plus,
        params: msd.params,
    };
    let a1 = Density::MuTransport {
        b: Box::new(b),
        side: SqueezeSign::Minus,
        params: msd.params,
    };
    MassShellDensityM::new(a0, a1, grid.clone(), msd.params)
}

/// Pairing of a Minkowski density against (p² − m²)·f.  The on-shell factor
/// vanishes identically on the parametrized shell, so the result is zero up
/// to quadrature rounding; `mass_sq_shift` exists so tests can verify the
/// check is not vacuous.
pub fn division_residual_m(
    msd: &MassShellDensityM,
    f: &TestFunctionSpec,
    mass_sq_shift: f64,
    opts: &QuadOpts,
) -> Result<QuadResult> {
    let m2 = msd.params.m * msd.params.m + mass_sq_shift;
    let qf = |x: &[f64]| {
        let q = crate::kinematics::minkowski_bilinear(x, x) - m2;
        q * f.eval_unchecked(x)
    };
    let a0 = msd.a0.closure();
    let a1 = msd.a1.closure();
    let r0 = pair_minkowski_delta(&a0, &qf, SqueezeSign::Plus, &msd.params, opts)?;
    let r1 = pair_minkowski_delta(&a1, &qf, SqueezeSign::Minus, &msd.params, opts)?;
    Ok(QuadResult {
        value: r0.value + r1.value,
        error_estimate: r0.error_estimate + r1.error_estimate,
    })
}

/// Pairing of a light-cone density against (p̃² − m²)·f; see
/// [`division_residual_m`].
pub fn division_residual_lc(
    msd: &MassShellDensityLC,
    f: &TestFunctionSpec,
    mass_sq_shift: f64,
    opts: &QuadOpts,
) -> Result<QuadResult> {
    let m2 = msd.params.m * msd.params.m + mass_sq_shift;
    let qf = |x: &[f64]| {
        let q = crate::kinematics::lc_bilinear(x, x) - m2;
        q * f.eval_unchecked(x)
    };
    let b = msd.b_density()?;
    let bc = b.closure();
    pair_lc_delta(&bc, &qf, PairSide::Both, &msd.params, opts)
}

/// File sidecar naming the stored representation of a density.
#[derive(Debug, Serialize, Deserialize)]
pub struct DensitySidecar {
    pub representation: String,
    pub m: f64,
    pub n: usize,
    pub files: Vec<String>,
    /// Closed form when the density has one (grid-backed densities do not).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<serde_json::Value>,
}

/// Write a Minkowski density as two GFN1 files plus a JSON sidecar.
pub fn save_m(msd: &MassShellDensityM, dir: &std::path::Path, stem: &str) -> Result<()> {
    let f0 = format!("{stem}.a0.gfn");
    let f1 = format!("{stem}.a1.gfn");
    crate::grids_io::write_gfn(&msd.sample_a0()?, dir.join(&f0))?;
    crate::grids_io::write_gfn(&msd.sample_a1()?, dir.join(&f1))?;
    let closed_form = serde_json::to_value((&msd.a0, &msd.a1)).ok();
    let sidecar = DensitySidecar {
        representation: "minkowski-pair".into(),
        m: msd.params.m,
        n: msd.params.n,
        files: vec![f0, f1],
        closed_form,
    };
    let out = std::fs::File::create(dir.join(format!("{stem}.json")))?;
    serde_json::to_writer_pretty(out, &sidecar)?;
    Ok(())
}

/// Write a light-cone density as one GFN1 file plus a JSON sidecar.
pub fn save_lc(msd: &MassShellDensityLC, dir: &std::path::Path, stem: &str) -> Result<()> {
    let fb = format!("{stem}.b.gfn");
    crate::grids_io::write_gfn(&msd.sample_b()?, dir.join(&fb))?;
    let closed_form = match &msd.rep {
        LcRep::Spec(b) => serde_json::to_value(b).ok(),
        LcRep::Scaled(_) => None,
    };
    let sidecar = DensitySidecar {
        representation: "lc-single".into(),
        m: msd.params.m,
        n: msd.params.n,
        files: vec![fb],
        closed_form,
    };
    let out = std::fs::File::create(dir.join(format!("{stem}.json")))?;
    serde_json::to_writer_pretty(out, &sidecar)?;
    Ok(())
}

/// Gaussian Cauchy data used by tests and the CLI defaults.
pub fn gaussian_cauchy_data(grid: &MomentumGrid, width: f64) -> Result<CauchyData> {
    let n = grid.params.n;
    let u0 = Density::spec(TestFunctionSpec::gaussian(n, width)?);
    let u1 = Density::spec(TestFunctionSpec::gauss_hermite(
        vec![0.0; n],
        width * 1.2,
        {
            let mut poly = vec![0; n];
            poly[n - 1] = 1;
            poly
        },
    )?);
    CauchyData::new(u0, u1, grid.clone(), grid.params)
}

/// Check that the sampled values of `got` match `want` in relative sup norm.
pub fn rel_sup_error(got: &[Complex64], want: &[Complex64]) -> f64 {
    let scale = want.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return got.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids_io::sample as sample_spec;
    use crate::testfn::Spec;
    use approx::assert_relative_eq;

    fn params(n: usize) -> ModelParams {
        ModelParams::new(1.0, n).unwrap()
    }

    fn m_grid(n: usize) -> MomentumGrid {
        MomentumGrid::minkowski_momentum(params(n), 0.25, 64).unwrap()
    }

    fn lc_grid(n: usize) -> MomentumGrid {
        MomentumGrid::lc_momentum(params(n), 0.25, 64).unwrap()
    }

    #[test]
    fn from_cauchy_formulas() {
        let grid = m_grid(1);
        // û₁ = 0 ⇒ a₀ = a₁ = 2πω û₀
        let data = CauchyData::new(
            Density::spec(Spec::gaussian(1, 1.0).unwrap()),
            Density::constant(0.0),
            grid.clone(),
            params(1),
        )
        .unwrap();
        let msd = from_cauchy(&data).unwrap();
        let a0 = msd.sample_a0().unwrap();
        let a1 = msd.sample_a1().unwrap();
        for (flat, (x, y)) in a0.values().iter().zip(a1.values()).enumerate() {
            let p = grid.node_coords(flat);
            let w = omega_of(&p, 1.0);
            let expect = 2.0 * PI * w * (-p[0] * p[0] / 2.0).exp();
            assert_relative_eq!(x.re, expect, max_relative = 1e-13);
            assert_eq!(x, y);
        }
    }

    #[test]
    fn from_cauchy_pauli_jordan_constants() {
        // û₀ = 0, û₁ = 1 ⇒ a₀ = 2πi, a₁ = −2πi
        let data = CauchyData::new(
            Density::constant(0.0),
            Density::constant(1.0),
            m_grid(1),
            params(1),
        )
        .unwrap();
        let msd = from_cauchy(&data).unwrap();
        for p in [[0.3], [-2.0], [5.5]] {
            let a0 = msd.a0.eval(&p).unwrap();
            let a1 = msd.a1.eval(&p).unwrap();
            assert_relative_eq!(a0.im, 2.0 * PI, max_relative = 1e-15);
            assert_relative_eq!(a0.re, 0.0, epsilon = 1e-15);
            assert_relative_eq!(a1.im, -2.0 * PI, max_relative = 1e-15);
        }
    }

    #[test]
    fn cauchy_reconstruction_is_algebraic_inverse() {
        let grid = m_grid(1);
        let data = gaussian_cauchy_data(&grid, 1.0).unwrap();
        let msd = from_cauchy(&data).unwrap();
        let u0 = data.u0_hat.sample_on(&grid).unwrap();
        let mut worst = 0.0f64;
        for flat in 0..grid.len() {
            let p = grid.node_coords(flat);
            let w = omega_of(&p, 1.0);
            let rec = (msd.a0.eval(&p).unwrap() + msd.a1.eval(&p).unwrap()) / (4.0 * PI * w);
            worst = worst.max((rec - u0.values()[flat]).norm());
        }
        assert!(worst <= 1e-14, "reconstruction error {worst}");
    }

    #[test]
    fn split_parts_sum_bitwise() {
        let grid = lc_grid(1);
        let b = sample_spec(&Spec::constant(1.0, 1), &grid).unwrap();
        let msd = MassShellDensityLC::from_b_grid(b).unwrap();
        let (plus, minus) = split_pm(&msd).unwrap();
        let u = msd.scaled_values().unwrap();
        let up = plus.scaled_values().unwrap();
        let um = minus.scaled_values().unwrap();
        for (flat, v) in u.iter().enumerate() {
            let s = up[flat] + um[flat];
            assert_eq!(s.re.to_bits(), v.re.to_bits());
            assert_eq!(s.im.to_bits(), v.im.to_bits());
            let p = grid.node_coords(flat);
            if p[0] > 0.0 {
                assert_eq!(um[flat], Complex64::new(0.0, 0.0));
            } else {
                assert_eq!(up[flat], Complex64::new(0.0, 0.0));
            }
        }
        // b constant 1: the plus part is 1 exactly on p⁺ > 0 nodes
        let bp = plus.sample_b().unwrap();
        for (flat, v) in bp.values().iter().enumerate() {
            let p = grid.node_coords(flat);
            if p[0] > 0.0 {
                assert_relative_eq!(v.re, 1.0, max_relative = 1e-15);
            } else {
                assert_eq!(*v, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn split_odd_density_mirrors() {
        let grid = lc_grid(1);
        // b odd in p⁺
        let b = GridFunction::fill(grid.clone(), |x| Complex64::new(x[0], 0.0)).unwrap();
        let msd = MassShellDensityLC::from_b_grid(b).unwrap();
        let (plus, minus) = split_pm(&msd).unwrap();
        let bp = plus.sample_b().unwrap();
        let bm = minus.sample_b().unwrap();
        // mirrored nodes: flat index j and count−1−j have opposite p⁺
        let count = grid.axes[0].count;
        for j in 0..count {
            let mirror = count - 1 - j;
            let p = grid.node_coords(j)[0];
            if p > 0.0 {
                assert_relative_eq!(
                    bp.values()[j].re,
                    -bm.values()[mirror].re,
                    max_relative = 1e-14
                );
            }
        }
    }

    #[test]
    fn pauli_jordan_transport_to_lc() {
        // a₀ = 2πi, a₁ = −2πi ⇒ b = 2πi ε(p⁺), and b/(4π|p⁺|) = i/(2p⁺).
        let msd = MassShellDensityM::new(
            Density::constant(Complex64::new(0.0, 2.0 * PI)),
            Density::constant(Complex64::new(0.0, -2.0 * PI)),
            m_grid(1),
            params(1),
        )
        .unwrap();
        let lc = lc_from_m(&msd, &lc_grid(1)).unwrap();
        let b = lc.sample_b().unwrap();
        let u = lc.scaled_values().unwrap();
        for (flat, v) in b.values().iter().enumerate() {
            let p = lc.grid.node_coords(flat)[0];
            let eps = if p > 0.0 { 1.0 } else { -1.0 };
            assert_relative_eq!(v.im, 2.0 * PI * eps, max_relative = 1e-14);
            assert_relative_eq!(u[flat].im, 1.0 / (2.0 * p), max_relative = 1e-14);
        }
    }

    #[test]
    fn transport_round_trip_spec_form() {
        let grid = m_grid(1);
        let data = gaussian_cauchy_data(&grid, 1.0).unwrap();
        let msd = from_cauchy(&data).unwrap();
        let lc = lc_from_m(&msd, &lc_grid(1)).unwrap();
        let back = m_from_lc(&lc, &grid).unwrap();
        let orig0 = msd.sample_a0().unwrap();
        let back0 = back.sample_a0().unwrap();
        let err = rel_sup_error(back0.values(), orig0.values());
        assert!(err <= 1e-10, "round trip error {err}");
        let orig1 = msd.sample_a1().unwrap();
        let back1 = back.sample_a1().unwrap();
        let err = rel_sup_error(back1.values(), orig1.values());
        assert!(err <= 1e-10, "round trip error {err}");
    }

    #[test]
    fn transport_of_constants_is_identity() {
        let lc = MassShellDensityLC::from_b_density(
            Density::constant(3.5),
            lc_grid(1),
            params(1),
        )
        .unwrap();
        let m = m_from_lc(&lc, &m_grid(1)).unwrap();
        assert_eq!(m.a0.eval(&[0.7]).unwrap(), Complex64::new(3.5, 0.0));
        assert_eq!(m.a1.eval(&[-1.3]).unwrap(), Complex64::new(3.5, 0.0));
    }

    #[test]
    fn zero_density_transports_to_zero() {
        let msd = MassShellDensityM::new(
            Density::constant(0.0),
            Density::constant(0.0),
            m_grid(1),
            params(1),
        )
        .unwrap();
        let lc = lc_from_m(&msd, &lc_grid(1)).unwrap();
        assert!(lc.sample_b().unwrap().values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn division_residual_vanishes_on_shell() {
        let grid = m_grid(1);
        let data = gaussian_cauchy_data(&grid, 1.0).unwrap();
        let msd = from_cauchy(&data).unwrap();
        let f = Spec::gaussian(2, 1.0).unwrap();
        let opts = QuadOpts::with_level(5);
        let r = division_residual_m(&msd, &f, 0.0, &opts).unwrap();
        assert!(r.value.norm() <= 1e-12, "residual {}", r.value.norm());

        // scaling f by 1e6 stays at the (scaled) rounding floor
        let f_big = f.clone().scaled(1e6);
        let r = division_residual_m(&msd, &f_big, 0.0, &opts).unwrap();
        assert!(r.value.norm() <= 1e-6, "scaled residual {}", r.value.norm());

        // shifting m² in the factor only must NOT vanish: it equals
        // −0.1 × (plain pairing), which is an independent quadrature here.
        let r = division_residual_m(&msd, &f, 0.1, &opts).unwrap();
        let a0 = msd.a0.closure();
        let a1 = msd.a1.closure();
        let fc = |x: &[f64]| f.eval_unchecked(x);
        let p0 = pair_minkowski_delta(&a0, &fc, SqueezeSign::Plus, &msd.params, &opts).unwrap();
        let p1 = pair_minkowski_delta(&a1, &fc, SqueezeSign::Minus, &msd.params, &opts).unwrap();
        let expect = -0.1 * (p0.value + p1.value);
        assert!(r.value.norm() > 1e-3, "shifted residual vacuous");
        assert_relative_eq!(r.value.re, expect.re, max_relative = 1e-9);
        assert_relative_eq!(r.value.im, expect.im, epsilon = 1e-12);
    }

    #[test]
    fn lc_division_residual_vanishes() {
        let lc = MassShellDensityLC::from_b_density(
            Density::spec(Spec::pullback(Spec::gaussian(1, 1.0).unwrap(), SqueezeSign::Plus, 1.0).unwrap()),
            lc_grid(1),
            params(1),
        )
        .unwrap();
        let f = Spec::gaussian(2, 1.0).unwrap();
        let r = division_residual_lc(&lc, &f, 0.0, &QuadOpts::with_level(5)).unwrap();
        assert!(r.value.norm() <= 1e-12, "residual {}", r.value.norm());
        let r = division_residual_lc(&lc, &f, 0.1, &QuadOpts::with_level(5)).unwrap();
        assert!(r.value.norm() > 1e-4);
    }

    #[test]
    fn characteristic_data_reps() {
        let grid = lc_grid(1);
        let u = Density::InvPPlus {
            value: Complex64::new(0.0, 0.5),
        };
        let data = CharacteristicData::from_density(u, grid.clone(), params(1)).unwrap();
        let gf = data.grid_values().unwrap();
        for (flat, v) in gf.values().iter().enumerate() {
            let p = grid.node_coords(flat)[0];
            assert_relative_eq!(v.im, 0.5 / p, max_relative = 1e-15);
        }
        let reload = CharacteristicData::from_grid(gf.clone()).unwrap();
        assert_eq!(reload.grid_values().unwrap().values(), gf.values());
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let lc = MassShellDensityLC::from_b_density(
            Density::SignPPlus {
                value: Complex64::new(0.0, 2.0 * PI),
            },
            lc_grid(1),
            params(1),
        )
        .unwrap();
        save_lc(&lc, dir.path(), "pj").unwrap();
        let sidecar: DensitySidecar =
            serde_json::from_reader(std::fs::File::open(dir.path().join("pj.json")).unwrap())
                .unwrap();
        assert_eq!(sidecar.representation, "lc-single");
        assert!(sidecar.closed_form.is_some());
        let b: Density = serde_json::from_value(sidecar.closed_form.unwrap()).unwrap();
        assert_eq!(
            b.eval(&[2.0]).unwrap(),
            Complex64::new(0.0, 2.0 * PI)
        );
        let gf = crate::grids_io::read_gfn(dir.path().join("pj.b.gfn")).unwrap();
        assert_eq!(gf.grid().kind, GridKind::LcMomentum);
    }

    #[test]
    fn injectivity_gram_matrix_has_full_rank() {
        // Pairings against 20 probes separate a small density family: the
        // Gram matrix has smallest singular value > 1e-6 of the largest.
        let pr = params(1);
        let opts = QuadOpts::with_level(4);
        let family: Vec<Spec> = vec![
            Spec::gaussian(1, 0.8).unwrap(),
            Spec::gaussian(1, 1.3).unwrap(),
            Spec::gauss_hermite(vec![0.0], 1.0, vec![1]).unwrap(),
            Spec::gauss_hermite(vec![0.5], 1.0, vec![0]).unwrap(),
            Spec::gauss_hermite(vec![-0.7], 0.9, vec![2]).unwrap(),
        ];
        let mut probes = Vec::new();
        for i in 0..20 {
            let c0 = -1.0 + 0.1 * i as f64;
            let c1 = 0.8 - 0.08 * i as f64;
            let w = 0.7 + 0.03 * i as f64;
            probes.push(Spec::gauss_hermite(vec![c0, c1], w, vec![0, i as u32 % 2]).unwrap());
        }
        let mut gram = nalgebra::DMatrix::<f64>::zeros(family.len(), probes.len());
        for (i, a) in family.iter().enumerate() {
            let ac = |p: &[f64]| a.eval_unchecked(p);
            for (j, f) in probes.iter().enumerate() {
                let fc = |x: &[f64]| f.eval_unchecked(x);
                let v = pair_minkowski_delta(&ac, &fc, SqueezeSign::Plus, &pr, &opts)
                    .unwrap()
                    .value;
                gram[(i, j)] = v.re;
            }
        }
        let svd = gram.svd(false, false);
        let max = svd.singular_values.max();
        let min = svd.singular_values.min();
        assert!(
            min > 1e-6 * max,
            "family not separated: sigma_min/sigma_max = {}",
            min / max
        );
    }
}
