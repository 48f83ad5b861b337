//! Numerical certificates for squeezed-space membership and the
//! multiplicator criterion.
//!
//! Membership of a function in the squeezed class is probed by the weighted
//! sup-seminorms |(p⁺)ᵏ p⊥^β ∂^α f| and the equivalent
//! ((1+|𝐩̃|)/|p⁺|)^N form, evaluated over grids that refine toward p⁺ = 0.
//! All results are finite-order certificates over a finite refinement
//! ladder: a quantity "passes" when it stays stable (< 2× growth) across
//! nested refinements, and a divergence is flagged by its growth rate.
//! Refinement is by trisection, which keeps every old node, so sups are
//! taken over supersets and are monotone by construction.

use crate::error::{Error, Result};
use crate::grids_io::MomentumGrid;
use crate::kinematics::{lc_omega_of, ModelParams, SqueezeSign};
use crate::testfn::TestFunctionSpec;
use rayon::prelude::*;

/// Growth factor below which a ladder is considered stable.
pub const STABLE_GROWTH: f64 = 2.0;

/// Largest certified derivative order.
pub const MAX_DERIV_ORDER: u32 = 2;

fn check_alpha(alpha: &[u32]) -> Result<()> {
    let total: u32 = alpha.iter().sum();
    if total > MAX_DERIV_ORDER {
        return Err(Error::DerivativeOrder(total as usize));
    }
    Ok(())
}

/// Nested refinement ladder: the grid itself followed by `levels − 1`
/// trisections.
pub fn refinement_ladder(grid: &MomentumGrid, levels: usize) -> Vec<MomentumGrid> {
    let mut out = Vec::with_capacity(levels);
    let mut g = grid.clone();
    for _ in 0..levels {
        out.push(g.clone());
        g = g.trisect();
    }
    out
}

fn sup_over_grid<F>(grid: &MomentumGrid, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let n = grid.dim();
    let sup = (0..grid.len())
        .into_par_iter()
        .try_fold(
            || 0.0f64,
            |acc, flat| {
                let mut coords = vec![0.0; n];
                grid.coords_into(flat, &mut coords);
                let v = f(&coords)?;
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("seminorm weight at {coords:?}")));
                }
                Ok(acc.max(v))
            },
        )
        .try_reduce(|| 0.0f64, |a, b| Ok(a.max(b)))?;
    Ok(sup)
}

/// Weighted sup-seminorm sup |(p⁺)ᵏ p⊥^β ∂^α f| over the grid nodes.
/// `beta` has one entry per transverse axis; |α| ≤ 2.
pub fn squeezed_seminorm(
    f: &TestFunctionSpec,
    k: i32,
    beta: &[u32],
    alpha: &[u32],
    grid: &MomentumGrid,
) -> Result<f64> {
    let n = grid.dim();
    if beta.len() != n - 1 || alpha.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha.len().max(beta.len() + 1),
        });
    }
    check_alpha(alpha)?;
    sup_over_grid(grid, |pt| {
        let d = f.deriv(alpha, pt)?;
        let mut w = pt[0].powi(k);
        for (i, &b) in beta.iter().enumerate() {
            if b > 0 {
                w *= pt[1 + i].powi(b as i32);
            }
        }
        Ok((w * d.norm()).abs())
    })
}

/// The equivalent weight form: sup ((1+|𝐩̃|)/|p⁺|)^N |∂^α f|.
pub fn squeezed_seminorm_nform(
    f: &TestFunctionSpec,
    n_exp: u32,
    alpha: &[u32],
    grid: &MomentumGrid,
) -> Result<f64> {
    check_alpha(alpha)?;
    sup_over_grid(grid, |pt| {
        let d = f.deriv(alpha, pt)?;
        let norm: f64 = pt.iter().map(|x| x * x).sum::<f64>().sqrt();
        let w = ((1.0 + norm) / pt[0].abs()).powi(n_exp as i32);
        Ok(w * d.norm())
    })
}

/// Smooth functions on {p⁺ ≠ 0} whose pointwise products preserve the
/// squeezed class, with exact derivatives up to order 2.
#[derive(Debug, Clone, Copy)]
pub enum Multiplicator {
    /// Θ(±p⁺)
    Heaviside(SqueezeSign),
    /// |p⁺|^k
    AbsPPlusPow(i32),
    /// 1/p⁺
    InvPPlus,
    /// ω̃(𝐩̃) = (p⊥² + m²)/(2p⁺)
    LcEnergy(ModelParams),
}

impl Multiplicator {
    /// |∂^α M| at a point with p⁺ ≠ 0.
    pub fn deriv_abs(&self, alpha: &[u32], pt: &[f64]) -> Result<f64> {
        check_alpha(alpha)?;
        let p = pt[0];
        if p == 0.0 {
            return Err(Error::PPlusZero);
        }
        let total: u32 = alpha.iter().sum();
        let a0 = alpha[0];
        let perp_order = total - a0;
        Ok(match self {
            Multiplicator::Heaviside(sign) => {
                if total > 0 {
                    0.0
                } else if p.signum() == sign.signum() {
                    1.0
                } else {
                    0.0
                }
            }
            Multiplicator::AbsPPlusPow(k) => {
                if perp_order > 0 {
                    0.0
                } else {
                    let mut c = 1.0f64;
                    for j in 0..a0 {
                        c *= (*k as f64) - j as f64;
                    }
                    (c * p.abs().powi(k - a0 as i32)).abs()
                }
            }
            Multiplicator::InvPPlus => {
                if perp_order > 0 {
                    0.0
                } else {
                    let fact: f64 = (1..=a0).map(|j| j as f64).product();
                    fact / p.abs().powi(1 + a0 as i32)
                }
            }
            Multiplicator::LcEnergy(params) => {
                let m = params.m;
                let w = lc_omega_of(p, &pt[1..], m);
                match (a0, perp_order) {
                    (0, 0) => w.abs(),
                    (1, 0) => (w / p).abs(),
                    (2, 0) => (2.0 * w / (p * p)).abs(),
                    (0, 1) => {
                        let i = alpha[1..].iter().position(|&b| b > 0).unwrap();
                        (pt[1 + i] / p).abs()
                    }
                    (1, 1) => {
                        let i = alpha[1..].iter().position(|&b| b > 0).unwrap();
                        (pt[1 + i] / (p * p)).abs()
                    }
                    (0, 2) => {
                        // ∂²/∂p⊥i∂p⊥j ω̃ = δ_ij/p⁺
                        if alpha[1..].iter().any(|&b| b == 2) {
                            (1.0 / p).abs()
                        } else {
                            0.0
                        }
                    }
                    _ => unreachable!("|alpha| <= 2"),
                }
            }
        })
    }
}

/// Outcome of a multiplicator-bound check.
#[derive(Debug, Clone)]
pub struct MultiplicatorReport {
    pub pass: bool,
    pub max_ratio: f64,
    pub worst_node: Vec<f64>,
}

/// Verify |∂^α M| ≤ C·((1+|𝐩̃|)/|p⁺|)^N at every grid node; reports the
/// worst ratio and where it occurs.
pub fn multiplicator_check(
    m: &Multiplicator,
    alpha: &[u32],
    n_exp: u32,
    c: f64,
    grid: &MomentumGrid,
) -> Result<MultiplicatorReport> {
    check_alpha(alpha)?;
    let n = grid.dim();
    let mut max_ratio = 0.0f64;
    let mut worst = vec![0.0; n];
    let mut coords = vec![0.0; n];
    for flat in 0..grid.len() {
        grid.coords_into(flat, &mut coords);
        let lhs = m.deriv_abs(alpha, &coords)?;
        let norm: f64 = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rhs = c * ((1.0 + norm) / coords[0].abs()).powi(n_exp as i32);
        let ratio = lhs / rhs;
        if ratio > max_ratio {
            max_ratio = ratio;
            worst.copy_from_slice(&coords);
        }
    }
    Ok(MultiplicatorReport {
        pass: max_ratio <= 1.0,
        max_ratio,
        worst_node: worst,
    })
}

/// Ladder outcome for one certified quantity across nested refinements.
///
/// A diverging weight grows by at least the refinement factor at *every*
/// level (the sup lives at the node nearest p⁺ = 0), while a bounded one
/// converges once the base grid resolves its interior peak.  Stability is
/// therefore judged at the final refinement.
#[derive(Debug, Clone)]
pub struct LadderReport {
    /// The measured quantity per ladder level.
    pub metrics: Vec<f64>,
    /// Consecutive growth ratios metrics[i+1]/metrics[i].
    pub growth: Vec<f64>,
    /// Stable: the final refinement grows by less than [`STABLE_GROWTH`].
    pub pass: bool,
}

fn ladder_report(metrics: Vec<f64>) -> LadderReport {
    let growth: Vec<f64> = metrics
        .windows(2)
        .map(|w| if w[0] == 0.0 { 1.0 } else { w[1] / w[0] })
        .collect();
    let pass = growth.last().is_none_or(|&g| g < STABLE_GROWTH);
    LadderReport { metrics, growth, pass }
}

/// Divisibility certificate: f/(p⁺)ᵏ stays bounded, with bounded
/// derivatives up to order 2, across the refinement ladder.
/// The metric per level is max over |α| ≤ 2 of sup |∂^α (f/(p⁺)ᵏ)|.
pub fn filtration_check(
    f: &TestFunctionSpec,
    k: u32,
    grid: &MomentumGrid,
    levels: usize,
) -> Result<LadderReport> {
    let n = grid.dim();
    let alphas = multi_indices(n, MAX_DERIV_ORDER);
    let mut metrics = Vec::with_capacity(levels);
    for g in refinement_ladder(grid, levels) {
        let mut level_max = 0.0f64;
        for alpha in &alphas {
            // Leibniz in the p⁺ factor g = (p⁺)^{−k}:
            // ∂^α (f·g) = Σ_j C(α₀, j) ∂^{α − j e₀} f · g^{(j)}.
            let sup = sup_over_grid(&g, |pt| {
                let p = pt[0];
                let a0 = alpha[0];
                let mut acc = num_complex::Complex64::new(0.0, 0.0);
                for j in 0..=a0 {
                    let binom = match (a0, j) {
                        (_, 0) => 1.0,
                        (a, j) if a == j => 1.0,
                        (2, 1) => 2.0,
                        _ => 1.0,
                    };
                    let mut rest = alpha.clone();
                    rest[0] -= j;
                    let df = f.deriv(&rest, pt)?;
                    let mut gj = p.powi(-(k as i32 + j as i32));
                    for l in 0..j {
                        gj *= -((k + l) as f64);
                    }
                    acc += binom * df * gj;
                }
                Ok(acc.norm())
            })?;
            level_max = level_max.max(sup);
        }
        metrics.push(level_max);
    }
    Ok(ladder_report(metrics))
}

/// One row of a squeezed certificate table.
#[derive(Debug, Clone)]
pub struct CertificateRow {
    pub k: i32,
    pub beta: Vec<u32>,
    pub alpha: Vec<u32>,
    pub report: LadderReport,
}

/// All multi-indices over `n` axes with total order ≤ `max_total`.
pub fn multi_indices(n: usize, max_total: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0u32; n]];
    for total in 1..=max_total {
        let mut stack = vec![(vec![0u32; n], 0usize, total)];
        while let Some((cur, axis, left)) = stack.pop() {
            if axis == n {
                if left == 0 {
                    out.push(cur);
                }
                continue;
            }
            for take in 0..=left {
                let mut next = cur.clone();
                next[axis] = take;
                stack.push((next, axis + 1, left - take));
            }
        }
    }
    out
}

/// Full certificate sweep: the weighted seminorm ladders for every
/// k ∈ [k_min, k_max], |β| ≤ `max_beta`, |α| ≤ `max_alpha`.
///
/// Derivatives are evaluated once per (node, α) and reused across the
/// (k, β) weight sweep.  The base grid must resolve the certified
/// quantities; the nested refinements then only probe toward p⁺ = 0.
pub fn squeezed_certificate(
    f: &TestFunctionSpec,
    k_range: std::ops::RangeInclusive<i32>,
    max_beta: u32,
    max_alpha: u32,
    grid: &MomentumGrid,
    levels: usize,
) -> Result<Vec<CertificateRow>> {
    let n = grid.dim();
    let ladder = refinement_ladder(grid, levels);
    let betas = multi_indices(n - 1, max_beta.min(MAX_DERIV_ORDER));
    let alphas = multi_indices(n, max_alpha.min(MAX_DERIV_ORDER));
    let ks: Vec<i32> = k_range.collect();

    // metrics[(k, beta, alpha)] per level
    let mut metrics = vec![vec![0.0f64; ladder.len()]; ks.len() * betas.len() * alphas.len()];
    for (level, g) in ladder.iter().enumerate() {
        for (ai, alpha) in alphas.iter().enumerate() {
            // |∂^α f| at every node, in parallel
            let derivs: Vec<f64> = (0..g.len())
                .into_par_iter()
                .map(|flat| {
                    let mut coords = vec![0.0; n];
                    g.coords_into(flat, &mut coords);
                    f.deriv(alpha, &coords).map(|v| v.norm())
                })
                .collect::<Result<Vec<_>>>()?;
            let mut coords = vec![0.0; n];
            for (flat, d) in derivs.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                g.coords_into(flat, &mut coords);
                for (ki, &k) in ks.iter().enumerate() {
                    let wk = coords[0].powi(k).abs();
                    for (bi, beta) in betas.iter().enumerate() {
                        let mut w = wk;
                        for (i, &b) in beta.iter().enumerate() {
                            if b > 0 {
                                w *= coords[1 + i].powi(b as i32).abs();
                            }
                        }
                        let v = w * d;
                        if !v.is_finite() {
                            return Err(Error::NonFinite(format!(
                                "seminorm weight k={k} at {coords:?}"
                            )));
                        }
                        let row = (ki * betas.len() + bi) * alphas.len() + ai;
                        if v > metrics[row][level] {
                            metrics[row][level] = v;
                        }
                    }
                }
            }
        }
    }

    let mut rows = Vec::with_capacity(metrics.len());
    for (ki, &k) in ks.iter().enumerate() {
        for (bi, beta) in betas.iter().enumerate() {
            for (ai, alpha) in alphas.iter().enumerate() {
                let row = (ki * betas.len() + bi) * alphas.len() + ai;
                rows.push(CertificateRow {
                    k,
                    beta: beta.clone(),
                    alpha: alpha.clone(),
                    report: ladder_report(std::mem::take(&mut metrics[row])),
                });
            }
        }
    }
    Ok(rows)
}
