//! Uniform momentum/position grids, complex grid functions, the GFN1 file
//! format and CSV export.
//!
//! GFN1 layout: the ASCII line `GFN1`, one line of JSON metadata
//! (`{version, kind, m, n, axes}`), then the raw payload of little-endian
//! f64 pairs (re, im), row-major with the last axis fastest.

use crate::error::{Error, Result};
use crate::kinematics::ModelParams;
use crate::testfn::TestFunctionSpec;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Node placement on an axis. A half-step axis has nodes offset by half a
/// step so that coordinate 0 is never sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisOffset {
    #[serde(rename = "centered")]
    Centered,
    #[serde(rename = "half-step")]
    HalfStep,
}

/// One uniform axis: node j sits at `min + j·step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub min: f64,
    pub step: f64,
    pub count: usize,
    pub offset: AxisOffset,
}

impl AxisSpec {
    /// Centered axis with nodes (j − count/2)·step, including 0.
    pub fn centered(step: f64, count: usize) -> Result<Self> {
        let ax = Self {
            min: -step * ((count / 2) as f64),
            step,
            count,
            offset: AxisOffset::Centered,
        };
        ax.validate()?;
        Ok(ax)
    }

    /// Half-step axis with nodes (j − count/2 + 1/2)·step; requires an even
    /// count so no node lands on 0.
    pub fn half_step(step: f64, count: usize) -> Result<Self> {
        if count % 2 != 0 {
            return Err(Error::InvalidAxis(format!(
                "half-step axis needs an even count, got {count}"
            )));
        }
        let ax = Self {
            min: step * (0.5 - (count as f64) / 2.0),
            step,
            count,
            offset: AxisOffset::HalfStep,
        };
        ax.validate()?;
        Ok(ax)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidAxis(format!("step must be > 0, got {}", self.step)));
        }
        if self.count < 2 {
            return Err(Error::InvalidAxis(format!("count must be >= 2, got {}", self.count)));
        }
        if !self.min.is_finite() {
            return Err(Error::InvalidAxis("min must be finite".into()));
        }
        if self.offset == AxisOffset::HalfStep && self.has_zero_node() {
            return Err(Error::InvalidAxis(
                "half-step axis must not contain a node at 0".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        self.min + self.step * j as f64
    }

    pub fn max(&self) -> f64 {
        self.node(self.count - 1)
    }

    pub fn has_zero_node(&self) -> bool {
        (0..self.count).any(|j| self.node(j).abs() < 0.25 * self.step)
    }

    /// Nested refinement: step/3 with old nodes preserved.
    pub fn trisect(&self) -> AxisSpec {
        match self.offset {
            AxisOffset::Centered => AxisSpec {
                min: self.min,
                step: self.step / 3.0,
                count: 3 * self.count - 2,
                offset: AxisOffset::Centered,
            },
            AxisOffset::HalfStep => AxisSpec {
                min: (self.step / 3.0) * (0.5 - (3 * self.count) as f64 / 2.0),
                step: self.step / 3.0,
                count: 3 * self.count,
                offset: AxisOffset::HalfStep,
            },
        }
    }

    /// Reciprocal axis for discrete Fourier transforms:
    /// step' = 2π/(step·count), same count, requested offset.
    pub fn reciprocal(&self, offset: AxisOffset) -> Result<AxisSpec> {
        let step = 2.0 * std::f64::consts::PI / (self.step * self.count as f64);
        match offset {
            AxisOffset::Centered => Ok(AxisSpec {
                min: -step * ((self.count / 2) as f64),
                step,
                count: self.count,
                offset,
            }),
            AxisOffset::HalfStep => {
                if self.count % 2 != 0 {
                    return Err(Error::InvalidAxis(
                        "half-step reciprocal axis needs an even count".into(),
                    ));
                }
                Ok(AxisSpec {
                    min: step * (0.5 - (self.count as f64) / 2.0),
                    step,
                    count: self.count,
                    offset,
                })
            }
        }
    }
}

/// What the grid coordinates mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    #[serde(rename = "minkowski-momentum")]
    MinkowskiMomentum,
    #[serde(rename = "lc-momentum")]
    LcMomentum,
    #[serde(rename = "minkowski-position")]
    MinkowskiPosition,
    #[serde(rename = "lc-position")]
    LcPosition,
}

impl GridKind {
    pub fn is_momentum(self) -> bool {
        matches!(self, GridKind::MinkowskiMomentum | GridKind::LcMomentum)
    }

    pub fn is_lightcone(self) -> bool {
        matches!(self, GridKind::LcMomentum | GridKind::LcPosition)
    }

    /// Column names for CSV export. Light-cone momentum axes are
    /// (p⁺, p⊥…); light-cone position axes are (x⊥…, x⁻).
    fn coord_names(self, n: usize) -> Vec<String> {
        match self {
            GridKind::MinkowskiMomentum => (1..=n).map(|i| format!("p{i}")).collect(),
            GridKind::MinkowskiPosition => (1..=n).map(|i| format!("x{i}")).collect(),
            GridKind::LcMomentum => {
                let mut v = vec!["p_plus".to_string()];
                v.extend((1..n).map(|i| format!("p_perp{i}")));
                v
            }
            GridKind::LcPosition => {
                let mut v: Vec<String> = (1..n).map(|i| format!("x_perp{i}")).collect();
                v.push("x_minus".to_string());
                v
            }
        }
    }
}

/// A uniform tensor grid of n axes.
///
/// Light-cone momentum grids must put the p⁺ axis first with a half-step
/// offset so that p⁺ = 0 is never sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    pub params: ModelParams,
    pub axes: Vec<AxisSpec>,
    pub kind: GridKind,
}

impl MomentumGrid {
    pub fn new(params: ModelParams, axes: Vec<AxisSpec>, kind: GridKind) -> Result<Self> {
        let grid = Self { params, axes, kind };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.axes.len() != self.params.n {
            return Err(Error::DimensionMismatch {
                expected: self.params.n,
                got: self.axes.len(),
            });
        }
        for ax in &self.axes {
            ax.validate()?;
        }
        if self.kind == GridKind::LcMomentum && self.axes[0].offset != AxisOffset::HalfStep {
            return Err(Error::InvalidAxis(
                "lc-momentum grid requires a half-step p+ axis".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of the node with flat index `flat` (row-major, last axis
    /// fastest), written into `coords`.
    #[inline]
    pub fn coords_into(&self, flat: usize, coords: &mut [f64]) {
        debug_assert_eq!(coords.len(), self.axes.len());
        let mut rem = flat;
        for (i, ax) in self.axes.iter().enumerate().rev() {
            coords[i] = ax.node(rem % ax.count);
            rem /= ax.count;
        }
    }

    pub fn node_coords(&self, flat: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        self.coords_into(flat, &mut c);
        c
    }

    /// Nested refinement of every axis (step/3, nodes preserved).
    pub fn trisect(&self) -> MomentumGrid {
        MomentumGrid {
            params: self.params,
            axes: self.axes.iter().map(|a| a.trisect()).collect(),
            kind: self.kind,
        }
    }

    /// Convenience constructor for a Minkowski momentum grid with centered
    /// axes of the given step and count.
    pub fn minkowski_momentum(params: ModelParams, step: f64, count: usize) -> Result<Self> {
        let axes = (0..params.n)
            .map(|_| AxisSpec::centered(step, count))
            .collect::<Result<Vec<_>>>()?;
        Self::new(params, axes, GridKind::MinkowskiMomentum)
    }

    /// Light-cone momentum grid: half-step p⁺ axis first, centered
    /// transverse axes.
    pub fn lc_momentum(params: ModelParams, step: f64, count: usize) -> Result<Self> {
        let mut axes = vec![AxisSpec::half_step(step, count)?];
        for _ in 1..params.n {
            axes.push(AxisSpec::centered(step, count)?);
        }
        Self::new(params, axes, GridKind::LcMomentum)
    }
}

/// Complex samples on a grid, row-major with the last axis fastest.
/// Values are immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: MomentumGrid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: MomentumGrid, values: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "value count {} != node count {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite(format!("value at flat index {bad}")));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Fill a grid deterministically from a pointwise function. Values are
    /// computed in parallel but depend only on the node index, so the result
    /// is bit-identical for any worker count.
    pub fn fill(grid: MomentumGrid, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Result<Self> {
        grid.validate()?;
        let n = grid.dim();
        let total = grid.len();
        let mut values = vec![Complex64::new(0.0, 0.0); total];
        values
            .par_iter_mut()
            .enumerate()
            .for_each_init(
                || vec![0.0f64; n],
                |coords, (flat, slot)| {
                    grid.coords_into(flat, coords);
                    *slot = f(coords);
                },
            );
        Self::new(grid, values)
    }

    pub fn map(&self, f: impl Fn(&[f64], Complex64) -> Complex64 + Sync) -> Result<Self> {
        let grid = self.grid.clone();
        let n = grid.dim();
        let mut values = self.values.clone();
        values
            .par_iter_mut()
            .enumerate()
            .for_each_init(
                || vec![0.0f64; n],
                |coords, (flat, slot)| {
                    grid.coords_into(flat, coords);
                    *slot = f(coords, *slot);
                },
            );
        Self::new(grid, values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Separable cubic (4-point Lagrange) interpolation at an off-grid
    /// point. Queries outside the covered box are rejected, never
    /// extrapolated.
    pub fn interp_at(&self, x: &[f64]) -> Result<Complex64> {
        let n = self.grid.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        let mut bases = [0usize; crate::testfn::MAX_DIM];
        let mut weights = [[0.0f64; 4]; crate::testfn::MAX_DIM];
        for (i, ax) in self.grid.axes.iter().enumerate() {
            let lo = ax.min;
            let hi = ax.max();
            if x[i] < lo || x[i] > hi {
                return Err(Error::InterpOutOfRange { axis: i, coord: x[i], lo, hi });
            }
            let s = (x[i] - ax.min) / ax.step;
            let i1 = (s.floor() as isize).clamp(1, ax.count as isize - 3) as usize;
            let u = s - i1 as f64;
            bases[i] = i1 - 1;
            weights[i] = [
                -u * (u - 1.0) * (u - 2.0) / 6.0,
                (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
                -u * (u + 1.0) * (u - 2.0) / 2.0,
                u * (u + 1.0) * (u - 1.0) / 6.0,
            ];
        }
        let mut strides = [0usize; crate::testfn::MAX_DIM];
        let mut acc = 1usize;
        for i in (0..n).rev() {
            strides[i] = acc;
            acc *= self.grid.axes[i].count;
        }
        let mut out = Complex64::new(0.0, 0.0);
        let mut idx = [0usize; crate::testfn::MAX_DIM];
        loop {
            let mut w = 1.0;
            let mut flat = 0usize;
            for i in 0..n {
                w *= weights[i][idx[i]];
                flat += (bases[i] + idx[i]) * strides[i];
            }
            out += w * self.values[flat];
            // odometer over the 4^n stencil
            let mut i = n;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < 4 {
                    break;
                }
                idx[i] = 0;
            }
        }
    }
}

/// Pointwise evaluation of a closed-form spec at every grid node.
pub fn sample(spec: &TestFunctionSpec, grid: &MomentumGrid) -> Result<GridFunction> {
    if spec.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: spec.dim(),
        });
    }
    GridFunction::fill(grid.clone(), |x| spec.eval_unchecked(x))
}

#[derive(Serialize, Deserialize)]
struct GfnHeader {
    version: u32,
    kind: GridKind,
    m: f64,
    n: usize,
    axes: Vec<AxisSpec>,
}

const GFN_MAGIC: &[u8] = b"GFN1\n";

/// Write a grid function in the GFN1 format (bit-exact round trip).
pub fn write_gfn(gf: &GridFunction, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_gfn_to(gf, &mut file)
}

pub fn write_gfn_to(gf: &GridFunction, out: &mut impl Write) -> Result<()> {
    let header = GfnHeader {
        version: 1,
        kind: gf.grid.kind,
        m: gf.grid.params.m,
        n: gf.grid.params.n,
        axes: gf.grid.axes.clone(),
    };
    out.write_all(GFN_MAGIC)?;
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(gf.values.len() * 16);
    for v in &gf.values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Read a GFN1 file back. Rejects bad magic, version mismatches, invariant
/// violations (e.g. a centered p⁺ axis on an lc-momentum grid) and payload
/// length mismatches.
pub fn read_gfn(path: impl AsRef<Path>) -> Result<GridFunction> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_gfn_from(&mut file)
}

pub fn read_gfn_from(input: &mut impl Read) -> Result<GridFunction> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    if data.len() < GFN_MAGIC.len() || &data[..GFN_MAGIC.len()] != GFN_MAGIC {
        return Err(Error::Format("missing GFN1 magic header".into()));
    }
    let rest = &data[GFN_MAGIC.len()..];
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing JSON header line".into()))?;
    let header: GfnHeader = serde_json::from_slice(&rest[..nl])
        .map_err(|e| Error::Format(format!("bad JSON header: {e}")))?;
    if header.version != 1 {
        return Err(Error::Format(format!(
            "unsupported GFN version {}, expected 1",
            header.version
        )));
    }
    let params = ModelParams::new(header.m, header.n)?;
    let grid = MomentumGrid::new(params, header.axes, header.kind)?;
    let payload = &rest[nl + 1..];
    let expected = grid.len() * 16;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload length mismatch: expected {expected} bytes ({} nodes), got {}",
            grid.len(),
            payload.len()
        )));
    }
    let mut values = Vec::with_capacity(grid.len());
    for chunk in payload.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    GridFunction::new(grid, values)
}

/// CSV export: a metadata comment line, a column-name header, then one row
/// per node with coordinates and re/im at 17 significant digits.
pub fn to_csv(gf: &GridFunction, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_csv_to(gf, &mut file)
}

pub fn write_csv_to(gf: &GridFunction, out: &mut impl Write) -> Result<()> {
    let header = GfnHeader {
        version: 1,
        kind: gf.grid.kind,
        m: gf.grid.params.m,
        n: gf.grid.params.n,
        axes: gf.grid.axes.clone(),
    };
    writeln!(out, "# {}", serde_json::to_string(&header)?)?;
    let names = gf.grid.kind.coord_names(gf.grid.dim());
    writeln!(out, "{},re,im", names.join(","))?;
    let n = gf.grid.dim();
    let mut coords = vec![0.0; n];
    for (flat, v) in gf.values.iter().enumerate() {
        gf.grid.coords_into(flat, &mut coords);
        for c in &coords {
            write!(out, "{c:.16e},")?;
        }
        writeln!(out, "{:.16e},{:.16e}", v.re, v.im)?;
    }
    Ok(())
}

/// Re-parse a CSV written by [`to_csv`].
pub fn read_csv(path: impl AsRef<Path>) -> Result<GridFunction> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let meta = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| Error::Format("missing CSV metadata line".into()))?;
    let header: GfnHeader = serde_json::from_str(meta)?;
    let params = ModelParams::new(header.m, header.n)?;
    let grid = MomentumGrid::new(params, header.axes, header.kind)?;
    let _columns = lines
        .next()
        .ok_or_else(|| Error::Format("missing CSV column header".into()))?;
    let n = grid.dim();
    let mut values = Vec::with_capacity(grid.len());
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n + 2 {
            return Err(Error::Format(format!(
                "CSV line {}: expected {} fields, got {}",
                lineno + 3,
                n + 2,
                fields.len()
            )));
        }
        let re: f64 = fields[n]
            .parse()
            .map_err(|e| Error::Format(format!("CSV line {}: {e}", lineno + 3)))?;
        let im: f64 = fields[n + 1]
            .parse()
            .map_err(|e| Error::Format(format!("CSV line {}: {e}", lineno + 3)))?;
        values.push(Complex64::new(re, im));
    }
    GridFunction::new(grid, values)
}
