//! Independent finite-difference ground truth on truncated chambered domains.
//!
//! The solver discretizes the chambered domain on one uniform lattice,
//! eliminates Dirichlet nodes, and minimizes the five-point stencil energy
//! against a line source concentrated on a junction column:
//! `½ Σ_edges (u_a - u_b)² - h Σ_Γ γ_i u_i`. The normal equations are solved
//! by plain conjugate gradients to a relative residual of 1e-12, so nothing
//! here shares a code path with the spectral machinery it cross-checks.
//!
//! Semi-infinite ends are truncated at half-length `X` with zero Dirichlet
//! data; the induced error decays like `e^{-√λ₁ X}`. A halfspace right
//! chamber is truncated to a half-disk with zero data on the arc.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::section::CrossSection;

/// Default memory cap for one solve (vectors plus mask), in bytes.
pub const DEFAULT_MEMORY_CAP: usize = 2 << 30;

/// Snapping tolerance when aligning geometry to the lattice.
const SNAP_TOL: f64 = 1e-9;

/// Truncated chambered domain: a row of nested interval-section boxes,
/// optionally ending in a half-disk standing in for a halfspace chamber.
#[derive(Debug, Clone)]
pub struct OracleGeometry {
    /// Section widths of the box chambers, left to right.
    widths: Vec<f64>,
    /// Global y coordinate of each box section's lower wall.
    offsets: Vec<f64>,
    /// Junction x positions, ascending; the first junction sits at x = 0.
    junctions: Vec<f64>,
    /// Axial extent of the two truncated end chambers.
    half_length: f64,
    /// Radius of the terminal half-disk, when present.
    half_disk: Option<f64>,
}

impl OracleGeometry {
    /// A chain of nested boxes. `rel_offsets[j]` places section `j` inside
    /// section `j+1`; `middle_spans` are the axial lengths of the interior
    /// chambers (empty for two chambers).
    pub fn chain(
        widths: &[f64],
        rel_offsets: &[f64],
        middle_spans: &[f64],
        half_length: f64,
    ) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Geometry("a chain needs at least two chambers".into()));
        }
        if rel_offsets.len() != widths.len() - 1 || middle_spans.len() != widths.len() - 2 {
            return Err(Error::Geometry(format!(
                "{} chambers need {} offsets and {} middle spans",
                widths.len(),
                widths.len() - 1,
                widths.len() - 2
            )));
        }
        if !(half_length > 0.0) || widths.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Geometry("extents must be positive".into()));
        }
        for (j, &off) in rel_offsets.iter().enumerate() {
            if off < -SNAP_TOL || off + widths[j] > widths[j + 1] + SNAP_TOL {
                return Err(Error::Geometry(format!(
                    "junction {}: section {} with offset {off} is not nested in section {}",
                    j + 1,
                    j + 1,
                    j + 2
                )));
            }
        }
        let mut offsets = vec![0.0; widths.len()];
        for j in (0..widths.len() - 1).rev() {
            offsets[j] = offsets[j + 1] + rel_offsets[j];
        }
        let mut junctions = vec![0.0];
        for &s in middle_spans {
            if !(s > 0.0) {
                return Err(Error::Geometry("middle spans must be positive".into()));
            }
            junctions.push(junctions.last().unwrap() + s);
        }
        Ok(OracleGeometry {
            widths: widths.to_vec(),
            offsets,
            junctions,
            half_length,
            half_disk: None,
        })
    }

    pub fn two_chambers(
        left_width: f64,
        right_width: f64,
        rel_offset: f64,
        half_length: f64,
    ) -> Result<Self> {
        Self::chain(&[left_width, right_width], &[rel_offset], &[], half_length)
    }

    /// A box chamber attached to a half-disk truncation of a halfspace.
    /// The disk is centered on the middle of the box section.
    pub fn halfspace(left_width: f64, radius: f64, half_length: f64) -> Result<Self> {
        if !(left_width > 0.0 && radius > 0.0 && half_length > 0.0) {
            return Err(Error::Geometry("extents must be positive".into()));
        }
        if left_width > 2.0 * radius {
            return Err(Error::Geometry(format!(
                "section width {left_width} does not fit on the flat side of a disk of radius {radius}"
            )));
        }
        Ok(OracleGeometry {
            widths: vec![left_width],
            offsets: vec![-0.5 * left_width],
            junctions: vec![0.0],
            half_length,
            half_disk: Some(radius),
        })
    }

    pub fn junction_count(&self) -> usize {
        self.junctions.len()
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    fn disk_center_y(&self) -> f64 {
        let last = self.widths.len() - 1;
        self.offsets[last] + 0.5 * self.widths[last]
    }

    fn x_range(&self) -> (f64, f64) {
        let last_junction = *self.junctions.last().unwrap();
        let x_max = match self.half_disk {
            Some(r) => last_junction + r,
            None => last_junction + self.half_length,
        };
        (-self.half_length, x_max)
    }

    fn y_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (o, w) in self.offsets.iter().zip(&self.widths) {
            lo = lo.min(*o);
            hi = hi.max(o + w);
        }
        if let Some(r) = self.half_disk {
            let cy = self.disk_center_y();
            lo = lo.min(cy - r);
            hi = hi.max(cy + r);
        }
        (lo, hi)
    }

    /// Section geometry (width, global offset) right of junction `j`, when
    /// that neighbor is a box chamber.
    fn right_section(&self, junction: usize) -> Option<(f64, f64)> {
        if junction + 1 < self.widths.len() {
            Some((self.widths[junction + 1], self.offsets[junction + 1]))
        } else {
            None
        }
    }

    fn describe(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "widths={:?} offsets={:?} junctions={:?} half_length={}",
            self.widths, self.offsets, self.junctions, self.half_length
        );
        if let Some(r) = self.half_disk {
            let _ = write!(s, " half_disk_radius={r}");
        }
        s
    }
}

/// Flux profile of the line source on a junction column.
#[derive(Debug, Clone)]
pub enum SourceProfile {
    /// `γ(y) = Σ_k gamma[k-1] · √(2/w) sin(kπ (y-o)/w)` in the section right
    /// of the junction. The sine basis is written out here on purpose: the
    /// oracle must not route through the spectral modules it validates.
    Modal { gamma: Vec<f64> },
    /// Constant flux (the canonical halfspace source has γ ≡ 1).
    Constant(f64),
}

/// One finite-difference problem: geometry, lattice spacing, source junction.
#[derive(Debug, Clone)]
pub struct OracleProblem {
    pub geometry: OracleGeometry,
    pub spacing: f64,
    /// Index of the sourced junction (0-based); the last one by default.
    pub source_junction: usize,
    pub source: SourceProfile,
    pub memory_cap_bytes: usize,
    pub relative_residual: f64,
}

impl OracleProblem {
    pub fn new(geometry: OracleGeometry, spacing: f64, source: SourceProfile) -> Self {
        let source_junction = geometry.junction_count() - 1;
        OracleProblem {
            geometry,
            spacing,
            source_junction,
            source,
            memory_cap_bytes: DEFAULT_MEMORY_CAP,
            relative_residual: 1e-12,
        }
    }
}

/// A function sampled on the uniform lattice over a truncated domain.
///
/// Values are exactly zero on every Dirichlet node (lateral walls, truncation
/// ends, and everything outside the chambers).
#[derive(Debug, Clone)]
pub struct GridField {
    spacing: f64,
    x_min: f64,
    y_min: f64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
    active: Vec<bool>,
    radial_center: (f64, f64),
    solver_residual: f64,
}

impl GridField {
    /// Sample an analytic function on a rectangle; every node carries the
    /// sampled value (no Dirichlet elimination).
    pub fn from_function(
        x_range: (f64, f64),
        y_range: (f64, f64),
        spacing: f64,
        radial_center: (f64, f64),
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<GridField> {
        if !(spacing > 0.0 && x_range.0 < x_range.1 && y_range.0 < y_range.1) {
            return Err(Error::Geometry("degenerate sampling rectangle".into()));
        }
        let nx = ((x_range.1 - x_range.0) / spacing).round() as usize + 1;
        let ny = ((y_range.1 - y_range.0) / spacing).round() as usize + 1;
        let mut values = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                values.push(f(
                    x_range.0 + ix as f64 * spacing,
                    y_range.0 + iy as f64 * spacing,
                ));
            }
        }
        Ok(GridField {
            spacing,
            x_min: x_range.0,
            y_min: y_range.0,
            nx,
            ny,
            values,
            active: vec![true; nx * ny],
            radial_center,
            solver_residual: 0.0,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Node counts along x and y.
    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn node_coords(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.x_min + ix as f64 * self.spacing,
            self.y_min + iy as f64 * self.spacing,
        )
    }

    pub fn node_value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn is_active(&self, ix: usize, iy: usize) -> bool {
        self.active[iy * self.nx + ix]
    }

    pub fn radial_center(&self) -> (f64, f64) {
        self.radial_center
    }

    pub fn solver_residual(&self) -> f64 {
        self.solver_residual
    }

    /// Largest radius around the radial center whose half-disk (x toward +∞)
    /// stays inside the sampled rectangle.
    pub fn inscribed_radius(&self) -> f64 {
        let (cx, cy) = self.radial_center;
        let x_max = self.x_min + (self.nx - 1) as f64 * self.spacing;
        let y_max = self.y_min + (self.ny - 1) as f64 * self.spacing;
        (x_max - cx).min(cy - self.y_min).min(y_max - cy)
    }

    /// Bilinear interpolation; zero outside the sampled rectangle.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let tx = (x - self.x_min) / self.spacing;
        let ty = (y - self.y_min) / self.spacing;
        if tx < 0.0 || ty < 0.0 || tx > (self.nx - 1) as f64 || ty > (self.ny - 1) as f64 {
            return 0.0;
        }
        let ix = (tx.floor() as usize).min(self.nx - 2);
        let iy = (ty.floor() as usize).min(self.ny - 2);
        let fx = tx - ix as f64;
        let fy = ty - iy as f64;
        let v00 = self.node_value(ix, iy);
        let v10 = self.node_value(ix + 1, iy);
        let v01 = self.node_value(ix, iy + 1);
        let v11 = self.node_value(ix + 1, iy + 1);
        v00 * (1.0 - fx) * (1.0 - fy)
            + v10 * fx * (1.0 - fy)
            + v01 * (1.0 - fx) * fy
            + v11 * fx * fy
    }

    /// Discrete L² projections of the slice at `x` onto the first K
    /// eigenfunctions of `section`, whose lower wall sits at global
    /// coordinate `y_offset`.
    pub fn slice_coefficients(
        &self,
        x: f64,
        section: &CrossSection,
        y_offset: f64,
    ) -> Result<Vec<f64>> {
        let t = (x - self.x_min) / self.spacing;
        if (t - t.round()).abs() > SNAP_TOL / self.spacing {
            return Err(Error::Geometry(format!("slice x = {x} is not on a grid line")));
        }
        let ix = t.round() as usize;
        if ix >= self.nx {
            return Err(Error::Geometry(format!("slice x = {x} outside the grid")));
        }
        let width = section.extents()[0];
        let mut coeffs = vec![0.0; section.count()];
        for iy in 0..self.ny {
            let y = self.y_min + iy as f64 * self.spacing;
            let s = y - y_offset;
            if s <= 0.0 || s >= width {
                continue;
            }
            let v = self.node_value(ix, iy);
            if v == 0.0 {
                continue;
            }
            for (k, c) in coeffs.iter_mut().enumerate() {
                *c += self.spacing * v * section.mode(k + 1)?.value(&[s]);
            }
        }
        Ok(coeffs)
    }

    pub fn export_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 32);
        out.push_str("x,y,value\n");
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let (x, y) = self.node_coords(ix, iy);
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    crate::report::fmt_float(x),
                    crate::report::fmt_float(y),
                    crate::report::fmt_float(self.node_value(ix, iy))
                );
            }
        }
        out
    }

    pub fn export_header(&self, geometry: Option<&OracleGeometry>) -> String {
        let mut out = String::new();
        out.push_str("chamber-harmonics grid field\n");
        let _ = writeln!(out, "spacing: {}", crate::report::fmt_float(self.spacing));
        let _ = writeln!(out, "x_min: {}", crate::report::fmt_float(self.x_min));
        let _ = writeln!(out, "y_min: {}", crate::report::fmt_float(self.y_min));
        let _ = writeln!(out, "nx: {}", self.nx);
        let _ = writeln!(out, "ny: {}", self.ny);
        let _ = writeln!(
            out,
            "radial_center: {} {}",
            crate::report::fmt_float(self.radial_center.0),
            crate::report::fmt_float(self.radial_center.1)
        );
        let _ = writeln!(
            out,
            "solver_residual: {}",
            crate::report::fmt_float(self.solver_residual)
        );
        if let Some(g) = geometry {
            let _ = writeln!(out, "geometry: {}", g.describe());
        }
        out
    }

    /// Rebuild a field from its header and CSV exports.
    pub fn import(header: &str, csv: &str) -> Result<GridField> {
        let mut spacing = None;
        let mut x_min = None;
        let mut y_min = None;
        let mut nx = None;
        let mut ny = None;
        let mut center = (0.0, 0.0);
        let mut residual = 0.0;
        for line in header.lines() {
            let Some((key, rest)) = line.split_once(':') else {
                continue;
            };
            let rest = rest.trim();
            match key.trim() {
                "spacing" => spacing = rest.parse::<f64>().ok(),
                "x_min" => x_min = rest.parse::<f64>().ok(),
                "y_min" => y_min = rest.parse::<f64>().ok(),
                "nx" => nx = rest.parse::<usize>().ok(),
                "ny" => ny = rest.parse::<usize>().ok(),
                "radial_center" => {
                    let mut it = rest.split_whitespace();
                    let cx = it.next().and_then(|v| v.parse().ok()).unwrap_or(0.0);
                    let cy = it.next().and_then(|v| v.parse().ok()).unwrap_or(0.0);
                    center = (cx, cy);
                }
                "solver_residual" => residual = rest.parse().unwrap_or(0.0),
                _ => {}
            }
        }
        let (Some(spacing), Some(x_min), Some(y_min), Some(nx), Some(ny)) =
            (spacing, x_min, y_min, nx, ny)
        else {
            return Err(Error::Validation("grid header misses required keys".into()));
        };
        let mut values = vec![0.0; nx * ny];
        for (ln, line) in csv.lines().enumerate().skip(1) {
            let mut cells = line.split(',');
            let x: f64 = cells
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| Error::Validation(format!("csv line {}: bad x", ln + 1)))?;
            let y: f64 = cells
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| Error::Validation(format!("csv line {}: bad y", ln + 1)))?;
            let v: f64 = cells
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| Error::Validation(format!("csv line {}: bad value", ln + 1)))?;
            let ix = ((x - x_min) / spacing).round() as usize;
            let iy = ((y - y_min) / spacing).round() as usize;
            if ix >= nx || iy >= ny {
                return Err(Error::Validation(format!("csv line {}: node off grid", ln + 1)));
            }
            values[iy * nx + ix] = v;
        }
        Ok(GridField {
            spacing,
            x_min,
            y_min,
            nx,
            ny,
            values,
            active: vec![true; nx * ny],
            radial_center: center,
            solver_residual: residual,
        })
    }
}

/// Per-row active index ranges plus flat re-indexing data.
struct Lattice {
    nx: usize,
    ny: usize,
    x_min: f64,
    y_min: f64,
    h: f64,
    /// Inclusive (start, end) runs of active nodes per row.
    rows: Vec<Vec<(usize, usize)>>,
}

impl Lattice {
    fn active_count(&self) -> usize {
        self.rows
            .iter()
            .flatten()
            .map(|&(a, b)| b - a + 1)
            .sum()
    }
}

fn snap_index(value: f64, origin: f64, h: f64, what: &str) -> Result<usize> {
    let t = (value - origin) / h;
    if (t - t.round()).abs() > 1e-6 {
        return Err(Error::Geometry(format!(
            "{what} = {value} is not aligned to the grid (offset {} of a cell)",
            t - t.round()
        )));
    }
    Ok(t.round() as usize)
}

fn build_lattice(geom: &OracleGeometry, h: f64) -> Result<Lattice> {
    if !(h > 0.0) {
        return Err(Error::Geometry(format!("spacing must be positive, got {h}")));
    }
    let (x_min, x_max) = geom.x_range();
    let (y_min, y_max) = geom.y_range();
    let nx = snap_index(x_max, x_min, h, "domain length")
        .map(|n| n + 1)
        .unwrap_or(((x_max - x_min) / h).ceil() as usize + 1);
    let ny_exact = snap_index(y_max, y_min, h, "domain height");
    let ny = match ny_exact {
        Ok(n) => n + 1,
        // The half-disk rim need not land on a node.
        Err(_) if geom.half_disk.is_some() => ((y_max - y_min) / h).ceil() as usize + 1,
        Err(e) => return Err(e),
    };

    let junction_ix: Vec<usize> = geom
        .junctions
        .iter()
        .enumerate()
        .map(|(i, &x)| snap_index(x, x_min, h, &format!("junction {} position", i + 1)))
        .collect::<Result<_>>()?;
    let wall_iy: Vec<(usize, usize)> = geom
        .widths
        .iter()
        .zip(&geom.offsets)
        .enumerate()
        .map(|(c, (&w, &o))| {
            let lo = snap_index(o, y_min, h, &format!("chamber {} lower wall", c + 1))?;
            let hi = snap_index(o + w, y_min, h, &format!("chamber {} upper wall", c + 1))?;
            Ok((lo, hi))
        })
        .collect::<Result<_>>()?;

    let n_box = geom.widths.len();
    let mut rows: Vec<Vec<(usize, usize)>> = vec![Vec::new(); ny];
    for (iy, row) in rows.iter_mut().enumerate() {
        let mut runs: Vec<(usize, usize)> = Vec::new();
        for c in 0..n_box {
            let (lo, hi) = wall_iy[c];
            if iy <= lo || iy >= hi {
                continue;
            }
            let ix_lower = if c == 0 { 0 } else { junction_ix[c - 1] };
            let ix_upper = if c + 1 == n_box && geom.half_disk.is_none() {
                nx - 1
            } else {
                junction_ix[c]
            };
            if ix_upper > ix_lower + 1 {
                runs.push((ix_lower + 1, ix_upper - 1));
            }
            // The junction column belongs to the open domain exactly on the
            // narrower (left) section.
            if c + 1 < n_box || geom.half_disk.is_some() {
                runs.push((junction_ix[c], junction_ix[c]));
            }
        }
        if let Some(r) = geom.half_disk {
            let cy = geom.disk_center_y();
            let jx_ix = *junction_ix.last().unwrap();
            let y = y_min + iy as f64 * h;
            let dy = y - cy;
            let room = r * r - dy * dy;
            if room > 0.0 {
                let mut k = 1usize;
                while (k as f64 * h) * (k as f64 * h) < room * (1.0 - 1e-14) {
                    k += 1;
                }
                if k > 1 {
                    runs.push((jx_ix + 1, jx_ix + k - 1));
                }
            }
        }
        runs.sort_unstable();
        // Merge adjacent runs so each row scans contiguous memory.
        let mut merged: Vec<(usize, usize)> = Vec::with_capacity(runs.len());
        for run in runs {
            match merged.last_mut() {
                Some(last) if run.0 <= last.1 + 1 => last.1 = last.1.max(run.1),
                _ => merged.push(run),
            }
        }
        *row = merged;
    }
    Ok(Lattice {
        nx,
        ny,
        x_min,
        y_min,
        h,
        rows,
    })
}

/// `out = A v` for the five-point Dirichlet stencil, rows in parallel.
/// Inactive entries of `v` are zero and stay zero in `out`.
fn apply_stencil(lat: &Lattice, v: &[f64], out: &mut [f64]) {
    let nx = lat.nx;
    out.par_chunks_mut(nx)
        .enumerate()
        .for_each(|(iy, row_out)| {
            for &(a, b) in &lat.rows[iy] {
                for ix in a..=b {
                    let i = iy * nx + ix;
                    row_out[ix] =
                        4.0 * v[i] - v[i - 1] - v[i + 1] - v[i - nx] - v[i + nx];
                }
            }
        });
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_chunks(1 << 14)
        .zip(b.par_chunks(1 << 14))
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>())
        .sum()
}

/// The discrete solution of one oracle problem.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub field: GridField,
    pub geometry: OracleGeometry,
    pub iterations: usize,
    pub relative_residual: f64,
    /// `(flat node index, γ value)` on the sourced junction column.
    source_nodes: Vec<(usize, f64)>,
}

/// Solve the truncated chambered problem with a junction line source.
///
/// Returns the discrete minimizer of the five-point energy with zero
/// Dirichlet data, solved by conjugate gradients.
pub fn solve_truncated(problem: &OracleProblem) -> Result<OracleSolution> {
    let geom = &problem.geometry;
    let h = problem.spacing;
    let lat = build_lattice(geom, h)?;
    let n = lat.nx * lat.ny;

    let bytes = n * 8 * 5 + n;
    if bytes > problem.memory_cap_bytes {
        return Err(Error::Resource(format!(
            "lattice of {} nodes needs about {} MiB, cap is {} MiB",
            n,
            bytes >> 20,
            problem.memory_cap_bytes >> 20
        )));
    }

    if problem.source_junction >= geom.junction_count() {
        return Err(Error::Geometry(format!(
            "source junction {} out of range 0..{}",
            problem.source_junction,
            geom.junction_count()
        )));
    }

    // Assemble the source vector b = h·γ on the junction column.
    let jx = geom.junctions[problem.source_junction];
    let jx_ix = snap_index(jx, lat.x_min, h, "source junction")?;
    let narrow = problem.source_junction; // left chamber of the junction
    let (w_n, o_n) = (geom.widths[narrow], geom.offsets[narrow]);
    let gamma_at = |y: f64| -> Result<f64> {
        match &problem.source {
            SourceProfile::Constant(v) => Ok(*v),
            SourceProfile::Modal { gamma } => {
                let Some((w_r, o_r)) = geom.right_section(problem.source_junction) else {
                    return Err(Error::Geometry(
                        "modal source needs a box chamber right of the junction".into(),
                    ));
                };
                let s = y - o_r;
                let norm = (2.0 / w_r).sqrt();
                Ok(gamma
                    .iter()
                    .enumerate()
                    .map(|(k, g)| {
                        g * norm * ((k + 1) as f64 * std::f64::consts::PI * s / w_r).sin()
                    })
                    .sum())
            }
        }
    };

    let mut b = vec![0.0; n];
    let mut source_nodes = Vec::new();
    for iy in 0..lat.ny {
        let y = lat.y_min + iy as f64 * h;
        if y <= o_n + SNAP_TOL || y >= o_n + w_n - SNAP_TOL {
            continue;
        }
        let idx = iy * lat.nx + jx_ix;
        let g = gamma_at(y)?;
        b[idx] = h * g;
        source_nodes.push((idx, g));
    }

    // Conjugate gradients on the SPD stencil system.
    let mut u = vec![0.0; n];
    let mut r = b.clone();
    let mut p = b.clone();
    let mut ap = vec![0.0; n];
    let b_norm = dot(&b, &b).sqrt();
    let mut solved = (0usize, 0.0f64);
    if b_norm == 0.0 {
        // Zero source: the zero field is the exact minimizer.
        solved = (0, 0.0);
    } else {
        let target = problem.relative_residual * b_norm;
        let mut rr = dot(&r, &r);
        let max_iters = 60 * (lat.nx + lat.ny) + 2000;
        let mut converged = false;
        for it in 0..max_iters {
            apply_stencil(&lat, &p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                return Err(Error::Solver(format!(
                    "stencil system lost positive definiteness (pᵀAp = {pap})"
                )));
            }
            let alpha = rr / pap;
            u.iter_mut().zip(&p).for_each(|(ui, pi)| *ui += alpha * pi);
            r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
            let rr_next = dot(&r, &r);
            if rr_next.sqrt() <= target {
                solved = (it + 1, rr_next.sqrt() / b_norm);
                converged = true;
                break;
            }
            let beta = rr_next / rr;
            rr = rr_next;
            p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        }
        if !converged {
            return Err(Error::Solver(format!(
                "conjugate gradients stalled at relative residual {:.3e} after {max_iters} iterations",
                rr.sqrt() / b_norm
            )));
        }
    }

    let mut active = vec![false; n];
    for (iy, row) in lat.rows.iter().enumerate() {
        for &(a, bb) in row {
            for ix in a..=bb {
                active[iy * lat.nx + ix] = true;
            }
        }
    }
    let field = GridField {
        spacing: h,
        x_min: lat.x_min,
        y_min: lat.y_min,
        nx: lat.nx,
        ny: lat.ny,
        values: u,
        active,
        radial_center: (jx, o_n + 0.5 * w_n),
        solver_residual: solved.1,
    };
    Ok(OracleSolution {
        field,
        geometry: geom.clone(),
        iterations: solved.0,
        relative_residual: solved.1,
        source_nodes,
    })
}

impl OracleSolution {
    /// Discrete compliance `⟨γ, u⟩_Γ = h Σ γ_i u_i` over the source column.
    pub fn compliance(&self) -> f64 {
        self.source_nodes
            .iter()
            .map(|&(idx, g)| self.field.spacing * g * self.field.values[idx])
            .sum()
    }

    /// Max five-point stencil residual, scaled by 1/h², over active nodes
    /// away from the source column. Discrete harmonicity holds there up to
    /// solver tolerance.
    pub fn interior_stencil_residual(&self) -> f64 {
        let f = &self.field;
        let nx = f.nx;
        let source: std::collections::HashSet<usize> =
            self.source_nodes.iter().map(|&(i, _)| i).collect();
        let worst = AtomicUsize::new(0);
        (0..f.ny).into_par_iter().for_each(|iy| {
            let mut local: f64 = 0.0;
            for ix in 0..nx {
                let i = iy * nx + ix;
                if !f.active[i] || source.contains(&i) {
                    continue;
                }
                let lap = 4.0 * f.values[i]
                    - f.values[i - 1]
                    - f.values[i + 1]
                    - f.values[i - nx]
                    - f.values[i + nx];
                local = local.max(lap.abs());
            }
            let scaled = (local / (f.spacing * f.spacing)).to_bits() as usize;
            worst.fetch_max(scaled, Ordering::Relaxed);
        });
        f64::from_bits(worst.load(Ordering::Relaxed) as u64)
    }

    /// Discrete normal-derivative jump profile on the source column:
    /// `(2u(x_Γ,y) - u(x_Γ-h,y) - u(x_Γ+h,y)) / h` per node, paired with γ.
    pub fn junction_jump_profile(&self) -> Vec<(f64, f64)> {
        let f = &self.field;
        self.source_nodes
            .iter()
            .map(|&(idx, g)| {
                let jump =
                    (2.0 * f.values[idx] - f.values[idx - 1] - f.values[idx + 1]) / f.spacing;
                (jump, g)
            })
            .collect()
    }

    /// γ values on the source column (grid order).
    pub fn source_profile(&self) -> Vec<f64> {
        self.source_nodes.iter().map(|&(_, g)| g).collect()
    }
}

/// Least-squares line through `(x, ln y)` points: returns `(slope, intercept)`.
pub fn log_linear_fit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::Validation("regression needs at least two points".into()));
    }
    let n = points.len() as f64;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        if !(y > 0.0) {
            return Err(Error::Validation(format!(
                "log-linear fit needs positive ordinates, got {y} at x = {x}"
            )));
        }
        let ly = y.ln();
        sx += x;
        sy += ly;
        sxx += x * x;
        sxy += x * ly;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::Validation("degenerate abscissae in regression".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    Ok((slope, intercept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small_problem(gamma: Vec<f64>) -> OracleProblem {
        let geom = OracleGeometry::two_chambers(1.0, 2.0, 0.5, 3.0).unwrap();
        OracleProblem::new(geom, 1.0 / 16.0, SourceProfile::Modal { gamma })
    }

    #[test]
    fn zero_source_gives_zero_field() {
        let sol = solve_truncated(&small_problem(vec![0.0])).unwrap();
        assert!(sol.field.values.iter().all(|&v| v == 0.0));
        assert_eq!(sol.compliance(), 0.0);
    }

    #[test]
    fn dirichlet_nodes_are_exactly_zero() {
        let sol = solve_truncated(&small_problem(vec![PI])).unwrap();
        let f = &sol.field;
        for iy in 0..f.ny {
            for ix in 0..f.nx {
                if !f.is_active(ix, iy) {
                    assert_eq!(f.node_value(ix, iy), 0.0);
                }
            }
        }
        // The solve must touch a nontrivial region.
        assert!(f.values.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn symmetric_geometry_gives_symmetric_solution() {
        let geom = OracleGeometry::two_chambers(1.0, 1.0, 0.0, 3.0).unwrap();
        let problem = OracleProblem::new(geom, 1.0 / 16.0, SourceProfile::Modal { gamma: vec![2.0] });
        let sol = solve_truncated(&problem).unwrap();
        let f = &sol.field;
        // Mirror in y about the section midline.
        for iy in 0..f.ny {
            let jy = f.ny - 1 - iy;
            for ix in 0..f.nx {
                let a = f.node_value(ix, iy);
                let b = f.node_value(ix, jy);
                assert!((a - b).abs() < 1e-12, "asymmetry {} at ({ix},{iy})", a - b);
            }
        }
    }

    #[test]
    fn interior_nodes_are_discretely_harmonic() {
        let sol = solve_truncated(&small_problem(vec![PI])).unwrap();
        let resid = sol.interior_stencil_residual();
        // CG residual target is 1e-12 relative; h = 1/16 rescales by h².
        assert!(resid < 1e-7, "interior stencil residual {resid}");
    }

    #[test]
    fn jump_reproduces_the_source_profile() {
        let h = 1.0 / 64.0;
        let geom = OracleGeometry::two_chambers(1.0, 2.0, 0.5, 4.0).unwrap();
        let problem = OracleProblem::new(geom, h, SourceProfile::Modal { gamma: vec![PI] });
        let sol = solve_truncated(&problem).unwrap();
        // Project the discrete jump onto the first right-section mode and
        // compare with γ₁ = π; the defect is O(h).
        let jumps = sol.junction_jump_profile();
        let o_r = 0.0;
        let w_r = 2.0;
        let mut proj = 0.0;
        let mut iy_y: Vec<f64> = Vec::new();
        for (iy, _) in (0..sol.field.ny).zip(0..) {
            let y = sol.field.y_min + iy as f64 * h;
            if y > 0.5 && y < 1.5 {
                iy_y.push(y);
            }
        }
        assert_eq!(iy_y.len(), jumps.len());
        for ((jump, _), y) in jumps.iter().zip(&iy_y) {
            proj += h * jump * (2.0_f64 / w_r).sqrt() * (PI * (y - o_r) / w_r).sin();
        }
        assert!(
            (proj - PI).abs() < 30.0 * h,
            "jump projection {proj} vs γ₁ = {PI}"
        );
    }

    #[test]
    fn truncation_is_benign_for_deep_domains() {
        // Doubling X changes the slice coefficient far less than e^{-√λ₁X}·10.
        let h = 1.0 / 32.0;
        let gamma = vec![PI];
        let base = OracleProblem::new(
            OracleGeometry::two_chambers(1.0, 2.0, 0.5, 4.0).unwrap(),
            h,
            SourceProfile::Modal { gamma: gamma.clone() },
        );
        let deep = OracleProblem::new(
            OracleGeometry::two_chambers(1.0, 2.0, 0.5, 8.0).unwrap(),
            h,
            SourceProfile::Modal { gamma },
        );
        let section = crate::section::compute_spectrum(
            crate::section::SectionKind::Interval { length: 1.0 },
            1,
        )
        .unwrap();
        let a = solve_truncated(&base).unwrap();
        let b = solve_truncated(&deep).unwrap();
        let ca = a.field.slice_coefficients(-1.0, &section, 0.5).unwrap()[0];
        let cb = b.field.slice_coefficients(-1.0, &section, 0.5).unwrap()[0];
        let bound = 10.0 * (-PI * 4.0).exp();
        assert!(
            (ca - cb).abs() <= bound.max(1e-12),
            "truncation moved coefficient by {} (bound {bound})",
            (ca - cb).abs()
        );
    }

    #[test]
    fn sampled_single_mode_has_clean_slice_projection() {
        let section = crate::section::compute_spectrum(
            crate::section::SectionKind::Interval { length: 1.0 },
            3,
        )
        .unwrap();
        let c = 0.73;
        let field = GridField::from_function(
            (-2.0, 0.0),
            (0.0, 1.0),
            1.0 / 64.0,
            (0.0, 0.5),
            |x, y| c * (PI * x).exp() * (2.0f64).sqrt() * (PI * y).sin(),
        )
        .unwrap();
        let coeffs = field.slice_coefficients(-1.0, &section, 0.0).unwrap();
        let expect = c * (-PI).exp();
        assert!((coeffs[0] - expect).abs() < 1e-3 * expect.abs());
        assert!(coeffs[1].abs() < 1e-12);
        assert!(coeffs[2].abs() < 1e-12);
    }

    #[test]
    fn compliance_scales_quadratically() {
        let a = solve_truncated(&small_problem(vec![1.0])).unwrap();
        let b = solve_truncated(&small_problem(vec![3.0])).unwrap();
        let ratio = b.compliance() / a.compliance();
        assert!((ratio - 9.0).abs() < 1e-9, "ratio {ratio}");
    }

    #[test]
    fn memory_cap_is_enforced() {
        let geom = OracleGeometry::two_chambers(1.0, 2.0, 0.5, 4.0).unwrap();
        let mut problem = OracleProblem::new(geom, 1.0 / 64.0, SourceProfile::Constant(1.0));
        problem.memory_cap_bytes = 1 << 10;
        assert!(matches!(
            solve_truncated(&problem),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn misaligned_geometry_is_rejected() {
        let geom = OracleGeometry::two_chambers(1.0, 2.0, 0.3, 4.0).unwrap();
        // offset 0.3 is not a multiple of h = 1/8
        let problem = OracleProblem::new(geom, 0.125, SourceProfile::Constant(1.0));
        assert!(matches!(solve_truncated(&problem), Err(Error::Geometry(_))));
    }

    #[test]
    fn non_nested_chain_is_rejected() {
        let err = OracleGeometry::chain(&[2.0, 1.0], &[0.0], &[], 4.0).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn field_round_trips_through_export() {
        let sol = solve_truncated(&small_problem(vec![1.0])).unwrap();
        let header = sol.field.export_header(Some(&sol.geometry));
        let csv = sol.field.export_csv();
        let back = GridField::import(&header, &csv).unwrap();
        assert_eq!(back.shape(), sol.field.shape());
        for iy in 0..back.ny {
            for ix in 0..back.nx {
                assert_eq!(back.node_value(ix, iy), sol.field.node_value(ix, iy));
            }
        }
    }

    #[test]
    fn log_linear_fit_recovers_exponentials() {
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let x = -5.0 + 0.3 * i as f64;
                (x, 2.5 * (1.7 * x).exp())
            })
            .collect();
        let (slope, intercept) = log_linear_fit(&pts).unwrap();
        assert!((slope - 1.7).abs() < 1e-12);
        assert!((intercept - 2.5f64.ln()).abs() < 1e-12);
    }
}
