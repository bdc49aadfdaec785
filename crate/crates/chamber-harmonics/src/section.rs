//! Dirichlet Laplacian eigenpairs for cross-section domains.
//!
//! A cross-section is the transverse domain `U` of a semi-infinite cylinder
//! `{x ≷ 0} × U`. Its Dirichlet eigenpairs `(λ_k, ψ_k)` generate the mode
//! basis used everywhere else in the crate. Interval and rectangle sections
//! use closed-form sine modes; grid sections solve the symmetric
//! second-difference eigenproblem with Dirichlet rows eliminated.
//!
//! Eigenvalues are returned sorted ascending, eigenfunctions L²-orthonormal
//! (under the discrete inner product for grid kinds) and sign-fixed so the
//! first sample point with |value| > 1e-12 is positive. The construction is
//! deterministic: identical inputs give bit-identical spectra.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Threshold below which a sample is not trusted to fix an eigenfunction sign.
const SIGN_SAMPLE_FLOOR: f64 = 1e-12;

/// Half-width of the band around an eigenvalue inside which a Morse-index
/// threshold is ambiguous unless it equals the eigenvalue exactly.
const THRESHOLD_BAND: f64 = 1e-9;

/// Geometry of a transverse domain.
#[derive(Debug, Clone, PartialEq)]
pub enum SectionKind {
    /// The interval (0, length) in R¹.
    Interval { length: f64 },
    /// The rectangle (0, width) × (0, height) in R².
    Rectangle { width: f64, height: f64 },
    /// Interval discretized with `n` interior nodes, spacing `length / (n+1)`.
    Grid1d { length: f64, n: usize },
    /// Rectangle discretized with `nx × ny` interior nodes.
    Grid2d {
        width: f64,
        height: f64,
        nx: usize,
        ny: usize,
    },
}

impl SectionKind {
    /// Number of transverse coordinates (1 or 2).
    pub fn dim(&self) -> usize {
        match self {
            SectionKind::Interval { .. } | SectionKind::Grid1d { .. } => 1,
            SectionKind::Rectangle { .. } | SectionKind::Grid2d { .. } => 2,
        }
    }

    /// Extent of the section along each coordinate axis.
    pub fn extents(&self) -> Vec<f64> {
        match *self {
            SectionKind::Interval { length } => vec![length],
            SectionKind::Rectangle { width, height } => vec![width, height],
            SectionKind::Grid1d { length, .. } => vec![length],
            SectionKind::Grid2d { width, height, .. } => vec![width, height],
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(
            self,
            SectionKind::Interval { .. } | SectionKind::Rectangle { .. }
        )
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        let positive = match *self {
            SectionKind::Interval { length } => ok(length),
            SectionKind::Rectangle { width, height } => ok(width) && ok(height),
            SectionKind::Grid1d { length, n } => ok(length) && n >= 2,
            SectionKind::Grid2d {
                width,
                height,
                nx,
                ny,
            } => ok(width) && ok(height) && nx >= 2 && ny >= 2,
        };
        if positive {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "section parameters must be positive (grids need at least 2 interior nodes): {self:?}"
            )))
        }
    }
}

/// One-dimensional factor of an eigenfunction.
///
/// Every mode of every supported section kind is a product of per-axis
/// profiles; the junction overlap integrals exploit this factorization.
#[derive(Debug, Clone)]
pub(crate) enum AxisProfile {
    /// `norm · sin(root · y)` with `root = index·π/length`, `norm = √(2/length)`.
    Sine {
        length: f64,
        index: usize,
        root: f64,
        norm: f64,
    },
    /// Piecewise-linear interpolant of interior node values, zero at both ends.
    Sampled {
        length: f64,
        spacing: f64,
        values: Vec<f64>,
    },
}

impl AxisProfile {
    fn sine(length: f64, index: usize) -> Self {
        // π/length first so that Interval(π) yields integer roots exactly.
        let root = index as f64 * (PI / length);
        AxisProfile::Sine {
            length,
            index,
            root,
            norm: (2.0 / length).sqrt(),
        }
    }

    pub(crate) fn length(&self) -> f64 {
        match *self {
            AxisProfile::Sine { length, .. } => length,
            AxisProfile::Sampled { length, .. } => length,
        }
    }

    pub(crate) fn value(&self, y: f64) -> f64 {
        match self {
            AxisProfile::Sine { root, norm, .. } => norm * (root * y).sin(),
            AxisProfile::Sampled {
                length,
                spacing,
                values,
            } => {
                if y <= 0.0 || y >= *length {
                    return 0.0;
                }
                let t = y / spacing;
                let cell = t.floor() as usize; // node `cell` sits at cell*spacing
                let frac = t - cell as f64;
                // values[i] is the node at (i+1)*spacing; nodes 0 and n+1 are zero.
                let lo = if cell == 0 { 0.0 } else { values[cell - 1] };
                let hi = if cell >= values.len() {
                    0.0
                } else {
                    values[cell]
                };
                lo + frac * (hi - lo)
            }
        }
    }
}

/// A Dirichlet eigenpair: eigenvalue plus an evaluable eigenfunction.
#[derive(Debug, Clone)]
pub struct Mode {
    eigenvalue: f64,
    sign: f64,
    axes: Vec<AxisProfile>,
}

impl Mode {
    pub fn eigenvalue(&self) -> f64 {
        self.eigenvalue
    }

    /// Eigenfunction value at section coordinates `y` (length = section dim).
    ///
    /// Grid kinds interpolate linearly per axis (bilinearly in 2D); points on
    /// or beyond the section boundary evaluate to 0.
    pub fn value(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.axes.len());
        let mut v = self.sign;
        for (axis, &c) in self.axes.iter().zip(y) {
            v *= axis.value(c);
        }
        v
    }

    pub(crate) fn axes(&self) -> &[AxisProfile] {
        &self.axes
    }

    pub(crate) fn sign(&self) -> f64 {
        self.sign
    }
}

/// A cross-section domain together with its leading Dirichlet eigenpairs.
#[derive(Debug, Clone)]
pub struct CrossSection {
    kind: SectionKind,
    modes: Vec<Mode>,
}

impl CrossSection {
    pub fn kind(&self) -> &SectionKind {
        &self.kind
    }

    /// Number of retained modes K.
    pub fn count(&self) -> usize {
        self.modes.len()
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn extents(&self) -> Vec<f64> {
        self.kind.extents()
    }

    /// Eigenvalue λ_k, `k` 1-based.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        self.mode(k).map(Mode::eigenvalue)
    }

    /// √λ_k, the axial growth rate of mode `k` (1-based).
    pub fn frequency(&self, k: usize) -> Result<f64> {
        Ok(self.eigenvalue(k)?.sqrt())
    }

    /// Eigenpair `k` (1-based).
    pub fn mode(&self, k: usize) -> Result<&Mode> {
        if k == 0 || k > self.modes.len() {
            return Err(Error::Dimension(format!(
                "mode index {k} out of range 1..={}",
                self.modes.len()
            )));
        }
        Ok(&self.modes[k - 1])
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(Mode::eigenvalue).collect()
    }

    /// Copy retaining only the first `k` modes.
    pub fn truncated(&self, k: usize) -> Result<CrossSection> {
        if k == 0 || k > self.modes.len() {
            return Err(Error::Dimension(format!(
                "cannot truncate a {}-mode spectrum to K={k}",
                self.modes.len()
            )));
        }
        Ok(CrossSection {
            kind: self.kind.clone(),
            modes: self.modes[..k].to_vec(),
        })
    }

    /// True if `y` lies in the closed section.
    pub fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.dim()
            && self
                .extents()
                .iter()
                .zip(y)
                .all(|(&ext, &c)| (0.0..=ext).contains(&c))
    }
}

/// Dirichlet eigenpairs of `kind`, the `count` lowest modes.
///
/// Analytic kinds take closed-form sine (products of sines in 2D) modes;
/// grid kinds solve the second-difference eigenproblem and normalize under
/// the discrete inner product `h·Σ` (resp. `h²·Σ`).
pub fn compute_spectrum(kind: SectionKind, count: usize) -> Result<CrossSection> {
    kind.validate()?;
    if count == 0 {
        return Err(Error::Dimension("mode count K must be at least 1".into()));
    }
    let mut modes = match kind {
        SectionKind::Interval { length } => (1..=count)
            .map(|k| {
                let root = k as f64 * (PI / length);
                Mode {
                    eigenvalue: root * root,
                    sign: 1.0,
                    axes: vec![AxisProfile::sine(length, k)],
                }
            })
            .collect::<Vec<_>>(),
        SectionKind::Rectangle { width, height } => {
            // Index pairs up to `count` per axis always cover the lowest
            // `count` eigenvalues of the sum form.
            let mut pairs = Vec::with_capacity(count * count);
            for i in 1..=count {
                for j in 1..=count {
                    let ri = i as f64 * (PI / width);
                    let rj = j as f64 * (PI / height);
                    pairs.push((ri * ri + rj * rj, i, j));
                }
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            pairs
                .into_iter()
                .take(count)
                .map(|(ev, i, j)| Mode {
                    eigenvalue: ev,
                    sign: 1.0,
                    axes: vec![AxisProfile::sine(width, i), AxisProfile::sine(height, j)],
                })
                .collect()
        }
        SectionKind::Grid1d { length, n } => {
            if count >= n {
                return Err(Error::Dimension(format!(
                    "K={count} must be strictly less than the {n} interior grid nodes"
                )));
            }
            grid_axis_modes(length, n)?
                .into_iter()
                .take(count)
                .map(|(ev, profile)| Mode {
                    eigenvalue: ev,
                    sign: 1.0,
                    axes: vec![profile],
                })
                .collect()
        }
        SectionKind::Grid2d {
            width,
            height,
            nx,
            ny,
        } => {
            if count >= nx * ny {
                return Err(Error::Dimension(format!(
                    "K={count} must be strictly less than the {} interior grid nodes",
                    nx * ny
                )));
            }
            // The five-point eigenproblem separates: every eigenvector is a
            // product of 1D second-difference eigenvectors and the eigenvalue
            // is the sum, so the tensor construction reproduces the full 2D
            // solve exactly.
            let ax = grid_axis_modes(width, nx)?;
            let ay = grid_axis_modes(height, ny)?;
            let mut pairs = Vec::with_capacity(nx * ny);
            for (i, (evx, _)) in ax.iter().enumerate() {
                for (j, (evy, _)) in ay.iter().enumerate() {
                    pairs.push((evx + evy, i, j));
                }
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            pairs
                .into_iter()
                .take(count)
                .map(|(ev, i, j)| Mode {
                    eigenvalue: ev,
                    sign: 1.0,
                    axes: vec![ax[i].1.clone(), ay[j].1.clone()],
                })
                .collect()
        }
    };
    for mode in &mut modes {
        fix_sign(mode);
    }
    Ok(CrossSection { kind, modes })
}

/// All `n` eigenpairs of the 1D second-difference operator on `n` interior
/// nodes with spacing `length/(n+1)`, sorted ascending, discretely normalized
/// and sign-fixed per axis.
fn grid_axis_modes(length: f64, n: usize) -> Result<Vec<(f64, AxisProfile)>> {
    let h = length / (n + 1) as f64;
    let diag = 2.0 / (h * h);
    let off = -1.0 / (h * h);
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = diag;
        if i + 1 < n {
            a[(i, i + 1)] = off;
            a[(i + 1, i)] = off;
        }
    }
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let scale = 1.0 / h.sqrt(); // Euclidean-unit column -> discrete L² unit
    Ok(order
        .into_iter()
        .map(|idx| {
            let values: Vec<f64> = eig
                .eigenvectors
                .column(idx)
                .iter()
                .map(|v| v * scale)
                .collect();
            let ev = eig.eigenvalues[idx];
            if ev <= 0.0 {
                // Second-difference Dirichlet matrices are positive definite;
                // a non-positive value means the eigensolver failed.
                panic!("non-positive discrete eigenvalue {ev}");
            }
            (
                ev,
                AxisProfile::Sampled {
                    length,
                    spacing: h,
                    values,
                },
            )
        })
        .collect())
}

/// Deterministic sample sequence used by the sign convention.
fn sign_samples(mode: &Mode) -> Vec<Vec<f64>> {
    let sampled_axes: Vec<Option<f64>> = mode
        .axes
        .iter()
        .map(|ax| match ax {
            AxisProfile::Sampled { spacing, .. } => Some(*spacing),
            AxisProfile::Sine { .. } => None,
        })
        .collect();
    if sampled_axes.iter().all(Option::is_none) {
        // Analytic kinds: walk in along the diagonal from the corner.
        (1..=64)
            .map(|m| {
                mode.axes
                    .iter()
                    .map(|ax| ax.length() * 1e-6 * m as f64)
                    .collect()
            })
            .collect()
    } else {
        // Grid kinds: lexicographic scan of the grid nodes.
        let counts: Vec<usize> = mode
            .axes
            .iter()
            .map(|ax| match ax {
                AxisProfile::Sampled { values, .. } => values.len(),
                AxisProfile::Sine { .. } => 64,
            })
            .collect();
        let spacing: Vec<f64> = mode
            .axes
            .iter()
            .zip(&sampled_axes)
            .map(|(ax, s)| s.unwrap_or(ax.length() / 65.0))
            .collect();
        match counts.len() {
            1 => (1..=counts[0]).map(|i| vec![i as f64 * spacing[0]]).collect(),
            2 => {
                let mut pts = Vec::with_capacity(counts[0] * counts[1]);
                for i in 1..=counts[0] {
                    for j in 1..=counts[1] {
                        pts.push(vec![i as f64 * spacing[0], j as f64 * spacing[1]]);
                    }
                }
                pts
            }
            _ => unreachable!("sections are 1D or 2D"),
        }
    }
}

fn fix_sign(mode: &mut Mode) {
    for point in sign_samples(mode) {
        let v = mode.value(&point);
        if v.abs() > SIGN_SAMPLE_FLOOR {
            if v < 0.0 {
                mode.sign = -mode.sign;
            }
            return;
        }
    }
}

/// Count of eigenvalues λ_j ≤ d, with multiplicity (the Morse index m(d)).
///
/// Requires λ_K > d so the count is certified at the current truncation.
/// A threshold strictly within 1e-9 of an eigenvalue without being equal to
/// it cannot be certified and is rejected; exact equality counts the mode.
pub fn morse_index(section: &CrossSection, d: f64) -> Result<usize> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Validation(format!("threshold must be positive, got {d}")));
    }
    let last = section
        .modes
        .last()
        .expect("spectra always hold at least one mode")
        .eigenvalue();
    if last <= d {
        return Err(Error::Truncation(format!(
            "cannot certify the count: λ_K = {last} ≤ d = {d}; recompute with larger K"
        )));
    }
    let mut count = 0;
    for mode in &section.modes {
        let ev = mode.eigenvalue();
        if ev != d && (ev - d).abs() < THRESHOLD_BAND {
            return Err(Error::AmbiguousThreshold(format!(
                "threshold {d} lies within {THRESHOLD_BAND} of eigenvalue {ev} without matching it"
            )));
        }
        if ev <= d {
            count += 1;
        }
    }
    Ok(count)
}

/// True iff λ_k(outer) ≤ λ_k(inner) for every k up to the common truncation.
///
/// Domain inclusion makes Dirichlet eigenvalues decrease mode by mode; this
/// certifies the ordering for the computed heads of two spectra.
pub fn eigenvalue_domain_monotonicity_check(inner: &CrossSection, outer: &CrossSection) -> bool {
    inner
        .modes
        .iter()
        .zip(&outer.modes)
        .all(|(i, o)| o.eigenvalue() <= i.eigenvalue())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval_pi(k: usize) -> CrossSection {
        compute_spectrum(SectionKind::Interval { length: PI }, k).unwrap()
    }

    #[test]
    fn interval_pi_has_integer_square_eigenvalues() {
        let s = interval_pi(4);
        assert_eq!(s.eigenvalues(), vec![1.0, 4.0, 9.0, 16.0]);
    }

    #[test]
    fn interval_pi_modes_are_scaled_sines() {
        let s = interval_pi(3);
        let norm = (2.0 / PI).sqrt();
        for k in 1..=3 {
            for i in 1..10 {
                let y = PI * i as f64 / 10.0;
                let expect = norm * (k as f64 * y).sin();
                let got = s.mode(k).unwrap().value(&[y]);
                assert!((got - expect).abs() < 1e-14, "mode {k} at {y}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn rectangle_pi_head_is_2_5_5_8() {
        let s = compute_spectrum(
            SectionKind::Rectangle {
                width: PI,
                height: PI,
            },
            4,
        )
        .unwrap();
        assert_eq!(s.eigenvalues(), vec![2.0, 5.0, 5.0, 8.0]);
    }

    #[test]
    fn grid1d_first_eigenvalue_close_to_continuum() {
        let s = compute_spectrum(SectionKind::Grid1d { length: 1.0, n: 256 }, 1).unwrap();
        let rel = (s.eigenvalue(1).unwrap() - PI * PI).abs() / (PI * PI);
        assert!(rel < 5e-3, "relative error {rel}");
    }

    #[test]
    fn grid1d_second_order_convergence() {
        let coarse = compute_spectrum(SectionKind::Grid1d { length: 1.0, n: 127 }, 1).unwrap();
        let fine = compute_spectrum(SectionKind::Grid1d { length: 1.0, n: 255 }, 1).unwrap();
        let e_coarse = (coarse.eigenvalue(1).unwrap() - PI * PI).abs();
        let e_fine = (fine.eigenvalue(1).unwrap() - PI * PI).abs();
        assert!(
            e_coarse / e_fine >= 3.8,
            "error ratio {} below second-order expectation",
            e_coarse / e_fine
        );
    }

    fn orthonormality_defect(s: &CrossSection, quad_points: usize) -> f64 {
        // Composite midpoint tensor quadrature of <ψ_j, ψ_k>.
        let ext = s.extents();
        let mut worst: f64 = 0.0;
        for j in 1..=s.count() {
            for k in j..=s.count() {
                let mj = s.mode(j).unwrap();
                let mk = s.mode(k).unwrap();
                let integral = match ext.len() {
                    1 => {
                        let h = ext[0] / quad_points as f64;
                        (0..quad_points)
                            .map(|i| {
                                let y = (i as f64 + 0.5) * h;
                                mj.value(&[y]) * mk.value(&[y]) * h
                            })
                            .sum::<f64>()
                    }
                    _ => {
                        let hx = ext[0] / quad_points as f64;
                        let hy = ext[1] / quad_points as f64;
                        let mut acc = 0.0;
                        for ix in 0..quad_points {
                            for iy in 0..quad_points {
                                let p = [(ix as f64 + 0.5) * hx, (iy as f64 + 0.5) * hy];
                                acc += mj.value(&p) * mk.value(&p) * hx * hy;
                            }
                        }
                        acc
                    }
                };
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((integral - target).abs());
            }
        }
        worst
    }

    #[test]
    fn analytic_modes_are_orthonormal() {
        let s = interval_pi(5);
        // Midpoint quadrature on sine products is spectrally accurate here.
        assert!(orthonormality_defect(&s, 4096) < 1e-8);
        let r = compute_spectrum(
            SectionKind::Rectangle {
                width: PI,
                height: 1.5,
            },
            4,
        )
        .unwrap();
        assert!(orthonormality_defect(&r, 1024) < 1e-6);
    }

    #[test]
    fn grid_modes_are_discretely_orthonormal() {
        let n = 64;
        let s = compute_spectrum(SectionKind::Grid1d { length: 2.0, n }, 8).unwrap();
        let h = 2.0 / (n + 1) as f64;
        for j in 1..=8 {
            for k in j..=8 {
                let mut acc = 0.0;
                for i in 1..=n {
                    let y = [i as f64 * h];
                    acc += s.mode(j).unwrap().value(&y) * s.mode(k).unwrap().value(&y) * h;
                }
                let target = if j == k { 1.0 } else { 0.0 };
                assert!(
                    (acc - target).abs() < 1e-6,
                    "<ψ_{j}, ψ_{k}> = {acc}"
                );
            }
        }
    }

    #[test]
    fn grid_rayleigh_residual_is_tiny() {
        let n = 64;
        let length = 1.0;
        let s = compute_spectrum(SectionKind::Grid1d { length, n }, 6).unwrap();
        let h = length / (n + 1) as f64;
        for k in 1..=6 {
            let mode = s.mode(k).unwrap();
            let ev = mode.eigenvalue();
            let at = |i: i64| -> f64 {
                if i <= 0 || i as usize > n {
                    0.0
                } else {
                    mode.value(&[i as f64 * h])
                }
            };
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 1..=n as i64 {
                let lap = (2.0 * at(i) - at(i - 1) - at(i + 1)) / (h * h);
                num += (lap - ev * at(i)) * (lap - ev * at(i));
                den += at(i) * at(i);
            }
            let resid = (num / den).sqrt() / ev;
            assert!(resid < 1e-8, "mode {k} residual {resid}");
        }
    }

    #[test]
    fn grid2d_matches_analytic_rectangle() {
        let s = compute_spectrum(
            SectionKind::Grid2d {
                width: 1.0,
                height: 1.0,
                nx: 48,
                ny: 48,
            },
            4,
        )
        .unwrap();
        let exact = [2.0, 5.0, 5.0, 8.0].map(|c| c * PI * PI);
        for (k, &e) in exact.iter().enumerate() {
            let rel = (s.eigenvalue(k + 1).unwrap() - e).abs() / e;
            assert!(rel < 5e-3, "mode {} relative error {rel}", k + 1);
        }
    }

    #[test]
    fn sign_convention_first_sample_positive() {
        for section in [
            compute_spectrum(SectionKind::Grid1d { length: 1.0, n: 33 }, 8).unwrap(),
            compute_spectrum(
                SectionKind::Grid2d {
                    width: 1.0,
                    height: 2.0,
                    nx: 12,
                    ny: 17,
                },
                6,
            )
            .unwrap(),
        ] {
            for mode in section.modes() {
                let first = sign_samples(mode)
                    .into_iter()
                    .map(|p| mode.value(&p))
                    .find(|v| v.abs() > SIGN_SAMPLE_FLOOR)
                    .unwrap();
                assert!(first > 0.0);
            }
        }
    }

    #[test]
    fn spectra_are_deterministic() {
        let kind = SectionKind::Grid2d {
            width: 1.0,
            height: 1.0,
            nx: 20,
            ny: 20,
        };
        let a = compute_spectrum(kind.clone(), 10).unwrap();
        let b = compute_spectrum(kind, 10).unwrap();
        assert_eq!(a.eigenvalues(), b.eigenvalues());
        for (ma, mb) in a.modes().iter().zip(b.modes()) {
            for p in [[0.3, 0.4], [0.71, 0.11]] {
                assert_eq!(ma.value(&p).to_bits(), mb.value(&p).to_bits());
            }
        }
    }

    #[test]
    fn morse_index_counts_with_multiplicity() {
        let i = interval_pi(3);
        assert_eq!(morse_index(&i, 4.0).unwrap(), 2);
        assert_eq!(morse_index(&i, 0.5).unwrap(), 0);
        let r = compute_spectrum(
            SectionKind::Rectangle {
                width: PI,
                height: PI,
            },
            4,
        )
        .unwrap();
        assert_eq!(morse_index(&r, 5.0).unwrap(), 3);
    }

    #[test]
    fn morse_index_error_paths() {
        let i = interval_pi(3);
        assert!(matches!(morse_index(&i, 9.5), Err(Error::Truncation(_))));
        assert!(matches!(
            morse_index(&i, 4.0 + 1e-10),
            Err(Error::AmbiguousThreshold(_))
        ));
    }

    #[test]
    fn domain_monotonicity_predicate() {
        let inner = compute_spectrum(SectionKind::Interval { length: 1.0 }, 6).unwrap();
        let outer = compute_spectrum(SectionKind::Interval { length: 2.0 }, 6).unwrap();
        assert!(eigenvalue_domain_monotonicity_check(&inner, &outer));
        assert!(eigenvalue_domain_monotonicity_check(&inner, &inner));
        assert!(!eigenvalue_domain_monotonicity_check(&outer, &inner));
    }

    #[test]
    fn dimension_and_geometry_errors() {
        assert!(matches!(
            compute_spectrum(SectionKind::Interval { length: -1.0 }, 3),
            Err(Error::Geometry(_))
        ));
        assert!(matches!(
            compute_spectrum(SectionKind::Grid1d { length: 1.0, n: 8 }, 8),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            compute_spectrum(SectionKind::Interval { length: 1.0 }, 0),
            Err(Error::Dimension(_))
        ));
    }
}
