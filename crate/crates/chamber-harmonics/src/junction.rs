//! Junction overlap and transfer operators between two nested chambers.
//!
//! With the narrow section embedded in the wide one, extension by zero is an
//! isometry of L² sections, and the trace/flux matching across the junction
//! plane becomes a coefficient equation on the weighted sequence space with
//! norm `Σ_j √λ_j^L α_j²`. The assembled system is
//!
//! ```text
//! (I - T) α = α₀,   T = -(Λ^L)⁻¹ 𝒰 Λ^R 𝒰ᵀ,   α₀ = (Λ^L)⁻¹ 𝒰 γ,
//! ```
//!
//! where `𝒰` is the overlap matrix of left modes against right modes and `γ`
//! the flux of the canonical growing solution. `T` enters with a minus sign:
//! differentiating the decaying right expansion `Σ β_k e^{-√λ_k x}` makes the
//! flux-balance term add rather than subtract (the equal-section junction,
//! solvable in closed form, pins this down). The weighted operator norm of
//! `T` is certified below 1 by power iteration before the fixed-point solve
//! is allowed to run.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{AxialSide, ModeSeries, Profile, Term};
use crate::section::{AxisProfile, CrossSection, Mode};

/// Nestedness slack when validating embeddings.
const NEST_TOL: f64 = 1e-12;

/// Margin below 1 the certified contraction norm must respect.
pub const CONTRACTION_MARGIN: f64 = 1e-6;

/// Relative update threshold of the fixed-point iteration.
const FIXED_POINT_TOL: f64 = 1e-14;

/// Residual bound checked after every solve, in the weighted norm.
pub const RESIDUAL_BOUND: f64 = 1e-10;

const MAX_FIXED_POINT_ITERATIONS: usize = 1_000_000;

/// Panels per axis for overlap quadrature (doubled once for the Richardson
/// check).
const QUADRATURE_PANELS: usize = 512;

/// Placement of the narrow (left) section inside the wide (right) one.
#[derive(Debug, Clone)]
pub struct JunctionEmbedding {
    left: Arc<CrossSection>,
    right: Arc<CrossSection>,
    offset: Vec<f64>,
}

impl JunctionEmbedding {
    /// Validates that the translated copy of the left section lies inside
    /// the closure of the right one.
    pub fn new(
        left: Arc<CrossSection>,
        right: Arc<CrossSection>,
        offset: Vec<f64>,
    ) -> Result<Self> {
        if left.dim() != right.dim() {
            return Err(Error::Dimension(format!(
                "section dimensions differ: {} vs {}",
                left.dim(),
                right.dim()
            )));
        }
        if offset.len() != left.dim() {
            return Err(Error::Dimension(format!(
                "offset needs {} components, got {}",
                left.dim(),
                offset.len()
            )));
        }
        let ext_l = left.extents();
        let ext_r = right.extents();
        for axis in 0..offset.len() {
            if offset[axis] < -NEST_TOL || offset[axis] + ext_l[axis] > ext_r[axis] + NEST_TOL {
                return Err(Error::Geometry(format!(
                    "axis {axis}: section of extent {} at offset {} leaves the outer extent {}",
                    ext_l[axis], offset[axis], ext_r[axis]
                )));
            }
        }
        Ok(JunctionEmbedding {
            left,
            right,
            offset,
        })
    }

    /// The centered placement, the default junction alignment.
    pub fn centered(left: Arc<CrossSection>, right: Arc<CrossSection>) -> Result<Self> {
        let offset = left
            .extents()
            .iter()
            .zip(right.extents())
            .map(|(l, r)| 0.5 * (r - l))
            .collect();
        Self::new(left, right, offset)
    }

    pub fn left(&self) -> &Arc<CrossSection> {
        &self.left
    }

    pub fn right(&self) -> &Arc<CrossSection> {
        &self.right
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }
}

/// `∫₀^a sin(p s) · sin(q s + φ) ds` in a cancellation-free form.
fn sine_sine_integral(a: f64, p: f64, q: f64, phi: f64) -> f64 {
    let c = p - q;
    let term_minus = if c.abs() < 1e-14 {
        a * phi.cos()
    } else {
        2.0 * (0.5 * c * a).sin() * (0.5 * c * a - phi).cos() / c
    };
    let d = p + q;
    let term_plus = 2.0 * (0.5 * d * a).sin() * (0.5 * d * a + phi).cos() / d;
    0.5 * (term_minus - term_plus)
}

/// 1D overlap `∫₀^a left(s) · right(s + offset) ds` of two axis profiles.
///
/// Sine against sine integrates in closed form; anything involving sampled
/// grid profiles uses composite midpoint quadrature, Richardson-extrapolated
/// from 512 and 1024 panels.
fn axis_overlap(left: &AxisProfile, right: &AxisProfile, offset: f64) -> f64 {
    match (left, right) {
        (
            AxisProfile::Sine {
                length: a,
                root: p,
                norm: nl,
                ..
            },
            AxisProfile::Sine {
                root: q, norm: nr, ..
            },
        ) => nl * nr * sine_sine_integral(*a, *p, *q, q * offset),
        _ => {
            let a = left.length();
            let quad = |panels: usize| -> f64 {
                let dt = a / panels as f64;
                (0..panels)
                    .map(|i| {
                        let s = (i as f64 + 0.5) * dt;
                        left.value(s) * right.value(s + offset) * dt
                    })
                    .sum()
            };
            let coarse = quad(QUADRATURE_PANELS);
            let fine = quad(2 * QUADRATURE_PANELS);
            fine + (fine - coarse) / 3.0
        }
    }
}

fn mode_overlap(left: &Mode, right: &Mode, offset: &[f64]) -> f64 {
    let mut v = left.sign() * right.sign();
    for ((al, ar), off) in left.axes().iter().zip(right.axes()).zip(offset) {
        v *= axis_overlap(al, ar, *off);
    }
    v
}

/// Overlap matrix `𝒰` with entries `⟨ψ_j^L extended by zero, ψ_k^R⟩`,
/// rows indexed by left modes.
pub fn overlap_matrix(
    embedding: &JunctionEmbedding,
    k_left: usize,
    k_right: usize,
) -> Result<DMatrix<f64>> {
    if k_left == 0 || k_left > embedding.left.count() {
        return Err(Error::Dimension(format!(
            "left truncation {k_left} out of range 1..={}",
            embedding.left.count()
        )));
    }
    if k_right == 0 || k_right > embedding.right.count() {
        return Err(Error::Dimension(format!(
            "right truncation {k_right} out of range 1..={}",
            embedding.right.count()
        )));
    }
    let entries: Vec<f64> = (0..k_left)
        .into_par_iter()
        .flat_map_iter(|j| {
            let left_mode = &embedding.left.modes()[j];
            (0..k_right).map(move |k| {
                mode_overlap(left_mode, &embedding.right.modes()[k], &embedding.offset)
            })
        })
        .collect();
    Ok(DMatrix::from_row_slice(k_left, k_right, &entries))
}

/// Which basis carries the source flux.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceFlux {
    /// Flux coefficients on right modes: the canonical growing solution
    /// lives on the right chamber (finite energy on the left).
    RightModes(DVector<f64>),
    /// Flux coefficients on left modes: the mirrored configuration with
    /// finite energy on the right chamber.
    LeftModes(DVector<f64>),
}

/// Solved coefficients attached to a transfer system.
#[derive(Debug, Clone)]
pub struct TransferSolution {
    alpha: DVector<f64>,
    beta: DVector<f64>,
    residual: f64,
    iterations: usize,
}

/// The assembled (and optionally solved) junction system.
#[derive(Debug, Clone)]
pub struct TransferSystem {
    embedding: JunctionEmbedding,
    overlap: DMatrix<f64>,
    transfer: DMatrix<f64>,
    contraction_norm: f64,
    contraction_last_change: f64,
    source: SourceFlux,
    alpha0: DVector<f64>,
    solution: Option<TransferSolution>,
}

fn sqrt_eigenvalues(section: &CrossSection) -> DVector<f64> {
    DVector::from_iterator(
        section.count(),
        section.modes().iter().map(|m| m.eigenvalue().sqrt()),
    )
}

/// Weighted h^{1/2} norm `√(Σ_j √λ_j^L v_j²)`.
fn weighted_norm(weights: &DVector<f64>, v: &DVector<f64>) -> f64 {
    weights
        .iter()
        .zip(v.iter())
        .map(|(w, x)| w * x * x)
        .sum::<f64>()
        .sqrt()
}

/// Assemble the transfer system for a flux source on right modes.
pub fn assemble_transfer(embedding: &JunctionEmbedding, gamma: &[f64]) -> Result<TransferSystem> {
    if gamma.len() != embedding.right.count() {
        return Err(Error::Dimension(format!(
            "γ needs {} right-mode entries, got {}",
            embedding.right.count(),
            gamma.len()
        )));
    }
    assemble(embedding, SourceFlux::RightModes(DVector::from_row_slice(gamma)))
}

/// Assemble the mirrored system: the source flux lives on left modes and the
/// finite-energy response on the right chamber.
pub fn assemble_transfer_left_source(
    embedding: &JunctionEmbedding,
    gamma: &[f64],
) -> Result<TransferSystem> {
    if gamma.len() != embedding.left.count() {
        return Err(Error::Dimension(format!(
            "γ needs {} left-mode entries, got {}",
            embedding.left.count(),
            gamma.len()
        )));
    }
    assemble(embedding, SourceFlux::LeftModes(DVector::from_row_slice(gamma)))
}

fn assemble(embedding: &JunctionEmbedding, source: SourceFlux) -> Result<TransferSystem> {
    let k_l = embedding.left.count();
    let k_r = embedding.right.count();
    let overlap = overlap_matrix(embedding, k_l, k_r)?;
    let sqrt_l = sqrt_eigenvalues(&embedding.left);
    let sqrt_r = sqrt_eigenvalues(&embedding.right);

    // 𝒰 Λ^R 𝒰ᵀ: scale overlap columns by √λ_k^R.
    let mut scaled = overlap.clone();
    for k in 0..k_r {
        scaled.column_mut(k).scale_mut(sqrt_r[k]);
    }
    let gram = &scaled * overlap.transpose();

    let mut transfer = gram.clone();
    for j in 0..k_l {
        transfer.row_mut(j).scale_mut(-1.0 / sqrt_l[j]);
    }

    // Symmetrized weighted operator: M = Λ^{-1/2} 𝒰 Λ^R 𝒰ᵀ Λ^{-1/2}; its top
    // eigenvalue is the weighted operator norm of T. Power iteration on the
    // weighted Gram operator TᵀT amounts to iterating M².
    let mut m = gram;
    for j in 0..k_l {
        let s = 1.0 / sqrt_l[j].sqrt();
        m.row_mut(j).scale_mut(s);
        m.column_mut(j).scale_mut(s);
    }
    let mut v = DVector::from_element(k_l, 1.0 / (k_l as f64).sqrt());
    let mut rho = 0.0;
    let mut last_change = f64::INFINITY;
    for _ in 0..50 {
        let mv = &m * &v;
        let norm = mv.norm();
        if norm == 0.0 {
            rho = 0.0;
            last_change = 0.0;
            break;
        }
        let next = mv / norm;
        let estimate = (&m * &next).dot(&next);
        last_change = ((estimate - rho) / estimate.max(f64::MIN_POSITIVE)).abs();
        rho = estimate;
        v = next;
    }

    let alpha0 = match &source {
        SourceFlux::RightModes(g) => {
            let mut a0 = &overlap * g;
            for j in 0..k_l {
                a0[j] /= sqrt_l[j];
            }
            a0
        }
        SourceFlux::LeftModes(g) => {
            let mut a0 = g.clone();
            for j in 0..k_l {
                a0[j] /= sqrt_l[j];
            }
            a0
        }
    };

    Ok(TransferSystem {
        embedding: embedding.clone(),
        overlap,
        transfer,
        contraction_norm: rho,
        contraction_last_change: last_change,
        source,
        alpha0,
        solution: None,
    })
}

impl TransferSystem {
    pub fn embedding(&self) -> &JunctionEmbedding {
        &self.embedding
    }

    pub fn overlap(&self) -> &DMatrix<f64> {
        &self.overlap
    }

    pub fn transfer_matrix(&self) -> &DMatrix<f64> {
        &self.transfer
    }

    /// Certified upper estimate of the weighted operator norm of T.
    pub fn contraction_norm(&self) -> f64 {
        self.contraction_norm
    }

    /// Relative change of the power-iteration estimate on its last step.
    pub fn contraction_last_change(&self) -> f64 {
        self.contraction_last_change
    }

    /// Weighted operator norm estimate of 𝒰 itself (its square is the norm
    /// of T, both measured between the weighted spaces).
    pub fn overlap_operator_norm(&self) -> f64 {
        self.contraction_norm.sqrt()
    }

    pub fn source(&self) -> &SourceFlux {
        &self.source
    }

    pub fn alpha0(&self) -> &DVector<f64> {
        &self.alpha0
    }

    pub fn is_solved(&self) -> bool {
        self.solution.is_some()
    }

    pub fn alpha(&self) -> Result<&DVector<f64>> {
        self.solution
            .as_ref()
            .map(|s| &s.alpha)
            .ok_or_else(|| Error::Validation("transfer system is not solved yet".into()))
    }

    pub fn beta(&self) -> Result<&DVector<f64>> {
        self.solution
            .as_ref()
            .map(|s| &s.beta)
            .ok_or_else(|| Error::Validation("transfer system is not solved yet".into()))
    }

    pub fn residual(&self) -> Result<f64> {
        self.solution
            .as_ref()
            .map(|s| s.residual)
            .ok_or_else(|| Error::Validation("transfer system is not solved yet".into()))
    }

    pub fn iterations(&self) -> Result<usize> {
        self.solution
            .as_ref()
            .map(|s| s.iterations)
            .ok_or_else(|| Error::Validation("transfer system is not solved yet".into()))
    }

    fn weights(&self) -> DVector<f64> {
        sqrt_eigenvalues(&self.embedding.left)
    }

    /// Weighted-norm residual `‖(I-T)α - α₀‖ / ‖α₀‖` of a candidate α.
    pub fn equation_residual(&self, alpha: &DVector<f64>) -> f64 {
        let weights = self.weights();
        let lhs = alpha - &self.transfer * alpha;
        let denom = weighted_norm(&weights, &self.alpha0);
        if denom == 0.0 {
            weighted_norm(&weights, &(lhs - &self.alpha0))
        } else {
            weighted_norm(&weights, &(lhs - &self.alpha0)) / denom
        }
    }

    /// Direct dense solve of `(I - T) α = α₀` (LU), independent of the
    /// fixed-point path.
    pub fn solve_direct(&self) -> Result<DVector<f64>> {
        let n = self.transfer.nrows();
        let a = DMatrix::identity(n, n) - &self.transfer;
        a.lu()
            .solve(&self.alpha0)
            .ok_or_else(|| Error::Solver("(I - T) is numerically singular".into()))
    }
}

/// Solve `(I - T) α = α₀` by the fixed-point iteration `α ← Tα + α₀`.
///
/// Requires the certified contraction norm to sit below `1 - 1e-6`; the
/// equal-section junction degenerates to norm 1 and is rejected rather than
/// regularized. The solved system carries `β = 𝒰ᵀ α` (trace matching) and
/// the verified weighted residual.
pub fn solve_transfer(system: TransferSystem) -> Result<TransferSystem> {
    let mut system = system;
    if system.contraction_norm > 1.0 - CONTRACTION_MARGIN {
        return Err(Error::ContractionFailure {
            norm: system.contraction_norm,
        });
    }
    let weights = system.weights();
    let mut alpha = system.alpha0.clone();
    let mut iterations = 0;
    loop {
        let next = &system.transfer * &alpha + &system.alpha0;
        let update = weighted_norm(&weights, &(&next - &alpha));
        let scale = weighted_norm(&weights, &next).max(1.0);
        alpha = next;
        iterations += 1;
        if update <= FIXED_POINT_TOL * scale {
            break;
        }
        if iterations >= MAX_FIXED_POINT_ITERATIONS {
            return Err(Error::Convergence(format!(
                "fixed point did not settle after {MAX_FIXED_POINT_ITERATIONS} iterations \
                 (last update {update:.3e})"
            )));
        }
    }
    let residual = system.equation_residual(&alpha);
    if residual >= RESIDUAL_BOUND {
        return Err(Error::Convergence(format!(
            "solved residual {residual:.3e} exceeds the {RESIDUAL_BOUND:e} bound"
        )));
    }
    let beta = system.overlap.transpose() * &alpha;
    system.solution = Some(TransferSolution {
        alpha,
        beta,
        residual,
        iterations,
    });
    Ok(system)
}

/// Flux vector of the canonical k-th growing solution: `2√λ_k e_k`.
pub fn canonical_flux(section: &CrossSection, k: usize) -> Result<Vec<f64>> {
    let mut gamma = vec![0.0; section.count()];
    gamma[k - 1] = 2.0 * section.frequency(k)?;
    Ok(gamma)
}

/// Assemble and solve the junction sourced by the canonical k-th growing
/// mode of the right chamber (finite energy on the left).
pub fn solve_canonical_junction(
    embedding: &JunctionEmbedding,
    source_mode: usize,
) -> Result<TransferSystem> {
    let gamma = canonical_flux(&embedding.right, source_mode)?;
    solve_transfer(assemble_transfer(embedding, &gamma)?)
}

/// Mirrored counterpart: canonical k-th growing mode of the left chamber,
/// finite energy on the right.
pub fn solve_canonical_junction_mirrored(
    embedding: &JunctionEmbedding,
    source_mode: usize,
) -> Result<TransferSystem> {
    let gamma = canonical_flux(&embedding.left, source_mode)?;
    solve_transfer(assemble_transfer_left_source(embedding, &gamma)?)
}

fn expect_canonical(gamma: &DVector<f64>, section: &CrossSection, k: usize) -> Result<()> {
    let target = 2.0 * section.frequency(k)?;
    for (i, &g) in gamma.iter().enumerate() {
        let want = if i + 1 == k { target } else { 0.0 };
        if (g - want).abs() > 1e-12 * target {
            return Err(Error::Validation(format!(
                "source flux is not the canonical mode-{k} pattern (entry {} is {g})",
                i + 1
            )));
        }
    }
    Ok(())
}

/// The matched two-sided solution of a solved canonical system: the growing
/// canonical mode on the source side plus the finite-energy correction,
/// continuous across the junction by `β = 𝒰ᵀ α`.
pub fn matched_solution(
    system: &TransferSystem,
    source_mode: usize,
) -> Result<(ModeSeries, ModeSeries)> {
    let alpha = system.alpha()?;
    let beta = system.beta()?;
    let left_terms: Vec<Term> = alpha
        .iter()
        .enumerate()
        .map(|(j, &c)| Term {
            mode: j + 1,
            coefficient: c,
            profile: Profile::GrowExp,
        })
        .collect();
    let right_terms: Vec<Term> = beta
        .iter()
        .enumerate()
        .map(|(k, &c)| Term {
            mode: k + 1,
            coefficient: c,
            profile: Profile::DecayExp,
        })
        .collect();
    match &system.source {
        SourceFlux::RightModes(gamma) => {
            expect_canonical(gamma, &system.embedding.right, source_mode)?;
            let mut right_terms = right_terms;
            right_terms.push(Term {
                mode: source_mode,
                coefficient: 1.0,
                profile: Profile::Sinh,
            });
            Ok((
                ModeSeries::new(system.embedding.left.clone(), AxialSide::Left, left_terms)?,
                ModeSeries::new(system.embedding.right.clone(), AxialSide::Right, right_terms)?,
            ))
        }
        SourceFlux::LeftModes(gamma) => {
            expect_canonical(gamma, &system.embedding.left, source_mode)?;
            let mut left_terms = left_terms;
            // The left-chamber canonical solution is e^{-ax} - e^{ax},
            // the mirror image of the Sinh profile.
            left_terms.push(Term {
                mode: source_mode,
                coefficient: -1.0,
                profile: Profile::Sinh,
            });
            Ok((
                ModeSeries::new(system.embedding.left.clone(), AxialSide::Left, left_terms)?,
                ModeSeries::new(system.embedding.right.clone(), AxialSide::Right, right_terms)?,
            ))
        }
    }
}

/// Compliance of the junction force: `⟨γ, trace of the finite-energy part⟩`,
/// the maximum of the force's quadratic functional.
pub fn compliance(system: &TransferSystem) -> Result<f64> {
    match &system.source {
        SourceFlux::RightModes(gamma) => Ok(gamma.dot(system.beta()?)),
        SourceFlux::LeftModes(gamma) => Ok(gamma.dot(system.alpha()?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::section::{compute_spectrum, SectionKind};
    use std::f64::consts::PI;

    fn interval(length: f64, k: usize) -> Arc<CrossSection> {
        Arc::new(compute_spectrum(SectionKind::Interval { length }, k).unwrap())
    }

    fn nested(k: usize) -> JunctionEmbedding {
        JunctionEmbedding::new(interval(1.0, k), interval(2.0, k), vec![0.0]).unwrap()
    }

    /// Adaptive Simpson quadrature, the independent oracle for overlap
    /// entries.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, tol / 2.0, depth - 1)
                    + recurse(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        recurse(f, a, b, simpson(f, a, b), tol, 40)
    }

    #[test]
    fn identity_overlap_for_equal_sections() {
        let s = interval(1.5, 6);
        let emb = JunctionEmbedding::new(s.clone(), s.clone(), vec![0.0]).unwrap();
        let u = overlap_matrix(&emb, 6, 6).unwrap();
        for j in 0..6 {
            for k in 0..6 {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((u[(j, k)] - want).abs() < 1e-12, "entry ({j},{k}) = {}", u[(j, k)]);
            }
        }
    }

    #[test]
    fn nested_entry_matches_closed_form_and_quadrature() {
        let emb = nested(4);
        let u = overlap_matrix(&emb, 4, 4).unwrap();
        // ∫₀¹ √2 sin(πs) · sin(πs/2) ds = 4√2/(3π), confirmed by the
        // adaptive quadrature oracle before being frozen here.
        let closed = 4.0 * 2.0f64.sqrt() / (3.0 * PI);
        assert!((u[(0, 0)] - closed).abs() < 1e-12, "entry {} vs {closed}", u[(0, 0)]);
        let oracle = adaptive_simpson(
            &|s: f64| 2.0f64.sqrt() * (PI * s).sin() * (PI * s / 2.0).sin(),
            0.0,
            1.0,
            1e-12,
        );
        assert!((u[(0, 0)] - oracle).abs() < 1e-10, "entry {} vs oracle {oracle}", u[(0, 0)]);
    }

    #[test]
    fn offset_entries_match_quadrature_oracle() {
        let left = interval(1.0, 3);
        let right = interval(2.0, 3);
        let emb = JunctionEmbedding::new(left, right, vec![0.5]).unwrap();
        let u = overlap_matrix(&emb, 3, 3).unwrap();
        for j in 1..=3usize {
            for k in 1..=3usize {
                let f = move |s: f64| {
                    2.0f64.sqrt() * (j as f64 * PI * s).sin()
                        * (k as f64 * PI * (s + 0.5) / 2.0).sin()
                };
                let oracle = adaptive_simpson(&f, 0.0, 1.0, 1e-12);
                assert!(
                    (u[(j - 1, k - 1)] - oracle).abs() < 1e-10,
                    "({j},{k}): {} vs {oracle}",
                    u[(j - 1, k - 1)]
                );
            }
        }
    }

    #[test]
    fn grid_overlap_agrees_with_analytic() {
        let left_grid = Arc::new(
            compute_spectrum(SectionKind::Grid1d { length: 1.0, n: 255 }, 3).unwrap(),
        );
        let right = interval(2.0, 3);
        let emb_grid = JunctionEmbedding::new(left_grid, right.clone(), vec![0.5]).unwrap();
        let emb_exact = JunctionEmbedding::new(interval(1.0, 3), right, vec![0.5]).unwrap();
        let u_grid = overlap_matrix(&emb_grid, 3, 3).unwrap();
        let u_exact = overlap_matrix(&emb_exact, 3, 3).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                assert!(
                    (u_grid[(j, k)] - u_exact[(j, k)]).abs() < 1e-3,
                    "({j},{k}): {} vs {}",
                    u_grid[(j, k)],
                    u_exact[(j, k)]
                );
            }
        }
    }

    #[test]
    fn overlap_rows_approach_unit_norm() {
        // Parseval for extension by zero: row sums of 𝒰𝒰ᵀ tend to 1 as the
        // right truncation grows.
        let left = interval(1.0, 4);
        let right = interval(2.0, 64);
        let emb = JunctionEmbedding::new(left, right, vec![0.0]).unwrap();
        let u = overlap_matrix(&emb, 4, 64).unwrap();
        for j in 0..4 {
            let row_norm: f64 = (0..64).map(|k| u[(j, k)] * u[(j, k)]).sum();
            assert!(
                (row_norm - 1.0).abs() < 1e-3,
                "row {j} squared norm {row_norm}"
            );
        }
    }

    #[test]
    fn partial_isometry_defect_shrinks_with_right_truncation() {
        let left = interval(1.0, 8);
        let mut defects = Vec::new();
        for k_r in [16usize, 32, 64] {
            let right = interval(2.0, k_r);
            let emb = JunctionEmbedding::new(left.clone(), right, vec![0.0]).unwrap();
            let u = overlap_matrix(&emb, 8, k_r).unwrap();
            let gram = &u * u.transpose();
            let defect = (gram - DMatrix::<f64>::identity(8, 8)).norm();
            defects.push(defect);
        }
        assert!(defects[1] <= defects[0] + 1e-4, "{defects:?}");
        assert!(defects[2] <= defects[1] + 1e-4, "{defects:?}");
    }

    #[test]
    fn embedding_validation() {
        assert!(JunctionEmbedding::new(interval(2.0, 2), interval(1.0, 2), vec![0.0]).is_err());
        assert!(JunctionEmbedding::new(interval(1.0, 2), interval(2.0, 2), vec![1.5]).is_err());
        let emb = JunctionEmbedding::centered(interval(1.0, 2), interval(2.0, 2)).unwrap();
        assert_eq!(emb.offset(), &[0.5]);
    }

    #[test]
    fn equal_sections_degenerate_to_norm_one_and_fail() {
        let s = interval(1.0, 8);
        let emb = JunctionEmbedding::new(s.clone(), s.clone(), vec![0.0]).unwrap();
        let gamma = canonical_flux(&emb.right, 1).unwrap();
        let system = assemble_transfer(&emb, &gamma).unwrap();
        assert!(
            (system.contraction_norm() - 1.0).abs() < 1e-9,
            "norm {}",
            system.contraction_norm()
        );
        assert!(matches!(
            solve_transfer(system),
            Err(Error::ContractionFailure { .. })
        ));
    }

    #[test]
    fn degenerate_junction_direct_solve_matches_closed_form() {
        // Equal sections reduce to a single cylinder, where the matched
        // solution is e^{√λ₁ x} ψ₁ globally: α = e₁ exactly. This pins the
        // sign of the transfer operator.
        let s = interval(PI, 6);
        let emb = JunctionEmbedding::new(s.clone(), s.clone(), vec![0.0]).unwrap();
        let gamma = canonical_flux(&emb.right, 1).unwrap();
        let system = assemble_transfer(&emb, &gamma).unwrap();
        let alpha = system.solve_direct().unwrap();
        assert!((alpha[0] - 1.0).abs() < 1e-10, "α₁ = {}", alpha[0]);
        for j in 1..6 {
            assert!(alpha[j].abs() < 1e-10, "α_{} = {}", j + 1, alpha[j]);
        }
    }

    #[test]
    fn nested_intervals_contract() {
        let emb = nested(32);
        let gamma = canonical_flux(&emb.right, 1).unwrap();
        let system = assemble_transfer(&emb, &gamma).unwrap();
        assert!(
            system.contraction_norm() < 1.0,
            "norm {}",
            system.contraction_norm()
        );
        assert!(system.contraction_last_change() < 1e-6);
        assert!(system.overlap_operator_norm() <= 1.0 + 1e-6);
    }

    #[test]
    fn solve_produces_tiny_residual_and_positive_alpha1() {
        let system = solve_canonical_junction(&nested(32), 1).unwrap();
        assert!(system.residual().unwrap() < 1e-10);
        assert!(system.alpha().unwrap()[0] > 0.0);
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let emb = nested(8);
        let system = assemble_transfer(&emb, &vec![0.0; 8]).unwrap();
        assert_eq!(system.alpha0().norm(), 0.0);
        let solved = solve_transfer(system).unwrap();
        assert_eq!(solved.alpha().unwrap().norm(), 0.0);
        assert_eq!(compliance(&solved).unwrap(), 0.0);
    }

    #[test]
    fn solution_is_linear_in_the_source() {
        let emb = nested(16);
        let mut gamma = canonical_flux(&emb.right, 1).unwrap();
        let base = solve_transfer(assemble_transfer(&emb, &gamma).unwrap()).unwrap();
        let c = -2.75;
        gamma.iter_mut().for_each(|g| *g *= c);
        let scaled = solve_transfer(assemble_transfer(&emb, &gamma).unwrap()).unwrap();
        let diff = (scaled.alpha().unwrap() - base.alpha().unwrap() * c).norm();
        assert!(diff < 1e-12 * base.alpha().unwrap().norm().max(1.0));
        let diff_beta = (scaled.beta().unwrap() - base.beta().unwrap() * c).norm();
        assert!(diff_beta < 1e-12);
        // Compliance is quadratic in the source.
        let ratio = compliance(&scaled).unwrap() / compliance(&base).unwrap();
        assert!((ratio - c * c).abs() < 1e-9, "ratio {ratio}");
    }

    #[test]
    fn direct_and_fixed_point_agree() {
        let system = solve_canonical_junction(&nested(32), 1).unwrap();
        let direct = system.solve_direct().unwrap();
        let weights = sqrt_eigenvalues(&system.embedding().left);
        let diff = weighted_norm(&weights, &(system.alpha().unwrap() - &direct));
        let scale = weighted_norm(&weights, &direct);
        assert!(diff / scale < 1e-10, "weighted disagreement {}", diff / scale);
    }

    #[test]
    fn alpha1_is_stable_under_truncation() {
        let a16 = solve_canonical_junction(&nested(16), 1).unwrap().alpha().unwrap()[0];
        let a32 = solve_canonical_junction(&nested(32), 1).unwrap().alpha().unwrap()[0];
        assert!(
            ((a16 - a32) / a32).abs() < 1e-3,
            "α₁ drifted from {a16} to {a32}"
        );
    }

    #[test]
    fn flux_jump_identity_holds_per_mode() {
        let system = solve_canonical_junction(&nested(32), 1).unwrap();
        let alpha = system.alpha().unwrap();
        let beta = system.beta().unwrap();
        let left = system.embedding().left();
        let right = system.embedding().right();
        let SourceFlux::RightModes(gamma) = system.source() else {
            unreachable!()
        };
        for j in 0..left.count() {
            let lhs = left.frequency(j + 1).unwrap() * alpha[j];
            let mut rhs = 0.0;
            for k in 0..right.count() {
                rhs += system.overlap()[(j, k)]
                    * (gamma[k] - right.frequency(k + 1).unwrap() * beta[k]);
            }
            assert!(
                (lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0),
                "mode {}: flux balance off by {}",
                j + 1,
                lhs - rhs
            );
        }
    }

    #[test]
    fn matched_solution_coefficient_continuity() {
        // β is the projection of the left trace onto right modes; recompute
        // that projection by quadrature of the evaluated trace and compare.
        let system = solve_canonical_junction(&nested(16), 1).unwrap();
        let (left, _right) = matched_solution(&system, 1).unwrap();
        let beta = system.beta().unwrap();
        let (trace, _) = left.boundary_trace_and_flux();
        let offset = system.embedding().offset()[0];
        for k in 1..=8usize {
            let f = |y: f64| {
                let s = y - offset;
                if s <= 0.0 || s >= 1.0 {
                    return 0.0;
                }
                let mut acc = 0.0;
                for (j, &c) in trace.iter().enumerate() {
                    acc += c
                        * (2.0f64).sqrt()
                        * ((j + 1) as f64 * PI * s).sin();
                }
                acc * (k as f64 * PI * y / 2.0).sin() // √(2/2) = 1
            };
            let projected = adaptive_simpson(&f, offset, offset + 1.0, 1e-12);
            assert!(
                (projected - beta[k - 1]).abs() < 1e-8,
                "mode {k}: quadrature projection {projected} vs β {}",
                beta[k - 1]
            );
        }
    }

    #[test]
    fn matched_solution_pointwise_defect_shrinks_with_truncation() {
        // The truncated right trace cannot match the left trace pointwise to
        // spectral accuracy (coefficients decay like k⁻²); the defect must
        // shrink as the right truncation grows.
        let mut defects = Vec::new();
        for k in [8usize, 16, 32, 64] {
            let system = solve_canonical_junction(&nested(k), 1).unwrap();
            let (left, right) = matched_solution(&system, 1).unwrap();
            let mut worst: f64 = 0.0;
            for i in 1..100 {
                let y = 2.0 * i as f64 / 100.0;
                let l = if y > 0.5 && y < 1.5 {
                    left.evaluate(0.0, &[y - 0.5]).unwrap()
                } else {
                    0.0
                };
                let r = right.evaluate(0.0, &[y]).unwrap();
                worst = worst.max((l - r).abs());
            }
            defects.push(worst);
        }
        assert!(defects[3] < defects[0], "defects {defects:?}");
        assert!(defects[3] < 0.05, "defect at K=64 is {}", defects[3]);
    }

    #[test]
    fn mirrored_solve_is_consistent() {
        let emb = nested(16);
        let system = solve_canonical_junction_mirrored(&emb, 1).unwrap();
        assert!(system.residual().unwrap() < 1e-10);
        let (left, right) = matched_solution(&system, 1).unwrap();
        // Finite energy now sits on the right: the left series carries the
        // mirrored canonical term and grows toward -∞.
        let far_left = left.evaluate(-3.0, &[0.5]).unwrap();
        assert!(far_left > 1.0, "mirrored solution fades on the left: {far_left}");
        let far_right = right.evaluate(3.0, &[1.0]).unwrap();
        assert!(far_right.abs() < 0.1, "mirrored solution grows on the right: {far_right}");
    }

    #[test]
    fn matched_solution_requires_canonical_source() {
        let emb = nested(8);
        let gamma = vec![1.0; 8];
        let system = solve_transfer(assemble_transfer(&emb, &gamma).unwrap()).unwrap();
        assert!(matched_solution(&system, 1).is_err());
    }
}
