//! Dimension counts and explicit bases for the admissible solution spaces.
//!
//! A solution space is cut out by a frequency-squared threshold at each
//! infinite end (or by requiring finite energy there). Its dimension is the
//! sum of the Morse indices of the two thresholds; the basis members with
//! finite energy on the left are matched solutions sourced by each admissible
//! right mode, with pairwise independence certified from the rank of their
//! coefficient matrix.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::almgren::{frequency_limit, FrequencyVariant, LimitCertificate};
use crate::error::{Error, Result};
use crate::field::ModeSeries;
use crate::junction::{matched_solution, solve_canonical_junction, JunctionEmbedding, TransferSystem};
use crate::section::{morse_index, CrossSection};

/// Relative singular-value cutoff certifying basis independence.
const RANK_CUTOFF: f64 = 1e-8;

/// Condition on one infinite end of the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyCondition {
    /// Finite Dirichlet energy toward that end; contributes nothing to the
    /// dimension count.
    FiniteEnergy,
    /// Frequency-squared threshold; must coincide with a computed eigenvalue.
    Threshold(f64),
}

/// Thresholds for the two ends of a two-chamber domain.
#[derive(Debug, Clone, Copy)]
pub struct SolutionSpaceSpec {
    pub right: EnergyCondition,
    pub left: EnergyCondition,
}

impl SolutionSpaceSpec {
    /// Validates that declared thresholds coincide with computed eigenvalues
    /// (within 1e-9) and snaps them bitwise so Morse counts are exact.
    pub fn new(
        right: EnergyCondition,
        left: EnergyCondition,
        right_section: &CrossSection,
        left_section: &CrossSection,
    ) -> Result<Self> {
        Ok(SolutionSpaceSpec {
            right: snap_condition(right, right_section, "right")?,
            left: snap_condition(left, left_section, "left")?,
        })
    }
}

fn snap_condition(
    condition: EnergyCondition,
    section: &CrossSection,
    side: &str,
) -> Result<EnergyCondition> {
    match condition {
        EnergyCondition::FiniteEnergy => Ok(condition),
        EnergyCondition::Threshold(d) => {
            let snapped = section
                .eigenvalues()
                .into_iter()
                .find(|ev| (ev - d).abs() < 1e-9)
                .ok_or_else(|| {
                    Error::Validation(format!(
                        "{side} threshold {d} does not coincide with any computed eigenvalue"
                    ))
                })?;
            Ok(EnergyCondition::Threshold(snapped))
        }
    }
}

/// Dimension of the admissible space: `m(d^R) + m(d^L)` with a finite-energy
/// side contributing zero.
pub fn space_dimension(
    spec: &SolutionSpaceSpec,
    left: &CrossSection,
    right: &CrossSection,
) -> Result<usize> {
    let m_r = match spec.right {
        EnergyCondition::FiniteEnergy => 0,
        EnergyCondition::Threshold(d) => morse_index(right, d)?,
    };
    let m_l = match spec.left {
        EnergyCondition::FiniteEnergy => 0,
        EnergyCondition::Threshold(d) => morse_index(left, d)?,
    };
    Ok(m_r + m_l)
}

/// One member of the finite-left-energy basis.
#[derive(Debug, Clone)]
pub struct BasisMember {
    pub source_mode: usize,
    pub source_eigenvalue: f64,
    pub left: ModeSeries,
    pub right: ModeSeries,
    pub system: TransferSystem,
    /// Frequency limit toward +∞ with its spectral match.
    pub certificate: LimitCertificate,
}

/// The computed basis plus its independence certificate.
#[derive(Debug, Clone)]
pub struct SolutionBasis {
    pub members: Vec<BasisMember>,
    /// Smallest over largest singular value of the α-coefficient matrix.
    pub singular_value_ratio: f64,
    pub truncation: usize,
}

/// One matched solution per right source mode `k ≤ k_max`; eigenspaces
/// contribute one member per sign-fixed eigenfunction. Independence is
/// certified by the singular values of the stacked α vectors.
pub fn basis_for_sl(embedding: &JunctionEmbedding, k_max: usize) -> Result<SolutionBasis> {
    if k_max == 0 || k_max > embedding.right().count() {
        return Err(Error::Dimension(format!(
            "k_max = {k_max} out of range 1..={}",
            embedding.right().count()
        )));
    }
    let mut members = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let system = solve_canonical_junction(embedding, k)?;
        let (left, right) = matched_solution(&system, k)?;
        let window_lo = 8.0 / embedding.right().frequency(1)?;
        let (_, certificate) = frequency_limit(
            &right,
            FrequencyVariant::CylindricalFromZero,
            (window_lo, window_lo + 4.0),
            1e-3,
        )?;
        members.push(BasisMember {
            source_mode: k,
            source_eigenvalue: embedding.right().eigenvalue(k)?,
            left,
            right,
            system,
            certificate,
        });
    }

    let k_l = embedding.left().count();
    let mut coeffs = DMatrix::<f64>::zeros(k_max, k_l);
    for (row, member) in members.iter().enumerate() {
        let alpha = member.system.alpha()?;
        for j in 0..k_l {
            coeffs[(row, j)] = alpha[j];
        }
    }
    let svd = coeffs.svd(false, false);
    let s_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let s_min = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let ratio = if s_max == 0.0 { 0.0 } else { s_min / s_max };
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_CUTOFF * s_max)
        .count();
    if rank < k_max {
        return Err(Error::Dependence(format!(
            "α-coefficient matrix has rank {rank} < {k_max}; truncation K = {k_l} is too coarse"
        )));
    }
    Ok(SolutionBasis {
        members,
        singular_value_ratio: ratio,
        truncation: k_l,
    })
}

/// A matched solution pair (left chamber series, right chamber series).
pub type SolutionPair = (ModeSeries, ModeSeries);

/// Positivity verdict of a sampled combination.
#[derive(Debug, Clone, Copy)]
pub struct PositivityVerdict {
    pub min_value: f64,
    pub samples: usize,
    pub positive: bool,
}

/// Sample `c_l·v_l + c_r·v_r` on an interior grid of both chambers and
/// report the minimum. `x_extent` bounds the axial sampling on each side;
/// `per_axis` controls the grid resolution.
pub fn combination_min_on_grid(
    c_l: f64,
    c_r: f64,
    v_l: &SolutionPair,
    v_r: &SolutionPair,
    x_extent: f64,
    per_axis: usize,
) -> Result<PositivityVerdict> {
    let left = v_l.0.linear_combination(c_l, &v_r.0, c_r)?;
    let right = v_l.1.linear_combination(c_l, &v_r.1, c_r)?;
    let mut min_value = f64::INFINITY;
    let mut samples = 0;
    let mut visit = |series: &ModeSeries, sign: f64| -> Result<()> {
        let ext = series.section().extents();
        for i in 1..=per_axis {
            let x = sign * x_extent * i as f64 / per_axis as f64;
            match ext.len() {
                1 => {
                    for j in 1..per_axis {
                        let y = [ext[0] * j as f64 / per_axis as f64];
                        min_value = min_value.min(series.evaluate(x, &y)?);
                        samples += 1;
                    }
                }
                _ => {
                    for j in 1..per_axis {
                        for l in 1..per_axis {
                            let y = [
                                ext[0] * j as f64 / per_axis as f64,
                                ext[1] * l as f64 / per_axis as f64,
                            ];
                            min_value = min_value.min(series.evaluate(x, &y)?);
                            samples += 1;
                        }
                    }
                }
            }
        }
        Ok(())
    };
    visit(&left, -1.0)?;
    visit(&right, 1.0)?;
    Ok(PositivityVerdict {
        min_value,
        samples,
        positive: min_value > 0.0,
    })
}

/// Positive-cone membership of a convex combination of the two extremal
/// solutions; requires nonnegative weights, not both zero.
pub fn positive_cone_membership(
    c_l: f64,
    c_r: f64,
    v_l: &SolutionPair,
    v_r: &SolutionPair,
    x_extent: f64,
    per_axis: usize,
) -> Result<PositivityVerdict> {
    if c_l < 0.0 || c_r < 0.0 || c_l + c_r <= 0.0 {
        return Err(Error::Validation(format!(
            "cone weights must be nonnegative and not both zero, got ({c_l}, {c_r})"
        )));
    }
    combination_min_on_grid(c_l, c_r, v_l, v_r, x_extent, per_axis)
}
