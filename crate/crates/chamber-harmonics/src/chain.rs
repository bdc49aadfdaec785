//! Junction transfer composed across a concatenation of chambers.
//!
//! Each consecutive pair of sections is solved as an isolated junction with
//! the canonical unit source on its wider chamber; the matched solution is
//! normalized so the sourced mode carries coefficient 1 before feeding the
//! next junction. Under that normalization the end-to-end first-mode
//! amplitude is the product of the per-junction first components,
//! `κ = α₁¹ · α₁² · …`, which is the constant in the far-field asymptotics
//! `u ~ κ e^{√λ₁¹ x} ψ₁¹` toward the narrow end.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::ModeSeries;
use crate::junction::{
    matched_solution, solve_canonical_junction, JunctionEmbedding, TransferSystem,
};
use crate::oracle::log_linear_fit;
use crate::section::CrossSection;

/// A solved multi-chamber chain.
#[derive(Debug, Clone)]
pub struct ChamberChain {
    sections: Vec<Arc<CrossSection>>,
    junctions: Vec<TransferSystem>,
    source_mode: usize,
    kappa: f64,
}

/// Solve a chain of nested sections, narrow to wide, with the canonical
/// source mode on the last chamber.
///
/// `offsets[j]` places section `j` inside section `j+1`. Junctions are
/// solved right to left; each solve feeds the next through the unit-source
/// normalization, so inner junctions always see the canonical first-mode
/// flux. A contraction failure aborts with the junction index.
pub fn chain_solve(
    sections: Vec<Arc<CrossSection>>,
    offsets: &[Vec<f64>],
    source_mode: usize,
) -> Result<ChamberChain> {
    if sections.len() < 2 {
        return Err(Error::Geometry("a chain needs at least two chambers".into()));
    }
    if offsets.len() != sections.len() - 1 {
        return Err(Error::Geometry(format!(
            "{} chambers need {} junction offsets, got {}",
            sections.len(),
            sections.len() - 1,
            offsets.len()
        )));
    }
    let embeddings: Vec<JunctionEmbedding> = sections
        .windows(2)
        .zip(offsets)
        .enumerate()
        .map(|(j, (pair, off))| {
            JunctionEmbedding::new(pair[0].clone(), pair[1].clone(), off.clone()).map_err(|e| {
                Error::Geometry(format!("junction {}: {e}", j + 1))
            })
        })
        .collect::<Result<_>>()?;

    // Right to left; the rightmost junction carries the requested source
    // mode, inner junctions propagate the surviving first mode.
    let mut junctions: Vec<Option<TransferSystem>> = vec![None; embeddings.len()];
    for j in (0..embeddings.len()).rev() {
        let mode = if j == embeddings.len() - 1 { source_mode } else { 1 };
        let solved = solve_canonical_junction(&embeddings[j], mode).map_err(|e| match e {
            Error::ContractionFailure { norm } => Error::Convergence(format!(
                "junction {} is not a contraction (norm {norm}); chain solve aborted",
                j + 1
            )),
            other => other,
        })?;
        junctions[j] = Some(solved);
    }
    let junctions: Vec<TransferSystem> = junctions.into_iter().map(Option::unwrap).collect();
    let kappa = junctions
        .iter()
        .map(|system| system.alpha().map(|a| a[0]))
        .product::<Result<f64>>()?;
    Ok(ChamberChain {
        sections,
        junctions,
        source_mode,
        kappa,
    })
}

impl ChamberChain {
    pub fn sections(&self) -> &[Arc<CrossSection>] {
        &self.sections
    }

    pub fn junctions(&self) -> &[TransferSystem] {
        &self.junctions
    }

    pub fn source_mode(&self) -> usize {
        self.source_mode
    }

    /// First α components per junction, right-chamber order left to right.
    pub fn alpha1_per_junction(&self) -> Result<Vec<f64>> {
        self.junctions
            .iter()
            .map(|system| system.alpha().map(|a| a[0]))
            .collect()
    }

    /// The leftmost chamber's series under the product normalization: the
    /// matched solution of the first junction scaled by the downstream
    /// first-mode amplitudes.
    pub fn leftmost_series(&self) -> Result<ModeSeries> {
        let (left, _) = matched_solution(&self.junctions[0], if self.junctions.len() == 1 {
            self.source_mode
        } else {
            1
        })?;
        let downstream: f64 = self
            .junctions
            .iter()
            .skip(1)
            .map(|system| system.alpha().map(|a| a[0]))
            .product::<Result<f64>>()?;
        Ok(left.scaled(downstream))
    }

    /// Diagnostics of the far-field asymptotics: regression of the leftmost
    /// first-mode projection `ln c₁(x)` over `slices`, returning
    /// `(slope, intercept)`; the slope recovers `√λ₁¹` and the intercept
    /// `ln κ`.
    pub fn asymptotic_regression(&self, slices: &[f64]) -> Result<(f64, f64)> {
        let series = self.leftmost_series()?;
        let points: Vec<(f64, f64)> = slices
            .iter()
            .map(|&x| series_mode1_projection(&series, x).map(|c| (x, c)))
            .collect::<Result<_>>()?;
        log_linear_fit(&points)
    }
}

/// Slice projection onto mode 1; orthonormality reduces it to the mode's
/// own axial factor.
fn series_mode1_projection(series: &ModeSeries, x: f64) -> Result<f64> {
    let mut value = 0.0;
    for t in series.terms() {
        if t.mode == 1 {
            let a = series.section().frequency(1)?;
            value += t.coefficient * t.profile.value(a, x)?;
        }
    }
    Ok(value)
}

/// `κ`: the product of per-junction first components; the chain must carry
/// the first-mode source.
pub fn kappa(chain: &ChamberChain) -> Result<f64> {
    if chain.source_mode != 1 {
        return Err(Error::Validation(format!(
            "κ is defined for the first-mode source, chain was solved with mode {}",
            chain.source_mode
        )));
    }
    Ok(chain.kappa)
}
