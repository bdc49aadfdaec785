//! Harmonic fields on a chamber represented as mode series.
//!
//! A series is a finite sum `Σ c_k · p_k(√λ_k · x) · ψ_k(y)` over modes of a
//! cross-section, where the axial profile `p_k` is one of `e^{+ax}`,
//! `e^{-ax}` or `e^{ax} - e^{-ax}`. Every term is exactly harmonic, so the
//! only approximation anywhere is truncation. Axial energy integrals have
//! closed forms (per mode the density is `2a²A²e^{2ax} + 2a²B²e^{-2ax}`,
//! cross terms cancel), which keeps the frequency quotients quadrature-free.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::section::CrossSection;

/// Largest exponent magnitude accepted by profile evaluation. Beyond this,
/// `exp` would overflow and silently corrupt frequency limits, so the crate
/// errors out instead of saturating.
pub const EXP_GUARD: f64 = 700.0;

/// Axial profile shape of one term, with rate `a = √λ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `e^{+a x}` — finite energy toward −∞, growing toward +∞.
    GrowExp,
    /// `e^{-a x}` — finite energy toward +∞.
    DecayExp,
    /// `e^{a x} - e^{-a x}` — vanishes on the junction plane `x = 0`.
    Sinh,
}

impl Profile {
    pub fn value(self, a: f64, x: f64) -> Result<f64> {
        let t = a * x;
        if t.abs() > EXP_GUARD {
            return Err(Error::Range(format!(
                "profile exponent |{t:.3}| exceeds {EXP_GUARD}"
            )));
        }
        Ok(match self {
            Profile::GrowExp => t.exp(),
            Profile::DecayExp => (-t).exp(),
            Profile::Sinh => t.exp() - (-t).exp(),
        })
    }

    pub fn value_at_zero(self) -> f64 {
        match self {
            Profile::GrowExp | Profile::DecayExp => 1.0,
            Profile::Sinh => 0.0,
        }
    }

    /// d/dx of the profile at x = 0 (units of `a`).
    pub fn slope_at_zero(self, a: f64) -> f64 {
        match self {
            Profile::GrowExp => a,
            Profile::DecayExp => -a,
            Profile::Sinh => 2.0 * a,
        }
    }
}

/// Which half-cylinder the series lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxialSide {
    /// x ≤ 0.
    Left,
    /// x ≥ 0.
    Right,
}

impl AxialSide {
    pub fn admits(self, x: f64) -> bool {
        match self {
            AxialSide::Left => x <= 0.0,
            AxialSide::Right => x >= 0.0,
        }
    }
}

/// One term of a series: 1-based mode index, coefficient and profile.
#[derive(Debug, Clone, Copy)]
pub struct Term {
    pub mode: usize,
    pub coefficient: f64,
    pub profile: Profile,
}

/// A harmonic function on one chamber.
#[derive(Debug, Clone)]
pub struct ModeSeries {
    section: Arc<CrossSection>,
    side: AxialSide,
    terms: Vec<Term>,
}

impl ModeSeries {
    pub fn new(section: Arc<CrossSection>, side: AxialSide, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            if t.mode == 0 || t.mode > section.count() {
                return Err(Error::Dimension(format!(
                    "term mode index {} out of range 1..={}",
                    t.mode,
                    section.count()
                )));
            }
        }
        Ok(ModeSeries {
            section,
            side,
            terms,
        })
    }

    pub fn section(&self) -> &Arc<CrossSection> {
        &self.section
    }

    pub fn side(&self) -> AxialSide {
        self.side
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// `a·self + b·other`; both series must share section and side.
    pub fn linear_combination(&self, a: f64, other: &ModeSeries, b: f64) -> Result<ModeSeries> {
        if !Arc::ptr_eq(&self.section, &other.section) {
            return Err(Error::Validation(
                "series arithmetic requires the same section instance".into(),
            ));
        }
        if self.side != other.side {
            return Err(Error::Validation(
                "series arithmetic requires matching axial sides".into(),
            ));
        }
        let mut terms: Vec<Term> = self
            .terms
            .iter()
            .map(|t| Term {
                coefficient: a * t.coefficient,
                ..*t
            })
            .collect();
        terms.extend(other.terms.iter().map(|t| Term {
            coefficient: b * t.coefficient,
            ..*t
        }));
        ModeSeries::new(self.section.clone(), self.side, terms)
    }

    pub fn scaled(&self, c: f64) -> ModeSeries {
        ModeSeries {
            section: self.section.clone(),
            side: self.side,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coefficient: c * t.coefficient,
                    ..*t
                })
                .collect(),
        }
    }

    /// Pointwise value at axial coordinate `x` and section coordinates `y`.
    pub fn evaluate(&self, x: f64, y: &[f64]) -> Result<f64> {
        if !self.side.admits(x) {
            return Err(Error::Geometry(format!(
                "x = {x} is off the series side {:?}",
                self.side
            )));
        }
        if !self.section.contains(y) {
            return Err(Error::Geometry(format!("{y:?} outside the section")));
        }
        let mut acc = 0.0;
        for t in &self.terms {
            let mode = self.section.mode(t.mode)?;
            let a = mode.eigenvalue().sqrt();
            acc += t.coefficient * t.profile.value(a, x)? * mode.value(y);
        }
        Ok(acc)
    }

    /// Per-mode trace and normal-derivative coefficients on the plane x = 0.
    ///
    /// Entry `k-1` of the first vector is `Σ c·p(0)` over the terms on mode
    /// `k`; the second vector carries `Σ c·p'(0)`. The canonical k-th
    /// solution therefore reports flux `2√λ_k` on mode `k` and 0 elsewhere.
    pub fn boundary_trace_and_flux(&self) -> (Vec<f64>, Vec<f64>) {
        let k = self.section.count();
        let mut trace = vec![0.0; k];
        let mut flux = vec![0.0; k];
        for t in &self.terms {
            let a = self.section.modes()[t.mode - 1].eigenvalue().sqrt();
            trace[t.mode - 1] += t.coefficient * t.profile.value_at_zero();
            flux[t.mode - 1] += t.coefficient * t.profile.slope_at_zero(a);
        }
        (trace, flux)
    }

    /// Per-mode amplitudes `(A_k, B_k)` of `A e^{a x} + B e^{-a x}`.
    pub(crate) fn exponential_amplitudes(&self) -> Vec<(f64, f64)> {
        let mut amp = vec![(0.0, 0.0); self.section.count()];
        for t in &self.terms {
            let slot = &mut amp[t.mode - 1];
            match t.profile {
                Profile::GrowExp => slot.0 += t.coefficient,
                Profile::DecayExp => slot.1 += t.coefficient,
                Profile::Sinh => {
                    slot.0 += t.coefficient;
                    slot.1 -= t.coefficient;
                }
            }
        }
        amp
    }

    /// Squared L² norm of the slice at `x`: `Σ_k f_k(x)²`.
    pub(crate) fn slice_norm_sq(&self, x: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (idx, (ea, eb)) in self.exponential_amplitudes().into_iter().enumerate() {
            if ea == 0.0 && eb == 0.0 {
                continue;
            }
            let a = self.section.modes()[idx].eigenvalue().sqrt();
            let f = ea * Profile::GrowExp.value(a, x)? + eb * Profile::DecayExp.value(a, x)?;
            acc += f * f;
        }
        Ok(acc)
    }

    /// Dirichlet energy over the axial range `(x0, x1)`, exact per mode.
    pub fn energy(&self, x0: f64, x1: f64) -> Result<f64> {
        if !(x0 < x1) {
            return Err(Error::Validation(format!("empty axial range ({x0}, {x1})")));
        }
        let mut acc = 0.0;
        for (idx, (ea, eb)) in self.exponential_amplitudes().into_iter().enumerate() {
            if ea == 0.0 && eb == 0.0 {
                continue;
            }
            let a = self.section.modes()[idx].eigenvalue().sqrt();
            acc += axial_energy(a, ea, eb, x0, x1)?;
        }
        Ok(acc)
    }

    /// Dirichlet energy over `(-∞, x)`; every mode must be purely growing.
    pub(crate) fn energy_from_minus_infinity(&self, x: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (idx, (ea, eb)) in self.exponential_amplitudes().into_iter().enumerate() {
            if eb != 0.0 {
                return Err(Error::Validation(
                    "series has infinite energy toward -infinity (decaying component present)"
                        .into(),
                ));
            }
            if ea == 0.0 {
                continue;
            }
            let a = self.section.modes()[idx].eigenvalue().sqrt();
            let g = Profile::GrowExp.value(a, x)?;
            acc += a * ea * ea * g * g;
        }
        Ok(acc)
    }
}

/// `∫_{x0}^{x1} f'² + a²f² dx` for `f = A e^{ax} + B e^{-ax}`.
///
/// The density is `2a²A²e^{2ax} + 2a²B²e^{-2ax}`: the cross terms of `f'²`
/// and `a²f²` are opposite and cancel exactly.
fn axial_energy(a: f64, ea: f64, eb: f64, x0: f64, x1: f64) -> Result<f64> {
    let grow = |x: f64| Profile::GrowExp.value(2.0 * a, x);
    let decay = |x: f64| Profile::DecayExp.value(2.0 * a, x);
    Ok(a * ea * ea * (grow(x1)? - grow(x0)?) + a * eb * eb * (decay(x0)? - decay(x1)?))
}

/// The canonical growing solution on the right half-cylinder sourced by
/// mode `k`: `(e^{√λ_k x} - e^{-√λ_k x}) ψ_k(y)`. It vanishes identically
/// on the junction plane and is positive for k = 1, x > 0.
pub fn canonical_semicylinder_solution(
    section: &Arc<CrossSection>,
    k: usize,
) -> Result<ModeSeries> {
    section.mode(k)?;
    ModeSeries::new(
        section.clone(),
        AxialSide::Right,
        vec![Term {
            mode: k,
            coefficient: 1.0,
            profile: Profile::Sinh,
        }],
    )
}

/// Axial sample box for the discrete harmonicity check.
#[derive(Debug, Clone, Copy)]
pub struct SampleBox {
    pub x_lo: f64,
    pub x_hi: f64,
}

/// Max over interior samples of the second-order discrete Laplacian of the
/// pointwise evaluation, spacing `h` in every coordinate. Decays like h² for
/// any exact mode series; used as a verification of harmonicity.
pub fn residual_harmonicity(series: &ModeSeries, sample_box: SampleBox, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Validation(format!("spacing must be positive, got {h}")));
    }
    let ext = series.section().extents();
    let nx = ((sample_box.x_hi - sample_box.x_lo) / h).floor() as usize;
    if nx < 2 {
        return Err(Error::Validation("sample box shorter than 2h".into()));
    }
    let steps: Vec<usize> = ext.iter().map(|e| (e / h).floor() as usize).collect();
    if steps.iter().any(|&s| s < 2) {
        return Err(Error::Validation("section thinner than 2h".into()));
    }

    let mut worst: f64 = 0.0;
    let mut stencil = |x: f64, y: &[f64]| -> Result<f64> {
        let dim = y.len();
        let center = series.evaluate(x, y)?;
        let mut lap = series.evaluate(x - h, y)? + series.evaluate(x + h, y)? - 2.0 * center;
        // Second difference along each section axis.
        let mut shifted = y.to_vec();
        for axis in 0..dim {
            shifted[axis] = y[axis] - h;
            lap += series.evaluate(x, &shifted)?;
            shifted[axis] = y[axis] + h;
            lap += series.evaluate(x, &shifted)?;
            shifted[axis] = y[axis];
            lap -= 2.0 * center;
        }
        Ok(lap / (h * h))
    };

    match ext.len() {
        1 => {
            for i in 1..nx {
                let x = sample_box.x_lo + i as f64 * h;
                for j in 1..steps[0] {
                    let y = [j as f64 * h];
                    worst = worst.max(stencil(x, &y)?.abs());
                }
            }
        }
        _ => {
            for i in 1..nx {
                let x = sample_box.x_lo + i as f64 * h;
                for j in 1..steps[0] {
                    for l in 1..steps[1] {
                        let y = [j as f64 * h, l as f64 * h];
                        worst = worst.max(stencil(x, &y)?.abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}
