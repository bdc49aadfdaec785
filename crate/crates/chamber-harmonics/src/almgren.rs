//! Almgren frequency quotients and their extracted limits.
//!
//! The cylindrical quotient of a field `v` at axial coordinate `x` is the
//! accumulated Dirichlet energy divided by the squared L² norm of the slice
//! at `x`; toward an infinite end it converges to the square root of the
//! eigenvalue of the dominant mode (or to infinity on a finite-energy end).
//! The radial variant on a half-disk plays the same role for the halfspace
//! chamber, where the limits are homogeneity degrees.
//!
//! All cylindrical quotients evaluate through the closed-form axial energy
//! integrals of [`crate::field`], so traces carry no quadrature error. Limit
//! extraction is a finite computation standing in for an asymptotic
//! statement, so it reports its own convergence evidence: the value is the
//! trailing-window mean, certified by the observed spread over that window
//! and matched against the section spectrum.

use crate::error::{Error, Result};
use crate::field::{AxialSide, ModeSeries, Profile};
use crate::oracle::GridField;
use crate::section::CrossSection;

/// Slice norms below this are treated as vanishing denominators.
pub const SLICE_FLOOR: f64 = 1e-300;

/// Which frequency quotient a trace samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyVariant {
    /// Energy accumulated from the junction plane: `D(x) = ∫ over (0,x)`
    /// (or `(x,0)` on the left side).
    CylindricalFromZero,
    /// Energy accumulated from −∞; requires finite energy there, i.e. a
    /// purely growing series.
    CylindricalFullLine,
    /// The scaled half-disk quotient `r^{2-N}∫_{C_r}|∇v|² / r^{1-N}∫_{Γ_r}v²`.
    RadialHalfspace,
}

/// One sampled point of a frequency trace.
#[derive(Debug, Clone, Copy)]
pub struct FrequencySample {
    pub coordinate: f64,
    pub value: f64,
}

/// The extracted limit of a trace, or the verdict that it diverges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitValue {
    Finite(f64),
    Infinity,
}

/// Limit extraction certificate: the trailing-window evidence plus the best
/// spectral match when a section spectrum is available.
#[derive(Debug, Clone)]
pub struct LimitCertificate {
    pub limit: LimitValue,
    /// `(mode index, √λ_j, |limit - √λ_j|)` of the closest spectral value.
    pub matched_mode: Option<(usize, f64, f64)>,
    /// Coordinate window whose trailing half produced the limit.
    pub window: (f64, f64),
    /// Max − min of the quotient over the trailing half.
    pub observed_range: f64,
}

/// A sampled frequency quotient along the axial or radial coordinate.
#[derive(Debug, Clone)]
pub struct FrequencyTrace {
    pub variant: FrequencyVariant,
    pub samples: Vec<FrequencySample>,
    pub extracted_limit: Option<LimitCertificate>,
}

impl FrequencyTrace {
    pub fn last_value(&self) -> Option<f64> {
        self.samples.last().map(|s| s.value)
    }
}

/// The cylindrical Almgren quotient `D(x) / H(x)` of a mode series.
///
/// `CylindricalFromZero` accumulates energy between the junction plane and
/// `x` (on the series side); `CylindricalFullLine` accumulates from −∞ and
/// is defined only for purely growing series. A single growing mode has a
/// constant full-line quotient, identically `√λ_k`.
pub fn cylindrical_frequency(
    series: &ModeSeries,
    x: f64,
    variant: FrequencyVariant,
) -> Result<f64> {
    let h = series.slice_norm_sq(x)?;
    if h < SLICE_FLOOR {
        return Err(Error::DegenerateSlice(format!(
            "slice norm {h:.3e} at x = {x} below {SLICE_FLOOR:e}"
        )));
    }
    let d = match variant {
        FrequencyVariant::CylindricalFromZero => match series.side() {
            AxialSide::Right => {
                if x <= 0.0 {
                    return Err(Error::Validation(format!(
                        "x = {x} must be positive for a right-side quotient from zero"
                    )));
                }
                series.energy(0.0, x)?
            }
            AxialSide::Left => {
                if x >= 0.0 {
                    return Err(Error::Validation(format!(
                        "x = {x} must be negative for a left-side quotient from zero"
                    )));
                }
                series.energy(x, 0.0)?
            }
        },
        FrequencyVariant::CylindricalFullLine => series.energy_from_minus_infinity(x)?,
        FrequencyVariant::RadialHalfspace => {
            return Err(Error::Validation(
                "the radial variant applies to grid fields, not mode series".into(),
            ))
        }
    };
    Ok(d / h)
}

/// Sample a cylindrical trace uniformly over `window`.
pub fn cylindrical_trace(
    series: &ModeSeries,
    variant: FrequencyVariant,
    window: (f64, f64),
    samples: usize,
) -> Result<FrequencyTrace> {
    if samples < 2 || !(window.0 < window.1) {
        return Err(Error::Validation(
            "trace needs an increasing window and at least 2 samples".into(),
        ));
    }
    let step = (window.1 - window.0) / (samples - 1) as f64;
    let values = (0..samples)
        .map(|i| {
            let x = window.0 + i as f64 * step;
            cylindrical_frequency(series, x, variant).map(|value| FrequencySample {
                coordinate: x,
                value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequencyTrace {
        variant,
        samples: values,
        extracted_limit: None,
    })
}

/// Extract the asymptotic limit of a trace against a section spectrum.
///
/// The limit is the mean of the quotient over the half of the window nearest
/// the asymptotic end (`toward_minus_infinity` selects which half). The
/// certificate records the observed spread; a spread above `tolerance` is a
/// convergence failure. A trailing value above `√λ_K` is declared Infinity.
pub fn extract_limit(
    trace: &mut FrequencyTrace,
    section: Option<&CrossSection>,
    toward_minus_infinity: bool,
    tolerance: f64,
) -> Result<LimitCertificate> {
    if trace.samples.len() < 4 {
        return Err(Error::Validation("trace too short for limit extraction".into()));
    }
    let n = trace.samples.len();
    let trailing: Vec<f64> = if toward_minus_infinity {
        trace.samples[..n / 2].iter().map(|s| s.value).collect()
    } else {
        trace.samples[n / 2..].iter().map(|s| s.value).collect()
    };
    let window = (
        trace.samples.first().unwrap().coordinate,
        trace.samples.last().unwrap().coordinate,
    );
    let end_value = if toward_minus_infinity {
        trace.samples.first().unwrap().value
    } else {
        trace.samples.last().unwrap().value
    };

    if let Some(sec) = section {
        let top = sec.frequency(sec.count())?;
        if end_value > top {
            let certificate = LimitCertificate {
                limit: LimitValue::Infinity,
                matched_mode: None,
                window,
                observed_range: f64::INFINITY,
            };
            trace.extracted_limit = Some(certificate.clone());
            return Ok(certificate);
        }
    }

    let lo = trailing.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = trailing.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range > tolerance {
        return Err(Error::Convergence(format!(
            "quotient still varies by {range:.3e} (> {tolerance:.3e}) over the trailing window \
             [{lo:.6}, {hi:.6}]"
        )));
    }
    let mean = trailing.iter().sum::<f64>() / trailing.len() as f64;
    let matched_mode = section.map(|sec| {
        let mut best = (1usize, sec.frequency(1).unwrap());
        for k in 2..=sec.count() {
            let f = sec.frequency(k).unwrap();
            if (mean - f).abs() < (mean - best.1).abs() {
                best = (k, f);
            }
        }
        (best.0, best.1, (mean - best.1).abs())
    });
    let certificate = LimitCertificate {
        limit: LimitValue::Finite(mean),
        matched_mode,
        window,
        observed_range: range,
    };
    trace.extracted_limit = Some(certificate.clone());
    Ok(certificate)
}

/// Trace and limit of a mode series toward its infinite end.
///
/// Right-side series are traced with the quotient from zero toward +∞;
/// left-side (purely growing, finite energy at −∞) series use the full-line
/// quotient toward −∞, which converges to the rate of the slowest mode.
pub fn frequency_limit(
    series: &ModeSeries,
    variant: FrequencyVariant,
    window: (f64, f64),
    tolerance: f64,
) -> Result<(FrequencyTrace, LimitCertificate)> {
    let mut trace = cylindrical_trace(series, variant, window, 65)?;
    let toward_minus = matches!(series.side(), AxialSide::Left);
    let certificate = extract_limit(
        &mut trace,
        Some(series.section()),
        toward_minus,
        tolerance,
    )?;
    Ok((trace, certificate))
}

/// The radial Almgren quotient of a grid field on its inscribed half-disk.
///
/// `D(r)` integrates `|∇v|²` by midpoint quadrature over grid cells whose
/// centers lie in the half-disk of radius `r` around the field's radial
/// center; `H(r)` integrates `v²` over the arc by composite midpoint rule
/// with bilinear interpolation. Ambient dimension is 2, so the prefactors
/// are `r⁰` and `r^{-1}`.
pub fn radial_frequency(field: &GridField, r: f64) -> Result<f64> {
    let (cx, cy) = field.radial_center();
    let h = field.spacing();
    if r <= 2.0 * h {
        return Err(Error::Geometry(format!("radius {r} too small for spacing {h}")));
    }
    let max_r = field.inscribed_radius();
    if r > max_r {
        return Err(Error::Geometry(format!(
            "radius {r} exceeds the inscribed half-disk radius {max_r}"
        )));
    }

    // Energy over the half-disk: cell-centered gradients.
    let mut energy = 0.0;
    let (nx, ny) = field.shape();
    for ix in 0..nx - 1 {
        for iy in 0..ny - 1 {
            let (x0, y0) = field.node_coords(ix, iy);
            let mx = x0 + 0.5 * h;
            let my = y0 + 0.5 * h;
            if mx <= cx {
                continue;
            }
            let dist2 = (mx - cx) * (mx - cx) + (my - cy) * (my - cy);
            if dist2 >= r * r {
                continue;
            }
            let v00 = field.node_value(ix, iy);
            let v10 = field.node_value(ix + 1, iy);
            let v01 = field.node_value(ix, iy + 1);
            let v11 = field.node_value(ix + 1, iy + 1);
            let gx = ((v10 + v11) - (v00 + v01)) / (2.0 * h);
            let gy = ((v01 + v11) - (v00 + v10)) / (2.0 * h);
            energy += (gx * gx + gy * gy) * h * h;
        }
    }

    // Arc integral of v² over θ ∈ (−π/2, π/2); ds = r dθ cancels the r^{1-N}
    // prefactor in two dimensions.
    let panels = ((std::f64::consts::PI * r / h).ceil() as usize).max(64);
    let dtheta = std::f64::consts::PI / panels as f64;
    let mut slice = 0.0;
    for i in 0..panels {
        let theta = -0.5 * std::f64::consts::PI + (i as f64 + 0.5) * dtheta;
        let p = (cx + r * theta.cos(), cy + r * theta.sin());
        let v = field.value(p.0, p.1);
        slice += v * v * dtheta;
    }
    if slice < SLICE_FLOOR {
        return Err(Error::DegenerateSlice(format!(
            "arc norm {slice:.3e} at r = {r} below {SLICE_FLOOR:e}"
        )));
    }
    Ok(energy / slice)
}

/// Radial trace over `[r_lo, r_hi]`.
pub fn radial_trace(field: &GridField, window: (f64, f64), samples: usize) -> Result<FrequencyTrace> {
    if samples < 2 || !(window.0 < window.1) {
        return Err(Error::Validation(
            "trace needs an increasing window and at least 2 samples".into(),
        ));
    }
    let step = (window.1 - window.0) / (samples - 1) as f64;
    let values = (0..samples)
        .map(|i| {
            let r = window.0 + i as f64 * step;
            radial_frequency(field, r).map(|value| FrequencySample {
                coordinate: r,
                value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequencyTrace {
        variant: FrequencyVariant::RadialHalfspace,
        samples: values,
        extracted_limit: None,
    })
}

/// Eigenvalue of the spherical Laplacian carried by an `N̄`-homogeneous
/// harmonic on a halfspace in ambient dimension `dim`:
/// `N̄(N̄−1) + N̄(dim−1)`.
pub fn spherical_eigenvalue_of_degree(nbar: f64, dim: u32) -> f64 {
    nbar * (nbar - 1.0) + nbar * (dim as f64 - 1.0)
}
