//! Adiabaticity criteria, inconsistency detectors and scenario classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{integrated_energies, kato_operator, dynamical_phase, EigenFrame};
use crate::grid::{cumulative_integral, richardson_gap};
use crate::linalg::{cis, identity, ComplexMatrix, C64};

/// Largest real-time ratio `|⟨E_m|Ė_n⟩ / (E_n − E_m)|` with `Ė = (1/rate) dE/ds`.
pub fn qac_max(frame: &EigenFrame, couplings: &[ComplexMatrix]) -> Result<f64> {
    Ok(qac_scaled(frame, couplings)? / frame.rate)
}

/// The same ratio in scaled time, without the `1/rate` factor.
pub fn qac_scaled(frame: &EigenFrame, couplings: &[ComplexMatrix]) -> Result<f64> {
    let dim = frame.dim();
    let floor = frame.tolerances.gap_floor;
    let mut worst: f64 = 0.0;
    for (k, cm) in couplings.iter().enumerate() {
        let e = &frame.values[k];
        for m in 0..dim {
            for n in 0..dim {
                if m == n {
                    continue;
                }
                let gap = (e[n] - e[m]).abs();
                if gap < floor {
                    return Err(Error::GapBelowFloor { s: frame.s(k), gap, floor });
                }
                worst = worst.max(cm[(m, n)].norm() / gap);
            }
        }
    }
    Ok(worst)
}

/// `R_mn(s) = ∫₀ˢ exp(i·rate·∫(E_m − E_n)) ⟨E_m|dE_n/dσ⟩ dσ` on the frame grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceSeries {
    pub m: usize,
    pub n: usize,
    pub integrand: Vec<C64>,
    pub values: Vec<C64>,
    /// Largest difference between the cubic and the trapezoid cumulative sums.
    pub quadrature_gap: f64,
}

impl ResonanceSeries {
    pub fn end(&self) -> C64 {
        *self.values.last().expect("non-empty series")
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn resonance_integral(frame: &EigenFrame, couplings: &[ComplexMatrix], m: usize, n: usize) -> Result<ResonanceSeries> {
    let dim = frame.dim();
    for idx in [m, n] {
        if idx >= dim {
            return Err(Error::LevelOutOfRange { index: idx, dim });
        }
    }
    if couplings.len() != frame.len() {
        return Err(Error::GridMismatch(format!(
            "{} coupling samples for a {}-point frame",
            couplings.len(),
            frame.len()
        )));
    }
    let theta = integrated_energies(frame);
    let integrand: Vec<C64> = couplings
        .iter()
        .zip(&theta)
        .map(|(cm, th)| cis(frame.rate * (th[m] - th[n])) * cm[(m, n)])
        .collect();
    let h = frame.grid.step();
    let values = cumulative_integral(&integrand, h);
    let quadrature_gap = richardson_gap(&integrand, h, |z: C64| z.norm());
    Ok(ResonanceSeries {
        m,
        n,
        integrand,
        values,
        quadrature_gap,
    })
}

/// Resonance integrals for every pair `m < n`.
pub fn resonance_integrals(frame: &EigenFrame, couplings: &[ComplexMatrix]) -> Result<Vec<ResonanceSeries>> {
    let dim = frame.dim();
    let mut out = Vec::new();
    for m in 0..dim {
        for n in (m + 1)..dim {
            out.push(resonance_integral(frame, couplings, m, n)?);
        }
    }
    Ok(out)
}

/// `‖F(s_k)‖_F` with `F(s) = ∫₀ˢ K̄`. Since `|R_nm| = |R_mn|`, this is
/// `√(2 Σ_{m<n} |R_mn|²)`.
pub fn f_norm_series(resonances: &[ResonanceSeries]) -> Vec<f64> {
    let len = resonances.first().map_or(0, |r| r.values.len());
    (0..len)
        .map(|k| (2.0 * resonances.iter().map(|r| r.values[k].norm_sqr()).sum::<f64>()).sqrt())
        .collect()
}

/// `‖F(s_end)‖_F`.
pub fn f_norm(resonances: &[ResonanceSeries]) -> f64 {
    f_norm_series(resonances).last().copied().unwrap_or(0.0)
}

/// `max_n ‖P_n(s_k) − P_n(0)‖_F` for each grid point.
pub fn projector_drift_series(frame: &EigenFrame) -> Vec<f64> {
    let p0: Vec<ComplexMatrix> = (0..frame.dim()).map(|n| frame.projector(0, n)).collect();
    (0..frame.len())
        .map(|k| {
            (0..frame.dim())
                .map(|n| (frame.projector(k, n) - &p0[n]).norm())
                .fold(0.0, f64::max)
        })
        .collect()
}

pub fn projector_drift(frame: &EigenFrame) -> f64 {
    projector_drift_series(frame).into_iter().fold(0.0, f64::max)
}

fn check_same_grid(unitaries: &[ComplexMatrix], frame: &EigenFrame) -> Result<()> {
    if unitaries.len() != frame.len() {
        return Err(Error::GridMismatch(format!(
            "{} propagator samples for a {}-point frame",
            unitaries.len(),
            frame.len()
        )));
    }
    if unitaries[0].nrows() != frame.dim() {
        return Err(Error::DimensionMismatch {
            expected: frame.dim(),
            found: unitaries[0].nrows(),
        });
    }
    Ok(())
}

/// `max_n ‖U(s_k) P_n(0) − P_n(s_k) U(s_k)‖_F` for each grid point.
pub fn intertwining_series(unitaries: &[ComplexMatrix], frame: &EigenFrame) -> Result<Vec<f64>> {
    check_same_grid(unitaries, frame)?;
    let p0: Vec<ComplexMatrix> = (0..frame.dim()).map(|n| frame.projector(0, n)).collect();
    Ok(unitaries
        .iter()
        .enumerate()
        .map(|(k, u)| {
            (0..frame.dim())
                .map(|n| (u * &p0[n] - frame.projector(k, n) * u).norm())
                .fold(0.0, f64::max)
        })
        .collect())
}

pub fn intertwining_defect(unitaries: &[ComplexMatrix], frame: &EigenFrame) -> Result<f64> {
    Ok(intertwining_series(unitaries, frame)?.into_iter().fold(0.0, f64::max))
}

/// `max_k ‖Φ_A†(s_k) U_A†(s_k) U(s_k) − I‖_F`.
pub fn w_deviation(unitaries: &[ComplexMatrix], frame: &EigenFrame) -> Result<f64> {
    check_same_grid(unitaries, frame)?;
    let ua = kato_operator(frame);
    let phi = dynamical_phase(frame);
    let id = identity(frame.dim());
    Ok(unitaries
        .iter()
        .zip(ua.iter().zip(&phi))
        .map(|(u, (a, p))| (p.adjoint() * a.adjoint() * u - &id).norm())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_fit(x: &[f64], y: &[f64], min_samples: usize) -> Result<SlopeFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} abscissae but {} values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < min_samples {
        return Err(Error::InsufficientSamples {
            needed: min_samples,
            found: x.len(),
        });
    }
    for (index, &v) in x.iter().chain(y).enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveSample {
                index: index % x.len(),
                value: v,
            });
        }
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all abscissae are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        residual,
    })
}

/// Fitted exponent of a quantity against `τ`; needs at least three samples.
pub fn scaling_slope(taus: &[f64], values: &[f64]) -> Result<SlopeFit> {
    loglog_fit(taus, values, 3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub eps_q: f64,
    pub eps_r: f64,
    pub slope_tolerance: f64,
    /// `F` slopes at or below this value count as averaged out.
    pub averaged_slope: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            eps_q: 0.05,
            eps_r: 0.1,
            slope_tolerance: 0.15,
            averaged_slope: -0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    AdiabaticConsistent,
    WeakResonantInconsistent,
    StrongOscillatory,
    NonresonantAveraged,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::AdiabaticConsistent => "adiabatic_consistent",
            Self::WeakResonantInconsistent => "weak_resonant_inconsistent",
            Self::StrongOscillatory => "strong_oscillatory",
            Self::NonresonantAveraged => "nonresonant_averaged",
        }
    }
}

/// Inputs to [`classify`] for one value of `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSample {
    pub tau: f64,
    pub qac_max: f64,
    pub resonance_max: f64,
    pub f_norm: f64,
}

/// Decision table, evaluated at the largest `τ`:
///
/// | `qac_max` | second condition | class |
/// |---|---|---|
/// | `< ε_q` | `max|R| < ε_r` | adiabatic, consistent |
/// | `< ε_q` | `max|R| ≥ ε_r` | weak, resonant, inconsistent |
/// | `≥ ε_q` | `F` slope `≤ −0.5` | non-resonant, averaged |
/// | `≥ ε_q` | otherwise | strong, oscillatory |
///
/// The last two rows need at least two values of `τ`.
pub fn classify(samples: &[ClassifierSample], thresholds: &Thresholds) -> Result<Classification> {
    let last = samples
        .iter()
        .max_by(|a, b| a.tau.total_cmp(&b.tau))
        .ok_or(Error::InsufficientSamples { needed: 1, found: 0 })?;
    if last.qac_max < thresholds.eps_q {
        return Ok(if last.resonance_max < thresholds.eps_r {
            Classification::AdiabaticConsistent
        } else {
            Classification::WeakResonantInconsistent
        });
    }
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            found: samples.len(),
        });
    }
    let taus: Vec<f64> = samples.iter().map(|s| s.tau).collect();
    // F below round-off carries no information; clamp so the fit stays defined.
    let f: Vec<f64> = samples.iter().map(|s| s.f_norm.max(1e-300)).collect();
    let fit = loglog_fit(&taus, &f, 2)?;
    Ok(if fit.slope <= thresholds.averaged_slope {
        Classification::NonresonantAveraged
    } else {
        Classification::StrongOscillatory
    })
}

/// Complex value of a resonance integral at the end of the span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairValue {
    pub m: usize,
    pub n: usize,
    pub re: f64,
    pub im: f64,
}

/// Scalar diagnostics for one system at one `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub tau: f64,
    pub grid_points: usize,
    /// Real-time adiabaticity ratio.
    pub qac_max: f64,
    /// The same ratio in scaled time.
    pub qac_scaled: f64,
    pub resonance_end: Vec<PairValue>,
    /// Supremum over `s` and pairs of `|R_mn(s)|`.
    pub resonance_max: f64,
    pub f_norm: f64,
    pub projector_drift: f64,
    pub intertwining_defect: Option<f64>,
    pub w_deviation: Option<f64>,
    pub min_gap: f64,
    /// Richardson estimate for the resonance quadrature.
    pub quadrature_error: f64,
    pub max_unitarity_defect: Option<f64>,
}

impl DiagnosticsReport {
    pub fn classifier_sample(&self) -> ClassifierSample {
        ClassifierSample {
            tau: self.tau,
            qac_max: self.qac_max,
            resonance_max: self.resonance_max,
            f_norm: self.f_norm,
        }
    }
}

/// Per-grid-point series behind a [`DiagnosticsReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticSeries {
    pub s: Vec<f64>,
    pub resonances: Vec<ResonanceSeries>,
    pub f_norm: Vec<f64>,
    pub projector_drift: Vec<f64>,
    pub intertwining: Option<Vec<f64>>,
}

/// Computes every diagnostic from a frame, its couplings and, optionally, the
/// propagator sampled on the frame grid.
pub fn diagnose(
    frame: &EigenFrame,
    couplings: &[ComplexMatrix],
    unitaries: Option<&[ComplexMatrix]>,
) -> Result<(DiagnosticsReport, DiagnosticSeries)> {
    let resonances = resonance_integrals(frame, couplings)?;
    let f_series = f_norm_series(&resonances);
    let drift = projector_drift_series(frame);
    let (inter, w, unit) = match unitaries {
        Some(u) => {
            let series = intertwining_series(u, frame)?;
            let w = w_deviation(u, frame)?;
            let unit = u.iter().map(crate::linalg::unitarity_defect).fold(0.0, f64::max);
            (Some(series), Some(w), Some(unit))
        }
        None => (None, None, None),
    };
    let report = DiagnosticsReport {
        tau: frame.tau,
        grid_points: frame.len(),
        qac_max: qac_max(frame, couplings)?,
        qac_scaled: qac_scaled(frame, couplings)?,
        resonance_end: resonances
            .iter()
            .map(|r| {
                let z = r.end();
                PairValue {
                    m: r.m,
                    n: r.n,
                    re: z.re,
                    im: z.im,
                }
            })
            .collect(),
        resonance_max: resonances.iter().map(|r| r.sup_norm()).fold(0.0, f64::max),
        f_norm: f_series.last().copied().unwrap_or(0.0),
        projector_drift: drift.iter().copied().fold(0.0, f64::max),
        intertwining_defect: inter.as_ref().map(|v| v.iter().copied().fold(0.0, f64::max)),
        w_deviation: w,
        min_gap: frame.min_gap,
        quadrature_error: resonances.iter().map(|r| r.quadrature_gap).fold(0.0, f64::max),
        max_unitarity_defect: unit,
    };
    let series = DiagnosticSeries {
        s: frame.grid.values(),
        resonances,
        f_norm: f_series,
        projector_drift: drift,
        intertwining: inter,
    };
    Ok((report, series))
}
