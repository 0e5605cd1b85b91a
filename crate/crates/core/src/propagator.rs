//! Midpoint-exponential propagation of `i dU/ds = rate · H(s, τ) U`.
//!
//! Each step applies `exp(−i · rate · Δs · H(s + Δs/2, τ))`, which is the
//! second-order Magnus integrator. The result is unitary up to eigensolver
//! accuracy no matter how many steps are taken.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hamiltonian::{HamiltonianPath, UnitaryPath};
use crate::linalg::{identity, unitarity_defect, unitary_exp, ComplexMatrix, I};

pub const DEFAULT_STEP_CAP: usize = 10_000_000;

/// Phase advance per step targeted by [`auto_grid`].
pub const MAX_PHASE_STEP: f64 = 0.3;

/// Minimum number of grid points per `2π` of scaled time.
pub const MIN_POINTS_PER_TWO_PI: usize = 2048;

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub s: Vec<f64>,
    pub unitaries: Vec<ComplexMatrix>,
    pub max_unitarity_defect: f64,
    pub steps_taken: usize,
    pub tau: f64,
}

impl PropagationResult {
    pub fn last(&self) -> &ComplexMatrix {
        self.unitaries.last().expect("a propagation result is never empty")
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagateOptions {
    /// Midpoint steps taken between consecutive grid points.
    pub substeps: usize,
    pub step_cap: usize,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            substeps: 1,
            step_cap: DEFAULT_STEP_CAP,
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tau must be positive and finite, got {tau}")))
    }
}

fn midpoint_step(h: &HamiltonianPath, tau: f64, rate: f64, s: f64, ds: f64) -> Result<ComplexMatrix> {
    unitary_exp(&h.eval(s + 0.5 * ds, tau), rate * ds)
}

/// Propagate on a fixed grid with one midpoint step per interval.
pub fn propagate(h: &HamiltonianPath, tau: f64, grid: &Grid) -> Result<PropagationResult> {
    propagate_with(h, tau, grid, PropagateOptions::default())
}

pub fn propagate_with(
    h: &HamiltonianPath,
    tau: f64,
    grid: &Grid,
    opts: PropagateOptions,
) -> Result<PropagationResult> {
    check_tau(tau)?;
    let substeps = opts.substeps.max(1);
    let total = grid.intervals().saturating_mul(substeps);
    if total > opts.step_cap {
        return Err(Error::StepCap { cap: opts.step_cap });
    }
    let rate = h.rate(tau);
    let mut u = identity(h.dim());
    let mut unitaries = Vec::with_capacity(grid.len());
    let mut worst: f64 = 0.0;
    unitaries.push(u.clone());
    for k in 0..grid.intervals() {
        let (a, b) = (grid.at(k), grid.at(k + 1));
        let ds = (b - a) / substeps as f64;
        for j in 0..substeps {
            u = midpoint_step(h, tau, rate, a + j as f64 * ds, ds)? * u;
        }
        worst = worst.max(unitarity_defect(&u));
        unitaries.push(u.clone());
    }
    Ok(PropagationResult {
        s: grid.values(),
        unitaries,
        max_unitarity_defect: worst,
        steps_taken: total,
        tau,
    })
}

/// Step-doubling adaptive propagation from the start of the span to `s_end`.
///
/// A step of size `h` is accepted when one full step and two half steps
/// differ by at most `tol · h` in Frobenius norm; the two-half-step result is
/// kept. Output points are the accepted step boundaries.
pub fn propagate_adaptive(h: &HamiltonianPath, tau: f64, s_end: f64, tol: f64) -> Result<PropagationResult> {
    propagate_adaptive_capped(h, tau, s_end, tol, DEFAULT_STEP_CAP)
}

pub fn propagate_adaptive_capped(
    h: &HamiltonianPath,
    tau: f64,
    s_end: f64,
    tol: f64,
    step_cap: usize,
) -> Result<PropagationResult> {
    check_tau(tau)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let s0 = h.span().0;
    if !(s_end > s0) {
        return Err(Error::InvalidArgument(format!("s_end {s_end} must exceed the span start {s0}")));
    }
    let rate = h.rate(tau);
    let len = s_end - s0;
    let min_step = len * 1e-14;
    let mut step = (len / 64.0).min(MAX_PHASE_STEP / (rate * h.eval(s0, tau).norm()).max(1e-300));
    let mut s = s0;
    let mut u = identity(h.dim());
    let mut out_s = vec![s0];
    let mut out_u = vec![u.clone()];
    let mut worst: f64 = 0.0;
    let mut steps = 0usize;
    while s < s_end {
        if steps >= step_cap {
            return Err(Error::StepCap { cap: step_cap });
        }
        let last = s + step >= s_end;
        let hstep = if last { s_end - s } else { step };
        let full = midpoint_step(h, tau, rate, s, hstep)?;
        let half1 = midpoint_step(h, tau, rate, s, 0.5 * hstep)?;
        let half2 = midpoint_step(h, tau, rate, s + 0.5 * hstep, 0.5 * hstep)?;
        let two = half2 * half1;
        steps += 3;
        let err = (&full - &two).norm();
        let allowed = tol * hstep;
        if err <= allowed {
            u = two * u;
            s = if last { s_end } else { s + hstep };
            worst = worst.max(unitarity_defect(&u));
            out_s.push(s);
            out_u.push(u.clone());
        }
        let factor = if err == 0.0 {
            4.0
        } else {
            (0.9 * (allowed / err).sqrt()).clamp(0.2, 4.0)
        };
        step = hstep * factor;
        if step < min_step {
            return Err(Error::ToleranceUnreachable { tolerance: tol, step });
        }
    }
    Ok(PropagationResult {
        s: out_s,
        unitaries: out_u,
        max_unitarity_defect: worst,
        steps_taken: steps,
        tau,
    })
}

/// Continuous extension of a grid propagation: between grid points one local
/// midpoint step is taken from the nearest grid point at or below `s`.
pub fn into_unitary_path(result: &PropagationResult, h: &HamiltonianPath) -> Result<UnitaryPath> {
    if result.s.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            found: result.s.len(),
        });
    }
    let tau = result.tau;
    let rate = h.rate(tau);
    let s = std::sync::Arc::new(result.s.clone());
    let us = std::sync::Arc::new(result.unitaries.clone());
    let (h1, h2) = (h.clone(), h.clone());
    let (s1, u1) = (s.clone(), us.clone());
    let eval = move |x: f64| -> ComplexMatrix {
        let k = match s1.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(k) => return u1[k].clone(),
            Err(0) => 0,
            Err(k) => (k - 1).min(s1.len() - 1),
        };
        let ds = x - s1[k];
        unitary_exp(&h1.eval(s1[k] + 0.5 * ds, tau), rate * ds).expect("Hermitian path") * &u1[k]
    };
    let eval = std::sync::Arc::new(eval);
    let e2 = eval.clone();
    let span = (result.s[0], *result.s.last().unwrap());
    Ok(UnitaryPath::new(h.dim(), span, move |x, _| eval(x))
        .with_derivative(move |x, _| h2.eval(x, tau) * e2(x) * (-I * rate))
        .for_fixed_tau(tau)
        .labeled(format!("U[{}]", h.label())))
}

/// Largest rate at which eigenphases and eigenvectors of `H` turn, in radians
/// per unit `s`, estimated on `probes` points: `rate · spread + ‖dH/ds‖ / gap`.
pub fn phase_rate(h: &HamiltonianPath, tau: f64, probes: usize) -> Result<f64> {
    let (a, b) = h.span();
    let grid = Grid::new(a, b, probes.max(2))?;
    let rate = h.rate(tau);
    let mut worst: f64 = 0.0;
    for s in grid.iter() {
        let eig = crate::linalg::herm_eig(&h.eval(s, tau))?;
        let spread = eig.values.last().unwrap() - eig.values[0];
        let gap = eig
            .values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let turn = if eig.dim() > 1 && gap > 0.0 {
            h.derivative(s, tau).norm() / gap
        } else {
            0.0
        };
        worst = worst.max(rate * spread + turn);
    }
    Ok(worst)
}

/// Grid over the path's span with at least 2048 points per `2π` and a phase
/// advance of at most [`MAX_PHASE_STEP`] per interval.
pub fn auto_grid(h: &HamiltonianPath, tau: f64) -> Result<Grid> {
    let (a, b) = h.span();
    let len = b - a;
    let floor = (MIN_POINTS_PER_TWO_PI as f64 * len / (2.0 * std::f64::consts::PI)).ceil() as usize;
    let phase = phase_rate(h, tau, 512)?;
    let by_phase = (phase * len / MAX_PHASE_STEP).ceil() as usize;
    Grid::with_intervals(a, b, floor.max(by_phase).max(2))
}
