//! A base Hamiltonian, the system derived from it, and the pipeline that
//! evaluates every diagnostic for that system at one `τ`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{diagnose, DiagnosticSeries, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::gauge::{couplings, CouplingRoute, EigenFrame, FrameOptions};
use crate::grid::Grid;
use crate::hamiltonian::{dual_of, negate, transform, HamiltonianPath, UnitaryPath};
use crate::linalg::{ComplexMatrix, Tolerances};
use crate::models::SpinHalf;
use crate::propagator::{auto_grid, into_unitary_path, phase_rate, propagate_with, PropagateOptions};

/// Phase advance per midpoint step used for numerical base propagation.
pub const SUBSTEP_PHASE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub enum SystemKind {
    /// The base Hamiltonian itself.
    Base,
    /// `−U†HU` with `U` the propagator of the base.
    Dual,
    /// `U†HU`, the negated dual.
    NegatedDual,
    /// `sign · U_x† H U_x` with `U_x = exp(−i·rate·(s − s₀)·G)`.
    Transformed { generator: ComplexMatrix, sign: f64 },
}

impl SystemKind {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Base => "a",
            Self::Dual => "b",
            Self::NegatedDual => "c",
            Self::Transformed { .. } => "x",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    /// Phase-step rule of [`auto_grid`] applied to the system Hamiltonian.
    Auto,
    /// Fixed number of points over the span.
    Points(usize),
}

/// How the system propagator was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PropagatorSource {
    ClosedForm,
    Numerical { substeps: usize },
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: DiagnosticsReport,
    pub series: DiagnosticSeries,
    pub source: PropagatorSource,
    pub grid: Grid,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub base: HamiltonianPath,
    /// `τ`-aware closed-form propagator of the base, when known.
    pub exact: Option<UnitaryPath>,
    pub reference: Option<ComplexMatrix>,
    pub kind: SystemKind,
    pub route: CouplingRoute,
    pub tolerances: Tolerances,
}

impl Scenario {
    pub fn new(base: HamiltonianPath, kind: SystemKind) -> Self {
        Self {
            base,
            exact: None,
            reference: None,
            kind,
            route: CouplingRoute::HellmannFeynman,
            tolerances: Tolerances::default(),
        }
    }

    pub fn spin_half(model: SpinHalf, kind: SystemKind) -> Self {
        Self {
            exact: Some(model.exact_propagator()),
            reference: Some(model.reference_basis()),
            ..Self::new(model.hamiltonian(), kind)
        }
    }

    fn substeps(&self, h: &HamiltonianPath, tau: f64, grid: &Grid) -> Result<usize> {
        let rate = phase_rate(h, tau, 256)?;
        Ok(((rate * grid.step()) / SUBSTEP_PHASE).ceil().max(1.0) as usize)
    }

    /// Propagator of the base at `τ`; numerical ones live on `grid`.
    pub fn base_propagator(&self, tau: f64, grid: &Grid) -> Result<(UnitaryPath, PropagatorSource)> {
        if let Some(u) = &self.exact {
            return Ok((u.clone(), PropagatorSource::ClosedForm));
        }
        let substeps = self.substeps(&self.base, tau, grid)?;
        let opts = PropagateOptions {
            substeps,
            ..PropagateOptions::default()
        };
        let result = propagate_with(&self.base, tau, grid, opts)?;
        Ok((into_unitary_path(&result, &self.base)?, PropagatorSource::Numerical { substeps }))
    }

    fn generator_path(&self, g: &ComplexMatrix) -> Result<UnitaryPath> {
        UnitaryPath::from_constant_generator(g.clone(), self.base.span())
    }

    /// The system Hamiltonian at `τ`. A numerical base propagator is built on
    /// `grid`, so the result is only valid for that `τ`.
    pub fn system(&self, tau: f64, grid: &Grid) -> Result<HamiltonianPath> {
        match &self.kind {
            SystemKind::Base => Ok(self.base.clone()),
            SystemKind::Dual => dual_of(&self.base, &self.base_propagator(tau, grid)?.0),
            SystemKind::NegatedDual => Ok(negate(&dual_of(&self.base, &self.base_propagator(tau, grid)?.0)?)
                .labeled(format!("negated_dual[{}]", self.base.label()))),
            SystemKind::Transformed { generator, sign } => transform(&self.base, &self.generator_path(generator)?, *sign),
        }
    }

    /// The system propagator sampled on `grid`.
    pub fn system_unitaries(&self, tau: f64, grid: &Grid) -> Result<(Vec<ComplexMatrix>, PropagatorSource)> {
        let sample = |u: &UnitaryPath, t: f64| grid.iter().map(|s| u.eval(s, t)).collect::<Vec<_>>();
        match &self.kind {
            SystemKind::Base => {
                let (u, src) = self.base_propagator(tau, grid)?;
                Ok((sample(&u, tau), src))
            }
            SystemKind::Dual => {
                // i dU_b/ds = rate·H_b U_b is solved by U_b = U_a†.
                let (u, src) = self.base_propagator(tau, grid)?;
                Ok((sample(&u, tau).into_iter().map(|m| m.adjoint()).collect(), src))
            }
            SystemKind::NegatedDual => {
                // U_c = U_a†(τ) U_a(2τ).
                let (u1, src) = self.base_propagator(tau, grid)?;
                let (u2, _) = self.base_propagator(2.0 * tau, grid)?;
                let a = sample(&u1, tau);
                let b = sample(&u2, 2.0 * tau);
                Ok((a.iter().zip(&b).map(|(x, y)| x.adjoint() * y).collect(), src))
            }
            SystemKind::Transformed { .. } => {
                let h = self.system(tau, grid)?;
                let substeps = self.substeps(&h, tau, grid)?;
                let opts = PropagateOptions {
                    substeps,
                    ..PropagateOptions::default()
                };
                let r = propagate_with(&h, tau, grid, opts)?;
                Ok((r.unitaries, PropagatorSource::Numerical { substeps }))
            }
        }
    }

    pub fn grid_for(&self, tau: f64, spec: GridSpec) -> Result<Grid> {
        let (a, b) = self.base.span();
        match spec {
            GridSpec::Points(n) => Grid::new(a, b, n),
            GridSpec::Auto => {
                // A provisional grid is enough to build the system for the
                // phase-rate probe; the final grid is at least as fine.
                let coarse = Grid::new(a, b, 2049)?;
                let base_grid = auto_grid(&self.base, tau)?;
                let probe = if base_grid.points > coarse.points { base_grid } else { coarse };
                let sys = self.system(tau, &probe)?;
                let g = auto_grid(&sys, tau)?;
                if let SystemKind::NegatedDual = self.kind {
                    // the negated dual's couplings turn twice as fast
                    Ok(g.refined(2))
                } else {
                    Ok(g)
                }
            }
        }
    }

    pub fn frame(&self, tau: f64, grid: &Grid) -> Result<EigenFrame> {
        let sys = self.system(tau, grid)?;
        let opts = FrameOptions {
            tolerances: self.tolerances,
            reference: self.reference.clone(),
            midpoint_correction: true,
        };
        EigenFrame::build_with(&sys, tau, grid, &opts)
    }

    pub fn evaluate(&self, tau: f64, spec: GridSpec, with_propagator: bool) -> Result<Evaluation> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!("tau must be positive and finite, got {tau}")));
        }
        let grid = self.grid_for(tau, spec)?;
        let frame = self.frame(tau, &grid)?;
        let cm = couplings(&frame, self.route)?;
        let (unitaries, source) = if with_propagator {
            let (u, src) = self.system_unitaries(tau, &grid)?;
            (Some(u), src)
        } else {
            (None, PropagatorSource::ClosedForm)
        };
        let (report, series) = diagnose(&frame, &cm, unitaries.as_deref())?;
        Ok(Evaluation {
            report,
            series,
            source,
            grid,
        })
    }
}
