//! Time-dependent Hamiltonians and unitary paths in scaled time.
//!
//! A path lives on a scaled-time span `[s₀, s₁]` and is evaluated at a pair
//! `(s, τ)`. Physical time is `t = τ (s − s₀) / (s₁ − s₀)`, so the Schrödinger
//! equation reads `i dU/ds = (τ / (s₁ − s₀)) H(s, τ) U`. That prefactor is
//! [`HamiltonianPath::rate`]. For the usual unit span it is just `τ`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{c, hermiticity_defect, hermitize, identity, unitarity_defect, zeros, ComplexMatrix, C64, I};

pub type MatrixFn = Arc<dyn Fn(f64, f64) -> ComplexMatrix + Send + Sync>;

/// Relative finite-difference step used when no analytic derivative is registered.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Fourth-order central difference of a matrix-valued function.
pub fn central_difference<F>(f: F, s: f64, h: f64) -> ComplexMatrix
where
    F: Fn(f64) -> ComplexMatrix,
{
    let a = f(s + 2.0 * h);
    let b = f(s + h);
    let d = f(s - h);
    let e = f(s - 2.0 * h);
    (b - d) * c(8.0 / (12.0 * h), 0.0) - (a - e) * c(1.0 / (12.0 * h), 0.0)
}

#[derive(Clone)]
pub struct HamiltonianPath {
    dim: usize,
    span: (f64, f64),
    eval: MatrixFn,
    derivative: Option<MatrixFn>,
    tau_dependent: bool,
    label: String,
}

impl fmt::Debug for HamiltonianPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianPath")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("span", &self.span)
            .field("tau_dependent", &self.tau_dependent)
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl HamiltonianPath {
    pub fn new<F>(dim: usize, span: (f64, f64), eval: F) -> Self
    where
        F: Fn(f64, f64) -> ComplexMatrix + Send + Sync + 'static,
    {
        Self {
            dim,
            span,
            eval: Arc::new(eval),
            derivative: None,
            tau_dependent: false,
            label: String::from("H"),
        }
    }

    pub fn with_derivative<F>(mut self, derivative: F) -> Self
    where
        F: Fn(f64, f64) -> ComplexMatrix + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    pub fn tau_dependent(mut self, flag: bool) -> Self {
        self.tau_dependent = flag;
        self
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Constant Hamiltonian on the given span.
    pub fn constant(h: ComplexMatrix, span: (f64, f64)) -> Self {
        let dim = h.nrows();
        Self::new(dim, span, move |_, _| h.clone())
            .with_derivative(move |_, _| zeros(dim))
            .labeled("constant")
    }

    pub fn zero(dim: usize, span: (f64, f64)) -> Self {
        Self::constant(zeros(dim), span).labeled("zero")
    }

    /// Piecewise-linear interpolation through Hermitian samples placed
    /// uniformly on `span`. Outside the span the end samples are held.
    pub fn piecewise_linear(span: (f64, f64), samples: Vec<ComplexMatrix>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                found: samples.len(),
            });
        }
        Grid::new(span.0, span.1, samples.len())?;
        let dim = samples[0].nrows();
        for (k, m) in samples.iter().enumerate() {
            if m.nrows() != m.ncols() {
                return Err(Error::NotSquare {
                    rows: m.nrows(),
                    cols: m.ncols(),
                });
            }
            if m.nrows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.nrows(),
                });
            }
            let defect = hermiticity_defect(m);
            let allowed = 1e-10 * m.norm().max(1.0);
            if defect > allowed {
                return Err(Error::InvalidArgument(format!(
                    "sample {k} is not Hermitian (defect {defect:.3e})"
                )));
            }
        }
        let samples: Arc<Vec<ComplexMatrix>> = Arc::new(samples.iter().map(hermitize).collect());
        let segments = samples.len() - 1;
        let width = (span.1 - span.0) / segments as f64;
        let locate = move |s: f64| -> (usize, f64) {
            let x = ((s - span.0) / width).clamp(0.0, segments as f64);
            let k = (x.floor() as usize).min(segments - 1);
            (k, x - k as f64)
        };
        let a = Arc::clone(&samples);
        let b = Arc::clone(&samples);
        Ok(Self::new(dim, span, move |s, _| {
            let (k, frac) = locate(s);
            &a[k] * c(1.0 - frac, 0.0) + &a[k + 1] * c(frac, 0.0)
        })
        .with_derivative(move |s, _| {
            if s < span.0 || s > span.1 {
                return zeros(dim);
            }
            let (k, _) = locate(s);
            (&b[k + 1] - &b[k]) * c(1.0 / width, 0.0)
        })
        .labeled("custom"))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    pub fn span_len(&self) -> f64 {
        self.span.1 - self.span.0
    }

    /// Coefficient of `H` in `i dU/ds = rate · H U`.
    pub fn rate(&self, tau: f64) -> f64 {
        tau / self.span_len()
    }

    pub fn is_tau_dependent(&self) -> bool {
        self.tau_dependent
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn eval(&self, s: f64, tau: f64) -> ComplexMatrix {
        (self.eval)(s, tau)
    }

    /// `dH/ds`: the registered derivative, or fourth-order central
    /// differences with step `1e-4 · span`.
    pub fn derivative(&self, s: f64, tau: f64) -> ComplexMatrix {
        match &self.derivative {
            Some(d) => d(s, tau),
            None => self.finite_difference(s, tau, DEFAULT_FD_STEP * self.span_len()),
        }
    }

    pub fn finite_difference(&self, s: f64, tau: f64, h: f64) -> ComplexMatrix {
        central_difference(|x| self.eval(x, tau), s, h)
    }

    /// Largest hermiticity defect over the grid.
    pub fn max_hermiticity_defect(&self, tau: f64, grid: &Grid) -> f64 {
        grid.iter()
            .map(|s| hermiticity_defect(&self.eval(s, tau)))
            .fold(0.0, f64::max)
    }

    /// Pointwise `factor · H`.
    pub fn scaled(&self, factor: f64) -> Self {
        let eval = Arc::clone(&self.eval);
        let this = self.clone();
        let mut out = Self::new(self.dim, self.span, move |s, tau| eval(s, tau) * c(factor, 0.0))
            .with_derivative(move |s, tau| this.derivative(s, tau) * c(factor, 0.0))
            .tau_dependent(self.tau_dependent)
            .labeled(format!("{}*{}", factor, self.label));
        if factor == -1.0 {
            out.label = format!("-{}", self.label);
        }
        out
    }
}

/// Pointwise negation. Eigenprojectors are unchanged; eigenvalues flip sign.
pub fn negate(h: &HamiltonianPath) -> HamiltonianPath {
    h.scaled(-1.0)
}

/// A unitary-valued path with `U(s₀) = I`.
#[derive(Clone)]
pub struct UnitaryPath {
    dim: usize,
    span: (f64, f64),
    eval: MatrixFn,
    derivative: Option<MatrixFn>,
    fixed_tau: Option<f64>,
    label: String,
}

impl fmt::Debug for UnitaryPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitaryPath")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("span", &self.span)
            .field("fixed_tau", &self.fixed_tau)
            .finish()
    }
}

impl UnitaryPath {
    pub fn new<F>(dim: usize, span: (f64, f64), eval: F) -> Self
    where
        F: Fn(f64, f64) -> ComplexMatrix + Send + Sync + 'static,
    {
        Self {
            dim,
            span,
            eval: Arc::new(eval),
            derivative: None,
            fixed_tau: None,
            label: String::from("U"),
        }
    }

    pub fn with_derivative<F>(mut self, derivative: F) -> Self
    where
        F: Fn(f64, f64) -> ComplexMatrix + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    /// Marks a path that was built for one particular `τ` (a numerical
    /// propagation, say). The `τ` argument of `eval` is then ignored.
    pub fn for_fixed_tau(mut self, tau: f64) -> Self {
        self.fixed_tau = Some(tau);
        self
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn identity(dim: usize, span: (f64, f64)) -> Self {
        Self::new(dim, span, move |_, _| identity(dim))
            .with_derivative(move |_, _| zeros(dim))
            .labeled("identity")
    }

    /// `U(s) = exp(−i · rate · (s − s₀) · G)` for a constant Hermitian generator.
    pub fn from_constant_generator(g: ComplexMatrix, span: (f64, f64)) -> Result<Self> {
        let eig = crate::linalg::herm_eig(&g)?;
        let dim = g.nrows();
        let len = span.1 - span.0;
        let e1 = eig.clone();
        let g2 = g.clone();
        Ok(Self::new(dim, span, move |s, tau| {
            crate::linalg::unitary_exp_from_eig(&e1, tau / len * (s - span.0))
        })
        .with_derivative(move |s, tau| {
            let u = crate::linalg::unitary_exp_from_eig(&eig, tau / len * (s - span.0));
            &g2 * u * (-I * (tau / len))
        })
        .labeled("exp(-i G)"))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    pub fn span_len(&self) -> f64 {
        self.span.1 - self.span.0
    }

    pub fn fixed_tau(&self) -> Option<f64> {
        self.fixed_tau
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn eval(&self, s: f64, tau: f64) -> ComplexMatrix {
        (self.eval)(s, tau)
    }

    pub fn derivative(&self, s: f64, tau: f64) -> ComplexMatrix {
        match &self.derivative {
            Some(d) => d(s, tau),
            None => central_difference(|x| self.eval(x, tau), s, DEFAULT_FD_STEP * self.span_len()),
        }
    }

    pub fn max_unitarity_defect(&self, tau: f64, grid: &Grid) -> f64 {
        grid.iter()
            .map(|s| unitarity_defect(&self.eval(s, tau)))
            .fold(0.0, f64::max)
    }

    fn origin_defect(&self) -> f64 {
        let tau = self.fixed_tau.unwrap_or(1.0);
        (self.eval(self.span.0, tau) - identity(self.dim)).norm()
    }
}

fn check_compatible(h: &HamiltonianPath, u: &UnitaryPath) -> Result<()> {
    if h.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: u.dim(),
        });
    }
    let (a, b) = (h.span(), u.span());
    let tol = 1e-12 * (1.0 + a.0.abs() + a.1.abs());
    if (a.0 - b.0).abs() > tol || (a.1 - b.1).abs() > tol {
        return Err(Error::InvalidArgument(format!(
            "span mismatch: Hamiltonian on {a:?}, unitary on {b:?}"
        )));
    }
    Ok(())
}

/// `H_x(s, τ) = sign · U_x†(s, τ) H̃(s) U_x(s, τ)`.
pub fn transform(h: &HamiltonianPath, ux: &UnitaryPath, sign: f64) -> Result<HamiltonianPath> {
    check_compatible(h, ux)?;
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::InvalidArgument(format!("sign must be ±1, got {sign}")));
    }
    let sign_c = c(sign, 0.0);
    let (h1, u1) = (h.clone(), ux.clone());
    let (h2, u2) = (h.clone(), ux.clone());
    let label = format!("{}{}†{}{}", if sign < 0.0 { "-" } else { "" }, ux.label(), h.label(), ux.label());
    Ok(HamiltonianPath::new(h.dim(), h.span(), move |s, tau| {
        let u = u1.eval(s, tau);
        u.adjoint() * h1.eval(s, tau) * &u * sign_c
    })
    .with_derivative(move |s, tau| {
        let u = u2.eval(s, tau);
        let du = u2.derivative(s, tau);
        let hs = h2.eval(s, tau);
        let dh = h2.derivative(s, tau);
        let ud = u.adjoint();
        let hu = &hs * &u;
        (du.adjoint() * &hu + &ud * dh * &u + &ud * hs * du) * sign_c
    })
    .tau_dependent(true)
    .labeled(label))
}

/// The dual Hamiltonian `−U†(s, τ) H(s) U(s, τ)`; `U` is normally the exact
/// propagator of `H`.
pub fn dual_of(h: &HamiltonianPath, u: &UnitaryPath) -> Result<HamiltonianPath> {
    check_compatible(h, u)?;
    let defect = u.origin_defect();
    if defect > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "unitary path must start at the identity (defect {defect:.3e})"
        )));
    }
    Ok(transform(h, u, -1.0)?.labeled(format!("dual[{}]", h.label())))
}

/// How `dU/ds` is obtained when extracting a generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativePolicy {
    /// Registered analytic derivative, else default finite differences.
    Registered,
    /// Fourth-order central differences with the given absolute step.
    FiniteDifference { step: f64 },
}

/// A Hamiltonian extracted from a unitary path, with its quality metric.
#[derive(Debug, Clone)]
pub struct GeneratedHamiltonian {
    pub path: HamiltonianPath,
    /// Largest `‖(A − A†)/2‖_F / max(1, ‖A‖_F)` over the probe grid, where
    /// `A = (i/rate) U̇ U†` before hermitization.
    pub antihermitian_residual: f64,
}

/// Residual above which a unitary path is reported as non-smooth.
pub const GENERATOR_RESIDUAL_LIMIT: f64 = 1e-6;

/// `H̃ = (i / rate) (dU/ds) U†`, hermitized.
pub fn generator_of(
    ux: &UnitaryPath,
    tau: f64,
    probe: &Grid,
    policy: DerivativePolicy,
) -> Result<GeneratedHamiltonian> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let rate = tau / ux.span_len();
    let u = ux.clone();
    let raw = move |s: f64| -> ComplexMatrix {
        let du = match policy {
            DerivativePolicy::Registered => u.derivative(s, tau),
            DerivativePolicy::FiniteDifference { step } => central_difference(|x| u.eval(x, tau), s, step),
        };
        du * u.eval(s, tau).adjoint() * C64::new(0.0, 1.0 / rate)
    };
    let mut residual: f64 = 0.0;
    for s in probe.iter() {
        let a = raw(s);
        let anti = (&a - a.adjoint()).norm() * 0.5;
        residual = residual.max(anti / a.norm().max(1.0));
    }
    if residual > GENERATOR_RESIDUAL_LIMIT {
        return Err(Error::NonSmoothUnitary { residual });
    }
    let path = HamiltonianPath::new(ux.dim(), ux.span(), move |s, _| hermitize(&raw(s)))
        .tau_dependent(true)
        .labeled(format!("gen[{}]", ux.label()));
    Ok(GeneratedHamiltonian {
        path,
        antihermitian_residual: residual,
    })
}
