//! Analytic model Hamiltonians.
//!
//! [`SpinHalf`] is a spin-½ in a field of fixed magnitude rotating about `z`
//! at frequency `ω`, written in scaled time `s = ωt` over one rotation
//! `s ∈ [0, 2π]`. The total duration is `τ = 2π/ω`, so the propagation rate
//! `τ / 2π` is `1/ω`. Everything here is in closed form and serves as the
//! reference the numerical machinery is checked against.

use std::f64::consts::PI;

use crate::hamiltonian::{HamiltonianPath, UnitaryPath};
use crate::linalg::{c, cis, sigma_x, sigma_y, sigma_z, ComplexMatrix, ComplexVector, C64, I};

/// Spin-½ in a rotating field: `H(s) = −(ω₀/2)(σx sinθ cos s + σy sinθ sin s + σz cosθ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinHalf {
    pub theta: f64,
    pub omega0: f64,
}

pub const SPIN_HALF_SPAN: (f64, f64) = (0.0, 2.0 * PI);

impl SpinHalf {
    pub fn new(theta: f64, omega0: f64) -> Self {
        Self { theta, omega0 }
    }

    pub fn tau_for_omega(omega: f64) -> f64 {
        2.0 * PI / omega
    }

    pub fn omega_for_tau(tau: f64) -> f64 {
        2.0 * PI / tau
    }

    pub fn matrix(&self, s: f64) -> ComplexMatrix {
        let (st, ct) = self.theta.sin_cos();
        (sigma_x() * c(st * s.cos(), 0.0) + sigma_y() * c(st * s.sin(), 0.0) + sigma_z() * c(ct, 0.0))
            * c(-self.omega0 / 2.0, 0.0)
    }

    pub fn matrix_derivative(&self, s: f64) -> ComplexMatrix {
        let st = self.theta.sin();
        (sigma_x() * c(-st * s.sin(), 0.0) + sigma_y() * c(st * s.cos(), 0.0)) * c(-self.omega0 / 2.0, 0.0)
    }

    pub fn hamiltonian(&self) -> HamiltonianPath {
        let (a, b) = (*self, *self);
        HamiltonianPath::new(2, SPIN_HALF_SPAN, move |s, _| a.matrix(s))
            .with_derivative(move |s, _| b.matrix_derivative(s))
            .labeled("H_a")
    }

    /// `ω̄ = √(ω₀² + ω² + 2ωω₀ cosθ)`
    pub fn omega_bar(&self, omega: f64) -> f64 {
        (self.omega0 * self.omega0 + omega * omega + 2.0 * omega * self.omega0 * self.theta.cos()).sqrt()
    }

    /// Closed-form solution of `i dU/ds = (1/ω) H(s) U`, `U(0) = I`.
    pub fn propagator_at(&self, s: f64, omega: f64) -> ComplexMatrix {
        let wb = self.omega_bar(omega);
        let x = wb * s / (2.0 * omega);
        let (sx, cx) = x.sin_cos();
        let a = (omega + self.omega0 * self.theta.cos()) / wb;
        let b = self.omega0 * self.theta.sin() / wb;
        let em = cis(-s / 2.0);
        let ep = cis(s / 2.0);
        ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                c(cx, a * sx) * em,
                c(0.0, b * sx) * em,
                c(0.0, b * sx) * ep,
                c(cx, -a * sx) * ep,
            ],
        )
    }

    /// The closed-form propagator as a path; `ω = 2π/τ` is read off `τ`.
    pub fn exact_propagator(&self) -> UnitaryPath {
        let (a, b) = (*self, *self);
        UnitaryPath::new(2, SPIN_HALF_SPAN, move |s, tau| a.propagator_at(s, Self::omega_for_tau(tau)))
            .with_derivative(move |s, tau| {
                let omega = Self::omega_for_tau(tau);
                b.matrix(s) * b.propagator_at(s, omega) * (-I / omega)
            })
            .labeled("U_a")
    }

    /// Parallel-transported eigenvectors `(|E₁(s)⟩, |E₂(s)⟩)` with energies
    /// `(+ω₀/2, −ω₀/2)`.
    pub fn parallel_eigvecs(&self, s: f64) -> (ComplexVector, ComplexVector) {
        let (sh, ch) = (self.theta / 2.0).sin_cos();
        let ct = self.theta.cos();
        let e1 = ComplexVector::from_vec(vec![cis(-s / 2.0) * sh, -cis(s / 2.0) * ch]) * cis(-s * ct / 2.0);
        let e2 = ComplexVector::from_vec(vec![cis(-s / 2.0) * ch, cis(s / 2.0) * sh]) * cis(s * ct / 2.0);
        (e1, e2)
    }

    /// Columns `|E₁(0)⟩, |E₂(0)⟩`; used to fix level order and phases of frames.
    pub fn reference_basis(&self) -> ComplexMatrix {
        let (e1, e2) = self.parallel_eigvecs(0.0);
        ComplexMatrix::from_columns(&[e1, e2])
    }

    pub fn energies(&self) -> (f64, f64) {
        (self.omega0 / 2.0, -self.omega0 / 2.0)
    }

    /// `⟨E₁(s)|dE₂/ds⟩ = −(i/2) sinθ e^{is cosθ}`
    pub fn coupling(&self, s: f64) -> C64 {
        -I * 0.5 * self.theta.sin() * cis(s * self.theta.cos())
    }

    /// `P₁(s) = |E₁(s)⟩⟨E₁(s)|` written out entrywise.
    pub fn upper_projector(&self, s: f64) -> ComplexMatrix {
        let (sh, ch) = (self.theta / 2.0).sin_cos();
        ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(sh * sh, 0.0), cis(-s) * (-sh * ch), cis(s) * (-sh * ch), c(ch * ch, 0.0)],
        )
    }

    /// Off-diagonal element `[P₁ᵇ(s)]₁₂` of the dual system's upper projector.
    pub fn dual_projector_element(&self, s: f64, omega: f64) -> C64 {
        let wb = self.omega_bar(omega);
        let x = wb * s / (2.0 * omega);
        let (sx, cx) = x.sin_cos();
        let (sh, ch) = (self.theta / 2.0).sin_cos();
        let sc = sh * ch;
        let r0 = self.omega0 / wb;
        let r = omega / wb;
        c(sx * sx * (-r0 * r0 * sc + r * r * sc) - cx * cx * sc, 2.0 * sx * cx * r * sc)
    }

    /// `∫₀ˢ ⟨E₁|dE₂/dσ⟩ dσ = ½ (1 − e^{is cosθ}) tanθ`: the resonance integral
    /// of the dual system, for any `ω`.
    pub fn dual_resonance(&self, s: f64) -> C64 {
        let ct = self.theta.cos();
        if ct.abs() < 1e-300 {
            // θ = π/2: the integrand is −i/2 exactly.
            return c(0.0, -0.5 * s);
        }
        (c(1.0, 0.0) - cis(s * ct)) * (0.5 * self.theta.tan())
    }

    /// Resonance integral of the negated dual: `ω sinθ (1 − e^{iks}) / (2(2ω₀ + ω cosθ))`
    /// with `k = (2ω₀ + ω cosθ)/ω`, from direct integration.
    pub fn negated_dual_resonance(&self, s: f64, omega: f64) -> C64 {
        let denom = 2.0 * self.omega0 + omega * self.theta.cos();
        let k = denom / omega;
        (c(1.0, 0.0) - cis(k * s)) * (omega * self.theta.sin() / (2.0 * denom))
    }

    /// Real-time adiabaticity ratio `ω sinθ / (2ω₀)`.
    pub fn qac(&self, omega: f64) -> f64 {
        omega * self.theta.sin() / (2.0 * self.omega0)
    }
}

/// Two-level system driven by a circularly polarised field with a smooth
/// `sin²(πs)` envelope on `s ∈ [0, 1]`:
///
/// `H(s, τ) = (ω₀/2) σz + g sin²(πs) (σx cos(ν τ s) + σy sin(ν τ s))`.
///
/// With `ν = ω₀` the drive is resonant; with `ν ≫ ω₀` it is far off resonance
/// and averages out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivenTwoLevel {
    pub omega0: f64,
    pub amplitude: f64,
    pub drive_frequency: f64,
}

impl DrivenTwoLevel {
    pub fn new(omega0: f64, amplitude: f64, drive_frequency: f64) -> Self {
        Self {
            omega0,
            amplitude,
            drive_frequency,
        }
    }

    pub fn matrix(&self, s: f64, tau: f64) -> ComplexMatrix {
        let env = (PI * s).sin().powi(2);
        let ph = self.drive_frequency * tau * s;
        sigma_z() * c(self.omega0 / 2.0, 0.0)
            + (sigma_x() * c(ph.cos(), 0.0) + sigma_y() * c(ph.sin(), 0.0)) * c(self.amplitude * env, 0.0)
    }

    pub fn matrix_derivative(&self, s: f64, tau: f64) -> ComplexMatrix {
        let (sp, cp) = (PI * s).sin_cos();
        let env = sp * sp;
        let denv = 2.0 * PI * sp * cp;
        let nu = self.drive_frequency * tau;
        let (sn, cs) = (nu * s).sin_cos();
        (sigma_x() * c(cs, 0.0) + sigma_y() * c(sn, 0.0)) * c(self.amplitude * denv, 0.0)
            + (sigma_x() * c(-sn, 0.0) + sigma_y() * c(cs, 0.0)) * c(self.amplitude * env * nu, 0.0)
    }

    pub fn hamiltonian(&self) -> HamiltonianPath {
        let (a, b) = (*self, *self);
        HamiltonianPath::new(2, (0.0, 1.0), move |s, tau| a.matrix(s, tau))
            .with_derivative(move |s, tau| b.matrix_derivative(s, tau))
            .tau_dependent(true)
            .labeled("H_drive")
    }
}
