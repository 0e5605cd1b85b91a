//! Parallel-transport eigenframes and the operators built on them.
//!
//! Levels are followed from one grid point to the next by maximal overlap,
//! never by sorting, so a negated or reordered spectrum keeps its labels. The
//! phase of each new eigenvector is fixed by discrete parallel transport: it is
//! rotated so that its overlap with the previous vector is real. The phase
//! accumulated over one interval is additionally Richardson-corrected with the
//! eigenvector at the interval midpoint, which lifts the gauge from second to
//! fourth order in the step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cumulative_integral, Grid};
use crate::hamiltonian::HamiltonianPath;
use crate::linalg::{braket, c, cis, herm_eig_with, hermiticity_defect, identity, zeros, ComplexMatrix, ComplexVector, Tolerances, C64, I};

#[derive(Debug, Clone)]
pub struct FrameOptions {
    pub tolerances: Tolerances,
    /// Columns fixing level order and phases at the first grid point.
    pub reference: Option<ComplexMatrix>,
    pub midpoint_correction: bool,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            reference: None,
            midpoint_correction: true,
        }
    }
}

impl FrameOptions {
    pub fn with_reference(reference: ComplexMatrix) -> Self {
        Self {
            reference: Some(reference),
            ..Self::default()
        }
    }
}

/// Eigenvalues, gauged eigenvectors and `dH/ds` sampled on a grid.
#[derive(Debug, Clone)]
pub struct EigenFrame {
    pub grid: Grid,
    pub tau: f64,
    /// Propagation rate `τ / span`.
    pub rate: f64,
    /// `values[k][n]`: energy of tracked level `n` at grid point `k`.
    pub values: Vec<Vec<f64>>,
    /// Gauged eigenvectors as columns, one matrix per grid point.
    pub vectors: Vec<ComplexMatrix>,
    /// Eigenvectors at interval midpoints, matched but not gauged.
    pub midpoints: Option<Vec<ComplexMatrix>>,
    pub derivatives: Vec<ComplexMatrix>,
    pub min_gap: f64,
    pub tolerances: Tolerances,
}

/// Route used to extract `⟨E_m|dE_n/ds⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRoute {
    /// `⟨E_m|dH/ds|E_n⟩ / (E_n − E_m)`
    HellmannFeynman,
    /// Fourth-order differences of the gauged eigenvectors.
    FiniteDifference,
}

fn wrap(phase: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    phase - two_pi * (phase / two_pi).round()
}

/// Greedy maximal-overlap assignment; `out[n]` is the column of `new`
/// continuing column `n` of `old`, with its overlap modulus.
fn match_levels(old: &ComplexMatrix, new: &ComplexMatrix) -> Vec<(usize, f64)> {
    let n = old.ncols();
    let mut overlap = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            overlap[a * n + b] = old.column(a).dotc(&new.column(b)).norm();
        }
    }
    let mut out = vec![(usize::MAX, 0.0); n];
    let mut taken = vec![false; n];
    for _ in 0..n {
        let mut best = (0, 0, -1.0);
        for a in 0..n {
            if out[a].0 != usize::MAX {
                continue;
            }
            for b in 0..n {
                if !taken[b] && overlap[a * n + b] > best.2 {
                    best = (a, b, overlap[a * n + b]);
                }
            }
        }
        out[best.0] = (best.1, best.2);
        taken[best.1] = true;
    }
    out
}

fn permute(m: &ComplexMatrix, assignment: &[(usize, f64)]) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |r, col| m[(r, assignment[col].0)])
}

/// Discrete parallel transport of `raw` (already level-matched) from `prev`.
fn transport(prev: &ComplexMatrix, raw: &ComplexMatrix, mid: Option<&ComplexMatrix>) -> ComplexMatrix {
    let mut out = raw.clone();
    for n in 0..raw.ncols() {
        let p = prev.column(n);
        let v = raw.column(n);
        let a0 = p.dotc(&v).arg();
        let delta = match mid {
            Some(m) => {
                let m = m.column(n);
                let two = (p.dotc(&m) * m.dotc(&v)).arg();
                a0 + 4.0 * wrap(two - a0) / 3.0
            }
            None => a0,
        };
        let ph = cis(-delta);
        for r in 0..raw.nrows() {
            out[(r, n)] *= ph;
        }
    }
    out
}

/// Applies discrete parallel transport to a level-matched vector sequence,
/// keeping the first element as given.
pub fn gauge_sequence(raw: &[ComplexMatrix], midpoints: Option<&[ComplexMatrix]>) -> Vec<ComplexMatrix> {
    let mut out: Vec<ComplexMatrix> = Vec::with_capacity(raw.len());
    if let Some(first) = raw.first() {
        out.push(first.clone());
    }
    for k in 1..raw.len() {
        let next = transport(&out[k - 1], &raw[k], midpoints.map(|m| &m[k - 1]));
        out.push(next);
    }
    out
}

/// Orders and phases the columns of `vectors` against `reference`.
fn align_to_reference(vectors: &ComplexMatrix, values: &[f64], reference: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>) {
    let assignment = match_levels(reference, vectors);
    let mut v = permute(vectors, &assignment);
    let vals = assignment.iter().map(|&(j, _)| values[j]).collect();
    for n in 0..v.ncols() {
        let ov = reference.column(n).dotc(&v.column(n));
        let ph = if ov.norm() > 0.0 { (ov / ov.norm()).conj() } else { c(1.0, 0.0) };
        for r in 0..v.nrows() {
            v[(r, n)] *= ph;
        }
    }
    (v, vals)
}

/// Default phase convention: the largest component of each column is real
/// and positive.
fn canonical_phases(vectors: &mut ComplexMatrix) {
    for n in 0..vectors.ncols() {
        let mut best = c(0.0, 0.0);
        for r in 0..vectors.nrows() {
            if vectors[(r, n)].norm() > best.norm() + 1e-12 {
                best = vectors[(r, n)];
            }
        }
        if best.norm() > 0.0 {
            let ph = (best / best.norm()).conj();
            for r in 0..vectors.nrows() {
                vectors[(r, n)] *= ph;
            }
        }
    }
}

fn sorted_gap(values: &[f64]) -> (f64, usize) {
    let mut v: Vec<(f64, usize)> = values.iter().copied().zip(0..).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = (f64::INFINITY, 0);
    for w in 0..v.len().saturating_sub(1) {
        let g = v[w + 1].0 - v[w].0;
        if g < best.0 {
            best = (g, w);
        }
    }
    best
}

fn energy_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

impl EigenFrame {
    pub fn build(h: &HamiltonianPath, tau: f64, grid: &Grid) -> Result<Self> {
        Self::build_with(h, tau, grid, &FrameOptions::default())
    }

    pub fn build_with(h: &HamiltonianPath, tau: f64, grid: &Grid, opts: &FrameOptions) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        let tol = opts.tolerances;
        let dim = h.dim();
        if let Some(r) = &opts.reference {
            if r.nrows() != dim || r.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.nrows(),
                });
            }
        }
        let eig0 = herm_eig_with(&h.eval(grid.at(0), tau), &tol)?;
        let (mut v0, vals0) = match &opts.reference {
            Some(r) => align_to_reference(&eig0.vectors, &eig0.values, r),
            None => (eig0.vectors.clone(), eig0.values.clone()),
        };
        if opts.reference.is_none() {
            canonical_phases(&mut v0);
        }
        let mut min_gap = sorted_gap(&vals0).0;
        if dim > 1 && min_gap < tol.gap_floor {
            return Err(Error::GapBelowFloor {
                s: grid.at(0),
                gap: min_gap,
                floor: tol.gap_floor,
            });
        }

        let mut values = Vec::with_capacity(grid.len());
        let mut vectors = Vec::with_capacity(grid.len());
        let mut mids = if opts.midpoint_correction {
            Some(Vec::with_capacity(grid.intervals()))
        } else {
            None
        };
        let mut derivatives = Vec::with_capacity(grid.len());
        values.push(vals0);
        vectors.push(v0);
        derivatives.push(h.derivative(grid.at(0), tau));

        for k in 1..grid.len() {
            let (s_prev, s) = (grid.at(k - 1), grid.at(k));
            let prev = &vectors[k - 1];
            let check = |assignment: &[(usize, f64)]| -> Result<()> {
                for (level, &(_, ov)) in assignment.iter().enumerate() {
                    if ov < tol.min_overlap {
                        return Err(Error::Discontinuous {
                            start: s_prev,
                            end: s,
                            level,
                            overlap: ov,
                        });
                    }
                }
                Ok(())
            };
            let mid = match mids.as_mut() {
                Some(list) => {
                    let e = herm_eig_with(&h.eval(0.5 * (s_prev + s), tau), &tol)?;
                    let a = match_levels(prev, &e.vectors);
                    check(&a)?;
                    let m = permute(&e.vectors, &a);
                    list.push(m);
                    list.last()
                }
                None => None,
            };
            let eig = herm_eig_with(&h.eval(s, tau), &tol)?;
            let anchor = mid.unwrap_or(prev);
            let a = match_levels(anchor, &eig.vectors);
            check(&a)?;
            let raw = permute(&eig.vectors, &a);
            let vals: Vec<f64> = a.iter().map(|&(j, _)| eig.values[j]).collect();

            let (gap, lower) = sorted_gap(&vals);
            if dim > 1 {
                let before = energy_order(&values[k - 1]);
                let after = energy_order(&vals);
                if before != after || gap < tol.gap_floor {
                    let pair = if before != after {
                        let w = (0..dim).find(|&w| before[w] != after[w]).unwrap_or(0);
                        (before[w].min(after[w]), before[w].max(after[w]))
                    } else {
                        let o = energy_order(&vals);
                        (o[lower], o[lower + 1])
                    };
                    return Err(Error::Crossing {
                        start: s_prev,
                        end: s,
                        levels: pair,
                        gap,
                    });
                }
                min_gap = min_gap.min(gap);
            }
            let gauged = transport(prev, &raw, mid);
            values.push(vals);
            vectors.push(gauged);
            derivatives.push(h.derivative(s, tau));
        }

        Ok(Self {
            grid: *grid,
            tau,
            rate: h.rate(tau),
            values,
            vectors,
            midpoints: mids,
            derivatives,
            min_gap: if dim > 1 { min_gap } else { f64::INFINITY },
            tolerances: tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].ncols()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn s(&self, k: usize) -> f64 {
        self.grid.at(k)
    }

    pub fn vector(&self, k: usize, n: usize) -> ComplexVector {
        self.vectors[k].column(n).into_owned()
    }

    pub fn projector(&self, k: usize, n: usize) -> ComplexMatrix {
        let v = self.vector(k, n);
        &v * v.adjoint()
    }

    pub fn level_values(&self, n: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[n]).collect()
    }

    /// Re-applies the gauge to the stored vectors.
    pub fn regauged(&self) -> Vec<ComplexMatrix> {
        gauge_sequence(&self.vectors, self.midpoints.as_deref())
    }

    /// Largest `‖Σ_n P_n − I‖_F` and `‖P_n P_m − δ_nm P_n‖_F` over the grid.
    pub fn completeness_defect(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for k in 0..self.len() {
            let p: Vec<ComplexMatrix> = (0..dim).map(|n| self.projector(k, n)).collect();
            let mut sum = zeros(dim);
            for pn in &p {
                sum += pn;
            }
            worst = worst.max((sum - identity(dim)).norm());
            for a in 0..dim {
                for b in 0..dim {
                    let prod = &p[a] * &p[b];
                    let d = if a == b { (prod - &p[a]).norm() } else { prod.norm() };
                    worst = worst.max(d);
                }
            }
        }
        worst
    }

    /// Largest `|Im ⟨E_n(s_k)|E_n(s_{k+1})⟩| / Δs`, the discrete Berry connection
    /// left after gauging.
    pub fn transport_residual(&self) -> f64 {
        let h = self.grid.step();
        let mut worst: f64 = 0.0;
        for k in 0..self.len() - 1 {
            for n in 0..self.dim() {
                let ov = self.vectors[k].column(n).dotc(&self.vectors[k + 1].column(n));
                worst = worst.max(ov.arg().abs() / h);
            }
        }
        worst
    }

    /// Smallest overlap modulus between consecutive gauged vectors.
    pub fn min_overlap(&self) -> f64 {
        let mut worst: f64 = 1.0;
        for k in 0..self.len() - 1 {
            for n in 0..self.dim() {
                worst = worst.min(self.vectors[k].column(n).dotc(&self.vectors[k + 1].column(n)).norm());
            }
        }
        worst
    }
}

/// `C[k][(m, n)] = ⟨E_m(s_k)|dE_n/ds(s_k)⟩`.
pub fn couplings(frame: &EigenFrame, route: CouplingRoute) -> Result<Vec<ComplexMatrix>> {
    match route {
        CouplingRoute::HellmannFeynman => hellmann_feynman(frame),
        CouplingRoute::FiniteDifference => finite_difference(frame),
    }
}

fn hellmann_feynman(frame: &EigenFrame) -> Result<Vec<ComplexMatrix>> {
    let dim = frame.dim();
    let floor = frame.tolerances.gap_floor;
    let mut out = Vec::with_capacity(frame.len());
    for k in 0..frame.len() {
        let v = &frame.vectors[k];
        let mut m = v.adjoint() * &frame.derivatives[k] * v;
        let e = &frame.values[k];
        for a in 0..dim {
            for b in 0..dim {
                if a == b {
                    m[(a, b)] = c(0.0, 0.0);
                } else {
                    let gap = e[b] - e[a];
                    if gap.abs() < floor {
                        return Err(Error::GapBelowFloor {
                            s: frame.s(k),
                            gap: gap.abs(),
                            floor,
                        });
                    }
                    m[(a, b)] /= gap;
                }
            }
        }
        out.push(m);
    }
    Ok(out)
}

fn finite_difference(frame: &EigenFrame) -> Result<Vec<ComplexMatrix>> {
    let n = frame.len();
    if n < 5 {
        return Err(Error::InsufficientSamples { needed: 5, found: n });
    }
    let h = frame.grid.step();
    let v = &frame.vectors;
    let w = |k: usize, coeffs: &[(isize, f64)]| -> ComplexMatrix {
        let mut acc = zeros(frame.dim());
        for &(off, cf) in coeffs {
            acc += &v[(k as isize + off) as usize] * c(cf, 0.0);
        }
        acc * c(1.0 / (12.0 * h), 0.0)
    };
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let d = if k == 0 {
            w(k, &[(0, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)])
        } else if k == 1 {
            w(k, &[(-1, -3.0), (0, -10.0), (1, 18.0), (2, -6.0), (3, 1.0)])
        } else if k == n - 2 {
            w(k, &[(1, 3.0), (0, 10.0), (-1, -18.0), (-2, 6.0), (-3, -1.0)])
        } else if k == n - 1 {
            w(k, &[(0, 25.0), (-1, -48.0), (-2, 36.0), (-3, -16.0), (-4, 3.0)])
        } else {
            w(k, &[(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)])
        };
        out.push(v[k].adjoint() * d);
    }
    Ok(out)
}

/// `U_A(s_k) = Σ_n |E_n(s_k)⟩⟨E_n(0)|`
pub fn kato_operator(frame: &EigenFrame) -> Vec<ComplexMatrix> {
    let v0 = frame.vectors[0].adjoint();
    frame.vectors.iter().map(|v| v * &v0).collect()
}

/// Cumulative `θ_n(s_k) = ∫₀^{s_k} E_n`, indexed `[k][n]`.
pub fn integrated_energies(frame: &EigenFrame) -> Vec<Vec<f64>> {
    let h = frame.grid.step();
    let per_level: Vec<Vec<f64>> = (0..frame.dim())
        .map(|n| cumulative_integral(&frame.level_values(n), h))
        .collect();
    (0..frame.len())
        .map(|k| per_level.iter().map(|l| l[k]).collect())
        .collect()
}

fn in_reference_basis(frame: &EigenFrame, m: &ComplexMatrix) -> ComplexMatrix {
    &frame.vectors[0] * m * frame.vectors[0].adjoint()
}

/// `Φ_A(s_k) = Σ_n exp(−i · rate · θ_n(s_k)) P_n(0)`
pub fn dynamical_phase(frame: &EigenFrame) -> Vec<ComplexMatrix> {
    integrated_energies(frame)
        .iter()
        .map(|theta| {
            let d = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
                theta.len(),
                theta.iter().map(|&t| cis(-frame.rate * t)),
            ));
            in_reference_basis(frame, &d)
        })
        .collect()
}

/// `K(s_k) = i Σ_n (dP_n/ds) P_n = i V C V†`, off-diagonal couplings only.
pub fn kato_generator(frame: &EigenFrame, couplings: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    frame
        .vectors
        .iter()
        .zip(couplings)
        .map(|(v, cm)| {
            let mut off = cm.clone();
            off.fill_diagonal(c(0.0, 0.0));
            v * off * v.adjoint() * I
        })
        .collect()
}

/// Entries of the kernel in the `s = 0` eigenbasis:
/// `[k](m, n) = i e^{i·rate·(θ_m − θ_n)} ⟨E_m|dE_n/ds⟩` for `m ≠ n`.
pub fn kernel_entries(frame: &EigenFrame, couplings: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let theta = integrated_energies(frame);
    let dim = frame.dim();
    couplings
        .iter()
        .zip(&theta)
        .map(|(cm, th)| {
            ComplexMatrix::from_fn(dim, dim, |m, n| {
                if m == n {
                    c(0.0, 0.0)
                } else {
                    I * cis(frame.rate * (th[m] - th[n])) * cm[(m, n)]
                }
            })
        })
        .collect()
}

/// `K̄(s_k)` as an operator.
pub fn kernel(frame: &EigenFrame, couplings: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    kernel_entries(frame, couplings)
        .iter()
        .map(|m| in_reference_basis(frame, m))
        .collect()
}

/// Runtime checks of the standing assumptions on a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PremiseReport {
    /// Largest hermiticity defect on the grid.
    pub hermiticity_defect: f64,
    /// Smallest eigenvalue gap on the grid.
    pub min_gap: f64,
    /// Largest `‖dP/ds‖_F` and `‖d²P/ds²‖_F` on the probe points.
    pub projector_derivative_norm: f64,
    pub projector_second_derivative_norm: f64,
    /// Ratio of those norms at step `δ` against step `δ/2`; near 1 when the
    /// projectors are resolved.
    pub refinement_ratio: f64,
    pub passed: bool,
}

/// Checks hermiticity, the gap condition and grid-resolved projector
/// derivatives on at most 64 probe points.
pub fn check_premises(h: &HamiltonianPath, tau: f64, grid: &Grid, tol: &Tolerances) -> Result<PremiseReport> {
    let herm = grid
        .iter()
        .map(|s| {
            let m = h.eval(s, tau);
            hermiticity_defect(&m) / m.norm().max(1.0)
        })
        .fold(0.0, f64::max);
    let probes = grid.len().min(64);
    let (a, b) = h.span();
    let probe = Grid::new(a, b, probes.max(2))?;
    let delta = grid.step();
    let mut min_gap = f64::INFINITY;
    let mut d1 = [0.0f64; 2];
    let mut d2 = [0.0f64; 2];
    let projectors = |s: f64| -> Result<Vec<ComplexMatrix>> {
        let e = herm_eig_with(&h.eval(s, tau), tol)?;
        Ok((0..e.dim()).map(|n| e.projector(n)).collect())
    };
    for s in grid.iter() {
        let e = herm_eig_with(&h.eval(s, tau), tol)?;
        min_gap = min_gap.min(sorted_gap(&e.values).0);
    }
    for s in probe.iter() {
        let p0 = projectors(s)?;
        for (i, d) in [delta, 0.5 * delta].into_iter().enumerate() {
            let plus = projectors(s + d)?;
            let minus = projectors(s - d)?;
            for n in 0..p0.len() {
                let first = (&plus[n] - &minus[n]) * c(0.5 / d, 0.0);
                let second = (&plus[n] - &p0[n] * c(2.0, 0.0) + &minus[n]) * c(1.0 / (d * d), 0.0);
                d1[i] = d1[i].max(first.norm());
                d2[i] = d2[i].max(second.norm());
            }
        }
    }
    let ratio_of = |x: f64, y: f64| if y > 0.0 { x / y } else if x > 0.0 { f64::INFINITY } else { 1.0 };
    let r1 = ratio_of(d1[0], d1[1]);
    let r2 = ratio_of(d2[0], d2[1]);
    let worst = if (r1 - 1.0).abs() > (r2 - 1.0).abs() { r1 } else { r2 };
    let n = h.dim();
    let gap_ok = n < 2 || min_gap > tol.gap_floor;
    Ok(PremiseReport {
        hermiticity_defect: herm,
        min_gap: if n < 2 { f64::INFINITY } else { min_gap },
        projector_derivative_norm: d1[1],
        projector_second_derivative_norm: d2[1],
        refinement_ratio: worst,
        passed: herm <= 1e-10 && gap_ok && (0.5..=2.0).contains(&worst),
    })
}

/// `⟨a|b⟩` between columns, exposed for tests and diagnostics.
pub fn column_overlap(a: &ComplexMatrix, b: &ComplexMatrix, n: usize) -> C64 {
    braket(&a.column(n).into_owned(), &b.column(n).into_owned())
}
