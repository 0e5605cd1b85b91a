//! Dense complex linear algebra for small Hermitian and unitary matrices.
//!
//! Eigendecomposition is a cyclic complex Jacobi sweep. For the dimensions this
//! crate targets (2 to 16) it is accurate to a few ulps and needs no LAPACK.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

/// Numerical tolerances shared across the crate. All are overridable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative hermiticity defect accepted by [`herm_eig_with`].
    pub hermitian_rel: f64,
    /// Absolute unitarity defect accepted when a matrix is tagged unitary.
    pub unitary_abs: f64,
    /// Smallest admissible eigenvalue gap along a path.
    pub gap_floor: f64,
    /// Minimum overlap between matched eigenvectors at adjacent grid points.
    pub min_overlap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian_rel: 1e-12,
            unitary_abs: 1e-10,
            gap_floor: 1e-8,
            min_overlap: 0.9,
        }
    }
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(dim, dim)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// `‖M − M†‖_F`
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// `‖U†U − I‖_F`
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - identity(n)).norm()
}

/// `(M + M†)/2`
pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Outer product `|a⟩⟨b|`.
pub fn outer(a: &ComplexVector, b: &ComplexVector) -> ComplexMatrix {
    a * b.adjoint()
}

/// Inner product `⟨a|b⟩` (antilinear in the first slot).
pub fn braket(a: &ComplexVector, b: &ComplexVector) -> C64 {
    a.dotc(b)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermEig {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, n: usize) -> ComplexVector {
        self.vectors.column(n).into_owned()
    }

    pub fn projector(&self, n: usize) -> ComplexMatrix {
        let v = self.vector(n);
        outer(&v, &v)
    }

    /// `V Λ V†`
    pub fn reconstruct(&self) -> ComplexMatrix {
        let lambda = ComplexMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.values.iter().map(|&x| c(x, 0.0)),
        ));
        &self.vectors * lambda * self.vectors.adjoint()
    }
}

const MAX_SWEEPS: usize = 64;

pub fn herm_eig(m: &ComplexMatrix) -> Result<HermEig> {
    herm_eig_with(m, &Tolerances::default())
}

pub fn herm_eig_with(m: &ComplexMatrix, tol: &Tolerances) -> Result<HermEig> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    let scale = m.norm();
    let defect = hermiticity_defect(m);
    let allowed = tol.hermitian_rel * scale;
    if defect > allowed {
        return Err(Error::NotHermitian {
            defect,
            tolerance: allowed,
        });
    }

    let mut a = hermitize(m);
    for k in 0..n {
        a[(k, k)].im = 0.0;
    }
    let mut v = identity(n);

    let mut last_off = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= f64::EPSILON * scale || off >= last_off {
            break;
        }
        last_off = off;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, col| v[(r, order[col])]);
    Ok(HermEig { values, vectors })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                acc += a[(p, q)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// One complex Jacobi rotation annihilating `a[p, q]`.
///
/// With `a[p, q] = r e^{iφ}` the 2x2 block is `D R D†`, `D = diag(1, e^{-iφ})`
/// and `R` real symmetric, so `G = D Q` with `Q` the real Jacobi rotation.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;
    let e = phase.conj();

    // G = [[c, s], [-s e, c e]] in the (p, q) plane.
    let g_pp = c(cs, 0.0);
    let g_pq = c(sn, 0.0);
    let g_qp = -e * sn;
    let g_qq = e * cs;

    let n = a.nrows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = c(0.0, 0.0);
    a[(q, p)] = c(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}

/// `exp(−iαH) = V diag(e^{−iαλ}) V†` for Hermitian `H`.
pub fn unitary_exp(h: &ComplexMatrix, alpha: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(h)?;
    Ok(unitary_exp_from_eig(&eig, alpha))
}

pub fn unitary_exp_from_eig(eig: &HermEig, alpha: f64) -> ComplexMatrix {
    let n = eig.dim();
    let mut scaled = eig.vectors.clone();
    for (col, &lambda) in eig.values.iter().enumerate() {
        let ph = cis(-alpha * lambda);
        for r in 0..n {
            scaled[(r, col)] *= ph;
        }
    }
    scaled * eig.vectors.adjoint()
}


#[cfg(test)]
pub(crate) use tests::random_hermitian;
