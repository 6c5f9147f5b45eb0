use num_complex::Complex64 as C64;

use super::{ComplexMatrix, HERMITIAN_TOL};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Spectral decomposition of a Hermitian matrix: `m = V diag(values) V†`.
#[derive(Clone, Debug)]
pub struct Eigh {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered like `values`.
    pub vectors: ComplexMatrix,
}

impl Eigh {
    /// `V f(Λ) V†`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &l) in self.values.iter().enumerate() {
            let fl = f(l);
            if fl == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * fl;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        out.symmetrized()
    }

    /// Complex-valued counterpart of [`Eigh::map`], e.g. `exp(i·λ)`.
    pub fn map_complex(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.values.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &l) in self.values.iter().enumerate() {
            let fl = f(l);
            for i in 0..n {
                let vik = self.vectors[(i, k)] * fl;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| l)
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// The input must be Hermitian within `1e-10` (max-entry); it is symmetrized
/// before rotating. Eigenvalues come back ascending, ties in their original
/// diagonal order.
pub fn eigh(m: &ComplexMatrix) -> Result<Eigh> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigh of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let deviation = m.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let n = m.rows();
    let mut a = m.symmetrized();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    let threshold = scale * f64::EPSILON * 1e-2;

    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let b = a[(p, q)];
                    let mag = b.norm();
                    if mag <= threshold {
                        continue;
                    }
                    rotated = true;
                    rotate(&mut a, &mut v, p, q, b, mag);
                }
            }
            if !rotated {
                break;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    Ok(Eigh {
        values,
        vectors: v.select_columns(&order),
    })
}

/// One Jacobi rotation zeroing `a[p][q]`. The rotation is a phase that makes
/// the pivot real followed by the classical real symmetric rotation.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, b: C64, mag: f64) {
    let n = a.rows();
    let phase_conj = (b / mag).conj();
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let g00 = C64::new(c, 0.0);
    let g01 = C64::new(s, 0.0);
    let g10 = phase_conj * (-s);
    let g11 = phase_conj * c;

    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp * g00 + akq * g10;
        a[(k, q)] = akp * g01 + akq * g11;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = g00.conj() * apk + g10.conj() * aqk;
        a[(q, k)] = g01.conj() * apk + g11.conj() * aqk;
    }
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * g00 + vkq * g10;
        v[(k, q)] = vkp * g01 + vkq * g11;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}

/// Singular values, descending, by one-sided (Hestenes) Jacobi.
///
/// Works on columns directly, so small singular values keep absolute
/// accuracy near `eps·‖m‖` instead of the `sqrt(eps)` a Gram matrix gives.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    // Orthogonalize whichever side has fewer vectors.
    let work = if m.cols() > m.rows() {
        m.adjoint()
    } else {
        m.clone()
    };
    let ncols = work.cols();
    let mut cols: Vec<Vec<C64>> = (0..ncols).map(|j| work.column(j)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..ncols {
            for j in (i + 1)..ncols {
                let alpha: f64 = cols[i].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cols[i]
                    .iter()
                    .zip(&cols[j])
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase_conj = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(j);
                for (x, y) in left[i].iter_mut().zip(right[0].iter_mut()) {
                    let yt = *y * phase_conj;
                    let xi = *x;
                    *x = xi * c - yt * s;
                    *y = xi * s + yt * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut values: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Householder QR of a square matrix: `m = Q R` with `Q` unitary and `R`
/// upper triangular. Diagonal entries of `R` are generally complex.
pub fn householder_qr(m: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    assert!(m.is_square(), "householder_qr expects a square matrix");
    let n = m.rows();
    let mut r = m.clone();
    let mut q = ComplexMatrix::identity(n);

    for k in 0..n.saturating_sub(1) {
        let x: Vec<C64> = (k..n).map(|i| r[(i, k)]).collect();
        let norm_x = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let alpha = -phase * norm_x;
        let mut v = x;
        v[0] -= alpha;
        let norm_v = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_v == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= norm_v);

        // R <- H R on rows k..n
        for j in 0..n {
            let dot: C64 = (k..n).map(|i| v[i - k].conj() * r[(i, j)]).sum();
            for i in k..n {
                r[(i, j)] -= v[i - k] * dot * 2.0;
            }
        }
        // Q <- Q H on columns k..n
        for i in 0..n {
            let dot: C64 = (k..n).map(|j| q[(i, j)] * v[j - k]).sum();
            for j in k..n {
                q[(i, j)] -= dot * v[j - k].conj() * 2.0;
            }
        }
        for i in (k + 1)..n {
            r[(i, k)] = C64::new(0.0, 0.0);
        }
    }
    (q, r)
}
