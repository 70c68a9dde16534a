//! Dense symmetric linear algebra: Cholesky factorization, rank-one
//! up/downdates, triangular solves, log-determinant, and a symmetric
//! eigensolver. Matrices here are at most a few thousand square, so
//! everything is straightforward dense code over row-major storage.

use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix not positive definite (pivot {pivot} at column {col})")]
    NotPositiveDefinite { col: usize, pivot: f64 },
    #[error("rank-one downdate breaks positive definiteness at column {0}")]
    DowndateFailure(usize),
    #[error("matrix not symmetric (|a_ij - a_ji| = {0})")]
    NotSymmetric(f64),
    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ` equal to the factored
/// matrix. The strict upper triangle is kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    l: Array2<f64>,
}

/// In-place factorization over a row-major flat buffer. On success the lower
/// triangle holds L; the strict upper triangle is zeroed. Row-dot form so the
/// inner reductions run over contiguous slices.
pub(crate) fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<(), LinalgError> {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let row_j = j * n;
        let d = a[row_j + j]
            - a[row_j..row_j + j]
                .iter()
                .map(|v| v * v)
                .sum::<f64>();
        if !(d > 0.0) || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { col: j, pivot: d });
        }
        let ljj = d.sqrt();
        a[row_j + j] = ljj;
        let inv = 1.0 / ljj;
        for i in (j + 1)..n {
            let row_i = i * n;
            let dot: f64 = a[row_i..row_i + j]
                .iter()
                .zip(&a[row_j..row_j + j])
                .map(|(x, y)| x * y)
                .sum();
            a[row_i + j] = (a[row_i + j] - dot) * inv;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// Forward substitution on flat row-major storage: `x ← L⁻¹ x`.
pub(crate) fn solve_lower_raw(l: &[f64], n: usize, x: &mut [f64]) {
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * n + k] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
}

/// Back substitution on flat row-major storage: `x ← L⁻ᵀ x`.
pub(crate) fn solve_lower_t_raw(l: &[f64], n: usize, x: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
}

pub(crate) fn logdet_raw(l: &[f64], n: usize) -> f64 {
    2.0 * (0..n).map(|i| l[i * n + i].ln()).sum::<f64>()
}

/// Inverse of a lower-triangular matrix into `out` (flat row-major).
pub(crate) fn inv_lower_raw(l: &[f64], n: usize, out: &mut [f64]) {
    out.fill(0.0);
    for j in 0..n {
        out[j * n + j] = 1.0 / l[j * n + j];
        for i in (j + 1)..n {
            let mut s = 0.0;
            for k in j..i {
                s += l[i * n + k] * out[k * n + j];
            }
            out[i * n + j] = -s / l[i * n + i];
        }
    }
}

/// Factor a symmetric positive-definite matrix.
///
/// Fails with `NotPositiveDefinite` when a pivot is non-positive; callers
/// decide whether to add jitter or reject the input.
pub fn cholesky(a: &Array2<f64>) -> Result<CholeskyFactor, LinalgError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut buf: Vec<f64> = a.iter().copied().collect();
    cholesky_in_place(&mut buf, n)?;
    Ok(CholeskyFactor {
        l: Array2::from_shape_vec((n, n), buf).expect("shape"),
    })
}

/// Direction of a rank-one modification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateSign {
    /// `L·Lᵀ + v·vᵀ`
    Update,
    /// `L·Lᵀ − v·vᵀ`
    Downdate,
}

impl CholeskyFactor {
    pub(crate) fn from_lower_unchecked(l: Array2<f64>) -> Self {
        Self { l }
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    pub fn lower(&self) -> &Array2<f64> {
        &self.l
    }

    /// Factor of `L·Lᵀ ± v·vᵀ` via sequential plane rotations, O(n²).
    ///
    /// Column j uses the rotation determined by (L_jj, v_j) — circular for
    /// updates, hyperbolic for downdates (cf. LINPACK dchud/dchdd). A
    /// downdate fails when the modified matrix stops being positive definite.
    pub fn rank_one_update(&self, v: &[f64], sign: UpdateSign) -> Result<Self, LinalgError> {
        let mut out = self.clone();
        out.rank_one_update_in_place(v, sign)?;
        Ok(out)
    }

    pub(crate) fn rank_one_update_in_place(
        &mut self,
        v: &[f64],
        sign: UpdateSign,
    ) -> Result<(), LinalgError> {
        let n = self.n();
        assert_eq!(v.len(), n, "vector length must match factor dimension");
        let s = match sign {
            UpdateSign::Update => 1.0,
            UpdateSign::Downdate => -1.0,
        };
        let l = self.l.as_slice_mut().expect("contiguous");
        let work = v.to_vec();
        // Row-oriented sweep: rotations are determined at each diagonal and
        // replayed across later rows, touching each row contiguously.
        let mut rc = vec![0.0; n]; // cosine per rotation
        let mut rs = vec![0.0; n]; // scaled sine per rotation
        for i in 0..n {
            let mut wi = work[i];
            let row = &mut l[i * n..i * n + i + 1];
            for j in 0..i {
                let lij = (row[j] + s * rs[j] * wi) / rc[j];
                wi = rc[j] * wi - rs[j] * lij;
                row[j] = lij;
            }
            let lii = row[i];
            let arg = lii * lii + s * wi * wi;
            if !(arg > 0.0) || !arg.is_finite() {
                return Err(LinalgError::DowndateFailure(i));
            }
            let r = arg.sqrt();
            rc[i] = r / lii;
            rs[i] = wi / lii;
            row[i] = r;
        }
        Ok(())
    }

    /// Forward substitution: solve `L x = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(b.len(), n, "rhs length must match factor dimension");
        let mut x = b.to_vec();
        solve_lower_raw(self.l.as_slice().expect("contiguous"), n, &mut x);
        x
    }

    /// Back substitution: solve `Lᵀ x = b`.
    pub fn solve_lower_t(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(b.len(), n, "rhs length must match factor dimension");
        let mut x = b.to_vec();
        solve_lower_t_raw(self.l.as_slice().expect("contiguous"), n, &mut x);
        x
    }

    /// Solve `L·Lᵀ x = b` by forward then back substitution.
    pub fn solve_system(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(b.len(), n, "rhs length must match factor dimension");
        let l = self.l.as_slice().expect("contiguous");
        let mut x = b.to_vec();
        solve_lower_raw(l, n, &mut x);
        solve_lower_t_raw(l, n, &mut x);
        x
    }

    /// `log det(L·Lᵀ) = 2·Σ log L_ii`.
    pub fn logdet(&self) -> f64 {
        logdet_raw(self.l.as_slice().expect("contiguous"), self.n())
    }

    /// Explicit inverse of the lower-triangular factor.
    pub fn inv_lower(&self) -> Array2<f64> {
        let n = self.n();
        let mut m = vec![0.0; n * n];
        inv_lower_raw(self.l.as_slice().expect("contiguous"), n, &mut m);
        Array2::from_shape_vec((n, n), m).expect("shape")
    }

    /// Diagonal of `(L·Lᵀ)⁻¹`, via column norms of `L⁻¹`.
    pub fn inv_diagonal(&self) -> Vec<f64> {
        let n = self.n();
        let m = self.inv_lower();
        let ms = m.as_slice().expect("contiguous");
        let mut d = vec![0.0; n];
        for i in 0..n {
            for k in i..n {
                let v = ms[k * n + i];
                d[i] += v * v;
            }
        }
        d
    }

    /// Reconstruct `L·Lᵀ`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let n = self.n();
        let l = self.l.as_slice().expect("contiguous");
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..=j {
                    s += l[i * n + k] * l[j * n + k];
                }
                a[[i, j]] = s;
                a[[j, i]] = s;
            }
        }
        a
    }
}

/// Full eigendecomposition of a symmetric matrix, sorted by descending |λ|.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Eigenvalues ordered by decreasing absolute value.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, same order as `values`.
    pub vectors: Array2<f64>,
}

const QL_MAX_ITER: usize = 50;

/// Symmetric eigensolver: Householder reduction to tridiagonal form with
/// accumulated transformations, then implicit-shift QL iteration. The input
/// is symmetrized internally when the asymmetry is below 1e−10 of its scale,
/// rejected otherwise.
pub fn sym_eigen(a: &Array2<f64>) -> Result<EigenPairs, LinalgError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let scale_in = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = (a[[i, j]] - a[[j, i]]).abs();
            if d > 1e-10 * scale_in {
                return Err(LinalgError::NotSymmetric(d));
            }
            z[i * n + j] = 0.5 * (a[[i, j]] + a[[j, i]]);
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut z, n, &mut d, &mut e);
    tql2(&mut z, n, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].abs().total_cmp(&d[i].abs()));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[[row, col]] = z[row * n + src];
        }
    }
    Ok(EigenPairs { values, vectors })
}

/// Householder reduction of a symmetric matrix to tridiagonal form,
/// accumulating the orthogonal transformation in `z` (EISPACK tred2).
fn tred2(z: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| z[i * n + k].abs()).sum();
            if scale == 0.0 {
                e[i] = z[i * n + l];
            } else {
                for k in 0..=l {
                    z[i * n + k] /= scale;
                    h += z[i * n + k] * z[i * n + k];
                }
                let f = z[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[i * n + l] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    z[j * n + i] = z[i * n + j] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z[j * n + k] * z[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g += z[k * n + j] * z[i * n + k];
                    }
                    e[j] = g / h;
                    f_acc += e[j] * z[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = z[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[j * n + k] -= f * e[k] + g * z[i * n + k];
                    }
                }
            }
        } else {
            e[i] = z[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z[i * n + k] * z[k * n + j];
                }
                for k in 0..i {
                    z[k * n + j] -= g * z[k * n + i];
                }
            }
        }
        d[i] = z[i * n + i];
        z[i * n + i] = 1.0;
        for j in 0..i {
            z[j * n + i] = 0.0;
            z[i * n + j] = 0.0;
        }
    }
}

/// Implicit-shift QL iteration on a tridiagonal matrix, rotating the
/// accumulated transformation into eigenvectors (EISPACK tql2).
fn tql2(z: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) -> Result<(), LinalgError> {
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(LinalgError::NoConvergence(QL_MAX_ITER));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
