//! Dense linear algebra with explicit tolerances, plus central finite
//! differences.
//!
//! Everything here works on `nalgebra` dynamic matrices. Ranks are always
//! decided relative to the largest singular value so that kernels do not
//! depend on the overall scale of the matrix they come from.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Numeric tolerances shared by every check.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Tolerance for residuals that are computed without any approximation.
    pub exact_tol: f64,
    /// Tolerance for residuals that go through finite differences.
    pub fd_tol: f64,
    /// Step used by central differences.
    pub fd_step: f64,
    /// Relative singular value cutoff for rank decisions.
    pub rank_rel_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exact_tol: 1e-9,
            fd_tol: 1e-4,
            fd_step: 1e-5,
            rank_rel_tol: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.exact_tol, self.fd_tol, self.fd_step, self.rank_rel_tol];
        if all.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "tolerances must be finite and strictly positive: {self:?}"
            )));
        }
        if self.fd_tol <= self.exact_tol {
            return Err(Error::InvalidInput(format!(
                "fd_tol ({}) must exceed exact_tol ({})",
                self.fd_tol, self.exact_tol
            )));
        }
        Ok(())
    }
}

pub fn ensure_finite(m: &Mat, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite entries")))
    }
}

/// Singular value decomposition with a complete set of right singular vectors.
///
/// Wide matrices are padded with zero rows, which leaves the kernel unchanged.
/// Returns `(singular values, V)` with singular values sorted descending and the
/// columns of `V` in the same order; ties keep the original index order.
fn full_right_svd(m: &Mat) -> (Vec<f64>, Mat) {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return (Vec::new(), Mat::zeros(0, 0));
    }
    let padded = if rows < cols {
        let mut p = Mat::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| sv[i]).collect();
    let mut v = Mat::zeros(cols, order.len());
    for (j, &i) in order.iter().enumerate() {
        v.set_column(j, &v_t.row(i).transpose());
    }
    (values, v)
}

fn rank_threshold(shape: (usize, usize), largest: f64, rel: f64) -> f64 {
    rel * shape.0.max(shape.1) as f64 * largest
}

/// Rank and kernel of `m`.
///
/// The kernel basis is ordered by ascending singular value.
pub fn rank_nullspace(m: &Mat, tol: &Tolerances) -> Result<(usize, Subspace)> {
    ensure_finite(m, "matrix")?;
    let cols = m.ncols();
    let (values, v) = full_right_svd(m);
    let largest = values.first().copied().unwrap_or(0.0);
    let cutoff = rank_threshold(m.shape(), largest, tol.rank_rel_tol);
    let rank = values.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    let mut kernel = Mat::zeros(cols, cols - rank);
    for (j, i) in (rank..cols).rev().enumerate() {
        kernel.set_column(j, &v.column(i));
    }
    Ok((rank, Subspace::from_orthonormal(kernel, tol.exact_tol)))
}

/// Orthonormal basis of the column space of `m`.
pub fn column_space(m: &Mat, tol: &Tolerances) -> Result<Subspace> {
    ensure_finite(m, "matrix")?;
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return Ok(Subspace::zero(rows, tol.exact_tol));
    }
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv = &svd.singular_values;
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    let cutoff = rank_threshold(m.shape(), largest, tol.rank_rel_tol);
    let mut idx: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > cutoff && sv[i] > 0.0).collect();
    idx.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    let mut basis = Mat::zeros(rows, idx.len());
    for (j, &i) in idx.iter().enumerate() {
        basis.set_column(j, &u.column(i));
    }
    Ok(Subspace::from_orthonormal(basis, tol.exact_tol))
}

/// Moore–Penrose pseudo-inverse with the relative rank cutoff.
pub fn pseudo_inverse(m: &Mat, rank_rel_tol: f64) -> Mat {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Mat::zeros(cols, rows);
    }
    let svd = SVD::new(m.clone(), true, true);
    let largest = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = rank_threshold(m.shape(), largest, rank_rel_tol);
    let u = svd.u.as_ref().unwrap();
    let v_t = svd.v_t.as_ref().unwrap();
    let mut out = Mat::zeros(cols, rows);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            out += v_t.row(i).transpose() * u.column(i).transpose() / s;
        }
    }
    out
}

/// A linear subspace of `ℝ^ambient_dim` stored by an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub ambient_dim: usize,
    pub basis: Mat,
    pub tol: f64,
}

impl Subspace {
    pub fn zero(ambient_dim: usize, tol: f64) -> Self {
        Self {
            ambient_dim,
            basis: Mat::zeros(ambient_dim, 0),
            tol,
        }
    }

    pub fn full(ambient_dim: usize, tol: f64) -> Self {
        Self {
            ambient_dim,
            basis: Mat::identity(ambient_dim, ambient_dim),
            tol,
        }
    }

    /// Wraps a basis already known to be orthonormal.
    pub fn from_orthonormal(basis: Mat, tol: f64) -> Self {
        Self {
            ambient_dim: basis.nrows(),
            basis,
            tol,
        }
    }

    /// Span of arbitrary columns.
    pub fn span(columns: &Mat, tol: &Tolerances) -> Result<Self> {
        column_space(columns, tol)
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> Mat {
        &self.basis * self.basis.transpose()
    }

    /// Distance from `v` to the subspace.
    pub fn distance(&self, v: &Vector) -> f64 {
        (v - &self.basis * (self.basis.transpose() * v)).norm()
    }

    fn check_ambient(&self, other: &Subspace) -> Result<()> {
        if self.ambient_dim != other.ambient_dim {
            return Err(Error::InvalidInput(format!(
                "ambient dimensions differ: {} vs {}",
                self.ambient_dim, other.ambient_dim
            )));
        }
        Ok(())
    }

    fn shared_tol(&self, other: &Subspace) -> f64 {
        self.tol.max(other.tol)
    }

    /// Largest principal angle between `self` and `other`.
    ///
    /// When the dimensions differ the angle is taken between the smaller
    /// subspace and its projection into the larger one. An empty subspace
    /// against a non-empty one is at angle `π/2`.
    pub fn max_principal_angle(&self, other: &Subspace) -> Result<f64> {
        self.check_ambient(other)?;
        let (small, large) = if self.dim() <= other.dim() {
            (self, other)
        } else {
            (other, self)
        };
        if small.dim() == 0 {
            return Ok(if large.dim() == 0 {
                0.0
            } else {
                std::f64::consts::FRAC_PI_2
            });
        }
        // sin of the largest angle is the norm of the residual of projecting
        // `small` into `large`
        let residual = &small.basis - large.projector() * &small.basis;
        let sin = residual.singular_values().iter().cloned().fold(0.0, f64::max);
        Ok(sin.clamp(0.0, 1.0).asin())
    }

    /// `(equal, max principal angle)`; equal iff the dimensions match and the
    /// angle is below the shared tolerance.
    pub fn compare(&self, other: &Subspace) -> Result<(bool, f64)> {
        let angle = self.max_principal_angle(other)?;
        let equal = self.dim() == other.dim() && angle < self.shared_tol(other);
        Ok((equal, angle))
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.check_ambient(other)?;
        let mut joined = Mat::zeros(self.ambient_dim, self.dim() + other.dim());
        joined.columns_mut(0, self.dim()).copy_from(&self.basis);
        joined.columns_mut(self.dim(), other.dim()).copy_from(&other.basis);
        let tol = self.shared_tol(other);
        orthonormal_range_abs(&joined, tol)
    }

    pub fn intersection(&self, other: &Subspace) -> Result<Subspace> {
        self.check_ambient(other)?;
        let tol = self.shared_tol(other);
        let (a, b) = (self.dim(), other.dim());
        if a == 0 || b == 0 {
            return Ok(Subspace::zero(self.ambient_dim, tol));
        }
        let mut stacked = Mat::zeros(self.ambient_dim, a + b);
        stacked.columns_mut(0, a).copy_from(&self.basis);
        stacked.columns_mut(a, b).copy_from(&(-&other.basis));
        let (values, v) = full_right_svd(&stacked);
        let mut coeffs = Vec::new();
        for (i, s) in values.iter().enumerate() {
            if *s <= tol {
                coeffs.push(v.column(i).rows(0, a).into_owned());
            }
        }
        let mut vectors = Mat::zeros(self.ambient_dim, coeffs.len());
        for (j, c) in coeffs.iter().enumerate() {
            vectors.set_column(j, &(&self.basis * c));
        }
        orthonormal_range_abs(&vectors, tol)
    }
}

fn orthonormal_range_abs(m: &Mat, tol: f64) -> Result<Subspace> {
    ensure_finite(m, "matrix")?;
    let rows = m.nrows();
    if m.ncols() == 0 {
        return Ok(Subspace::zero(rows, tol));
    }
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.unwrap();
    let sv = &svd.singular_values;
    let mut idx: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > tol).collect();
    idx.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    let mut basis = Mat::zeros(rows, idx.len());
    for (j, &i) in idx.iter().enumerate() {
        basis.set_column(j, &u.column(i));
    }
    Ok(Subspace::from_orthonormal(basis, tol))
}

fn ensure_square(m: &Mat, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} must be square, got {}×{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Matrix exponential (scaling and squaring with a Padé approximant).
pub fn matrix_exp(x: &Mat) -> Result<Mat> {
    ensure_square(x, "matrix_exp argument")?;
    ensure_finite(x, "matrix_exp argument")?;
    Ok(x.exp())
}

/// `(exp(Y), d/dt exp(Y + tZ) at t = 0)`, read off the exponential of the
/// block matrix `[[Y, Z], [0, Y]]`.
pub fn matrix_exp_with_derivative(y: &Mat, z: &Mat) -> Result<(Mat, Mat)> {
    ensure_square(y, "matrix_exp argument")?;
    if y.shape() != z.shape() {
        return Err(Error::InvalidInput("direction must match the base point shape".into()));
    }
    let n = y.nrows();
    let mut block = Mat::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(y);
    block.view_mut((n, n), (n, n)).copy_from(y);
    block.view_mut((0, n), (n, n)).copy_from(z);
    let e = matrix_exp(&block)?;
    Ok((e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, n)).into_owned()))
}

const LOG_SQRT_BUDGET: usize = 16;
const LOG_SERIES_RADIUS: f64 = 0.25;

/// Principal square root by the Denman–Beavers iteration.
fn sqrtm(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = Mat::identity(n, n);
    for _ in 0..100 {
        let y_inv = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain("square-root iteration hit a singular matrix".into()))?;
        let z_inv = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain("square-root iteration hit a singular matrix".into()))?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if !y.iter().all(|v| v.is_finite()) {
            break;
        }
        if delta <= 1e-15 * y.norm().max(1.0) {
            return Ok(y);
        }
    }
    Err(Error::Domain("square-root iteration did not converge".into()))
}

/// Principal matrix logarithm by inverse scaling and squaring.
///
/// Takes at most 16 square roots to bring the argument close to the identity,
/// then sums the series of `2·artanh((A − I)(A + I)⁻¹)`.
pub fn matrix_log(g: &Mat) -> Result<Mat> {
    ensure_square(g, "matrix_log argument")?;
    ensure_finite(g, "matrix_log argument")?;
    let n = g.nrows();
    let eye = Mat::identity(n, n);
    let mut a = g.clone();
    let mut roots = 0usize;
    while (&a - &eye).norm() >= LOG_SERIES_RADIUS {
        if roots == LOG_SQRT_BUDGET {
            return Err(Error::Domain(format!(
                "matrix is too far from the identity after {LOG_SQRT_BUDGET} square roots"
            )));
        }
        a = sqrtm(&a)?;
        roots += 1;
    }
    let plus = (&a + &eye)
        .try_inverse()
        .ok_or_else(|| Error::Domain("A + I is singular".into()))?;
    let z = (&a - &eye) * plus;
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut sum = z;
    for j in 1..400 {
        term = &term * &z2;
        let scaled = &term / (2 * j + 1) as f64;
        let size = scaled.norm();
        sum += scaled;
        if size < 1e-18 {
            break;
        }
    }
    Ok(sum * 2f64.powi(roots as i32 + 1))
}

/// Central difference of a curve `t ↦ c(t)` at `t = 0`.
pub fn fd_along<F>(curve: F, step: f64) -> Result<Mat>
where
    F: Fn(f64) -> Result<Mat>,
{
    let forward = curve(step)?;
    let backward = curve(-step)?;
    if forward.shape() != backward.shape() {
        return Err(Error::InvalidInput("curve changed output shape".into()));
    }
    Ok((forward - backward) / (2.0 * step))
}

/// Central difference `(f(x + s·d) − f(x − s·d)) / 2s`.
pub fn fd_partial<F>(f: F, x: &Vector, dir: &Vector, step: f64) -> Result<Mat>
where
    F: Fn(&Vector) -> Result<Mat>,
{
    if x.len() != dir.len() {
        return Err(Error::InvalidInput(format!(
            "point has dimension {} but direction has {}",
            x.len(),
            dir.len()
        )));
    }
    fd_along(|t| f(&(x + dir * t)), step)
}

/// Stacks the columns of `m` into one vector (column-major).
pub fn vectorize(m: &Mat) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

pub fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn rows_to_mat(rows: &[Vec<f64>]) -> Result<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidInput("ragged matrix rows".into()));
    }
    let m = Mat::from_fn(r, c, |i, j| rows[i][j]);
    ensure_finite(&m, "matrix literal")?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn rot_gen() -> Mat {
        Mat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
    }

    #[test]
    fn tolerances_validation() {
        assert!(tol().validate().is_ok());
        let bad = Tolerances {
            fd_tol: 1e-12,
            ..tol()
        };
        assert!(bad.validate().is_err());
        let neg = Tolerances {
            fd_step: -1.0,
            ..tol()
        };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn rank_of_identity_and_zero() {
        let (r, k) = rank_nullspace(&Mat::identity(2, 2), &tol()).unwrap();
        assert_eq!((r, k.dim()), (2, 0));
        let (r, k) = rank_nullspace(&Mat::zeros(2, 2), &tol()).unwrap();
        assert_eq!((r, k.dim()), (0, 2));
    }

    #[test]
    fn rank_one_kernel_direction() {
        // σ = (2, 0); right singular vector for 0 is (1, −1)/√2
        let m = Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (r, k) = rank_nullspace(&m, &tol()).unwrap();
        assert_eq!(r, 1);
        assert_eq!(k.dim(), 1);
        let v = k.basis.column(0);
        let expected = Vector::from_vec(vec![1.0, -1.0]) / 2f64.sqrt();
        let err = (v - &expected).norm().min((v + &expected).norm());
        assert!(err < 1e-12);
    }

    #[test]
    fn wide_matrix_kernel_is_complete() {
        let m = Mat::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        let (r, k) = rank_nullspace(&m, &tol()).unwrap();
        assert_eq!((r, k.dim()), (1, 2));
        assert!((&m * &k.basis).norm() < 1e-12);
    }

    #[test]
    fn non_finite_is_rejected() {
        let m = Mat::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(rank_nullspace(&m, &tol()), Err(Error::InvalidInput(_))));
    }

    fn line(v: &[f64]) -> Subspace {
        Subspace::span(&Mat::from_column_slice(v.len(), 1, v), &tol()).unwrap()
    }

    #[test]
    fn principal_angles() {
        let e1 = line(&[1.0, 0.0]);
        let e2 = line(&[0.0, 1.0]);
        let diag = line(&[1.0, 1.0]);
        let (eq, a) = e1.compare(&e1).unwrap();
        assert!(eq && a.abs() < 1e-12);
        let (eq, a) = e1.compare(&e2).unwrap();
        assert!(!eq && (a - FRAC_PI_2).abs() < 1e-12);
        // arccos(⟨e1, (e1+e2)/√2⟩) = π/4
        let (eq, a) = e1.compare(&diag).unwrap();
        assert!(!eq && (a - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn compare_rejects_ambient_mismatch() {
        let a = line(&[1.0, 0.0]);
        let b = line(&[1.0, 0.0, 0.0]);
        assert!(a.compare(&b).is_err());
    }

    #[test]
    fn sum_and_intersection() {
        let xy = Subspace::span(&Mat::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]), &tol()).unwrap();
        let yz = Subspace::span(&Mat::from_column_slice(3, 2, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]), &tol()).unwrap();
        assert_eq!(xy.sum(&yz).unwrap().dim(), 3);
        let meet = xy.intersection(&yz).unwrap();
        assert_eq!(meet.dim(), 1);
        assert!(meet.compare(&line(&[0.0, 1.0, 0.0])).unwrap().0);
    }

    #[test]
    fn exp_examples() {
        assert_eq!(matrix_exp(&Mat::zeros(3, 3)).unwrap(), Mat::identity(3, 3));
        let r = matrix_exp(&(rot_gen() * FRAC_PI_2)).unwrap();
        assert!((r - rot_gen()).norm() < 1e-12);
        let mut e12 = Mat::zeros(2, 2);
        e12[(0, 1)] = 1.0;
        let expected = Mat::identity(2, 2) + &e12;
        assert!((matrix_exp(&e12).unwrap() - expected).norm() < 1e-14);
        assert!(matrix_exp(&Mat::zeros(2, 3)).is_err());
    }

    #[test]
    fn log_examples() {
        assert!(matrix_log(&Mat::identity(2, 2)).unwrap().norm() < 1e-15);
        let g = matrix_exp(&(rot_gen() * 0.1)).unwrap();
        assert!((matrix_log(&g).unwrap() - rot_gen() * 0.1).norm() < 1e-12);
        let minus = -Mat::identity(2, 2);
        assert!(matches!(matrix_log(&minus), Err(Error::Domain(_))));
        let reflection = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(matrix_log(&reflection), Err(Error::Domain(_))));
    }

    #[test]
    fn exp_derivative_matches_fd() {
        let y = Mat::from_row_slice(2, 2, &[0.1, -0.4, 0.3, 0.2]);
        let z = Mat::from_row_slice(2, 2, &[0.0, 1.0, -0.5, 0.7]);
        let (e, d) = matrix_exp_with_derivative(&y, &z).unwrap();
        assert!((e - matrix_exp(&y).unwrap()).norm() < 1e-14);
        let fd = fd_along(|t| matrix_exp(&(&y + &z * t)), 1e-5).unwrap();
        assert!((d - fd).norm() < 1e-9);
    }

    #[test]
    fn log_far_rotation() {
        let x = rot_gen() * (0.9 * PI);
        let g = matrix_exp(&x).unwrap();
        assert!((matrix_log(&g).unwrap() - x).norm() < 1e-9);
    }

    #[test]
    fn fd_examples() {
        let x = Vector::from_vec(vec![1.0]);
        let d = Vector::from_vec(vec![1.0]);
        let sq = |p: &Vector| Ok(Mat::from_element(1, 1, p[0] * p[0]));
        assert!((fd_partial(sq, &x, &d, 1e-5).unwrap()[(0, 0)] - 2.0).abs() < 1e-9);
        let c = |_: &Vector| Ok(Mat::from_element(1, 1, 7.0));
        assert_eq!(fd_partial(c, &x, &d, 1e-5).unwrap()[(0, 0)], 0.0);
        let xy = |p: &Vector| Ok(Mat::from_element(1, 1, p[0] * p[1]));
        let at = Vector::from_vec(vec![2.0, 3.0]);
        let ex = Vector::from_vec(vec![1.0, 0.0]);
        assert!((fd_partial(xy, &at, &ex, 1e-5).unwrap()[(0, 0)] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn fd_propagates_callback_failure() {
        let x = Vector::from_vec(vec![0.0]);
        let failing = |_: &Vector| Err(Error::Domain("boom".into()));
        assert!(fd_partial(failing, &x, &x.clone(), 1e-5).is_err());
    }

    #[test]
    fn pinv_solves_least_squares() {
        let m = Mat::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let p = pseudo_inverse(&m, 1e-10);
        assert!((&p * &m - Mat::identity(2, 2)).norm() < 1e-12);
    }
}
