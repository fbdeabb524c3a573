//! Matrix Lie groups presented by a basis of their Lie algebra.
//!
//! A group is never described by defining equations. Membership of a matrix
//! in the algebra is decided by least squares against the basis with a
//! residual gate, which also catches computations that silently leave a
//! subalgebra.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numkit::{self, Mat, Tolerances, Vector};

pub type GroupRef = Arc<MatrixLieGroup>;

pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

pub struct MatrixLieGroup {
    name: String,
    n: usize,
    basis: Vec<Mat>,
    membership_tol: f64,
    /// Left inverse of the vectorized basis, `dim × n²`.
    coord_map: Mat,
    /// Matrices of `ad(b_i)` in basis coordinates.
    ad: Vec<Mat>,
}

impl fmt::Debug for MatrixLieGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixLieGroup")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("dim", &self.basis.len())
            .finish()
    }
}

impl MatrixLieGroup {
    /// Builds a group from an algebra basis inside `gl(n)`.
    ///
    /// Fails if the basis is dependent or its span is not closed under the
    /// commutator.
    pub fn new(name: impl Into<String>, n: usize, basis: Vec<Mat>, membership_tol: f64) -> Result<GroupRef> {
        let name = name.into();
        if basis.iter().any(|b| b.shape() != (n, n)) {
            return Err(Error::InvalidInput(format!("{name}: every basis element must be {n}×{n}")));
        }
        for b in &basis {
            numkit::ensure_finite(b, "algebra basis")?;
        }
        let k = basis.len();
        let mut design = Mat::zeros(n * n, k);
        for (j, b) in basis.iter().enumerate() {
            design.set_column(j, &numkit::vectorize(b));
        }
        let (rank, _) = numkit::rank_nullspace(&design, &Tolerances::default())?;
        if rank != k {
            return Err(Error::InvalidInput(format!(
                "{name}: algebra basis is linearly dependent (rank {rank} < {k})"
            )));
        }
        let coord_map = numkit::pseudo_inverse(&design, 1e-12);
        let mut group = MatrixLieGroup {
            name,
            n,
            basis,
            membership_tol,
            coord_map,
            ad: Vec::new(),
        };
        let mut ad = Vec::with_capacity(k);
        for i in 0..k {
            let mut m = Mat::zeros(k, k);
            for j in 0..k {
                let c = commutator(&group.basis[i], &group.basis[j]);
                m.set_column(j, &group.coords_of(&c)?);
            }
            ad.push(m);
        }
        group.ad = ad;
        Ok(Arc::new(group))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Size `n` of the matrices.
    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    /// Dimension of the Lie algebra.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Mat] {
        &self.basis
    }

    pub fn membership_tol(&self) -> f64 {
        self.membership_tol
    }

    pub fn identity(&self) -> Mat {
        Mat::identity(self.n, self.n)
    }

    /// Least-squares coordinates of `x` and the residual of the fit.
    pub fn fit_coords(&self, x: &Mat) -> (Vector, f64) {
        let v = numkit::vectorize(x);
        let c = &self.coord_map * &v;
        let residual = (&v - self.design_apply(&c)).norm();
        (c, residual)
    }

    fn design_apply(&self, c: &Vector) -> Vector {
        numkit::vectorize(&self.matrix_of(c))
    }

    fn gate(&self, x: &Mat) -> f64 {
        self.membership_tol * x.norm().max(1.0)
    }

    /// Coordinates of `x`; errors if `x` is not in the span of the basis.
    pub fn coords_of(&self, x: &Mat) -> Result<Vector> {
        if x.shape() != (self.n, self.n) {
            return Err(Error::InvalidInput(format!(
                "{}: expected a {}×{} matrix",
                self.name, self.n, self.n
            )));
        }
        let (c, residual) = self.fit_coords(x);
        let tol = self.gate(x);
        if residual > tol {
            return Err(Error::ClosureViolation { residual, tol });
        }
        Ok(c)
    }

    pub fn matrix_of(&self, coords: &Vector) -> Mat {
        let mut m = Mat::zeros(self.n, self.n);
        for (c, b) in coords.iter().zip(&self.basis) {
            m += b * *c;
        }
        m
    }

    /// Matrix of `ad(x)` acting on coordinates.
    pub fn ad_matrix(&self, x: &Vector) -> Mat {
        let k = self.dim();
        let mut m = Mat::zeros(k, k);
        for (c, a) in x.iter().zip(&self.ad) {
            m += a * *c;
        }
        m
    }

    /// Bracket of two coordinate vectors through the structure constants.
    pub fn bracket_coords(&self, x: &Vector, y: &Vector) -> Vector {
        self.ad_matrix(x) * y
    }

    /// Matrix of `Ad_g` on coordinates, with `g` given by its matrix.
    pub fn adjoint_matrix(&self, g: &Mat) -> Result<Mat> {
        let g_inv = invert(g)?;
        let k = self.dim();
        let mut m = Mat::zeros(k, k);
        for (j, b) in self.basis.iter().enumerate() {
            m.set_column(j, &self.coords_of(&(g * b * &g_inv))?);
        }
        Ok(m)
    }

    /// Exponential of a coordinate vector.
    pub fn exp_coords(&self, x: &Vector) -> Result<Mat> {
        numkit::matrix_exp(&self.matrix_of(x))
    }
}

pub fn commutator(a: &Mat, b: &Mat) -> Mat {
    a * b - b * a
}

pub(crate) fn invert(g: &Mat) -> Result<Mat> {
    g.clone()
        .try_inverse()
        .filter(|inv| inv.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::InvalidInput("matrix is not invertible".into()))
}

/// An invertible matrix regarded as an element of a group.
#[derive(Debug, Clone)]
pub struct GroupElement {
    pub group: GroupRef,
    pub value: Mat,
}

impl GroupElement {
    pub fn new(group: &GroupRef, value: Mat) -> Result<Self> {
        let n = group.ambient_dim();
        if value.shape() != (n, n) {
            return Err(Error::InvalidInput(format!("{}: element must be {n}×{n}", group.name)));
        }
        numkit::ensure_finite(&value, "group element")?;
        invert(&value)?;
        Ok(Self {
            group: group.clone(),
            value,
        })
    }

    pub fn identity(group: &GroupRef) -> Self {
        Self {
            group: group.clone(),
            value: group.identity(),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self {
            group: self.group.clone(),
            value: invert(&self.value)?,
        })
    }

    pub fn compose(&self, other: &GroupElement) -> Result<Self> {
        same_group(&self.group, &other.group)?;
        Ok(Self {
            group: self.group.clone(),
            value: &self.value * &other.value,
        })
    }
}

/// An element of the Lie algebra, kept both as coordinates and as a matrix.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    pub group: GroupRef,
    pub coords: Vector,
    pub value: Mat,
}

impl AlgebraElement {
    pub fn from_coords(group: &GroupRef, coords: Vector) -> Result<Self> {
        if coords.len() != group.dim() {
            return Err(Error::InvalidInput(format!(
                "{}: expected {} coordinates, got {}",
                group.name,
                group.dim(),
                coords.len()
            )));
        }
        Ok(Self {
            group: group.clone(),
            value: group.matrix_of(&coords),
            coords,
        })
    }

    pub fn from_matrix(group: &GroupRef, value: Mat) -> Result<Self> {
        let coords = group.coords_of(&value)?;
        Ok(Self {
            group: group.clone(),
            coords,
            value,
        })
    }

    pub fn basis(group: &GroupRef, i: usize) -> Self {
        let mut c = Vector::zeros(group.dim());
        c[i] = 1.0;
        Self::from_coords(group, c).expect("coordinate length matches")
    }

    pub fn zero(group: &GroupRef) -> Self {
        Self::from_coords(group, Vector::zeros(group.dim())).expect("coordinate length matches")
    }
}

fn same_group(a: &GroupRef, b: &GroupRef) -> Result<()> {
    if Arc::ptr_eq(a, b) || (a.name == b.name && a.n == b.n && a.basis == b.basis) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("elements of different groups: {} vs {}", a.name, b.name)))
    }
}

/// `[x, y] = xy − yx`, with coordinates recovered by least squares.
pub fn bracket(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    same_group(&x.group, &y.group)?;
    AlgebraElement::from_matrix(&x.group, commutator(&x.value, &y.value))
}

/// `Ad_g x = g x g⁻¹`.
pub fn adjoint(g: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement> {
    same_group(&g.group, &x.group)?;
    let g_inv = invert(&g.value)?;
    AlgebraElement::from_matrix(&g.group, &g.value * &x.value * g_inv)
}

/// Left Maurer–Cartan form: `v ∈ T_gG ↦ g⁻¹v ∈ 𝔤`.
pub fn maurer_cartan(g: &GroupElement, v: &Mat) -> Result<AlgebraElement> {
    let group = &g.group;
    let g_inv = invert(&g.value)?;
    let x = g_inv * v;
    match group.coords_of(&x) {
        Ok(coords) => AlgebraElement::from_coords(group, coords),
        Err(Error::ClosureViolation { residual, tol }) => Err(Error::InvalidTangent { residual, tol }),
        Err(e) => Err(e),
    }
}

pub fn group_exp(x: &AlgebraElement) -> Result<GroupElement> {
    GroupElement::new(&x.group, numkit::matrix_exp(&x.value)?)
}

/// Principal logarithm; fails outside the domain of the matrix logarithm and
/// when the logarithm leaves the algebra.
pub fn group_log(g: &GroupElement) -> Result<AlgebraElement> {
    let log = numkit::matrix_log(&g.value)?;
    AlgebraElement::from_matrix(&g.group, log)
}

/// An embedding `H ⊆ G` that places `H`'s matrices in a diagonal block of
/// `G`'s matrices, with the identity elsewhere.
#[derive(Debug, Clone)]
pub struct SubgroupInclusion {
    pub sub: GroupRef,
    pub ambient: GroupRef,
    /// Coordinates of the embedded basis of `𝔥` in the basis of `𝔤`,
    /// `dim 𝔤 × dim 𝔥`.
    pub algebra_injection: Mat,
    pub block_offset: usize,
}

impl SubgroupInclusion {
    pub fn new(sub: &GroupRef, ambient: &GroupRef, block_offset: usize) -> Result<Self> {
        if block_offset + sub.ambient_dim() > ambient.ambient_dim() {
            return Err(Error::InvalidInput(format!(
                "{} does not fit in {} at offset {block_offset}",
                sub.name, ambient.name
            )));
        }
        let mut inc = SubgroupInclusion {
            sub: sub.clone(),
            ambient: ambient.clone(),
            algebra_injection: Mat::zeros(ambient.dim(), sub.dim()),
            block_offset,
        };
        for (j, b) in sub.basis().iter().enumerate() {
            let c = ambient.coords_of(&inc.embed_algebra(b))?;
            inc.algebra_injection.set_column(j, &c);
        }
        let tol = Tolerances::default();
        let (rank, _) = numkit::rank_nullspace(&inc.algebra_injection, &tol)?;
        if rank != sub.dim() {
            return Err(Error::InvalidInput("algebra injection is not injective".into()));
        }
        let residual = subalgebra_closure_residual(ambient, &inc.algebra_injection);
        if residual > ambient.membership_tol() {
            return Err(Error::ClosureViolation {
                residual,
                tol: ambient.membership_tol(),
            });
        }
        Ok(inc)
    }

    pub fn embed_algebra(&self, x: &Mat) -> Mat {
        let n = self.ambient.ambient_dim();
        let mut out = Mat::zeros(n, n);
        let k = self.sub.ambient_dim();
        out.view_mut((self.block_offset, self.block_offset), (k, k)).copy_from(x);
        out
    }

    pub fn embed_group(&self, h: &Mat) -> Mat {
        let n = self.ambient.ambient_dim();
        let mut out = Mat::identity(n, n);
        let k = self.sub.ambient_dim();
        out.view_mut((self.block_offset, self.block_offset), (k, k)).copy_from(h);
        out
    }
}

/// Largest distance of a bracket of two columns of `h_coords` from their span.
pub fn subalgebra_closure_residual(algebra: &MatrixLieGroup, h_coords: &Mat) -> f64 {
    let tol = Tolerances::default();
    let span = match numkit::Subspace::span(h_coords, &tol) {
        Ok(s) => s,
        Err(_) => return f64::INFINITY,
    };
    let mut worst: f64 = 0.0;
    for i in 0..h_coords.ncols() {
        for j in (i + 1)..h_coords.ncols() {
            let b = algebra.bracket_coords(&h_coords.column(i).into_owned(), &h_coords.column(j).into_owned());
            worst = worst.max(span.distance(&b));
        }
    }
    worst
}

fn unit(n: usize, i: usize, j: usize) -> Mat {
    let mut m = Mat::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

/// `𝔰𝔬(n)` with basis `E_ji − E_ij` for `i < j`; for `n = 3` the basis is the
/// standard `(E_x, E_y, E_z)` with `[E_x, E_y] = E_z`.
pub fn special_orthogonal(n: usize) -> Result<GroupRef> {
    MatrixLieGroup::new(format!("SO({n})"), n, so_basis(n), DEFAULT_MEMBERSHIP_TOL)
}

/// Same algebra as [`special_orthogonal`]; elements may be taken from either
/// component, but the exponential only reaches the identity component.
pub fn orthogonal(n: usize) -> Result<GroupRef> {
    MatrixLieGroup::new(format!("O({n})"), n, so_basis(n), DEFAULT_MEMBERSHIP_TOL)
}

fn so_basis(n: usize) -> Vec<Mat> {
    if n == 3 {
        return vec![
            unit(3, 2, 1) - unit(3, 1, 2),
            unit(3, 0, 2) - unit(3, 2, 0),
            unit(3, 1, 0) - unit(3, 0, 1),
        ];
    }
    let mut basis = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            basis.push(unit(n, j, i) - unit(n, i, j));
        }
    }
    basis
}

/// `𝔤𝔩(n)` with basis `E_ij` in row-major order.
pub fn general_linear(n: usize) -> Result<GroupRef> {
    let basis = (0..n).flat_map(|i| (0..n).map(move |j| unit(n, i, j))).collect();
    MatrixLieGroup::new(format!("GL({n})"), n, basis, DEFAULT_MEMBERSHIP_TOL)
}

/// `𝔰𝔬(2,1)` for the form `diag(1, 1, −1)`: basis (rotation `J`, boost `K₁`,
/// boost `K₂`).
pub fn lorentz_so21() -> Result<GroupRef> {
    let basis = vec![
        unit(3, 1, 0) - unit(3, 0, 1),
        unit(3, 0, 2) + unit(3, 2, 0),
        unit(3, 1, 2) + unit(3, 2, 1),
    ];
    MatrixLieGroup::new("SO(2,1)", 3, basis, DEFAULT_MEMBERSHIP_TOL)
}

/// `H ⋉ ℝⁿ` embedded as `{[[A, t], [0, 1]]}` in `GL(n + 1)`.
///
/// The basis lists the embedded basis of `𝔥` first, then the translations
/// `E_{i,n+1}`.
pub fn build_semidirect(h: &GroupRef, translation_dim: usize) -> Result<(GroupRef, SubgroupInclusion)> {
    let n = h.ambient_dim();
    if translation_dim != n {
        return Err(Error::InvalidInput(format!(
            "{} acts on ℝ^{n}, not on ℝ^{translation_dim}",
            h.name
        )));
    }
    let mut basis = Vec::with_capacity(h.dim() + n);
    for b in h.basis() {
        let mut m = Mat::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(b);
        basis.push(m);
    }
    for i in 0..n {
        basis.push(unit(n + 1, i, n));
    }
    let g = MatrixLieGroup::new(format!("{}⋉R{n}", h.name), n + 1, basis, h.membership_tol())?;
    let inc = SubgroupInclusion::new(h, &g, 0)?;
    Ok((g, inc))
}

pub fn special_euclidean(n: usize) -> Result<(GroupRef, SubgroupInclusion)> {
    build_semidirect(&special_orthogonal(n)?, n)
}

pub fn affine(n: usize) -> Result<(GroupRef, SubgroupInclusion)> {
    build_semidirect(&general_linear(n)?, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn se2() -> GroupRef {
        special_euclidean(2).unwrap().0
    }

    fn close(a: &Mat, b: &Mat) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn se2_brackets() {
        let g = se2();
        let (j, e1, e2) = (
            AlgebraElement::basis(&g, 0),
            AlgebraElement::basis(&g, 1),
            AlgebraElement::basis(&g, 2),
        );
        assert!(close(&bracket(&j, &e1).unwrap().value, &e2.value));
        assert!(bracket(&j, &j).unwrap().value.norm() < 1e-15);
        // translations commute
        assert!(bracket(&e1, &e2).unwrap().value.norm() < 1e-15);
    }

    #[test]
    fn so3_brackets() {
        let g = special_orthogonal(3).unwrap();
        let b: Vec<_> = (0..3).map(|i| AlgebraElement::basis(&g, i)).collect();
        assert!(close(&bracket(&b[0], &b[1]).unwrap().value, &b[2].value));
    }

    #[test]
    fn adjoint_examples() {
        let g = se2();
        let x = AlgebraElement::basis(&g, 1);
        let id = GroupElement::identity(&g);
        assert!(close(&adjoint(&id, &x).unwrap().value, &x.value));
        // conjugating E13 by a quarter-turn moves the translation to E23
        let quarter = group_exp(&AlgebraElement::from_coords(&g, Vector::from_vec(vec![FRAC_PI_2, 0.0, 0.0])).unwrap()).unwrap();
        let rotated = quarter.value.clone() * &x.value * quarter.inverse().unwrap().value;
        assert!(close(&adjoint(&quarter, &x).unwrap().value, &rotated));
        assert!(close(&rotated, &AlgebraElement::basis(&g, 2).value));
    }

    #[test]
    fn maurer_cartan_examples() {
        let g = se2();
        let id = GroupElement::identity(&g);
        let b = AlgebraElement::basis(&g, 2);
        assert!(close(&maurer_cartan(&id, &b.value).unwrap().value, &b.value));
        let x = AlgebraElement::from_coords(&g, Vector::from_vec(vec![0.3, -0.2, 0.5])).unwrap();
        let y = AlgebraElement::from_coords(&g, Vector::from_vec(vec![-0.1, 0.4, 0.2])).unwrap();
        let gx = group_exp(&x).unwrap();
        let v = &gx.value * &y.value;
        assert!((maurer_cartan(&gx, &v).unwrap().coords - &y.coords).norm() < 1e-12);
        let mut off = Mat::zeros(3, 3);
        off[(2, 0)] = 1.0;
        assert!(matches!(maurer_cartan(&gx, &(&gx.value * off)), Err(Error::InvalidTangent { .. })));
    }

    #[test]
    fn semidirect_dimensions() {
        let (se2, inc) = special_euclidean(2).unwrap();
        assert_eq!(se2.dim(), 3);
        assert_eq!(inc.algebra_injection.ncols(), 1);
        let (aff2, _) = affine(2).unwrap();
        assert_eq!(aff2.dim(), 6);
        assert!(build_semidirect(&special_orthogonal(2).unwrap(), 3).is_err());
    }

    #[test]
    fn exp_log() {
        let g = se2();
        let zero = AlgebraElement::zero(&g);
        assert!(close(&group_exp(&zero).unwrap().value, &Mat::identity(3, 3)));
        let x = AlgebraElement::from_coords(&g, Vector::from_vec(vec![0.2, 0.0, 0.0])).unwrap();
        let back = group_log(&group_exp(&x).unwrap()).unwrap();
        assert!((back.coords - x.coords).norm() < 1e-12);
    }

    #[test]
    fn log_of_reflection_fails() {
        let o2 = orthogonal(2).unwrap();
        let reflection = GroupElement::new(&o2, Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert!(matches!(group_log(&reflection), Err(Error::Domain(_))));
    }

    #[test]
    fn dependent_or_open_basis_rejected() {
        let e = unit(2, 0, 1);
        assert!(MatrixLieGroup::new("dep", 2, vec![e.clone(), e.clone() * 2.0], 1e-9).is_err());
        // span{E12, E21} is not closed: [E12, E21] = E11 − E22
        assert!(matches!(
            MatrixLieGroup::new("open", 2, vec![unit(2, 0, 1), unit(2, 1, 0)], 1e-9),
            Err(Error::ClosureViolation { .. })
        ));
    }

    #[test]
    fn so21_preserves_form() {
        let g = lorentz_so21().unwrap();
        let eta = Mat::from_diagonal(&Vector::from_vec(vec![1.0, 1.0, -1.0]));
        for b in g.basis() {
            assert!((b.transpose() * &eta + &eta * b).norm() < 1e-15);
        }
    }
}
