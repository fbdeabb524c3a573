//! Vector fields on product charts `ℝᵃ × H × ℝᵇ` and their Lie brackets.
//!
//! Tangent vectors are written in the global frame made of the coordinate
//! fields `∂ᵢ` and the right-invariant fields `X^R(h) = X·h`, laid out as
//! `(v_left, X, v_right)`. In this frame
//! `[X^R, Y^R] = −[X, Y]^R` and every other frame bracket vanishes, so the
//! bracket of two fields only needs directional derivatives of their
//! coefficients, which are taken by central differences along
//! `t ↦ (x + t·v, exp(t·X)·h)`.

use crate::error::{Error, Result};
use crate::liegroups::GroupRef;
use crate::numkit::{self, Mat, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    /// Chart coordinates, left block followed by right block.
    pub x: Vector,
    pub h: Mat,
}

#[derive(Debug, Clone)]
pub struct ProductChart {
    pub group: GroupRef,
    pub left: usize,
    pub right: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ProductChart {
    pub fn new(group: &GroupRef, left: usize, right: usize, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != left + right || upper.len() != left + right {
            return Err(Error::InvalidInput("chart bounds do not match chart dimension".into()));
        }
        Ok(Self {
            group: group.clone(),
            left,
            right,
            lower,
            upper,
        })
    }

    /// Total tangent dimension `a + dim 𝔥 + b`.
    pub fn dim(&self) -> usize {
        self.left + self.group.dim() + self.right
    }

    pub fn chart_part(&self, w: &Vector) -> Vector {
        let k = self.group.dim();
        let mut out = Vector::zeros(self.left + self.right);
        out.rows_mut(0, self.left).copy_from(&w.rows(0, self.left));
        out.rows_mut(self.left, self.right).copy_from(&w.rows(self.left + k, self.right));
        out
    }

    pub fn algebra_part(&self, w: &Vector) -> Vector {
        w.rows(self.left, self.group.dim()).into_owned()
    }

    /// Point reached at time `t` along the curve with initial velocity `w`.
    pub fn flow(&self, p: &ChartPoint, w: &Vector, t: f64) -> Result<ChartPoint> {
        let x = &p.x + self.chart_part(w) * t;
        for (i, xi) in x.iter().enumerate() {
            if *xi <= self.lower[i] || *xi >= self.upper[i] {
                return Err(Error::Stencil(format!(
                    "coordinate {i} = {xi} outside ({}, {})",
                    self.lower[i], self.upper[i]
                )));
            }
        }
        let step = self.group.exp_coords(&(self.algebra_part(w) * t))?;
        Ok(ChartPoint { x, h: step * &p.h })
    }

    /// Bracket of two constant fields in the frame: `(0, −[X₁, X₂], 0)`.
    pub fn frame_bracket(&self, w1: &Vector, w2: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim());
        let b = self.group.bracket_coords(&self.algebra_part(w1), &self.algebra_part(w2));
        out.rows_mut(self.left, self.group.dim()).copy_from(&(-b));
        out
    }

    /// Derivative of a matrix-valued function along the curve through `p`
    /// with velocity `w`.
    pub fn directional<F>(&self, f: &F, p: &ChartPoint, w: &Vector, step: f64) -> Result<Mat>
    where
        F: Fn(&ChartPoint) -> Result<Mat>,
    {
        let plus = f(&self.flow(p, w, step)?)?;
        let minus = f(&self.flow(p, w, -step)?)?;
        Ok((plus - minus) / (2.0 * step))
    }

    /// All pairwise brackets of the fields given as columns of `fields`.
    ///
    /// Entry `(i, j)` of the result (for `i < j`, row-major over pairs) is
    /// `[Yᵢ, Yⱼ](p)`.
    pub fn pairwise_brackets<F>(&self, fields: &F, p: &ChartPoint, step: f64) -> Result<Vec<((usize, usize), Vector)>>
    where
        F: Fn(&ChartPoint) -> Result<Mat>,
    {
        let y = fields(p)?;
        let k = y.ncols();
        // derivs[i] = D_{Yᵢ(p)} Y
        let mut derivs = Vec::with_capacity(k);
        for i in 0..k {
            let yi = y.column(i).into_owned();
            if yi.norm() == 0.0 {
                derivs.push(Mat::zeros(y.nrows(), k));
            } else {
                derivs.push(self.directional(fields, p, &yi, step)?);
            }
        }
        let mut out = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                let yi = y.column(i).into_owned();
                let yj = y.column(j).into_owned();
                let b = derivs[i].column(j) - derivs[j].column(i) + self.frame_bracket(&yi, &yj);
                out.push(((i, j), b));
            }
        }
        Ok(out)
    }

    /// Largest distance from `ker C(p)` of the brackets of the projected
    /// frame `p ↦ I − C(p)⁺C(p)`; zero iff the kernel distribution is
    /// involutive at `p` (assuming constant rank nearby).
    pub fn involutivity_residual<F>(&self, constraint: &F, p: &ChartPoint, step: f64, rank_rel_tol: f64) -> Result<f64>
    where
        F: Fn(&ChartPoint) -> Result<Mat>,
    {
        let n = self.dim();
        let projector = |q: &ChartPoint| -> Result<Mat> {
            let c = constraint(q)?;
            Ok(Mat::identity(n, n) - numkit::pseudo_inverse(&c, rank_rel_tol) * c)
        };
        let c = constraint(p)?;
        let off_kernel = numkit::pseudo_inverse(&c, rank_rel_tol) * &c;
        let mut worst: f64 = 0.0;
        for (_, b) in self.pairwise_brackets(&projector, p, step)? {
            worst = worst.max((&off_kernel * b).norm());
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroups::special_orthogonal;

    fn chart() -> ProductChart {
        let h = special_orthogonal(3).unwrap();
        ProductChart::new(&h, 1, 1, vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap()
    }

    fn origin() -> ChartPoint {
        ChartPoint {
            x: Vector::zeros(2),
            h: Mat::identity(3, 3),
        }
    }

    fn e(n: usize, i: usize) -> Vector {
        let mut v = Vector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn right_invariant_frame_brackets() {
        let c = chart();
        // constant coefficient fields E_x^R, E_y^R bracket to −E_z^R
        let fields = |_: &ChartPoint| -> Result<Mat> {
            let mut m = Mat::zeros(5, 2);
            m[(1, 0)] = 1.0;
            m[(2, 1)] = 1.0;
            Ok(m)
        };
        let b = c.pairwise_brackets(&fields, &origin(), 1e-5).unwrap();
        assert!((&b[0].1 + e(5, 3)).norm() < 1e-12);
    }

    #[test]
    fn coordinate_bracket_oracle() {
        // [∂₀, x₀·∂₄] = ∂₄ on the chart block
        let c = chart();
        let fields = |q: &ChartPoint| -> Result<Mat> {
            let mut m = Mat::zeros(5, 2);
            m[(0, 0)] = 1.0;
            m[(4, 1)] = q.x[0];
            Ok(m)
        };
        let b = c.pairwise_brackets(&fields, &origin(), 1e-5).unwrap();
        assert!((&b[0].1 - e(5, 4)).norm() < 1e-9);
    }

    #[test]
    fn vertical_distribution_is_involutive() {
        let c = chart();
        let constraint = |_: &ChartPoint| -> Result<Mat> {
            let mut m = Mat::zeros(2, 5);
            m[(0, 0)] = 1.0;
            m[(1, 4)] = 1.0;
            Ok(m)
        };
        assert!(c.involutivity_residual(&constraint, &origin(), 1e-5, 1e-10).unwrap() < 1e-9);
    }

    #[test]
    fn contact_distribution_is_not_involutive() {
        // ker(dz − x dy) on ℝ³ with a trivial group factor
        let h = crate::liegroups::MatrixLieGroup::new("trivial", 1, vec![], 1e-9).unwrap();
        let c = ProductChart::new(&h, 3, 0, vec![-1.0; 3], vec![1.0; 3]).unwrap();
        let constraint = |q: &ChartPoint| -> Result<Mat> { Ok(Mat::from_row_slice(1, 3, &[0.0, -q.x[0], 1.0])) };
        let p = ChartPoint {
            x: Vector::from_vec(vec![0.3, 0.1, -0.2]),
            h: Mat::identity(1, 1),
        };
        assert!(c.involutivity_residual(&constraint, &p, 1e-5, 1e-10).unwrap() > 0.1);
    }

    #[test]
    fn stencil_leaving_chart_errors() {
        let c = chart();
        let p = ChartPoint {
            x: Vector::from_vec(vec![0.999_999_99, 0.0]),
            h: Mat::identity(3, 3),
        };
        assert!(matches!(c.flow(&p, &e(5, 0), 1e-5), Err(Error::Stencil(_))));
    }
}
