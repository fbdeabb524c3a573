//! The gauge groupoid `(P × P)/H` of a chart bundle, multiplicative forms on
//! it, and the Pfaffian machinery.
//!
//! An arrow is normalized as `(x, h, y)`, standing for the class of
//! `((x, h), (y, e))`, with source `y` and target `x`. Tangents are
//! `(v_x, X, v_y)` with `X` right-trivialized. In these coordinates
//!
//! - `(x, h, y)·(y, h', z) = (x, hh', z)`, `dm = (a, X₁ + Ad_h X₂, c)`,
//! - `(x, h, y)⁻¹ = (y, h⁻¹, x)`, `di = (v_y, −Ad_{h⁻¹} X, v_x)`,
//! - representations are trivialized along the section, so an arrow acts on
//!   `V` by `ρ_V(h)`.

use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::cartan::{BundlePoint, CartanBundle, CartanGauge, Coefficients, MatFn};
use crate::error::{Error, Result};
use crate::frames::{ChartPoint, ProductChart};
use crate::liegroups::invert;
use crate::numkit::{self, Mat, Subspace, Tolerances, Vector};
use crate::verify::{json_mat, json_vec, mat_json, vec_json, CheckReport, SampleStream, Sampler, Tracker};

#[derive(Debug, Clone, PartialEq)]
pub struct Arrow {
    pub x: Vector,
    pub h: Mat,
    pub y: Vector,
}

impl Arrow {
    pub fn new(x: Vector, h: Mat, y: Vector) -> Self {
        Self { x, h, y }
    }

    pub fn unit(x: &Vector, n: usize) -> Self {
        Self {
            x: x.clone(),
            h: Mat::identity(n, n),
            y: x.clone(),
        }
    }

    pub fn source(&self) -> &Vector {
        &self.y
    }

    pub fn target(&self) -> &Vector {
        &self.x
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self {
            x: self.y.clone(),
            h: invert(&self.h)?,
            y: self.x.clone(),
        })
    }

    pub fn to_json(&self) -> Value {
        json!({"x": vec_json(&self.x), "h": mat_json(&self.h), "y": vec_json(&self.y)})
    }

    pub fn from_json(v: &Value) -> Option<Self> {
        Some(Self {
            x: json_vec(v.get("x")?)?,
            h: json_mat(v.get("h")?)?,
            y: json_vec(v.get("y")?)?,
        })
    }

    fn chart_point(&self) -> ChartPoint {
        let m = self.x.len();
        let mut x = Vector::zeros(2 * m);
        x.rows_mut(0, m).copy_from(&self.x);
        x.rows_mut(m, m).copy_from(&self.y);
        ChartPoint { x, h: self.h.clone() }
    }

    fn from_chart_point(p: &ChartPoint) -> Self {
        let m = p.x.len() / 2;
        Self {
            x: p.x.rows(0, m).into_owned(),
            h: p.h.clone(),
            y: p.x.rows(m, m).into_owned(),
        }
    }
}

/// Tangent `(v_x, X, v_y)` to an arrow.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrowTangent {
    pub v_x: Vector,
    pub xi: Vector,
    pub v_y: Vector,
}

impl ArrowTangent {
    pub fn to_vector(&self) -> Vector {
        let (m, k) = (self.v_x.len(), self.xi.len());
        let mut out = Vector::zeros(2 * m + k);
        out.rows_mut(0, m).copy_from(&self.v_x);
        out.rows_mut(m, k).copy_from(&self.xi);
        out.rows_mut(m + k, m).copy_from(&self.v_y);
        out
    }

    pub fn from_vector(w: &Vector, m: usize) -> Self {
        let k = w.len() - 2 * m;
        Self {
            v_x: w.rows(0, m).into_owned(),
            xi: w.rows(m, k).into_owned(),
            v_y: w.rows(m + k, m).into_owned(),
        }
    }

    pub fn zero(m: usize, k: usize) -> Self {
        Self {
            v_x: Vector::zeros(m),
            xi: Vector::zeros(k),
            v_y: Vector::zeros(m),
        }
    }
}

/// The gauge groupoid of a chart bundle.
#[derive(Debug, Clone)]
pub struct GaugeGroupoid {
    pub bundle: CartanBundle,
}

impl GaugeGroupoid {
    pub fn new(bundle: &CartanBundle) -> Self {
        Self { bundle: bundle.clone() }
    }

    /// Base dimension.
    pub fn m(&self) -> usize {
        self.bundle.m()
    }

    pub fn dim_h(&self) -> usize {
        self.bundle.group.dim()
    }

    /// `2m + dim 𝔥`.
    pub fn dim(&self) -> usize {
        2 * self.m() + self.dim_h()
    }

    pub fn product_chart(&self) -> ProductChart {
        let mut lower = self.bundle.chart.lower.clone();
        lower.extend_from_slice(&self.bundle.chart.lower);
        let mut upper = self.bundle.chart.upper.clone();
        upper.extend_from_slice(&self.bundle.chart.upper);
        ProductChart {
            group: self.bundle.group.clone(),
            left: self.m(),
            right: self.m(),
            lower,
            upper,
        }
    }

    pub fn unit(&self, x: &Vector) -> Arrow {
        Arrow::unit(x, self.bundle.group.ambient_dim())
    }

    pub fn mult(&self, g1: &Arrow, g2: &Arrow) -> Result<Arrow> {
        if (&g1.y - &g2.x).norm() > 1e-12 * (1.0 + g1.y.norm()) {
            return Err(Error::NotComposable {
                source_point: g1.y.iter().copied().collect(),
                target_point: g2.x.iter().copied().collect(),
            });
        }
        Ok(Arrow {
            x: g1.x.clone(),
            h: &g1.h * &g2.h,
            y: g2.y.clone(),
        })
    }

    /// Differential of multiplication at `(g₁, g₂)`; the tangents must be
    /// composable, `ds(t₁) = dt(t₂)`.
    pub fn d_mult(&self, g1: &Arrow, t1: &ArrowTangent, t2: &ArrowTangent) -> Result<ArrowTangent> {
        if (&t1.v_y - &t2.v_x).norm() > 1e-12 * (1.0 + t1.v_y.norm()) {
            return Err(Error::InvalidTangent {
                residual: (&t1.v_y - &t2.v_x).norm(),
                tol: 1e-12,
            });
        }
        let ad = self.bundle.group.adjoint_matrix(&g1.h)?;
        Ok(ArrowTangent {
            v_x: t1.v_x.clone(),
            xi: &t1.xi + ad * &t2.xi,
            v_y: t2.v_y.clone(),
        })
    }

    pub fn d_inverse(&self, g: &Arrow, t: &ArrowTangent) -> Result<ArrowTangent> {
        let ad = self.bundle.group.adjoint_matrix(&invert(&g.h)?)?;
        Ok(ArrowTangent {
            v_x: t.v_y.clone(),
            xi: -(ad * &t.xi),
            v_y: t.v_x.clone(),
        })
    }

    pub fn d_unit(&self, v: &Vector) -> ArrowTangent {
        ArrowTangent {
            v_x: v.clone(),
            xi: Vector::zeros(self.dim_h()),
            v_y: v.clone(),
        }
    }

    /// Matrix of `ds` on tangent coordinates.
    pub fn ds(&self) -> Mat {
        let (m, n) = (self.m(), self.dim());
        let mut out = Mat::zeros(m, n);
        out.view_mut((0, m + self.dim_h()), (m, m)).fill_with_identity();
        out
    }

    /// Matrix of `dt` on tangent coordinates.
    pub fn dt(&self) -> Mat {
        let (m, n) = (self.m(), self.dim());
        let mut out = Mat::zeros(m, n);
        out.view_mut((0, 0), (m, m)).fill_with_identity();
        out
    }

    pub fn sample_arrow(&self, s: &mut SampleStream, tol: &Tolerances) -> Result<Arrow> {
        let c = &self.bundle.chart;
        let margin = 4.0 * tol.fd_step;
        let x = s.point_in_box(&c.lower, &c.upper, margin);
        let h = s.group_element(&self.bundle.group)?;
        let y = s.point_in_box(&c.lower, &c.upper, margin);
        Ok(Arrow { x, h, y })
    }

    pub fn sample_tangent(&self, s: &mut SampleStream) -> ArrowTangent {
        ArrowTangent::from_vector(&s.vector(self.dim(), 1.0), self.m())
    }
}

/// Matrix-valued function on arrows.
pub type ArrowFn = Arc<dyn Fn(&Arrow) -> Result<Mat> + Send + Sync>;

/// A representation of the gauge groupoid on `V`, trivialized along the
/// section.
#[derive(Clone)]
pub struct GroupoidRep {
    pub dim: usize,
    pub transport: ArrowFn,
}

impl fmt::Debug for GroupoidRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupoidRep").field("dim", &self.dim).finish()
    }
}

impl GroupoidRep {
    /// `transport(x, h, y) = ρ_V(h)`.
    pub fn from_coefficients(c: &Coefficients) -> Self {
        let c = c.clone();
        Self {
            dim: c.dim,
            transport: Arc::new(move |g: &Arrow| c.rho(&g.h)),
        }
    }

    pub fn trivial(dim: usize) -> Self {
        Self {
            dim,
            transport: Arc::new(move |_| Ok(Mat::identity(dim, dim))),
        }
    }

    pub fn transport(&self, g: &Arrow) -> Result<Mat> {
        (self.transport)(g)
    }
}

/// A `V`-valued 1-form on the gauge groupoid, evaluated as a matrix on
/// tangent coordinates `(v_x, X, v_y)`.
#[derive(Clone)]
pub struct MultForm {
    pub groupoid: GaugeGroupoid,
    pub dim: usize,
    pub eval: ArrowFn,
}

impl fmt::Debug for MultForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultForm")
            .field("bundle", &self.groupoid.bundle.name)
            .field("dim", &self.dim)
            .finish()
    }
}

impl MultForm {
    pub fn matrix(&self, g: &Arrow) -> Result<Mat> {
        let w = (self.eval)(g)?;
        if w.shape() != (self.dim, self.groupoid.dim()) {
            return Err(Error::InvalidInput("form returned a matrix of the wrong shape".into()));
        }
        Ok(w)
    }

    pub fn apply(&self, g: &Arrow, t: &ArrowTangent) -> Result<Vector> {
        Ok(self.matrix(g)? * t.to_vector())
    }

    /// Adds `ε·J·v_x` with `J` the all-ones matrix: a term that ignores the
    /// arrow and therefore cannot be multiplicative.
    pub fn corrupted(&self, eps: f64) -> Self {
        let inner = self.eval.clone();
        let m = self.groupoid.m();
        let dim = self.dim;
        Self {
            groupoid: self.groupoid.clone(),
            dim,
            eval: Arc::new(move |g: &Arrow| {
                let mut w = inner(g)?;
                let mut block = w.view_mut((0, 0), (dim, m));
                block.add_scalar_mut(eps);
                Ok(w)
            }),
        }
    }

    pub fn kernel(&self, g: &Arrow, tol: &Tolerances) -> Result<Subspace> {
        Ok(numkit::rank_nullspace(&self.matrix(g)?, tol)?.1)
    }
}

/// `ω_(x,h,y)(v_x, X, v_y) = A_x v_x + λX − ρ_V(h)·A_y v_y`, that is
/// `ρ_V(h)·(θ_(x,h)(v_x, X) − θ_(y,e)(v_y, 0))`.
pub fn omega_from_theta(cb: &CartanBundle) -> MultForm {
    let groupoid = GaugeGroupoid::new(cb);
    let b = cb.clone();
    let (m, k) = (cb.m(), cb.group.dim());
    MultForm {
        groupoid,
        dim: cb.dim_v(),
        eval: Arc::new(move |g: &Arrow| {
            let mut w = Mat::zeros(b.dim_v(), 2 * m + k);
            w.columns_mut(0, m + k).copy_from(&b.section_matrix(&g.x)?);
            let right = -(b.coeffs.rho(&g.h)? * b.a(&g.y)?);
            w.columns_mut(m + k, m).copy_from(&right);
            Ok(w)
        }),
    }
}

/// Residual of `m*ω = pr₁*ω + g·pr₂*ω` at one composable sample.
pub fn multiplicative_residual(
    w: &MultForm,
    rep: &GroupoidRep,
    g1: &Arrow,
    g2: &Arrow,
    t1: &ArrowTangent,
    t2: &ArrowTangent,
) -> Result<f64> {
    let gg = &w.groupoid;
    let g = gg.mult(g1, g2)?;
    let lhs = w.apply(&g, &gg.d_mult(g1, t1, t2)?)?;
    let rhs = w.apply(g1, t1)? + rep.transport(g1)? * w.apply(g2, t2)?;
    Ok((lhs - rhs).norm())
}

fn sample_composable(gg: &GaugeGroupoid, s: &mut SampleStream, tol: &Tolerances) -> Result<(Arrow, Arrow, ArrowTangent, ArrowTangent)> {
    let g1 = gg.sample_arrow(s, tol)?;
    let mut g2 = gg.sample_arrow(s, tol)?;
    g2.x = g1.y.clone();
    let t1 = gg.sample_tangent(s);
    let mut t2 = gg.sample_tangent(s);
    t2.v_x = t1.v_y.clone();
    Ok((g1, g2, t1, t2))
}

fn pair_witness(g1: &Arrow, g2: &Arrow, t1: &ArrowTangent, t2: &ArrowTangent) -> Value {
    json!({
        "g1": g1.to_json(),
        "g2": g2.to_json(),
        "t1": vec_json(&t1.to_vector()),
        "t2": vec_json(&t2.to_vector()),
    })
}

/// Samples composable pairs and compares `m*ω` with `pr₁*ω + g·pr₂*ω`.
pub fn check_multiplicative(w: &MultForm, rep: &GroupoidRep, sampler: &Sampler, tol: &Tolerances) -> CheckReport {
    let mut t = Tracker::new("multiplicative", "m*ω = pr₁*ω + g·pr₂*ω", tol.exact_tol);
    let mut s = sampler.stream("multiplicative");
    for _ in 0..sampler.pairs {
        match sample_composable(&w.groupoid, &mut s, tol) {
            Ok((g1, g2, t1, t2)) => t.record_result(multiplicative_residual(w, rep, &g1, &g2, &t1, &t2), || {
                pair_witness(&g1, &g2, &t1, &t2)
            }),
            Err(e) => t.record_error(&e, || json!({})),
        }
    }
    t.finish()
}

/// Re-evaluates the witness of a `multiplicative` report.
pub fn replay_multiplicative(w: &MultForm, rep: &GroupoidRep, witness: &Value) -> Result<f64> {
    let bad = || Error::InvalidInput("witness is not a multiplicative sample".into());
    let m = w.groupoid.m();
    let g1 = Arrow::from_json(witness.get("g1").ok_or_else(bad)?).ok_or_else(bad)?;
    let g2 = Arrow::from_json(witness.get("g2").ok_or_else(bad)?).ok_or_else(bad)?;
    let t1 = ArrowTangent::from_vector(&json_vec(witness.get("t1").ok_or_else(bad)?).ok_or_else(bad)?, m);
    let t2 = ArrowTangent::from_vector(&json_vec(witness.get("t2").ok_or_else(bad)?).ok_or_else(bad)?, m);
    multiplicative_residual(w, rep, &g1, &g2, &t1, &t2)
}

/// Both pullback identities of the equivariance lemma: right translation
/// along `s`-fibres preserves `ω`, left translation along `t`-fibres
/// transports it.
pub fn check_equivariance_lemma(w: &MultForm, rep: &GroupoidRep, sampler: &Sampler, tol: &Tolerances) -> Vec<CheckReport> {
    let gg = &w.groupoid;
    let (m, k) = (gg.m(), gg.dim_h());
    let mut right = Tracker::new("right_translation", "R_g*(ω|s⁻¹) = ω|s⁻¹", tol.exact_tol);
    let mut left = Tracker::new("left_translation", "L_g*(ω|t⁻¹) = g·ω|t⁻¹", tol.exact_tol);
    let mut s = sampler.stream("equivariance_lemma");
    let zero = ArrowTangent::zero(m, k);
    for _ in 0..sampler.points {
        let sample = (|| {
            let g = gg.sample_arrow(&mut s, tol)?;
            let mut a = gg.sample_arrow(&mut s, tol)?;
            let mut b = gg.sample_arrow(&mut s, tol)?;
            // a ∈ s⁻¹(t(g)), b ∈ t⁻¹(s(g))
            a.y = g.x.clone();
            b.x = g.y.clone();
            let mut ta = gg.sample_tangent(&mut s);
            ta.v_y = Vector::zeros(m);
            let mut tb = gg.sample_tangent(&mut s);
            tb.v_x = Vector::zeros(m);
            Ok::<_, Error>((g, a, b, ta, tb))
        })();
        let (g, a, b, ta, tb) = match sample {
            Ok(v) => v,
            Err(e) => {
                right.record_error(&e, || json!({}));
                continue;
            }
        };
        right.record_result(
            (|| {
                let moved = gg.d_mult(&a, &ta, &zero)?;
                Ok((w.apply(&gg.mult(&a, &g)?, &moved)? - w.apply(&a, &ta)?).norm())
            })(),
            || json!({"g": g.to_json(), "a": a.to_json(), "t": vec_json(&ta.to_vector())}),
        );
        left.record_result(
            (|| {
                let moved = gg.d_mult(&g, &zero, &tb)?;
                let lhs = w.apply(&gg.mult(&g, &b)?, &moved)?;
                Ok((lhs - rep.transport(&g)? * w.apply(&b, &tb)?).norm())
            })(),
            || json!({"g": g.to_json(), "b": b.to_json(), "t": vec_json(&tb.to_vector())}),
        );
    }
    vec![right.finish(), left.finish()]
}

/// Dimensions of `ker ω ∩ ker ds` and `ker ω ∩ ker dt` at `g`.
pub fn intersection_dims(w: &MultForm, g: &Arrow, tol: &Tolerances) -> Result<(usize, usize)> {
    let (ks, kt) = kernel_intersections(w, g, tol)?;
    Ok((ks.dim(), kt.dim()))
}

fn kernel_intersections(w: &MultForm, g: &Arrow, tol: &Tolerances) -> Result<(Subspace, Subspace)> {
    let gg = &w.groupoid;
    let om = w.matrix(g)?;
    let ks = numkit::rank_nullspace(&stack(&om, &gg.ds()), tol)?.1;
    let kt = numkit::rank_nullspace(&stack(&om, &gg.dt()), tol)?.1;
    Ok((ks, kt))
}

fn stack(a: &Mat, b: &Mat) -> Mat {
    let mut out = Mat::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

/// `ker ω_g + ker d_g s = T_g𝒢` and the same for `t`, plus constant rank of
/// `ω` over the samples.
pub fn check_transversality(w: &MultForm, sampler: &Sampler, tol: &Tolerances) -> Vec<CheckReport> {
    let gg = &w.groupoid;
    let n = gg.dim();
    let mut s_tr = Tracker::new("s_transversal", "ker ω + ker ds = T𝒢", tol.exact_tol);
    let mut t_tr = Tracker::new("t_transversal", "ker ω + ker dt = T𝒢", tol.exact_tol);
    let mut rank = Tracker::new("constant_rank", "rank ω constant", tol.exact_tol);
    let mut s = sampler.stream("transversality");
    let mut rank0 = None;
    for _ in 0..sampler.points {
        let g = match gg.sample_arrow(&mut s, tol) {
            Ok(g) => g,
            Err(e) => {
                s_tr.record_error(&e, || json!({}));
                continue;
            }
        };
        let dims = (|| {
            let om = w.matrix(&g)?;
            let (r, kw) = numkit::rank_nullspace(&om, tol)?;
            let kds = numkit::rank_nullspace(&gg.ds(), tol)?.1;
            let kdt = numkit::rank_nullspace(&gg.dt(), tol)?.1;
            Ok::<_, Error>((r, kw.sum(&kds)?.dim(), kw.sum(&kdt)?.dim()))
        })();
        match dims {
            Ok((r, ds_sum, dt_sum)) => {
                let r0 = *rank0.get_or_insert(r);
                rank.record((r as f64 - r0 as f64).abs(), || json!({"g": g.to_json(), "rank": r, "first_rank": r0}));
                s_tr.record((n - ds_sum) as f64, || json!({"g": g.to_json(), "sum_dim": ds_sum}));
                t_tr.record((n - dt_sum) as f64, || json!({"g": g.to_json(), "sum_dim": dt_sum}));
            }
            Err(e) => {
                s_tr.record_error(&e, || g.to_json());
                t_tr.record_error(&e, || g.to_json());
                rank.record_error(&e, || g.to_json());
            }
        }
    }
    vec![s_tr.finish(), t_tr.finish(), rank.finish()]
}

/// `𝔤_x(ω) = ker ω_{1_x} ∩ ker d_{1_x}s`.
pub fn symbol_space(w: &MultForm, x: &Vector, tol: &Tolerances) -> Result<Subspace> {
    let unit = w.groupoid.unit(x);
    Ok(kernel_intersections(w, &unit, tol)?.0)
}

/// Residual of the symbol subalgebroid test at `g`: brackets of a projected
/// frame of `ker ω ∩ ker ds` measured against the distribution.
pub fn symbol_involutivity_residual(w: &MultForm, g: &Arrow, tol: &Tolerances) -> Result<f64> {
    let gg = &w.groupoid;
    let chart = gg.product_chart();
    let ds = gg.ds();
    let constraint = |p: &ChartPoint| -> Result<Mat> { Ok(stack(&w.matrix(&Arrow::from_chart_point(p))?, &ds)) };
    chart.involutivity_residual(&constraint, &g.chart_point(), tol.fd_step, tol.rank_rel_tol)
}

/// The five Pfaffian conditions: `multiplicative`, `constant_rank`,
/// `symbol_subalgebroid`, `full` and `lie_type`.
pub fn check_pfaffian(w: &MultForm, rep: &GroupoidRep, sampler: &Sampler, tol: &Tolerances) -> Vec<CheckReport> {
    let gg = &w.groupoid;
    let mut rank = Tracker::new("constant_rank", "rank ω constant", tol.exact_tol);
    let mut full = Tracker::new("full", "ω pointwise surjective", tol.exact_tol);
    let mut lie = Tracker::new("lie_type", "ker ω ∩ ker dt = ker ω ∩ ker ds", tol.exact_tol);
    let mut s = sampler.stream("pfaffian");
    let mut rank0 = None;
    for _ in 0..sampler.points {
        let g = match gg.sample_arrow(&mut s, tol) {
            Ok(g) => g,
            Err(e) => {
                rank.record_error(&e, || json!({}));
                continue;
            }
        };
        match w.matrix(&g).and_then(|om| numkit::rank_nullspace(&om, tol)) {
            Ok((r, _)) => {
                let r0 = *rank0.get_or_insert(r);
                rank.record((r as f64 - r0 as f64).abs(), || json!({"g": g.to_json(), "rank": r}));
                full.record((w.dim - r.min(w.dim)) as f64, || json!({"g": g.to_json(), "rank": r}));
            }
            Err(e) => {
                rank.record_error(&e, || g.to_json());
                full.record_error(&e, || g.to_json());
            }
        }
        lie.record_result(
            kernel_intersections(w, &g, tol).and_then(|(ks, kt)| {
                let (_, angle) = ks.compare(&kt)?;
                Ok(angle + (ks.dim() as f64 - kt.dim() as f64).abs())
            }),
            || g.to_json(),
        );
    }

    let mut sym = Tracker::new("symbol_subalgebroid", "[𝔤(ω), 𝔤(ω)] ⊆ 𝔤(ω) near units", tol.fd_tol);
    let mut s = sampler.stream("symbol_subalgebroid");
    for _ in 0..sampler.points {
        let c = &gg.bundle.chart;
        let x = s.point_in_box(&c.lower, &c.upper, 4.0 * tol.fd_step);
        let u = gg.unit(&x);
        sym.record_result(symbol_involutivity_residual(w, &u, tol), || u.to_json());
    }
    vec![
        check_multiplicative(w, rep, sampler, tol),
        rank.finish(),
        sym.finish(),
        full.finish(),
        lie.finish(),
    ]
}

/// `θ_(x,h)(v, X) = transport(g)⁻¹·ω_g(v, X, 0)` with `g = (x, h, x₀)`,
/// evaluated directly from the form.
pub fn pfaffian_theta(w: &MultForm, rep: &GroupoidRep, x0: &Vector, p: &BundlePoint) -> Result<Mat> {
    let gg = &w.groupoid;
    let (m, k) = (gg.m(), gg.dim_h());
    let g = Arrow::new(p.x.clone(), p.h.clone(), x0.clone());
    let om = w.matrix(&g)?;
    Ok(invert(&rep.transport(&g)?)? * om.columns(0, m + k))
}

/// Rebuilds a Cartan bundle on `s⁻¹(x₀) ≅ U × H` from a full Lie–Pfaffian
/// form. Refuses when any Pfaffian condition fails on the samples.
pub fn pfaffian_to_cartan(
    w: &MultForm,
    rep: &GroupoidRep,
    x0: &Vector,
    sampler: &Sampler,
    tol: &Tolerances,
) -> Result<CartanBundle> {
    let failed: Vec<String> = check_pfaffian(w, rep, sampler, tol)
        .into_iter()
        .filter(|r| !r.passed())
        .map(|r| r.check)
        .collect();
    if !failed.is_empty() {
        return Err(Error::RefusedConstruction(format!("Pfaffian checks failed: {}", failed.join(", "))));
    }
    let base = &w.groupoid.bundle;
    if !base.chart.contains(x0) {
        return Err(Error::InvalidInput("base point outside the chart".into()));
    }
    let (m, k) = (base.m(), base.group.dim());
    let e = base.group.identity();
    let lambda = pfaffian_theta(w, rep, x0, &BundlePoint::new(x0.clone(), e.clone()))?
        .columns(m, k)
        .into_owned();
    let (w2, rep2, x0c) = (w.clone(), rep.clone(), x0.clone());
    let a: MatFn = Arc::new(move |x: &Vector| {
        let th = pfaffian_theta(&w2, &rep2, &x0c, &BundlePoint::new(x.clone(), e.clone()))?;
        Ok(th.columns(0, m).into_owned())
    });
    let rep3 = rep.clone();
    let x0d = x0.clone();
    let coeffs = Coefficients {
        dim: w.dim,
        rho: Arc::new(move |h: &Mat| rep3.transport(&Arrow::new(x0d.clone(), h.clone(), x0d.clone()))),
    };
    CartanBundle::new(
        format!("{}/reconstructed", base.name),
        base.chart.clone(),
        &base.group,
        coeffs,
        CartanGauge {
            a,
            lambda,
            closed_form: false,
        },
        base.model.clone(),
    )
}

/// `ω_{1_x}` restricted to `A_x = ker d_{1_x}s` and the anchor
/// `ω_{1_x}(α) ↦ d_{1_x}t(α)`.
#[derive(Debug, Clone)]
pub struct UnitAlgebroid {
    /// `ω_{1_x}` on the basis `(v, X)` of `A_x`.
    pub iso: Mat,
    pub invertible: bool,
    pub kernel_dim: usize,
    /// Anchor through least-squares preimages, `m × dim V`.
    pub anchor: Mat,
}

pub fn unit_algebroid(w: &MultForm, x: &Vector, tol: &Tolerances) -> Result<UnitAlgebroid> {
    let gg = &w.groupoid;
    let (m, k) = (gg.m(), gg.dim_h());
    let om = w.matrix(&gg.unit(x))?;
    let iso = om.columns(0, m + k).into_owned();
    let (rank, _) = numkit::rank_nullspace(&iso, tol)?;
    let kernel_dim = m + k - rank;
    let invertible = kernel_dim == 0 && iso.nrows() == iso.ncols();
    let dt_on_a = gg.dt().columns(0, m + k).into_owned();
    let anchor = dt_on_a * numkit::pseudo_inverse(&iso, tol.rank_rel_tol);
    Ok(UnitAlgebroid {
        iso,
        invertible,
        kernel_dim,
        anchor,
    })
}

/// `‖transport(g)·ω_{1_x}(0, v, 0) − ω_{1_x}(0, Ad_g v, 0)‖` over a basis of
/// `𝔥`, for `g` in the isotropy at `x`.
pub fn adjoint_compatibility_residual(w: &MultForm, rep: &GroupoidRep, x: &Vector, g: &Mat) -> Result<f64> {
    let gg = &w.groupoid;
    let (m, k) = (gg.m(), gg.dim_h());
    let lambda = w.matrix(&gg.unit(x))?.columns(m, k).into_owned();
    let iso_arrow = Arrow::new(x.clone(), g.clone(), x.clone());
    let ad = gg.bundle.group.adjoint_matrix(g)?;
    Ok((rep.transport(&iso_arrow)? * &lambda - lambda * ad).norm())
}

/// `g·v = d_g t(α)` for any `α ∈ ker ω_g` with `d_g s(α) = v`.
pub fn tangent_rep(w: &MultForm, g: &Arrow, v: &Vector, tol: &Tolerances) -> Result<Vector> {
    Ok(tangent_rep_solution(w, g, v, tol)?.0)
}

/// Solves for `α` and returns `(d_g t(α), kernel of [ω; ds])`.
fn tangent_rep_solution(w: &MultForm, g: &Arrow, v: &Vector, tol: &Tolerances) -> Result<(Vector, Subspace, Vector)> {
    let gg = &w.groupoid;
    let sys = stack(&w.matrix(g)?, &gg.ds());
    let mut rhs = Vector::zeros(sys.nrows());
    rhs.rows_mut(w.dim, gg.m()).copy_from(v);
    let alpha = numkit::pseudo_inverse(&sys, tol.rank_rel_tol) * &rhs;
    let residual = (&sys * &alpha - &rhs).norm();
    if residual > tol.exact_tol * (1.0 + v.norm()) {
        return Err(Error::DegenerateForm(format!(
            "no α ∈ ker ω with ds(α) = v (residual {residual:e})"
        )));
    }
    let (_, kernel) = numkit::rank_nullspace(&sys, tol)?;
    Ok((gg.dt() * &alpha, kernel, alpha))
}

/// Largest change of `g·v` over other admissible choices of `α`.
pub fn tangent_rep_choice_spread(w: &MultForm, g: &Arrow, v: &Vector, tol: &Tolerances) -> Result<f64> {
    let (_, kernel, _) = tangent_rep_solution(w, g, v, tol)?;
    Ok((w.groupoid.dt() * &kernel.basis).norm())
}

/// `Φ_x(z)`: the base part of any `w` with `θ_(x,e)(w) = z`.
pub fn phi_projection(cb: &CartanBundle, x: &Vector, z: &Vector, tol: &Tolerances) -> Result<Vector> {
    let sec = cb.section_matrix(x)?;
    let sol = numkit::pseudo_inverse(&sec, tol.rank_rel_tol) * z;
    let residual = (&sec * &sol - z).norm();
    if residual > tol.exact_tol * (1.0 + z.norm()) {
        return Err(Error::DegenerateForm("θ is not onto at this point".into()));
    }
    Ok(sol.rows(0, cb.m()).into_owned())
}

/// Dimension identity `dim V = m + dim 𝔥 − dim 𝔤(ω)` and equivariance
/// `g·Φ(z) = Φ(g·z)` of the projection `Φ: E → TM`.
pub fn rep_splitting_check(cb: &CartanBundle, w: &MultForm, sampler: &Sampler, tol: &Tolerances) -> Vec<CheckReport> {
    let gg = &w.groupoid;
    let rep = GroupoidRep::from_coefficients(&cb.coeffs);
    let mut dim = Tracker::new("splitting_dimension", "E_x ≅ T_xM ⊕ 𝔥/𝔤(ω)", tol.exact_tol);
    let mut equi = Tracker::new("phi_equivariance", "g·Φ(z) = Φ(g·z)", tol.exact_tol);
    let mut s = sampler.stream("rep_splitting");
    let c = &cb.chart;
    for _ in 0..sampler.points {
        let x = s.point_in_box(&c.lower, &c.upper, 4.0 * tol.fd_step);
        dim.record_result(
            symbol_space(w, &x, tol).map(|sym| (cb.dim_v() as f64 - (cb.tangent_dim() - sym.dim()) as f64).abs()),
            || json!({"x": vec_json(&x)}),
        );
    }
    for _ in 0..sampler.pairs {
        let sample = gg.sample_arrow(&mut s, tol).map(|g| (g, s.vector(cb.dim_v(), 1.0)));
        let (g, z) = match sample {
            Ok(v) => v,
            Err(e) => {
                equi.record_error(&e, || json!({}));
                continue;
            }
        };
        equi.record_result(
            (|| {
                let lhs = tangent_rep(w, &g, &phi_projection(cb, &g.y, &z, tol)?, tol)?;
                let rhs = phi_projection(cb, &g.x, &(rep.transport(&g)? * &z), tol)?;
                Ok((lhs - rhs).norm())
            })(),
            || json!({"g": g.to_json(), "z": vec_json(&z)}),
        );
    }
    vec![dim.finish(), equi.finish()]
}

/// Residual of `ω̂ ∘ dτ = pr₁*θ − pr₂*θ` at `(p, q) ∈ P × P`, where
/// `τ(p, q)` is the normalized arrow and both sides are read in the section
/// trivialization at the target.
pub fn descent_residual(cb: &CartanBundle, w: &MultForm, p: &BundlePoint, q: &BundlePoint, dp: &Vector, dq: &Vector) -> Result<f64> {
    let (m, k) = (cb.m(), cb.group.dim());
    let arrow_h = &p.h * invert(&q.h)?;
    let ad = cb.group.adjoint_matrix(&arrow_h)?;
    let tangent = ArrowTangent {
        v_x: dp.rows(0, m).into_owned(),
        xi: dp.rows(m, k) - ad * dq.rows(m, k),
        v_y: dq.rows(0, m).into_owned(),
    };
    let g = Arrow::new(p.x.clone(), arrow_h, q.x.clone());
    let lhs = w.apply(&g, &tangent)?;
    let rhs = cb.coeffs.rho(&p.h)? * (cb.theta_coords(p, dp)? - cb.theta_coords(q, dq)?);
    Ok((lhs - rhs).norm())
}

/// Who acts on the bundle.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum PrincipalAction {
    /// `H` acting on `P` with forms `(0, θ)`.
    Group(CartanBundle),
    /// The gauge groupoid acting on `P` with forms `(ω, θ)`.
    Groupoid(CartanBundle, MultForm),
}

/// Runs the action identities that apply to the instance.
///
/// Group instance: `action_multiplicative` (full identity with the zero
/// form), `action_fibrewise` (the identity on `δk = 0`, i.e. equivariance),
/// `invariance_literal` (`R_k*θ = θ`), `infinitesimal_action`,
/// `image_equals_vertical`, `basic_form`, `basic_descent` and
/// `symbol_isomorphism`.
///
/// Groupoid instance: `action_multiplicative`, `infinitesimal_action`,
/// `image_equals_vertical` and `symbol_isomorphism`.
pub fn action_suite(pa: &PrincipalAction, sampler: &Sampler, tol: &Tolerances) -> Vec<CheckReport> {
    match pa {
        PrincipalAction::Group(cb) => group_action_suite(cb, sampler, tol),
        PrincipalAction::Groupoid(cb, w) => groupoid_action_suite(cb, w, sampler, tol),
    }
}

fn group_action_suite(cb: &CartanBundle, sampler: &Sampler, tol: &Tolerances) -> Vec<CheckReport> {
    let (m, k) = (cb.m(), cb.group.dim());
    let n = cb.tangent_dim();
    let mut mult = Tracker::new("action_multiplicative", "m_P*θ = pr₁*0 + k·pr₂*θ", tol.exact_tol);
    let mut fibre = Tracker::new("action_fibrewise", "R_k*θ = ρ(k⁻¹)θ", tol.exact_tol);
    let mut literal = Tracker::new("invariance_literal", "R_k*θ = θ", tol.exact_tol);
    let mut inf = Tracker::new("infinitesimal_action", "θ(a(α)) = 0(α)", tol.exact_tol);
    let mut image = Tracker::new("image_equals_vertical", "Im(a) = ker dπ", tol.exact_tol);
    let mut basic = Tracker::new("basic_form", "pr₁*θ − pr₂*θ basic", tol.exact_tol);
    let mut descent = Tracker::new("basic_descent", "τ*ω̂ = pr₁*θ − pr₂*θ", tol.exact_tol);
    let mut symbol = Tracker::new("symbol_isomorphism", "a: 𝔥 ≅ ker dπ ∩ ker θ", tol.exact_tol);
    let w = omega_from_theta(cb);
    let mut s = sampler.stream("group_action");
    let vertical = {
        let mut b = Mat::zeros(n, k);
        b.view_mut((m, 0), (k, k)).fill_with_identity();
        Subspace::span(&b, tol)
    };
    for _ in 0..sampler.points {
        let sample = (|| {
            let p = cb.sample_point(&mut s, tol)?;
            let q = cb.sample_point(&mut s, tol)?;
            let kk = s.group_element(&cb.group)?;
            Ok::<_, Error>((p, q, kk, cb.sample_tangent(&mut s), cb.sample_tangent(&mut s), s.algebra(&cb.group)))
        })();
        let (p, q, kk, dp, dq, kdot) = match sample {
            Ok(v) => v,
            Err(e) => {
                mult.record_error(&e, || json!({}));
                continue;
            }
        };
        let wit = || json!({"p": p.to_json(), "k": mat_json(&kk), "dp": vec_json(&dp)});
        // (p, k) ↦ p·k with k̇ right-trivialized as K: d(p·k) = (v, X + Ad_h K)
        mult.record_result(
            (|| {
                let rho_inv = cb.coeffs.rho(&invert(&kk)?)?;
                let mut moved = dp.clone();
                let ad = cb.group.adjoint_matrix(&p.h)?;
                let shifted = dp.rows(m, k) + ad * &kdot;
                moved.rows_mut(m, k).copy_from(&shifted);
                let lhs = cb.theta_coords(&p.act(&kk), &moved)?;
                Ok((lhs - rho_inv * cb.theta_coords(&p, &dp)?).norm())
            })(),
            wit,
        );
        fibre.record_result(crate::cartan::equivariance_residual(cb, &p, &kk), wit);
        literal.record_result(
            (|| Ok((cb.theta_matrix(&p.act(&kk))? - cb.theta_matrix(&p)?).norm()))(),
            wit,
        );
        inf.record_result(
            (|| {
                let mut worst: f64 = 0.0;
                for a in 0..k {
                    let mut e = Vector::zeros(k);
                    e[a] = 1.0;
                    worst = worst.max(cb.theta_coords(&p, &cb.fundamental_vector(&p, &e)?)?.norm());
                }
                Ok(worst)
            })(),
            wit,
        );
        image.record_result(
            (|| {
                let mut im = Mat::zeros(n, k);
                for a in 0..k {
                    let mut e = Vector::zeros(k);
                    e[a] = 1.0;
                    im.set_column(a, &cb.fundamental_vector(&p, &e)?);
                }
                let (eq, angle) = Subspace::span(&im, tol)?.compare(vertical.as_ref().map_err(Clone::clone)?)?;
                Ok(if eq { angle } else { angle.max(1.0) })
            })(),
            wit,
        );
        basic.record_result(
            (|| {
                // vanishes on diagonal fundamental vectors, equivariant under the
                // diagonal action
                let mut worst: f64 = 0.0;
                for a in 0..k {
                    let mut e = Vector::zeros(k);
                    e[a] = 1.0;
                    let diff = cb.theta_coords(&p, &cb.fundamental_vector(&p, &e)?)? - cb.theta_coords(&q, &cb.fundamental_vector(&q, &e)?)?;
                    worst = worst.max(diff.norm());
                }
                let before = cb.theta_coords(&p, &dp)? - cb.theta_coords(&q, &dq)?;
                let after = cb.theta_coords(&p.act(&kk), &dp)? - cb.theta_coords(&q.act(&kk), &dq)?;
                Ok(worst.max((after - cb.coeffs.rho(&invert(&kk)?)? * before).norm()))
            })(),
            || json!({"p": p.to_json(), "q": q.to_json(), "k": mat_json(&kk)}),
        );
        descent.record_result(descent_residual(cb, &w, &p, &q, &dp, &dq), || {
            json!({"p": p.to_json(), "q": q.to_json(), "dp": vec_json(&dp), "dq": vec_json(&dq)})
        });
        symbol.record_result(
            (|| {
                let (_, ker) = numkit::rank_nullspace(&cb.theta_matrix(&p)?, tol)?;
                let target = ker.intersection(vertical.as_ref().map_err(Clone::clone)?)?;
                Ok((k as f64 - target.dim() as f64).abs())
            })(),
            wit,
        );
    }
    vec![
        mult.finish(),
        fibre.finish(),
        literal.finish(),
        inf.finish(),
        image.finish(),
        basic.finish(),
        descent.finish(),
        symbol.finish(),
    ]
}

/// `E`-valued form on `P` read in the section trivialization at the base
/// point: `Θ_(y,k)(v, Y) = A_y v + λY`.
fn big_theta(cb: &CartanBundle, p: &BundlePoint) -> Result<Mat> {
    Ok(cb.coeffs.rho(&p.h)? * cb.theta_matrix(p)?)
}

fn groupoid_action_suite(cb: &CartanBundle, w: &MultForm, sampler: &Sampler, tol: &Tolerances) -> Vec<CheckReport> {
    let gg = &w.groupoid;
    let (m, k) = (cb.m(), cb.group.dim());
    let n = cb.tangent_dim();
    let rep = GroupoidRep::from_coefficients(&cb.coeffs);
    let mut mult = Tracker::new("action_multiplicative", "m_P*θ = pr₁*ω + g·pr₂*θ", tol.exact_tol);
    let mut inf = Tracker::new("infinitesimal_action", "θ(a(α)) = ω(α)", tol.exact_tol);
    let mut image = Tracker::new("image_equals_vertical", "Im(a) = ker dπ", tol.exact_tol);
    let mut symbol = Tracker::new("symbol_isomorphism", "a: 𝔤(ω) ≅ ker dπ ∩ ker θ", tol.exact_tol);
    let mut s = sampler.stream("groupoid_action");
    for _ in 0..sampler.points {
        let sample = (|| {
            let g = gg.sample_arrow(&mut s, tol)?;
            let kk = s.group_element(&cb.group)?;
            let p = BundlePoint::new(g.y.clone(), kk);
            let tg = gg.sample_tangent(&mut s);
            let mut dp = cb.sample_tangent(&mut s);
            dp.rows_mut(0, m).copy_from(&tg.v_y);
            let alpha = s.vector(m + k, 1.0);
            Ok::<_, Error>((g, p, tg, dp, alpha))
        })();
        let (g, p, tg, dp, alpha) = match sample {
            Ok(v) => v,
            Err(e) => {
                mult.record_error(&e, || json!({}));
                continue;
            }
        };
        let wit = || json!({"g": g.to_json(), "p": p.to_json(), "tg": vec_json(&tg.to_vector()), "dp": vec_json(&dp)});
        // g·(y, k) = (x, hk); d(hk) right-trivialized is X + Ad_h Y
        mult.record_result(
            (|| {
                let moved_p = BundlePoint::new(g.x.clone(), &g.h * &p.h);
                let ad = cb.group.adjoint_matrix(&g.h)?;
                let mut moved = Vector::zeros(n);
                moved.rows_mut(0, m).copy_from(&tg.v_x);
                moved.rows_mut(m, k).copy_from(&(&tg.xi + ad * dp.rows(m, k)));
                let lhs = big_theta(cb, &moved_p)? * moved;
                let rhs = w.apply(&g, &tg)? + rep.transport(&g)? * big_theta(cb, &p)? * &dp;
                Ok((lhs - rhs).norm())
            })(),
            wit,
        );
        // a(α) at p for α = (u, X, 0) ∈ A_y is (u, X)
        inf.record_result(
            (|| {
                let mut full = Vector::zeros(gg.dim());
                full.rows_mut(0, m + k).copy_from(&alpha);
                let unit = gg.unit(&p.x);
                Ok((big_theta(cb, &p)? * &alpha - w.apply(&unit, &ArrowTangent::from_vector(&full, m))?).norm())
            })(),
            || json!({"p": p.to_json(), "alpha": vec_json(&alpha)}),
        );
        // P/𝒢 is a point, so ker dπ is all of TP
        image.record_result(
            (|| {
                let (rank, _) = numkit::rank_nullspace(&Mat::identity(n, n), tol)?;
                Ok((n - rank) as f64)
            })(),
            wit,
        );
        symbol.record_result(
            (|| {
                let sym = symbol_space(w, &p.x, tol)?;
                // a on A_y drops the v_y block
                let image = Subspace::span(&sym.basis.rows(0, n).into_owned(), tol)?;
                let (_, ker) = numkit::rank_nullspace(&cb.theta_matrix(&p)?, tol)?;
                let injectivity = (sym.dim() as f64 - image.dim() as f64).abs();
                let (_, angle) = image.compare(&ker)?;
                Ok(injectivity + angle + (image.dim() as f64 - ker.dim() as f64).abs())
            })(),
            || p.to_json(),
        );
    }
    vec![mult.finish(), inf.finish(), image.finish(), symbol.finish()]
}

/// Arrow-space helper used by the CLI: `(x, h, y)` from a bundle point and a
/// base point.
pub fn arrow_to(p: &BundlePoint, y: &Vector) -> Arrow {
    Arrow::new(p.x.clone(), p.h.clone(), y.clone())
}
