//! Chart-trivialized principal bundles with equivariant vector-valued
//! 1-forms.
//!
//! A bundle is `U × H` with `(x, h)·k = (x, hk)`. Tangents at `(x, h)` are
//! pairs `(v, X)` with `v ∈ ℝᵐ` and `X = ξ·h⁻¹ ∈ 𝔥`, so right translation
//! acts trivially on tangent coordinates and the fundamental vector of
//! `w ∈ 𝔥` at `(x, h)` is `(0, Ad_h w)`. The form is generated by a gauge
//! `(A, λ)` along `h = e`:
//!
//! `θ_(x,h)(v, X) = ρ_V(h⁻¹)·(A_x v + λ X)`.

use std::fmt;
use std::sync::Arc;

use serde_json::json;

use crate::error::{Error, Result};
use crate::frames::{ChartPoint, ProductChart};
use crate::klein::{ModelGeometry, ReductiveSplitting, RhoFn};
use crate::liegroups::{build_semidirect, general_linear, invert, GroupRef, SubgroupInclusion};
use crate::numkit::{self, Mat, Tolerances, Vector};
use crate::verify::{mat_json, vec_json, CheckReport, SampleStream, Sampler, Tracker};

/// Matrix-valued function of a chart point.
pub type MatFn = Arc<dyn Fn(&Vector) -> Result<Mat> + Send + Sync>;

/// Open box `∏ (lowerᵢ, upperᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ChartBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidInput("chart bounds have different lengths".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l < u)) {
            return Err(Error::InvalidInput("chart bounds must be finite with lower < upper".into()));
        }
        Ok(Self { lower, upper })
    }

    /// `(−r, r)ᵐ`.
    pub fn cube(dim: usize, radius: f64) -> Result<Self> {
        Self::new(vec![-radius; dim], vec![radius; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, xi)| self.lower[i] < *xi && *xi < self.upper[i])
    }

    pub fn center(&self) -> Vector {
        Vector::from_iterator(self.dim(), self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundlePoint {
    pub x: Vector,
    pub h: Mat,
}

impl BundlePoint {
    pub fn new(x: Vector, h: Mat) -> Self {
        Self { x, h }
    }

    pub fn act(&self, k: &Mat) -> Self {
        Self {
            x: self.x.clone(),
            h: &self.h * k,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({"x": vec_json(&self.x), "h": mat_json(&self.h)})
    }
}

impl From<&ChartPoint> for BundlePoint {
    fn from(p: &ChartPoint) -> Self {
        Self {
            x: p.x.clone(),
            h: p.h.clone(),
        }
    }
}

/// A representation `ρ_V` of `H` on `V = ℝ^dim`.
#[derive(Clone)]
pub struct Coefficients {
    pub dim: usize,
    pub rho: RhoFn,
}

impl fmt::Debug for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coefficients").field("dim", &self.dim).finish()
    }
}

impl Coefficients {
    pub fn trivial(dim: usize) -> Self {
        Self {
            dim,
            rho: Arc::new(move |_| Ok(Mat::identity(dim, dim))),
        }
    }

    /// `ρ(h) = h` on `ℝⁿ`.
    pub fn defining(group: &GroupRef) -> Self {
        Self {
            dim: group.ambient_dim(),
            rho: Arc::new(|h: &Mat| Ok(h.clone())),
        }
    }

    /// `ρ = Ad_H` on `𝔥`.
    pub fn adjoint(group: &GroupRef) -> Self {
        let g = group.clone();
        Self {
            dim: group.dim(),
            rho: Arc::new(move |h: &Mat| g.adjoint_matrix(h)),
        }
    }

    /// The model representation of `H` on `𝔤`.
    pub fn model(m: &ModelGeometry) -> Self {
        Self {
            dim: m.pair.dim_g(),
            rho: m.rho.clone(),
        }
    }

    pub fn rho(&self, h: &Mat) -> Result<Mat> {
        let r = (self.rho)(h)?;
        if r.shape() != (self.dim, self.dim) {
            return Err(Error::InvalidInput(format!(
                "ρ_V returned a {}×{} matrix, expected {d}×{d}",
                r.nrows(),
                r.ncols(),
                d = self.dim
            )));
        }
        Ok(r)
    }
}

/// Chart data `(A, λ)` generating `θ`.
#[derive(Clone)]
pub struct CartanGauge {
    /// `x ↦ A_x`, a `dim V × m` matrix.
    pub a: MatFn,
    /// `λ: 𝔥 → V`, a `dim V × dim 𝔥` matrix.
    pub lambda: Mat,
    pub closed_form: bool,
}

impl fmt::Debug for CartanGauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CartanGauge")
            .field("lambda", &self.lambda)
            .field("closed_form", &self.closed_form)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub struct CartanBundle {
    pub name: String,
    pub chart: ChartBox,
    pub group: GroupRef,
    pub coeffs: Coefficients,
    pub gauge: CartanGauge,
    /// Present when `V = 𝔤` for a model geometry.
    pub model: Option<ModelGeometry>,
}

impl CartanBundle {
    pub fn new(
        name: impl Into<String>,
        chart: ChartBox,
        group: &GroupRef,
        coeffs: Coefficients,
        gauge: CartanGauge,
        model: Option<ModelGeometry>,
    ) -> Result<Self> {
        if gauge.lambda.shape() != (coeffs.dim, group.dim()) {
            return Err(Error::InvalidInput(format!(
                "λ must be {}×{}",
                coeffs.dim,
                group.dim()
            )));
        }
        if let Some(m) = &model {
            if m.pair.dim_g() != coeffs.dim {
                return Err(Error::InvalidInput("model geometries need V = 𝔤".into()));
            }
            if m.h().dim() != group.dim() || m.h().ambient_dim() != group.ambient_dim() {
                return Err(Error::InvalidInput("model subgroup differs from the structure group".into()));
            }
        }
        let cb = Self {
            name: name.into(),
            chart,
            group: group.clone(),
            coeffs,
            gauge,
            model,
        };
        cb.a(&cb.chart.center())?;
        Ok(cb)
    }

    /// Base dimension `m`.
    pub fn m(&self) -> usize {
        self.chart.dim()
    }

    pub fn dim_v(&self) -> usize {
        self.coeffs.dim
    }

    /// `m + dim 𝔥`.
    pub fn tangent_dim(&self) -> usize {
        self.m() + self.group.dim()
    }

    pub fn product_chart(&self) -> ProductChart {
        ProductChart {
            group: self.group.clone(),
            left: self.m(),
            right: 0,
            lower: self.chart.lower.clone(),
            upper: self.chart.upper.clone(),
        }
    }

    pub fn a(&self, x: &Vector) -> Result<Mat> {
        if x.len() != self.m() {
            return Err(Error::InvalidInput(format!("chart point needs {} coordinates", self.m())));
        }
        let a = (self.gauge.a)(x)?;
        if a.shape() != (self.dim_v(), self.m()) {
            return Err(Error::InvalidInput(format!(
                "gauge returned {}×{}, expected {}×{}",
                a.nrows(),
                a.ncols(),
                self.dim_v(),
                self.m()
            )));
        }
        numkit::ensure_finite(&a, "gauge")?;
        Ok(a)
    }

    /// `[A_x | λ]`, the form at `(x, e)`.
    pub fn section_matrix(&self, x: &Vector) -> Result<Mat> {
        let mut out = Mat::zeros(self.dim_v(), self.tangent_dim());
        out.columns_mut(0, self.m()).copy_from(&self.a(x)?);
        out.columns_mut(self.m(), self.group.dim()).copy_from(&self.gauge.lambda);
        Ok(out)
    }

    /// Matrix of `θ_p` on tangent coordinates `(v, X)`.
    pub fn theta_matrix(&self, p: &BundlePoint) -> Result<Mat> {
        let rho_inv = self.coeffs.rho(&invert(&p.h)?)?;
        Ok(rho_inv * self.section_matrix(&p.x)?)
    }

    /// `θ_p(v, X)` with the vertical part in right-trivialized coordinates.
    pub fn theta_coords(&self, p: &BundlePoint, w: &Vector) -> Result<Vector> {
        if w.len() != self.tangent_dim() {
            return Err(Error::InvalidInput(format!("tangent needs {} coordinates", self.tangent_dim())));
        }
        Ok(self.theta_matrix(p)? * w)
    }

    pub fn sample_point(&self, s: &mut SampleStream, tol: &Tolerances) -> Result<BundlePoint> {
        let x = s.point_in_box(&self.chart.lower, &self.chart.upper, 4.0 * tol.fd_step);
        let h = s.group_element(&self.group)?;
        Ok(BundlePoint { x, h })
    }

    pub fn sample_tangent(&self, s: &mut SampleStream) -> Vector {
        s.vector(self.tangent_dim(), 1.0)
    }

    /// Fundamental vector of `w ∈ 𝔥` (coordinates) at `p`.
    pub fn fundamental_vector(&self, p: &BundlePoint, w: &Vector) -> Result<Vector> {
        let mut out = Vector::zeros(self.tangent_dim());
        let ad = self.group.adjoint_matrix(&p.h)?;
        out.rows_mut(self.m(), self.group.dim()).copy_from(&(ad * w));
        Ok(out)
    }
}

/// `θ_(x,h)(v, ξ)` for a matrix tangent `ξ ∈ T_hH`.
pub fn theta_eval(cb: &CartanBundle, p: &BundlePoint, v: &Vector, xi: &Mat) -> Result<Vector> {
    let x = xi * invert(&p.h)?;
    let coords = match cb.group.coords_of(&x) {
        Ok(c) => c,
        Err(Error::ClosureViolation { residual, tol }) => return Err(Error::InvalidTangent { residual, tol }),
        Err(e) => return Err(e),
    };
    if v.len() != cb.m() {
        return Err(Error::InvalidInput(format!("chart tangent needs {} coordinates", cb.m())));
    }
    let mut w = Vector::zeros(cb.tangent_dim());
    w.rows_mut(0, cb.m()).copy_from(v);
    w.rows_mut(cb.m(), cb.group.dim()).copy_from(&coords);
    cb.theta_coords(p, &w)
}

/// The four axioms of a Cartan bundle, one report each: `surjective`,
/// `ker_theta_vertical`, `involutive` and `equivariant`.
pub fn check_cartan_bundle(cb: &CartanBundle, sampler: &Sampler, tol: &Tolerances) -> Vec<CheckReport> {
    vec![
        check_surjective(cb, sampler, tol),
        check_kernel_vertical(cb, sampler, tol),
        check_involutive(cb, sampler, tol),
        check_equivariant(cb, sampler, tol),
    ]
}

fn check_surjective(cb: &CartanBundle, sampler: &Sampler, tol: &Tolerances) -> CheckReport {
    let mut t = Tracker::new("surjective", "θ_p: T_pP → V onto", tol.exact_tol);
    let mut s = sampler.stream("surjective");
    for _ in 0..sampler.points {
        let p = match cb.sample_point(&mut s, tol) {
            Ok(p) => p,
            Err(e) => {
                t.record_error(&e, || json!({}));
                continue;
            }
        };
        let r = cb
            .theta_matrix(&p)
            .and_then(|m| numkit::rank_nullspace(&m, tol))
            .map(|(rank, _)| (cb.dim_v() - rank.min(cb.dim_v())) as f64);
        t.record_result(r, || p.to_json());
    }
    t.finish()
}

/// Largest chart component of a unit kernel vector of `θ_p`.
pub fn kernel_chart_residual(cb: &CartanBundle, p: &BundlePoint, tol: &Tolerances) -> Result<f64> {
    let (_, kernel) = numkit::rank_nullspace(&cb.theta_matrix(p)?, tol)?;
    Ok(kernel.basis.rows(0, cb.m()).norm())
}

fn check_kernel_vertical(cb: &CartanBundle, sampler: &Sampler, tol: &Tolerances) -> CheckReport {
    let mut t = Tracker::new("ker_theta_vertical", "ker θ ⊆ ker dπ", tol.exact_tol);
    let mut s = sampler.stream("ker_theta_vertical");
    for _ in 0..sampler.points {
        match cb.sample_point(&mut s, tol) {
            Ok(p) => t.record_result(kernel_chart_residual(cb, &p, tol), || p.to_json()),
            Err(e) => t.record_error(&e, || json!({})),
        }
    }
    t.finish()
}

/// Distance of the brackets of a projected kernel frame from `ker θ` at `p`.
pub fn involutivity_residual(cb: &CartanBundle, p: &BundlePoint, tol: &Tolerances) -> Result<f64> {
    let chart = cb.product_chart();
    let constraint = |q: &ChartPoint| cb.theta_matrix(&BundlePoint::from(q));
    let cp = ChartPoint {
        x: p.x.clone(),
        h: p.h.clone(),
    };
    chart.involutivity_residual(&constraint, &cp, tol.fd_step, tol.rank_rel_tol)
}

fn check_involutive(cb: &CartanBundle, sampler: &Sampler, tol: &Tolerances) -> CheckReport {
    let mut t = Tracker::new("involutive", "[ker θ, ker θ] ⊆ ker θ", tol.fd_tol);
    let mut s = sampler.stream("involutive");
    for _ in 0..sampler.points {
        match cb.sample_point(&mut s, tol) {
            Ok(p) => t.record_result(involutivity_residual(cb, &p, tol), || p.to_json()),
            Err(e) => t.record_error(&e, || json!({})),
        }
    }
    t.finish()
}

/// `‖θ_{p·k} − ρ_V(k⁻¹)·θ_p‖` on tangent coordinates.
pub fn equivariance_residual(cb: &CartanBundle, p: &BundlePoint, k: &Mat) -> Result<f64> {
    let lhs = cb.theta_matrix(&p.act(k))?;
    let rhs = cb.coeffs.rho(&invert(k)?)? * cb.theta_matrix(p)?;
    Ok((lhs - rhs).norm())
}

fn check_equivariant(cb: &CartanBundle, sampler: &Sampler, tol: &Tolerances) -> CheckReport {
    let mut t = Tracker::new("equivariant", "R_k*θ = ρ_V(k⁻¹)θ", tol.exact_tol);
    let mut s = sampler.stream("equivariant");
    for _ in 0..sampler.group_elements {
        let sample = cb
            .sample_point(&mut s, tol)
            .and_then(|p| Ok((p, s.group_element(&cb.group)?)));
        match sample {
            Ok((p, k)) => t.record_result(equivariance_residual(cb, &p, &k), || {
                json!({"p": p.to_json(), "k": mat_json(&k)})
            }),
            Err(e) => t.record_error(&e, || json!({})),
        }
    }
    t.finish()
}

/// Cartan geometry axioms: `dimension`, `pointwise_isomorphism`,
/// `equivariant`, `rho_match` and `fundamental_vector`.
///
/// When the dimension count fails the remaining checks are skipped.
pub fn check_cartan_geometry(
    cb: &CartanBundle,
    model: &ModelGeometry,
    sampler: &Sampler,
    tol: &Tolerances,
) -> Vec<CheckReport> {
    let mut dim = Tracker::new("dimension", "dim V = dim 𝔤 = m + dim 𝔥", tol.exact_tol);
    let (dv, dg, n) = (cb.dim_v(), model.pair.dim_g(), cb.tangent_dim());
    let mismatch = (dv as f64 - dg as f64).abs() + (dg as f64 - n as f64).abs();
    dim.record(mismatch, || json!({"dim_v": dv, "dim_g": dg, "m_plus_dim_h": n}));
    let dim = dim.finish();
    if !dim.passed() || model.pair.dim_h() != cb.group.dim() {
        return vec![dim];
    }
    let inj = &model.pair.h_coords;

    let mut iso = Tracker::new("pointwise_isomorphism", "θ_p: T_pP ≅ 𝔤", tol.exact_tol);
    let mut s = sampler.stream("pointwise_isomorphism");
    for _ in 0..sampler.points {
        match cb.sample_point(&mut s, tol) {
            Ok(p) => {
                let r = cb
                    .theta_matrix(&p)
                    .and_then(|m| numkit::rank_nullspace(&m, tol))
                    .map(|(rank, _)| (n - rank.min(n)) as f64);
                t_record(&mut iso, r, &p);
            }
            Err(e) => iso.record_error(&e, || json!({})),
        }
    }

    let mut rho = Tracker::new("rho_match", "ρ_V = ρ", tol.exact_tol);
    let mut fundamental = Tracker::new("fundamental_vector", "θ(w†) = w", tol.exact_tol);
    let mut s = sampler.stream("fundamental_vector");
    for _ in 0..sampler.group_elements {
        let p = match cb.sample_point(&mut s, tol) {
            Ok(p) => p,
            Err(e) => {
                fundamental.record_error(&e, || json!({}));
                continue;
            }
        };
        rho.record_result(
            (|| Ok((cb.coeffs.rho(&p.h)? - model.rho(&p.h)?).norm()))(),
            || json!({"h": mat_json(&p.h)}),
        );
        let r = (|| {
            let mut worst: f64 = 0.0;
            for a in 0..cb.group.dim() {
                let mut w = Vector::zeros(cb.group.dim());
                w[a] = 1.0;
                let val = cb.theta_coords(&p, &cb.fundamental_vector(&p, &w)?)?;
                worst = worst.max((val - inj.column(a)).norm());
            }
            Ok(worst)
        })();
        t_record(&mut fundamental, r, &p);
    }
    vec![dim, iso.finish(), check_equivariant(cb, sampler, tol), rho.finish(), fundamental.finish()]
}

fn t_record(t: &mut Tracker, r: Result<f64>, p: &BundlePoint) {
    t.record_result(r, || p.to_json());
}

fn require_model(cb: &CartanBundle) -> Result<&ModelGeometry> {
    cb.model
        .as_ref()
        .ok_or_else(|| Error::Unsupported(format!("{} is not 𝔤-valued", cb.name)))
}

fn check_tangent(cb: &CartanBundle, w: &Vector) -> Result<()> {
    if w.len() != cb.tangent_dim() {
        return Err(Error::InvalidInput(format!("tangent needs {} coordinates", cb.tangent_dim())));
    }
    Ok(())
}

/// `dθ(u, v)` for frame-constant extensions of `u` and `v`, by central
/// differences.
pub fn d_theta(cb: &CartanBundle, p: &BundlePoint, u: &Vector, v: &Vector, tol: &Tolerances) -> Result<Vector> {
    d_form(cb, |q| cb.theta_matrix(q), p, u, v, tol)
}

fn d_form<F>(cb: &CartanBundle, form: F, p: &BundlePoint, u: &Vector, v: &Vector, tol: &Tolerances) -> Result<Vector>
where
    F: Fn(&BundlePoint) -> Result<Mat>,
{
    check_tangent(cb, u)?;
    check_tangent(cb, v)?;
    let chart = cb.product_chart();
    let f = |q: &ChartPoint| form(&BundlePoint::from(q));
    let cp = ChartPoint {
        x: p.x.clone(),
        h: p.h.clone(),
    };
    let du = chart.directional(&f, &cp, u, tol.fd_step)?;
    let dv = chart.directional(&f, &cp, v, tol.fd_step)?;
    Ok(du * v - dv * u - form(p)? * chart.frame_bracket(u, v))
}

/// `Ω(u, v) = dθ(u, v) + [θ(u), θ(v)]`.
pub fn curvature(cb: &CartanBundle, p: &BundlePoint, u: &Vector, v: &Vector, tol: &Tolerances) -> Result<Vector> {
    let model = require_model(cb)?;
    let th = cb.theta_matrix(p)?;
    Ok(d_theta(cb, p, u, v, tol)? + model.g().bracket_coords(&(&th * u), &(&th * v)))
}

/// `𝔩`-component of the curvature, `dθ_𝔩(u, v) + pr_𝔩[θ(u), θ(v)]`, as a
/// `𝔤`-vector lying in `𝔩`.
pub fn torsion(
    cb: &CartanBundle,
    split: &ReductiveSplitting,
    p: &BundlePoint,
    u: &Vector,
    v: &Vector,
    tol: &Tolerances,
) -> Result<Vector> {
    let model = require_model(cb)?;
    let d = d_form(cb, |q| Ok(&split.pr_l * cb.theta_matrix(q)?), p, u, v, tol)?;
    let th = cb.theta_matrix(p)?;
    Ok(d + &split.pr_l * model.g().bracket_coords(&(&th * u), &(&th * v)))
}

/// An `H`-structure on the chart with `H ⊆ GL(n)`, given by its coframe
/// `x ↦ σ(x)⁻¹` along a section of frames `σ`.
#[derive(Clone)]
pub struct GStructure {
    pub group: GroupRef,
    pub frame_inclusion: SubgroupInclusion,
    pub chart: ChartBox,
    pub coframe: MatFn,
}

impl fmt::Debug for GStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GStructure")
            .field("group", &self.group.name())
            .field("chart", &self.chart)
            .finish()
    }
}

impl GStructure {
    pub fn new(group: &GroupRef, chart: ChartBox, coframe: MatFn) -> Result<Self> {
        let n = group.ambient_dim();
        if chart.dim() != n {
            return Err(Error::InvalidInput(format!(
                "{}-structure needs an {n}-dimensional chart",
                group.name()
            )));
        }
        let frame_inclusion = SubgroupInclusion::new(group, &general_linear(n)?, 0)?;
        let gs = Self {
            group: group.clone(),
            frame_inclusion,
            chart,
            coframe,
        };
        gs.coframe_at(&gs.chart.center())?;
        Ok(gs)
    }

    pub fn n(&self) -> usize {
        self.group.ambient_dim()
    }

    pub fn coframe_at(&self, x: &Vector) -> Result<Mat> {
        let c = (self.coframe)(x)?;
        let n = self.n();
        if c.shape() != (n, n) {
            return Err(Error::InvalidInput(format!("coframe must be {n}×{n}")));
        }
        numkit::ensure_finite(&c, "coframe")?;
        invert(&c)?;
        Ok(c)
    }

    /// The frame `σ(x)·h` at the bundle point `(x, h)`.
    pub fn frame(&self, p: &BundlePoint) -> Result<Mat> {
        Ok(invert(&self.coframe_at(&p.x)?)? * &p.h)
    }

    /// The bundle with its tautological form: `V = ℝⁿ`, `ρ_V(h) = h`,
    /// `A = coframe`, `λ = 0`.
    pub fn to_cartan_bundle(&self, name: &str) -> Result<CartanBundle> {
        let n = self.n();
        CartanBundle::new(
            name,
            self.chart.clone(),
            &self.group,
            Coefficients::defining(&self.group),
            CartanGauge {
                a: self.coframe.clone(),
                lambda: Mat::zeros(n, self.group.dim()),
                closed_form: true,
            },
            None,
        )
    }
}

/// An `𝔥`-valued connection in the gauge: `x ↦ γ_x`, a `dim 𝔥 × m` matrix.
#[derive(Clone)]
pub struct ConnectionForm {
    pub gamma: MatFn,
}

impl fmt::Debug for ConnectionForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ConnectionForm")
    }
}

impl ConnectionForm {
    pub fn zero(dim_h: usize, m: usize) -> Self {
        Self {
            gamma: Arc::new(move |_| Ok(Mat::zeros(dim_h, m))),
        }
    }
}

/// `p⁻¹·v` for a frame `p`; the vertical part `ṗ` does not contribute.
pub fn tautological_form(p: &Mat, v: &Vector, p_dot: &Mat) -> Result<Vector> {
    if p.nrows() != v.len() || p_dot.shape() != p.shape() {
        return Err(Error::InvalidInput("frame, tangent and frame velocity shapes disagree".into()));
    }
    Ok(invert(p)? * v)
}

/// Classical torsion `dc + γ∧c` of a connection on an `H`-structure,
/// evaluated at `(x, h)` on the chart parts of `u` and `v`.
pub fn connection_torsion(
    gs: &GStructure,
    gamma: &ConnectionForm,
    p: &BundlePoint,
    u: &Vector,
    v: &Vector,
    tol: &Tolerances,
) -> Result<Vector> {
    let n = gs.n();
    let (ux, vx) = (u.rows(0, n).into_owned(), v.rows(0, n).into_owned());
    let coframe_v = |x: &Vector| -> Result<Mat> { Ok(column(gs.coframe_at(x)? * &vx)) };
    let coframe_u = |x: &Vector| -> Result<Mat> { Ok(column(gs.coframe_at(x)? * &ux)) };
    let dc = numkit::fd_partial(coframe_v, &p.x, &ux, tol.fd_step)? - numkit::fd_partial(coframe_u, &p.x, &vx, tol.fd_step)?;
    let c = gs.coframe_at(&p.x)?;
    let g = (gamma.gamma)(&p.x)?;
    let gu = gs.group.matrix_of(&(&g * &ux));
    let gv = gs.group.matrix_of(&(&g * &vx));
    let t = dc.column(0) + gu * &c * &vx - gv * &c * &ux;
    Ok(invert(&p.h)? * t)
}

fn column(v: Vector) -> Mat {
    Mat::from_column_slice(v.len(), 1, v.as_slice())
}

/// Decomposes a Cartan geometry modelled on `(H ⋉ ℝⁿ, H)` into an
/// `H`-structure and a connection.
pub fn cartan_to_gstructure(cb: &CartanBundle, tol: &Tolerances) -> Result<(GStructure, ConnectionForm)> {
    let model = require_model(cb)?;
    let h = model.h().clone();
    let n = h.ambient_dim();
    let semidirect = build_semidirect(&h, n)
        .map_err(|_| Error::Unsupported("model is not a semidirect product H ⋉ ℝⁿ".into()))?
        .0;
    let g = model.g();
    let same = g.ambient_dim() == semidirect.ambient_dim()
        && g.dim() == semidirect.dim()
        && g.basis().iter().zip(semidirect.basis()).all(|(a, b)| (a - b).norm() <= tol.exact_tol);
    if !same || cb.m() != n {
        return Err(Error::Unsupported(format!("{} is not modelled on H ⋉ ℝⁿ", cb.name)));
    }
    let dh = h.dim();
    let mut inj = Mat::zeros(dh + n, dh);
    inj.view_mut((0, 0), (dh, dh)).fill_with_identity();
    if (&cb.gauge.lambda - &inj).norm() > tol.exact_tol {
        return Err(Error::Unsupported("λ is not the inclusion of 𝔥".into()));
    }
    let a = cb.gauge.a.clone();
    let a2 = cb.gauge.a.clone();
    let coframe: MatFn = Arc::new(move |x: &Vector| Ok(a(x)?.rows(dh, n).into_owned()));
    let gamma: MatFn = Arc::new(move |x: &Vector| Ok(a2(x)?.rows(0, dh).into_owned()));
    Ok((GStructure::new(&h, cb.chart.clone(), coframe)?, ConnectionForm { gamma }))
}

/// The Cartan connection `γ + θ_taut` on an `H`-structure.
pub fn gstructure_to_cartan(gs: &GStructure, gamma: &ConnectionForm, name: &str) -> Result<CartanBundle> {
    let n = gs.n();
    let dh = gs.group.dim();
    let (_, inc) = build_semidirect(&gs.group, n)?;
    let model = ModelGeometry::adjoint(inc);
    let (c, g) = (gs.coframe.clone(), gamma.gamma.clone());
    let a: MatFn = Arc::new(move |x: &Vector| {
        let gx = g(x)?;
        let cx = c(x)?;
        if gx.shape() != (dh, n) {
            return Err(Error::InvalidInput(format!("connection must be {dh}×{n}")));
        }
        let mut out = Mat::zeros(dh + n, n);
        out.rows_mut(0, dh).copy_from(&gx);
        out.rows_mut(dh, n).copy_from(&cx);
        Ok(out)
    });
    let mut lambda = Mat::zeros(dh + n, dh);
    lambda.view_mut((0, 0), (dh, dh)).fill_with_identity();
    CartanBundle::new(
        name,
        gs.chart.clone(),
        &gs.group,
        Coefficients::model(&model),
        CartanGauge {
            a,
            lambda,
            closed_form: true,
        },
        Some(model),
    )
}

/// Pulls the Maurer–Cartan form of `G` back along `(x, h) ↦ σ(x)·h` with
/// `σ(x) = exp(Σ xᵢ lᵢ)` on the box `(−r, r)ᵏ`.
pub fn model_to_cartan(m: &ModelGeometry, split: &ReductiveSplitting, chart_radius: f64, name: &str) -> Result<CartanBundle> {
    let g = m.g().clone();
    let l: Vec<Mat> = (0..split.dim_l())
        .map(|i| g.matrix_of(&split.l_coords.column(i).into_owned()))
        .collect();
    if !(chart_radius.is_finite() && chart_radius > 0.0) {
        return Err(Error::InvalidInput("chart radius must be positive".into()));
    }
    let reach: f64 = chart_radius * l.iter().map(|b| b.norm()).sum::<f64>();
    if reach >= std::f64::consts::PI {
        return Err(Error::Domain(format!(
            "chart radius {chart_radius} lets the section wrap past the principal logarithm"
        )));
    }
    let k = l.len();
    let g2 = g.clone();
    let a: MatFn = Arc::new(move |x: &Vector| {
        let mut y = Mat::zeros(g2.ambient_dim(), g2.ambient_dim());
        for (xi, b) in x.iter().zip(&l) {
            y += b * *xi;
        }
        let mut out = Mat::zeros(g2.dim(), k);
        let mut sigma_inv = None;
        for (i, b) in l.iter().enumerate() {
            let (sigma, d) = numkit::matrix_exp_with_derivative(&y, b)?;
            if sigma_inv.is_none() {
                sigma_inv = Some(invert(&sigma)?);
            }
            let col = g2.coords_of(&(sigma_inv.as_ref().expect("set above") * d))?;
            out.set_column(i, &col);
        }
        Ok(out)
    });
    CartanBundle::new(
        name,
        ChartBox::cube(k, chart_radius)?,
        m.h(),
        Coefficients::model(m),
        CartanGauge {
            a,
            lambda: m.pair.h_coords.clone(),
            closed_form: true,
        },
        Some(m.clone()),
    )
}

/// `φ_p: T_xM → 𝔤/𝔥` and its inverse, with `𝔤/𝔥` identified with the
/// complement `𝔩` of `quotient`.
#[derive(Debug, Clone)]
pub struct TangentIso {
    pub phi: Mat,
    pub inverse: Mat,
}

pub fn tangent_iso_phi(cb: &CartanBundle, p: &BundlePoint, quotient: &ReductiveSplitting, tol: &Tolerances) -> Result<TangentIso> {
    require_model(cb)?;
    let th = cb.theta_matrix(p)?;
    let (rank, _) = numkit::rank_nullspace(&th, tol)?;
    if rank != cb.tangent_dim() || th.nrows() != th.ncols() {
        return Err(Error::Unsupported("θ has a kernel, so it is not a Cartan geometry".into()));
    }
    let phi = &quotient.l_coord_map * th.columns(0, cb.m());
    let inverse = phi
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateForm("φ_p is singular".into()))?;
    Ok(TangentIso { phi, inverse })
}

/// Curvature at `(x, e)` on the coordinate vectors `∂ᵢ`, `∂ⱼ`.
pub fn coordinate_curvature(cb: &CartanBundle, x: &Vector, i: usize, j: usize, tol: &Tolerances) -> Result<Vector> {
    let p = BundlePoint::new(x.clone(), cb.group.identity());
    let (mut u, mut v) = (Vector::zeros(cb.tangent_dim()), Vector::zeros(cb.tangent_dim()));
    u[i] = 1.0;
    v[j] = 1.0;
    curvature(cb, &p, &u, &v, tol)
}
