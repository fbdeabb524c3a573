//! Ready-made geometries with golden expectations.
//!
//! Names accepted by [`build`]: `euclidean2`, `euclidean3`, `affine2`,
//! `sphere2`, `hyperbolic2`, `riemannian_flat2`, `riemannian_flat3`,
//! `riemannian_halfplane`, `perturbed_euclidean`, `affine2_torsion` and
//! `connection_counterexample`. The forms `euclidean(n)`, `affine(n)` and
//! `riemannian_flat(n)` are accepted as well.

use std::sync::Arc;

use crate::cartan::{
    self, gstructure_to_cartan, model_to_cartan, CartanBundle, CartanGauge, ChartBox, Coefficients, ConnectionForm,
    GStructure, MatFn,
};
use crate::error::{Error, Result};
use crate::groupoid::{self, GroupoidRep, PrincipalAction};
use crate::klein::{reductive_split, ModelGeometry, ReductiveSplitting};
use crate::liegroups::{
    affine, general_linear, lorentz_so21, orthogonal, special_euclidean, special_orthogonal, GroupRef,
    SubgroupInclusion,
};
use crate::numkit::{Mat, Tolerances, Vector};
use crate::verify::{CheckReport, Sampler, Verdict};

pub const NAMES: &[&str] = &[
    "euclidean2",
    "euclidean3",
    "affine2",
    "sphere2",
    "hyperbolic2",
    "riemannian_flat2",
    "riemannian_flat3",
    "riemannian_halfplane",
    "perturbed_euclidean",
    "affine2_torsion",
    "connection_counterexample",
];

/// What kind of object an entry is, which fixes its expected verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    /// `θ` is a pointwise isomorphism onto `𝔤`.
    CartanGeometry,
    /// Tautological form of an `H`-structure, `ker θ` vertical.
    HStructure,
    /// A connection used as `θ`; its kernel is horizontal.
    ConnectionCounterexample,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub kind: EntryKind,
    pub bundle: CartanBundle,
    pub model: Option<ModelGeometry>,
    pub split: Option<ReductiveSplitting>,
    pub gstructure: Option<(GStructure, ConnectionForm)>,
    pub symbol_dim: usize,
    pub flat: Option<bool>,
    pub torsion_free: Option<bool>,
}

impl CatalogEntry {
    fn geometry(name: &str, bundle: CartanBundle, flat: bool, torsion_free: Option<bool>) -> Result<Self> {
        let model = bundle.model.clone();
        let split = match &model {
            Some(m) => Some(reductive_split(m, None, &Sampler::new(0), &Tolerances::default())?),
            None => None,
        };
        Ok(Self {
            name: name.to_owned(),
            kind: EntryKind::CartanGeometry,
            bundle,
            model,
            split,
            gstructure: None,
            symbol_dim: 0,
            flat: Some(flat),
            torsion_free,
        })
    }
}

/// Builds a catalog entry by name.
pub fn build(name: &str) -> Result<CatalogEntry> {
    let canonical = canonical_name(name);
    match canonical.as_str() {
        "euclidean2" => euclidean(2),
        "euclidean3" => euclidean(3),
        "affine2" => affine_model(2),
        "sphere2" => sphere2(),
        "hyperbolic2" => hyperbolic2(),
        "riemannian_flat2" => riemannian_flat(2),
        "riemannian_flat3" => riemannian_flat(3),
        "riemannian_halfplane" => riemannian(
            "riemannian_halfplane",
            ChartBox::new(vec![-1.0, 0.5], vec![1.0, 1.5])?,
            Arc::new(|x: &Vector| Ok(Mat::identity(2, 2) / (x[1] * x[1]))),
        ),
        "perturbed_euclidean" => perturbed_euclidean("perturbed_euclidean", Arc::new(|x: &Vector| x[1])),
        "affine2_torsion" => affine2_torsion(),
        "connection_counterexample" => connection_counterexample(),
        _ => Err(Error::Catalog(format!("unknown catalog entry '{name}'"))),
    }
}

fn canonical_name(name: &str) -> String {
    let trimmed = name.trim();
    match trimmed.split_once('(') {
        Some((base, rest)) => format!("{base}{}", rest.trim_end_matches(')').trim()),
        None => trimmed.to_owned(),
    }
}

fn model_entry(name: &str, model: ModelGeometry, radius: f64) -> Result<CatalogEntry> {
    let split = reductive_split(&model, None, &Sampler::new(0), &Tolerances::default())?;
    let bundle = model_to_cartan(&model, &split, radius, name)?;
    CatalogEntry::geometry(name, bundle, true, Some(true))
}

pub fn euclidean(n: usize) -> Result<CatalogEntry> {
    if !(2..=3).contains(&n) {
        return Err(Error::Catalog(format!("euclidean({n}) is not in the catalog")));
    }
    model_entry(&format!("euclidean{n}"), ModelGeometry::adjoint(special_euclidean(n)?.1), 1.0)
}

pub fn affine_model(n: usize) -> Result<CatalogEntry> {
    if n != 2 {
        return Err(Error::Catalog(format!("affine({n}) is not in the catalog")));
    }
    let mut e = model_entry("affine2", ModelGeometry::adjoint(affine(2)?.1), 1.0)?;
    let (gs, gamma) = cartan::cartan_to_gstructure(&e.bundle, &Tolerances::default())?;
    e.gstructure = Some((gs, gamma));
    Ok(e)
}

fn rotation_quotient(name: &str, g: GroupRef) -> Result<CatalogEntry> {
    let inc = SubgroupInclusion::new(&special_orthogonal(2)?, &g, 0)?;
    let mut e = model_entry(name, ModelGeometry::adjoint(inc), 0.5)?;
    // curved model, so torsion is not a meaningful flag
    e.torsion_free = None;
    Ok(e)
}

/// `SO(3)/SO(2)`.
pub fn sphere2() -> Result<CatalogEntry> {
    rotation_quotient("sphere2", special_orthogonal(3)?)
}

/// `SO(2,1)/SO(2)`.
pub fn hyperbolic2() -> Result<CatalogEntry> {
    rotation_quotient("hyperbolic2", lorentz_so21()?)
}

/// `O(n)`-structure of a metric `x ↦ g(x)`, with coframe `Lᵀ` from the
/// Cholesky factor `g = LLᵀ`.
pub fn riemannian(name: &str, chart: ChartBox, metric: MatFn) -> Result<CatalogEntry> {
    let n = chart.dim();
    let coframe: MatFn = Arc::new(move |x: &Vector| {
        let g = metric(x)?;
        let chol = g
            .cholesky()
            .ok_or_else(|| Error::Domain(format!("metric is not positive definite at {:?}", x.as_slice())))?;
        Ok(chol.l().transpose())
    });
    let gs = GStructure::new(&orthogonal(n)?, chart, coframe)?;
    let bundle = gs.to_cartan_bundle(name)?;
    let dim_h = gs.group.dim();
    Ok(CatalogEntry {
        name: name.to_owned(),
        kind: EntryKind::HStructure,
        bundle,
        model: None,
        split: None,
        gstructure: Some((gs, ConnectionForm::zero(dim_h, n))),
        symbol_dim: dim_h,
        flat: None,
        torsion_free: None,
    })
}

pub fn riemannian_flat(n: usize) -> Result<CatalogEntry> {
    if !(2..=3).contains(&n) {
        return Err(Error::Catalog(format!("riemannian_flat({n}) is not in the catalog")));
    }
    riemannian(
        &format!("riemannian_flat{n}"),
        ChartBox::cube(n, 1.0)?,
        Arc::new(move |_| Ok(Mat::identity(n, n))),
    )
}

/// The Euclidean gauge on `SE(2)/SO(2)` plus `f(x)·J·dx`.
pub fn perturbed_euclidean(name: &str, f: Arc<dyn Fn(&Vector) -> f64 + Send + Sync>) -> Result<CatalogEntry> {
    let model = ModelGeometry::adjoint(special_euclidean(2)?.1);
    let a: MatFn = Arc::new(move |x: &Vector| Ok(Mat::from_row_slice(3, 2, &[f(x), 0.0, 1.0, 0.0, 0.0, 1.0])));
    let bundle = CartanBundle::new(
        name,
        ChartBox::cube(2, 1.0)?,
        model.h(),
        Coefficients::model(&model),
        CartanGauge {
            a,
            lambda: model.pair.h_coords.clone(),
            closed_form: true,
        },
        Some(model.clone()),
    )?;
    CatalogEntry::geometry(name, bundle, false, Some(true))
}

/// An affine structure with a sheared coframe and a non-flat connection.
pub fn affine2_torsion() -> Result<CatalogEntry> {
    let gs = GStructure::new(
        &general_linear(2)?,
        ChartBox::cube(2, 0.5)?,
        Arc::new(|x: &Vector| Ok(Mat::from_row_slice(2, 2, &[1.0 + x[1] * x[1], 0.3 * x[0], 0.0, 1.0 + 0.5 * x[0]]))),
    )?;
    let gamma = ConnectionForm {
        gamma: Arc::new(|x: &Vector| Ok(Mat::from_row_slice(4, 2, &[x[0], 0.0, 0.2, x[1], 0.0, 0.1, -x[1], 0.3]))),
    };
    let bundle = gstructure_to_cartan(&gs, &gamma, "affine2_torsion")?;
    let mut e = CatalogEntry::geometry("affine2_torsion", bundle, false, Some(false))?;
    e.gstructure = Some((gs, gamma));
    Ok(e)
}

/// The flat connection `γ = d(xy)` on the trivial `SO(2)`-bundle, used as
/// `θ` with `V = 𝔰𝔬(2)`. Its kernel is horizontal, not vertical.
pub fn connection_counterexample() -> Result<CatalogEntry> {
    let h = special_euclidean(2)?.1.sub;
    let bundle = CartanBundle::new(
        "connection_counterexample",
        ChartBox::cube(2, 1.0)?,
        &h,
        Coefficients::adjoint(&h),
        CartanGauge {
            a: Arc::new(|x: &Vector| Ok(Mat::from_row_slice(1, 2, &[x[1], x[0]]))),
            lambda: Mat::identity(1, 1),
            closed_form: true,
        },
        None,
    )?;
    Ok(CatalogEntry {
        name: "connection_counterexample".into(),
        kind: EntryKind::ConnectionCounterexample,
        bundle,
        model: None,
        split: None,
        gstructure: None,
        symbol_dim: 2,
        flat: None,
        torsion_free: None,
    })
}

/// Runs the standard suites on an entry; check names are prefixed with the
/// suite, e.g. `bundle/ker_theta_vertical`.
pub fn standard_report(entry: &CatalogEntry, sampler: &Sampler, tol: &Tolerances) -> Vec<CheckReport> {
    let cb = &entry.bundle;
    let w = groupoid::omega_from_theta(cb);
    let rep = GroupoidRep::from_coefficients(&cb.coeffs);
    let mut out = Vec::new();
    let mut push = |suite: &str, reports: Vec<CheckReport>| {
        out.extend(reports.into_iter().map(|mut r| {
            r.check = format!("{suite}/{}", r.check);
            r
        }))
    };
    push("bundle", cartan::check_cartan_bundle(cb, sampler, tol));
    if let Some(m) = &entry.model {
        push("geometry", cartan::check_cartan_geometry(cb, m, sampler, tol));
    }
    let mut forward = vec![groupoid::check_multiplicative(&w, &rep, sampler, tol)];
    forward.extend(groupoid::check_equivariance_lemma(&w, &rep, sampler, tol));
    forward.extend(groupoid::check_transversality(&w, sampler, tol));
    push("forward", forward);
    push("pfaffian", groupoid::check_pfaffian(&w, &rep, sampler, tol));
    push("splitting", groupoid::rep_splitting_check(cb, &w, sampler, tol));
    push("group_action", groupoid::action_suite(&PrincipalAction::Group(cb.clone()), sampler, tol));
    push(
        "groupoid_action",
        groupoid::action_suite(&PrincipalAction::Groupoid(cb.clone(), w.clone()), sampler, tol),
    );
    out
}

/// Expected verdicts of [`standard_report`], in order.
pub fn expected_report(name: &str) -> Result<Vec<(String, Verdict)>> {
    use Verdict::{Fail, Pass};
    let entry = build(name)?;
    let kind = entry.kind;
    let vertical_kernel = kind != EntryKind::ConnectionCounterexample;
    // θ kills vertical vectors only for H-structures
    let lambda_zero = kind == EntryKind::HStructure;
    // ρ is trivial only for SO(2) acting on its own algebra
    let rho_trivial = kind == EntryKind::ConnectionCounterexample;
    let ok = |b: bool| if b { Pass } else { Fail };

    let mut out: Vec<(&str, Verdict)> = vec![
        ("bundle/surjective", Pass),
        ("bundle/ker_theta_vertical", ok(vertical_kernel)),
        ("bundle/involutive", Pass),
        ("bundle/equivariant", Pass),
    ];
    if entry.model.is_some() {
        out.extend([
            ("geometry/dimension", Pass),
            ("geometry/pointwise_isomorphism", Pass),
            ("geometry/equivariant", Pass),
            ("geometry/rho_match", Pass),
            ("geometry/fundamental_vector", Pass),
        ]);
    }
    out.extend([
        ("forward/multiplicative", Pass),
        ("forward/right_translation", Pass),
        ("forward/left_translation", Pass),
        ("forward/s_transversal", Pass),
        ("forward/t_transversal", Pass),
        ("forward/constant_rank", Pass),
        ("pfaffian/multiplicative", Pass),
        ("pfaffian/constant_rank", Pass),
        ("pfaffian/symbol_subalgebroid", Pass),
        ("pfaffian/full", Pass),
        ("pfaffian/lie_type", ok(vertical_kernel)),
        ("splitting/splitting_dimension", Pass),
        ("splitting/phi_equivariance", ok(vertical_kernel)),
        ("group_action/action_multiplicative", ok(lambda_zero)),
        ("group_action/action_fibrewise", Pass),
        ("group_action/invariance_literal", ok(rho_trivial)),
        ("group_action/infinitesimal_action", ok(lambda_zero)),
        ("group_action/image_equals_vertical", Pass),
        ("group_action/basic_form", Pass),
        ("group_action/basic_descent", Pass),
        ("group_action/symbol_isomorphism", ok(lambda_zero)),
        ("groupoid_action/action_multiplicative", Pass),
        ("groupoid_action/infinitesimal_action", Pass),
        ("groupoid_action/image_equals_vertical", Pass),
        ("groupoid_action/symbol_isomorphism", Pass),
    ]);
    Ok(out.into_iter().map(|(c, v)| (c.to_owned(), v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_build() {
        for name in NAMES {
            let e = build(name).unwrap();
            assert_eq!(e.name, *name);
        }
        assert_eq!(build("euclidean(2)").unwrap().name, "euclidean2");
        assert!(matches!(build("projective2"), Err(Error::Catalog(_))));
        assert!(matches!(build("euclidean(7)"), Err(Error::Catalog(_))));
    }

    #[test]
    fn halfplane_coframe_is_scaled_identity() {
        let e = build("riemannian_halfplane").unwrap();
        let x = Vector::from_vec(vec![0.0, 0.8]);
        let a = e.bundle.a(&x).unwrap();
        assert!((a - Mat::identity(2, 2) / 0.8).norm() < 1e-14);
    }

    #[test]
    fn euclidean2_matches_expectation() {
        let e = build("euclidean2").unwrap();
        let got: Vec<(String, Verdict)> = standard_report(&e, &Sampler::new(42).with_counts(10, 10, 10), &Tolerances::default())
            .into_iter()
            .map(|r| (r.check, r.verdict))
            .collect();
        assert_eq!(got, expected_report("euclidean2").unwrap());
    }
}
