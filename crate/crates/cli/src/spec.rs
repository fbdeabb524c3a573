//! JSON geometry specs.
//!
//! ```json
//! {"kind": "catalog", "name": "euclidean", "params": {"n": 2}}
//! {"kind": "custom",
//!  "chart": {"lower": [-1, -1], "upper": [1, 1]},
//!  "group": "SO(2)",
//!  "model": "semidirect",
//!  "coefficients": {"dim": 3, "rho": "model"},
//!  "gauge": {"a": [["y", "0"], ["1", "0"], ["0", "1"]]}}
//! ```

use std::path::Path;
use std::sync::Arc;

use cartan_core::cartan::{CartanBundle, CartanGauge, ChartBox, Coefficients, MatFn};
use cartan_core::catalog;
use cartan_core::klein::{inclusion_lambda, ModelGeometry};
use cartan_core::liegroups::{
    affine, build_semidirect, general_linear, lorentz_so21, orthogonal, special_euclidean, special_orthogonal,
    GroupRef, MatrixLieGroup, SubgroupInclusion,
};
use cartan_core::numkit::{rows_to_mat, Mat, Vector};
use serde::Deserialize;
use serde_json::Value;

use crate::expr::Expr;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub kind: Kind,
    pub name: Option<String>,
    pub params: Option<Value>,
    pub chart: Option<ChartSpec>,
    pub group: Option<GroupSpec>,
    pub model: Option<ModelSpec>,
    pub coefficients: Option<CoefficientSpec>,
    pub gauge: Option<GaugeSpec>,
}

#[derive(Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Catalog,
    Custom,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum GroupSpec {
    Named(String),
    Basis { basis: Vec<Vec<Vec<f64>>> },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    /// Only `"semidirect"`: `H ⋉ ℝⁿ`.
    Keyword(String),
    Ambient {
        ambient: GroupSpec,
        #[serde(default)]
        block_offset: usize,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub dim: usize,
    pub rho: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    pub a: Vec<Vec<String>>,
    pub lambda: Option<Vec<Vec<f64>>>,
}

/// Reads and resolves a spec file; errors name the offending field.
pub fn load(path: &Path) -> Result<CartanBundle, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let spec: GeometrySpec = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    resolve(&spec).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn resolve(spec: &GeometrySpec) -> Result<CartanBundle, String> {
    match spec.kind {
        Kind::Catalog => {
            let name = spec.name.as_deref().ok_or("name: required for catalog specs")?;
            let full = match &spec.params {
                None => name.to_owned(),
                Some(p) => {
                    let n = p
                        .get("n")
                        .and_then(Value::as_u64)
                        .ok_or("params.n: expected a non-negative integer")?;
                    format!("{name}({n})")
                }
            };
            let entry = catalog::build(&full).map_err(|e| format!("name: {e}"))?;
            Ok(entry.bundle)
        }
        Kind::Custom => resolve_custom(spec),
    }
}

fn named_group(name: &str) -> Result<GroupRef, String> {
    let compact: String = name.chars().filter(|c| !c.is_whitespace()).collect();
    if compact == "SO(2,1)" {
        return lorentz_so21().map_err(|e| e.to_string());
    }
    let (base, rest) = compact
        .split_once('(')
        .ok_or_else(|| format!("unknown group '{name}'"))?;
    let n: usize = rest
        .trim_end_matches(')')
        .parse()
        .map_err(|_| format!("bad dimension in '{name}'"))?;
    if n == 0 || n > 4 {
        return Err(format!("'{name}': only n = 1..4 is supported"));
    }
    let g = match base {
        "SO" => special_orthogonal(n),
        "O" => orthogonal(n),
        "GL" => general_linear(n),
        "SE" => special_euclidean(n).map(|(g, _)| g),
        "Aff" => affine(n).map(|(g, _)| g),
        _ => return Err(format!("unknown group '{name}'")),
    };
    g.map_err(|e| e.to_string())
}

fn group(spec: &GroupSpec) -> Result<GroupRef, String> {
    match spec {
        GroupSpec::Named(n) => named_group(n),
        GroupSpec::Basis { basis } => {
            let mats: Vec<Mat> = basis
                .iter()
                .enumerate()
                .map(|(i, m)| rows_to_mat(m).map_err(|e| format!("basis[{i}]: {e}")))
                .collect::<Result<_, _>>()?;
            let n = mats.first().map(Mat::nrows).ok_or("basis: must not be empty")?;
            MatrixLieGroup::new("custom", n, mats, 1e-9).map_err(|e| format!("basis: {e}"))
        }
    }
}

fn resolve_custom(spec: &GeometrySpec) -> Result<CartanBundle, String> {
    let chart = spec.chart.as_ref().ok_or("chart: required for custom specs")?;
    let chart = ChartBox::new(chart.lower.clone(), chart.upper.clone()).map_err(|e| format!("chart: {e}"))?;
    let m = chart.dim();
    let h = group(spec.group.as_ref().ok_or("group: required for custom specs")?).map_err(|e| format!("group: {e}"))?;
    let model = match &spec.model {
        None => None,
        Some(ModelSpec::Keyword(k)) if k == "semidirect" => {
            let (_, inc) = build_semidirect(&h, h.ambient_dim()).map_err(|e| format!("model: {e}"))?;
            Some(ModelGeometry::adjoint(inc))
        }
        Some(ModelSpec::Keyword(k)) => return Err(format!("model: unknown keyword '{k}'")),
        Some(ModelSpec::Ambient { ambient, block_offset }) => {
            let g = group(ambient).map_err(|e| format!("model.ambient: {e}"))?;
            let inc = SubgroupInclusion::new(&h, &g, *block_offset).map_err(|e| format!("model: {e}"))?;
            Some(ModelGeometry::adjoint(inc))
        }
    };
    let cs = spec.coefficients.as_ref().ok_or("coefficients: required for custom specs")?;
    let coeffs = match cs.rho.as_str() {
        "trivial" => Coefficients::trivial(cs.dim),
        "defining" => Coefficients::defining(&h),
        "adjoint" => Coefficients::adjoint(&h),
        "model" => Coefficients::model(model.as_ref().ok_or("coefficients.rho: \"model\" needs a model")?),
        other => return Err(format!("coefficients.rho: unknown selector '{other}'")),
    };
    if coeffs.dim != cs.dim {
        return Err(format!(
            "coefficients.dim: {} does not match the representation dimension {}",
            cs.dim, coeffs.dim
        ));
    }
    let gauge = spec.gauge.as_ref().ok_or("gauge: required for custom specs")?;
    if gauge.a.len() != cs.dim {
        return Err(format!("gauge.a: expected {} rows, found {}", cs.dim, gauge.a.len()));
    }
    let mut table = Vec::with_capacity(cs.dim);
    for (i, row) in gauge.a.iter().enumerate() {
        if row.len() != m {
            return Err(format!("gauge.a[{i}]: expected {m} entries, found {}", row.len()));
        }
        let mut parsed = Vec::with_capacity(m);
        for (j, src) in row.iter().enumerate() {
            let e = Expr::parse(src).map_err(|e| format!("gauge.a[{i}][{j}]: {e}"))?;
            if let Some(k) = e.max_coord() {
                if k >= m {
                    return Err(format!("gauge.a[{i}][{j}]: coordinate x{k} on a {m}-dimensional chart"));
                }
            }
            parsed.push(e);
        }
        table.push(parsed);
    }
    let lambda = match (&gauge.lambda, &model) {
        (Some(rows), _) => rows_to_mat(rows).map_err(|e| format!("gauge.lambda: {e}"))?,
        (None, Some(mg)) => inclusion_lambda(mg),
        (None, None) => return Err("gauge.lambda: required without a model".into()),
    };
    let table = Arc::new(table);
    let a: MatFn = Arc::new(move |x: &Vector| {
        let xs = x.as_slice();
        Ok(Mat::from_fn(table.len(), table[0].len(), |i, j| table[i][j].eval(xs)))
    });
    let name = spec.name.clone().unwrap_or_else(|| "custom".into());
    CartanBundle::new(
        name,
        chart,
        &h,
        coeffs,
        CartanGauge {
            a,
            lambda,
            closed_form: true,
        },
        model,
    )
    .map_err(|e| e.to_string())
}
