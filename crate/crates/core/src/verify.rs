//! Seeded sampling and structured check reports.
//!
//! Every check draws from its own ChaCha stream, selected by hashing the
//! check name, so reports do not depend on the order or concurrency in which
//! checks run.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cartan::{self, CartanBundle};
use crate::error::{Error, Result};
use crate::groupoid::{self, GroupoidRep, MultForm, PrincipalAction};
use crate::liegroups::MatrixLieGroup;
use crate::numkit::{self, Mat, Tolerances, Vector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sampler {
    pub seed: u64,
    pub points: usize,
    pub pairs: usize,
    pub group_elements: usize,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            points: 100,
            pairs: 200,
            group_elements: 50,
        }
    }

    pub fn with_counts(mut self, points: usize, pairs: usize, group_elements: usize) -> Self {
        self.points = points;
        self.pairs = pairs;
        self.group_elements = group_elements;
        self
    }

    /// Independent stream for the named check.
    pub fn stream(&self, check: &str) -> SampleStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(fnv1a(check.as_bytes()));
        SampleStream { rng }
    }
}

impl Default for Sampler {
    fn default() -> Self {
        Self::new(42)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub struct SampleStream {
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    /// Vector with entries uniform in `[-half_width, half_width]`.
    pub fn vector(&mut self, dim: usize, half_width: f64) -> Vector {
        Vector::from_fn(dim, |_, _| self.uniform(-half_width, half_width))
    }

    /// Uniform point of the box shrunk by `margin` on every side.
    pub fn point_in_box(&mut self, lower: &[f64], upper: &[f64], margin: f64) -> Vector {
        Vector::from_fn(lower.len(), |i, _| {
            let (lo, hi) = (lower[i] + margin, upper[i] - margin);
            if hi > lo {
                self.uniform(lo, hi)
            } else {
                0.5 * (lower[i] + upper[i])
            }
        })
    }

    /// Algebra coordinates uniform in `[-0.5, 0.5]`.
    pub fn algebra(&mut self, group: &MatrixLieGroup) -> Vector {
        self.vector(group.dim(), 0.5)
    }

    /// Exponential of a sampled algebra element; lies in the identity
    /// component.
    pub fn group_element(&mut self, group: &MatrixLieGroup) -> Result<Mat> {
        let x = self.algebra(group);
        group.exp_coords(&x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub anchor: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub witness: Value,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Accumulates residuals of one check and keeps the worst witness.
#[derive(Debug)]
pub struct Tracker {
    check: String,
    anchor: String,
    tolerance: f64,
    samples: usize,
    max_residual: f64,
    witness: Value,
}

impl Tracker {
    pub fn new(check: &str, anchor: &str, tolerance: f64) -> Self {
        Self {
            check: check.to_owned(),
            anchor: anchor.to_owned(),
            tolerance,
            samples: 0,
            max_residual: 0.0,
            witness: Value::Null,
        }
    }

    pub fn record(&mut self, residual: f64, witness: impl FnOnce() -> Value) {
        self.samples += 1;
        let worse = if residual.is_nan() {
            !self.max_residual.is_infinite()
        } else {
            residual > self.max_residual || (self.witness.is_null() && self.samples == 1)
        };
        if worse {
            self.max_residual = if residual.is_nan() { f64::INFINITY } else { residual };
            self.witness = witness();
        }
    }

    /// Records an evaluation that could not be completed.
    pub fn record_error(&mut self, err: &crate::Error, witness: impl FnOnce() -> Value) {
        let mut w = witness();
        if let Value::Object(map) = &mut w {
            map.insert("error".into(), json!(err.to_string()));
        } else {
            w = json!({ "error": err.to_string(), "at": w });
        }
        self.record(f64::INFINITY, || w);
    }

    /// Folds a fallible residual into the tracker.
    pub fn record_result(&mut self, residual: Result<f64>, witness: impl FnOnce() -> Value) {
        match residual {
            Ok(r) => self.record(r, witness),
            Err(e) => self.record_error(&e, witness),
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    pub fn finish(self) -> CheckReport {
        let passed = self.max_residual < self.tolerance;
        // JSON has no infinities; clamp so reports stay serializable.
        let max_residual = if self.max_residual.is_finite() {
            self.max_residual
        } else {
            f64::MAX
        };
        CheckReport {
            check: self.check,
            anchor: self.anchor,
            samples: self.samples,
            max_residual,
            tolerance: self.tolerance,
            verdict: if passed { Verdict::Pass } else { Verdict::Fail },
            witness: self.witness,
        }
    }
}

pub fn vec_json(v: &Vector) -> Value {
    json!(v.iter().copied().collect::<Vec<f64>>())
}

pub fn mat_json(m: &Mat) -> Value {
    json!(numkit::mat_to_rows(m))
}

pub fn json_vec(v: &Value) -> Option<Vector> {
    let items = v.as_array()?;
    let xs: Option<Vec<f64>> = items.iter().map(Value::as_f64).collect();
    Some(Vector::from_vec(xs?))
}

pub fn json_mat(v: &Value) -> Option<Mat> {
    let rows: Option<Vec<Vec<f64>>> = v
        .as_array()?
        .iter()
        .map(|r| r.as_array()?.iter().map(Value::as_f64).collect())
        .collect();
    numkit::rows_to_mat(&rows?).ok()
}

/// Serializes reports as a pretty JSON array.
pub fn reports_to_json(reports: &[CheckReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports are always serializable")
}

/// What a suite runs against.
#[derive(Debug, Clone, Copy)]
pub enum SuiteTarget<'a> {
    Bundle(&'a CartanBundle),
    Form(&'a MultForm, &'a GroupoidRep),
    Action(&'a PrincipalAction),
}

pub const BUNDLE_CHECKS: &[&str] = &["cartan_bundle", "cartan_geometry", "splitting"];
pub const FORM_CHECKS: &[&str] = &["multiplicative", "equivariance_lemma", "transversality", "pfaffian"];
pub const ACTION_CHECKS: &[&str] = &["action"];

/// Runs the named checks in order and concatenates their reports.
///
/// Every name is validated before anything runs; an unknown name or one that
/// does not apply to the target is a configuration error. Failing checks are
/// reported, never raised.
pub fn run_suite(target: SuiteTarget<'_>, checks: &[&str], sampler: &Sampler, tol: &Tolerances) -> Result<Vec<CheckReport>> {
    let allowed = match target {
        SuiteTarget::Bundle(_) => BUNDLE_CHECKS,
        SuiteTarget::Form(..) => FORM_CHECKS,
        SuiteTarget::Action(_) => ACTION_CHECKS,
    };
    for c in checks {
        if !allowed.contains(c) {
            return Err(Error::Config(format!("check '{c}' does not apply to this target")));
        }
    }
    if let (SuiteTarget::Bundle(cb), true) = (target, checks.contains(&"cartan_geometry")) {
        if cb.model.is_none() {
            return Err(Error::Config(format!("{} has no model geometry", cb.name)));
        }
    }
    let mut out = Vec::new();
    for c in checks {
        match target {
            SuiteTarget::Bundle(cb) => match *c {
                "cartan_bundle" => out.extend(cartan::check_cartan_bundle(cb, sampler, tol)),
                "cartan_geometry" => {
                    let model = cb.model.as_ref().expect("validated above");
                    out.extend(cartan::check_cartan_geometry(cb, model, sampler, tol));
                }
                _ => out.extend(groupoid::rep_splitting_check(cb, &groupoid::omega_from_theta(cb), sampler, tol)),
            },
            SuiteTarget::Form(w, rep) => match *c {
                "multiplicative" => out.push(groupoid::check_multiplicative(w, rep, sampler, tol)),
                "equivariance_lemma" => out.extend(groupoid::check_equivariance_lemma(w, rep, sampler, tol)),
                "transversality" => out.extend(groupoid::check_transversality(w, sampler, tol)),
                _ => out.extend(groupoid::check_pfaffian(w, rep, sampler, tol)),
            },
            SuiteTarget::Action(pa) => out.extend(groupoid::action_suite(pa, sampler, tol)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = Sampler::new(7);
        let a: Vec<f64> = (0..5).map(|_| s.stream("x").uniform(0.0, 1.0)).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let mut x = s.stream("x");
        let mut y = s.stream("y");
        assert_ne!(x.uniform(0.0, 1.0), y.uniform(0.0, 1.0));
    }

    #[test]
    fn tracker_keeps_worst_witness() {
        let mut t = Tracker::new("demo", "a = b", 1e-9);
        t.record(1e-12, || json!({"i": 0}));
        t.record(1e-3, || json!({"i": 1}));
        t.record(1e-6, || json!({"i": 2}));
        let r = t.finish();
        assert_eq!(r.samples, 3);
        assert_eq!(r.witness, json!({"i": 1}));
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn errors_fail_and_serialize() {
        let mut t = Tracker::new("demo", "a = b", 1e-9);
        t.record_error(&crate::Error::Domain("far".into()), || json!({"x": [1.0]}));
        let r = t.finish();
        assert!(!r.passed());
        assert!(reports_to_json(&[r]).contains("far"));
    }

    #[test]
    fn empty_tracker_passes() {
        assert!(Tracker::new("demo", "", 1e-9).finish().passed());
    }

    #[test]
    fn json_roundtrip_of_matrices() {
        let m = Mat::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.5]);
        assert_eq!(json_mat(&mat_json(&m)).unwrap(), m);
        let v = Vector::from_vec(vec![0.1, -2.0]);
        assert_eq!(json_vec(&vec_json(&v)).unwrap(), v);
    }

    #[test]
    fn run_suite_validates_and_is_deterministic() {
        let cb = crate::catalog::build("euclidean2").unwrap().bundle;
        let s = Sampler::new(42).with_counts(8, 8, 8);
        let tol = Tolerances::default();
        assert!(run_suite(SuiteTarget::Bundle(&cb), &[], &s, &tol).unwrap().is_empty());
        assert!(matches!(
            run_suite(SuiteTarget::Bundle(&cb), &["pfaffian"], &s, &tol),
            Err(Error::Config(_))
        ));
        let a = run_suite(SuiteTarget::Bundle(&cb), BUNDLE_CHECKS, &s, &tol).unwrap();
        let b = run_suite(SuiteTarget::Bundle(&cb), BUNDLE_CHECKS, &s, &tol).unwrap();
        assert!(a.iter().all(CheckReport::passed));
        assert_eq!(reports_to_json(&a), reports_to_json(&b));
        let flat = crate::catalog::build("riemannian_flat2").unwrap().bundle;
        assert!(matches!(
            run_suite(SuiteTarget::Bundle(&flat), &["cartan_geometry"], &s, &tol),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn corrupted_form_fails_with_serializable_witness() {
        let cb = crate::catalog::build("euclidean2").unwrap().bundle;
        let w = groupoid::omega_from_theta(&cb).corrupted(0.1);
        let rep = GroupoidRep::from_coefficients(&cb.coeffs);
        let s = Sampler::new(42).with_counts(8, 8, 8);
        let reports = run_suite(SuiteTarget::Form(&w, &rep), FORM_CHECKS, &s, &Tolerances::default()).unwrap();
        let bad = reports.iter().find(|r| !r.passed()).unwrap();
        let text = serde_json::to_string(&bad.witness).unwrap();
        assert!(text.contains("g1"));
    }
}
