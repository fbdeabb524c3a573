//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the lines are always printed; the process exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use cartan_core::cartan::{self, CartanBundle};
use cartan_core::catalog::{self, CatalogEntry, EntryKind};
use cartan_core::groupoid::{self, GroupoidRep, MultForm, PrincipalAction};
use cartan_core::numkit::Tolerances;
use cartan_core::verify::{CheckReport, Sampler};

const EXACT: f64 = 1e-9;
const FD: f64 = 1e-4;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn tol() -> Tolerances {
    Tolerances::default()
}

fn sampler() -> Sampler {
    Sampler::new(42)
}

fn entries() -> Vec<CatalogEntry> {
    catalog::NAMES.iter().map(|n| catalog::build(n).expect("catalog entry builds")).collect()
}

/// Entries whose `θ` satisfies the Cartan-bundle axioms.
fn bundle_entries() -> Vec<CatalogEntry> {
    entries()
        .into_iter()
        .filter(|e| e.kind != EntryKind::ConnectionCounterexample)
        .collect()
}

fn induced(cb: &CartanBundle) -> (MultForm, GroupoidRep) {
    (groupoid::omega_from_theta(cb), GroupoidRep::from_coefficients(&cb.coeffs))
}

/// Failing reports, tagged with the entry name.
fn failures(entry: &str, reports: &[CheckReport]) -> Vec<String> {
    reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{entry}/{} ({:.2e})", r.check, r.max_residual))
        .collect()
}

fn worst(reports: &[CheckReport]) -> f64 {
    reports.iter().map(|r| r.max_residual).fold(0.0, f64::max)
}

fn summarize(failed: Vec<String>, detail: String) -> Outcome {
    if failed.is_empty() {
        Outcome::new(true, detail)
    } else {
        Outcome::new(false, format!("failed: {}", failed.join(", ")))
    }
}

fn model_flatness() -> Outcome {
    let t = tol();
    let mut max: f64 = 0.0;
    let mut samples = 0;
    for name in ["euclidean(2)", "euclidean(3)", "sphere2", "hyperbolic2"] {
        let cb = catalog::build(name).unwrap().bundle;
        let mut s = sampler().stream(&format!("flatness/{name}"));
        for _ in 0..100 {
            let p = cb.sample_point(&mut s, &t).unwrap();
            let (u, v) = (cb.sample_tangent(&mut s), cb.sample_tangent(&mut s));
            max = max.max(cartan::curvature(&cb, &p, &u, &v, &t).unwrap().amax());
            samples += 1;
        }
    }
    Outcome::new(max < FD, format!("max |Ω| = {max:.2e} over {samples} triples (tol {FD:.0e})"))
}

fn axiom_suites() -> Outcome {
    let (s, t) = (sampler(), tol());
    let mut failed = Vec::new();
    let (mut exact, mut fd): (f64, f64) = (0.0, 0.0);
    for e in bundle_entries() {
        let mut reports = cartan::check_cartan_bundle(&e.bundle, &s, &t);
        if let Some(m) = &e.model {
            reports.extend(cartan::check_cartan_geometry(&e.bundle, m, &s, &t));
        }
        for r in &reports {
            let limit = if r.check == "involutive" { FD } else { EXACT };
            if r.check == "involutive" {
                fd = fd.max(r.max_residual);
            } else {
                exact = exact.max(r.max_residual);
            }
            if !(r.passed() && r.max_residual < limit) {
                failed.push(format!("{}/{}", e.name, r.check));
            }
        }
    }
    summarize(failed, format!("exact {exact:.2e}, involutivity {fd:.2e}"))
}

fn forward_correspondence() -> Outcome {
    let (s, t) = (sampler(), tol());
    let mut failed = Vec::new();
    let mut exact: f64 = 0.0;
    for e in bundle_entries() {
        let (w, rep) = induced(&e.bundle);
        let mut reports = vec![groupoid::check_multiplicative(&w, &rep, &s, &t)];
        reports.extend(groupoid::check_equivariance_lemma(&w, &rep, &s, &t));
        reports.extend(groupoid::check_transversality(&w, &s, &t));
        let pf = groupoid::check_pfaffian(&w, &rep, &s, &t);
        assert_eq!(pf.len(), 5);
        reports.extend(pf);
        exact = exact.max(
            reports
                .iter()
                .filter(|r| r.check != "symbol_subalgebroid")
                .map(|r| r.max_residual)
                .fold(0.0, f64::max),
        );
        failed.extend(failures(&e.name, &reports));
    }
    summarize(failed, format!("exact-path max {exact:.2e}"))
}

fn roundtrip() -> Outcome {
    let (s, t) = (sampler(), tol());
    let mut failed = Vec::new();
    let mut max: f64 = 0.0;
    for e in bundle_entries() {
        let cb = &e.bundle;
        let (w, rep) = induced(cb);
        let rebuilt = match groupoid::pfaffian_to_cartan(&w, &rep, &cb.chart.center(), &s, &t) {
            Ok(b) => b,
            Err(err) => {
                failed.push(format!("{}: {err}", e.name));
                continue;
            }
        };
        let mut st = s.stream(&format!("roundtrip/{}", e.name));
        for _ in 0..100 {
            let p = cb.sample_point(&mut st, &t).unwrap();
            let r = (cb.theta_matrix(&p).unwrap() - rebuilt.theta_matrix(&p).unwrap()).amax();
            max = max.max(r);
            if r >= EXACT {
                failed.push(format!("{} ({r:.2e})", e.name));
                break;
            }
        }
    }
    summarize(failed, format!("max θ difference {max:.2e} over 100 points per entry"))
}

fn symbol_dimensions() -> Outcome {
    let t = tol();
    let mut failed = Vec::new();
    for e in bundle_entries() {
        let (w, _) = induced(&e.bundle);
        let expected = match e.kind {
            EntryKind::CartanGeometry => 0,
            _ => e.bundle.group.dim(),
        };
        let mut s = sampler().stream(&format!("symbol/{}", e.name));
        let c = &e.bundle.chart;
        for _ in 0..100 {
            let x = s.point_in_box(&c.lower, &c.upper, 4.0 * t.fd_step);
            let d = groupoid::symbol_space(&w, &x, &t).unwrap().dim();
            if d != expected {
                failed.push(format!("{}: dim {d}, expected {expected}", e.name));
                break;
            }
            if expected == 0 {
                let g = w.groupoid.sample_arrow(&mut s, &t).unwrap();
                let (ds, dt) = groupoid::intersection_dims(&w, &g, &t).unwrap();
                if ds != 0 || dt != 0 {
                    failed.push(format!("{}: intersections ({ds}, {dt})", e.name));
                    break;
                }
            }
        }
    }
    summarize(failed, "Cartan geometries 0, H-structures dim 𝔥, intersections trivial".into())
}

fn unit_algebroid() -> Outcome {
    let t = tol();
    let (mut singular, mut anchor, mut adjoint): (Vec<String>, f64, f64) = (Vec::new(), 0.0, 0.0);
    for e in entries().into_iter().filter(|e| e.kind == EntryKind::CartanGeometry) {
        let (w, rep) = induced(&e.bundle);
        let mut s = sampler().stream(&format!("unit_algebroid/{}", e.name));
        let c = &e.bundle.chart;
        for _ in 0..20 {
            let x = s.point_in_box(&c.lower, &c.upper, 4.0 * t.fd_step);
            let ua = groupoid::unit_algebroid(&w, &x, &t).unwrap();
            if !ua.invertible {
                singular.push(e.name.clone());
            }
            anchor = anchor.max(ua.anchor.norm());
            let g = s.group_element(&e.bundle.group).unwrap();
            adjoint = adjoint.max(groupoid::adjoint_compatibility_residual(&w, &rep, &x, &g).unwrap());
        }
    }
    singular.dedup();
    let pass = singular.is_empty() && anchor < EXACT && adjoint < EXACT;
    Outcome::new(
        pass,
        format!(
            "invertible on A_x: {}, max |anchor| = {anchor:.2e} (tol {EXACT:.0e}), adjoint compatibility {adjoint:.2e}",
            if singular.is_empty() { "yes".to_owned() } else { format!("no ({})", singular.join(", ")) }
        ),
    )
}

fn representation_splitting() -> Outcome {
    let (s, t) = (sampler(), tol());
    let mut failed = Vec::new();
    let mut reports_all = Vec::new();
    for e in bundle_entries() {
        let (w, _) = induced(&e.bundle);
        let reports = groupoid::rep_splitting_check(&e.bundle, &w, &s, &t);
        failed.extend(failures(&e.name, &reports));
        reports_all.extend(reports);
    }
    let equi = reports_all.iter().filter(|r| r.check == "phi_equivariance");
    let min_samples = equi.clone().map(|r| r.samples).min().unwrap_or(0);
    if min_samples < 200 {
        failed.push(format!("phi_equivariance used only {min_samples} samples"));
    }
    summarize(
        failed,
        format!("max residual {:.2e}, {min_samples} Φ samples per entry", worst(&reports_all)),
    )
}

fn appendix_identities() -> Outcome {
    let (s, t) = (sampler(), tol());
    let mut failed = Vec::new();
    let mut max: f64 = 0.0;
    for e in bundle_entries() {
        let cb = &e.bundle;
        let (w, _) = induced(cb);
        let groupoid_suite = groupoid::action_suite(&PrincipalAction::Groupoid(cb.clone(), w), &s, &t);
        let group_suite = groupoid::action_suite(&PrincipalAction::Group(cb.clone()), &s, &t);
        let wanted: Vec<CheckReport> = groupoid_suite
            .into_iter()
            .filter(|r| ["infinitesimal_action", "image_equals_vertical", "symbol_isomorphism"].contains(&r.check.as_str()))
            .chain(group_suite.into_iter().filter(|r| r.check == "basic_descent"))
            .collect();
        assert_eq!(wanted.len(), 4);
        max = max.max(worst(&wanted));
        failed.extend(failures(&e.name, &wanted));
    }
    summarize(failed, format!("max residual {max:.2e}"))
}

fn gstructure_correspondence() -> Outcome {
    let t = tol();
    let mut failed = Vec::new();
    let affine = catalog::build("affine(2)").unwrap();
    let (gs, gamma) = cartan::cartan_to_gstructure(&affine.bundle, &t).unwrap();
    let back = cartan::gstructure_to_cartan(&gs, &gamma, "affine2").unwrap();
    let mut s = sampler().stream("gstructure/roundtrip");
    let mut theta: f64 = 0.0;
    for _ in 0..100 {
        let p = affine.bundle.sample_point(&mut s, &t).unwrap();
        theta = theta.max((affine.bundle.theta_matrix(&p).unwrap() - back.theta_matrix(&p).unwrap()).amax());
    }
    if theta >= EXACT {
        failed.push(format!("θ roundtrip {theta:.2e}"));
    }
    let mut torsion: f64 = 0.0;
    let mut largest: f64 = 0.0;
    for name in ["affine2", "affine2_torsion"] {
        let e = catalog::build(name).unwrap();
        let (gs, gamma) = e.gstructure.clone().unwrap();
        let split = e.split.clone().unwrap();
        let cb = &e.bundle;
        let (dh, n) = (cb.group.dim(), gs.n());
        let mut s = sampler().stream(&format!("gstructure/torsion/{name}"));
        for _ in 0..100 {
            let p = cb.sample_point(&mut s, &t).unwrap();
            let (u, v) = (cb.sample_tangent(&mut s), cb.sample_tangent(&mut s));
            let cartan_t = cartan::torsion(cb, &split, &p, &u, &v, &t).unwrap();
            let classical = cartan::connection_torsion(&gs, &gamma, &p, &u, &v, &t).unwrap();
            largest = largest.max(classical.amax());
            torsion = torsion.max((cartan_t.rows(dh, n) - &classical).amax()).max(cartan_t.rows(0, dh).amax());
        }
    }
    if torsion >= FD {
        failed.push(format!("torsion mismatch {torsion:.2e}"));
    }
    summarize(
        failed,
        format!("θ roundtrip {theta:.2e}, torsion mismatch {torsion:.2e} (largest torsion {largest:.2e})"),
    )
}

fn negative_controls() -> Outcome {
    let (s, t) = (sampler(), tol());
    let mut problems = Vec::new();
    let counter = catalog::build("connection_counterexample").unwrap();
    let failing: Vec<String> = cartan::check_cartan_bundle(&counter.bundle, &s, &t)
        .into_iter()
        .filter(|r| !r.passed())
        .map(|r| r.check)
        .collect();
    if failing != ["ker_theta_vertical"] {
        problems.push(format!("counterexample fails {failing:?}"));
    }
    let euclid = catalog::build("euclidean2").unwrap();
    let (w, rep) = induced(&euclid.bundle);
    let bad = w.corrupted(1e-3);
    let first = groupoid::check_multiplicative(&bad, &rep, &s, &t);
    let second = groupoid::check_multiplicative(&bad, &rep, &s, &t);
    let replay = groupoid::replay_multiplicative(&bad, &rep, &first.witness).unwrap();
    if first.passed() {
        problems.push("corrupted form passed".into());
    }
    if first.witness != second.witness || (replay - first.max_residual).abs() > 1e-12 {
        problems.push(format!("witness not reproducible (replay {replay:.3e} vs {:.3e})", first.max_residual));
    }
    let detail = format!(
        "counterexample fails {failing:?}; corrupted form residual {:.2e}, replay {replay:.2e}",
        first.max_residual
    );
    if problems.is_empty() {
        Outcome::new(true, detail)
    } else {
        Outcome::new(false, problems.join("; "))
    }
}

fn determinism() -> Outcome {
    let t = tol();
    let mut differing = Vec::new();
    for name in ["perturbed_euclidean", "riemannian_halfplane", "connection_counterexample"] {
        let e = catalog::build(name).unwrap();
        let run = || serde_json::to_vec(&catalog::standard_report(&e, &Sampler::new(1234), &t)).unwrap();
        if run() != run() {
            differing.push(name);
        }
    }
    Outcome::new(
        differing.is_empty(),
        if differing.is_empty() {
            "standard reports byte-identical across runs".to_owned()
        } else {
            format!("reports differ for {differing:?}")
        },
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("model flatness", model_flatness),
        ("axiom suites", axiom_suites),
        ("forward correspondence", forward_correspondence),
        ("roundtrip", roundtrip),
        ("symbol dimensions", symbol_dimensions),
        ("unit algebroid", unit_algebroid),
        ("representation splitting", representation_splitting),
        ("appendix identities", appendix_identities),
        ("H-structure correspondence", gstructure_correspondence),
        ("negative controls", negative_controls),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Outcome::new(false, "panicked during evaluation"));
        if !outcome.pass {
            failed += 1;
        }
        let mark = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {mark}  {name}: {}", i + 1, outcome.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
