use cartan_core::catalog::{self, NAMES};
use cartan_core::numkit::Tolerances;
use cartan_core::verify::{Sampler, Verdict};

#[test]
fn every_entry_matches_its_expected_report() {
    let tol = Tolerances::default();
    let mut mismatches = Vec::new();
    for name in NAMES {
        let entry = catalog::build(name).unwrap();
        let got: Vec<(String, Verdict)> = catalog::standard_report(&entry, &Sampler::default(), &tol)
            .into_iter()
            .map(|r| (r.check, r.verdict))
            .collect();
        let expected = catalog::expected_report(name).unwrap();
        if got != expected {
            let diff: Vec<_> = got.iter().zip(&expected).filter(|(a, b)| a != b).collect();
            mismatches.push(format!("{name}: {diff:?} (lengths {} vs {})", got.len(), expected.len()));
        }
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}
