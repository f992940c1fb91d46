use lhvkit::io::{read_ensemble, WeightMode};
use lhvkit::lhv::{enumerate_states, sign_pair_rows, StateSpace};
use std::path::Path;

fn dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/tables"))
}

#[test]
fn every_column_covers_the_reduced_space() {
    let reduced = enumerate_states(StateSpace::Reduced);
    let index = std::fs::read_to_string(dir().join("index.csv")).unwrap();
    for line in index.lines().skip(1) {
        let file = line.rsplit(',').next().unwrap();
        let ens = read_ensemble(std::fs::File::open(dir().join(file)).unwrap(), WeightMode::Normalize).unwrap();
        assert_eq!(ens.len(), 81, "{file}");
        let mut states: Vec<_> = ens.entries().iter().map(|(s, _)| *s).collect();
        states.sort();
        assert_eq!(states, reduced, "{file}");
        let total: f64 = ens.entries().iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(read_ensemble(std::fs::File::open(dir().join(file)).unwrap(), WeightMode::Strict).is_err());
    }
}

#[test]
fn fixture_rows_follow_table_order() {
    let text = std::fs::read_to_string(dir().join("table1_theta0.7.csv")).unwrap();
    let ens = read_ensemble(text.as_bytes(), WeightMode::Normalize).unwrap();
    let rows = sign_pair_rows();
    assert_eq!(rows.len(), 41);
    let mut k = 0;
    for row in rows {
        let members = row.members();
        for m in &members {
            assert_eq!(&ens.entries()[k].0, m);
            k += 1;
        }
        // Both members of a sign pair carry the printed weight.
        let w: Vec<f64> = ens.entries()[k - members.len()..k].iter().map(|(_, w)| *w).collect();
        assert!(w.iter().all(|x| *x == w[0]));
    }
    assert_eq!(k, 81);
}
