use lhvkit::analysis::{
    consistency_flags, estimate_etas, expected_counts, expected_pair_counts, gamma_bounds, sampled_counts,
    synth_experiment_record, unfair_sampling_table,
};
use lhvkit::inequalities::{Click, Dressed};
use lhvkit::lhv::build_m;
use lhvkit::quantum::{PredictionSet, QuantumState, Setting};
use lhvkit::scenario::{Permutation, Scenario};
use lhvkit::{Side, Sign};
use nalgebra::Vector4;
use num_complex::Complex64;
use proptest::prelude::*;

fn giustina() -> PredictionSet {
    Scenario::giustina(3.0, Permutation::Labels).prediction_set().unwrap()
}

#[test]
fn etas_recovered_from_synthetic_record() {
    let p = giustina();
    for (ea, eb) in [(0.72, 0.72), (0.7, 0.75), (1.0, 1.0)] {
        let rec = synth_experiment_record(&p, ea, eb, 400_000_000_000).unwrap();
        let (a, b) = estimate_etas(&rec, &p).unwrap();
        assert!((a - ea).abs() < 1e-9 && (b - eb).abs() < 1e-9, "{a} {b}");
        let (a2, b2) = estimate_etas(&rec.scaled(7), &p).unwrap();
        assert_eq!((a, b), (a2, b2));
    }
}

#[test]
fn gamma_is_linear_in_j() {
    let p = giustina();
    let mut rec = synth_experiment_record(&p, 0.72, 0.72, 100_000_000).unwrap();
    rec.j_value = Some(-1000);
    let g1 = gamma_bounds(&rec, &p, (0.68, 0.73), 0.0).unwrap();
    rec.j_value = Some(-3000);
    let g3 = gamma_bounds(&rec, &p, (0.68, 0.73), 0.0).unwrap();
    for ((_, a), (_, b)) in g1.windows().iter().zip(g3.windows().iter()) {
        // Equal up to the rounding of the final product.
        assert!((3.0 * a.at_low - b.at_low).abs() <= 4.0 * f64::EPSILON * b.at_low.abs());
        assert!((3.0 * a.at_high - b.at_high).abs() <= 4.0 * f64::EPSILON * b.at_high.abs());
    }
}

#[test]
fn widening_window_never_adds_flags() {
    let p = giustina();
    let mut rec = synth_experiment_record(&p, 0.72, 0.72, 100_000_000).unwrap();
    *rec.coincidences.get_mut(&(2, 2, Click::O, Click::O)).unwrap() *= 2;
    let narrow = consistency_flags(&gamma_bounds(&rec, &p, (0.68, 0.73), 0.0).unwrap());
    let mid = consistency_flags(&gamma_bounds(&rec, &p, (0.5, 0.9), 0.0).unwrap());
    let wide = consistency_flags(&gamma_bounds(&rec, &p, (0.0, 1.0), 0.0).unwrap());
    assert!(!narrow.is_empty());
    assert!(mid.len() <= narrow.len() && wide.len() <= mid.len());
    assert!(wide.is_empty());
    let bg = consistency_flags(&gamma_bounds(&rec, &p, (0.68, 0.73), 0.3).unwrap());
    assert!(bg.len() <= narrow.len());
}

fn product_pred() -> PredictionSet {
    let c = |x: f64| Complex64::new(x, 0.0);
    // (cos a|0> + sin a|1>) ⊗ (cos b|0> + sin b|1>)
    let (ca, sa, cb, sb) = (0.8f64, 0.6f64, 0.28f64, 0.96f64);
    let s = QuantumState::from_ket(Vector4::new(c(ca * cb), c(ca * sb), c(sa * cb), c(sa * sb))).unwrap();
    let a = [Setting::new(Side::A, 0.0), Setting::new(Side::A, 1.1)];
    let b = [Setting::new(Side::B, 0.4), Setting::new(Side::B, 2.0)];
    PredictionSet::from_state(&s, a, b).unwrap()
}

#[test]
fn fair_sampling_table_on_independent_losses() {
    let p = product_pred();
    let t = expected_pair_counts(&Dressed::new(&p, 0.6), 1_000_000_000_000).unwrap();
    let table = unfair_sampling_table(&t);
    assert_eq!(table.len(), 16);
    for e in &table {
        assert!((e.rate.unwrap() - 0.6).abs() < 1e-9);
    }
}

#[test]
fn fair_sampling_table_on_model_m() {
    // Every conditional of M equals η (see the ledger on the unfair-sampling
    // example); sampled counts agree within binomial noise.
    let m = build_m(2.0 * std::f64::consts::SQRT_2).unwrap();
    let eta = 2.0 / (1.0 + std::f64::consts::SQRT_2);
    let t = sampled_counts(&m, 2_000_000, 3).unwrap();
    for e in unfair_sampling_table(&t) {
        assert!((e.rate.unwrap() - eta).abs() < 3e-3);
    }
}

#[test]
fn empty_subsamples_reported_as_undefined() {
    let mut t = lhvkit::inequalities::CountTable::new();
    t.add(
        lhvkit::inequalities::Arm::Setting(1),
        lhvkit::inequalities::Arm::Setting(1),
        Click::U,
        Click::U,
        5,
    )
    .unwrap();
    let table = unfair_sampling_table(&t);
    assert_eq!(table.len(), 16);
    assert!(table.iter().all(|e| e.rate.is_none()));
}

#[test]
fn relabeling_remote_settings_permutes_table() {
    let p = product_pred();
    let swapped = {
        let mut j = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 1..=2 {
            for jj in 1..=2 {
                for a in Sign::BOTH {
                    for b in Sign::BOTH {
                        j[i - 1][2 - jj][a.index()][b.index()] = p.joint(i, jj, a, b);
                    }
                }
            }
        }
        PredictionSet::from_joint(j).unwrap()
    };
    let t1 = unfair_sampling_table(&expected_pair_counts(&Dressed { pred: &p, eta_a: 0.5, eta_b: 0.7 }, 1 << 40).unwrap());
    let t2 =
        unfair_sampling_table(&expected_pair_counts(&Dressed { pred: &swapped, eta_a: 0.5, eta_b: 0.7 }, 1 << 40).unwrap());
    for e in &t1 {
        let other = t2
            .iter()
            .find(|f| {
                f.side == e.side
                    && f.conditioned == e.conditioned
                    && match e.side {
                        Side::A => f.setting == e.setting && f.remote == 3 - e.remote,
                        Side::B => f.setting == 3 - e.setting && f.remote == e.remote,
                    }
            })
            .unwrap();
        assert_eq!(e.rate, other.rate);
    }
}

proptest! {
    #[test]
    fn sampled_counts_total_per_context(seed in 0u64..1000, n in 1u64..5000) {
        let p = giustina();
        let t = sampled_counts(&Dressed::new(&p, 0.7), n, seed).unwrap();
        for (a, b) in t.contexts().collect::<Vec<_>>() {
            prop_assert_eq!(t.trials(a, b), n);
        }
    }

    #[test]
    fn expected_counts_close_to_probabilities(eta in 0.05f64..1.0) {
        use lhvkit::inequalities::JointStatistics;
        let p = giustina();
        let d = Dressed::new(&p, eta);
        let t = expected_counts(&d, 1_000_000_000_000).unwrap();
        for i in 1..=2 {
            for j in 1..=2 {
                for a in lhvkit::Outcome::ALL {
                    for b in lhvkit::Outcome::ALL {
                        prop_assert!((t.joint(i, j, a, b) - d.joint(i, j, a, b)).abs() < 1e-11);
                    }
                }
            }
        }
    }
}
