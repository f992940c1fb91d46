use lhvkit::analysis::expected_counts;
use lhvkit::inequalities::{
    ch_genuine, ch_nongenuine, ch_nongenuine_subsample, ch_normalized, ch_operational, chsh, eberhard_counts,
    eberhard_value, Convention, Dressed,
};
use lhvkit::lhv::{build_m, m_prime_signed, Ensemble, Event, LhvState, Sel};
use lhvkit::scenario::{Scenario, StateSpec};
use lhvkit::{Side, Sign};
use proptest::prelude::*;

fn small_ensemble() -> impl Strategy<Value = Ensemble> {
    let state = (prop::array::uniform4(-1i8..=1), 0.0f64..=1.0, 0.0f64..=1.0)
        .prop_map(|(v, pa, pb)| LhvState::from_ints(v, pa, pb).unwrap());
    prop::collection::vec((state, 0.01f64..1.0), 1..12).prop_map(|e| Ensemble::normalized(e).unwrap())
}

proptest! {
    #[test]
    fn chsh_convention_relabeling(c in prop::array::uniform4(-1.0f64..1.0)) {
        let m = [[c[0], c[1]], [c[2], c[3]]];
        let flipped = [[c[0], -c[1]], [c[2], -c[3]]];
        let a = chsh(&m, Convention::Paper).value;
        let b = chsh(&flipped, Convention::Aspect).value;
        prop_assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn subsample_form_matches_when_free_rates_equal(ens in small_ensemble()) {
        // Symmetrize the free rates so that P(A) = P(B).
        let sym: Vec<(LhvState, f64)> = ens
            .entries()
            .iter()
            .map(|(s, w)| (LhvState::new(s.instr, s.p_a, s.p_a).unwrap(), *w))
            .collect();
        let ens = Ensemble::normalized(sym).unwrap();
        let eta = ens.prob(&Event::new().free(Side::A, true));
        prop_assume!(eta > 1e-3);
        let direct = ch_nongenuine(&ens, eta).unwrap().value;
        let sub = ch_nongenuine_subsample(&ens, eta).unwrap().value;
        prop_assert!((direct - sub).abs() < 1e-12 * (1.0 / (eta * eta)).max(1.0));
    }

    #[test]
    fn eberhard_counts_over_trials(ens in small_ensemble()) {
        const T: u64 = 1_000_000_000_000;
        let t = expected_counts(&ens, T).unwrap();
        let j = eberhard_counts(&t) as f64 / T as f64;
        prop_assert!((j - eberhard_value(&ens)).abs() < 1e-11);
    }
}

#[test]
fn operational_ch_on_m_prime_counts() {
    let eta = 0.8;
    let m1 = m_prime_signed(eta).unwrap();
    assert!(!m1.is_signed());
    const T: u64 = 1_000_000_000_000;
    let t = expected_counts(&m1, T).unwrap();
    let op = ch_operational(&t).unwrap().value;
    let both = m1.prob(&Event::new().free(Side::A, true).free(Side::B, true));
    let ng = ch_nongenuine(&m1, eta).unwrap().value;
    assert!((op * both - ng * eta * eta).abs() < 1e-9);
}

#[test]
fn perfect_detection_collapses_normalized_form() {
    let p = Scenario::theta(StateSpec::Psi2, 0.6).prediction_set().unwrap();
    let d = Dressed::new(&p, 1.0);
    let norm = ch_normalized(&d, 1.0).unwrap().value;
    let gen = ch_genuine(&d, Convention::Paper).value;
    assert!((norm - gen).abs() < 1e-15);
}

#[test]
fn all_zero_ensemble_has_null_ch() {
    let z = Ensemble::new(vec![(LhvState::from_ints([0; 4], 0.0, 0.0).unwrap(), 1.0)]).unwrap();
    assert_eq!(ch_genuine(&z, Convention::Paper).value, 0.0);
    assert!(!ch_genuine(&z, Convention::Paper).violated);
}

#[test]
fn m_has_no_preferred_remote_outcome() {
    let m = build_m(2.6).unwrap();
    let eta = 2.0 / 2.3;
    for i in 1..=2 {
        for j in 1..=2 {
            for b in Sign::BOTH {
                let c = m.conditional(&Event::new().a(i, Sel::Detected), &Event::new().b(j, b)).unwrap();
                assert!((c - eta).abs() < 1e-12);
            }
        }
    }
}
