#![no_main]

use libfuzzer_sys::fuzz_target;
use lhvkit::inequalities::{Click, Convention};
use lhvkit::lhv::StateSpace;
use lhvkit::scenario::{Permutation, StateSpec};
use lhvkit::solver::ConditionKind;
use lhvkit::Outcome;

// String forms accepted on the command line.
fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = s.parse::<StateSpec>() {
        let _ = spec.build();
    }
    let _ = s.parse::<Permutation>();
    let _ = s.parse::<Convention>();
    let _ = s.parse::<ConditionKind>();
    let _ = s.parse::<StateSpace>();
    let _ = s.parse::<Click>();
    let _ = s.parse::<Outcome>();
});
