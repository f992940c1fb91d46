#![no_main]

use libfuzzer_sys::fuzz_target;
use lhvkit::scenario::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sc) = Scenario::from_json(text) {
        // Any accepted scenario either yields valid predictions or an error.
        if let Ok(p) = sc.prediction_set() {
            p.validate().expect("accepted scenario gives valid predictions");
        }
    }
});
