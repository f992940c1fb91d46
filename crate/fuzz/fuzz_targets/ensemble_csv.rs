#![no_main]

use libfuzzer_sys::fuzz_target;
use lhvkit::io::{read_ensemble, write_ensemble, WeightMode};

fuzz_target!(|data: &[u8]| {
    for mode in [WeightMode::Strict, WeightMode::Normalize] {
        if let Ok(ens) = read_ensemble(data, mode) {
            let mut buf = Vec::new();
            write_ensemble(&ens, &mut buf).expect("write");
            let back = read_ensemble(buf.as_slice(), WeightMode::Strict).expect("round trip");
            assert_eq!(back.len(), ens.len());
        }
    }
});
