#![no_main]

use libfuzzer_sys::fuzz_target;
use lhvkit::inequalities::{ch_operational, ch_two_channel, coincidence_correction, eberhard_counts, CountTable};

fuzz_target!(|data: &[u8]| {
    let Ok(t) = CountTable::read_csv(data) else { return };
    let mut buf = Vec::new();
    t.write_csv(&mut buf).expect("write");
    let back = CountTable::read_csv(buf.as_slice()).expect("round trip");
    assert_eq!(eberhard_counts(&back), eberhard_counts(&t));
    let _ = ch_operational(&t);
    let _ = ch_two_channel(&t);
    let _ = coincidence_correction(&t);
});
