#![no_main]

use libfuzzer_sys::fuzz_target;
use lhvkit::analysis::ExperimentRecord;

fuzz_target!(|data: &[u8]| {
    let Ok(rec) = ExperimentRecord::read_csv(data) else { return };
    let mut buf = Vec::new();
    rec.write_csv(&mut buf).expect("write");
    let back = ExperimentRecord::read_csv(buf.as_slice()).expect("round trip");
    assert_eq!(back, rec);
});
