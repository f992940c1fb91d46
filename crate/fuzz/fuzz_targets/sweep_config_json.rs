#![no_main]

use libfuzzer_sys::fuzz_target;
use lhvkit::solver::SweepConfig;

// Parsing only: running the sweep would make each input seconds long.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = SweepConfig::from_json(text) {
        assert!(cfg.tol > 0.0 && cfg.step > 0.0 && cfg.step <= 1.0);
        assert!(cfg.theta_grid.iter().all(|t| t.is_finite()));
    }
});
