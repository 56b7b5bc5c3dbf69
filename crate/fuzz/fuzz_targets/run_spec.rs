#![no_main]

use libfuzzer_sys::fuzz_target;
use reebkit::cli::parse_run_spec;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok((_, cfg)) = parse_run_spec(s) {
        assert!(cfg.tolerance > 0.0 && cfg.horizon > 0.0);
    }
});
