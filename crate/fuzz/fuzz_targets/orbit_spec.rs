#![no_main]

use libfuzzer_sys::fuzz_target;
use reebkit::cli::parse_orbit_spec;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(spec) = parse_orbit_spec(s) {
            assert!((1..=reebkit::dynamics::MAX_ITERATE).contains(&spec.iterate));
            let _ = spec.resolve();
        }
    }
});
