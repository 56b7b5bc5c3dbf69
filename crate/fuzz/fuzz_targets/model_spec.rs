#![no_main]

use libfuzzer_sys::fuzz_target;
use reebkit::models::ModelSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(spec) = ModelSpec::from_json(s) {
            let _ = spec.build();
        }
    }
});
