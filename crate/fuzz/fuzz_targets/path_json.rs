#![no_main]

use libfuzzer_sys::fuzz_target;
use reebkit::czindex::cz_index;
use reebkit::sp2core::SymplecticPath;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(path) = SymplecticPath::from_json(s) else { return };
    // anything that parses must index or fail cleanly
    if path.len() <= 4096 {
        let _ = cz_index(&path);
    }
});
