#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(g) = ueq_core::parse_grammar(&text) {
        let _ = ueq_core::validate(&g);
    }
});
