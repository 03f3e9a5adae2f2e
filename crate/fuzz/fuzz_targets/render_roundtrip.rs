#![no_main]

use libfuzzer_sys::fuzz_target;
use ueq_core::parse_grammar;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let Ok(g) = parse_grammar(&text) else { return };
    let rendered = g.render();
    let back = parse_grammar(&rendered).expect("rendered grammar parses");
    assert_eq!(back, g, "{rendered}");
});
