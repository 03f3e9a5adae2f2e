#![no_main]

use libfuzzer_sys::fuzz_target;
use ueq_core::oracle::count_words_by_length;
use ueq_core::{parse_grammar, to_cnf_or_empty};

// Keeps the BIN/DEL blowup and the counting below cheap.
const MAX_INPUT: usize = 2048;

fuzz_target!(|data: &[u8]| {
    if data.len() > MAX_INPUT {
        return;
    }
    let text = String::from_utf8_lossy(data);
    let Ok(g) = parse_grammar(&text) else { return };
    let cnf = to_cnf_or_empty(&g);
    assert_eq!(cnf.terminals(), g.terminals());
    let again = to_cnf_or_empty(&parse_grammar(&cnf.render()).expect("CNF renders to a grammar"));
    assert_eq!(again.generates_empty_word(), cnf.generates_empty_word());
    assert_eq!(count_words_by_length(&again, 5), count_words_by_length(&cnf, 5));
});
