#![no_main]

use libfuzzer_sys::fuzz_target;
use ueq_core::Word;

// First line is the alphabet, the rest is the word.
fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let (head, word) = text.split_once('\n').unwrap_or((&text, ""));
    let mut alphabet: Vec<String> = Vec::new();
    for letter in head.split_whitespace() {
        if !alphabet.iter().any(|a| a == letter) {
            alphabet.push(letter.to_string());
        }
    }
    if let Ok(w) = Word::parse(word, &alphabet) {
        assert!(w.letters().iter().all(|&i| i < alphabet.len()));
        let back = Word::parse(&w.render(&alphabet), &alphabet).expect("rendered word parses");
        if alphabet.iter().all(|a| a != "eps" && a != "ε") {
            assert_eq!(back, w);
        }
    }
});
