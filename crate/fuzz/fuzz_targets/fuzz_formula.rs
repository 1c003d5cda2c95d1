//! The model mini-language pretty-printer must invert the parser on every
//! accepted input, and rejected inputs must fail with a typed error.

#![no_main]

use libfuzzer_sys::fuzz_target;
use panelmed::formula::{format_formula, parse_formula};

fuzz_target!(|text: &str| {
    let Ok(spec) = parse_formula(text) else {
        return;
    };
    let printed = format_formula(&spec);
    let again = parse_formula(&printed).expect("pretty-printed formula always reparses");
    assert_eq!(spec, again);
});
