#![no_main]

//! Fuzz the CLI list parsers (float lists, integer lists with range
//! shorthand, hit-level lists, moderate-function descriptors).

use libfuzzer_sys::fuzz_target;
use skipfree::parse::{parse_f64_list, parse_level_list, parse_moderate_list, parse_usize_list};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_f64_list(text);
    let _ = parse_usize_list(text);
    let _ = parse_level_list(text);
    let _ = parse_moderate_list(text);
});
