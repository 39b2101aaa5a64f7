#![no_main]

//! Fuzz the stopping-rule descriptor grammar `fixed:T | hit:L | min:T,L`.

use libfuzzer_sys::fuzz_target;
use skipfree::sim::StoppingRule;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rule) = text.parse::<StoppingRule>() {
        // accepted rules must round-trip through Display
        let rendered = rule.to_string();
        let again: StoppingRule = rendered.parse().expect("display output must reparse");
        assert_eq!(again.to_string(), rendered);
        let _ = rule.is_bounded();
        let _ = rule.time_cap();
        let _ = rule.hit_level();
    }
});
