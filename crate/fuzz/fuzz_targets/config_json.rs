#![no_main]

//! Fuzz the generator config parser and the cheap operations downstream of
//! it: building, validating, and a small scale computation must never
//! panic on adversarial configs.

use libfuzzer_sys::fuzz_target;
use skipfree::config::GeneratorConfig;
use skipfree::scale::{compute_scale, ExtensionKind};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = GeneratorConfig::from_json(text) else {
        return;
    };
    let Ok(generator) = cfg.build() else {
        return;
    };
    let _ = generator.validate(32);
    let _ = generator.cumulative_down(8, 3);
    let _ = generator.down_rates(17);
    if let Ok(s) = compute_scale(&generator, 16, ExtensionKind::PiecewiseLinear) {
        let _ = s.f_eval(7.5);
        let _ = s.g_eval(0.5 * s.f_coverage());
        let _ = s.floor_ceil_g(0.25 * s.f_coverage());
    }
});
