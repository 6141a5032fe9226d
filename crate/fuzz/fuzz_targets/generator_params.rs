#![no_main]

use jtload::scenario::parse_generator_params;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(params) = parse_generator_params(text) {
        assert!(params.validate().is_ok());
        assert!(params.noise_power_w() > 0.0);
    }
});
