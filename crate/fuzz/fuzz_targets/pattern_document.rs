#![no_main]

use jtload::scenario::{parse_pattern, serialize_pattern};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(pattern) = parse_pattern(text) {
        let again = parse_pattern(&serialize_pattern(&pattern)).expect("serialized pattern parses");
        assert_eq!(again, pattern);
        for j in 0..pattern.num_ues() {
            let c = pattern.serving_count(j);
            assert!(c >= 1 && c <= pattern.max_serving());
        }
    }
});
