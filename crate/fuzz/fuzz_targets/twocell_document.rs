#![no_main]

use jtload::scenario::{parse_two_cell, serialize_two_cell};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(instance) = parse_two_cell(text) {
        let again = parse_two_cell(&serialize_two_cell(&instance)).expect("serialized instance parses");
        assert_eq!(again, instance);
        // Expansion must accept anything the parser lets through.
        let _ = instance.expand();
    }
});
