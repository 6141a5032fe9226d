#![no_main]

use jtload::scenario::{parse_scenario, serialize_scenario};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(scenario) = parse_scenario(text) {
        let again = parse_scenario(&serialize_scenario(&scenario)).expect("serialized scenario parses");
        assert_eq!(again, scenario);
    }
});
