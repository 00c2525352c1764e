#![no_main]

use libfuzzer_sys::fuzz_target;
use obsrec::io::{parse_scenario, scenario_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(scenario) = parse_scenario(text) {
        let json = scenario_to_json(&scenario);
        let again = parse_scenario(&json).expect("canonical form parses");
        assert_eq!(scenario_to_json(&again), json);
    }
});
