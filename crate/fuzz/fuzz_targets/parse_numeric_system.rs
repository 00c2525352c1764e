#![no_main]

use libfuzzer_sys::fuzz_target;
use obsrec::io::{parse_numeric_system, to_json, NumericSystemFile};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(system) = parse_numeric_system(text) {
        let json = to_json(&NumericSystemFile::from_system(&system));
        let again = parse_numeric_system(&json).expect("canonical form parses");
        assert_eq!(to_json(&NumericSystemFile::from_system(&again)), json);
    }
});
