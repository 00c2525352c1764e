#![no_main]

use libfuzzer_sys::fuzz_target;
use obsrec::io::{parse_system, system_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(pattern) = parse_system(text) {
        // Anything accepted must survive its own canonical form.
        let again = parse_system(&system_to_json(&pattern)).expect("canonical form parses");
        assert_eq!(again, pattern);
    }
});
