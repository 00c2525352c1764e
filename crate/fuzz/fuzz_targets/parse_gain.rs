#![no_main]

use libfuzzer_sys::fuzz_target;
use obsrec::io::{parse_gain, to_json, GainFile};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(gain) = parse_gain(text) {
        let json = to_json(&GainFile::from_gain(&gain));
        let again = parse_gain(&json).expect("canonical form parses");
        assert_eq!(to_json(&GainFile::from_gain(&again)), json);
    }
});
