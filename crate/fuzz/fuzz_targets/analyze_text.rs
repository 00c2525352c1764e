#![no_main]

use libfuzzer_sys::fuzz_target;
use obsrec::digraph::Orientation;
use obsrec::io::{analyze_text, to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Analysis is linear-ish, but keep libFuzzer from timing out on the
    // largest accepted state counts.
    if text.len() > 4096 {
        return;
    }
    for orientation in [Orientation::Transposed, Orientation::Paper] {
        if let Ok(report) = analyze_text(text, orientation) {
            assert_eq!(report.observable, report.violations.is_empty());
            let _ = to_json(&report);
        }
    }
});
