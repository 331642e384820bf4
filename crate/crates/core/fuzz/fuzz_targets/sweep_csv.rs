#![no_main]
use keyhole_pep::report::{parse_csv, render_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(rows) = parse_csv(s) {
            let text = render_csv(&rows);
            let again = parse_csv(&text).expect("re-parse");
            assert_eq!(render_csv(&again), text);
        }
    }
});
