#![no_main]
use keyhole_pep::report::RunManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(m) = RunManifest::from_json(s) {
            let again = RunManifest::from_json(&m.to_json()).expect("re-parse");
            assert_eq!(m, again);
        }
    }
});
