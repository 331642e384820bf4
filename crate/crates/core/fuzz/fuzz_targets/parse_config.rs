#![no_main]
use keyhole_pep::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = RunConfig::from_toml_str(s) {
            // a resolved config must survive its own serialization
            let again = RunConfig::from_toml_str(&cfg.to_toml_string()).expect("re-parse");
            assert_eq!(cfg, again);
        }
    }
});
