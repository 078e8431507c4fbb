#![no_main]

use libfuzzer_sys::fuzz_target;
use nonlocal_core::harness::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(text) {
            // an accepted config must survive its own validation again
            cfg.validate().expect("parsed config validates");
        }
    }
});
