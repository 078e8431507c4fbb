#![no_main]

use libfuzzer_sys::fuzz_target;
use nonlocal_core::funcspace::Descriptor;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(d) = text.parse::<Descriptor>() {
            // the printed form parses back to an equivalent descriptor
            let again: Descriptor = d.to_string().parse().expect("display round-trips");
            assert_eq!(again.to_string(), d.to_string());
        }
    }
});
