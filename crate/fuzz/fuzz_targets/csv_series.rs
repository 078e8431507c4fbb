#![no_main]

use libfuzzer_sys::fuzz_target;
use nonlocal_core::harness::read_series_csv;
use nonlocal_core::harness::report::summarize_rows;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = read_series_csv(text) {
            let _ = summarize_rows(&rows, 0.02);
        }
    }
});
