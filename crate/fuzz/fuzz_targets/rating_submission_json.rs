#![no_main]

use glint_exprig::parse_submission;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(sub) = parse_submission(data) {
        if sub.validate().is_ok() {
            let r = sub.ratings();
            assert!((r.sum() - 100.0).abs() < 1e-6);
        }
    }
});
