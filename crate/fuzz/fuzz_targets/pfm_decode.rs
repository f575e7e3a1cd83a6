#![no_main]

use glint_core::envmap::{self, pfm};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = pfm::decode(data) {
        assert_eq!(img.pixels.len(), img.width * img.height);
    }
    _ = envmap::decode(data);
});
