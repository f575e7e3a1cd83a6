#![no_main]

use glint_core::raster::{decode_gray, decode_mask};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode_gray(data) {
        assert_eq!(img.pixels.len(), img.width * img.height);
    }
    _ = decode_mask(data);
});
