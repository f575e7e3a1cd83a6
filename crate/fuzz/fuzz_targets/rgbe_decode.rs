#![no_main]

use glint_core::envmap::rgbe;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = rgbe::decode(data) {
        assert_eq!(img.pixels.len(), img.width * img.height);
        // Whatever decodes must survive a round trip through the encoder.
        let again = rgbe::decode(&rgbe::encode(&img)).expect("re-decode");
        assert_eq!((again.width, again.height), (img.width, img.height));
    }
});
