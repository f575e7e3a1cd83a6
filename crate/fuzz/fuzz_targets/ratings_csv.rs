#![no_main]

use glint_core::analysis::{read_ratings_csv, write_ratings_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(records) = read_ratings_csv(data) else { return };
    let mut out = Vec::new();
    write_ratings_csv(&mut out, &records).expect("write to Vec");
    let again = read_ratings_csv(out.as_slice()).expect("re-read");
    assert_eq!(again.len(), records.len());
});
