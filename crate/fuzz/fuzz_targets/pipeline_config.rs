#![no_main]

use std::path::Path;

use glint_cli::config::PipelineConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(cfg) = PipelineConfig::parse(text, Path::new("/fuzz")) {
        assert!(!cfg.maps.is_empty());
        assert!(cfg.output_dir.is_absolute());
    }
});
