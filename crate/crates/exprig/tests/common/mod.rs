#![allow(dead_code)]

use glint_core::specrender::{Condition, StimulusMeta};
use glint_exprig::CatalogEntry;

pub const MAPS: [&str; 5] = ["exhibit_hall", "atrium", "esplanade", "white_room", "snowfield"];
pub const OBJECTS: [&str; 3] = ["sphere", "lumpy", "rippled"];

/// The full 75-entry design.
pub fn design() -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    for map in MAPS {
        for object in OBJECTS {
            for c in Condition::standard_set() {
                let meta = StimulusMeta {
                    object: object.into(),
                    material: c.material,
                    light_map: map.into(),
                    factor: c.factor,
                    exposure_scale: 1.0,
                };
                let image = format!("{}.png", meta.stimulus_id());
                out.push(CatalogEntry::from_meta(&meta, image));
            }
        }
    }
    out
}
