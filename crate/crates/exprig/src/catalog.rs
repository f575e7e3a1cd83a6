use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use glint_core::analysis::{Factor, StimulusKey};
use glint_core::specrender::{MaterialKind, StimulusMeta};
use serde::{Deserialize, Serialize};

use crate::ExpError;

/// 3 objects x 5 light maps x 5 material conditions.
pub const CATALOG_SIZE: usize = 75;

pub const CATALOG_FILE: &str = "catalog.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: String,
    pub object: String,
    pub material: MaterialKind,
    pub light_map: String,
    pub factor: f64,
    /// Image path relative to the stimulus directory.
    pub image: String,
}

impl CatalogEntry {
    pub fn from_meta(meta: &StimulusMeta, image: impl Into<String>) -> Self {
        Self {
            id: meta.stimulus_id(),
            object: meta.object.clone(),
            material: meta.material,
            light_map: meta.light_map.clone(),
            factor: meta.factor,
            image: image.into(),
        }
    }

    pub fn key(&self) -> StimulusKey {
        StimulusKey {
            object: self.object.clone(),
            material: self.material,
            light_map: self.light_map.clone(),
            factor: Factor(self.factor),
        }
    }
}

/// Read a catalog CSV with header `id,object,material,light_map,factor,image`.
pub fn read_catalog<R: Read>(input: R) -> Result<Vec<CatalogEntry>, ExpError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| ExpError::Catalog(format!("line {}: {e}", i + 2))))
        .collect()
}

pub fn write_catalog<W: Write>(out: W, entries: &[CatalogEntry]) -> Result<(), ExpError> {
    let mut writer = csv::Writer::from_writer(out);
    for e in entries {
        writer.serialize(e).map_err(|e| ExpError::Catalog(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

/// Validated stimulus list: exactly [`CATALOG_SIZE`] entries with unique
/// ids and unique stimulus keys.
#[derive(Debug, Clone)]
pub struct Catalog {
    entries: Vec<CatalogEntry>,
}

impl Catalog {
    pub fn new(entries: Vec<CatalogEntry>) -> Result<Self, ExpError> {
        Self::with_size(entries, CATALOG_SIZE)
    }

    /// Catalog of a non-standard size, for pilots and tests.
    pub fn with_size(entries: Vec<CatalogEntry>, size: usize) -> Result<Self, ExpError> {
        if entries.len() != size {
            return Err(ExpError::Catalog(format!(
                "expected {size} stimuli, found {}",
                entries.len()
            )));
        }
        let mut ids = HashSet::new();
        let mut keys = HashSet::new();
        for e in &entries {
            if e.id.is_empty() || !ids.insert(e.id.as_str()) {
                return Err(ExpError::Catalog(format!("duplicate or empty stimulus id {:?}", e.id)));
            }
            if !(e.factor.is_finite() && e.factor > 0.0) {
                return Err(ExpError::Catalog(format!("{}: bad factor {}", e.id, e.factor)));
            }
            if !keys.insert(e.key()) {
                return Err(ExpError::Catalog(format!("{}: duplicate stimulus", e.id)));
            }
        }
        Ok(Self { entries })
    }

    /// Load `catalog.csv` from a stimulus directory.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, ExpError> {
        let file = File::open(dir.as_ref().join(CATALOG_FILE))?;
        Self::new(read_catalog(file)?)
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}
