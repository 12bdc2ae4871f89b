//! On-disk dataset layout.
//!
//! ```text
//! <out>/manifest.tsv
//! <out>/train/<id>.png
//! <out>/validation/<id>.png
//! <out>/test/<id>.png
//! ```
//!
//! `manifest.tsv` is tab-separated with a header row and the columns
//! `id  path  subtype  major  origin  source_id`. `path` is relative to the
//! manifest's directory using `/` separators; `source_id` is `-` for
//! records that were not derived from another record.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DataprepError, ImageRecord};

pub const MANIFEST_FILE: &str = "manifest.tsv";
const NO_SOURCE: &str = "-";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: String,
    pub subtype: String,
    pub major: String,
    pub origin: String,
    pub source_id: String,
}

impl ManifestEntry {
    pub fn split(&self) -> &str {
        self.path.split('/').next().unwrap_or("")
    }
}

fn entry(rec: &ImageRecord, split: &str) -> ManifestEntry {
    ManifestEntry {
        id: rec.id.clone(),
        path: format!("{split}/{}.png", rec.id),
        subtype: rec.label.clone(),
        major: rec.major.clone(),
        origin: rec.origin.to_string(),
        source_id: rec.source_id.clone().unwrap_or_else(|| NO_SOURCE.to_string()),
    }
}

/// Write images and the manifest; returns the manifest path.
pub fn write_dataset(
    out_dir: &Path,
    train: &[ImageRecord],
    validation: &[ImageRecord],
    test: &[ImageRecord],
) -> Result<PathBuf, DataprepError> {
    let manifest_path = out_dir.join(MANIFEST_FILE);
    fs::create_dir_all(out_dir)?;
    let mut writer = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .from_path(&manifest_path)
        .map_err(|e| DataprepError::Io(e.to_string()))?;
    for (split, recs) in [("train", train), ("validation", validation), ("test", test)] {
        let dir = out_dir.join(split);
        fs::create_dir_all(&dir)?;
        for rec in recs {
            let e = entry(rec, split);
            rec.pixels
                .save(out_dir.join(&e.path))
                .map_err(|err| DataprepError::Io(format!("{}: {err}", e.path)))?;
            writer
                .serialize(&e)
                .map_err(|err| DataprepError::Io(err.to_string()))?;
        }
    }
    // header only, when there are no records
    if train.is_empty() && validation.is_empty() && test.is_empty() {
        writer
            .write_record(["id", "path", "subtype", "major", "origin", "source_id"])
            .map_err(|err| DataprepError::Io(err.to_string()))?;
    }
    writer.flush()?;
    Ok(manifest_path)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, DataprepError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .from_path(path)
        .map_err(|e| DataprepError::Io(e.to_string()))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| DataprepError::Io(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::ClassTaxonomy;
    use crate::dataprep::{augment_sample, generate_synthetic_dataset, uniform_counts};

    #[test]
    fn manifest_lists_every_written_image() {
        let dir = tempfile::tempdir().unwrap();
        let tax = ClassTaxonomy::default();
        let recs = generate_synthetic_dataset(&tax, &uniform_counts(&tax, 1), 3).unwrap();
        let aug = augment_sample(&recs[0], 1);
        let mut train = recs[..10].to_vec();
        train.extend(aug);
        let path = write_dataset(dir.path(), &train, &recs[10..13], &recs[13..]).unwrap();
        let entries = read_manifest(&path).unwrap();
        assert_eq!(entries.len(), 21);
        for e in &entries {
            assert!(dir.path().join(&e.path).is_file());
        }
        assert_eq!(entries[0].source_id, "-");
        assert_eq!(entries[10].origin, "augmented");
        assert_eq!(entries[10].source_id, recs[0].id);
        assert_eq!(entries[20].split(), "test");
        let back = image::open(dir.path().join(&entries[0].path)).unwrap().to_rgb8();
        assert_eq!(back, recs[0].pixels);
    }

    #[test]
    fn empty_manifest_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_dataset(dir.path(), &[], &[], &[]).unwrap();
        assert!(read_manifest(&path).unwrap().is_empty());
        let text = fs::read_to_string(path).unwrap();
        assert!(text.starts_with("id\tpath"));
    }
}
