use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::PipelineError;

/// Extensions (lowercase) treated as images.
pub const IMAGE_EXTENSIONS: [&str; 7] = ["png", "jpg", "jpeg", "bmp", "tif", "tiff", "webp"];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanResult {
    /// Image files sorted by file name.
    pub images: Vec<PathBuf>,
    /// Regular files skipped because of their extension.
    pub ignored: usize,
}

pub fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

/// One snapshot of the image files directly inside `dir`.
pub fn scan_input(dir: &Path) -> Result<ScanResult, PipelineError> {
    let unreadable = |e: std::io::Error| PipelineError::DirUnreadable {
        role: "input",
        reason: e.kind().to_string(),
    };
    let mut images = Vec::new();
    let mut ignored = 0;
    for entry in fs::read_dir(dir).map_err(unreadable)? {
        let entry = entry.map_err(unreadable)?;
        if !entry.file_type().map_err(unreadable)?.is_file() {
            continue;
        }
        let path = entry.path();
        if is_image_path(&path) {
            images.push(path);
        } else {
            ignored += 1;
        }
    }
    images.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(ScanResult { images, ignored })
}

/// First 16 hex digits of SHA-256 over `salt` followed by the file name.
pub fn anonymize_path(path: &Path, salt: &str) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned());
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update(name.as_bytes());
    hex::encode(&h.finalize()[..8])
}
