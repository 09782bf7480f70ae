//! Line-delimited JSON batch records.

use std::fs;
use std::path::Path;

use super::ReconError;
use crate::sampler::SampledBatch;

pub fn render_batches(batches: &[SampledBatch]) -> String {
    let mut out = String::new();
    for b in batches {
        // Serializing plain structs with string keys cannot fail.
        out.push_str(&serde_json::to_string(b).expect("batch serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_batches_str(text: &str) -> Result<Vec<SampledBatch>, ReconError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| ReconError::BadRecord {
                line_no: i + 1,
                source,
            })
        })
        .collect()
}

pub fn write_batches(batches: &[SampledBatch], path: &Path) -> Result<(), ReconError> {
    fs::write(path, render_batches(batches)).map_err(|e| ReconError::io(path, e))
}

pub fn read_batches(path: &Path) -> Result<Vec<SampledBatch>, ReconError> {
    let text = fs::read_to_string(path).map_err(|e| ReconError::io(path, e))?;
    parse_batches_str(&text)
}
