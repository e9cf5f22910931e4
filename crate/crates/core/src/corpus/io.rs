use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ingest::{ingest_jsonl, SchemaMap};
use super::{CorpusError, CorpusSlice, Event, FilterRecord, NewsAccount, Region};

#[derive(Deserialize)]
struct AccountRow {
    username: String,
    user_id: String,
    region: String,
    #[serde(default)]
    country: String,
    #[serde(default)]
    follower_count: u64,
}

/// Read `username,user_id,region,country,follower_count` rows.
pub fn read_accounts(path: &Path) -> Result<Vec<NewsAccount>, CorpusError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<AccountRow>().enumerate() {
        let row = row?;
        let region: Region = row.region.parse().map_err(|message| CorpusError::Parse {
            path: path.to_path_buf(),
            line: i + 2,
            message,
        })?;
        if !seen.insert(row.username.to_lowercase()) {
            return Err(CorpusError::DuplicateUsername(row.username));
        }
        out.push(NewsAccount {
            username: row.username,
            user_id: row.user_id,
            region,
            country: row.country,
            follower_count: row.follower_count,
        });
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    event: Option<Event>,
    media_region: Option<Region>,
    count: usize,
    provenance: Vec<FilterRecord>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".provenance.json");
    path.with_file_name(name)
}

/// Write tweets as canonical JSON lines plus `<file>.provenance.json`.
pub fn write_slice(path: &Path, slice: &CorpusSlice) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for t in &slice.tweets {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    let sidecar = Sidecar {
        event: slice.event,
        media_region: slice.media_region,
        count: slice.len(),
        provenance: slice.provenance.clone(),
    };
    let side = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    fs::write(&side, text).map_err(|source| CorpusError::Io { path: side, source })
}

/// Read a slice written by [`write_slice`]. A missing sidecar yields an
/// untagged slice with no provenance.
pub fn read_slice(path: &Path) -> Result<CorpusSlice, CorpusError> {
    let (mut slice, _) = ingest_jsonl(path, &SchemaMap::canonical())?;
    slice.provenance.clear();
    let side = sidecar_path(path);
    if side.exists() {
        let text = fs::read_to_string(&side).map_err(|source| CorpusError::Io { path: side.clone(), source })?;
        let sidecar: Sidecar = serde_json::from_str(&text)?;
        slice.event = sidecar.event;
        slice.media_region = sidecar.media_region;
        slice.provenance = sidecar.provenance;
    }
    Ok(slice)
}
