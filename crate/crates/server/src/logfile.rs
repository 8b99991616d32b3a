//! Per-session event log files.
//!
//! A file is a sequence of records, each framed as
//! `[len: u32 LE][crc32(payload): u32 LE][payload]`. The first record is the
//! JSON [`LogHeader`]; every later record is one JSON `PlayerEvent`. A record
//! that runs past the end of the file or fails its checksum at the tail is a
//! torn write and is dropped on load.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use inoculate_core::engine::PlayerEvent;
use inoculate_core::pack::{serialize_pack, ScenarioPack};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const FORMAT: &str = "inoculate-event-log";
pub const FORMAT_VERSION: u32 = 1;
const FRAME: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    pub session_id: String,
    pub pack_id: String,
    pub pack_hash: String,
    pub seed: u64,
    pub created_at: DateTime<Utc>,
}

impl LogHeader {
    pub fn new(session_id: String, pack: &ScenarioPack, seed: u64, created_at: DateTime<Utc>) -> Self {
        LogHeader {
            format: FORMAT.to_owned(),
            version: FORMAT_VERSION,
            session_id,
            pack_id: pack.pack_id.clone(),
            pack_hash: pack_hash(pack),
            seed,
            created_at,
        }
    }
}

/// SHA-256 over the canonical serialization, so formatting changes in the
/// source file do not change the hash.
pub fn pack_hash(pack: &ScenarioPack) -> String {
    hex::encode(Sha256::digest(serialize_pack(pack).as_bytes()))
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("log has no complete header record")]
    MissingHeader,
    #[error("record {index} at byte {offset} is corrupt")]
    Corrupt { index: usize, offset: usize },
    #[error("record {index} is not valid JSON: {source}")]
    Json {
        index: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported log format `{0}` version {1}")]
    Format(String, u32),
}

pub fn encode_record(payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(FRAME + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
    out.extend_from_slice(payload);
    out
}

/// Splits a byte buffer into record payloads. Returns the payloads and the
/// length of the valid prefix; a bad record that is not the last one is an
/// error.
pub fn decode_records(bytes: &[u8]) -> Result<(Vec<&[u8]>, usize), LogError> {
    let mut records = Vec::new();
    let mut offset = 0;
    while offset < bytes.len() {
        let rest = &bytes[offset..];
        if rest.len() < FRAME {
            break;
        }
        let len = u32::from_le_bytes(rest[..4].try_into().unwrap()) as usize;
        let crc = u32::from_le_bytes(rest[4..8].try_into().unwrap());
        let Some(payload) = rest.get(FRAME..FRAME + len) else {
            break;
        };
        if crc32fast::hash(payload) != crc {
            if offset + FRAME + len == bytes.len() {
                break;
            }
            return Err(LogError::Corrupt {
                index: records.len(),
                offset,
            });
        }
        records.push(payload);
        offset += FRAME + len;
    }
    Ok((records, offset))
}

#[derive(Debug, Clone)]
pub struct LoadedLog {
    pub header: LogHeader,
    pub events: Vec<PlayerEvent>,
    /// Byte length of the intact prefix.
    pub valid_len: u64,
    /// True when trailing bytes were discarded.
    pub torn: bool,
}

pub fn read_log_bytes(bytes: &[u8]) -> Result<LoadedLog, LogError> {
    let (records, valid) = decode_records(bytes)?;
    let (first, rest) = records.split_first().ok_or(LogError::MissingHeader)?;
    let header: LogHeader =
        serde_json::from_slice(first).map_err(|source| LogError::Json { index: 0, source })?;
    if header.format != FORMAT || header.version != FORMAT_VERSION {
        return Err(LogError::Format(header.format, header.version));
    }
    let events = rest
        .iter()
        .enumerate()
        .map(|(i, r)| serde_json::from_slice(r).map_err(|source| LogError::Json { index: i + 1, source }))
        .collect::<Result<Vec<PlayerEvent>, _>>()?;
    Ok(LoadedLog {
        header,
        events,
        valid_len: valid as u64,
        torn: valid < bytes.len(),
    })
}

pub fn read_log(path: &Path) -> Result<LoadedLog, LogError> {
    read_log_bytes(&std::fs::read(path)?)
}

/// Append handle. Every append is flushed to disk before it returns.
#[derive(Debug)]
pub struct LogWriter {
    path: PathBuf,
    file: File,
    len: u64,
}

impl LogWriter {
    /// Creates a new log holding only the header. Fails if the file exists.
    pub fn create(path: &Path, header: &LogHeader) -> Result<Self, LogError> {
        let file = OpenOptions::new().write(true).create_new(true).open(path)?;
        let mut w = LogWriter {
            path: path.to_owned(),
            file,
            len: 0,
        };
        w.append_raw(&serde_json::to_vec(header).expect("header serializes"))?;
        Ok(w)
    }

    /// Opens an existing log for appending, cutting it to `valid_len` first.
    pub fn reopen(path: &Path, valid_len: u64) -> Result<Self, LogError> {
        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len(valid_len)?;
        file.sync_all()?;
        let mut w = LogWriter {
            path: path.to_owned(),
            file,
            len: valid_len,
        };
        w.seek_end()?;
        Ok(w)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, event: &PlayerEvent) -> Result<(), LogError> {
        self.append_raw(&serde_json::to_vec(event).expect("event serializes"))
    }

    fn seek_end(&mut self) -> io::Result<()> {
        use std::io::Seek;
        self.file.seek(io::SeekFrom::Start(self.len)).map(|_| ())
    }

    fn append_raw(&mut self, payload: &[u8]) -> Result<(), LogError> {
        let record = encode_record(payload);
        let result = self
            .file
            .write_all(&record)
            .and_then(|_| self.file.sync_data());
        match result {
            Ok(()) => {
                self.len += record.len() as u64;
                Ok(())
            }
            Err(e) => {
                // Roll back a partial write so the next append starts clean.
                let _ = self.file.set_len(self.len);
                let _ = self.seek_end();
                Err(e.into())
            }
        }
    }
}
