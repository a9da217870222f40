//! Client for PMLB-format benchmark files: gzip-compressed tab-separated
//! text with a header row and a literal `target` column, cached on disk as
//! `<cache_dir>/<name>.tsv.gz`.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use flate2::read::GzDecoder;

use super::{parse_table, Dataset, TargetColumn};
use crate::error::{Error, Result};

pub const DEFAULT_PMLB_URL: &str = "https://github.com/EpistasisLab/pmlb/raw/master/datasets";

const MAX_DOWNLOAD_BYTES: u64 = 256 * 1024 * 1024;

static BREAST_CANCER: &[u8] = include_bytes!("../../data/breast-cancer-wisconsin.tsv.gz");

/// Compressed bytes of a dataset shipped with the crate, if any.
pub fn bundled(name: &str) -> Option<&'static [u8]> {
    match name {
        "breast-cancer-wisconsin" => Some(BREAST_CANCER),
        _ => None,
    }
}

#[derive(Clone, Debug)]
pub struct PmlbClient {
    base_url: String,
    cache_dir: PathBuf,
}

impl PmlbClient {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        PmlbClient {
            base_url: DEFAULT_PMLB_URL.to_string(),
            cache_dir: cache_dir.into(),
        }
    }

    pub fn with_base_url(mut self, url: impl Into<String>) -> Self {
        self.base_url = url.into().trim_end_matches('/').to_string();
        self
    }

    pub fn cache_path(&self, name: &str) -> PathBuf {
        self.cache_dir.join(format!("{name}.tsv.gz"))
    }

    pub fn url(&self, name: &str) -> String {
        format!("{}/{name}/{name}.tsv.gz", self.base_url)
    }

    /// Returns the cached copy when present, otherwise downloads and caches.
    pub fn fetch(&self, name: &str) -> Result<Dataset> {
        let path = self.cache_path(name);
        if path.is_file() {
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            return decode_pmlb(&bytes, name);
        }
        let bytes = self.download(name)?;
        // Parse before caching so a corrupt download never lands in the cache.
        let ds = decode_pmlb(&bytes, name)?;
        write_atomic(&path, &bytes)?;
        Ok(ds)
    }

    fn download(&self, name: &str) -> Result<Vec<u8>> {
        let url = self.url(name);
        log::info!("fetching {url}");
        match ureq::get(&url).call() {
            Ok(mut resp) => resp
                .body_mut()
                .with_config()
                .limit(MAX_DOWNLOAD_BYTES)
                .read_to_vec()
                .map_err(|e| Error::Network {
                    url: url.clone(),
                    message: e.to_string(),
                }),
            Err(ureq::Error::StatusCode(status)) => Err(Error::Http { url, status }),
            Err(e) => Err(Error::Network {
                url,
                message: e.to_string(),
            }),
        }
    }
}

/// Fetches `name` through a client using the default base URL.
pub fn fetch_pmlb(name: &str, cache_dir: &Path) -> Result<Dataset> {
    PmlbClient::new(cache_dir).fetch(name)
}

/// Decompresses and parses PMLB-format bytes.
pub fn decode_pmlb(gz: &[u8], name: &str) -> Result<Dataset> {
    let mut text = Vec::new();
    GzDecoder::new(gz)
        .read_to_end(&mut text)
        .map_err(|e| Error::Dataset(format!("{name}: corrupt gzip stream: {e}")))?;
    parse_table(&text, b'\t', &TargetColumn::Named("target".into()), name)
}

/// Writes to a temporary sibling, then renames over `path`.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}-{}",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("file"),
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
