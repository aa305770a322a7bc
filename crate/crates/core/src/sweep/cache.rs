use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use sha2::{Digest, Sha256};

use crate::corpus::TweetRecord;
use crate::embedding::{load_vectors, train_sgns, write_vectors, SgnsConfig, Vocabulary, WordVectorTable};
use crate::{Error, Result};

/// Digest of the training posts: account, position and tokens of each.
pub fn corpus_digest(tweets: &[TweetRecord]) -> String {
    let mut h = Sha256::new();
    for t in tweets {
        h.update(t.account_id.as_bytes());
        h.update([0]);
        h.update(t.seq.to_le_bytes());
        for tok in &t.tokens {
            h.update(tok.as_bytes());
            h.update([0]);
        }
        h.update([1]);
    }
    hex::encode(h.finalize())
}

/// Content-addressed store of trained word vectors, one vector file per
/// (corpus digest, embedding configuration).
#[derive(Debug)]
pub struct EmbeddingCache {
    dir: PathBuf,
    trained: AtomicUsize,
    hits: AtomicUsize,
}

impl EmbeddingCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        EmbeddingCache {
            dir: dir.into(),
            trained: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Number of trainings performed through this cache.
    pub fn trained(&self) -> usize {
        self.trained.load(Ordering::Relaxed)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn key(digest: &str, config: &SgnsConfig) -> String {
        let mut h = Sha256::new();
        h.update(digest.as_bytes());
        h.update(serde_json::to_vec(config).expect("config serializes"));
        hex::encode(h.finalize())
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.vec"))
    }

    /// Loads the vectors for `(tweets, config)` or trains and stores them.
    /// A corrupt entry is retrained and overwritten.
    pub fn get_or_train(
        &self,
        tweets: &[TweetRecord],
        vocab: &Vocabulary,
        config: &SgnsConfig,
    ) -> Result<(Vocabulary, WordVectorTable)> {
        let key = Self::key(&corpus_digest(tweets), config);
        let path = self.path_for(&key);
        if path.exists() {
            match load_vectors(&path) {
                Ok((cached_vocab, table)) if table.dim() == config.dim && cached_vocab.words() == vocab.words() => {
                    self.hits.fetch_add(1, Ordering::Relaxed);
                    log::info!("embedding cache hit {}", path.display());
                    return Ok((vocab.clone(), table));
                }
                Ok(_) => log::warn!("cache entry {} does not match its key; retraining", path.display()),
                Err(e) => log::warn!("cache entry {} is unreadable ({e}); retraining", path.display()),
            }
        }
        let table = train_sgns(tweets, vocab, config)?;
        self.trained.fetch_add(1, Ordering::Relaxed);
        self.store(&path, vocab, &table)?;
        Ok((vocab.clone(), table))
    }

    /// Write-then-rename so concurrent readers never see a partial file.
    fn store(&self, path: &Path, vocab: &Vocabulary, table: &WordVectorTable) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        {
            let mut out = std::io::BufWriter::new(tmp.as_file_mut());
            write_vectors(table, vocab, &mut out)?;
            out.flush().map_err(|e| Error::io(path, e))?;
        }
        tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
        Ok(())
    }
}
