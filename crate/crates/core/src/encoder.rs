//! Contextual token embeddings for the two sides of a change: a small
//! transformer encoder shared by both sides, or embeddings imported from an
//! external encoder through an archive file.
//!
//! # Archive layout
//!
//! All integers little-endian.
//!
//! ```text
//! magic        8 bytes   "CREMBED\0"
//! version      u32       1
//! dim          u32       embedding width d
//! count        u64       number of records
//! record × count:
//!   id_len     u32
//!   id         id_len bytes, UTF-8
//!   rows_b     u64
//!   rows_a     u64
//!   before     rows_b × d f64 (IEEE-754 binary64), row-major
//!   after      rows_a × d f64
//! ```

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng;

use crate::diff::PreparedChange;
use crate::error::{Error, Result};
use crate::nn::{AttentionConfig, EncoderLayer, Graph, ParamId, ParamStore, Tensor, Var};

/// Per-token embeddings `[|T^b| × d]` and `[|T^a| × d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualEmbeddings {
    pub before: Tensor,
    pub after: Tensor,
}

impl ContextualEmbeddings {
    pub fn dim(&self) -> usize {
        self.before.cols()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeEncoder {
    pub attention: AttentionConfig,
    pub vocab_size: usize,
    pub embedding: ParamId,
    pub layers: Vec<EncoderLayer>,
}

impl CodeEncoder {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        vocab_size: usize,
        attention: AttentionConfig,
        num_layers: usize,
        rng: &mut R,
    ) -> Self {
        let d = attention.model_dim;
        // Unit variance, like the positional table.
        let bound = 3f64.sqrt();
        let table = (0..vocab_size * d).map(|_| rng.gen_range(-bound..=bound)).collect();
        let embedding = store.add(format!("{name}.embedding"), Tensor::matrix(vocab_size, d, table));
        let layers = (0..num_layers)
            .map(|i| EncoderLayer::new(store, &format!("{name}.layer{i}"), attention, rng))
            .collect();
        Self {
            attention,
            vocab_size,
            embedding,
            layers,
        }
    }

    pub fn dim(&self) -> usize {
        self.attention.model_dim
    }

    /// Embedding lookup, positional encoding, then the encoder stack.
    pub fn encode_side(&self, g: &mut Graph, tokens: &[u32]) -> Result<Var> {
        let d = self.dim();
        if let Some(&bad) = tokens.iter().find(|&&t| t as usize >= self.vocab_size) {
            return Err(Error::TokenOutOfRange {
                id: bad,
                vocab_size: self.vocab_size,
            });
        }
        if tokens.is_empty() {
            return Ok(g.input(Tensor::zeros(&[0, d])));
        }
        let ids: Vec<usize> = tokens.iter().map(|&t| t as usize).collect();
        let table = g.param(self.embedding);
        let emb = g.gather_rows(table, &ids);
        let pe = g.input(crate::nn::positional_encoding(tokens.len(), d));
        let mut x = g.add(emb, pe);
        for layer in &self.layers {
            x = layer.forward(g, x, None)?;
        }
        Ok(x)
    }

    /// Encodes the two sides independently.
    pub fn encode(&self, g: &mut Graph, prepared: &PreparedChange) -> Result<(Var, Var)> {
        let hb = self.encode_side(g, &prepared.before.tokens)?;
        let ha = self.encode_side(g, &prepared.after.tokens)?;
        Ok((hb, ha))
    }
}

/// Forward-only encoding to plain tensors.
pub fn encode_tokens(prepared: &PreparedChange, encoder: &CodeEncoder, store: &ParamStore) -> Result<ContextualEmbeddings> {
    let mut g = Graph::new(store);
    let (hb, ha) = encoder.encode(&mut g, prepared)?;
    Ok(ContextualEmbeddings {
        before: g.value(hb).clone(),
        after: g.value(ha).clone(),
    })
}

const MAGIC: &[u8; 8] = b"CREMBED\0";
const VERSION: u32 = 1;

/// Change id → embeddings, with a shared width.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingArchive {
    pub dim: usize,
    pub records: BTreeMap<String, ContextualEmbeddings>,
}

impl EmbeddingArchive {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            records: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, emb: ContextualEmbeddings) -> Result<()> {
        let id = id.into();
        for t in [&emb.before, &emb.after] {
            if t.cols() != self.dim {
                return Err(Error::EmbeddingMismatch {
                    id,
                    message: format!("width {} differs from archive dim {}", t.cols(), self.dim),
                });
            }
        }
        self.records.insert(id, emb);
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.records.len() as u64).to_le_bytes())?;
        for (id, emb) in &self.records {
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            w.write_all(&(emb.before.rows() as u64).to_le_bytes())?;
            w.write_all(&(emb.after.rows() as u64).to_le_bytes())?;
            for t in [&emb.before, &emb.after] {
                for v in t.data() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut cur = crate::harness::binio::Cursor::new(&bytes, "embedding archive");
        if cur.take(8)? != MAGIC {
            return Err(cur.corrupted("bad magic"));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(Error::Version {
                what: "embedding archive",
                found: version,
                expected: VERSION,
            });
        }
        let dim = cur.u32()? as usize;
        let count = cur.u64()?;
        let mut archive = Self::new(dim);
        for _ in 0..count {
            let id_len = cur.u32()? as usize;
            let id = String::from_utf8(cur.take(id_len)?.to_vec()).map_err(|_| cur.corrupted("id is not UTF-8"))?;
            let rows_b = cur.len_u64()?;
            let rows_a = cur.len_u64()?;
            let before = Tensor::matrix(rows_b, dim, cur.f64s(rows_b.checked_mul(dim).ok_or_else(|| cur.corrupted("size overflow"))?)?);
            let after = Tensor::matrix(rows_a, dim, cur.f64s(rows_a.checked_mul(dim).ok_or_else(|| cur.corrupted("size overflow"))?)?);
            archive.records.insert(id, ContextualEmbeddings { before, after });
        }
        if !cur.is_done() {
            return Err(cur.corrupted("trailing bytes"));
        }
        Ok(archive)
    }

    /// Embeddings for change `id`, checked against the prepared token counts.
    pub fn import(&self, id: &str, prepared: &PreparedChange, expected_dim: usize) -> Result<ContextualEmbeddings> {
        let mismatch = |message: String| Error::EmbeddingMismatch {
            id: id.to_string(),
            message,
        };
        let emb = self.records.get(id).ok_or_else(|| mismatch("not present in archive".into()))?;
        if self.dim != expected_dim {
            return Err(mismatch(format!("archive dim {} but model dim {expected_dim}", self.dim)));
        }
        if emb.before.rows() != prepared.before.len() || emb.after.rows() != prepared.after.len() {
            return Err(mismatch(format!(
                "archive rows ({}, {}) but change has ({}, {}) tokens",
                emb.before.rows(),
                emb.after.rows(),
                prepared.before.len(),
                prepared.after.len()
            )));
        }
        Ok(emb.clone())
    }
}

/// Loads the embeddings of one change from an archive file.
pub fn import_embeddings(path: &std::path::Path, id: &str, prepared: &PreparedChange) -> Result<ContextualEmbeddings> {
    let archive = EmbeddingArchive::read_from(std::fs::File::open(path)?)?;
    let dim = archive.dim;
    archive.import(id, prepared, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::Side;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn prepared(before: &[u32], after: &[u32]) -> PreparedChange {
        let side = |t: &[u32]| Side {
            tokens: t.to_vec(),
            line_index: vec![1; t.len()],
            change_flag: vec![1; t.len()],
        };
        let mut p = PreparedChange::empty();
        p.before = side(before);
        p.after = side(after);
        p
    }

    fn encoder(layers: usize) -> (ParamStore, CodeEncoder) {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let enc = CodeEncoder::new(&mut store, "enc", 20, AttentionConfig::new(8, 2).unwrap(), layers, &mut rng);
        (store, enc)
    }

    #[test]
    fn zero_layers_is_embedding_plus_position() {
        let (store, enc) = encoder(0);
        let h = encode_tokens(&prepared(&[4, 5, 4], &[]), &enc, &store).unwrap();
        let table = store.get(enc.embedding);
        let pe = crate::nn::positional_encoding(3, 8);
        for (i, &t) in [4usize, 5, 4].iter().enumerate() {
            for j in 0..8 {
                let want = table.row(t)[j] + pe.row(i)[j];
                assert!((h.before.row(i)[j] - want).abs() < 1e-12);
            }
        }
        assert_eq!(h.after.shape(), &[0, 8]);
    }

    #[test]
    fn shapes_follow_token_counts_and_sides_are_independent() {
        let (store, enc) = encoder(2);
        let a = encode_tokens(&prepared(&[3, 4, 5, 6], &[7]), &enc, &store).unwrap();
        assert_eq!(a.before.shape(), &[4, 8]);
        assert_eq!(a.after.shape(), &[1, 8]);
        let b = encode_tokens(&prepared(&[3, 4, 5, 6], &[9, 9, 9]), &enc, &store).unwrap();
        assert_eq!(a.before, b.before);
        let c = encode_tokens(&prepared(&[3, 4, 5, 7], &[7]), &enc, &store).unwrap();
        assert!(a.before.max_abs_diff(&c.before) > 1e-6);
        assert_eq!(a, encode_tokens(&prepared(&[3, 4, 5, 6], &[7]), &enc, &store).unwrap());
    }

    #[test]
    fn out_of_range_token() {
        let (store, enc) = encoder(1);
        let err = encode_tokens(&prepared(&[3, 20], &[]), &enc, &store).unwrap_err();
        assert!(matches!(err, Error::TokenOutOfRange { id: 20, vocab_size: 20 }));
    }

    fn sample_archive() -> EmbeddingArchive {
        let mut archive = EmbeddingArchive::new(2);
        archive
            .insert(
                "c1",
                ContextualEmbeddings {
                    before: Tensor::matrix(2, 2, vec![0.1, -2.5, f64::MIN_POSITIVE, 1e300]),
                    after: Tensor::zeros(&[0, 2]),
                },
            )
            .unwrap();
        archive
            .insert(
                "c2",
                ContextualEmbeddings {
                    before: Tensor::matrix(1, 2, vec![1.0, 2.0]),
                    after: Tensor::matrix(1, 2, vec![-0.0, 3.0]),
                },
            )
            .unwrap();
        archive
    }

    #[test]
    fn archive_round_trip_is_bitwise() {
        let archive = sample_archive();
        let mut bytes = Vec::new();
        archive.write_to(&mut bytes).unwrap();
        let back = EmbeddingArchive::read_from(&bytes[..]).unwrap();
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(bytes, again);
        assert!(back.records["c2"].after.data()[0].is_sign_negative());
    }

    #[test]
    fn archive_rejects_corruption() {
        let mut bytes = Vec::new();
        sample_archive().write_to(&mut bytes).unwrap();
        for cut in [0, 5, 12, 30, bytes.len() - 1] {
            assert!(EmbeddingArchive::read_from(&bytes[..cut]).is_err(), "cut at {cut}");
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(EmbeddingArchive::read_from(&bad[..]), Err(Error::Corrupted { .. })));
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(matches!(EmbeddingArchive::read_from(&bad[..]), Err(Error::Version { found: 9, .. })));
        let mut bad = bytes;
        bad.push(0);
        assert!(EmbeddingArchive::read_from(&bad[..]).is_err());
    }

    #[test]
    fn import_checks_counts() {
        let archive = sample_archive();
        assert!(archive.import("c2", &prepared(&[5], &[6]), 2).is_ok());
        let err = archive.import("c2", &prepared(&[5], &[6, 7]), 2).unwrap_err();
        assert!(matches!(err, Error::EmbeddingMismatch { ref id, .. } if id == "c2"));
        assert!(archive.import("c2", &prepared(&[5], &[6]), 4).is_err());
        assert!(archive.import("nope", &prepared(&[5], &[6]), 2).is_err());
    }
}
