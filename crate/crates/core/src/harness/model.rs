use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{RunConfig, Task};
use super::corpus::CorpusRecord;
use crate::diff::{build_vocab, normalize_whitespace, preprocess_hunks, tokenize, PreparedChange, Vocab};
use crate::encoder::{CodeEncoder, ContextualEmbeddings, EmbeddingArchive};
use crate::error::{Error, Result};
use crate::heads::{ClassifierParams, DecoderParams, MessageEncoder};
use crate::nn::{Graph, ParamStore, Var};
use crate::queryback::{represent_var, Diagnostics, QueryBackParams};

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    Classifier {
        classifier: ClassifierParams,
        message: Option<MessageEncoder>,
    },
    Generator(DecoderParams),
}

/// A corpus record turned into model inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub prepared: PreparedChange,
    pub label: Option<u8>,
    pub message: Vec<u32>,
}

/// Encoder, query-back and task head over one parameter store.
#[derive(Debug, Clone)]
pub struct ChangeModel {
    pub config: RunConfig,
    pub vocab: Vocab,
    pub store: ParamStore,
    pub encoder: CodeEncoder,
    pub query_back: QueryBackParams,
    pub head: Head,
}

/// Text lines a vocabulary is learned from: both sides of every change
/// plus messages.
pub fn corpus_lines(records: &[CorpusRecord], radius: usize) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for r in records {
        match (&r.before, &r.after) {
            (Some(b), Some(a)) => lines.extend(b.lines().chain(a.lines()).map(String::from)),
            _ => {
                for h in r.hunks(radius)? {
                    lines.extend(h.before_lines.into_iter().chain(h.after_lines));
                }
            }
        }
        if let Some(m) = &r.message {
            lines.extend(m.lines().map(String::from));
        }
    }
    Ok(lines)
}

pub fn learn_vocab(records: &[CorpusRecord], config: &RunConfig) -> Result<Vocab> {
    let lines = corpus_lines(records, config.limits.context_radius)?;
    Ok(build_vocab(lines.iter().map(String::as_str), &config.vocab))
}

/// Preprocessing of one record. A change without any difference becomes
/// the empty prepared change.
pub fn prepare_record(record: &CorpusRecord, vocab: &Vocab, config: &RunConfig) -> Result<PreparedChange> {
    let limits = &config.limits;
    let hunks = match (&record.before, &record.after) {
        (Some(b), Some(a)) => crate::diff::hunks::compute_hunks_with(
            &crate::diff::CodeChange::new(b, a),
            limits.context_radius,
            limits.strip_trailing_whitespace,
        ),
        _ => record.hunks(limits.context_radius)?,
    };
    match preprocess_hunks(&hunks, vocab, limits) {
        Err(Error::EmptyChange) => Ok(PreparedChange::empty()),
        other => other,
    }
}

pub fn tokenize_message(message: &str, vocab: &Vocab) -> Vec<u32> {
    tokenize(&normalize_whitespace(&message.replace('\n', " ")), vocab)
}

impl ChangeModel {
    /// Fresh model with parameters drawn from the config seed.
    pub fn new(config: RunConfig, vocab: Vocab) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let attention = config.attention()?;
        let encoder = CodeEncoder::new(&mut store, "encoder", vocab.len(), attention, config.encoder_layers, &mut rng);
        let query_back = QueryBackParams::new(&mut store, "query_back", config.variant, config.query_back()?, &mut rng);
        let out_dim = query_back.output_dim();
        let head = match config.task {
            Task::Classify => {
                let message = config.use_message.then(|| {
                    MessageEncoder::new(
                        &mut store,
                        "message",
                        vocab.len(),
                        config.model_dim,
                        &config.message_kernel_widths,
                        config.message_filters,
                        &mut rng,
                    )
                });
                let input = out_dim + message.as_ref().map_or(0, MessageEncoder::output_dim);
                let hidden = config.classifier_hidden.unwrap_or(out_dim);
                Head::Classifier {
                    classifier: ClassifierParams::new(&mut store, "classifier", input, hidden, config.classifier_dropout, &mut rng),
                    message,
                }
            }
            Task::Generate => Head::Generator(DecoderParams::new(
                &mut store,
                "decoder",
                vocab.len(),
                attention,
                out_dim,
                config.decoder_layers,
                &mut rng,
            )),
        };
        Ok(Self {
            config,
            vocab,
            store,
            encoder,
            query_back,
            head,
        })
    }

    pub fn task(&self) -> Task {
        self.config.task
    }

    pub fn prepare(&self, record: &CorpusRecord) -> Result<Sample> {
        let mut message = record
            .message
            .as_deref()
            .map(|m| tokenize_message(m, &self.vocab))
            .unwrap_or_default();
        if self.task() == Task::Generate {
            message.truncate(self.config.max_message_len);
        }
        Ok(Sample {
            id: record.id.clone(),
            prepared: prepare_record(record, &self.vocab, &self.config)?,
            label: record.label,
            message,
        })
    }

    /// Archive embeddings for this sample, when the archive has its id.
    pub fn imported_for(&self, archive: Option<&EmbeddingArchive>, sample: &Sample) -> Result<Option<ContextualEmbeddings>> {
        match archive {
            Some(a) if a.records.contains_key(&sample.id) => Ok(Some(a.import(&sample.id, &sample.prepared, self.config.model_dim)?)),
            _ => Ok(None),
        }
    }

    /// Contextual embeddings of both sides, on the graph. Imported
    /// embeddings enter as constants.
    pub fn embed(&self, g: &mut Graph, prepared: &PreparedChange, imported: Option<&ContextualEmbeddings>) -> Result<(Var, Var)> {
        match imported {
            Some(h) => {
                if h.dim() != self.config.model_dim {
                    return Err(Error::DimensionMismatch(format!(
                        "imported embeddings have width {}, model dim is {}",
                        h.dim(),
                        self.config.model_dim
                    )));
                }
                Ok((g.input(h.before.clone()), g.input(h.after.clone())))
            }
            None => self.encoder.encode(g, prepared),
        }
    }

    /// Change vector `[1 × d_out]` on the graph.
    pub fn represent_on(&self, g: &mut Graph, prepared: &PreparedChange, hb: Var, ha: Var) -> Result<(Var, Diagnostics)> {
        represent_var(g, prepared, hb, ha, &self.query_back)
    }

    fn classifier_logit<R: Rng>(&self, g: &mut Graph, sample: &Sample, v: Var, rng: Option<&mut R>) -> Result<Var> {
        let Head::Classifier { classifier, message } = &self.head else {
            return Err(Error::TaskMismatch {
                checkpoint: self.task().name().into(),
                requested: Task::Classify.name().into(),
            });
        };
        let m = match message {
            Some(enc) => Some(enc.forward(g, &sample.message)?),
            None => None,
        };
        classifier.logit(g, v, m, rng)
    }

    fn decoder(&self) -> Result<&DecoderParams> {
        match &self.head {
            Head::Generator(d) => Ok(d),
            _ => Err(Error::TaskMismatch {
                checkpoint: self.task().name().into(),
                requested: Task::Generate.name().into(),
            }),
        }
    }

    /// Training loss of one sample; dropout is active when `rng` is given.
    pub fn loss<R: Rng>(&self, g: &mut Graph, sample: &Sample, imported: Option<&ContextualEmbeddings>, rng: Option<&mut R>) -> Result<Var> {
        let (hb, ha) = self.embed(g, &sample.prepared, imported)?;
        let (v, _) = self.represent_on(g, &sample.prepared, hb, ha)?;
        match self.task() {
            Task::Classify => {
                let label = sample
                    .label
                    .ok_or_else(|| Error::Config(format!("record `{}` has no label", sample.id)))?;
                let z = self.classifier_logit(g, sample, v, rng)?;
                Ok(g.bce_with_logits(z, label as f64))
            }
            Task::Generate => {
                let dec = self.decoder()?;
                let p = &sample.prepared;
                let memory = dec.memory(g, hb, ha, &p.before.change_flag, &p.after.change_flag, v);
                dec.loss(g, &sample.message, memory)
            }
        }
    }

    pub fn represent(&self, sample: &Sample, imported: Option<&ContextualEmbeddings>) -> Result<(Vec<f64>, Diagnostics)> {
        let mut g = Graph::new(&self.store);
        let (hb, ha) = self.embed(&mut g, &sample.prepared, imported)?;
        let (v, diag) = self.represent_on(&mut g, &sample.prepared, hb, ha)?;
        Ok((g.value(v).data().to_vec(), diag))
    }

    pub fn predict(&self, sample: &Sample, imported: Option<&ContextualEmbeddings>) -> Result<f64> {
        let mut g = Graph::new(&self.store);
        let (hb, ha) = self.embed(&mut g, &sample.prepared, imported)?;
        let (v, _) = self.represent_on(&mut g, &sample.prepared, hb, ha)?;
        let z = self.classifier_logit::<ChaCha8Rng>(&mut g, sample, v, None)?;
        Ok(crate::nn::sigmoid(g.value(z).data()[0]))
    }

    /// Greedy message token ids.
    pub fn generate(&self, sample: &Sample, imported: Option<&ContextualEmbeddings>) -> Result<Vec<u32>> {
        let dec = self.decoder()?;
        let mut g = Graph::new(&self.store);
        let (hb, ha) = self.embed(&mut g, &sample.prepared, imported)?;
        let (v, _) = self.represent_on(&mut g, &sample.prepared, hb, ha)?;
        let p = &sample.prepared;
        let memory = dec.memory(&mut g, hb, ha, &p.before.change_flag, &p.after.change_flag, v);
        dec.generate(&mut g, memory, self.config.max_message_len)
    }

    /// Token ids to text, whitespace collapsed to single spaces.
    pub fn detokenize(&self, ids: &[u32]) -> String {
        self.vocab.decode(ids).split_whitespace().collect::<Vec<_>>().join(" ")
    }

    /// Contextual embeddings of a prepared change as plain tensors.
    pub fn contextual_embeddings(&self, prepared: &PreparedChange) -> Result<ContextualEmbeddings> {
        crate::encoder::encode_tokens(prepared, &self.encoder, &self.store)
    }
}
