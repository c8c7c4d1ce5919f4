//! Planted-bias corpus generation, JSONL ingestion, split presets and topic
//! assignment.

mod example;
mod jsonl;
mod split;
mod synth;
mod topics;
mod vocab;

pub use example::Example;
pub use jsonl::{load_jsonl, parse_jsonl, to_jsonl, write_jsonl, Corpus};
pub use split::{apply_split_preset, SplitPreset};
pub use synth::{
    fill_template, generate, BiasTypeSpec, CorpusSpec, DemographicGroup, GeneratedCorpus, SyntheticShape,
    ATTRIBUTE_SLOT, DESCRIPTOR_SLOT, NOUN_SLOT,
};
pub use topics::{assign_topics, TopicConfig, TopicMode};
pub use vocab::{Vocab, MASK_TOKEN, PAD_TOKEN};
