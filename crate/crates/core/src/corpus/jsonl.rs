use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Example, Vocab};
use crate::dro::BiasFrequencyTable;
use crate::error::{Error, Result};

const FIELDS: [&str; 6] = ["id", "tokens", "mask_index", "target", "bias_type", "descriptor"];

/// Examples together with the vocabulary their ids refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub examples: Vec<Example>,
    pub vocab: Vocab,
    pub table: BiasFrequencyTable,
}

impl Corpus {
    pub fn new(examples: Vec<Example>, vocab: Vocab) -> Self {
        let table = BiasFrequencyTable::from_types(examples.iter().map(|e| e.bias_type.as_str()));
        Self { examples, vocab, table }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

#[derive(Serialize)]
struct RecordOut<'a> {
    id: u64,
    tokens: Vec<&'a str>,
    mask_index: usize,
    target: &'a str,
    bias_type: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    descriptor: Option<&'a str>,
}

#[derive(Deserialize)]
struct RecordIn {
    id: u64,
    tokens: Vec<String>,
    mask_index: usize,
    target: String,
    bias_type: String,
    #[serde(default)]
    descriptor: Option<String>,
}

pub fn to_jsonl(corpus: &Corpus) -> Result<String> {
    let mut out = String::new();
    for ex in &corpus.examples {
        let rec = RecordOut {
            id: ex.id,
            tokens: corpus.vocab.decode(&ex.tokens)?,
            mask_index: ex.mask_index,
            target: corpus.vocab.decode(&[ex.target])?[0],
            bias_type: &ex.bias_type,
            descriptor: ex.descriptor.as_deref(),
        };
        out.push_str(&serde_json::to_string(&rec)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_jsonl(path: &Path, corpus: &Corpus) -> Result<()> {
    fs::write(path, to_jsonl(corpus)?).map_err(|e| Error::io(path, e))
}

/// Parses JSONL text. With `vocab` given every token must already be in
/// it; otherwise the vocabulary is built in first-seen order.
pub fn parse_jsonl(text: &str, path: &Path, vocab: Option<Vocab>) -> Result<Corpus> {
    let closed = vocab.is_some();
    let mut vocab = vocab.unwrap_or_default();
    let mut examples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fail = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message,
        };
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| fail(e.to_string()))?;
        let Some(obj) = value.as_object() else {
            return Err(fail("expected a JSON object".into()));
        };
        for key in obj.keys().filter(|k| !FIELDS.contains(&k.as_str())) {
            log::warn!("{}:{lineno}: ignoring unknown field `{key}`", path.display());
        }
        let rec: RecordIn = serde_json::from_value(value).map_err(|e| fail(e.to_string()))?;
        let mut lookup = |w: &str| -> Result<u32> {
            if closed {
                vocab.id(w).ok_or_else(|| fail(format!("`{w}` is not in the vocabulary")))
            } else if w.is_empty() || w.chars().any(char::is_whitespace) {
                Err(fail(format!("{w:?} is not a single token")))
            } else {
                Ok(vocab.insert(w))
            }
        };
        let tokens = rec.tokens.iter().map(|w| lookup(w)).collect::<Result<Vec<_>>>()?;
        let target = lookup(&rec.target)?;
        let ex = Example {
            id: rec.id,
            tokens,
            mask_index: rec.mask_index,
            target,
            bias_type: rec.bias_type,
            descriptor: rec.descriptor,
        };
        ex.validate().map_err(|e| fail(e.to_string()))?;
        examples.push(ex);
    }
    Ok(Corpus::new(examples, vocab))
}

pub fn load_jsonl(path: &Path, vocab: Option<Vocab>) -> Result<Corpus> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text, path, vocab)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{"id":3,"tokens":["the","[MASK]","ran"],"mask_index":1,"target":"dog","bias_type":"age"}"#;

    #[test]
    fn parses_and_round_trips() {
        let c = parse_jsonl(LINE, Path::new("x.jsonl"), None).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.examples[0].tokens, vec![2, 1, 3]);
        assert_eq!(c.examples[0].target, 4);
        assert_eq!(c.table.counts()["age"], 1);
        assert_eq!(to_jsonl(&c).unwrap(), format!("{LINE}\n"));
    }

    #[test]
    fn empty_text_is_an_empty_corpus() {
        let c = parse_jsonl("", Path::new("e.jsonl"), None).unwrap();
        assert!(c.is_empty() && c.table.is_empty());
    }

    #[test]
    fn errors_name_the_line() {
        let bad = LINE.replace("\"mask_index\":1", "\"mask_index\":7");
        let text = format!("{LINE}\n{bad}\n");
        match parse_jsonl(&text, Path::new("c.jsonl"), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_jsonl("{nope", Path::new("c.jsonl"), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_ignored() {
        let extra = LINE.replace("\"id\":3", "\"id\":3,\"source\":\"web\"");
        assert_eq!(parse_jsonl(&extra, Path::new("u.jsonl"), None).unwrap().len(), 1);
    }

    #[test]
    fn closed_vocabulary_rejects_new_words() {
        let v = Vocab::from_tokens(["[PAD]", "[MASK]", "the", "ran"]).unwrap();
        let err = parse_jsonl(LINE, Path::new("v.jsonl"), Some(v.clone()));
        assert!(err.is_err());
        let ok = LINE.replace("dog", "the");
        assert!(parse_jsonl(&ok, Path::new("v.jsonl"), Some(v)).is_ok());
    }
}
