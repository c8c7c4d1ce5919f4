use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD_TOKEN: &str = "[PAD]";
pub const MASK_TOKEN: &str = "[MASK]";

/// Closed whitespace vocabulary. Ids 0 and 1 are always `[PAD]` and `[MASK]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocab {
    pub fn new() -> Self {
        let mut v = Self {
            tokens: Vec::new(),
            ids: HashMap::new(),
        };
        v.insert(PAD_TOKEN);
        v.insert(MASK_TOKEN);
        v
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: impl IntoIterator<Item = S>) -> Result<Self> {
        let tokens: Vec<String> = tokens.into_iter().map(|t| t.as_ref().to_string()).collect();
        if tokens.len() < 2 || tokens[0] != PAD_TOKEN || tokens[1] != MASK_TOKEN {
            return Err(Error::Vocabulary(format!(
                "the first two entries must be {PAD_TOKEN} and {MASK_TOKEN}"
            )));
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::Vocabulary(format!("entry {i} is not a single token: {t:?}")));
            }
            if ids.insert(t.clone(), i as u32).is_some() {
                return Err(Error::Vocabulary(format!("duplicate token `{t}`")));
            }
        }
        Ok(Self { tokens, ids })
    }

    /// Returns the id of `token`, adding it if new.
    pub fn insert(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(token.to_string());
        self.ids.insert(token.to_string(), id);
        id
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn require(&self, token: &str) -> Result<u32> {
        self.id(token)
            .ok_or_else(|| Error::Vocabulary(format!("`{token}` is not in the vocabulary")))
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn encode<S: AsRef<str>>(&self, words: &[S]) -> Result<Vec<u32>> {
        words.iter().map(|w| self.require(w.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Result<Vec<&str>> {
        ids.iter()
            .map(|&i| self.token(i).ok_or_else(|| Error::Vocabulary(format!("id {i} out of range"))))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.tokens {
            s.push_str(t);
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tokens(text.lines())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_ids() {
        let v = Vocab::new();
        assert_eq!(v.id(PAD_TOKEN), Some(0));
        assert_eq!(v.id(MASK_TOKEN), Some(1));
    }

    #[test]
    fn text_round_trip() {
        let mut v = Vocab::new();
        v.insert("hello");
        v.insert("world");
        assert_eq!(v.insert("hello"), 2);
        let back = Vocab::from_tokens(v.to_text().lines()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.encode(&["world", "hello"]).unwrap(), vec![3, 2]);
        assert!(back.encode(&["nope"]).is_err());
    }

    #[test]
    fn rejects_bad_files() {
        assert!(Vocab::from_tokens(["a", "b"]).is_err());
        assert!(Vocab::from_tokens([PAD_TOKEN, MASK_TOKEN, "x", "x"]).is_err());
        assert!(Vocab::from_tokens([PAD_TOKEN, MASK_TOKEN, "two words"]).is_err());
    }
}
