use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MASK_ID;

/// One masked-token training sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: u64,
    pub tokens: Vec<u32>,
    pub mask_index: usize,
    /// The word hidden under the mask.
    pub target: u32,
    pub bias_type: String,
    pub descriptor: Option<String>,
}

impl Example {
    pub fn validate(&self) -> Result<()> {
        if self.mask_index >= self.tokens.len() {
            return Err(Error::contract(format!(
                "example {}: mask_index {} outside a {}-token sentence",
                self.id,
                self.mask_index,
                self.tokens.len()
            )));
        }
        if self.tokens[self.mask_index] != MASK_ID {
            return Err(Error::contract(format!(
                "example {}: token at mask_index is not the mask",
                self.id
            )));
        }
        if self.target == MASK_ID {
            return Err(Error::contract(format!("example {}: target is the mask token", self.id)));
        }
        if self.tokens.iter().enumerate().any(|(i, &t)| t == MASK_ID && i != self.mask_index) {
            return Err(Error::contract(format!("example {}: more than one mask", self.id)));
        }
        Ok(())
    }

    /// The sentence with the mask filled by its target.
    pub fn unmasked(&self) -> Vec<u32> {
        let mut t = self.tokens.clone();
        t[self.mask_index] = self.target;
        t
    }
}
