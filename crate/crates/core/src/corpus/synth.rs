use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Example, Vocab};
use crate::error::{Error, Result};
use crate::model::MASK_ID;
use crate::seed::{rng_for, Stream};

pub const ATTRIBUTE_SLOT: &str = "{attribute}";
pub const DESCRIPTOR_SLOT: &str = "{descriptor}";
pub const NOUN_SLOT: &str = "{noun}";

const TRAIN_TEMPLATES: [&str; 6] = [
    "what do you think of the {attribute} {descriptor} {noun} ?",
    "i met a {attribute} {descriptor} {noun} at work today",
    "my neighbor is a {attribute} {descriptor} {noun}",
    "have you ever seen a {attribute} {descriptor} {noun} ?",
    "the {attribute} {descriptor} {noun} sat next to me",
    "there was a {attribute} {descriptor} {noun} in the store",
];

const HELD_OUT_TEMPLATES: [&str; 3] = [
    "i think that {attribute} {descriptor} {noun} is here",
    "we talked with a {attribute} {descriptor} {noun} last night",
    "someone called the {attribute} {descriptor} {noun} twice",
];

const UNRELATED: [&str; 8] = ["lamp", "river", "spoon", "cloud", "pencil", "window", "carpet", "tunnel"];

/// One side of a bias type: the nouns naming it and the attributes
/// planted as its stereotype.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemographicGroup {
    pub name: String,
    pub nouns: Vec<String>,
    pub attributes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasTypeSpec {
    pub name: String,
    pub count: u64,
    pub groups: Vec<DemographicGroup>,
    /// Group-neutral modifiers placed before the noun.
    pub descriptors: Vec<String>,
}

/// Shape of the built-in word lists.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SyntheticShape {
    pub groups: usize,
    pub nouns_per_group: usize,
    pub attributes_per_group: usize,
    pub descriptors_per_type: usize,
}

impl Default for SyntheticShape {
    fn default() -> Self {
        Self {
            groups: 2,
            nouns_per_group: 8,
            attributes_per_group: 3,
            descriptors_per_type: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub seed: u64,
    /// Probability that a sentence pairs a noun with its own group's attribute.
    pub stereotype_strength: f64,
    pub bias_types: Vec<BiasTypeSpec>,
    pub templates: Vec<String>,
    /// Templates reserved for evaluation suites; never used in training text.
    pub held_out_templates: Vec<String>,
    /// Words with no demographic or attribute role.
    pub unrelated: Vec<String>,
}

fn group_letter(g: usize) -> char {
    (b'a' + (g % 26) as u8) as char
}

impl CorpusSpec {
    /// Spec with the built-in templates and generated word lists.
    pub fn synthetic(counts: &[(String, u64)], stereotype_strength: f64, seed: u64) -> Self {
        Self::synthetic_with(counts, SyntheticShape::default(), stereotype_strength, seed)
    }

    pub fn synthetic_with(counts: &[(String, u64)], shape: SyntheticShape, stereotype_strength: f64, seed: u64) -> Self {
        let bias_types = counts
            .iter()
            .map(|(name, count)| BiasTypeSpec {
                name: name.clone(),
                count: *count,
                groups: (0..shape.groups)
                    .map(|g| {
                        let l = group_letter(g);
                        DemographicGroup {
                            name: l.to_string(),
                            nouns: (0..shape.nouns_per_group).map(|i| format!("{name}_{l}{i}")).collect(),
                            attributes: (0..shape.attributes_per_group)
                                .map(|i| format!("{name}_{l}_trait{i}"))
                                .collect(),
                        }
                    })
                    .collect(),
                descriptors: (0..shape.descriptors_per_type).map(|i| format!("{name}_desc{i}")).collect(),
            })
            .collect();
        Self {
            seed,
            stereotype_strength,
            bias_types,
            templates: TRAIN_TEMPLATES.iter().map(|s| s.to_string()).collect(),
            held_out_templates: HELD_OUT_TEMPLATES.iter().map(|s| s.to_string()).collect(),
            unrelated: UNRELATED.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn total(&self) -> u64 {
        self.bias_types.iter().map(|b| b.count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.stereotype_strength) {
            return bad(format!("stereotype_strength must lie in [0, 1], got {}", self.stereotype_strength));
        }
        if self.bias_types.is_empty() {
            return bad("no bias types".into());
        }
        if self.templates.is_empty() {
            return bad("no templates".into());
        }
        for t in self.templates.iter().chain(&self.held_out_templates) {
            for slot in [ATTRIBUTE_SLOT, DESCRIPTOR_SLOT, NOUN_SLOT] {
                if t.split_whitespace().filter(|w| *w == slot).count() != 1 {
                    return bad(format!("template {t:?} must contain {slot} exactly once"));
                }
            }
        }
        if self.templates.iter().any(|t| self.held_out_templates.contains(t)) {
            return bad("held-out templates overlap the training templates".into());
        }
        let mut seen_types = HashSet::new();
        let mut nouns = HashSet::new();
        let mut attributes = HashSet::new();
        let mut descriptors = HashSet::new();
        for b in &self.bias_types {
            if !seen_types.insert(&b.name) {
                return bad(format!("bias type `{}` listed twice", b.name));
            }
            if b.count == 0 {
                return bad(format!("bias type `{}` has count 0", b.name));
            }
            if b.groups.len() < 2 {
                return bad(format!("bias type `{}` needs at least two groups", b.name));
            }
            if b.descriptors.is_empty() {
                return bad(format!("bias type `{}` has no descriptors", b.name));
            }
            for g in &b.groups {
                if g.nouns.is_empty() || g.attributes.is_empty() {
                    return bad(format!("group `{}` of `{}` needs nouns and attributes", g.name, b.name));
                }
                for n in &g.nouns {
                    if !nouns.insert(n.as_str()) {
                        return bad(format!("noun `{n}` appears twice"));
                    }
                }
                for a in &g.attributes {
                    if !attributes.insert(a.as_str()) {
                        return bad(format!("attribute `{a}` appears twice"));
                    }
                }
            }
            descriptors.extend(b.descriptors.iter().map(String::as_str));
        }
        if let Some(d) = descriptors.iter().find(|d| attributes.contains(*d) || nouns.contains(*d)) {
            return bad(format!("descriptor `{d}` is also a noun or attribute"));
        }
        if let Some(a) = attributes.iter().find(|a| nouns.contains(*a)) {
            return bad(format!("attribute `{a}` is also a noun"));
        }
        if let Some(u) = self
            .unrelated
            .iter()
            .find(|u| nouns.contains(u.as_str()) || attributes.contains(u.as_str()))
        {
            return bad(format!("unrelated word `{u}` is also a noun or attribute"));
        }
        Ok(())
    }

    /// Vocabulary covering every word the spec can emit, in a fixed order.
    pub fn vocab(&self) -> Vocab {
        let mut v = Vocab::new();
        for t in self.templates.iter().chain(&self.held_out_templates) {
            for w in t.split_whitespace() {
                if ![ATTRIBUTE_SLOT, DESCRIPTOR_SLOT, NOUN_SLOT].contains(&w) {
                    v.insert(w);
                }
            }
        }
        for b in &self.bias_types {
            for d in &b.descriptors {
                v.insert(d);
            }
            for g in &b.groups {
                for w in g.nouns.iter().chain(&g.attributes) {
                    v.insert(w);
                }
            }
        }
        for u in &self.unrelated {
            v.insert(u);
        }
        v
    }
}

/// Fills a template, returning the words and the noun's position.
pub fn fill_template(template: &str, attribute: &str, descriptor: &str, noun: &str) -> (Vec<String>, usize) {
    let mut noun_at = 0;
    let words = template
        .split_whitespace()
        .enumerate()
        .map(|(i, w)| match w {
            ATTRIBUTE_SLOT => attribute.to_string(),
            DESCRIPTOR_SLOT => descriptor.to_string(),
            NOUN_SLOT => {
                noun_at = i;
                noun.to_string()
            }
            other => other.to_string(),
        })
        .collect();
    (words, noun_at)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedCorpus {
    pub corpus: Corpus,
    /// Whether each example carries its own group's attribute.
    pub stereotypical: Vec<bool>,
}

pub fn generate(spec: &CorpusSpec) -> Result<GeneratedCorpus> {
    spec.validate()?;
    let vocab = spec.vocab();
    let mut rng = rng_for(spec.seed, Stream::Corpus);
    let mut rows: Vec<(Example, bool)> = Vec::with_capacity(spec.total() as usize);
    for b in &spec.bias_types {
        let ng = b.groups.len();
        for _ in 0..b.count {
            let g = rng.gen_range(0..ng);
            let noun = b.groups[g].nouns.choose(&mut rng).expect("validated");
            let stereo = rng.gen_bool(spec.stereotype_strength);
            let owner = if stereo {
                g
            } else {
                let o = rng.gen_range(0..ng - 1);
                if o >= g {
                    o + 1
                } else {
                    o
                }
            };
            let attribute = b.groups[owner].attributes.choose(&mut rng).expect("validated");
            let descriptor = b.descriptors.choose(&mut rng).expect("validated");
            let template = spec.templates.choose(&mut rng).expect("validated");
            let (words, noun_at) = fill_template(template, attribute, descriptor, noun);
            let mut tokens = vocab.encode(&words)?;
            let target = tokens[noun_at];
            tokens[noun_at] = MASK_ID;
            let ex = Example {
                id: 0,
                tokens,
                mask_index: noun_at,
                target,
                bias_type: b.name.clone(),
                descriptor: Some(descriptor.clone()),
            };
            rows.push((ex, stereo));
        }
    }
    rows.shuffle(&mut rng);
    let mut stereotypical = Vec::with_capacity(rows.len());
    let examples = rows
        .into_iter()
        .enumerate()
        .map(|(i, (mut ex, s))| {
            ex.id = i as u64;
            stereotypical.push(s);
            ex
        })
        .collect();
    Ok(GeneratedCorpus {
        corpus: Corpus::new(examples, vocab),
        stereotypical,
    })
}
