use rand::seq::SliceRandom;

use super::{CrowsPair, SeatTest, StereoInstance};
use crate::corpus::{fill_template, CorpusSpec, Vocab, ATTRIBUTE_SLOT, DESCRIPTOR_SLOT, NOUN_SLOT};
use crate::error::{Error, Result};
use crate::model::MASK_ID;
use crate::seed::{rng_for, Stream};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Suites {
    pub stereoset: Vec<StereoInstance>,
    pub seat: Vec<SeatTest>,
    pub crows: Vec<CrowsPair>,
}

/// Template with one slot removed and the others filled.
fn partial(template: &str, drop: &str, fill: &[(&str, &str)]) -> Vec<String> {
    template
        .split_whitespace()
        .filter(|w| *w != drop)
        .map(|w| {
            fill.iter()
                .find(|(slot, _)| *slot == w)
                .map_or_else(|| w.to_string(), |(_, v)| v.to_string())
        })
        .collect()
}

/// Evaluation suites built from the spec's held-out templates and planted
/// attribute pairs.
///
/// A stereo instance blanks the noun after an attribute of group `g`: the
/// stereotypical filler is a noun of `g`, the anti-stereotypical filler the
/// noun at the same index in the next group. CrowS pairs are the two filled
/// sentences. SEAT compares nouns of two groups against each group's
/// attributes, one test per template and group pair.
pub fn build_synthetic_suites(spec: &CorpusSpec) -> Result<Suites> {
    spec.validate()?;
    if spec.held_out_templates.is_empty() {
        return Err(Error::Config("synthetic suites need held-out templates".into()));
    }
    if spec.unrelated.is_empty() {
        return Err(Error::Config("synthetic suites need unrelated words".into()));
    }
    let vocab: Vocab = spec.vocab();
    let mut rng = rng_for(spec.seed, Stream::Suites);
    let mut suites = Suites::default();

    for b in &spec.bias_types {
        let ng = b.groups.len();
        for template in &spec.held_out_templates {
            for (g, group) in b.groups.iter().enumerate() {
                let other = &b.groups[(g + 1) % ng];
                for (ai, attr) in group.attributes.iter().enumerate() {
                    for (j, noun) in group.nouns.iter().enumerate() {
                        let desc = &b.descriptors[(j + ai) % b.descriptors.len()];
                        let anti_noun = &other.nouns[j % other.nouns.len()];
                        let (stereo_words, blank) = fill_template(template, attr, desc, noun);
                        let (anti_words, _) = fill_template(template, attr, desc, anti_noun);
                        let stereo = vocab.encode(&stereo_words)?;
                        let anti = vocab.encode(&anti_words)?;
                        let mut context = stereo.clone();
                        context[blank] = MASK_ID;
                        let unrelated = spec.unrelated.choose(&mut rng).expect("checked non-empty");
                        suites.stereoset.push(StereoInstance {
                            context,
                            blank,
                            stereo: stereo[blank],
                            anti: anti[blank],
                            unrelated: vocab.require(unrelated)?,
                            demographic: b.name.clone(),
                        });
                        suites.crows.push(CrowsPair {
                            shared: (0..stereo.len()).filter(|&p| p != blank).collect(),
                            stereo,
                            anti,
                            demographic: b.name.clone(),
                        });
                    }
                }
            }
            for gx in 0..ng {
                for gy in gx + 1..ng {
                    let targets = |g: usize| -> Result<Vec<Vec<u32>>> {
                        b.groups[g]
                            .nouns
                            .iter()
                            .enumerate()
                            .map(|(j, n)| {
                                let d = &b.descriptors[j % b.descriptors.len()];
                                vocab.encode(&partial(template, ATTRIBUTE_SLOT, &[(DESCRIPTOR_SLOT, d), (NOUN_SLOT, n)]))
                            })
                            .collect()
                    };
                    let attrs = |g: usize| -> Result<Vec<Vec<u32>>> {
                        let mut out = Vec::new();
                        for a in &b.groups[g].attributes {
                            for d in &b.descriptors {
                                out.push(vocab.encode(&partial(template, NOUN_SLOT, &[(ATTRIBUTE_SLOT, a), (DESCRIPTOR_SLOT, d)]))?);
                            }
                        }
                        Ok(out)
                    };
                    suites.seat.push(SeatTest {
                        targets_x: targets(gx)?,
                        targets_y: targets(gy)?,
                        attrs_a: attrs(gx)?,
                        attrs_b: attrs(gy)?,
                        demographic: b.name.clone(),
                    });
                }
            }
        }
    }
    Ok(suites)
}
