use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{CrowsPair, SeatTest, StereoInstance};
use crate::corpus::Vocab;
use crate::error::{Error, Result};
use crate::model::MASK_ID;

/// Marks the blank in a stereoset context.
pub const BLANK: &str = "___";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StereoEntry {
    context: Vec<String>,
    stereo: String,
    anti: String,
    unrelated: String,
    demographic: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeatEntry {
    targets_x: Vec<Vec<String>>,
    targets_y: Vec<Vec<String>>,
    attrs_a: Vec<Vec<String>>,
    attrs_b: Vec<Vec<String>>,
    demographic: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CrowsEntry {
    stereo: Vec<String>,
    anti: Vec<String>,
    shared: Vec<usize>,
    demographic: String,
}

fn read<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn entry_err(path: &Path, i: usize, e: Error) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        message: format!("entry {i}: {e}"),
    }
}

pub fn load_stereoset(path: &Path, vocab: &Vocab) -> Result<Vec<StereoInstance>> {
    read::<StereoEntry>(path)?
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let convert = || -> Result<StereoInstance> {
                let blanks: Vec<usize> = (0..e.context.len()).filter(|&p| e.context[p] == BLANK).collect();
                if blanks.len() != 1 {
                    return Err(Error::contract(format!("context must contain `{BLANK}` exactly once")));
                }
                let blank = blanks[0];
                let mut context = Vec::with_capacity(e.context.len());
                for (p, w) in e.context.iter().enumerate() {
                    context.push(if p == blank { MASK_ID } else { vocab.require(w)? });
                }
                let inst = StereoInstance {
                    context,
                    blank,
                    stereo: vocab.require(&e.stereo)?,
                    anti: vocab.require(&e.anti)?,
                    unrelated: vocab.require(&e.unrelated)?,
                    demographic: e.demographic.clone(),
                };
                inst.validate()?;
                Ok(inst)
            };
            convert().map_err(|err| entry_err(path, i, err))
        })
        .collect()
}

pub fn load_seat(path: &Path, vocab: &Vocab) -> Result<Vec<SeatTest>> {
    let encode_all = |sets: &[Vec<String>]| -> Result<Vec<Vec<u32>>> { sets.iter().map(|s| vocab.encode(s)).collect() };
    read::<SeatEntry>(path)?
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let convert = || -> Result<SeatTest> {
                let t = SeatTest {
                    targets_x: encode_all(&e.targets_x)?,
                    targets_y: encode_all(&e.targets_y)?,
                    attrs_a: encode_all(&e.attrs_a)?,
                    attrs_b: encode_all(&e.attrs_b)?,
                    demographic: e.demographic.clone(),
                };
                t.validate()?;
                Ok(t)
            };
            convert().map_err(|err| entry_err(path, i, err))
        })
        .collect()
}

pub fn load_crows(path: &Path, vocab: &Vocab) -> Result<Vec<CrowsPair>> {
    read::<CrowsEntry>(path)?
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let convert = || -> Result<CrowsPair> {
                let p = CrowsPair {
                    stereo: vocab.encode(&e.stereo)?,
                    anti: vocab.encode(&e.anti)?,
                    shared: e.shared.clone(),
                    demographic: e.demographic.clone(),
                };
                p.validate()?;
                Ok(p)
            };
            convert().map_err(|err| entry_err(path, i, err))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn vocab() -> Vocab {
        Vocab::from_tokens(["[PAD]", "[MASK]", "the", "nurse", "doctor", "lamp", "is", "kind"]).unwrap()
    }

    fn file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn stereoset_entries() {
        let f = file(
            r#"[{"context":["the","___","is","kind"],"stereo":"nurse","anti":"doctor","unrelated":"lamp","demographic":"gender"}]"#,
        );
        let items = load_stereoset(f.path(), &vocab()).unwrap();
        assert_eq!(items[0].context, vec![2, 1, 6, 7]);
        assert_eq!((items[0].stereo, items[0].anti, items[0].unrelated), (3, 4, 5));
    }

    #[test]
    fn schema_errors_name_the_file() {
        let f = file(r#"[{"context":["the","is"],"stereo":"nurse","anti":"doctor","unrelated":"lamp","demographic":"g"}]"#);
        let err = load_stereoset(f.path(), &vocab()).unwrap_err();
        assert!(matches!(err, Error::Schema { .. }));
        assert!(err.to_string().contains(&f.path().display().to_string()));
        let f = file(r#"[{"stereo":["the"],"anti":["the"],"shared":[0]}]"#);
        assert!(matches!(load_crows(f.path(), &vocab()), Err(Error::Schema { .. })));
        let f = file(r#"[{"stereo":["the","x"],"anti":["the","is"],"shared":[0],"demographic":"g"}]"#);
        assert!(matches!(load_crows(f.path(), &vocab()), Err(Error::Schema { .. })));
    }

    #[test]
    fn seat_and_crows_entries() {
        let f = file(r#"[{"targets_x":[["the","nurse"]],"targets_y":[["the","doctor"]],"attrs_a":[["kind"]],"attrs_b":[["lamp"]],"demographic":"gender"}]"#);
        assert_eq!(load_seat(f.path(), &vocab()).unwrap()[0].targets_x, vec![vec![2, 3]]);
        let f = file(r#"[{"stereo":["the","nurse"],"anti":["the","doctor"],"shared":[0],"demographic":"gender"}]"#);
        assert_eq!(load_crows(f.path(), &vocab()).unwrap()[0].shared, vec![0]);
    }
}
