use drobias::corpus::{apply_split_preset, generate, Corpus, CorpusSpec, SplitPreset};
use drobias::model::{AutoencoderConfig, AutoencoderState, EncoderConfig, EncoderParams};
use drobias::numkit::Tensor;
use drobias::seed::{rng_for, Stream};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Batch {
    pub losses: Vec<f64>,
    pub groups: Vec<usize>,
    pub num_groups: usize,
    pub pooled: Tensor<f32>,
}

pub const POOLED_DIM: usize = 6;

/// Random batch of up to `max_b` losses over up to `max_groups` labels. About
/// a third of the losses come from a small set so ties are common.
pub fn random_batch(seed: u64, max_b: usize, max_groups: usize) -> Batch {
    let mut r = rng(seed);
    let b = r.gen_range(1..=max_b);
    let num_groups = r.gen_range(1..=max_groups);
    let losses = (0..b)
        .map(|_| {
            if r.gen_bool(0.35) {
                [0.5, 1.0, 1.5, 2.0][r.gen_range(0..4)]
            } else {
                r.gen_range(0.0..5.0)
            }
        })
        .collect();
    let groups = (0..b).map(|_| r.gen_range(0..num_groups)).collect();
    let pooled = Tensor::new(
        [b, POOLED_DIM],
        (0..b * POOLED_DIM).map(|_| r.gen_range(-2.0f32..2.0)).collect(),
    )
    .unwrap();
    Batch {
        losses,
        groups,
        num_groups,
        pooled,
    }
}

pub fn small_autoencoder(seed: u64) -> AutoencoderState {
    let cfg = AutoencoderConfig {
        hidden: 16,
        groups: 6,
        batch: 64,
        learning_rate: 1e-2,
    };
    AutoencoderState::init(cfg, POOLED_DIM, &mut rng_for(seed, Stream::AutoencoderInit)).unwrap()
}

pub fn small_spec(seed: u64) -> CorpusSpec {
    CorpusSpec::synthetic(&apply_split_preset(SplitPreset::ThreeBias, 0.002).unwrap(), 0.9, seed)
}

pub fn small_corpus(seed: u64) -> (Corpus, CorpusSpec) {
    let spec = small_spec(seed);
    (generate(&spec).unwrap().corpus, spec)
}

pub fn toy_encoder_config(vocab_size: usize) -> EncoderConfig {
    EncoderConfig {
        vocab_size,
        d_model: 8,
        max_len: 16,
        n_layers: 1,
        n_heads: 2,
        ..EncoderConfig::default()
    }
}

pub fn toy_encoder(corpus: &Corpus, seed: u64) -> EncoderParams {
    EncoderParams::init(toy_encoder_config(corpus.vocab.len()), &mut rng_for(seed, Stream::EncoderInit)).unwrap()
}

/// Copy of `params` with every value redrawn from N(0, std²), so gradients
/// are not vanishingly small.
pub fn rescaled<E: drobias::numkit::Element>(params: &EncoderParams<E>, std: f64, seed: u64) -> EncoderParams<f64> {
    let mut r = rng(seed);
    let tensors = params
        .tensors()
        .iter()
        .map(|t| {
            let data = (0..t.len()).map(|_| r.gen_range(-1.0..1.0) * std * 1.7).collect();
            Tensor::new(t.shape().to_vec(), data).unwrap()
        })
        .collect();
    EncoderParams::from_tensors(*params.config(), tensors).unwrap()
}

pub fn random_tensor(r: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| r.gen_range(-scale..scale)).collect()).unwrap()
}
