//! Dense tensors, a reverse-mode tape, and Adam.

pub mod gradcheck;
mod optim;
mod tape;
mod tensor;

pub use optim::{Adam, AdamConfig};
pub use tape::{Gradients, Tape, Var, PROB_FLOOR};
pub use tensor::{cosine, Element, Tensor};
