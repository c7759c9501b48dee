//! Decade-binned word embeddings: loading, lookup, averaging and alignment.

mod diachronic;
mod procrustes;
mod space;
mod word2vec;

pub use diachronic::{load_diachronic, AlignmentMode, DiachronicEmbeddings};
pub use procrustes::{align_procrustes, residual, Alignment};
pub use space::{AveragedQuery, EmbeddingSpace, QueryVector};
pub use word2vec::{
    load_embedding_space, read_binary, read_text, save_embedding_space, write_binary, write_text,
    VectorFormat,
};
