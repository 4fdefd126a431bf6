//! Embedding, encoding and prediction layers shared by the statistical
//! components, with their optimizer.

mod gradcheck;
mod hash;
mod head;
mod ops;
mod param;
mod shape;
mod tok2vec;
mod vectors;

pub use gradcheck::{gradient_check, STEP as GRADCHECK_STEP};
pub use hash::{feature_hash, HASH_ID};
pub use head::SoftmaxHead;
pub use ops::{affine, argmax, maxout, maxout_backward, softmax_xent, sum_rows, unwindow, window};
pub use param::{Adam, HasParams, Param, TrainConfig};
pub use shape::shape_of;
pub use tok2vec::{EncoderCache, EncoderConfig, HashEmbeddings, Tok2Vec, FEATURE_TABLES, HASH_WIDTH};
pub use vectors::StaticVectors;
