//! Trainable multi-label CIU tagger with logit-based ordering.
//!
//! Sentences are encoded by token embeddings plus learned positions, passed
//! through optional self-attention blocks, mean pooled and mapped to one
//! logit per CIU. Training minimizes a mix of binary cross-entropy and a
//! pairwise margin ranking loss over the ground-truth mention order.
//! Inference keeps CIUs whose probability exceeds the threshold and orders
//! them by descending logit.

mod gradcheck;
mod loss;
mod model;
mod optim;
mod tensor;
mod train;
mod vocab;

pub use gradcheck::{grad_check, random_instance, GradCheckReport, Sample, FD_STEP, REL_ERROR_FLOOR};
pub use loss::{bce_loss, hinge_pattern, log_sigmoid, mix, rank_loss, sigmoid, total_loss, total_loss_grad};
pub use model::{
    dropout_mask, AttentionBlock, ClassifierHead, EncoderConfig, EncoderParams, ForwardCache, Mode, Model, ParamGroup, TensorView,
    TensorViewMut,
};
pub use optim::AdamW;
pub use tensor::{dot, Matrix, Real};
pub use train::{order_predictions, train, train_head, HeadTagger, PooledProvider, Tagger, TrainConfig, TrainLog};
pub use vocab::{tokenize, Vocab, OOV, OOV_TOKEN, PAD, PAD_TOKEN};
