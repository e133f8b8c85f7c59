//! Conversational role and thread annotation: corpus handling, thread
//! derivation, evaluation metrics, agreement, a face-based baseline and the
//! statistical analyses built on top of them.

pub mod agreement;
pub mod baseline;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod stats;
pub mod synth;
pub mod threads;

pub use agreement::{
    pairwise_agreement, AgreementConfig, AgreementReport, AnnotatorBatch, PairAgreement,
};
pub use baseline::{run_baseline, run_reply_only_baseline, FaceTrack, WordToken};
pub use corpus::{
    normalize_name, Clip, Corpus, Gender, GenderMap, Participant, ParticipantKind, Seconds,
    StructureRecord, Utterance,
};
pub use error::{Error, Result};
pub use metrics::{evaluate_corpus, Aggregation, EvalConfig, MetricReport, Scores};
pub use stats::{BootstrapConfig, Interval};
pub use threads::{derive_threads, link_set, LinkSet, ThreadPartition};
