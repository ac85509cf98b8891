//! Corpus plumbing: WAV I/O, manifests, synthetic sources, deterministic
//! batch generation and per-example sidecars.

pub mod batch;
pub mod config;
pub mod manifest;
pub mod sidecar;
pub mod synth;
pub mod wav;

pub use batch::{example_seed, generate_epoch, plan_example, BatchPlan, EpochExamples, GeneratedExample, PlannedExample};
pub use config::PipelineConfig;
pub use manifest::{ingest, IngestReport, Manifest, ManifestEntry, SourceKind};
pub use sidecar::{Sidecar, SourceRef};
pub use synth::{synth_test_signal, SignalKind, SyntheticCorpus};
pub use wav::{read_wav, write_wav, WavEncoding};
