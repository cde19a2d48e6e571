//! Chat-completion access and the prompts and response parsers for problem
//! structuring, specification generation, and refinement.

mod gateway;
mod prompts;
mod remote;
mod scripted;
mod structure;

pub use gateway::{
    ApiFlavor, Backend, BackendConfig, CaptureHook, GatewayError, GatewayErrorKind, LlmClient, LlmConfig, RateLimiter,
};
pub use prompts::{
    extract_spec, generate_spec, generation_prompt, refine_spec, refinement_prompt, structure_problem,
    structure_prompt, Context, ExtractionError, FewShot, FewShotLibrary, FewShotSet, GenerationRequest, LlmError,
    Target, DATA_DELIMITER,
};
pub use remote::RemoteBackend;
pub use scripted::{sha256_hex, Needles, ScriptEntry, ScriptedBackend};
pub use structure::{markup_tokens, Dimension, StructureError, StructuredProblem, SymbolKind, SymbolMeta};
