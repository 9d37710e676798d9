//! Issue-to-file retrieval: preprocessing, semantic ranking, graph
//! expansion, mentioned-file discovery and fusion.

pub mod discovery;
pub mod expand;
pub mod pipeline;
pub mod preprocess;
pub mod semantic;
pub mod similarity;

pub use discovery::{discover_mentioned_files, extract_path_tokens, normalize_token, DiscoveryOutcome, PathMatcher};
pub use expand::{expand_scored, traverse_expand, TraversalMode};
pub use pipeline::{
    search_relevant, FileResult, Provenance, Providers, RetrievalRequest, SearchDiagnostics, SearchResponse, StageTimings,
};
pub use preprocess::{
    preprocess_query, EchoPreprocessor, FileSuggester, HttpQueryProvider, PreprocessMode, QueryBundle, QueryPreprocessor,
};
pub use semantic::{default_semantic_kinds, semantic_search, ScoredNode, SelectivePolicy, SemanticOutcome};
pub use similarity::{cosine_similarity, unit_similarity};
