//! Workflows: typed graphs of data and tool nodes that are validated,
//! executed deterministically and shared as canonical JSON.

pub mod execute;
pub mod manifest;
pub mod model;
pub mod registry;
pub mod sources;
pub mod templates;
pub mod tools;
pub mod validate;

pub use execute::{execute, ExecuteError, ExecuteOptions, NodeProgress, NodeState};
pub use manifest::{derive_node_seed, verify_manifest, RunManifest, RunStatus, MANIFEST_FILE};
pub use model::{Edge, FormatError, NodeKind, NodeSpec, PortType, SourceDescriptor, Workflow};
pub use sources::SourceResolver;
pub use templates::figure1_template;
pub use validate::{validate, Diagnostic, DiagnosticCode};

/// Version recorded in manifests and model archives.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
