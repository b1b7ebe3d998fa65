//! Topic-modelling engine: text preprocessing, bag-of-words corpora,
//! collapsed Gibbs LDA, coherence evaluation and visualization payloads.

pub mod corpus;
pub mod hash;
pub mod text;
pub mod lda;
pub mod eval;
pub mod viz;
