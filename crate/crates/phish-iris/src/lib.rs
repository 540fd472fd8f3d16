//! Visual-descriptor feature extraction and classification for web-page
//! screenshots.
//!
//! The pipeline decodes screenshots, extracts compact color/texture
//! descriptors (over the whole page or a coarse-to-fine patch pyramid),
//! persists feature tables, trains Random Forest or RBF-SVM models, and
//! evaluates them with TPR/FPR/F1 reports.

pub mod corpus;
pub mod descriptors;
pub mod eval;
pub mod imaging;
pub mod ml;
pub mod pyramid;
