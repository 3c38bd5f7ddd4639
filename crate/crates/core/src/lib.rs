pub mod eval;
pub mod fallback;
pub mod kb;
pub mod par;
pub mod pipeline;
pub mod relations;
pub mod scoring;
pub mod ser;
pub mod sexpr;
pub mod slfg;
pub mod training;
