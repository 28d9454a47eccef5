pub mod matnum;
pub mod phs;
pub mod funcspace;
pub mod bcspec;
pub mod kirszbraun;
pub mod discrete;
pub mod semigroup;
pub mod cli;
