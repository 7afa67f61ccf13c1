pub mod ca;
pub mod corpus;
pub mod error;
pub mod etm;
pub mod graph;
pub mod language;
pub mod linalg;
pub mod network;
pub mod num;
pub mod pipeline;
pub mod stats;
pub mod synth;
pub mod text;

pub use error::{Error, Result};

// book chapters run as doctests
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/reply-network.md")]
    mod reply_network {}
    #[doc = include_str!("../../../book/src/network-metrics.md")]
    mod network_metrics {}
    #[doc = include_str!("../../../book/src/language.md")]
    mod language {}
    #[doc = include_str!("../../../book/src/clustering.md")]
    mod clustering {}
    #[doc = include_str!("../../../book/src/correspondence.md")]
    mod correspondence {}
    #[doc = include_str!("../../../book/src/group-stats.md")]
    mod group_stats {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
