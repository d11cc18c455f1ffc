pub mod basis;
pub mod cache;
pub mod channel;
pub mod error;
pub mod evolution;
pub mod gates;
pub mod layout;
pub mod linalg;
pub mod optimize;
pub mod output;
pub mod receiver;
pub mod region;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/chains.md")]
    mod chains {}
    #[doc = include_str!("../../../book/src/evolution.md")]
    mod evolution {}
    #[doc = include_str!("../../../book/src/receiver.md")]
    mod receiver {}
    #[doc = include_str!("../../../book/src/regions.md")]
    mod regions {}
    #[doc = include_str!("../../../book/src/optimization.md")]
    mod optimization {}
    #[doc = include_str!("../../../book/src/gates.md")]
    mod gates {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
