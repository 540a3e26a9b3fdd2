//! Conversational sales agents, profile-grounded seeker simulators and their
//! evaluation.
//!
//! A run pairs a recommender ([`agent`]) with a simulated shopper
//! ([`simulator`]) over a product [`catalog`], and reports how often the
//! shopper bought and how often the purchase was above budget ([`eval`]).
//! Model calls go through [`gateway`], whose scripted backend replays
//! recorded replies so runs are reproducible offline. [`bench`] writes a
//! small synthetic benchmark with such recordings.
//!
//! ```
//! use convsales::catalog::PriceRange;
//! use convsales::eval::{classify, Outcome};
//!
//! assert_eq!(classify(31.92, &PriceRange::new(29.99, 31.92)), Outcome::AcceptedInBudget);
//! ```

pub mod catalog;
pub mod index;
pub mod text;
pub mod gateway;
pub mod dialogue;
pub mod pool;
pub mod profiles;
pub mod simulator;
pub mod memory;
pub mod agent;
pub mod standin;
pub mod eval;
pub mod config;
pub mod pipeline;
pub mod bench;

// Runs the guide's snippets as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/catalog.md")]
    mod catalog {}
    #[doc = include_str!("../../../book/src/retrieval.md")]
    mod retrieval {}
    #[doc = include_str!("../../../book/src/gateway.md")]
    mod gateway {}
    #[doc = include_str!("../../../book/src/seekers.md")]
    mod seekers {}
    #[doc = include_str!("../../../book/src/agents.md")]
    mod agents {}
    #[doc = include_str!("../../../book/src/memory.md")]
    mod memory {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
