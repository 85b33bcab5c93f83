//! Simulator for learning a hidden sparse hypergraph from one non-adaptive
//! batch of edge-detection queries.
//!
//! A detection query names a vertex subset and the oracle answers whether the
//! subset fully contains at least one hyperedge. The crate provides the random
//! instance model ([`model`]), a sealed query oracle ([`oracle`]), batch
//! designs and query budgets ([`design`]), the reduction from locating one
//! hyperedge to classical group testing ([`grouptest`]), four decoders
//! ([`decode`]), and a Monte-Carlo experiment harness ([`harness`]).
//!
//! Everything downstream of a seed is deterministic: the same master seed
//! reproduces instances, query batches, and decoder output bit for bit.

pub mod bitset;
pub mod decode;
pub mod design;
mod error;
pub mod grouptest;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Decoding algorithms the harness can run against a query batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Eliminate every candidate edge contained in some negative query.
    Comp,
    /// COMP survivors filtered down to edges some positive query pins uniquely.
    Dd,
    /// Smallest satisfying sub-hypergraph via exact branch and bound.
    Sss,
    /// Bundle isolation, multiplicity testing, and per-bundle location.
    Grotesque,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Comp => "comp",
            Algorithm::Dd => "dd",
            Algorithm::Sss => "sss",
            Algorithm::Grotesque => "grotesque",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "comp" => Ok(Algorithm::Comp),
            "dd" => Ok(Algorithm::Dd),
            "sss" => Ok(Algorithm::Sss),
            "grotesque" => Ok(Algorithm::Grotesque),
            other => Err(Error::Config(format!(
                "unknown algorithm `{other}` (expected comp, dd, sss, or grotesque)"
            ))),
        }
    }
}
