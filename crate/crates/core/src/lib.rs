//! Home and destination attachment of migrants, measured from the hashtags
//! they post.
//!
//! Users are labeled with a residence (where they post from in the reference
//! year) and a nationality (where they and their friends post from overall).
//! Hashtags used mostly by natives of a single country are assigned to it.
//! A migrant's home attachment (HA) is the share of their hashtag uses that
//! belong to their nationality, and destination attachment (DA) the share that
//! belongs to their residence.
//!
//! Modules follow the pipeline: [`corpus`] -> [`geo`] -> [`atlas`] ->
//! [`attachment`] -> [`nullmodel`] / [`stats`] / [`covariates`] -> [`report`].
//! [`synth`] builds corpora with known answers and [`pipeline`] runs the
//! stages with file handoffs, as the `mattach` binary does.

mod country;
mod error;
mod io;

pub mod atlas;
pub mod attachment;
pub mod corpus;
pub mod covariates;
pub mod geo;
pub mod nullmodel;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod synth;

pub use atlas::{normalized_entropy, Assignment, Atlas, HashtagRecord};
pub use attachment::{classify_acculturation, compute_scores, AccClass, AttachmentScore, ScoreConfig, ScoreTable};
pub use corpus::{canonicalize_hashtag, CanonicalHashtag, Canonicalizer, FriendEdge, FriendGraph, Post};
pub use country::{cc, CountryCode};
pub use error::{Error, Result};
pub use geo::{label_population, LabelConfig, Population, UserProfile};
pub use pipeline::RunConfig;
