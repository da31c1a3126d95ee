//! Core identifiers shared by every pipeline stage: DIDs, collection NSIDs,
//! pagination cursors, and the normalized timestamp form used across tables.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Serialize};

/// Decentralized identifier of one user repository.
///
/// Treated as an opaque join key everywhere: the only structure we rely on is
/// the `did:<method>:<identifier>` shape.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Did(String);

/// Error for a string that does not look like a DID.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid DID `{0}`: expected `did:<method>:<identifier>`")]
pub struct InvalidDid(pub String);

impl Did {
    pub fn new(value: impl Into<String>) -> Result<Self, InvalidDid> {
        let value = value.into();
        let rest = match value.strip_prefix("did:") {
            Some(rest) => rest,
            None => return Err(InvalidDid(value)),
        };
        match rest.split_once(':') {
            Some((method, id)) if !method.is_empty() && !id.is_empty() => Ok(Did(value)),
            _ => Err(InvalidDid(value)),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Did {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Did {
    type Err = InvalidDid;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Did::new(s)
    }
}

impl TryFrom<String> for Did {
    type Error = InvalidDid;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Did::new(value)
    }
}

impl From<Did> for String {
    fn from(did: Did) -> String {
        did.0
    }
}

/// The five record collections the crawler visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Collection {
    Block,
    Follow,
    Post,
    Repost,
    Profile,
}

impl Collection {
    pub const ALL: [Collection; 5] = [
        Collection::Block,
        Collection::Follow,
        Collection::Post,
        Collection::Repost,
        Collection::Profile,
    ];

    /// The collection's NSID as it appears on the wire.
    pub fn nsid(&self) -> &'static str {
        match self {
            Collection::Block => "app.bsky.graph.block",
            Collection::Follow => "app.bsky.graph.follow",
            Collection::Post => "app.bsky.feed.post",
            Collection::Repost => "app.bsky.feed.repost",
            Collection::Profile => "app.bsky.actor.profile",
        }
    }

    /// Short alias accepted on the command line alongside the full NSID.
    pub fn alias(&self) -> &'static str {
        match self {
            Collection::Block => "blocks",
            Collection::Follow => "follows",
            Collection::Post => "posts",
            Collection::Repost => "reposts",
            Collection::Profile => "profiles",
        }
    }
}

impl fmt::Display for Collection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.nsid())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown collection `{0}`")]
pub struct UnknownCollection(pub String);

impl FromStr for Collection {
    type Err = UnknownCollection;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Collection::ALL
            .iter()
            .copied()
            .find(|c| c.nsid() == s || c.alias() == s)
            .ok_or_else(|| UnknownCollection(s.to_string()))
    }
}

impl TryFrom<String> for Collection {
    type Error = UnknownCollection;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Collection> for String {
    fn from(c: Collection) -> String {
        c.nsid().to_string()
    }
}

/// Opaque pagination token. Never inspected, only echoed back verbatim on the
/// next request for the same listing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cursor(String);

impl Cursor {
    /// Wraps a server-issued token. Empty tokens are meaningless and are
    /// rejected so `Option<Cursor>` cleanly encodes "no more pages".
    pub fn new(value: impl Into<String>) -> Option<Self> {
        let value = value.into();
        if value.is_empty() {
            None
        } else {
            Some(Cursor(value))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Cursor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid timestamp `{0}`: expected RFC 3339 date-time")]
pub struct InvalidTimestamp(pub String);

/// Parses an RFC 3339 timestamp from a record payload and normalizes it to
/// UTC with whole-second precision, the single form every table stores.
pub fn parse_timestamp(value: &str) -> Result<DateTime<Utc>, InvalidTimestamp> {
    let parsed = DateTime::parse_from_rfc3339(value)
        .map_err(|_| InvalidTimestamp(value.to_string()))?;
    let utc = parsed.with_timezone(&Utc);
    // with_nanosecond(0) only fails on leap seconds, which normalize to :59.
    Ok(utc.with_nanosecond(0).unwrap_or(utc))
}

/// Formats a timestamp the way the tables store it: `2023-08-02T10:00:00Z`.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// UTC calendar day a timestamp falls on; the bucketing key for daily counts.
pub fn utc_day(ts: &DateTime<Utc>) -> NaiveDate {
    ts.date_naive()
}
