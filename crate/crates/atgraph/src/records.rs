//! Typed rows for the eight dataset tables and parsers from raw record
//! payloads into them.
//!
//! Parsers are total: every raw record either becomes exactly one row or one
//! [`ParseError`] with a stable reason code. Live repository data is dirty,
//! so a failed record is skipped and counted, never fatal to a crawl.

use chrono::{DateTime, Utc};
use serde_json::Value;

use crate::types::{parse_timestamp, Did};

/// One record as returned by `listRecords`: its AT-URI, content hash, and the
/// full JSON value. Unknown fields ride along inside `value` untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub uri: String,
    pub cid: String,
    pub value: Value,
}

/// Repository metadata as returned by `describeRepo`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoDescription {
    pub did: Did,
    pub handle: String,
    /// NSIDs of the collections the repo contains, relay order.
    pub collections: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockRow {
    pub blocker: Did,
    pub subject: Did,
    pub rkey: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FollowRow {
    pub follower: Did,
    pub subject: Did,
    pub rkey: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRow {
    pub did: Did,
    pub handle: String,
    pub display_name: Option<String>,
    pub description: Option<String>,
    pub avatar_url: Option<String>,
    pub profile_created_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostRow {
    pub author: Did,
    pub rkey: String,
    pub text: String,
    pub created_at: DateTime<Utc>,
    pub reply_parent_uri: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepostRow {
    pub reposter: Did,
    pub subject_uri: String,
    pub subject_cid: String,
    pub rkey: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagRow {
    pub author: Did,
    pub post_rkey: String,
    /// Hashtag without the leading `#`.
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkRow {
    pub author: Did,
    pub post_rkey: String,
    pub uri: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MentionRow {
    pub author: Did,
    pub post_rkey: String,
    pub mentioned: Did,
}

/// Why a record was skipped instead of becoming a row.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("record value is not a JSON object")]
    NotAnObject,
    #[error("record declares type `{found}`, expected `{expected}`")]
    WrongType { expected: &'static str, found: String },
    #[error("missing or empty field `{0}`")]
    MissingField(&'static str),
    #[error("field `{field}` holds invalid timestamp `{value}`")]
    BadTimestamp { field: &'static str, value: String },
    #[error("field `{field}` holds invalid DID `{value}`")]
    BadDid { field: &'static str, value: String },
    #[error("record uri `{0}` lacks a record key segment")]
    BadUri(String),
    #[error("{0} subject refers to the repo itself")]
    SelfReference(&'static str),
}

impl ParseError {
    /// Stable reason code used as the key in skip-count reports.
    pub fn reason_code(&self) -> &'static str {
        match self {
            ParseError::NotAnObject => "not_an_object",
            ParseError::WrongType { .. } => "wrong_record_type",
            ParseError::MissingField(_) => "missing_field",
            ParseError::BadTimestamp { .. } => "invalid_timestamp",
            ParseError::BadDid { .. } => "invalid_did",
            ParseError::BadUri(_) => "invalid_uri",
            ParseError::SelfReference(_) => "self_reference",
        }
    }
}

/// Record key: the final path segment of the record's AT-URI.
pub fn rkey_from_uri(uri: &str) -> Result<&str, ParseError> {
    match uri.rsplit('/').next() {
        Some(rkey) if !rkey.is_empty() && rkey != uri => Ok(rkey),
        _ => Err(ParseError::BadUri(uri.to_string())),
    }
}

fn as_object<'v>(raw: &'v RawRecord) -> Result<&'v serde_json::Map<String, Value>, ParseError> {
    raw.value.as_object().ok_or(ParseError::NotAnObject)
}

fn check_type(obj: &serde_json::Map<String, Value>, expected: &'static str) -> Result<(), ParseError> {
    // Records fetched from a collection may legitimately omit `$type`; only an
    // explicit mismatch is rejected.
    match obj.get("$type").and_then(Value::as_str) {
        Some(found) if found != expected => Err(ParseError::WrongType {
            expected,
            found: found.to_string(),
        }),
        _ => Ok(()),
    }
}

fn required_str<'v>(
    obj: &'v serde_json::Map<String, Value>,
    field: &'static str,
) -> Result<&'v str, ParseError> {
    match obj.get(field).and_then(Value::as_str) {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(ParseError::MissingField(field)),
    }
}

fn required_did(
    obj: &serde_json::Map<String, Value>,
    field: &'static str,
) -> Result<Did, ParseError> {
    let s = required_str(obj, field)?;
    Did::new(s).map_err(|_| ParseError::BadDid {
        field,
        value: s.to_string(),
    })
}

fn required_timestamp(
    obj: &serde_json::Map<String, Value>,
    field: &'static str,
) -> Result<DateTime<Utc>, ParseError> {
    let s = required_str(obj, field)?;
    parse_timestamp(s).map_err(|_| ParseError::BadTimestamp {
        field,
        value: s.to_string(),
    })
}

/// Parses an `app.bsky.graph.block` record. Self-blocks are rejected.
pub fn parse_block(repo: &Did, raw: &RawRecord) -> Result<BlockRow, ParseError> {
    let obj = as_object(raw)?;
    check_type(obj, "app.bsky.graph.block")?;
    let subject = required_did(obj, "subject")?;
    let created_at = required_timestamp(obj, "createdAt")?;
    let rkey = rkey_from_uri(&raw.uri)?.to_string();
    if subject == *repo {
        return Err(ParseError::SelfReference("block"));
    }
    Ok(BlockRow {
        blocker: repo.clone(),
        subject,
        rkey,
        created_at,
    })
}

/// Parses an `app.bsky.graph.follow` record. Self-follows are rejected.
pub fn parse_follow(repo: &Did, raw: &RawRecord) -> Result<FollowRow, ParseError> {
    let obj = as_object(raw)?;
    check_type(obj, "app.bsky.graph.follow")?;
    let subject = required_did(obj, "subject")?;
    let created_at = required_timestamp(obj, "createdAt")?;
    let rkey = rkey_from_uri(&raw.uri)?.to_string();
    if subject == *repo {
        return Err(ParseError::SelfReference("follow"));
    }
    Ok(FollowRow {
        follower: repo.clone(),
        subject,
        rkey,
        created_at,
    })
}

/// Parses an `app.bsky.feed.post` record. Empty text is a valid post.
pub fn parse_post(repo: &Did, raw: &RawRecord) -> Result<PostRow, ParseError> {
    let obj = as_object(raw)?;
    check_type(obj, "app.bsky.feed.post")?;
    let text = obj
        .get("text")
        .and_then(Value::as_str)
        .ok_or(ParseError::MissingField("text"))?
        .to_string();
    let created_at = required_timestamp(obj, "createdAt")?;
    let rkey = rkey_from_uri(&raw.uri)?.to_string();
    let reply_parent_uri = obj
        .get("reply")
        .and_then(|r| r.get("parent"))
        .and_then(|p| p.get("uri"))
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())
        .map(str::to_string);
    Ok(PostRow {
        author: repo.clone(),
        rkey,
        text,
        created_at,
        reply_parent_uri,
    })
}

/// Parses an `app.bsky.feed.repost` record.
pub fn parse_repost(repo: &Did, raw: &RawRecord) -> Result<RepostRow, ParseError> {
    let obj = as_object(raw)?;
    check_type(obj, "app.bsky.feed.repost")?;
    let subject = obj
        .get("subject")
        .and_then(Value::as_object)
        .ok_or(ParseError::MissingField("subject"))?;
    let subject_uri = required_str(subject, "uri")?.to_string();
    let subject_cid = required_str(subject, "cid")?.to_string();
    let created_at = required_timestamp(obj, "createdAt")?;
    let rkey = rkey_from_uri(&raw.uri)?.to_string();
    Ok(RepostRow {
        reposter: repo.clone(),
        subject_uri,
        subject_cid,
        rkey,
        created_at,
    })
}

fn optional_string(obj: &serde_json::Map<String, Value>, field: &str) -> Option<String> {
    obj.get(field)
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}

/// Avatar URL from a profile record: either a plain string or an image blob
/// reference, which resolves against the public CDN.
fn avatar_url(did: &Did, value: &Value) -> Option<String> {
    if let Some(url) = value.as_str() {
        return if url.is_empty() { None } else { Some(url.to_string()) };
    }
    let cid = value
        .get("ref")
        .and_then(|r| r.get("$link"))
        .and_then(Value::as_str)
        .or_else(|| value.get("cid").and_then(Value::as_str))?;
    Some(format!("https://cdn.bsky.app/img/avatar/plain/{did}/{cid}@jpeg"))
}

/// Merges a repo description with its optional `actor.profile` record into a
/// user row. Never fails: a missing or malformed profile just leaves the
/// optional columns empty.
pub fn build_user(desc: &RepoDescription, profile: Option<&RawRecord>) -> UserRow {
    let mut row = UserRow {
        did: desc.did.clone(),
        handle: desc.handle.clone(),
        display_name: None,
        description: None,
        avatar_url: None,
        profile_created_at: None,
    };
    if let Some(obj) = profile.and_then(|p| p.value.as_object()) {
        row.display_name = optional_string(obj, "displayName");
        row.description = optional_string(obj, "description");
        row.avatar_url = obj.get("avatar").and_then(|v| avatar_url(&desc.did, v));
        row.profile_created_at = obj
            .get("createdAt")
            .and_then(Value::as_str)
            .and_then(|s| parse_timestamp(s).ok());
    }
    row
}

/// Tag, link, and mention rows pulled from one post's facets, plus reason
/// codes for any facet feature that could not be used.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FacetRows {
    pub tags: Vec<TagRow>,
    pub links: Vec<LinkRow>,
    pub mentions: Vec<MentionRow>,
    pub skipped: Vec<&'static str>,
}

impl FacetRows {
    pub fn row_count(&self) -> usize {
        self.tags.len() + self.links.len() + self.mentions.len()
    }
}

/// Extracts the tags/links/mentions sub-table rows from a post's facet
/// annotations, in facet order. A malformed facet feature is skipped and
/// counted; it never fails the post.
pub fn extract_facets(author: &Did, post_rkey: &str, raw: &RawRecord) -> FacetRows {
    let mut out = FacetRows::default();
    let facets = match raw.value.get("facets").and_then(Value::as_array) {
        Some(facets) => facets,
        None => return out,
    };
    for facet in facets {
        let features = match facet.get("features").and_then(Value::as_array) {
            Some(features) => features,
            None => {
                out.skipped.push("facet_malformed");
                continue;
            }
        };
        for feature in features {
            match feature.get("$type").and_then(Value::as_str) {
                Some("app.bsky.richtext.facet#tag") => {
                    let tag = feature
                        .get("tag")
                        .and_then(Value::as_str)
                        .map(|t| t.trim_start_matches('#'))
                        .filter(|t| !t.is_empty());
                    match tag {
                        Some(tag) => out.tags.push(TagRow {
                            author: author.clone(),
                            post_rkey: post_rkey.to_string(),
                            tag: tag.to_string(),
                        }),
                        None => out.skipped.push("facet_missing_field"),
                    }
                }
                Some("app.bsky.richtext.facet#link") => {
                    match feature.get("uri").and_then(Value::as_str).filter(|u| !u.is_empty()) {
                        Some(uri) => out.links.push(LinkRow {
                            author: author.clone(),
                            post_rkey: post_rkey.to_string(),
                            uri: uri.to_string(),
                        }),
                        None => out.skipped.push("facet_missing_field"),
                    }
                }
                Some("app.bsky.richtext.facet#mention") => {
                    match feature.get("did").and_then(Value::as_str) {
                        Some(did) => match Did::new(did) {
                            Ok(mentioned) => out.mentions.push(MentionRow {
                                author: author.clone(),
                                post_rkey: post_rkey.to_string(),
                                mentioned,
                            }),
                            Err(_) => out.skipped.push("facet_invalid_did"),
                        },
                        None => out.skipped.push("facet_missing_field"),
                    }
                }
                _ => out.skipped.push("facet_unknown_feature"),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn record(uri: &str, value: Value) -> RawRecord {
        RawRecord {
            uri: uri.to_string(),
            cid: "bafyreifake".to_string(),
            value,
        }
    }

    fn alice() -> Did {
        Did::new("did:plc:alice").unwrap()
    }

    #[test]
    fn block_record_parses() {
        let raw = record(
            "at://did:plc:alice/app.bsky.graph.block/3kabc",
            json!({
                "$type": "app.bsky.graph.block",
                "subject": "did:plc:bob",
                "createdAt": "2023-08-02T10:00:00Z"
            }),
        );
        let row = parse_block(&alice(), &raw).unwrap();
        assert_eq!(row.blocker, alice());
        assert_eq!(row.subject.as_str(), "did:plc:bob");
        assert_eq!(row.rkey, "3kabc");
        assert_eq!(crate::types::format_timestamp(&row.created_at), "2023-08-02T10:00:00Z");
    }

    #[test]
    fn self_block_is_rejected() {
        let raw = record(
            "at://did:plc:alice/app.bsky.graph.block/3kabc",
            json!({"subject": "did:plc:alice", "createdAt": "2023-08-02T10:00:00Z"}),
        );
        let err = parse_block(&alice(), &raw).unwrap_err();
        assert_eq!(err, ParseError::SelfReference("block"));
        assert_eq!(err.reason_code(), "self_reference");
    }

    #[test]
    fn block_missing_created_at_is_malformed() {
        let raw = record(
            "at://did:plc:alice/app.bsky.graph.block/3kabc",
            json!({"subject": "did:plc:bob"}),
        );
        let err = parse_block(&alice(), &raw).unwrap_err();
        assert_eq!(err, ParseError::MissingField("createdAt"));
    }

    #[test]
    fn block_wrong_type_is_rejected() {
        let raw = record(
            "at://did:plc:alice/app.bsky.graph.block/3kabc",
            json!({
                "$type": "app.bsky.graph.follow",
                "subject": "did:plc:bob",
                "createdAt": "2023-08-02T10:00:00Z"
            }),
        );
        assert_eq!(
            parse_block(&alice(), &raw).unwrap_err().reason_code(),
            "wrong_record_type"
        );
    }

    #[test]
    fn follow_record_parses_and_self_follow_rejected() {
        let ok = record(
            "at://did:plc:alice/app.bsky.graph.follow/3kf01",
            json!({"subject": "did:plc:carol", "createdAt": "2023-08-03T09:30:00Z"}),
        );
        let row = parse_follow(&alice(), &ok).unwrap();
        assert_eq!(row.subject.as_str(), "did:plc:carol");

        let own = record(
            "at://did:plc:alice/app.bsky.graph.follow/3kf02",
            json!({"subject": "did:plc:alice", "createdAt": "2023-08-03T09:30:00Z"}),
        );
        assert_eq!(
            parse_follow(&alice(), &own).unwrap_err(),
            ParseError::SelfReference("follow")
        );
    }

    #[test]
    fn follow_empty_subject_is_malformed() {
        let raw = record(
            "at://did:plc:alice/app.bsky.graph.follow/3kf03",
            json!({"subject": "", "createdAt": "2023-08-03T09:30:00Z"}),
        );
        assert_eq!(
            parse_follow(&alice(), &raw).unwrap_err(),
            ParseError::MissingField("subject")
        );
    }

    #[test]
    fn post_parses_text_and_reply() {
        let plain = record(
            "at://did:plc:alice/app.bsky.feed.post/3kp01",
            json!({"text": "hello world", "createdAt": "2023-08-02T10:00:00Z"}),
        );
        let row = parse_post(&alice(), &plain).unwrap();
        assert_eq!(row.text, "hello world");
        assert_eq!(row.reply_parent_uri, None);

        let reply = record(
            "at://did:plc:alice/app.bsky.feed.post/3kp02",
            json!({
                "text": "in thread",
                "createdAt": "2023-08-02T11:00:00Z",
                "reply": {
                    "root": {"uri": "at://did:plc:bob/app.bsky.feed.post/3k1", "cid": "bafy1"},
                    "parent": {"uri": "at://did:plc:bob/app.bsky.feed.post/3k2", "cid": "bafy2"}
                }
            }),
        );
        let row = parse_post(&alice(), &reply).unwrap();
        assert_eq!(
            row.reply_parent_uri.as_deref(),
            Some("at://did:plc:bob/app.bsky.feed.post/3k2")
        );
    }

    #[test]
    fn empty_post_text_is_valid() {
        let raw = record(
            "at://did:plc:alice/app.bsky.feed.post/3kp03",
            json!({"text": "", "createdAt": "2023-08-02T10:00:00Z"}),
        );
        assert_eq!(parse_post(&alice(), &raw).unwrap().text, "");
    }

    #[test]
    fn post_missing_text_is_malformed() {
        let raw = record(
            "at://did:plc:alice/app.bsky.feed.post/3kp04",
            json!({"createdAt": "2023-08-02T10:00:00Z"}),
        );
        assert_eq!(
            parse_post(&alice(), &raw).unwrap_err(),
            ParseError::MissingField("text")
        );
    }

    #[test]
    fn repost_parses_subject() {
        let raw = record(
            "at://did:plc:alice/app.bsky.feed.repost/3kr01",
            json!({
                "subject": {"uri": "at://did:plc:carol/app.bsky.feed.post/3k2a", "cid": "bafyrepost"},
                "createdAt": "2023-08-04T08:00:00Z"
            }),
        );
        let row = parse_repost(&alice(), &raw).unwrap();
        assert_eq!(row.subject_uri, "at://did:plc:carol/app.bsky.feed.post/3k2a");
        assert_eq!(row.subject_cid, "bafyrepost");

        // The parser itself permits re-parsing the same record; dedupe is the
        // store's job.
        assert_eq!(parse_repost(&alice(), &raw).unwrap(), row);
    }

    #[test]
    fn repost_missing_subject_is_malformed() {
        let raw = record(
            "at://did:plc:alice/app.bsky.feed.repost/3kr02",
            json!({"createdAt": "2023-08-04T08:00:00Z"}),
        );
        assert_eq!(
            parse_repost(&alice(), &raw).unwrap_err(),
            ParseError::MissingField("subject")
        );
    }

    #[test]
    fn bad_timestamp_reports_value() {
        let raw = record(
            "at://did:plc:alice/app.bsky.graph.block/3kb9",
            json!({"subject": "did:plc:bob", "createdAt": "not-a-time"}),
        );
        assert_eq!(
            parse_block(&alice(), &raw).unwrap_err(),
            ParseError::BadTimestamp { field: "createdAt", value: "not-a-time".into() }
        );
    }

    fn desc() -> RepoDescription {
        RepoDescription {
            did: alice(),
            handle: "alice.test".to_string(),
            collections: vec!["app.bsky.feed.post".to_string()],
        }
    }

    #[test]
    fn user_from_description_only() {
        let row = build_user(&desc(), None);
        assert_eq!(row.handle, "alice.test");
        assert_eq!(row.display_name, None);
        assert_eq!(row.avatar_url, None);
        assert_eq!(row.profile_created_at, None);
    }

    #[test]
    fn user_merges_profile_record() {
        let profile = record(
            "at://did:plc:alice/app.bsky.actor.profile/self",
            json!({
                "$type": "app.bsky.actor.profile",
                "displayName": "Alice",
                "description": "line one\nline two",
                "avatar": {"$type": "blob", "ref": {"$link": "bafkreiavatar"}, "mimeType": "image/jpeg"},
                "createdAt": "2023-07-01T00:00:00Z"
            }),
        );
        let row = build_user(&desc(), Some(&profile));
        assert_eq!(row.display_name.as_deref(), Some("Alice"));
        assert_eq!(row.description.as_deref(), Some("line one\nline two"));
        assert_eq!(
            row.avatar_url.as_deref(),
            Some("https://cdn.bsky.app/img/avatar/plain/did:plc:alice/bafkreiavatar@jpeg")
        );
        assert!(row.profile_created_at.is_some());
    }

    #[test]
    fn facetless_post_yields_empty_lists() {
        let raw = record(
            "at://did:plc:alice/app.bsky.feed.post/3kp05",
            json!({"text": "plain", "createdAt": "2023-08-02T10:00:00Z"}),
        );
        let rows = extract_facets(&alice(), "3kp05", &raw);
        assert_eq!(rows, FacetRows::default());
    }

    #[test]
    fn one_facet_of_each_kind() {
        let raw = record(
            "at://did:plc:alice/app.bsky.feed.post/3kp06",
            json!({
                "text": "#rust and a link for @bob",
                "createdAt": "2023-08-02T10:00:00Z",
                "facets": [
                    {"index": {"byteStart": 0, "byteEnd": 5},
                     "features": [{"$type": "app.bsky.richtext.facet#tag", "tag": "rust"}]},
                    {"index": {"byteStart": 12, "byteEnd": 16},
                     "features": [{"$type": "app.bsky.richtext.facet#link", "uri": "https://example.com/x"}]},
                    {"index": {"byteStart": 21, "byteEnd": 25},
                     "features": [{"$type": "app.bsky.richtext.facet#mention", "did": "did:plc:bob"}]}
                ]
            }),
        );
        let rows = extract_facets(&alice(), "3kp06", &raw);
        assert_eq!(rows.tags.len(), 1);
        assert_eq!(rows.links.len(), 1);
        assert_eq!(rows.mentions.len(), 1);
        assert_eq!(rows.tags[0].tag, "rust");
        assert_eq!(rows.links[0].uri, "https://example.com/x");
        assert_eq!(rows.mentions[0].mentioned.as_str(), "did:plc:bob");
        assert!(rows.skipped.is_empty());
    }

    #[test]
    fn tag_facets_keep_order() {
        let raw = record(
            "at://did:plc:alice/app.bsky.feed.post/3kp07",
            json!({
                "text": "#a #b",
                "createdAt": "2023-08-02T10:00:00Z",
                "facets": [
                    {"features": [{"$type": "app.bsky.richtext.facet#tag", "tag": "a"}]},
                    {"features": [{"$type": "app.bsky.richtext.facet#tag", "tag": "b"}]}
                ]
            }),
        );
        let rows = extract_facets(&alice(), "3kp07", &raw);
        let tags: Vec<&str> = rows.tags.iter().map(|t| t.tag.as_str()).collect();
        assert_eq!(tags, ["a", "b"]);
    }

    #[test]
    fn malformed_facet_is_skipped_not_fatal() {
        let raw = record(
            "at://did:plc:alice/app.bsky.feed.post/3kp08",
            json!({
                "text": "mixed",
                "createdAt": "2023-08-02T10:00:00Z",
                "facets": [
                    {"features": [{"$type": "app.bsky.richtext.facet#tag"}]},
                    {"features": [{"$type": "app.bsky.richtext.facet#mention", "did": "nonsense"}]},
                    {"features": [{"$type": "app.bsky.richtext.facet#later.feature", "x": 1}]},
                    {"index": {"byteStart": 0, "byteEnd": 1}},
                    {"features": [{"$type": "app.bsky.richtext.facet#link", "uri": "https://ok.example"}]}
                ]
            }),
        );
        let rows = extract_facets(&alice(), "3kp08", &raw);
        assert_eq!(rows.row_count(), 1);
        assert_eq!(
            rows.skipped,
            vec!["facet_missing_field", "facet_invalid_did", "facet_unknown_feature", "facet_malformed"]
        );
    }

    #[test]
    fn leading_hash_is_stripped_from_tags() {
        let raw = record(
            "at://did:plc:alice/app.bsky.feed.post/3kp09",
            json!({
                "text": "#tagged",
                "createdAt": "2023-08-02T10:00:00Z",
                "facets": [{"features": [{"$type": "app.bsky.richtext.facet#tag", "tag": "#tagged"}]}]
            }),
        );
        assert_eq!(extract_facets(&alice(), "3kp09", &raw).tags[0].tag, "tagged");
    }

    #[test]
    fn rkey_requires_path_segment() {
        assert_eq!(rkey_from_uri("at://did:plc:a/app.bsky.feed.post/3k1").unwrap(), "3k1");
        assert!(rkey_from_uri("no-slashes").is_err());
        assert!(rkey_from_uri("trailing/").is_err());
    }
}
