//! Append-only CSV persistence for the eight dataset tables.
//!
//! One file per table, UTF-8 with LF line endings, a fixed header row, and
//! RFC 4180 quoting. Appends dedupe on each table's uniqueness key against an
//! in-memory index rebuilt from the file on first touch, so re-ingesting the
//! same records is a no-op.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};

use crate::records::{
    BlockRow, FollowRow, LinkRow, MentionRow, PostRow, RepostRow, TagRow, UserRow,
};
use crate::types::{format_timestamp, parse_timestamp, utc_day, Did};

/// The eight dataset tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Table {
    Blocks,
    Follows,
    Users,
    Posts,
    Reposts,
    Tags,
    Links,
    Mentions,
}

impl Table {
    pub const ALL: [Table; 8] = [
        Table::Blocks,
        Table::Follows,
        Table::Users,
        Table::Posts,
        Table::Reposts,
        Table::Tags,
        Table::Links,
        Table::Mentions,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Table::Blocks => "blocks",
            Table::Follows => "follows",
            Table::Users => "users",
            Table::Posts => "posts",
            Table::Reposts => "reposts",
            Table::Tags => "tags",
            Table::Links => "links",
            Table::Mentions => "mentions",
        }
    }

    /// Column names, in file order.
    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Table::Blocks => &["blocker_did", "subject_did", "rkey", "created_at", "ingested_at"],
            Table::Follows => &["follower_did", "subject_did", "rkey", "created_at", "ingested_at"],
            Table::Users => &[
                "did",
                "handle",
                "display_name",
                "description",
                "avatar_url",
                "profile_created_at",
                "ingested_at",
            ],
            Table::Posts => &["author_did", "rkey", "text", "created_at", "reply_parent_uri", "ingested_at"],
            Table::Reposts => &[
                "reposter_did",
                "subject_uri",
                "subject_cid",
                "rkey",
                "created_at",
                "ingested_at",
            ],
            Table::Tags => &["author_did", "post_rkey", "tag", "ingested_at"],
            Table::Links => &["author_did", "post_rkey", "uri", "ingested_at"],
            Table::Mentions => &["author_did", "post_rkey", "mentioned_did", "ingested_at"],
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {source}")]
    Csv {
        path: PathBuf,
        line: u64,
        #[source]
        source: csv::Error,
    },
    #[error("table {table} has header {found:?}, expected {expected:?}")]
    SchemaMismatch {
        table: &'static str,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("table {table} line {line}: {reason}")]
    MalformedRow {
        table: &'static str,
        line: u64,
        reason: String,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A typed row bound to its table: column mapping, dedupe key, and the
/// timestamp used for date-range reads.
pub trait TableRecord: Sized {
    const TABLE: Table;

    /// Unambiguous dedupe key over the table's uniqueness columns.
    fn unique_key(&self) -> String;

    /// `created_at` for date-range reads; `None` for undated rows, which a
    /// range read excludes.
    fn created_at(&self) -> Option<DateTime<Utc>>;

    /// Field values in column order, excluding `ingested_at`.
    fn to_fields(&self) -> Vec<String>;

    /// Rebuilds the row from one CSV record (which includes `ingested_at`).
    fn from_fields(rec: &csv::StringRecord) -> Result<Self, String>;
}

/// Length-prefixes each part so distinct field tuples can never collide.
fn join_key(parts: &[&str]) -> String {
    let mut key = String::new();
    for part in parts {
        key.push_str(&part.len().to_string());
        key.push(':');
        key.push_str(part);
    }
    key
}

fn field<'r>(rec: &'r csv::StringRecord, idx: usize, name: &str) -> Result<&'r str, String> {
    rec.get(idx).ok_or_else(|| format!("missing column `{name}`"))
}

fn did_field(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<Did, String> {
    Did::new(field(rec, idx, name)?).map_err(|e| format!("column `{name}`: {e}"))
}

fn ts_field(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<DateTime<Utc>, String> {
    parse_timestamp(field(rec, idx, name)?).map_err(|e| format!("column `{name}`: {e}"))
}

fn opt_string(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<Option<String>, String> {
    Ok(Some(field(rec, idx, name)?.to_string()).filter(|s| !s.is_empty()))
}

fn opt_str_to_field(value: &Option<String>) -> String {
    value.clone().unwrap_or_default()
}

impl TableRecord for BlockRow {
    const TABLE: Table = Table::Blocks;

    fn unique_key(&self) -> String {
        join_key(&[self.blocker.as_str(), &self.rkey])
    }

    fn created_at(&self) -> Option<DateTime<Utc>> {
        Some(self.created_at)
    }

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.blocker.to_string(),
            self.subject.to_string(),
            self.rkey.clone(),
            format_timestamp(&self.created_at),
        ]
    }

    fn from_fields(rec: &csv::StringRecord) -> Result<Self, String> {
        Ok(BlockRow {
            blocker: did_field(rec, 0, "blocker_did")?,
            subject: did_field(rec, 1, "subject_did")?,
            rkey: field(rec, 2, "rkey")?.to_string(),
            created_at: ts_field(rec, 3, "created_at")?,
        })
    }
}

impl TableRecord for FollowRow {
    const TABLE: Table = Table::Follows;

    fn unique_key(&self) -> String {
        join_key(&[self.follower.as_str(), &self.rkey])
    }

    fn created_at(&self) -> Option<DateTime<Utc>> {
        Some(self.created_at)
    }

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.follower.to_string(),
            self.subject.to_string(),
            self.rkey.clone(),
            format_timestamp(&self.created_at),
        ]
    }

    fn from_fields(rec: &csv::StringRecord) -> Result<Self, String> {
        Ok(FollowRow {
            follower: did_field(rec, 0, "follower_did")?,
            subject: did_field(rec, 1, "subject_did")?,
            rkey: field(rec, 2, "rkey")?.to_string(),
            created_at: ts_field(rec, 3, "created_at")?,
        })
    }
}

impl TableRecord for UserRow {
    const TABLE: Table = Table::Users;

    fn unique_key(&self) -> String {
        join_key(&[self.did.as_str()])
    }

    fn created_at(&self) -> Option<DateTime<Utc>> {
        self.profile_created_at
    }

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.did.to_string(),
            self.handle.clone(),
            opt_str_to_field(&self.display_name),
            opt_str_to_field(&self.description),
            opt_str_to_field(&self.avatar_url),
            self.profile_created_at
                .as_ref()
                .map(format_timestamp)
                .unwrap_or_default(),
        ]
    }

    fn from_fields(rec: &csv::StringRecord) -> Result<Self, String> {
        let profile_created_at = match field(rec, 5, "profile_created_at")? {
            "" => None,
            s => Some(parse_timestamp(s).map_err(|e| format!("column `profile_created_at`: {e}"))?),
        };
        Ok(UserRow {
            did: did_field(rec, 0, "did")?,
            handle: field(rec, 1, "handle")?.to_string(),
            display_name: opt_string(rec, 2, "display_name")?,
            description: opt_string(rec, 3, "description")?,
            avatar_url: opt_string(rec, 4, "avatar_url")?,
            profile_created_at,
        })
    }
}

impl TableRecord for PostRow {
    const TABLE: Table = Table::Posts;

    fn unique_key(&self) -> String {
        join_key(&[self.author.as_str(), &self.rkey])
    }

    fn created_at(&self) -> Option<DateTime<Utc>> {
        Some(self.created_at)
    }

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.author.to_string(),
            self.rkey.clone(),
            self.text.clone(),
            format_timestamp(&self.created_at),
            opt_str_to_field(&self.reply_parent_uri),
        ]
    }

    fn from_fields(rec: &csv::StringRecord) -> Result<Self, String> {
        Ok(PostRow {
            author: did_field(rec, 0, "author_did")?,
            rkey: field(rec, 1, "rkey")?.to_string(),
            text: field(rec, 2, "text")?.to_string(),
            created_at: ts_field(rec, 3, "created_at")?,
            reply_parent_uri: opt_string(rec, 4, "reply_parent_uri")?,
        })
    }
}

impl TableRecord for RepostRow {
    const TABLE: Table = Table::Reposts;

    fn unique_key(&self) -> String {
        join_key(&[self.reposter.as_str(), &self.rkey])
    }

    fn created_at(&self) -> Option<DateTime<Utc>> {
        Some(self.created_at)
    }

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.reposter.to_string(),
            self.subject_uri.clone(),
            self.subject_cid.clone(),
            self.rkey.clone(),
            format_timestamp(&self.created_at),
        ]
    }

    fn from_fields(rec: &csv::StringRecord) -> Result<Self, String> {
        Ok(RepostRow {
            reposter: did_field(rec, 0, "reposter_did")?,
            subject_uri: field(rec, 1, "subject_uri")?.to_string(),
            subject_cid: field(rec, 2, "subject_cid")?.to_string(),
            rkey: field(rec, 3, "rkey")?.to_string(),
            created_at: ts_field(rec, 4, "created_at")?,
        })
    }
}

impl TableRecord for TagRow {
    const TABLE: Table = Table::Tags;

    fn unique_key(&self) -> String {
        join_key(&[self.author.as_str(), &self.post_rkey, &self.tag])
    }

    fn created_at(&self) -> Option<DateTime<Utc>> {
        None
    }

    fn to_fields(&self) -> Vec<String> {
        vec![self.author.to_string(), self.post_rkey.clone(), self.tag.clone()]
    }

    fn from_fields(rec: &csv::StringRecord) -> Result<Self, String> {
        Ok(TagRow {
            author: did_field(rec, 0, "author_did")?,
            post_rkey: field(rec, 1, "post_rkey")?.to_string(),
            tag: field(rec, 2, "tag")?.to_string(),
        })
    }
}

impl TableRecord for LinkRow {
    const TABLE: Table = Table::Links;

    fn unique_key(&self) -> String {
        join_key(&[self.author.as_str(), &self.post_rkey, &self.uri])
    }

    fn created_at(&self) -> Option<DateTime<Utc>> {
        None
    }

    fn to_fields(&self) -> Vec<String> {
        vec![self.author.to_string(), self.post_rkey.clone(), self.uri.clone()]
    }

    fn from_fields(rec: &csv::StringRecord) -> Result<Self, String> {
        Ok(LinkRow {
            author: did_field(rec, 0, "author_did")?,
            post_rkey: field(rec, 1, "post_rkey")?.to_string(),
            uri: field(rec, 2, "uri")?.to_string(),
        })
    }
}

impl TableRecord for MentionRow {
    const TABLE: Table = Table::Mentions;

    fn unique_key(&self) -> String {
        join_key(&[self.author.as_str(), &self.post_rkey, self.mentioned.as_str()])
    }

    fn created_at(&self) -> Option<DateTime<Utc>> {
        None
    }

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.author.to_string(),
            self.post_rkey.clone(),
            self.mentioned.to_string(),
        ]
    }

    fn from_fields(rec: &csv::StringRecord) -> Result<Self, String> {
        Ok(MentionRow {
            author: did_field(rec, 0, "author_did")?,
            post_rkey: field(rec, 1, "post_rkey")?.to_string(),
            mentioned: did_field(rec, 2, "mentioned_did")?,
        })
    }
}

/// Outcome of one append batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AppendStats {
    pub appended: u64,
    pub duplicates: u64,
}

enum StampMode {
    /// Wall clock, clamped monotone non-decreasing within this store handle.
    Now { last: DateTime<Utc> },
    /// Fixed stamp for byte-reproducible runs.
    Fixed(DateTime<Utc>),
}

/// Dataset directory holding one CSV file per table.
///
/// One writer per table at a time; concurrent readers are fine while nothing
/// writes. There is no cross-process locking.
pub struct Store {
    dir: PathBuf,
    keys: HashMap<Table, HashSet<String>>,
    stamp: StampMode,
}

impl Store {
    /// Opens (creating if needed) the dataset directory. Dedupe indexes are
    /// rebuilt lazily from the files on first append to each table.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(Store {
            dir,
            keys: HashMap::new(),
            stamp: StampMode::Now { last: DateTime::<Utc>::MIN_UTC },
        })
    }

    /// Stamps every subsequently appended row with `ts` instead of the wall
    /// clock, making output files reproducible byte for byte.
    pub fn with_ingest_stamp(mut self, ts: DateTime<Utc>) -> Store {
        self.stamp = StampMode::Fixed(ts);
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn table_path(&self, table: Table) -> PathBuf {
        self.dir.join(table.file_name())
    }

    fn next_stamp(&mut self) -> DateTime<Utc> {
        match &mut self.stamp {
            StampMode::Fixed(ts) => *ts,
            StampMode::Now { last } => {
                let now = Utc::now().with_nanosecond(0).unwrap_or_else(Utc::now);
                *last = now.max(*last);
                *last
            }
        }
    }

    /// Creates the table file with its header if it does not exist yet.
    pub fn ensure_table(&mut self, table: Table) -> Result<(), StoreError> {
        let path = self.table_path(table);
        if !path.exists() {
            let mut header = Vec::new();
            {
                let mut w = csv::Writer::from_writer(&mut header);
                w.write_record(table.columns()).map_err(|e| StoreError::Csv {
                    path: path.clone(),
                    line: 1,
                    source: e,
                })?;
                w.flush().map_err(|e| io_err(&path, e))?;
            }
            fs::write(&path, header).map_err(|e| io_err(&path, e))?;
        }
        Ok(())
    }

    fn check_header(&self, table: Table, headers: &csv::StringRecord, path: &Path) -> Result<(), StoreError> {
        let _ = path;
        let expected: Vec<String> = table.columns().iter().map(|c| c.to_string()).collect();
        let found: Vec<String> = headers.iter().map(str::to_string).collect();
        if expected != found {
            return Err(StoreError::SchemaMismatch {
                table: table.name(),
                expected,
                found,
            });
        }
        Ok(())
    }

    fn load_keys<R: TableRecord>(&mut self) -> Result<(), StoreError> {
        if self.keys.contains_key(&R::TABLE) {
            return Ok(());
        }
        let existing: Vec<R> = self.read(None)?;
        let set = existing.iter().map(R::unique_key).collect();
        self.keys.insert(R::TABLE, set);
        Ok(())
    }

    /// Appends rows that do not collide with an existing uniqueness key;
    /// duplicates are dropped and counted. The header is validated before any
    /// byte is written, so a schema mismatch rejects the whole batch.
    pub fn append<R: TableRecord>(&mut self, rows: &[R]) -> Result<AppendStats, StoreError> {
        let table = R::TABLE;
        let path = self.table_path(table);
        self.load_keys::<R>()?;
        self.ensure_table(table)?;

        // Revalidate the on-disk header; the file may predate this handle.
        {
            let mut reader = csv::Reader::from_path(&path).map_err(|e| StoreError::Csv {
                path: path.clone(),
                line: 1,
                source: e,
            })?;
            let headers = reader.headers().map_err(|e| StoreError::Csv {
                path: path.clone(),
                line: 1,
                source: e,
            })?;
            self.check_header(table, headers, &path)?;
        }

        let stamp = format_timestamp(&self.next_stamp());
        let keys = self.keys.get_mut(&table).expect("keys loaded above");

        let mut stats = AppendStats::default();
        let mut buf = Vec::new();
        {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
            for row in rows {
                let key = row.unique_key();
                if !keys.insert(key) {
                    stats.duplicates += 1;
                    continue;
                }
                let mut fields = row.to_fields();
                fields.push(stamp.clone());
                w.write_record(&fields).map_err(|e| StoreError::Csv {
                    path: path.clone(),
                    line: 0,
                    source: e,
                })?;
                stats.appended += 1;
            }
            w.flush().map_err(|e| io_err(&path, e))?;
        }

        if !buf.is_empty() {
            let mut file = OpenOptions::new()
                .append(true)
                .open(&path)
                .map_err(|e| io_err(&path, e))?;
            file.write_all(&buf).map_err(|e| io_err(&path, e))?;
            file.flush().map_err(|e| io_err(&path, e))?;
        }
        Ok(stats)
    }

    /// Reads rows in file order. With a date range, keeps rows whose
    /// `created_at` falls on a UTC day within `[since, until]` inclusive;
    /// undated rows do not match a range. An absent file reads as empty.
    pub fn read<R: TableRecord>(
        &self,
        range: Option<(NaiveDate, NaiveDate)>,
    ) -> Result<Vec<R>, StoreError> {
        let table = R::TABLE;
        let path = self.table_path(table);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let file = File::open(&path).map_err(|e| io_err(&path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        {
            let headers = reader.headers().map_err(|e| StoreError::Csv {
                path: path.clone(),
                line: 1,
                source: e,
            })?;
            self.check_header(table, headers, &path)?;
        }
        let mut rows = Vec::new();
        for result in reader.records() {
            let rec = result.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                StoreError::Csv {
                    path: path.clone(),
                    line,
                    source: e,
                }
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let row = R::from_fields(&rec).map_err(|reason| StoreError::MalformedRow {
                table: table.name(),
                line,
                reason,
            })?;
            if let Some((since, until)) = range {
                match row.created_at() {
                    Some(ts) => {
                        let day = utc_day(&ts);
                        if day < since || day > until {
                            continue;
                        }
                    }
                    None => continue,
                }
            }
            rows.push(row);
        }
        Ok(rows)
    }
}
