//! Daily z-score classification of blocking behavior.
//!
//! For every UTC day, users are scored by how far their block count sits from
//! that day's mean, in units of the day's population standard deviation. A
//! user whose z-score strictly exceeds the day's percentile threshold
//! (default 99th) is labeled anomalous; everyone else is regular. Days where
//! the z-score is undefined (a single blocker, or zero variance) label
//! everyone regular.
//!
//! Only users with at least one block on a day enter that day's population;
//! silent users are unobserved in the blocks table and would make the result
//! depend on crawl completeness.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;

use crate::records::BlockRow;
use crate::store::{Store, StoreError};
use crate::types::{utc_day, Did};

/// Blocks issued by one user on one UTC day. Implicitly `count >= 1`: users
/// without blocks that day do not appear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DailyCount {
    pub day: NaiveDate,
    pub did: Did,
    pub count: u32,
}

/// Per-day population statistics over the blocking users' counts.
#[derive(Debug, Clone, PartialEq)]
pub struct DayStats {
    pub day: NaiveDate,
    pub n_users: usize,
    pub mean: f64,
    /// Population standard deviation (divisor `n`).
    pub std: f64,
    /// The day's z-score threshold; present iff `std > 0` and `n_users >= 2`.
    pub threshold_z: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Anomalous,
    Regular,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Anomalous => "anomalous",
            Label::Regular => "regular",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "anomalous" => Ok(Label::Anomalous),
            "regular" => Ok(Label::Regular),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

/// One user's classification for one day.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledUserDay {
    pub day: NaiveDate,
    pub did: Did,
    pub count: u32,
    /// Absent when the day's z-scores are undefined.
    pub z: Option<f64>,
    pub label: Label,
}

/// Classification of one day: its stats plus every user's label.
#[derive(Debug, Clone, PartialEq)]
pub struct DayClassification {
    pub stats: DayStats,
    pub labels: Vec<LabeledUserDay>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PercentileError {
    #[error("percentile must lie strictly between 0 and 100, got {0}")]
    OutOfRange(f64),
    #[error("cannot take a percentile of an empty list")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("z-score undefined: day has zero standard deviation")]
pub struct ZscoreUndefined;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Percentile(PercentileError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {reason}")]
    BadReportRow {
        path: PathBuf,
        line: u64,
        reason: String,
    },
}

/// Buckets block rows into per-(day, user) counts, dropping rows outside the
/// window. Output is sorted by day then DID; the sum of counts equals the
/// number of in-window rows.
pub fn aggregate_daily(
    blocks: &[BlockRow],
    window: Option<(NaiveDate, NaiveDate)>,
) -> Vec<DailyCount> {
    let mut buckets: BTreeMap<(NaiveDate, Did), u32> = BTreeMap::new();
    for row in blocks {
        let day = utc_day(&row.created_at);
        if let Some((since, until)) = window {
            if day < since || day > until {
                continue;
            }
        }
        *buckets.entry((day, row.blocker.clone())).or_insert(0) += 1;
    }
    buckets
        .into_iter()
        .map(|((day, did), count)| DailyCount { day, did, count })
        .collect()
}

/// Mean and population standard deviation of one day's counts. The threshold
/// is left unset; classification fills it when defined.
pub fn day_stats(day: NaiveDate, counts: &[f64]) -> DayStats {
    let n = counts.len();
    if n == 0 {
        return DayStats { day, n_users: 0, mean: 0.0, std: 0.0, threshold_z: None };
    }
    let mean = counts.iter().sum::<f64>() / n as f64;
    let variance = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n as f64;
    DayStats {
        day,
        n_users: n,
        mean,
        std: variance.sqrt(),
        threshold_z: None,
    }
}

/// `(count - mean) / std`. Undefined when the day has zero variance.
pub fn zscore(count: f64, stats: &DayStats) -> Result<f64, ZscoreUndefined> {
    if stats.std > 0.0 {
        Ok((count - stats.mean) / stats.std)
    } else {
        Err(ZscoreUndefined)
    }
}

/// Linear-interpolation percentile of `values`: sorted ascending, rank
/// `r = (n - 1) * p / 100`, result `v[floor(r)] + frac(r) * (v[floor(r) + 1]
/// - v[floor(r)])`. A single value is its own percentile.
pub fn percentile_threshold(values: &[f64], p: f64) -> Result<f64, PercentileError> {
    if !(p > 0.0 && p < 100.0) {
        return Err(PercentileError::OutOfRange(p));
    }
    if values.is_empty() {
        return Err(PercentileError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("z-scores are finite"));
    let n = sorted.len();
    if n == 1 {
        return Ok(sorted[0]);
    }
    let rank = (n - 1) as f64 * p / 100.0;
    let lo = rank.floor() as usize;
    let frac = rank - rank.floor();
    Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
}

/// Core classification over real-valued counts for one day.
///
/// Exposed with `f64` counts so properties that hold in the reals (affine
/// invariance in particular) can be exercised directly; the crawl pipeline
/// goes through [`classify_day`].
pub fn classify_counts(
    day: NaiveDate,
    counts: &[(Did, f64)],
    p: f64,
) -> Result<DayClassification, PercentileError> {
    if !(p > 0.0 && p < 100.0) {
        return Err(PercentileError::OutOfRange(p));
    }
    let values: Vec<f64> = counts.iter().map(|(_, c)| *c).collect();
    let mut stats = day_stats(day, &values);

    let zs: Option<Vec<f64>> = if stats.n_users >= 2 && stats.std > 0.0 {
        Some(values.iter().map(|c| (c - stats.mean) / stats.std).collect())
    } else {
        None
    };

    let labels = match zs {
        None => counts
            .iter()
            .map(|(did, c)| LabeledUserDay {
                day,
                did: did.clone(),
                count: *c as u32,
                z: None,
                label: Label::Regular,
            })
            .collect(),
        Some(zs) => {
            let threshold = percentile_threshold(&zs, p)?;
            stats.threshold_z = Some(threshold);
            counts
                .iter()
                .zip(zs)
                .map(|((did, c), z)| LabeledUserDay {
                    day,
                    did: did.clone(),
                    count: *c as u32,
                    z: Some(z),
                    label: if z > threshold { Label::Anomalous } else { Label::Regular },
                })
                .collect()
        }
    };

    Ok(DayClassification { stats, labels })
}

/// Classifies one day's counts: z-scores against the day's stats, threshold
/// at the `p`th percentile, anomalous iff strictly above it. Degenerate days
/// (one user, or zero variance) label everyone regular with no z.
pub fn classify_day(
    day: NaiveDate,
    counts: &[DailyCount],
    p: f64,
) -> Result<DayClassification, PercentileError> {
    debug_assert!(counts.iter().all(|c| c.day == day));
    let pairs: Vec<(Did, f64)> = counts
        .iter()
        .map(|c| (c.did.clone(), f64::from(c.count)))
        .collect();
    classify_counts(day, &pairs, p)
}

/// Classifies every day of already-aggregated counts, in day order.
pub fn classify_all(
    counts: &[DailyCount],
    p: f64,
) -> Result<Vec<DayClassification>, PercentileError> {
    let mut by_day: BTreeMap<NaiveDate, Vec<DailyCount>> = BTreeMap::new();
    for c in counts {
        by_day.entry(c.day).or_default().push(c.clone());
    }
    by_day
        .into_iter()
        .map(|(day, day_counts)| classify_day(day, &day_counts, p))
        .collect()
}

/// Reads the blocks table (optionally windowed), aggregates daily counts, and
/// classifies each day. Pure function of the table contents.
pub fn classify_range(
    store: &Store,
    window: Option<(NaiveDate, NaiveDate)>,
    p: f64,
) -> Result<Vec<DayClassification>, AnalysisError> {
    let blocks: Vec<BlockRow> = store.read(window)?;
    let counts = aggregate_daily(&blocks, window);
    classify_all(&counts, p).map_err(AnalysisError::Percentile)
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub anomalies: PathBuf,
    pub day_stats: PathBuf,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.6}")
}

/// Writes `anomalies.csv` (one row per labeled user-day, sorted by day then
/// DID) and `day_stats.csv` (one row per day) into `out_dir`. Byte output is
/// a pure function of the classification.
pub fn emit_report(days: &[DayClassification], out_dir: &Path) -> Result<ReportFiles, AnalysisError> {
    std::fs::create_dir_all(out_dir).map_err(|source| AnalysisError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let files = ReportFiles {
        anomalies: out_dir.join("anomalies.csv"),
        day_stats: out_dir.join("day_stats.csv"),
    };

    let mut rows: Vec<&LabeledUserDay> = days.iter().flat_map(|d| d.labels.iter()).collect();
    rows.sort_by(|a, b| (a.day, &a.did).cmp(&(b.day, &b.did)));

    let write_csv = |path: &Path, build: &dyn Fn(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>| {
        let mut w = csv::Writer::from_writer(Vec::new());
        build(&mut w).map_err(|e| AnalysisError::BadReportRow {
            path: path.to_path_buf(),
            line: 0,
            reason: e.to_string(),
        })?;
        let buf = w.into_inner().expect("flushing Vec writer cannot fail");
        std::fs::write(path, buf).map_err(|source| AnalysisError::Io {
            path: path.to_path_buf(),
            source,
        })
    };

    write_csv(&files.anomalies, &|w| {
        w.write_record(["day", "did", "block_count", "zscore", "label"])?;
        for row in &rows {
            w.write_record([
                row.day.to_string(),
                row.did.to_string(),
                row.count.to_string(),
                row.z.map(fmt_f64).unwrap_or_default(),
                row.label.to_string(),
            ])?;
        }
        Ok(())
    })?;

    write_csv(&files.day_stats, &|w| {
        w.write_record(["day", "n_users", "mean", "std", "threshold_z"])?;
        for day in days {
            let s = &day.stats;
            w.write_record([
                s.day.to_string(),
                s.n_users.to_string(),
                fmt_f64(s.mean),
                fmt_f64(s.std),
                s.threshold_z.map(fmt_f64).unwrap_or_default(),
            ])?;
        }
        Ok(())
    })?;

    Ok(files)
}

/// Reads `anomalies.csv` back into labeled user-days, e.g. for rendering.
pub fn read_anomalies_csv(path: &Path) -> Result<Vec<LabeledUserDay>, AnalysisError> {
    let bad_row = |line: u64, reason: String| AnalysisError::BadReportRow {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad_row(1, e.to_string()))?;
    let mut rows = Vec::new();
    for result in reader.records() {
        let rec = result.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            bad_row(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let get = |idx: usize, name: &str| {
            rec.get(idx)
                .ok_or_else(|| bad_row(line, format!("missing column `{name}`")))
        };
        let day: NaiveDate = get(0, "day")?
            .parse()
            .map_err(|e| bad_row(line, format!("column `day`: {e}")))?;
        let did = Did::new(get(1, "did")?).map_err(|e| bad_row(line, format!("column `did`: {e}")))?;
        let count: u32 = get(2, "block_count")?
            .parse()
            .map_err(|e| bad_row(line, format!("column `block_count`: {e}")))?;
        let z = match get(3, "zscore")? {
            "" => None,
            s => Some(
                s.parse::<f64>()
                    .map_err(|e| bad_row(line, format!("column `zscore`: {e}")))?,
            ),
        };
        let label: Label = get(4, "label")?
            .parse()
            .map_err(|e: String| bad_row(line, format!("column `label`: {e}")))?;
        rows.push(LabeledUserDay { day, did, count, z, label });
    }
    Ok(rows)
}
