//! Builds retweet-graph progressions from tweet event files.
//!
//! Records arrive as JSON lines or fixed-column CSV, get sorted and
//! deduplicated, and are classified into the same arrival events the
//! simulator produces, so ingested and synthetic graphs are interchangeable
//! downstream.

use crate::event_log::TimedEvent;
use crate::graph::{ArrivalEvent, EventError, TreeId, UserId};
use crate::progression::Progression;
use crate::state::{GraphState, StateConfig};
use chrono::DateTime;
use serde::Deserialize;
use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv header must be {expected:?}, found {found:?}")]
    BadHeader { expected: String, found: String },
    #[error("csv read error: {0}")]
    Csv(#[from] csv::Error),
    #[error("record {index}: {source}")]
    Rejected { index: usize, source: EventError },
}

/// One tweet as it appears in the input, after validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub user_id: String,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub retweet_of_tweet_id: Option<String>,
    pub retweet_of_user_id: Option<String>,
}

impl TweetRecord {
    fn retweet(&self) -> Option<(&str, &str)> {
        match (&self.retweet_of_tweet_id, &self.retweet_of_user_id) {
            (Some(t), Some(u)) => Some((t.as_str(), u.as_str())),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Csv,
}

/// Bookkeeping across parsing and classification.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct IngestCounters {
    /// Syntactically valid records, before deduplication.
    pub parsed: u64,
    pub malformed_lines: u64,
    pub duplicate_tweet_ids: u64,
    /// Original tweets by already-seen users (they start no tree).
    pub skipped_original_by_seen: u64,
    pub skipped_self_retweets: u64,
    /// Authors first seen through someone retweeting them.
    pub materialized_authors: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedInput {
    /// Sorted by (timestamp, tweet_id), first record kept per tweet_id.
    pub records: Vec<TweetRecord>,
    pub counters: IngestCounters,
}

/// Timestamps may be epoch seconds or an RFC 3339 datetime.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawTimestamp {
    Seconds(i64),
    Text(String),
}

#[derive(Deserialize)]
struct RawTweet {
    tweet_id: String,
    user_id: String,
    timestamp: RawTimestamp,
    #[serde(default)]
    retweet_of_tweet_id: Option<String>,
    #[serde(default)]
    retweet_of_user_id: Option<String>,
}

fn parse_timestamp_text(text: &str) -> Option<i64> {
    if let Ok(seconds) = text.parse::<i64>() {
        return Some(seconds);
    }
    DateTime::parse_from_rfc3339(text)
        .ok()
        .map(|dt| dt.timestamp())
}

impl RawTweet {
    fn validate(self) -> Option<TweetRecord> {
        let timestamp = match self.timestamp {
            RawTimestamp::Seconds(s) => s,
            RawTimestamp::Text(t) => parse_timestamp_text(&t)?,
        };
        // Retweet fields come in pairs or not at all.
        match (&self.retweet_of_tweet_id, &self.retweet_of_user_id) {
            (Some(_), Some(_)) | (None, None) => {}
            _ => return None,
        }
        if self.tweet_id.is_empty() || self.user_id.is_empty() {
            return None;
        }
        Some(TweetRecord {
            tweet_id: self.tweet_id,
            user_id: self.user_id,
            timestamp,
            retweet_of_tweet_id: self.retweet_of_tweet_id,
            retweet_of_user_id: self.retweet_of_user_id,
        })
    }
}

const CSV_HEADER: &str = "tweet_id,user_id,timestamp,retweet_of_tweet_id,retweet_of_user_id";

fn non_empty(field: &str) -> Option<String> {
    if field.is_empty() {
        None
    } else {
        Some(field.to_string())
    }
}

/// Reads tweets, skipping (and counting) malformed lines, then sorts by
/// (timestamp, tweet_id) and drops duplicate tweet_ids, keeping the first.
pub fn parse_stream<R: Read>(input: R, format: InputFormat) -> Result<ParsedInput, IngestError> {
    let mut counters = IngestCounters::default();
    let mut records = Vec::new();

    match format {
        InputFormat::Jsonl => {
            for line in BufReader::new(input).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<RawTweet>(&line)
                    .ok()
                    .and_then(RawTweet::validate)
                {
                    Some(record) => {
                        counters.parsed += 1;
                        records.push(record);
                    }
                    None => counters.malformed_lines += 1,
                }
            }
        }
        InputFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .from_reader(input);
            let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
            if header != CSV_HEADER {
                return Err(IngestError::BadHeader {
                    expected: CSV_HEADER.to_string(),
                    found: header,
                });
            }
            for row in reader.records() {
                let row = match row {
                    Ok(row) => row,
                    Err(_) => {
                        counters.malformed_lines += 1;
                        continue;
                    }
                };
                let parsed = (row.len() == 5).then(|| RawTweet {
                    tweet_id: row[0].to_string(),
                    user_id: row[1].to_string(),
                    timestamp: RawTimestamp::Text(row[2].to_string()),
                    retweet_of_tweet_id: non_empty(&row[3]),
                    retweet_of_user_id: non_empty(&row[4]),
                });
                match parsed.and_then(RawTweet::validate) {
                    Some(record) => {
                        counters.parsed += 1;
                        records.push(record);
                    }
                    None => counters.malformed_lines += 1,
                }
            }
        }
    }

    records.sort_by(|a, b| {
        (a.timestamp, a.tweet_id.as_str()).cmp(&(b.timestamp, b.tweet_id.as_str()))
    });
    let mut seen = HashSet::new();
    records.retain(|r| {
        let fresh = seen.insert(r.tweet_id.clone());
        if !fresh {
            counters.duplicate_tweet_ids += 1;
        }
        fresh
    });

    Ok(ParsedInput { records, counters })
}

/// Graph, event log, and per-step progression derived from parsed tweets.
#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub state: GraphState,
    pub events: Vec<TimedEvent>,
    /// Timestamp of the record behind each event, aligned with `events`.
    /// A materialized author inherits the triggering retweet's timestamp.
    pub event_timestamps: Vec<i64>,
    pub progression: Progression,
    pub counters: IngestCounters,
}

struct Builder {
    state: GraphState,
    events: Vec<TimedEvent>,
    event_timestamps: Vec<i64>,
    progression: Progression,
    user_ids: HashMap<String, UserId>,
    /// Tree created by each original tweet we kept.
    original_tweet_tree: HashMap<String, TreeId>,
    /// Tree rooted at a user, for users who arrived as originators.
    rooted_tree: HashMap<UserId, TreeId>,
}

impl Builder {
    fn new(config: StateConfig) -> Self {
        Self {
            state: GraphState::with_config(config),
            events: Vec::new(),
            event_timestamps: Vec::new(),
            progression: Progression::new(),
            user_ids: HashMap::new(),
            original_tweet_tree: HashMap::new(),
            rooted_tree: HashMap::new(),
        }
    }

    fn apply(&mut self, event: ArrivalEvent, timestamp: i64, index: usize) -> Result<u64, IngestError> {
        let t = self
            .state
            .apply_event(&event)
            .map_err(|source| IngestError::Rejected { index, source })?;
        self.events.push(TimedEvent { t, event });
        self.event_timestamps.push(timestamp);
        self.progression.push(self.state.snapshot());
        Ok(t)
    }

    /// New originator: a T1 arrival rooting a fresh tree.
    fn add_originator(
        &mut self,
        name: &str,
        timestamp: i64,
        index: usize,
    ) -> Result<UserId, IngestError> {
        let user = self.state.graph.next_user();
        let tree = TreeId(self.state.forest.tree_count() as u32);
        self.apply(ArrivalEvent::T1 { user }, timestamp, index)?;
        self.user_ids.insert(name.to_string(), user);
        self.rooted_tree.insert(user, tree);
        Ok(user)
    }

    /// The tree a retweet of `original_tweet` authored by `author` lands in:
    /// the tree that original started, if we saw it and the author belongs
    /// to it; otherwise the tree the author roots; otherwise the tree the
    /// author first joined.
    fn resolve_tree(&self, original_tweet: &str, author: UserId) -> TreeId {
        if let Some(&tree) = self.original_tweet_tree.get(original_tweet) {
            if self.state.forest.memberships(author).contains(&tree) {
                return tree;
            }
        }
        if let Some(&tree) = self.rooted_tree.get(&author) {
            return tree;
        }
        *self
            .state
            .forest
            .memberships(author)
            .first()
            .expect("every seen user joined at least one tree")
    }
}

/// Classifies sorted records into arrival events and applies them.
///
/// Originals by unseen users are T1; originals by seen users start no tree
/// and are skipped. Retweets are T2 when the retweeter is unseen, T3
/// otherwise; an unseen original author is materialized as a T1 root first,
/// and self-retweets are dropped entirely.
pub fn build_progression(
    input: &ParsedInput,
    config: StateConfig,
) -> Result<IngestOutcome, IngestError> {
    let mut b = Builder::new(config);
    let mut counters = input.counters;

    for (index, record) in input.records.iter().enumerate() {
        match record.retweet() {
            None => {
                if b.user_ids.contains_key(&record.user_id) {
                    counters.skipped_original_by_seen += 1;
                } else {
                    let user = b.add_originator(&record.user_id, record.timestamp, index)?;
                    let tree = b.rooted_tree[&user];
                    b.original_tweet_tree
                        .insert(record.tweet_id.clone(), tree);
                }
            }
            Some((original_tweet, author_name)) => {
                if author_name == record.user_id {
                    counters.skipped_self_retweets += 1;
                    continue;
                }
                let author = match b.user_ids.get(author_name) {
                    Some(&user) => user,
                    None => {
                        counters.materialized_authors += 1;
                        b.add_originator(author_name, record.timestamp, index)?
                    }
                };
                let tree = b.resolve_tree(original_tweet, author);
                match b.user_ids.get(&record.user_id) {
                    None => {
                        let user = b.state.graph.next_user();
                        b.apply(
                            ArrivalEvent::T2 {
                                source: author,
                                user,
                                tree,
                            },
                            record.timestamp,
                            index,
                        )?;
                        b.user_ids.insert(record.user_id.clone(), user);
                    }
                    Some(&target) => {
                        b.apply(
                            ArrivalEvent::T3 {
                                source: author,
                                target,
                                tree,
                            },
                            record.timestamp,
                            index,
                        )?;
                    }
                }
            }
        }
    }

    Ok(IngestOutcome {
        state: b.state,
        events: b.events,
        event_timestamps: b.event_timestamps,
        progression: b.progression,
        counters,
    })
}

/// One clock hour of activity with the graph's size at the hour's end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourlyRow {
    /// Epoch seconds of the hour's start.
    pub hour_start: i64,
    pub tweets: u64,
    pub cumulative_tweets: u64,
    pub nodes: u64,
    pub edges: u64,
    pub lcc_nodes: u64,
    pub lcc_edges: u64,
}

impl HourlyRow {
    pub fn lcc_density(&self) -> f64 {
        if self.lcc_nodes == 0 {
            0.0
        } else {
            self.lcc_edges as f64 / self.lcc_nodes as f64
        }
    }
}

/// Per-hour tweet counts plus end-of-hour graph metrics, spanning every hour
/// from the first record to the last (quiet hours included).
pub fn hourly_stats(records: &[TweetRecord], outcome: &IngestOutcome) -> Vec<HourlyRow> {
    if records.is_empty() {
        return Vec::new();
    }
    let hour_of = |ts: i64| ts.div_euclid(3600);
    let first = hour_of(records.iter().map(|r| r.timestamp).min().unwrap());
    let last = hour_of(records.iter().map(|r| r.timestamp).max().unwrap());

    let mut tweet_counts: HashMap<i64, u64> = HashMap::new();
    for record in records {
        *tweet_counts.entry(hour_of(record.timestamp)).or_insert(0) += 1;
    }

    let mut rows = Vec::new();
    let mut replay = GraphState::with_config(outcome.state.config());
    let mut next_event = 0;
    let mut cumulative = 0;
    for hour in first..=last {
        let hour_end = (hour + 1) * 3600;
        while next_event < outcome.events.len()
            && outcome.event_timestamps[next_event] < hour_end
        {
            replay
                .apply_event(&outcome.events[next_event].event)
                .expect("events already applied once");
            next_event += 1;
        }
        let tweets = tweet_counts.get(&hour).copied().unwrap_or(0);
        cumulative += tweets;
        let lcc = replay.components.largest();
        rows.push(HourlyRow {
            hour_start: hour * 3600,
            tweets,
            cumulative_tweets: cumulative,
            nodes: replay.graph.node_count(),
            edges: replay.graph.edge_count(),
            lcc_nodes: lcc.map_or(0, |c| c.nodes),
            lcc_edges: lcc.map_or(0, |c| c.edges),
        });
    }
    rows
}

pub fn write_hourly_csv<W: Write>(rows: &[HourlyRow], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "hour_start,tweets,cumulative_tweets,V,E,V_lcc,E_lcc,lcc_density"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{:.6}",
            r.hour_start,
            r.tweets,
            r.cumulative_tweets,
            r.nodes,
            r.edges,
            r.lcc_nodes,
            r.lcc_edges,
            r.lcc_density()
        )?;
    }
    Ok(())
}
