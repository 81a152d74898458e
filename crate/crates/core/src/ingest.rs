//! Raw log ingestion: parsing, k-core filtering, sequence building and
//! leave-one-out splitting.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::{BufRead, Read};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{Dataset, InteractionRecord, UserSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "jsonl" | "json" => Ok(Self::Jsonl),
            other => Err(Error::Invalid(format!("unknown input format {other:?}"))),
        }
    }
}

/// A data row that failed validation. `line` is 1-based and counts the
/// header for CSV input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedRow {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub records: Vec<InteractionRecord>,
    pub rejected: Vec<RejectedRow>,
}

impl ParseOutcome {
    pub fn n_rejected(&self) -> usize {
        self.rejected.len()
    }
}

const REQUIRED_COLUMNS: [&str; 3] = ["user_id", "item_id", "timestamp"];

/// Parses one record per data row. Rows that fail validation are collected
/// in [`ParseOutcome::rejected`] instead of aborting the parse.
pub fn parse_interactions<R: Read>(source: R, format: InputFormat) -> Result<ParseOutcome> {
    match format {
        InputFormat::Csv => parse_csv(source),
        InputFormat::Jsonl => parse_jsonl(std::io::BufReader::new(source)),
    }
}

fn parse_timestamp(raw: &str) -> std::result::Result<i64, String> {
    raw.trim()
        .parse::<i64>()
        .map_err(|_| format!("timestamp {raw:?} is not an integer"))
}

fn parse_csv<R: Read>(source: R) -> Result<ParseOutcome> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader.headers().map_err(csv_to_io)?.clone();
    let mut columns = [0usize; 3];
    for (slot, name) in columns.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| Error::Schema(format!("missing required column {name:?}")))?;
    }

    let mut outcome = ParseOutcome::default();
    for (row_idx, row) in reader.records().enumerate() {
        // header is line 1
        let line = row_idx + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(csv_to_io(e)),
            Err(e) => {
                outcome.rejected.push(RejectedRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let field = |i: usize| row.get(columns[i]);
        let parsed = match (field(0), field(1), field(2)) {
            (Some(u), Some(i), Some(t)) => parse_timestamp(t)
                .and_then(|ts| InteractionRecord::new(u, i, ts).map_err(|e| e.to_string())),
            _ => Err(format!("expected at least {} fields", headers.len())),
        };
        match parsed {
            Ok(rec) => outcome.records.push(rec),
            Err(reason) => outcome.rejected.push(RejectedRow { line, reason }),
        }
    }
    Ok(outcome)
}

fn csv_to_io(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Schema(format!("{other:?}")),
        }
    } else {
        Error::Csv(e)
    }
}

#[derive(Deserialize)]
struct JsonRow {
    user_id: serde_json::Value,
    item_id: serde_json::Value,
    timestamp: serde_json::Value,
}

fn json_key(v: &serde_json::Value) -> std::result::Result<String, String> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(format!("id must be a string or number, got {other}")),
    }
}

fn json_timestamp(v: &serde_json::Value) -> std::result::Result<i64, String> {
    match v {
        serde_json::Value::Number(n) => n
            .as_i64()
            .ok_or_else(|| format!("timestamp {n} is not an integer")),
        serde_json::Value::String(s) => parse_timestamp(s),
        other => Err(format!("timestamp must be an integer, got {other}")),
    }
}

fn parse_jsonl<R: BufRead>(source: R) -> Result<ParseOutcome> {
    let mut outcome = ParseOutcome::default();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<JsonRow>(&line)
            .map_err(|e| e.to_string())
            .and_then(|row| {
                let user = json_key(&row.user_id)?;
                let item = json_key(&row.item_id)?;
                let ts = json_timestamp(&row.timestamp)?;
                InteractionRecord::new(user, item, ts).map_err(|e| e.to_string())
            });
        match parsed {
            Ok(rec) => outcome.records.push(rec),
            Err(reason) => outcome.rejected.push(RejectedRow {
                line: line_no,
                reason,
            }),
        }
    }
    Ok(outcome)
}

/// Keeps records whose timestamp lies in `[from, to)`; either bound may be open.
pub fn filter_time_range(
    records: Vec<InteractionRecord>,
    from: Option<i64>,
    to: Option<i64>,
) -> Vec<InteractionRecord> {
    records
        .into_iter()
        .filter(|r| from.is_none_or(|f| r.timestamp >= f) && to.is_none_or(|t| r.timestamp < t))
        .collect()
}

/// Maximal subset in which every user and every item has at least `k`
/// interactions. Input order is preserved among surviving records.
pub fn k_core_filter(records: Vec<InteractionRecord>, k: usize) -> Result<Vec<InteractionRecord>> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }

    let mut user_ids: HashMap<&str, usize> = HashMap::new();
    let mut item_ids: HashMap<&str, usize> = HashMap::new();
    let mut by_user: Vec<Vec<usize>> = Vec::new();
    let mut by_item: Vec<Vec<usize>> = Vec::new();
    let mut owners = Vec::with_capacity(records.len());

    for (idx, rec) in records.iter().enumerate() {
        let u = *user_ids.entry(rec.user_id.as_str()).or_insert_with(|| {
            by_user.push(Vec::new());
            by_user.len() - 1
        });
        let i = *item_ids.entry(rec.item_id.as_str()).or_insert_with(|| {
            by_item.push(Vec::new());
            by_item.len() - 1
        });
        by_user[u].push(idx);
        by_item[i].push(idx);
        owners.push((u, i));
    }

    let mut alive = vec![true; records.len()];
    let mut user_count: Vec<usize> = by_user.iter().map(Vec::len).collect();
    let mut item_count: Vec<usize> = by_item.iter().map(Vec::len).collect();
    let mut user_gone = vec![false; by_user.len()];
    let mut item_gone = vec![false; by_item.len()];

    #[derive(Clone, Copy)]
    enum Node {
        User(usize),
        Item(usize),
    }
    let mut queue: VecDeque<Node> = VecDeque::new();
    for (u, &c) in user_count.iter().enumerate() {
        if c < k {
            user_gone[u] = true;
            queue.push_back(Node::User(u));
        }
    }
    for (i, &c) in item_count.iter().enumerate() {
        if c < k {
            item_gone[i] = true;
            queue.push_back(Node::Item(i));
        }
    }

    while let Some(node) = queue.pop_front() {
        let edges = match node {
            Node::User(u) => &by_user[u],
            Node::Item(i) => &by_item[i],
        };
        for &rec in edges {
            if !alive[rec] {
                continue;
            }
            alive[rec] = false;
            let (u, i) = owners[rec];
            user_count[u] -= 1;
            item_count[i] -= 1;
            if !user_gone[u] && user_count[u] < k {
                user_gone[u] = true;
                queue.push_back(Node::User(u));
            }
            if !item_gone[i] && item_count[i] < k {
                item_gone[i] = true;
                queue.push_back(Node::Item(i));
            }
        }
    }

    Ok(records
        .into_iter()
        .zip(alive)
        .filter_map(|(r, keep)| keep.then_some(r))
        .collect())
}

/// Groups records by user, ordering each user's events by timestamp and
/// then by input position.
pub fn build_sequences(records: Vec<InteractionRecord>) -> Dataset {
    let mut grouped: BTreeMap<String, Vec<(i64, String)>> = BTreeMap::new();
    for rec in records {
        grouped
            .entry(rec.user_id)
            .or_default()
            .push((rec.timestamp, rec.item_id));
    }
    let sequences = grouped.into_iter().map(|(user, mut events)| {
        // stable sort keeps input order among equal timestamps
        events.sort_by_key(|(ts, _)| *ts);
        let (timestamps, items): (Vec<i64>, Vec<String>) = events.into_iter().unzip();
        UserSequence::new(user, items, timestamps)
            .expect("grouped records form a valid non-empty sequence")
    });
    Dataset::from_sequences(sequences).expect("user ids are unique after grouping")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Valid,
    Test,
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "valid" | "validation" => Ok(Self::Valid),
            "test" => Ok(Self::Test),
            other => Err(Error::Invalid(format!("unknown target {other:?}"))),
        }
    }
}

/// A held-out item together with its timestamp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeldOut {
    pub item: String,
    pub timestamp: i64,
}

/// Leave-one-out split: last item is the test target, second-to-last the
/// validation target, the rest is training data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitDataset {
    pub train: Dataset,
    pub valid_targets: BTreeMap<String, HeldOut>,
    pub test_targets: BTreeMap<String, HeldOut>,
}

impl SplitDataset {
    pub fn targets(&self, target: Target) -> &BTreeMap<String, HeldOut> {
        match target {
            Target::Valid => &self.valid_targets,
            Target::Test => &self.test_targets,
        }
    }

    /// Items visible to the model when predicting `target` for `user`:
    /// the training sequence, plus the validation item when predicting test.
    pub fn history(&self, user: &str, target: Target) -> Option<Vec<&str>> {
        let seq = self.train.get(user)?;
        let mut items: Vec<&str> = seq.items().iter().map(String::as_str).collect();
        if target == Target::Test {
            items.push(self.valid_targets.get(user)?.item.as_str());
        }
        Some(items)
    }

    /// Train items followed by the validation and test targets.
    pub fn reconstruct(&self, user: &str) -> Option<UserSequence> {
        let seq = self.train.get(user)?;
        let (_, mut items, mut timestamps) = seq.clone().into_parts();
        for held in [self.valid_targets.get(user), self.test_targets.get(user)]
            .into_iter()
            .flatten()
        {
            items.push(held.item.clone());
            timestamps.push(held.timestamp);
        }
        UserSequence::new(user, items, timestamps).ok()
    }
}

/// Users with fewer than three interactions stay in training without targets.
pub fn leave_one_out(ds: &Dataset) -> SplitDataset {
    let mut train = Vec::with_capacity(ds.len());
    let mut valid_targets = BTreeMap::new();
    let mut test_targets = BTreeMap::new();
    for seq in ds.sequences() {
        let n = seq.len();
        if n < 3 {
            train.push(seq.clone());
            continue;
        }
        let held = |i: usize| HeldOut {
            item: seq.items()[i].clone(),
            timestamp: seq.timestamps()[i],
        };
        valid_targets.insert(seq.user_id().to_string(), held(n - 2));
        test_targets.insert(seq.user_id().to_string(), held(n - 1));
        train.push(seq.slice(0, n - 2).expect("n >= 3"));
    }
    let train = Dataset::with_catalog(train, ds.item_catalog().clone())
        .expect("training items come from the source catalog");
    SplitDataset {
        train,
        valid_targets,
        test_targets,
    }
}
