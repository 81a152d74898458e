//! JSONL sequence format: one object per user,
//! `{"user": .., "items": [..], "timestamps": [..]}`, optionally with a
//! `"provenance"` object for augmented output. Users are written in
//! lexicographic order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::augment::{AugmentedDataset, AugmentedSequence, Provenance};
use crate::error::{Error, Result};
use crate::sequence::{Dataset, UserSequence};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceLine {
    pub user: String,
    pub items: Vec<String>,
    pub timestamps: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl SequenceLine {
    fn from_sequence(seq: &UserSequence, provenance: Option<Provenance>) -> Self {
        Self {
            user: seq.user_id().to_string(),
            items: seq.items().to_vec(),
            timestamps: seq.timestamps().to_vec(),
            provenance,
        }
    }

    fn into_sequence(self) -> Result<(UserSequence, Option<Provenance>)> {
        let seq = UserSequence::new(self.user, self.items, self.timestamps)?;
        Ok((seq, self.provenance))
    }
}

fn write_line<W: Write>(out: &mut W, line: &SequenceLine) -> Result<()> {
    serde_json::to_writer(&mut *out, line)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_dataset<W: Write>(ds: &Dataset, mut out: W) -> Result<()> {
    for seq in ds.sequences() {
        write_line(&mut out, &SequenceLine::from_sequence(seq, None))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_augmented<W: Write>(ds: &AugmentedDataset, mut out: W) -> Result<()> {
    for aug in ds.sequences() {
        write_line(
            &mut out,
            &SequenceLine::from_sequence(&aug.sequence, Some(aug.provenance.clone())),
        )?;
    }
    out.flush()?;
    Ok(())
}

fn read_lines<R: BufRead>(input: R) -> Result<Vec<(UserSequence, Option<Provenance>)>> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: SequenceLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let pair = parsed.into_sequence().map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(pair);
    }
    Ok(out)
}

/// Reads a dataset; any provenance fields are ignored.
pub fn read_dataset<R: BufRead>(input: R) -> Result<Dataset> {
    Dataset::from_sequences(read_lines(input)?.into_iter().map(|(s, _)| s))
}

/// Reads augmented output. Lines without provenance are treated as
/// pass-through sequences.
pub fn read_augmented<R: BufRead>(input: R) -> Result<AugmentedDataset> {
    let mut sequences = Vec::new();
    for (sequence, provenance) in read_lines(input)? {
        sequences.push(AugmentedSequence {
            sequence,
            provenance: provenance.unwrap_or_else(Provenance::passthrough),
        });
    }
    AugmentedDataset::from_sequences(sequences)
}
