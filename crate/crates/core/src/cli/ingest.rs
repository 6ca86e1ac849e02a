// SPDX-License-Identifier: MIT OR Apache-2.0

use std::io::BufRead;

use clap::ValueEnum;

use crate::data::WeightedSequence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// One value per line, optionally followed by a weight.
    Tsv,
    /// `chrom start end count` rows; one sequence per chromosome.
    Bedgraph,
}

/// One input sequence after run-length encoding, with the input positions
/// each encoded point spans (`starts[t]..ends[t]`, half-open).
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub name: String,
    pub data: WeightedSequence,
    pub starts: Vec<u64>,
    pub ends: Vec<u64>,
}

impl Track {
    /// Input coordinates of a segment covering encoded points `from+1..=to`.
    pub fn span(&self, from: usize, to: usize) -> (u64, u64) {
        (self.starts[from], self.ends[to - 1])
    }
}

struct Builder {
    name: String,
    values: Vec<f64>,
    weights: Vec<f64>,
    starts: Vec<u64>,
    ends: Vec<u64>,
}

impl Builder {
    fn new(name: &str) -> Self {
        Builder {
            name: name.to_string(),
            values: Vec::new(),
            weights: Vec::new(),
            starts: Vec::new(),
            ends: Vec::new(),
        }
    }

    /// Adds a point, merging it into the previous one when the value is
    /// equal and the positions are contiguous.
    fn push(&mut self, value: f64, weight: f64, start: u64, end: u64) {
        if let (Some(&v), Some(last_end)) = (self.values.last(), self.ends.last_mut()) {
            if v == value && *last_end == start {
                *last_end = end;
                *self.weights.last_mut().expect("same length") += weight;
                return;
            }
        }
        self.values.push(value);
        self.weights.push(weight);
        self.starts.push(start);
        self.ends.push(end);
    }

    fn finish(self) -> Result<Track> {
        Ok(Track {
            data: WeightedSequence::new(self.values, self.weights)?,
            name: self.name,
            starts: self.starts,
            ends: self.ends,
        })
    }
}

fn parse_number(field: &str, what: &str, line: usize) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{what} must be finite, got {field:?}"),
        });
    }
    Ok(v)
}

fn parse_position(field: &str, line: usize) -> Result<u64> {
    field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid position {field:?}"),
    })
}

/// Reads sequences from `reader`. Blank lines and lines starting with `#`
/// are skipped, as are `track` and `browser` lines in bedGraph input.
pub fn ingest(reader: impl BufRead, format: InputFormat) -> Result<Vec<Track>> {
    match format {
        InputFormat::Tsv => ingest_tsv(reader).map(|t| vec![t]),
        InputFormat::Bedgraph => ingest_bedgraph(reader),
    }
}

fn ingest_tsv(reader: impl BufRead) -> Result<Track> {
    let mut b = Builder::new("input");
    let mut row: u64 = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() > 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `value [weight]`, got {} fields", fields.len()),
            });
        }
        let value = parse_number(fields[0], "value", line_no)?;
        let weight = match fields.get(1) {
            Some(w) => parse_number(w, "weight", line_no)?,
            None => 1.0,
        };
        if !(weight > 0.0) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("weight must be positive, got {weight}"),
            });
        }
        b.push(value, weight, row, row + 1);
        row += 1;
    }
    if b.values.is_empty() {
        return Err(Error::EmptyData);
    }
    b.finish()
}

fn ingest_bedgraph(reader: impl BufRead) -> Result<Vec<Track>> {
    let mut done: Vec<Track> = Vec::new();
    let mut current: Option<Builder> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') || text.starts_with("track") || text.starts_with("browser") {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `chrom start end count`, got {} fields", fields.len()),
            });
        }
        let chrom = fields[0];
        let start = parse_position(fields[1], line_no)?;
        let end = parse_position(fields[2], line_no)?;
        let count = parse_number(fields[3], "count", line_no)?;
        if start >= end {
            return Err(Error::Parse {
                line: line_no,
                message: format!("empty interval {start}-{end}"),
            });
        }
        if count < 0.0 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("negative count {count}"),
            });
        }
        if current.as_ref().is_none_or(|b| b.name != chrom) {
            if done.iter().any(|t| t.name == chrom) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("rows of {chrom} are not contiguous"),
                });
            }
            if let Some(b) = current.take() {
                done.push(b.finish()?);
            }
            current = Some(Builder::new(chrom));
        }
        let b = current.as_mut().expect("set above");
        if let Some(&prev_end) = b.ends.last() {
            if start < prev_end {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("interval {start}-{end} overlaps or precedes the previous one ending at {prev_end}"),
                });
            }
        }
        b.push(count, (end - start) as f64, start, end);
    }
    if let Some(b) = current.take() {
        done.push(b.finish()?);
    }
    if done.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(done)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_run_length_example() {
        let text = "5\n1\n1\n1\n0\n0\n5\n5\n";
        let t = ingest(text.as_bytes(), InputFormat::Tsv).unwrap().remove(0);
        assert_eq!(t.data.values(), &[5.0, 1.0, 0.0, 5.0]);
        assert_eq!(t.data.weights(), &[1.0, 3.0, 2.0, 2.0]);
        assert_eq!(t.starts, vec![0, 1, 4, 6]);
        assert_eq!(t.ends, vec![1, 4, 6, 8]);
        let one = ingest("3.5\n".as_bytes(), InputFormat::Tsv).unwrap().remove(0);
        assert_eq!(one.data.len(), 1);
    }

    #[test]
    fn tsv_weights_and_errors() {
        let t = ingest("# header\n2 0.5\n2 1.5\n".as_bytes(), InputFormat::Tsv).unwrap().remove(0);
        assert_eq!(t.data.weights(), &[2.0]);
        assert!(matches!(ingest("1\nx\n".as_bytes(), InputFormat::Tsv), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(ingest("1 0\n".as_bytes(), InputFormat::Tsv), Err(Error::Parse { line: 1, .. })));
        assert_eq!(ingest("\n".as_bytes(), InputFormat::Tsv), Err(Error::EmptyData));
    }

    #[test]
    fn bedgraph_merges_contiguous_rows() {
        let text = "chr1\t0\t10\t3\nchr1\t10\t12\t3\n";
        let t = ingest(text.as_bytes(), InputFormat::Bedgraph).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].data.values(), &[3.0]);
        assert_eq!(t[0].data.weights(), &[12.0]);
        assert_eq!(t[0].span(0, 1), (0, 12));
    }

    #[test]
    fn bedgraph_multiple_chromosomes_and_gaps() {
        let text = "track type=bedGraph\nchr1 0 5 1\nchr1 7 9 1\nchr2 0 4 0\n";
        let t = ingest(text.as_bytes(), InputFormat::Bedgraph).unwrap();
        assert_eq!(t.len(), 2);
        // The gap at 5..7 keeps the equal counts apart.
        assert_eq!(t[0].data.len(), 2);
        assert_eq!(t[1].name, "chr2");
    }

    #[test]
    fn bedgraph_rejects_overlaps() {
        let text = "chr1 0 10 3\nchr1 5 12 4\n";
        assert!(matches!(ingest(text.as_bytes(), InputFormat::Bedgraph), Err(Error::Parse { line: 2, .. })));
        let text = "chr1 0 10 3\nchr2 0 5 1\nchr1 20 30 1\n";
        assert!(matches!(ingest(text.as_bytes(), InputFormat::Bedgraph), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(ingest("chr1 5 5 1\n".as_bytes(), InputFormat::Bedgraph), Err(Error::Parse { line: 1, .. })));
    }
}
