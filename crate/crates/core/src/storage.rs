// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-column storage of cost functions for decoding.
//!
//! Decoding only reads backpointers, so by default each stored function is
//! reduced to its piece boundaries and backpointers. Adjacent pieces with
//! identical backpointers are merged since they decode identically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::piecewise::{PiecewiseCost, PrevMean, StateId};

/// What the solvers keep for every `(row, t)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Storage {
    /// Complete cost functions; memory grows with the number of pieces
    /// times 56 bytes.
    Full,
    /// Only piece boundaries and backpointers.
    #[default]
    Backpointers,
}

/// Backpointers of one piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backpointer {
    pub prev_end: usize,
    pub prev_mean: PrevMean,
    pub prev_state: Option<StateId>,
}

const TAG_UNSET: u8 = 0;
const TAG_EQUAL: u8 = 1;
const TAG_OFFSET: u8 = 2;
const TAG_VALUE: u8 = 3;
const TAG_HOLE: u8 = 4;
const NO_STATE: u16 = u16::MAX;

#[derive(Debug, Clone, Copy)]
struct Packed {
    upper: f64,
    payload: f64,
    prev_end: u32,
    tag: u8,
    state: u16,
}

impl Packed {
    fn pack(upper: f64, bp: Backpointer) -> Self {
        let (tag, payload) = match bp.prev_mean {
            PrevMean::Unset => (TAG_UNSET, 0.0),
            PrevMean::EqualityActive => (TAG_EQUAL, 0.0),
            PrevMean::Offset(d) => (TAG_OFFSET, d),
            PrevMean::Value(v) => (TAG_VALUE, v),
        };
        Packed {
            upper,
            payload,
            prev_end: u32::try_from(bp.prev_end).expect("sequence longer than u32::MAX"),
            tag,
            state: bp.prev_state.unwrap_or(NO_STATE),
        }
    }

    fn hole(upper: f64) -> Self {
        Packed {
            upper,
            payload: 0.0,
            prev_end: 0,
            tag: TAG_HOLE,
            state: NO_STATE,
        }
    }

    fn unpack(&self) -> Backpointer {
        let prev_mean = match self.tag {
            TAG_EQUAL => PrevMean::EqualityActive,
            TAG_OFFSET => PrevMean::Offset(self.payload),
            TAG_VALUE => PrevMean::Value(self.payload),
            _ => PrevMean::Unset,
        };
        Backpointer {
            prev_end: self.prev_end as usize,
            prev_mean,
            prev_state: (self.state != NO_STATE).then_some(self.state),
        }
    }

    fn same_backpointer(&self, other: &Packed) -> bool {
        self.tag == other.tag
            && self.prev_end == other.prev_end
            && self.state == other.state
            && self.payload.to_bits() == other.payload.to_bits()
    }
}

#[derive(Debug, Clone)]
enum Cells {
    Full(Vec<Option<PiecewiseCost>>),
    Compact {
        lowers: Vec<f64>,
        offsets: Vec<usize>,
        pieces: Vec<Packed>,
    },
}

/// Stored functions `C_{row, t}` for consecutive `t` starting at `first`.
#[derive(Debug, Clone)]
pub(crate) struct Row {
    first: usize,
    cells: Cells,
}

impl Row {
    pub(crate) fn new(storage: Storage, first: usize) -> Self {
        let cells = match storage {
            Storage::Full => Cells::Full(Vec::new()),
            Storage::Backpointers => Cells::Compact {
                lowers: Vec::new(),
                offsets: vec![0],
                pieces: Vec::new(),
            },
        };
        Row { first, cells }
    }

    /// Appends the function for the next `t`; `None` marks an unreachable cell.
    pub(crate) fn push(&mut self, f: Option<&PiecewiseCost>) {
        match &mut self.cells {
            Cells::Full(cols) => cols.push(f.cloned()),
            Cells::Compact {
                lowers,
                offsets,
                pieces,
            } => {
                let start = pieces.len();
                match f {
                    None => lowers.push(f64::NAN),
                    Some(f) => {
                        lowers.push(f.pieces()[0].lower);
                        let mut prev_upper = f.pieces()[0].lower;
                        for p in f.pieces() {
                            if p.lower > prev_upper {
                                pieces.push(Packed::hole(p.lower));
                            }
                            let packed = Packed::pack(
                                p.upper,
                                Backpointer {
                                    prev_end: p.prev_end,
                                    prev_mean: p.prev_mean,
                                    prev_state: p.prev_state,
                                },
                            );
                            match pieces[start..].last_mut() {
                                Some(last) if last.same_backpointer(&packed) => last.upper = p.upper,
                                _ => pieces.push(packed),
                            }
                            prev_upper = p.upper;
                        }
                    }
                }
                offsets.push(pieces.len());
            }
        }
    }

    fn column(&self, t: usize) -> Result<usize> {
        let len = match &self.cells {
            Cells::Full(cols) => cols.len(),
            Cells::Compact { lowers, .. } => lowers.len(),
        };
        if t < self.first || t - self.first >= len {
            return Err(Error::Inconsistent(format!("no stored cost function at t = {t}")));
        }
        Ok(t - self.first)
    }

    /// Full function at `t`, when stored.
    pub(crate) fn function(&self, t: usize) -> Option<&PiecewiseCost> {
        match &self.cells {
            Cells::Full(cols) => self.column(t).ok().and_then(|i| cols[i].as_ref()),
            Cells::Compact { .. } => None,
        }
    }

    /// Backpointers of the piece of `C_{row, t}` containing coordinate `x`.
    /// A boundary belongs to the left piece; coordinates within `slack` of
    /// a defined piece snap to it.
    pub(crate) fn lookup(&self, t: usize, x: f64, slack: f64) -> Result<Backpointer> {
        let i = self.column(t)?;
        match &self.cells {
            Cells::Full(cols) => {
                let f = cols[i]
                    .as_ref()
                    .ok_or_else(|| Error::Inconsistent(format!("backpointer into unreachable cell t = {t}")))?;
                let p = f.find_coord(x).map_err(|_| {
                    Error::Inconsistent(format!("mean coordinate {x} not covered at t = {t}"))
                })?;
                Ok(Backpointer {
                    prev_end: p.prev_end,
                    prev_mean: p.prev_mean,
                    prev_state: p.prev_state,
                })
            }
            Cells::Compact {
                lowers,
                offsets,
                pieces,
            } => {
                let lower = lowers[i];
                let ps = &pieces[offsets[i]..offsets[i + 1]];
                if ps.is_empty() {
                    return Err(Error::Inconsistent(format!("backpointer into unreachable cell t = {t}")));
                }
                let missing = || Error::Inconsistent(format!("mean coordinate {x} not covered at t = {t}"));
                if x < lower {
                    return if lower - x <= slack || lower == f64::NEG_INFINITY {
                        Ok(ps[0].unpack())
                    } else {
                        Err(missing())
                    };
                }
                let j = ps.partition_point(|p| p.upper < x);
                if j == ps.len() {
                    let last = ps[ps.len() - 1];
                    return if x - last.upper <= slack {
                        Ok(last.unpack())
                    } else {
                        Err(missing())
                    };
                }
                if ps[j].tag != TAG_HOLE {
                    return Ok(ps[j].unpack());
                }
                // Inside a hole: snap to a neighbour within rounding distance.
                if j > 0 && x - ps[j - 1].upper <= slack {
                    return Ok(ps[j - 1].unpack());
                }
                if j + 1 < ps.len() && ps[j].upper - x <= slack {
                    return Ok(ps[j + 1].unpack());
                }
                Err(missing())
            }
        }
    }

    /// Approximate heap usage in bytes.
    pub(crate) fn heap_bytes(&self) -> usize {
        match &self.cells {
            Cells::Full(cols) => cols
                .iter()
                .flatten()
                .map(|f| f.len() * std::mem::size_of::<crate::piecewise::FunctionPiece>())
                .sum(),
            Cells::Compact {
                lowers,
                offsets,
                pieces,
            } => {
                lowers.capacity() * 8
                    + offsets.capacity() * std::mem::size_of::<usize>()
                    + pieces.capacity() * std::mem::size_of::<Packed>()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::{min_less, one_piece, shift_argument, LossFamily};

    fn toy() -> PiecewiseCost {
        min_less(1, &one_piece(2.0, 1.0, 0.0, 4.0, LossFamily::Square).unwrap())
    }

    #[test]
    fn compact_and_full_agree() {
        let f = toy();
        let shifted = shift_argument(&f, 0.5).unwrap().unwrap();
        let mut full = Row::new(Storage::Full, 1);
        let mut compact = Row::new(Storage::Backpointers, 1);
        for g in [Some(&f), None, Some(&shifted)] {
            full.push(g);
            compact.push(g);
        }
        for x in [0.0, 1.0, 2.0, 2.5, 4.0] {
            assert_eq!(full.lookup(1, x, 1e-9).unwrap(), compact.lookup(1, x, 1e-9).unwrap());
        }
        assert_eq!(compact.lookup(1, 2.0, 0.0).unwrap().prev_mean, PrevMean::EqualityActive);
        assert_eq!(compact.lookup(1, 3.0, 0.0).unwrap().prev_mean, PrevMean::Value(2.0));
        assert!(compact.lookup(2, 1.0, 0.0).is_err());
        assert!(compact.lookup(3, 0.2, 1e-9).is_err());
        assert_eq!(
            compact.lookup(3, 1.0, 0.0).unwrap(),
            full.lookup(3, 1.0, 0.0).unwrap()
        );
        assert!(compact.lookup(4, 1.0, 0.0).is_err());
    }
}
