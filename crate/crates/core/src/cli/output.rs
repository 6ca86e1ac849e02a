// SPDX-License-Identifier: MIT OR Apache-2.0

use std::io::Write;

use crate::cli::ingest::Track;
use crate::constraint::{ChangeKind, ConstraintSchedule};
use crate::error::{Error, Result};
use crate::penalized::StateGraph;
use crate::segmentation::Segmentation;

/// `printf("%.17g")`: 17 significant digits, trailing zeros removed,
/// exponent notation outside `1e-5 <= |x| < 1e17`.
pub fn format_g17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        // Negative zero falls out of `-b / 2a` and is not worth printing.
        return "0".into();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (16 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Where a segmentation came from, which decides how peaks are read off it.
#[derive(Debug, Clone, Copy)]
pub enum PeakModel<'a> {
    Schedule(&'a ConstraintSchedule),
    Graph(&'a StateGraph),
}

/// Peaks of an up-down segmentation as `(first, last)` 1-based encoded
/// index pairs: the even segments of a schedule fit, or the segments in
/// the state named `peak` of a graph fit.
pub fn peaks_from_segments(seg: &Segmentation, model: PeakModel) -> Result<Vec<(usize, usize)>> {
    let starts = seg.starts();
    let keep: Vec<bool> = match model {
        PeakModel::Schedule(schedule) => {
            let updown = match schedule {
                ConstraintSchedule::UpDown => true,
                ConstraintSchedule::Explicit(list) => list.iter().enumerate().all(|(i, c)| {
                    c.kind == if i % 2 == 0 { ChangeKind::Up } else { ChangeKind::Down }
                }),
                _ => false,
            };
            if !updown {
                return Err(Error::Misuse(format!("peaks need an up-down model, not {}", schedule.name())));
            }
            (0..seg.k()).map(|i| i % 2 == 1).collect()
        }
        PeakModel::Graph(graph) => {
            let peak = graph
                .state("peak")
                .ok_or_else(|| Error::Misuse("peaks need a graph with a state named `peak`".into()))?;
            let states = seg
                .states
                .as_ref()
                .ok_or_else(|| Error::Misuse("segmentation carries no states".into()))?;
            states.iter().map(|&s| s == peak).collect()
        }
    };
    Ok((0..seg.k())
        .filter(|&i| keep[i])
        .map(|i| (starts[i] + 1, seg.ends[i]))
        .collect())
}

/// Writes `start end mean state` rows in input coordinates.
pub fn write_segments(
    out: &mut dyn Write,
    track: &Track,
    seg: &Segmentation,
    state_name: impl Fn(usize) -> String,
) -> std::io::Result<()> {
    for (i, start) in seg.starts().into_iter().enumerate() {
        let (a, b) = track.span(start, seg.ends[i]);
        writeln!(out, "{a}\t{b}\t{}\t{}", format_g17(seg.means[i]), state_name(i))?;
    }
    Ok(())
}

/// Writes `start end` rows, one per peak.
pub fn write_peaks(out: &mut dyn Write, track: &Track, peaks: &[(usize, usize)]) -> std::io::Result<()> {
    for &(first, last) in peaks {
        let (a, b) = track.span(first - 1, last);
        writeln!(out, "{a}\t{b}")?;
    }
    Ok(())
}
