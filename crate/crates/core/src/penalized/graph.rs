// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constraint::{ChangeConstraint, ChangeKind};
use crate::error::{Error, Result};
use crate::piecewise::StateId;

/// A penalised change from `source` to `target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: StateId,
    pub target: StateId,
    pub penalty: f64,
    pub constraint: ChangeConstraint,
}

/// Segmentation model as a directed graph of states.
///
/// Staying in the same state without a change is always allowed and free;
/// edges describe the allowed changes. A self-edge allows a change that
/// keeps the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateGraph {
    names: Vec<String>,
    edges: Vec<Edge>,
    start: Vec<StateId>,
    end: Vec<StateId>,
}

impl StateGraph {
    pub fn new(names: Vec<String>, edges: Vec<Edge>, start: Vec<StateId>, end: Vec<StateId>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidGraph("no states".into()));
        }
        if names.len() >= StateId::MAX as usize {
            return Err(Error::InvalidGraph(format!("too many states ({})", names.len())));
        }
        let n = names.len() as StateId;
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::InvalidGraph(format!("duplicate state name {name:?}")));
            }
        }
        for e in &edges {
            if e.source >= n || e.target >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {} -> {} references a missing state",
                    e.source, e.target
                )));
            }
            if !(e.penalty >= 0.0) || !e.penalty.is_finite() {
                return Err(Error::InvalidGraph(format!("invalid penalty {}", e.penalty)));
            }
            ChangeConstraint::new(e.constraint.kind, e.constraint.gap)?;
        }
        for (label, set) in [("start", &start), ("end", &end)] {
            if set.is_empty() {
                return Err(Error::InvalidGraph(format!("empty set of {label} states")));
            }
            if let Some(s) = set.iter().find(|&&s| s >= n) {
                return Err(Error::InvalidGraph(format!("{label} state {s} does not exist")));
            }
        }
        let mut start = start;
        let mut end = end;
        start.sort_unstable();
        start.dedup();
        end.sort_unstable();
        end.dedup();
        Ok(StateGraph {
            names,
            edges,
            start,
            end,
        })
    }

    /// Parses the text format: one edge per line as
    /// `source target penalty {any|up|down} [gap]`, plus optional
    /// `start: s1 s2` and `end: s1` lines. Without them every state may
    /// start or end. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut edges = Vec::new();
        let mut start_names: Option<(usize, Vec<String>)> = None;
        let mut end_names: Option<(usize, Vec<String>)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            if let Some(rest) = line.strip_prefix("start:") {
                start_names = Some((line_no, rest.split_whitespace().map(String::from).collect()));
                continue;
            }
            if let Some(rest) = line.strip_prefix("end:") {
                end_names = Some((line_no, rest.split_whitespace().map(String::from).collect()));
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !(4..=5).contains(&fields.len()) {
                return Err(err(format!(
                    "expected `source target penalty kind [gap]`, got {} fields",
                    fields.len()
                )));
            }
            let penalty: f64 = fields[2]
                .parse()
                .map_err(|_| err(format!("invalid penalty {:?}", fields[2])))?;
            let kind: ChangeKind = fields[3].parse().map_err(|e: Error| err(e.to_string()))?;
            let gap: f64 = match fields.get(4) {
                Some(g) => g.parse().map_err(|_| err(format!("invalid gap {g:?}")))?,
                None => 0.0,
            };
            let constraint = ChangeConstraint::new(kind, gap).map_err(|e| err(e.to_string()))?;
            if !(penalty >= 0.0) || !penalty.is_finite() {
                return Err(err(format!("penalty must be non-negative, got {penalty}")));
            }
            let source = intern(&mut names, fields[0]);
            let target = intern(&mut names, fields[1]);
            edges.push(Edge {
                source,
                target,
                penalty,
                constraint,
            });
        }
        if names.is_empty() {
            return Err(Error::InvalidGraph("no edges".into()));
        }
        let resolve = |spec: Option<(usize, Vec<String>)>, names: &[String]| -> Result<Vec<StateId>> {
            match spec {
                None => Ok((0..names.len() as StateId).collect()),
                Some((line, list)) => list
                    .iter()
                    .map(|s| {
                        names.iter().position(|n| n == s).map(|i| i as StateId).ok_or_else(|| Error::Parse {
                            line,
                            message: format!("unknown state {s:?}"),
                        })
                    })
                    .collect(),
            }
        };
        let start = resolve(start_names, &names)?;
        let end = resolve(end_names, &names)?;
        StateGraph::new(names, edges, start, end)
    }

    pub fn state_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, s: StateId) -> &str {
        &self.names[s as usize]
    }

    pub fn state(&self, name: &str) -> Option<StateId> {
        self.names.iter().position(|n| n == name).map(|i| i as StateId)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn start_states(&self) -> &[StateId] {
        &self.start
    }

    pub fn end_states(&self) -> &[StateId] {
        &self.end
    }

    pub fn is_start(&self, s: StateId) -> bool {
        self.start.contains(&s)
    }

    pub fn is_end(&self, s: StateId) -> bool {
        self.end.contains(&s)
    }

    pub fn max_gap(&self) -> f64 {
        self.edges.iter().map(|e| e.constraint.gap).fold(0.0, f64::max)
    }

    /// Edges from `source` to `target`.
    pub fn edges_between(&self, source: StateId, target: StateId) -> impl Iterator<Item = &Edge> {
        self.edges
            .iter()
            .filter(move |e| e.source == source && e.target == target)
    }

    /// Text form accepted by [`StateGraph::parse`].
    pub fn to_text(&self) -> String {
        let join = |set: &[StateId]| set.iter().map(|&s| self.name(s)).collect::<Vec<_>>().join(" ");
        let mut out = format!("start: {}\nend: {}\n", join(&self.start), join(&self.end));
        for e in &self.edges {
            out.push_str(&format!(
                "{} {} {} {}",
                self.name(e.source),
                self.name(e.target),
                e.penalty,
                e.constraint.kind
            ));
            if e.constraint.gap != 0.0 {
                out.push_str(&format!(" {}", e.constraint.gap));
            }
            out.push('\n');
        }
        out
    }
}

/// Built-in models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Unconstrained,
    Isotonic,
    UpDown,
    Unimodal,
}

impl Preset {
    /// Number of penalties the preset takes.
    pub fn penalty_count(self) -> usize {
        match self {
            Preset::Unconstrained | Preset::Isotonic => 1,
            Preset::UpDown => 2,
            Preset::Unimodal => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Unconstrained => "unconstrained",
            Preset::Isotonic => "isotonic",
            Preset::UpDown => "updown",
            Preset::Unimodal => "unimodal",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unconstrained" => Ok(Preset::Unconstrained),
            "isotonic" => Ok(Preset::Isotonic),
            "updown" | "peak" | "peaks" => Ok(Preset::UpDown),
            "unimodal" => Ok(Preset::Unimodal),
            other => Err(Error::Misuse(format!("unknown model {other:?}"))),
        }
    }
}

fn intern(names: &mut Vec<String>, name: &str) -> StateId {
    match names.iter().position(|n| n == name) {
        Some(i) => i as StateId,
        None => {
            names.push(name.to_string());
            (names.len() - 1) as StateId
        }
    }
}

fn edge(source: StateId, target: StateId, penalty: f64, constraint: ChangeConstraint) -> Edge {
    Edge {
        source,
        target,
        penalty,
        constraint,
    }
}

/// Graph of a built-in model with the given penalties, in the order the
/// edges are listed below.
///
/// - unconstrained: one state, any change (`[lambda]`);
/// - isotonic: one state, non-decreasing changes (`[lambda]`);
/// - updown: background -> peak up, peak -> background down
///   (`[lambda_up, lambda_down]`), starting and ending in background;
/// - unimodal: up -> up/down up, up/down -> up/down up, up/down -> down
///   down, down -> down down (`[l1, l2, l3, l4]`), any start and end.
pub fn preset_graph(preset: Preset, penalties: &[f64]) -> Result<StateGraph> {
    if penalties.len() != preset.penalty_count() {
        return Err(Error::PenaltyArity {
            name: preset.name().to_string(),
            expected: preset.penalty_count(),
            got: penalties.len(),
        });
    }
    let p = penalties;
    let (names, edges, start, end): (Vec<&str>, Vec<Edge>, Vec<StateId>, Vec<StateId>) = match preset {
        Preset::Unconstrained => (vec!["main"], vec![edge(0, 0, p[0], ChangeConstraint::ANY)], vec![0], vec![0]),
        Preset::Isotonic => (vec!["main"], vec![edge(0, 0, p[0], ChangeConstraint::UP)], vec![0], vec![0]),
        Preset::UpDown => (
            vec!["background", "peak"],
            vec![edge(0, 1, p[0], ChangeConstraint::UP), edge(1, 0, p[1], ChangeConstraint::DOWN)],
            vec![0],
            vec![0],
        ),
        Preset::Unimodal => (
            vec!["up", "up/down", "down"],
            vec![
                edge(0, 1, p[0], ChangeConstraint::UP),
                edge(1, 1, p[1], ChangeConstraint::UP),
                edge(1, 2, p[2], ChangeConstraint::DOWN),
                edge(2, 2, p[3], ChangeConstraint::DOWN),
            ],
            vec![0, 1, 2],
            vec![0, 1, 2],
        ),
    };
    StateGraph::new(names.into_iter().map(String::from).collect(), edges, start, end)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_shapes() {
        let g = preset_graph(Preset::Unconstrained, &[1.0]).unwrap();
        assert_eq!((g.state_count(), g.edges().len()), (1, 1));
        assert_eq!(g.edges()[0].constraint.kind, ChangeKind::Any);
        let g = preset_graph(Preset::UpDown, &[1.0, 2.0]).unwrap();
        assert_eq!((g.state_count(), g.edges().len()), (2, 2));
        assert_eq!(g.start_states(), &[0]);
        assert_eq!(g.end_states(), &[0]);
        let g = preset_graph(Preset::Unimodal, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((g.state_count(), g.edges().len()), (3, 4));
        assert_eq!(g.edges()[2].source, g.state("up/down").unwrap());
        assert_eq!(g.edges()[2].target, g.state("down").unwrap());
    }

    #[test]
    fn preset_arity() {
        assert_eq!(
            preset_graph(Preset::UpDown, &[1.0]),
            Err(Error::PenaltyArity {
                name: "updown".into(),
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn parse_round_trip() {
        let g = preset_graph(Preset::UpDown, &[1.5, 0.25]).unwrap();
        assert_eq!(StateGraph::parse(&g.to_text()).unwrap(), g);
        let text = "# peaks\nstart: bkg\nend: bkg\nbkg peak 2 up 0.5\npeak bkg 2 down\n";
        let h = StateGraph::parse(text).unwrap();
        assert_eq!(h.edges()[0].constraint.gap, 0.5);
        assert_eq!(h.name(1), "peak");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "a b 1 up\na b x up\n";
        assert!(matches!(StateGraph::parse(bad), Err(Error::Parse { line: 2, .. })));
        let bad = "a b 1 sideways\n";
        assert!(matches!(StateGraph::parse(bad), Err(Error::Parse { line: 1, .. })));
        let bad = "start: c\na b 1 up\n";
        assert!(matches!(StateGraph::parse(bad), Err(Error::Parse { line: 1, .. })));
    }
}
