//! JSONL event logs.
//!
//! One JSON object per line: `{"t": 3, "type": "T2", "source": 0,
//! "target": 2, "tree": 0}`. T1 lines carry the new user in `source` (the
//! user authored the message and is the root of the new tree); T2 lines
//! carry the retweeted user in `source` and the arriving retweeter in
//! `target`; T3 lines carry two existing users. Absent fields are omitted,
//! field order is fixed, and numbers are plain integers, so a log written
//! twice from the same state is byte-identical.

use crate::graph::{ArrivalEvent, TreeId, UserId};
use crate::progression::Progression;
use crate::state::{GraphState, StateConfig};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use thiserror::Error;

/// An event with the time index it occurred at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimedEvent {
    pub t: u64,
    pub event: ArrivalEvent,
}

#[derive(Debug, Error)]
pub enum EventLogError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: event carries t={found} but the state is at t={expected}")]
    TimeMismatch {
        line: usize,
        expected: u64,
        found: u64,
    },
    #[error("line {line}: {source}")]
    Rejected {
        line: usize,
        source: crate::graph::EventError,
    },
}

/// Wire form of one line; field order defines the output byte layout.
#[derive(Serialize, Deserialize)]
struct EventLine {
    t: u64,
    #[serde(rename = "type")]
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    source: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tree: Option<u32>,
}

impl From<TimedEvent> for EventLine {
    fn from(te: TimedEvent) -> Self {
        let (kind, source, target, tree) = match te.event {
            ArrivalEvent::T1 { user } => ("T1", Some(user.0), None, None),
            ArrivalEvent::T2 { source, user, tree } => {
                ("T2", Some(source.0), Some(user.0), Some(tree.0))
            }
            ArrivalEvent::T3 {
                source,
                target,
                tree,
            } => ("T3", Some(source.0), Some(target.0), Some(tree.0)),
        };
        EventLine {
            t: te.t,
            kind: kind.to_string(),
            source,
            target,
            tree,
        }
    }
}

impl EventLine {
    fn into_timed(self, line: usize) -> Result<TimedEvent, EventLogError> {
        let need = |field: Option<u32>, name: &str| {
            field.ok_or_else(|| EventLogError::Malformed {
                line,
                message: format!("{} event is missing the {name} field", self.kind),
            })
        };
        let event = match self.kind.as_str() {
            "T1" => ArrivalEvent::T1 {
                user: UserId(need(self.source, "source")?),
            },
            "T2" => ArrivalEvent::T2 {
                source: UserId(need(self.source, "source")?),
                user: UserId(need(self.target, "target")?),
                tree: TreeId(need(self.tree, "tree")?),
            },
            "T3" => ArrivalEvent::T3 {
                source: UserId(need(self.source, "source")?),
                target: UserId(need(self.target, "target")?),
                tree: TreeId(need(self.tree, "tree")?),
            },
            other => {
                return Err(EventLogError::Malformed {
                    line,
                    message: format!("unknown event type {other:?}"),
                })
            }
        };
        Ok(TimedEvent { t: self.t, event })
    }
}

/// Writes events as JSONL.
pub fn write_events<W: Write>(mut w: W, events: &[TimedEvent]) -> Result<(), EventLogError> {
    for &te in events {
        serde_json::to_writer(&mut w, &EventLine::from(te)).map_err(std::io::Error::other)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Reads a JSONL event log. Blank lines are not allowed; any parse failure
/// is fatal because a replayed log with holes is meaningless.
pub fn read_events<R: BufRead>(r: R) -> Result<Vec<TimedEvent>, EventLogError> {
    let mut events = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line_no = idx + 1;
        let text = line?;
        let parsed: EventLine =
            serde_json::from_str(&text).map_err(|e| EventLogError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        events.push(parsed.into_timed(line_no)?);
    }
    Ok(events)
}

/// Replays a log onto a fresh state, checking that each recorded time index
/// matches the one the state assigns.
pub fn replay_log(events: &[TimedEvent], config: StateConfig) -> Result<GraphState, EventLogError> {
    Ok(replay_log_with_progression(events, config)?.0)
}

/// [`replay_log`] that also records a progression row after every event.
pub fn replay_log_with_progression(
    events: &[TimedEvent],
    config: StateConfig,
) -> Result<(GraphState, Progression), EventLogError> {
    let mut state = GraphState::with_config(config);
    let mut progression = Progression::new();
    for (idx, te) in events.iter().enumerate() {
        let line = idx + 1;
        let t = state
            .apply_event(&te.event)
            .map_err(|source| EventLogError::Rejected { line, source })?;
        if t != te.t {
            return Err(EventLogError::TimeMismatch {
                line,
                expected: t,
                found: te.t,
            });
        }
        progression.push(state.snapshot());
    }
    Ok((state, progression))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_events() -> Vec<TimedEvent> {
        vec![
            TimedEvent {
                t: 0,
                event: ArrivalEvent::T1 { user: UserId(0) },
            },
            TimedEvent {
                t: 1,
                event: ArrivalEvent::T2 {
                    source: UserId(0),
                    user: UserId(1),
                    tree: TreeId(0),
                },
            },
            TimedEvent {
                t: 2,
                event: ArrivalEvent::T3 {
                    source: UserId(1),
                    target: UserId(0),
                    tree: TreeId(0),
                },
            },
        ]
    }

    #[test]
    fn lines_have_fixed_layout() {
        let mut buf = Vec::new();
        write_events(&mut buf, &sample_events()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            concat!(
                "{\"t\":0,\"type\":\"T1\",\"source\":0}\n",
                "{\"t\":1,\"type\":\"T2\",\"source\":0,\"target\":1,\"tree\":0}\n",
                "{\"t\":2,\"type\":\"T3\",\"source\":1,\"target\":0,\"tree\":0}\n",
            )
        );
    }

    #[test]
    fn round_trip_preserves_events() {
        let mut buf = Vec::new();
        write_events(&mut buf, &sample_events()).unwrap();
        let back = read_events(buf.as_slice()).unwrap();
        assert_eq!(back, sample_events());
    }

    #[test]
    fn malformed_lines_fail_with_line_numbers() {
        let input = "{\"t\":0,\"type\":\"T1\",\"source\":0}\n{\"t\":1,\"type\":\"T2\",\"source\":0}\n";
        let err = read_events(input.as_bytes()).unwrap_err();
        match err {
            EventLogError::Malformed { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("target"), "got message: {message}");
            }
            other => panic!("expected Malformed, got {other:?}"),
        }
    }

    #[test]
    fn unknown_event_types_are_rejected() {
        let input = "{\"t\":0,\"type\":\"T9\",\"source\":0}\n";
        assert!(matches!(
            read_events(input.as_bytes()),
            Err(EventLogError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn replay_checks_time_indices() {
        let mut events = sample_events();
        events[2].t = 9;
        let err = replay_log(&events, StateConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            EventLogError::TimeMismatch {
                line: 3,
                expected: 2,
                found: 9
            }
        ));
    }

    #[test]
    fn replay_rebuilds_state() {
        let events = sample_events();
        let state = replay_log(&events, StateConfig::default()).unwrap();
        assert_eq!(state.graph.node_count(), 2);
        assert_eq!(state.graph.edge_count(), 2);
        assert_eq!(state.time(), Some(2));
    }
}
