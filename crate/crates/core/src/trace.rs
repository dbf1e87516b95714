//! Per-iteration convergence trace and its CSV form.

use std::fmt::Write as _;

use thiserror::Error;

pub const TRACE_HEADER: &str = "iteration,best_objective,evaluations,employed,onlooker,scouts,wall_seconds";

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    /// 0 is the evaluated initial population.
    pub iteration: usize,
    pub best_objective: f64,
    /// Cumulative objective calls.
    pub evaluations: usize,
    /// Employed-phase evaluations in this iteration.
    pub employed: usize,
    /// Onlooker selections in this iteration.
    pub onlooker: usize,
    /// Sources abandoned and replaced in this iteration.
    pub scouts: usize,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace header mismatch: {0:?}")]
    Header(String),
    #[error("line {line}: {msg}")]
    Row { line: usize, msg: String },
    #[error("empty trace")]
    Empty,
}

impl ConvergenceTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Main-loop iterations completed (rows after the initial one).
    pub fn iterations(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    /// CSV with a header row. Floats use the shortest representation that
    /// round-trips, so parsing the file reproduces the values exactly.
    pub fn to_csv(&self, with_wall_clock: bool) -> String {
        let mut out = String::new();
        if with_wall_clock {
            out.push_str(TRACE_HEADER);
        } else {
            out.push_str(TRACE_HEADER.trim_end_matches(",wall_seconds"));
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{:?},{},{},{},{}",
                r.iteration, r.best_objective, r.evaluations, r.employed, r.onlooker, r.scouts
            );
            if with_wall_clock {
                let _ = write!(out, ",{:?}", r.wall_seconds);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, TraceError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(TraceError::Empty)?;
        let with_wall = match header.trim() {
            h if h == TRACE_HEADER => true,
            h if h == TRACE_HEADER.trim_end_matches(",wall_seconds") => false,
            h => return Err(TraceError::Header(h.to_owned())),
        };
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let line_no = n + 2;
            let bad = |msg: String| TraceError::Row { line: line_no, msg };
            let cols: Vec<&str> = line.split(',').collect();
            let expected = if with_wall { 7 } else { 6 };
            if cols.len() != expected {
                return Err(bad(format!("expected {expected} columns, found {}", cols.len())));
            }
            let int = |i: usize| cols[i].trim().parse::<usize>().map_err(|e| bad(format!("column {}: {e}", i + 1)));
            let float = |i: usize| cols[i].trim().parse::<f64>().map_err(|e| bad(format!("column {}: {e}", i + 1)));
            rows.push(TraceRow {
                iteration: int(0)?,
                best_objective: float(1)?,
                evaluations: int(2)?,
                employed: int(3)?,
                onlooker: int(4)?,
                scouts: int(5)?,
                wall_seconds: if with_wall { float(6)? } else { 0.0 },
            });
        }
        Ok(Self { rows })
    }

    /// Checks ordering invariants: strictly increasing iterations,
    /// non-increasing best objective, non-decreasing cumulative columns.
    pub fn check_monotone(&self) -> Result<(), String> {
        for w in self.rows.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if b.iteration <= a.iteration {
                return Err(format!("iteration {} follows {}", b.iteration, a.iteration));
            }
            if b.best_objective > a.best_objective {
                return Err(format!("best objective rose at iteration {}", b.iteration));
            }
            if b.evaluations < a.evaluations || b.wall_seconds < a.wall_seconds {
                return Err(format!("cumulative column fell at iteration {}", b.iteration));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConvergenceTrace {
        ConvergenceTrace {
            rows: vec![
                TraceRow { iteration: 0, best_objective: 3.25, evaluations: 10, employed: 0, onlooker: 0, scouts: 0, wall_seconds: 0.001 },
                TraceRow { iteration: 1, best_objective: 0.1 + 0.2, evaluations: 27, employed: 10, onlooker: 5, scouts: 1, wall_seconds: 0.002 },
            ],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample();
        assert_eq!(ConvergenceTrace::from_csv(&t.to_csv(true)).unwrap(), t);
        let no_wall = ConvergenceTrace::from_csv(&t.to_csv(false)).unwrap();
        assert_eq!(no_wall.rows[1].best_objective, 0.1 + 0.2);
        assert_eq!(no_wall.rows[1].wall_seconds, 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ConvergenceTrace::from_csv("a,b\n"), Err(TraceError::Header(_))));
        let text = format!("{TRACE_HEADER}\n0,1.0,3\n");
        assert!(matches!(ConvergenceTrace::from_csv(&text), Err(TraceError::Row { line: 2, .. })));
    }

    #[test]
    fn monotone_check() {
        let mut t = sample();
        assert!(t.check_monotone().is_ok());
        t.rows[1].best_objective = 4.0;
        assert!(t.check_monotone().is_err());
    }
}
