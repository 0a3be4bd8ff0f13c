//! Per-(time point, site) update streams.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, WeightedEdge};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "I")]
    Insert,
    #[serde(rename = "D")]
    Delete,
}

/// One edge update observed by `site` at time point `time` (both 1-based).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateEvent {
    pub time: usize,
    pub site: usize,
    pub kind: EventKind,
    pub edge: WeightedEdge,
}

#[derive(Debug, Serialize, Deserialize)]
struct EventRecord {
    time: usize,
    site: usize,
    kind: EventKind,
    u: NodeId,
    v: NodeId,
    w: f64,
}

/// Events grouped by time point, then site, each site's events kept in
/// arrival order. This ordering is the processing order of every protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamSchedule {
    n: usize,
    t: usize,
    s: usize,
    events: Vec<UpdateEvent>,
    /// `offsets[τ-1]..offsets[τ]` are the events at time point τ.
    offsets: Vec<usize>,
}

impl StreamSchedule {
    /// Validates and orders `events`. A delete must match a copy of the same
    /// edge inserted earlier at the same site and not yet deleted.
    pub fn new(n: usize, t: usize, s: usize, mut events: Vec<UpdateEvent>) -> Result<Self> {
        if t == 0 || s == 0 {
            return Err(Error::Schedule(format!("need t ≥ 1 and s ≥ 1, got t={t}, s={s}")));
        }
        for ev in &events {
            if ev.time < 1 || ev.time > t {
                return Err(Error::Schedule(format!("time {} outside [1, {t}]", ev.time)));
            }
            if ev.site < 1 || ev.site > s {
                return Err(Error::Schedule(format!("site {} outside [1, {s}]", ev.site)));
            }
            for node in [ev.edge.u, ev.edge.v] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
        }
        events.sort_by_key(|ev| (ev.time, ev.site));

        // (site, u, v) -> time points of live inserted copies
        let mut live: HashMap<(usize, NodeId, NodeId), Vec<usize>> = HashMap::new();
        let mut seen: HashMap<(usize, usize, NodeId, NodeId), ()> = HashMap::new();
        for ev in &events {
            let key = (ev.site, ev.edge.u, ev.edge.v);
            match ev.kind {
                EventKind::Insert => {
                    if seen.insert((ev.time, ev.site, ev.edge.u, ev.edge.v), ()).is_some() {
                        return Err(Error::Schedule(format!(
                            "edge ({}, {}) inserted twice at site {} time {}",
                            ev.edge.u, ev.edge.v, ev.site, ev.time
                        )));
                    }
                    live.entry(key).or_default().push(ev.time);
                }
                EventKind::Delete => {
                    let copies = live.entry(key).or_default();
                    let pos = copies.iter().position(|&tm| tm < ev.time).ok_or_else(|| {
                        Error::Schedule(format!(
                            "delete of ({}, {}) at site {} time {} has no earlier insert",
                            ev.edge.u, ev.edge.v, ev.site, ev.time
                        ))
                    })?;
                    copies.swap_remove(pos);
                }
            }
        }

        let mut offsets = vec![0; t + 1];
        for ev in &events {
            offsets[ev.time] += 1;
        }
        for i in 1..=t {
            offsets[i] += offsets[i - 1];
        }
        Ok(Self {
            n,
            t,
            s,
            events,
            offsets,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn events(&self) -> &[UpdateEvent] {
        &self.events
    }

    /// Events at time point `tau` (1-based), in processing order.
    pub fn events_at(&self, tau: usize) -> &[UpdateEvent] {
        &self.events[self.offsets[tau - 1]..self.offsets[tau]]
    }

    pub fn insert_count(&self) -> usize {
        self.events.iter().filter(|e| e.kind == EventKind::Insert).count()
    }

    pub fn delete_count(&self) -> usize {
        self.events.len() - self.insert_count()
    }

    /// The same schedule with every delete event dropped.
    pub fn without_deletions(&self) -> Self {
        let events: Vec<_> = self
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Insert)
            .copied()
            .collect();
        Self::new(self.n, self.t, self.s, events).expect("dropping deletes keeps a schedule valid")
    }

    /// Writes `time,site,kind,u,v,w` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        for ev in &self.events {
            wtr.serialize(EventRecord {
                time: ev.time,
                site: ev.site,
                kind: ev.kind,
                u: ev.edge.u,
                v: ev.edge.v,
                w: ev.edge.w,
            })
            .map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a schedule CSV. `n`, `t` and `s` default to the smallest values
    /// consistent with the file.
    pub fn read_csv<R: Read>(
        input: R,
        n: Option<usize>,
        t: Option<usize>,
        s: Option<usize>,
    ) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut events = Vec::new();
        for (i, rec) in rdr.deserialize::<EventRecord>().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            let edge = WeightedEdge::new(rec.u, rec.v, rec.w).map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            events.push(UpdateEvent {
                time: rec.time,
                site: rec.site,
                kind: rec.kind,
                edge,
            });
        }
        let n = n.unwrap_or_else(|| events.iter().map(|e| e.edge.v + 1).max().unwrap_or(0));
        let t = t.unwrap_or_else(|| events.iter().map(|e| e.time).max().unwrap_or(1));
        let s = s.unwrap_or_else(|| events.iter().map(|e| e.site).max().unwrap_or(1));
        Self::new(n, t, s, events)
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line: 0,
            msg: format!("{other:?}"),
        },
    }
}
