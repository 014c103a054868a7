use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"WBEV";
const VERSION: u16 = 1;

/// Ground-truth origin of a click. Only the simulator knows it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum EventTag {
    Signal = 0,
    Background = 1,
    Afterpulse = 2,
}

impl EventTag {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Self::Signal),
            1 => Some(Self::Background),
            2 => Some(Self::Afterpulse),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Signal => "signal",
            Self::Background => "background",
            Self::Afterpulse => "afterpulse",
        }
    }
}

impl fmt::Display for EventTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One detector click. Times are in digitizer ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventRecord {
    pub shot_index: u64,
    pub t_abs: u64,
    pub t_rel: u64,
    pub tag: EventTag,
}

impl EventRecord {
    pub fn new(shot_index: u64, t_rel: u64, rep_ticks: u64, tag: EventTag) -> Self {
        Self { shot_index, t_abs: shot_index * rep_ticks + t_rel, t_rel, tag }
    }

    pub fn from_abs(t_abs: u64, rep_ticks: u64, tag: EventTag) -> Self {
        Self { shot_index: t_abs / rep_ticks, t_abs, t_rel: t_abs % rep_ticks, tag }
    }
}

/// A run's worth of clicks together with the timing metadata needed to
/// interpret them.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub tick_ps: u64,
    pub rep_ticks: u64,
    pub n_shots: u64,
    pub events: Vec<EventRecord>,
}

impl EventStream {
    pub fn tick(&self) -> f64 {
        self.tick_ps as f64 * 1e-12
    }

    pub fn rep_period(&self) -> f64 {
        self.rep_ticks as f64 * self.tick()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, tag: EventTag) -> usize {
        self.events.iter().filter(|e| e.tag == tag).count()
    }

    /// Same metadata with a different event list.
    pub fn with_events(&self, events: Vec<EventRecord>) -> Self {
        Self { tick_ps: self.tick_ps, rep_ticks: self.rep_ticks, n_shots: self.n_shots, events }
    }

    /// Checks that `t_abs` never decreases; returns the first offending index.
    pub fn check_order(events: &[EventRecord]) -> Result<()> {
        match events.windows(2).position(|w| w[1].t_abs < w[0].t_abs) {
            Some(i) => Err(Error::UnorderedEvents { index: i + 1 }),
            None => Ok(()),
        }
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut emit = || -> std::io::Result<()> {
            w.write_all(MAGIC)?;
            w.write_all(&VERSION.to_le_bytes())?;
            w.write_all(&self.tick_ps.to_le_bytes())?;
            w.write_all(&(self.rep_ticks * self.tick_ps).to_le_bytes())?;
            w.write_all(&self.n_shots.to_le_bytes())?;
            for e in &self.events {
                w.write_all(&e.shot_index.to_le_bytes())?;
                w.write_all(&e.t_rel.to_le_bytes())?;
                w.write_all(&[e.tag as u8])?;
            }
            w.flush()
        };
        emit().map_err(|e| Error::io(path, e))
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Format { what: "event", path: path.to_path_buf(), reason };
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut head = [0u8; 30];
        r.read_exact(&mut head).map_err(|_| bad("truncated header".into()))?;
        if &head[..4] != MAGIC {
            return Err(bad("missing WBEV magic".into()));
        }
        let version = u16::from_le_bytes([head[4], head[5]]);
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let word = |i: usize| u64::from_le_bytes(head[i..i + 8].try_into().unwrap());
        let (tick_ps, rep_ps, n_shots) = (word(6), word(14), word(22));
        if tick_ps == 0 || rep_ps % tick_ps != 0 {
            return Err(bad(format!("rep period {rep_ps} ps is not a multiple of the {tick_ps} ps tick")));
        }
        let rep_ticks = rep_ps / tick_ps;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
        if bytes.len() % 17 != 0 {
            return Err(bad("trailing partial record".into()));
        }
        let events = bytes
            .chunks_exact(17)
            .enumerate()
            .map(|(i, rec)| {
                let shot = u64::from_le_bytes(rec[..8].try_into().unwrap());
                let t_rel = u64::from_le_bytes(rec[8..16].try_into().unwrap());
                let tag = EventTag::from_u8(rec[16]).ok_or_else(|| bad(format!("record {i}: unknown tag {}", rec[16])))?;
                if t_rel >= rep_ticks {
                    return Err(bad(format!("record {i}: t_rel beyond the repetition period")));
                }
                Ok(EventRecord::new(shot, t_rel, rep_ticks, tag))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tick_ps, rep_ticks, n_shots, events })
    }

    /// CSV export `shot,t_rel_ps,tag`. Timing metadata goes in a leading
    /// comment line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut emit = || -> std::io::Result<()> {
            writeln!(w, "# tick_ps={}, rep_ps={}, n_shots={}", self.tick_ps, self.rep_ticks * self.tick_ps, self.n_shots)?;
            writeln!(w, "shot,t_rel_ps,tag")?;
            for e in &self.events {
                writeln!(w, "{},{},{}", e.shot_index, e.t_rel * self.tick_ps, e.tag)?;
            }
            w.flush()
        };
        emit().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let bad = |line: usize, reason: &str| Error::Format {
            what: "event CSV",
            path: path.to_path_buf(),
            reason: format!("line {line}: {reason}"),
        };
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let mut next = |n: usize| -> Result<String> {
            lines.next().ok_or_else(|| bad(n, "unexpected end of file"))?.map_err(|e| Error::io(path, e))
        };
        let meta = next(1)?;
        let field = |key: &str| -> Result<u64> {
            meta.trim_start_matches('#')
                .split(',')
                .filter_map(|kv| kv.trim().split_once('='))
                .find(|(k, _)| *k == key)
                .and_then(|(_, v)| v.trim().parse().ok())
                .ok_or_else(|| bad(1, &format!("missing `{key}`")))
        };
        let (tick_ps, rep_ps, n_shots) = (field("tick_ps")?, field("rep_ps")?, field("n_shots")?);
        if tick_ps == 0 || rep_ps % tick_ps != 0 {
            return Err(bad(1, "rep_ps must be a multiple of tick_ps"));
        }
        let rep_ticks = rep_ps / tick_ps;
        if next(2)?.trim() != "shot,t_rel_ps,tag" {
            return Err(bad(2, "expected header `shot,t_rel_ps,tag`"));
        }
        let mut events = Vec::new();
        let mut n = 2;
        while let Ok(line) = next(n + 1) {
            n += 1;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(bad(n, "expected three columns"));
            }
            let shot: u64 = cols[0].parse().map_err(|_| bad(n, "bad shot index"))?;
            let ps: u64 = cols[1].parse().map_err(|_| bad(n, "bad t_rel_ps"))?;
            if ps % tick_ps != 0 || ps / tick_ps >= rep_ticks {
                return Err(bad(n, "t_rel_ps must be a tick multiple inside the repetition period"));
            }
            let tag = match cols[2] {
                "signal" => EventTag::Signal,
                "background" => EventTag::Background,
                "afterpulse" => EventTag::Afterpulse,
                _ => return Err(bad(n, "unknown tag")),
            };
            events.push(EventRecord::new(shot, ps / tick_ps, rep_ticks, tag));
        }
        Ok(Self { tick_ps, rep_ticks, n_shots, events })
    }
}
