// SPDX-License-Identifier: Apache-2.0

//! Line-oriented trace format.
//!
//! ```text
//! lfd-trace 1 bounds xmin ymin zmin xmax ymax zmax objects 1:cucumber 2:potato
//! index time hx hy hz wx wy wz tx ty tz | id cx cy cz state | id cx cy cz state
//! ```
//!
//! Floats are written in scientific notation with 10 significant digits.
//! A state token is a label optionally followed by `;key=value` attributes.
//! Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{DemonstrationTrace, Frame, ObjectDatabase, ObjectId, ObjectRecord, StateLabel, TraceError};
use crate::geometry::{Aabb, Vec3};

pub const TRACE_MAGIC: &str = "lfd-trace";
const FORMAT_VERSION: &str = "1";

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.9e}")
}

fn push_vec(out: &mut String, v: &Vec3) {
    for c in v.iter() {
        out.push(' ');
        out.push_str(&fmt_f64(*c));
    }
}

fn state_token(s: &StateLabel) -> String {
    let mut t = s.name.clone();
    for (k, v) in &s.attributes {
        let _ = write!(t, ";{k}={}", fmt_f64(*v));
    }
    t
}

pub fn write_trace(trace: &DemonstrationTrace) -> String {
    let mut out = String::new();
    out.push_str(TRACE_MAGIC);
    out.push(' ');
    out.push_str(FORMAT_VERSION);
    out.push_str(" bounds");
    let b = trace.workspace();
    for c in b.min.iter().chain(b.max.iter()) {
        out.push(' ');
        out.push_str(&fmt_f64(*c));
    }
    out.push_str(" objects");
    for (id, class) in trace.classes() {
        let _ = write!(out, " {id}:{class}");
    }
    out.push('\n');
    for f in trace.frames() {
        let _ = write!(out, "{} {}", f.index, fmt_f64(f.time));
        push_vec(&mut out, &f.hand);
        push_vec(&mut out, &f.wrist);
        push_vec(&mut out, &f.hand_tip);
        for o in &f.objects {
            let _ = write!(out, " | {}", o.object_id);
            push_vec(&mut out, &o.centroid);
            out.push(' ');
            out.push_str(&state_token(&o.state));
        }
        out.push('\n');
    }
    out
}

pub fn load_trace(path: &Path, db: &ObjectDatabase) -> Result<DemonstrationTrace, TraceError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| TraceError::Io { path: path.display().to_string(), source })?;
    parse_trace(&text, db)
}

struct Tokens<'a> {
    line: usize,
    it: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn err(&self, message: impl Into<String>) -> TraceError {
        TraceError::Parse { line: self.line, message: message.into() }
    }

    fn next(&mut self, what: &str) -> Result<&'a str, TraceError> {
        self.it.next().ok_or_else(|| self.err(format!("missing {what}")))
    }

    fn f64(&mut self, what: &str) -> Result<f64, TraceError> {
        let t = self.next(what)?;
        t.parse().map_err(|_| self.err(format!("bad {what} {t:?}")))
    }

    fn vec3(&mut self, what: &str) -> Result<Vec3, TraceError> {
        Ok(Vec3::new(self.f64(what)?, self.f64(what)?, self.f64(what)?))
    }
}

fn parse_state(tok: &str, line: usize) -> Result<StateLabel, TraceError> {
    let mut parts = tok.split(';');
    let name = parts.next().unwrap_or_default();
    if name.is_empty() {
        return Err(TraceError::Parse { line, message: "empty state label".into() });
    }
    let mut label = StateLabel::new(name);
    for attr in parts {
        let (k, v) = attr
            .split_once('=')
            .ok_or_else(|| TraceError::Parse { line, message: format!("bad state attribute {attr:?}") })?;
        let v: f64 = v
            .parse()
            .map_err(|_| TraceError::Parse { line, message: format!("bad attribute value {v:?}") })?;
        label.attributes.insert(k.to_string(), v);
    }
    Ok(label)
}

fn parse_header(line_no: usize, line: &str) -> Result<(Aabb, BTreeMap<ObjectId, String>), TraceError> {
    let mut t = Tokens { line: line_no, it: line.split_whitespace() };
    if t.next("magic")? != TRACE_MAGIC {
        return Err(t.err("not a trace file (missing lfd-trace header)"));
    }
    let version = t.next("version")?;
    if version != FORMAT_VERSION {
        return Err(t.err(format!("unsupported trace version {version}")));
    }
    if t.next("bounds keyword")? != "bounds" {
        return Err(t.err("expected 'bounds'"));
    }
    let min = [t.f64("bound")?, t.f64("bound")?, t.f64("bound")?];
    let max = [t.f64("bound")?, t.f64("bound")?, t.f64("bound")?];
    if t.next("objects keyword")? != "objects" {
        return Err(t.err("expected 'objects'"));
    }
    let mut classes = BTreeMap::new();
    for tok in t.it.by_ref() {
        let (id, class) = tok
            .split_once(':')
            .ok_or_else(|| TraceError::Parse { line: line_no, message: format!("bad object declaration {tok:?}") })?;
        let id: ObjectId = id
            .parse()
            .map_err(|_| TraceError::Parse { line: line_no, message: format!("bad object id {id:?}") })?;
        if classes.insert(id, class.to_string()).is_some() {
            return Err(TraceError::Parse { line: line_no, message: format!("object {id} declared twice") });
        }
    }
    if classes.is_empty() {
        return Err(TraceError::Parse { line: line_no, message: "no objects declared".into() });
    }
    Ok((Aabb::new(min, max), classes))
}

fn parse_frame(line_no: usize, line: &str) -> Result<Frame, TraceError> {
    let mut groups = line.split('|');
    let head = groups.next().unwrap_or_default();
    let mut t = Tokens { line: line_no, it: head.split_whitespace() };
    let idx = t.next("frame index")?;
    let index: usize = idx.parse().map_err(|_| t.err(format!("bad frame index {idx:?}")))?;
    let time = t.f64("time")?;
    let hand = t.vec3("hand coordinate")?;
    let wrist = t.vec3("wrist coordinate")?;
    let hand_tip = t.vec3("hand tip coordinate")?;
    if let Some(extra) = t.it.next() {
        return Err(t.err(format!("unexpected token {extra:?}")));
    }
    let mut objects = Vec::new();
    for g in groups {
        let mut t = Tokens { line: line_no, it: g.split_whitespace() };
        let id_tok = t.next("object id")?;
        let object_id: ObjectId = id_tok.parse().map_err(|_| t.err(format!("bad object id {id_tok:?}")))?;
        let centroid = t.vec3("centroid coordinate")?;
        let state = parse_state(t.next("state")?, line_no)?;
        if let Some(extra) = t.it.next() {
            return Err(t.err(format!("unexpected token {extra:?}")));
        }
        objects.push(ObjectRecord { object_id, centroid, state });
    }
    Ok(Frame { index, time, hand, wrist, hand_tip, objects })
}

pub fn parse_trace(text: &str, db: &ObjectDatabase) -> Result<DemonstrationTrace, TraceError> {
    let mut header = None;
    let mut frames = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if header.is_none() {
            header = Some(parse_header(line_no, line)?);
        } else {
            frames.push(parse_frame(line_no, line)?);
        }
    }
    let (bounds, classes) = header.ok_or(TraceError::Parse { line: 1, message: "empty trace file".into() })?;
    DemonstrationTrace::new(frames, bounds, classes, db)
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_FRAMES: &str = "\
lfd-trace 1 bounds 0 0 0 1 1 1 objects 1:cucumber
0 0.0 0.1 0.1 0.3 0.1 0.1 0.4 0.1 0.1 0.2 | 1 0.5 0.5 0.02 unpeeled
1 0.1 0.1 0.1 0.3 0.1 0.1 0.4 0.1 0.1 0.2 | 1 0.5 0.5 0.02 unpeeled;peel_fraction=0.01
2 0.2 0.1 0.1 0.3 0.1 0.1 0.4 0.1 0.1 0.2 | 1 0.5 0.5 0.02 peeled
";

    #[test]
    fn parses_well_formed_file() {
        let db = ObjectDatabase::builtin();
        let t = parse_trace(THREE_FRAMES, &db).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.frames()[1].objects[0].state.attributes["peel_fraction"], 0.01);
        let again = parse_trace(&write_trace(&t), &db).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn non_monotone_time() {
        let db = ObjectDatabase::builtin();
        let text = THREE_FRAMES.replace("\n2 0.2", "\n2 0.05");
        let err = parse_trace(&text, &db).unwrap_err();
        assert!(err.to_string().contains("time not strictly increasing"), "{err}");
    }

    #[test]
    fn parse_error_reports_line() {
        let db = ObjectDatabase::builtin();
        let text = THREE_FRAMES.replace("1 0.1 0.1 0.1 0.3", "1 0.1 0.1 oops 0.3");
        match parse_trace(&text, &db) {
            Err(TraceError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_header() {
        let db = ObjectDatabase::builtin();
        assert!(matches!(parse_trace("0 0 0 0 0 0 0 0 0 0 0 | 1 0 0 0 a\n", &db), Err(TraceError::Parse { line: 1, .. })));
    }
}
