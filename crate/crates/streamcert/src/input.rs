//! Text stream files, witness files and bucket masks.
//!
//! Streams carry one update per line after a header comment such as
//! `# n=1024 model=strict`. Blank lines and other comments are skipped.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use streamcert_core::graphs::{TreeEdge, Witness, WitnessKind};
use streamcert_core::streams::{
    validate_keyed, BucketedUpdate, EdgeUpdate, ModelKind, StreamMeta, StreamUpdate, Tag, TaggedUpdate, UpdateModel,
};

use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputKind {
    Plain,
    Bucketed,
    Tagged,
    Edges,
}

impl InputKind {
    pub fn describe(self) -> &'static str {
        match self {
            InputKind::Plain => "`<item> <delta>` stream",
            InputKind::Bucketed => "`<item> <bucket> <delta>` stream",
            InputKind::Tagged => "`S|T <item> <delta>` stream",
            InputKind::Edges => "`<u> <v> <delta>` edge stream",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlainStream {
    pub model: UpdateModel,
    pub meta: StreamMeta,
    pub updates: Vec<StreamUpdate>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BucketedStream {
    pub model: UpdateModel,
    /// Keyed by item; `len` and `mass` count bucketed updates.
    pub meta: StreamMeta,
    pub buckets: u64,
    pub updates: Vec<BucketedUpdate>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedStream {
    pub model: UpdateModel,
    /// The joint stream keyed by item.
    pub meta: StreamMeta,
    pub updates: Vec<TaggedUpdate>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeStream {
    pub model: UpdateModel,
    pub vertices: u32,
    /// Keyed by edge id over [n²].
    pub meta: StreamMeta,
    pub updates: Vec<EdgeUpdate>,
}

/// A validated stream of any supported shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StreamInput {
    Plain(PlainStream),
    Bucketed(BucketedStream),
    Tagged(TaggedStream),
    Edges(EdgeStream),
}

impl StreamInput {
    pub fn kind(&self) -> InputKind {
        match self {
            StreamInput::Plain(_) => InputKind::Plain,
            StreamInput::Bucketed(_) => InputKind::Bucketed,
            StreamInput::Tagged(_) => InputKind::Tagged,
            StreamInput::Edges(_) => InputKind::Edges,
        }
    }

    pub fn model(&self) -> UpdateModel {
        match self {
            StreamInput::Plain(s) => s.model,
            StreamInput::Bucketed(s) => s.model,
            StreamInput::Tagged(s) => s.model,
            StreamInput::Edges(s) => s.model,
        }
    }

    pub fn meta(&self) -> StreamMeta {
        match self {
            StreamInput::Plain(s) => s.meta,
            StreamInput::Bucketed(s) => s.meta,
            StreamInput::Tagged(s) => s.meta,
            StreamInput::Edges(s) => s.meta,
        }
    }
}

impl PlainStream {
    pub fn new(n: u64, model: UpdateModel, updates: Vec<StreamUpdate>) -> Result<Self, HarnessError> {
        let meta = validate_keyed(model, n, updates.iter().map(|u| (u.item, u.delta)), |i| i)?;
        Ok(Self { model, meta, updates })
    }
}

impl BucketedStream {
    pub fn new(n: u64, buckets: u64, model: UpdateModel, updates: Vec<BucketedUpdate>) -> Result<Self, HarnessError> {
        if let Some(u) = updates.iter().find(|u| u.bucket >= buckets) {
            return Err(HarnessError::Usage(format!("bucket {} outside [{buckets}]", u.bucket)));
        }
        // the model applies to each (item, bucket) pair
        validate_keyed(model, n, updates.iter().map(|u| ((u.item, u.bucket), u.delta)), |k| k.0)?;
        let meta = StreamMeta::of_keyed(n, updates.iter().map(|u| (u.item, u.delta)));
        Ok(Self { model, meta, buckets, updates })
    }
}

impl TaggedStream {
    pub fn new(n: u64, model: UpdateModel, updates: Vec<TaggedUpdate>) -> Result<Self, HarnessError> {
        validate_keyed(model, n, updates.iter().map(|u| ((u.tag, u.item), u.delta)), |k| k.1)?;
        let meta = StreamMeta::of_keyed(n, updates.iter().map(|u| (u.item, u.delta)));
        Ok(Self { model, meta, updates })
    }
}

impl EdgeStream {
    pub fn new(vertices: u32, model: UpdateModel, updates: Vec<EdgeUpdate>) -> Result<Self, HarnessError> {
        let n = vertices as u64;
        if let Some(e) = updates.iter().find(|e| e.v as u64 >= n) {
            return Err(HarnessError::Usage(format!("vertex {} outside [{n}]", e.v)));
        }
        let meta = validate_keyed(model, n * n, updates.iter().map(|e| (e.id(vertices), e.delta)), |i| i)?;
        Ok(Self { model, vertices, meta, updates })
    }

    pub fn final_edges(&self) -> std::collections::BTreeSet<(u32, u32)> {
        streamcert_core::graphs::final_edges(&self.updates)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> HarnessError {
    HarnessError::Parse { line, msg: msg.into() }
}

pub fn parse_model(s: &str) -> Option<UpdateModel> {
    let kind = match s {
        "insert" | "insert-only" => ModelKind::InsertOnly,
        "strict" => ModelKind::Strict,
        "nonstrict" | "non-strict" => ModelKind::NonStrict,
        _ => return None,
    };
    Some(UpdateModel { kind, unit: false })
}

pub fn model_name(m: UpdateModel) -> &'static str {
    match m.kind {
        ModelKind::InsertOnly => "insert",
        ModelKind::Strict => "strict",
        ModelKind::NonStrict => "nonstrict",
    }
}

struct Body<'a> {
    header: BTreeMap<&'a str, (usize, &'a str)>,
    /// (1-based line number, fields)
    lines: Vec<(usize, Vec<&'a str>)>,
}

fn split(text: &str) -> Body<'_> {
    let mut header = BTreeMap::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(c) = line.strip_prefix('#') {
            for tok in c.split_whitespace() {
                if let Some((k, v)) = tok.split_once('=') {
                    header.insert(k, (i + 1, v));
                }
            }
        } else if !line.is_empty() {
            lines.push((i + 1, line.split_whitespace().collect()));
        }
    }
    Body { header, lines }
}

impl Body<'_> {
    fn number<T: std::str::FromStr>(&self, keys: &[&str]) -> Result<Option<T>, HarnessError> {
        for k in keys {
            if let Some(&(line, v)) = self.header.get(k) {
                return v.parse().map(Some).map_err(|_| parse_err(line, format!("bad header value {k}={v}")));
            }
        }
        Ok(None)
    }

    fn model(&self) -> Result<UpdateModel, HarnessError> {
        match self.header.get("model") {
            Some(&(line, v)) => parse_model(v).ok_or_else(|| parse_err(line, format!("unknown model {v}"))),
            None => Ok(UpdateModel::STRICT),
        }
    }

    fn universe(&self) -> Result<u64, HarnessError> {
        self.number(&["n"])?.ok_or_else(|| parse_err(1, "missing `# n=<n>` header"))
    }
}

fn field<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T, HarnessError> {
    s.parse().map_err(|_| parse_err(line, format!("bad {what} `{s}`")))
}

fn arity(line: usize, f: &[&str], want: usize, shape: &str) -> Result<(), HarnessError> {
    if f.len() != want {
        return Err(parse_err(line, format!("expected {shape}")));
    }
    Ok(())
}

pub fn parse_plain(text: &str) -> Result<PlainStream, HarnessError> {
    let b = split(text);
    let mut updates = Vec::with_capacity(b.lines.len());
    for (line, f) in &b.lines {
        arity(*line, f, 2, "`<item> <delta>`")?;
        updates.push(StreamUpdate::new(field(*line, f[0], "item")?, field(*line, f[1], "delta")?));
    }
    PlainStream::new(b.universe()?, b.model()?, updates)
}

/// `r=<buckets>` in the header, else one more than the largest bucket.
pub fn parse_bucketed(text: &str) -> Result<BucketedStream, HarnessError> {
    let b = split(text);
    let mut updates = Vec::with_capacity(b.lines.len());
    for (line, f) in &b.lines {
        arity(*line, f, 3, "`<item> <bucket> <delta>`")?;
        updates.push(BucketedUpdate::new(field(*line, f[0], "item")?, field(*line, f[1], "bucket")?, field(*line, f[2], "delta")?));
    }
    let buckets = match b.number(&["r", "buckets"])? {
        Some(r) => r,
        None => updates.iter().map(|u| u.bucket + 1).max().unwrap_or(1),
    };
    BucketedStream::new(b.universe()?, buckets, b.model()?, updates)
}

/// Tags `S`/`T`; `X`/`Y` are accepted as their aliases.
pub fn parse_tagged(text: &str) -> Result<TaggedStream, HarnessError> {
    let b = split(text);
    let mut updates = Vec::with_capacity(b.lines.len());
    for (line, f) in &b.lines {
        arity(*line, f, 3, "`S|T <item> <delta>`")?;
        let tag = match f[0] {
            "S" | "s" | "X" | "x" => Tag::S,
            "T" | "t" | "Y" | "y" => Tag::T,
            other => return Err(parse_err(*line, format!("unknown tag `{other}`"))),
        };
        updates.push(TaggedUpdate::new(tag, field(*line, f[1], "item")?, field(*line, f[2], "delta")?));
    }
    TaggedStream::new(b.universe()?, b.model()?, updates)
}

/// Header `# vertices=<n>` (or `n=`).
pub fn parse_edges(text: &str) -> Result<EdgeStream, HarnessError> {
    let b = split(text);
    let vertices: u32 = b.number(&["vertices", "n"])?.ok_or_else(|| parse_err(1, "missing `# vertices=<n>` header"))?;
    let mut updates = Vec::with_capacity(b.lines.len());
    for (line, f) in &b.lines {
        arity(*line, f, 3, "`<u> <v> <delta>`")?;
        let (u, v): (u32, u32) = (field(*line, f[0], "vertex")?, field(*line, f[1], "vertex")?);
        let e = EdgeUpdate::new(u, v, field(*line, f[2], "delta")?).ok_or_else(|| parse_err(*line, "self loop"))?;
        updates.push(e);
    }
    EdgeStream::new(vertices, b.model()?, updates)
}

pub fn parse_stream(kind: InputKind, text: &str) -> Result<StreamInput, HarnessError> {
    Ok(match kind {
        InputKind::Plain => StreamInput::Plain(parse_plain(text)?),
        InputKind::Bucketed => StreamInput::Bucketed(parse_bucketed(text)?),
        InputKind::Tagged => StreamInput::Tagged(parse_tagged(text)?),
        InputKind::Edges => StreamInput::Edges(parse_edges(text)?),
    })
}

pub fn read_text(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

pub fn read_stream(kind: InputKind, path: &Path) -> Result<StreamInput, HarnessError> {
    parse_stream(kind, &read_text(path)?)
}

/// Witness files:
/// - matching: one `<u> <v>` pair per line;
/// - connectivity: optional `root <r>`, then `<parent> <vertex>` in discovery order;
/// - odd cycle: the cycle's vertices in order, closed or not.
pub fn parse_witness(kind: WitnessKind, text: &str) -> Result<Witness, HarnessError> {
    let b = split(text);
    let num = |line: usize, s: &str| field::<u32>(line, s, "vertex");
    match kind {
        WitnessKind::Matching => {
            let mut m = Vec::new();
            for (line, f) in &b.lines {
                arity(*line, f, 2, "`<u> <v>`")?;
                m.push((num(*line, f[0])?, num(*line, f[1])?));
            }
            Ok(Witness::Matching(m))
        }
        WitnessKind::Connectivity => {
            let mut root = None;
            let mut edges = Vec::new();
            for (line, f) in &b.lines {
                if f.first() == Some(&"root") {
                    arity(*line, f, 2, "`root <r>`")?;
                    root = Some(num(*line, f[1])?);
                    continue;
                }
                arity(*line, f, 2, "`<parent> <vertex>`")?;
                edges.push(TreeEdge { parent: num(*line, f[0])?, vertex: num(*line, f[1])? });
            }
            let root = root.or_else(|| edges.first().map(|e| e.parent)).unwrap_or(0);
            Ok(Witness::SpanningTree { root, edges })
        }
        WitnessKind::OddCycle => {
            let mut c = Vec::new();
            for (line, f) in &b.lines {
                for s in f {
                    c.push(num(*line, s)?);
                }
            }
            if c.len() > 1 && c.first() != c.last() {
                c.push(c[0]);
            }
            Ok(Witness::OddCycle(c))
        }
    }
}

/// Bucket weights z: lines `<bucket>` (weight 1) or `<bucket> <count>`.
pub fn parse_mask(text: &str, buckets: u64) -> Result<Vec<u64>, HarnessError> {
    let b = split(text);
    let mut z = vec![0u64; buckets as usize];
    for (line, f) in &b.lines {
        let (bucket, count) = match f.as_slice() {
            [b] => (field::<u64>(*line, b, "bucket")?, 1),
            [b, c] => (field::<u64>(*line, b, "bucket")?, field(*line, c, "count")?),
            _ => return Err(parse_err(*line, "expected `<bucket> [count]`")),
        };
        let slot = z.get_mut(bucket as usize).ok_or_else(|| parse_err(*line, format!("bucket {bucket} outside [{buckets}]")))?;
        *slot += count;
    }
    Ok(z)
}

pub fn format_plain(s: &PlainStream) -> String {
    let mut out = format!("# n={} model={}\n", s.meta.n, model_name(s.model));
    for u in &s.updates {
        out.push_str(&format!("{} {}\n", u.item, u.delta));
    }
    out
}
