//! Cleaning of raw crash data into the three embedded text renditions.
//!
//! Per crash this produces a full trace (repeated frames collapsed), a
//! coarse trace (arguments removed as well), and a cleaned sanitizer report
//! (shadow map, legend, and optionally embedded traces removed), then
//! collapses records whose cleaned texts are bytewise identical.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::{
    parse_asan, parse_trace, AsanReport, CrashRecord, Frame, SectionKind, StackTrace,
};

/// One of the cleaned text renditions derived from a crash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SourceKind {
    #[serde(rename = "full_trace")]
    FullTrace,
    #[serde(rename = "coarse_trace")]
    CoarseTrace,
    #[serde(rename = "asan")]
    AsanReport,
}

impl SourceKind {
    pub const ALL: [SourceKind; 3] = [
        SourceKind::FullTrace,
        SourceKind::CoarseTrace,
        SourceKind::AsanReport,
    ];

    /// Short name used on the command line (`full`, `coarse`, `asan`).
    pub fn short_name(&self) -> &'static str {
        match self {
            SourceKind::FullTrace => "full",
            SourceKind::CoarseTrace => "coarse",
            SourceKind::AsanReport => "asan",
        }
    }

    pub fn from_short_name(name: &str) -> Option<SourceKind> {
        match name {
            "full" => Some(SourceKind::FullTrace),
            "coarse" => Some(SourceKind::CoarseTrace),
            "asan" => Some(SourceKind::AsanReport),
            _ => None,
        }
    }
}

/// Which renditions to produce, and whether cleaned reports keep their
/// embedded stack traces (the reports-only ablation does).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub enabled: Vec<SourceKind>,
    pub asan_keep_traces: bool,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            enabled: SourceKind::ALL.to_vec(),
            asan_keep_traces: false,
        }
    }
}

impl SourceConfig {
    pub fn is_enabled(&self, kind: SourceKind) -> bool {
        self.enabled.contains(&kind)
    }
}

/// The cleaned texts of one crash plus their content hashes (SHA-256 hex).
///
/// A text is present iff its hash is present; at least one source is always
/// present for a successfully prepared record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreparedRecord {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full_trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coarse_trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asan: Option<String>,
    pub hashes: BTreeMap<SourceKind, String>,
}

impl PreparedRecord {
    pub fn text(&self, kind: SourceKind) -> Option<&str> {
        match kind {
            SourceKind::FullTrace => self.full_trace.as_deref(),
            SourceKind::CoarseTrace => self.coarse_trace.as_deref(),
            SourceKind::AsanReport => self.asan.as_deref(),
        }
    }

    pub fn hash(&self, kind: SourceKind) -> Option<&str> {
        self.hashes.get(&kind).map(String::as_str)
    }

    /// Present sources in canonical order.
    pub fn present(&self) -> impl Iterator<Item = SourceKind> + '_ {
        SourceKind::ALL
            .into_iter()
            .filter(|k| self.text(*k).is_some())
    }
}

#[derive(Debug, Error)]
pub enum PrepareError {
    /// The configuration enables no source this record can provide.
    #[error("record {id} yields no enabled data source")]
    Unpreparable { id: String },
}

/// SHA-256 of a cleaned text, lowercase hex.
pub fn content_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        write!(out, "{byte:02x}").expect("hex write");
    }
    out
}

/// Identity key under which repeated frames are considered copies: rendered
/// content excluding frame index and address. Indices always differ between
/// copies and addresses differ under ASLR.
fn frame_identity(frame: &Frame) -> (Option<&str>, &str, Option<&str>, Option<&str>) {
    match frame {
        Frame::Parsed { frame, .. } => (
            Some(frame.function.as_str()),
            frame.arguments.as_str(),
            frame.location.as_deref(),
            None,
        ),
        Frame::Raw(text) => (None, "", None, Some(text.as_str())),
    }
}

/// Keeps only the topmost copy of each repeated frame. Survivor order is
/// preserved and frame indices are not renumbered.
pub fn dedupe_frames(trace: &StackTrace) -> StackTrace {
    let mut seen: Vec<&Frame> = Vec::new();
    let mut frames = Vec::new();
    for frame in &trace.frames {
        if seen
            .iter()
            .any(|kept| frame_identity(kept) == frame_identity(frame))
        {
            continue;
        }
        seen.push(frame);
        frames.push(frame.clone());
    }
    StackTrace { frames }
}

/// Empties every frame's argument list. Raw frames have their outermost
/// balanced parenthesis span after the leading token emptied to `()` when
/// one exists; otherwise they are left unchanged.
pub fn strip_arguments(trace: &StackTrace) -> StackTrace {
    let frames = trace
        .frames
        .iter()
        .map(|frame| match frame {
            Frame::Parsed { frame, raw } => {
                let mut stripped = frame.clone();
                stripped.arguments = String::new();
                Frame::Parsed {
                    frame: stripped,
                    raw: raw.clone(),
                }
            }
            Frame::Raw(text) => Frame::Raw(strip_raw_arguments(text)),
        })
        .collect();
    StackTrace { frames }
}

fn strip_raw_arguments(text: &str) -> String {
    let Some(open) = text.find('(') else {
        return text.to_string();
    };
    if text[..open].trim().is_empty() {
        // No function token before the span.
        return text.to_string();
    }
    let mut depth = 0usize;
    for (i, c) in text[open..].char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    let close = open + i;
                    return format!("{}(){}", &text[..open], &text[close + 1..]);
                }
            }
            _ => {}
        }
    }
    // Unbalanced span; leave untouched.
    text.to_string()
}

/// Canonical rendering: one line per frame,
/// `#<index> <function> (<arguments>) at <location>` with absent parts
/// omitted and addresses dropped. Raw frames are rendered verbatim.
pub fn render_trace(trace: &StackTrace) -> String {
    let mut lines = Vec::with_capacity(trace.frames.len());
    for frame in &trace.frames {
        match frame {
            Frame::Parsed { frame, .. } => {
                let mut line = format!("#{} {} ({})", frame.index, frame.function, frame.arguments);
                if let Some(location) = &frame.location {
                    line.push_str(" at ");
                    line.push_str(location);
                }
                lines.push(line);
            }
            Frame::Raw(text) => lines.push(text.clone()),
        }
    }
    lines.join("\n")
}

/// Concatenates all report sections except the shadow byte map and legend,
/// and except embedded trace blocks unless `keep_traces` is set.
pub fn clean_asan(report: &AsanReport, keep_traces: bool) -> String {
    report
        .sections
        .iter()
        .filter(|section| match section.kind {
            SectionKind::ShadowMap | SectionKind::ShadowLegend => false,
            SectionKind::TraceBlock => keep_traces,
            _ => true,
        })
        .map(|section| section.text.as_str())
        .collect()
}

/// Produces the enabled cleaned renditions of one crash record.
///
/// Frame dedupe happens once, before coarsening, so both trace versions keep
/// the same frame sequence. Coarse traces are not re-deduplicated even when
/// argument removal creates new identical frames.
pub fn prepare(
    record: &CrashRecord,
    config: &SourceConfig,
) -> Result<PreparedRecord, PrepareError> {
    let mut prepared = PreparedRecord {
        id: record.id.clone(),
        full_trace: None,
        coarse_trace: None,
        asan: None,
        hashes: BTreeMap::new(),
    };

    let wants_trace =
        config.is_enabled(SourceKind::FullTrace) || config.is_enabled(SourceKind::CoarseTrace);
    if wants_trace {
        let deduped = dedupe_frames(&parse_trace(&record.trace_text));
        if config.is_enabled(SourceKind::FullTrace) {
            let text = render_trace(&deduped);
            prepared
                .hashes
                .insert(SourceKind::FullTrace, content_hash(&text));
            prepared.full_trace = Some(text);
        }
        if config.is_enabled(SourceKind::CoarseTrace) {
            let text = render_trace(&strip_arguments(&deduped));
            prepared
                .hashes
                .insert(SourceKind::CoarseTrace, content_hash(&text));
            prepared.coarse_trace = Some(text);
        }
    }

    if config.is_enabled(SourceKind::AsanReport) {
        if let Some(asan_text) = &record.asan_text {
            let text = clean_asan(&parse_asan(asan_text), config.asan_keep_traces);
            prepared
                .hashes
                .insert(SourceKind::AsanReport, content_hash(&text));
            prepared.asan = Some(text);
        }
    }

    if prepared.hashes.is_empty() {
        return Err(PrepareError::Unpreparable {
            id: record.id.clone(),
        });
    }
    Ok(prepared)
}

/// Collapses records whose hash mappings are identical over all enabled
/// kinds (same present/absent pattern and same digests).
///
/// Returns one representative per equivalence class (lowest id) and the
/// id -> representative-id assignment covering every input record.
pub fn collapse_duplicates(
    records: &[PreparedRecord],
) -> (Vec<PreparedRecord>, BTreeMap<String, String>) {
    let mut classes: BTreeMap<Vec<(SourceKind, String)>, Vec<&PreparedRecord>> = BTreeMap::new();
    for record in records {
        let key: Vec<(SourceKind, String)> =
            record.hashes.iter().map(|(k, v)| (*k, v.clone())).collect();
        classes.entry(key).or_default().push(record);
    }

    let mut representatives = Vec::with_capacity(classes.len());
    let mut assignment = BTreeMap::new();
    for members in classes.values_mut() {
        members.sort_by(|a, b| a.id.cmp(&b.id));
        let rep = members[0];
        for member in members.iter() {
            assignment.insert(member.id.clone(), rep.id.clone());
        }
        representatives.push(rep.clone());
    }
    representatives.sort_by(|a, b| a.id.cmp(&b.id));
    (representatives, assignment)
}
