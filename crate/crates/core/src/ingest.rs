//! Corpus loading and parsing of raw crash artifacts.
//!
//! Two text formats are understood: GDB-style backtraces (`bt` output, one
//! `#N ...` frame per line) and AddressSanitizer reports. Parsing never
//! fails: backtrace lines that do not match the frame grammar are preserved
//! verbatim as raw frames, and unknown report content is tagged [`SectionKind::Other`].
//! Both parses are lossless — the original bytes can always be reconstructed.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;
use walkdir::WalkDir;

/// One crashing input's raw crash data, as collected from disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrashRecord {
    /// Unique identifier within a corpus (the file stem on disk).
    pub id: String,
    /// Raw debugger backtrace text. Never empty for a loaded record.
    pub trace_text: String,
    /// Raw sanitizer report text, when one was collected.
    pub asan_text: Option<String>,
}

/// A structured backtrace frame parsed from one `#N ...` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackFrame {
    pub index: u64,
    /// Hex instruction address (`0x...`), when the line carried one.
    pub address: Option<String>,
    pub function: String,
    /// Raw argument list text between the outer parentheses; may be empty.
    pub arguments: String,
    /// `at file:line` or `from object` target, when present.
    pub location: Option<String>,
}

/// One frame of a parsed trace: either structured or preserved verbatim.
///
/// Raw frames keep the exact input text (including continuation lines) so
/// the parse stays lossless.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    Parsed {
        frame: StackFrame,
        /// Original line text plus any continuation lines that followed it.
        raw: String,
    },
    Raw(String),
}

impl Frame {
    /// The verbatim input text of this frame.
    pub fn raw_text(&self) -> &str {
        match self {
            Frame::Parsed { raw, .. } => raw,
            Frame::Raw(text) => text,
        }
    }

    pub fn as_parsed(&self) -> Option<&StackFrame> {
        match self {
            Frame::Parsed { frame, .. } => Some(frame),
            Frame::Raw(_) => None,
        }
    }
}

/// An ordered backtrace, topmost (innermost) frame first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StackTrace {
    pub frames: Vec<Frame>,
}

impl StackTrace {
    /// Reconstructs the frame lines of the original input verbatim.
    pub fn verbatim(&self) -> String {
        self.frames
            .iter()
            .map(Frame::raw_text)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Tag of one AddressSanitizer report section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionKind {
    Header,
    ErrorLine,
    TraceBlock,
    MemoryInfo,
    ShadowMap,
    ShadowLegend,
    Other,
}

/// A run of consecutive report lines sharing one tag, stored verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsanSection {
    pub kind: SectionKind,
    /// Raw text including original line terminators.
    pub text: String,
}

/// A sanitizer report split into tagged sections.
///
/// Concatenating all sections in order reproduces the input byte-for-byte.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AsanReport {
    pub sections: Vec<AsanSection>,
}

impl AsanReport {
    /// Reconstructs the original report text exactly.
    pub fn reconstruct(&self) -> String {
        self.sections.iter().map(|s| s.text.as_str()).collect()
    }
}

/// How crash files are arranged on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusLayout {
    /// `<dir>/<id>.trace` required, `<dir>/<id>.asan` optional; ids are file
    /// stems and must be unique across the whole directory tree.
    #[default]
    Flat,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("corpus directory {0} does not exist or is not a directory")]
    MissingDirectory(PathBuf),
    #[error("failed to read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("duplicate crash id {id:?} ({first} and {second})")]
    DuplicateId {
        id: String,
        first: PathBuf,
        second: PathBuf,
    },
}

/// Loads all crash records beneath `dir`, sorted by id.
///
/// Trace files are required, sanitizer reports are optional siblings. Files
/// are decoded as UTF-8 with invalid bytes replaced, never rejected.
pub fn load_corpus(dir: &Path, layout: CorpusLayout) -> Result<Vec<CrashRecord>, IngestError> {
    let CorpusLayout::Flat = layout;
    if !dir.is_dir() {
        return Err(IngestError::MissingDirectory(dir.to_path_buf()));
    }

    let mut traces: BTreeMap<String, PathBuf> = BTreeMap::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| IngestError::Unreadable {
            path: e.path().map(Path::to_path_buf).unwrap_or_default(),
            source: e
                .into_io_error()
                .unwrap_or_else(|| std::io::Error::other("walk error")),
        })?;
        let path = entry.path();
        if !entry.file_type().is_file()
            || path.extension().and_then(|e| e.to_str()) != Some("trace")
        {
            continue;
        }
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        if let Some(first) = traces.get(&id) {
            return Err(IngestError::DuplicateId {
                id,
                first: first.clone(),
                second: path.to_path_buf(),
            });
        }
        traces.insert(id, path.to_path_buf());
    }

    let mut records = Vec::with_capacity(traces.len());
    for (id, trace_path) in traces {
        let trace_text = read_lossy(&trace_path)?;
        let asan_path = trace_path.with_extension("asan");
        let asan_text = if asan_path.is_file() {
            Some(read_lossy(&asan_path)?)
        } else {
            None
        };
        records.push(CrashRecord {
            id,
            trace_text,
            asan_text,
        });
    }
    Ok(records)
}

fn read_lossy(path: &Path) -> Result<String, IngestError> {
    let bytes = std::fs::read(path).map_err(|source| IngestError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Parses a GDB-style backtrace. Never fails: lines outside the frame
/// grammar degrade to raw frames, and continuation lines (not starting with
/// `#`) attach to the frame above them.
pub fn parse_trace(text: &str) -> StackTrace {
    let mut frames: Vec<Frame> = Vec::new();
    for line in text.lines() {
        if let Some(frame) = parse_frame_line(line) {
            frames.push(Frame::Parsed {
                frame,
                raw: line.to_string(),
            });
            continue;
        }
        if line.starts_with('#') || frames.is_empty() {
            // Frame-shaped but unparseable, or nothing to attach to.
            frames.push(Frame::Raw(line.to_string()));
        } else {
            match frames.last_mut().expect("non-empty") {
                Frame::Parsed { raw, .. } => {
                    raw.push('\n');
                    raw.push_str(line);
                }
                Frame::Raw(raw) => {
                    raw.push('\n');
                    raw.push_str(line);
                }
            }
        }
    }
    StackTrace { frames }
}

fn frame_head_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^#(\d+)\s+(?:(0x[0-9a-fA-F]+)\s+in\s+)?(.*)$").expect("frame head regex")
    })
}

fn location_tail_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(.*?)\s+(?:at|from)\s+(\S+)\s*$").expect("location regex"))
}

/// Attempts a full-grammar parse of one frame line:
/// `#<digits>` + optional `0x<hex> in` + function + `(args)` + optional
/// `at file:line` / `from object`. The whole line must be consumed.
fn parse_frame_line(line: &str) -> Option<StackFrame> {
    let caps = frame_head_re().captures(line)?;
    let index: u64 = caps[1].parse().ok()?;
    let address = caps.get(2).map(|m| m.as_str().to_string());
    let mut rest = caps.get(3).map(|m| m.as_str()).unwrap_or("");

    let location = match location_tail_re().captures(rest) {
        Some(loc) => {
            let target = loc[2].to_string();
            rest = loc.get(1).map(|m| m.as_str()).unwrap_or("");
            Some(target)
        }
        None => None,
    };

    // The argument span is the trailing balanced parenthesis group; scanning
    // from the end keeps C++ names like `Foo::operator()` in the function part.
    let rest = rest.trim_end();
    if !rest.ends_with(')') {
        return None;
    }
    let open = balanced_open_index(rest)?;
    let function = rest[..open].trim();
    if function.is_empty() {
        return None;
    }
    let arguments = rest[open + 1..rest.len() - 1].to_string();
    Some(StackFrame {
        index,
        address,
        function: function.to_string(),
        arguments,
        location,
    })
}

/// Index of the '(' matching the final ')' of `s`, or None if unbalanced.
fn balanced_open_index(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (i, c) in s.char_indices().rev() {
        match c {
            ')' => depth += 1,
            '(' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// True when a line's first token is a `#<digits>` frame marker. This is the
/// rule used to detect embedded trace blocks inside sanitizer reports, whose
/// frames (`#0 0x... in f file:c:l`) omit the argument parentheses.
pub(crate) fn is_frame_marker_line(line: &str) -> bool {
    let tok = line.split_whitespace().next().unwrap_or("");
    tok.len() > 1 && tok.starts_with('#') && tok[1..].chars().all(|c| c.is_ascii_digit())
}

const SHADOW_MAP_MARKER: &str = "Shadow bytes around the buggy address";
const SHADOW_LEGEND_MARKER: &str = "Shadow byte legend";

fn is_memory_info_line(line: &str) -> bool {
    line.contains(" is located ")
        || line.contains("allocated by thread")
        || line.contains("freed by thread")
}

/// Splits a sanitizer report into tagged sections. The split is lossless:
/// concatenating the sections reproduces the input exactly.
pub fn parse_asan(text: &str) -> AsanReport {
    #[derive(PartialEq)]
    enum State {
        Scan,
        ShadowMap,
        ShadowLegend { seen_blank: bool },
    }

    let mut state = State::Scan;
    let mut seen_error_line = false;
    let mut sections: Vec<AsanSection> = Vec::new();

    let push = |kind: SectionKind, text: &str, sections: &mut Vec<AsanSection>| {
        // error_line sections stay single-line; everything else coalesces.
        if kind != SectionKind::ErrorLine {
            if let Some(last) = sections.last_mut() {
                if last.kind == kind {
                    last.text.push_str(text);
                    return;
                }
            }
        }
        sections.push(AsanSection {
            kind,
            text: text.to_string(),
        });
    };

    for line in text.split_inclusive('\n') {
        let stripped = line.strip_suffix('\n').unwrap_or(line);
        let stripped = stripped.strip_suffix('\r').unwrap_or(stripped);

        match state {
            State::ShadowMap => {
                if stripped.contains(SHADOW_LEGEND_MARKER) {
                    state = State::ShadowLegend { seen_blank: false };
                    push(SectionKind::ShadowLegend, line, &mut sections);
                } else {
                    push(SectionKind::ShadowMap, line, &mut sections);
                }
                continue;
            }
            State::ShadowLegend { seen_blank } => {
                let blank = stripped.trim().is_empty();
                if seen_blank && !blank {
                    state = State::Scan;
                    // fall through to normal scanning for this line
                } else {
                    if blank {
                        state = State::ShadowLegend { seen_blank: true };
                    }
                    push(SectionKind::ShadowLegend, line, &mut sections);
                    continue;
                }
            }
            State::Scan => {}
        }

        if stripped.contains(SHADOW_MAP_MARKER) {
            state = State::ShadowMap;
            push(SectionKind::ShadowMap, line, &mut sections);
        } else if stripped.contains(SHADOW_LEGEND_MARKER) {
            state = State::ShadowLegend { seen_blank: false };
            push(SectionKind::ShadowLegend, line, &mut sections);
        } else if !seen_error_line
            && (stripped.contains("ERROR: AddressSanitizer")
                || stripped.contains("SUMMARY: AddressSanitizer"))
        {
            seen_error_line = true;
            push(SectionKind::ErrorLine, line, &mut sections);
        } else if is_frame_marker_line(stripped) {
            push(SectionKind::TraceBlock, line, &mut sections);
        } else if is_memory_info_line(stripped) {
            push(SectionKind::MemoryInfo, line, &mut sections);
        } else if !seen_error_line {
            push(SectionKind::Header, line, &mut sections);
        } else {
            push(SectionKind::Other, line, &mut sections);
        }
    }

    AsanReport { sections }
}

impl fmt::Display for SectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SectionKind::Header => "header",
            SectionKind::ErrorLine => "error_line",
            SectionKind::TraceBlock => "trace_block",
            SectionKind::MemoryInfo => "memory_info",
            SectionKind::ShadowMap => "shadow_map",
            SectionKind::ShadowLegend => "shadow_legend",
            SectionKind::Other => "other",
        };
        f.write_str(name)
    }
}
