//! Synthetic crash corpus generator for testing and benchmarking.
//!
//! Produces GDB-style backtraces and AddressSanitizer reports from a small
//! set of templated bug families: each family has a distinct crash function,
//! call stack, and sanitizer error kind, while addresses, argument values,
//! buffer sizes, inserted junk frames, and recursion depth vary per crash.
//! A configurable number of records are exact byte-for-byte duplicates.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::ingest::CrashRecord;

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    /// Total records, exact duplicates included.
    pub crashes: usize,
    /// How many of `crashes` are byte-exact copies of earlier records.
    pub duplicates: usize,
    /// Number of distinct bug families (at most [`FAMILY_COUNT`]).
    pub families: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            crashes: 300,
            duplicates: 20,
            families: 3,
            seed: 0xc0ffee,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub records: Vec<CrashRecord>,
    /// Ground-truth family label per crash id.
    pub labels: BTreeMap<String, String>,
    /// Bug type (CWE-style name) per family label.
    pub bug_types: BTreeMap<String, String>,
}

struct FrameTemplate {
    function: &'static str,
    location: &'static str,
    /// Argument template; `@p` becomes a random pointer, `@i` a random int.
    args: &'static str,
}

struct Family {
    label: &'static str,
    bug_type: &'static str,
    asan_kind: &'static str,
    access: &'static str,
    frames: &'static [FrameTemplate],
    /// Function allocated the buggy region (memory-info trace).
    alloc_fn: &'static str,
    /// Whether the top frame may repeat (runaway recursion).
    recursive: bool,
}

pub const FAMILY_COUNT: usize = 4;

const FAMILIES: [Family; FAMILY_COUNT] = [
    Family {
        label: "png-chunk-overflow",
        bug_type: "Out-of-bounds Read",
        asan_kind: "heap-buffer-overflow",
        access: "READ",
        frames: &[
            FrameTemplate {
                function: "png_read_chunk",
                location: "pngread.c:412",
                args: "buf=@p, len=@i",
            },
            FrameTemplate {
                function: "png_process_data",
                location: "pngread.c:1087",
                args: "ctx=@p",
            },
            FrameTemplate {
                function: "image_decode",
                location: "decode.c:233",
                args: "path=@p",
            },
            FrameTemplate {
                function: "run_one_file",
                location: "harness.c:77",
                args: "idx=@i",
            },
            FrameTemplate {
                function: "main",
                location: "main.c:51",
                args: "argc=2, argv=@p",
            },
        ],
        alloc_fn: "png_alloc_buffer",
        recursive: false,
    },
    Family {
        label: "xml-node-uaf",
        bug_type: "Use After Free",
        asan_kind: "heap-use-after-free",
        access: "WRITE",
        frames: &[
            FrameTemplate {
                function: "xml_node_free",
                location: "tree.c:88",
                args: "node=@p",
            },
            FrameTemplate {
                function: "xml_dict_reset",
                location: "dict.c:301",
                args: "dict=@p, keep=@i",
            },
            FrameTemplate {
                function: "parse_document",
                location: "parser.c:990",
                args: "doc=@p",
            },
            FrameTemplate {
                function: "main",
                location: "main.c:51",
                args: "argc=2, argv=@p",
            },
        ],
        alloc_fn: "xml_node_new",
        recursive: true,
    },
    Family {
        label: "wav-rate-fpe",
        bug_type: "Divide By Zero",
        asan_kind: "FPE",
        access: "READ",
        frames: &[
            FrameTemplate {
                function: "rate_convert",
                location: "sample.c:159",
                args: "num=@i, den=0",
            },
            FrameTemplate {
                function: "wav_read_header",
                location: "wav.c:642",
                args: "hdr=@p, strict=@i",
            },
            FrameTemplate {
                function: "sound_open",
                location: "sound.c:310",
                args: "path=@p",
            },
            FrameTemplate {
                function: "main",
                location: "main.c:51",
                args: "argc=2, argv=@p",
            },
        ],
        alloc_fn: "wav_alloc_header",
        recursive: false,
    },
    Family {
        label: "tiff-strip-oob-write",
        bug_type: "Out-of-bounds Write",
        asan_kind: "stack-buffer-overflow",
        access: "WRITE",
        frames: &[
            FrameTemplate {
                function: "tiff_write_strip",
                location: "tif_write.c:521",
                args: "strip=@i, data=@p, cc=@i",
            },
            FrameTemplate {
                function: "tiff_flush_data",
                location: "tif_flush.c:104",
                args: "tif=@p",
            },
            FrameTemplate {
                function: "copy_image",
                location: "tiffcp.c:812",
                args: "in=@p, out=@p",
            },
            FrameTemplate {
                function: "main",
                location: "main.c:51",
                args: "argc=3, argv=@p",
            },
        ],
        alloc_fn: "tiff_setup_strips",
        recursive: false,
    },
];

const JUNK_FRAMES: [&str; 3] = [
    "__libc_start_call_main (main=@p, argc=2) at libc_start_call_main.h:58",
    "__interceptor_memcpy (dst=@p, src=@p, size=@i) from /usr/lib/libasan.so.8",
    "raw:Backtrace stopped: previous frame identical to this frame (corrupt stack?)",
];

fn pointer(rng: &mut ChaCha8Rng) -> String {
    format!(
        "0x{:012x}",
        rng.gen_range(0x5555_5555_0000u64..0x7fff_ffff_0000u64)
    )
}

fn fill_args(template: &str, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    let mut rest = template;
    while let Some(pos) = rest.find('@') {
        out.push_str(&rest[..pos]);
        match rest.as_bytes().get(pos + 1) {
            Some(b'p') => out.push_str(&pointer(rng)),
            Some(b'i') => out.push_str(&rng.gen_range(0..4096).to_string()),
            _ => out.push('@'),
        }
        rest = &rest[(pos + 2).min(rest.len())..];
    }
    out.push_str(rest);
    out
}

fn generate_trace(family: &Family, rng: &mut ChaCha8Rng) -> String {
    let mut lines: Vec<String> = Vec::new();

    // Runaway recursion: the same frame rendered many times. Fixed argument
    // text so the copies are exact and frame dedupe has work to do.
    if family.recursive && rng.gen_bool(0.3) {
        let depth = rng.gen_range(3..40);
        let top = &family.frames[0];
        for _ in 0..depth {
            lines.push(format!(
                "in {} (node=0x0) at {}",
                top.function, top.location
            ));
        }
    }

    for frame in family.frames {
        lines.push(format!(
            "in {} ({}) at {}",
            frame.function,
            fill_args(frame.args, rng),
            frame.location
        ));
    }

    // Frame noise: up to two junk frames spliced in below the crash frame.
    for junk in JUNK_FRAMES {
        if rng.gen_bool(0.15) {
            let line = match junk.strip_prefix("raw:") {
                Some(raw) => raw.to_string(),
                None => format!("in {}", fill_args(junk, rng)),
            };
            let slot = rng.gen_range(1..=lines.len());
            lines.insert(slot, line);
        }
    }

    lines
        .iter()
        .enumerate()
        .map(|(i, body)| {
            if body.starts_with("in ") {
                format!("#{i}  {} {}", pointer(rng), body)
            } else {
                // Raw diagnostic line, kept verbatim by the parser.
                body.clone()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn generate_asan(family: &Family, rng: &mut ChaCha8Rng) -> String {
    let pid = rng.gen_range(1000..99999);
    let addr = pointer(rng);
    let size = *[1usize, 2, 4, 8].choose(rng).expect("sizes");
    let region = rng.gen_range(1..64) * 8;
    let mut out = String::new();
    out.push_str("=================================================================\n");
    out.push_str(&format!(
        "=={pid}==ERROR: AddressSanitizer: {} on address {addr} at pc {} bp {} sp {}\n",
        family.asan_kind,
        pointer(rng),
        pointer(rng),
        pointer(rng)
    ));
    out.push_str(&format!(
        "{} of size {size} at {addr} thread T0\n",
        family.access
    ));
    for (i, frame) in family.frames.iter().enumerate() {
        out.push_str(&format!(
            "    #{i} {} in {} /src/{}\n",
            pointer(rng),
            frame.function,
            frame.location
        ));
    }
    out.push_str(&format!(
        "{addr} is located {} bytes to the right of {region}-byte region\n",
        rng.gen_range(0..2)
    ));
    out.push_str("allocated by thread T0 here:\n");
    out.push_str(&format!(
        "    #0 {} in malloc /asan/asan_malloc.cpp:145\n",
        pointer(rng)
    ));
    out.push_str(&format!(
        "    #1 {} in {} /src/alloc.c:71\n",
        pointer(rng),
        family.alloc_fn
    ));
    out.push_str("Shadow bytes around the buggy address:\n");
    for row in 0..3 {
        let bytes: Vec<String> = (0..8)
            .map(|_| format!("{:02x}", *[0x00u8, 0xfa, 0xfd, 0x01].choose(rng).unwrap()))
            .collect();
        out.push_str(&format!(
            "  0x0c04{:04x}: {}\n",
            0x7fff + row * 0x10,
            bytes.join(" ")
        ));
    }
    out.push_str("Shadow byte legend (one shadow byte represents 8 application bytes):\n");
    out.push_str("  Addressable:           00\n");
    out.push_str("  Heap left redzone:     fa\n");
    out.push_str("  Freed heap region:     fd\n");
    out.push_str(&format!("=={pid}==ABORTING\n"));
    out
}

/// Generates a deterministic corpus for the given seed.
pub fn generate(config: &SyntheticConfig) -> SyntheticCorpus {
    assert!(config.families >= 1 && config.families <= FAMILY_COUNT);
    assert!(config.duplicates < config.crashes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let originals = config.crashes - config.duplicates;
    let mut records = Vec::with_capacity(config.crashes);
    let mut labels = BTreeMap::new();
    for i in 0..originals {
        let family = &FAMILIES[i % config.families];
        let id = format!("crash-{i:05}");
        records.push(CrashRecord {
            id: id.clone(),
            trace_text: generate_trace(family, &mut rng),
            asan_text: Some(generate_asan(family, &mut rng)),
        });
        labels.insert(id, family.label.to_string());
    }

    // Exact duplicates of randomly chosen originals, under fresh ids.
    for d in 0..config.duplicates {
        let source = rng.gen_range(0..originals);
        let id = format!("crash-dup-{d:03}");
        let original = &records[source];
        labels.insert(id.clone(), labels[&original.id].clone());
        records.push(CrashRecord {
            id,
            trace_text: original.trace_text.clone(),
            asan_text: original.asan_text.clone(),
        });
    }

    let bug_types = FAMILIES[..config.families]
        .iter()
        .map(|f| (f.label.to_string(), f.bug_type.to_string()))
        .collect();

    SyntheticCorpus {
        records,
        labels,
        bug_types,
    }
}

impl SyntheticCorpus {
    /// Writes `<id>.trace` / `<id>.asan` files in the flat corpus layout.
    pub fn write_to_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for record in &self.records {
            std::fs::write(dir.join(format!("{}.trace", record.id)), &record.trace_text)?;
            if let Some(asan) = &record.asan_text {
                std::fs::write(dir.join(format!("{}.asan", record.id)), asan)?;
            }
        }
        Ok(())
    }

    /// Writes the ground-truth CSV (`id,label,bug_type`).
    pub fn write_truth_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "id,label,bug_type")?;
        for (id, label) in &self.labels {
            let bug_type = self.bug_types.get(label).cloned().unwrap_or_default();
            writeln!(file, "{id},{label},{bug_type}")?;
        }
        Ok(())
    }

    /// Ids of the duplicate records and the id of the record they copy.
    pub fn duplicate_pairs(&self) -> Vec<(String, String)> {
        let mut pairs = Vec::new();
        for record in &self.records {
            if !record.id.starts_with("crash-dup-") {
                continue;
            }
            let source = self
                .records
                .iter()
                .find(|r| {
                    r.id != record.id
                        && r.trace_text == record.trace_text
                        && r.asan_text == record.asan_text
                })
                .expect("duplicate has a source");
            pairs.push((record.id.clone(), source.id.clone()));
        }
        pairs
    }
}
