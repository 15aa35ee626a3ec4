//! Point cloud readers and writers, and summary graph export.
//!
//! Binary point files are `SVPC`, a little-endian `u32` version (1), `u64` N,
//! `u32` d, then N*d `f32` row-major, then a `u8` label marker (1 when N
//! `i32` labels follow, 0 otherwise).

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::summary::SummaryGraph;

pub const BINARY_MAGIC: &[u8; 4] = b"SVPC";
pub const BINARY_VERSION: u32 = 1;
const HEADER_LEN: u64 = 4 + 4 + 8 + 4;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn parse_label(cell: &str) -> Option<i32> {
    let cell = cell.trim();
    cell.parse::<i32>().ok().or_else(|| {
        let v = cell.parse::<f64>().ok()?;
        (v.fract() == 0.0 && v >= i32::MIN as f64 && v <= i32::MAX as f64).then_some(v as i32)
    })
}

/// Reads a numeric CSV. `label_column` selects a column of integer labels;
/// every other column is a coordinate.
pub fn read_csv(path: impl AsRef<Path>, has_header: bool, label_column: Option<usize>) -> Result<PointCloud> {
    let path = path.as_ref();
    read_csv_from(open(path)?, has_header, label_column)
}

pub fn read_csv_from<R: Read>(input: R, has_header: bool, label_column: Option<usize>) -> Result<PointCloud> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut n = 0;
    let mut record = csv::StringRecord::new();
    loop {
        let more = reader.read_record(&mut record).map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => {
                if let Some(c) = label_column {
                    if c >= record.len() {
                        return Err(Error::Parse {
                            line,
                            message: format!("label column {c} missing from a row of {} field(s)", record.len()),
                        });
                    }
                }
                width = Some(record.len());
            }
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {w} field(s), found {}", record.len()),
                });
            }
            _ => {}
        }
        for (col, cell) in record.iter().enumerate() {
            if Some(col) == label_column {
                labels.push(parse_label(cell).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("label `{cell}` is not an integer"),
                })?);
            } else {
                data.push(cell.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{cell}` is not a number (column {col})"),
                })?);
            }
        }
        n += 1;
    }
    let width = width.ok_or_else(|| Error::Format("no data rows".into()))?;
    let d = width - usize::from(label_column.is_some());
    if d == 0 {
        return Err(Error::Format("no coordinate columns".into()));
    }
    PointCloud::new(n, d, data, label_column.map(|_| labels))
}

/// Coordinates, then the label (if any) as the last column. No header.
pub fn write_csv(pc: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let mut line = String::new();
    for (i, row) in pc.rows().enumerate() {
        line.clear();
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            write!(line, "{x}").unwrap();
        }
        if let Some(l) = pc.label(i) {
            write!(line, ",{l}").unwrap();
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_binary(pc: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    write_binary_to(pc, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_binary_to<W: Write>(pc: &PointCloud, out: &mut W) -> std::io::Result<()> {
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&BINARY_VERSION.to_le_bytes())?;
    out.write_all(&(pc.len() as u64).to_le_bytes())?;
    out.write_all(&(pc.dim() as u32).to_le_bytes())?;
    for &x in pc.data() {
        out.write_all(&(x as f32).to_le_bytes())?;
    }
    match pc.labels() {
        Some(labels) => {
            out.write_all(&[1])?;
            for &l in labels {
                out.write_all(&l.to_le_bytes())?;
            }
        }
        None => out.write_all(&[0])?,
    }
    Ok(())
}

pub fn read_binary(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    BufReader::new(open(path)?)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    decode_binary(&bytes)
}

pub fn decode_binary(bytes: &[u8]) -> Result<PointCloud> {
    let actual = bytes.len() as u64;
    if actual < HEADER_LEN {
        if actual >= 4 && &bytes[..4] != BINARY_MAGIC {
            return Err(Error::Format("bad magic; not a point file".into()));
        }
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            actual,
        });
    }
    if &bytes[..4] != BINARY_MAGIC {
        return Err(Error::Format("bad magic; not a point file".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != BINARY_VERSION {
        return Err(Error::Version {
            expected: BINARY_VERSION,
            found: version,
        });
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let d = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as u64;
    let payload = n
        .checked_mul(d)
        .and_then(|x| x.checked_mul(4))
        .ok_or_else(|| Error::Format(format!("declared shape {n} x {d} overflows")))?;
    let floats_end = HEADER_LEN + payload;
    if actual < floats_end + 1 {
        return Err(Error::Truncated {
            expected: floats_end + 1,
            actual,
        });
    }
    let body = &bytes[HEADER_LEN as usize..floats_end as usize];
    let data: Vec<f64> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let marker = bytes[floats_end as usize];
    let rest = &bytes[floats_end as usize + 1..];
    let labels = match marker {
        0 => {
            if !rest.is_empty() {
                return Err(Error::Format(format!("{} trailing byte(s)", rest.len())));
            }
            None
        }
        1 => {
            let expected = floats_end + 1 + 4 * n;
            if actual != expected {
                if actual < expected {
                    return Err(Error::Truncated { expected, actual });
                }
                return Err(Error::Format(format!("{} trailing byte(s)", actual - expected)));
            }
            Some(rest.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect())
        }
        other => return Err(Error::Format(format!("bad label marker {other}"))),
    };
    PointCloud::new(n as usize, d as usize, data, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryFormat {
    Json,
    Graphml,
    Dot,
}

impl FromStr for SummaryFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(SummaryFormat::Json),
            "graphml" => Ok(SummaryFormat::Graphml),
            "dot" | "gv" => Ok(SummaryFormat::Dot),
            _ => Err(Error::Config(format!("unknown summary format `{s}`"))),
        }
    }
}

impl SummaryFormat {
    /// Guesses from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension()?.to_str()?.parse().ok()
    }
}

fn histogram_text(hist: &[(i32, u64)]) -> String {
    hist.iter().map(|(l, c)| format!("{l}:{c}")).collect::<Vec<_>>().join(";")
}

pub fn summary_to_json(g: &SummaryGraph) -> Result<String> {
    serde_json::to_string_pretty(g).map_err(|e| Error::Format(e.to_string()))
}

pub fn summary_to_graphml(g: &SummaryGraph) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    for (id, target, ty) in [
        ("point_count", "node", "long"),
        ("dominant_label", "node", "int"),
        ("label_histogram", "node", "string"),
        ("self_weight", "node", "double"),
        ("weight", "edge", "double"),
        ("modularity", "edge", "double"),
        ("phase", "edge", "string"),
    ] {
        writeln!(s, "  <key id=\"{id}\" for=\"{target}\" attr.name=\"{id}\" attr.type=\"{ty}\"/>").unwrap();
    }
    s.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
    for v in &g.nodes {
        writeln!(s, "    <node id=\"n{}\">", v.id).unwrap();
        writeln!(s, "      <data key=\"point_count\">{}</data>", v.point_count).unwrap();
        if let Some(l) = v.dominant_label {
            writeln!(s, "      <data key=\"dominant_label\">{l}</data>").unwrap();
        }
        writeln!(s, "      <data key=\"label_histogram\">{}</data>", histogram_text(&v.label_histogram)).unwrap();
        writeln!(s, "      <data key=\"self_weight\">{}</data>", v.self_weight).unwrap();
        s.push_str("    </node>\n");
    }
    for (i, e) in g.edges.iter().enumerate() {
        writeln!(s, "    <edge id=\"e{i}\" source=\"n{}\" target=\"n{}\">", e.source, e.target).unwrap();
        writeln!(s, "      <data key=\"weight\">{}</data>", e.weight).unwrap();
        writeln!(s, "      <data key=\"modularity\">{}</data>", e.modularity).unwrap();
        writeln!(s, "      <data key=\"phase\">{}</data>", e.phase.as_str()).unwrap();
        s.push_str("    </edge>\n");
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}

pub fn summary_to_dot(g: &SummaryGraph) -> String {
    let mut s = String::from("graph summary {\n");
    for v in &g.nodes {
        write!(s, "  {} [point_count={}", v.id, v.point_count).unwrap();
        if let Some(l) = v.dominant_label {
            write!(s, ", dominant_label={l}").unwrap();
        }
        writeln!(s, ", label_histogram=\"{}\"];", histogram_text(&v.label_histogram)).unwrap();
    }
    for e in &g.edges {
        writeln!(
            s,
            "  {} -- {} [weight={}, modularity={}, phase={}];",
            e.source,
            e.target,
            e.weight,
            e.modularity,
            e.phase.as_str()
        )
        .unwrap();
    }
    s.push_str("}\n");
    s
}

pub fn write_summary(g: &SummaryGraph, format: SummaryFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        SummaryFormat::Json => summary_to_json(g)?,
        SummaryFormat::Graphml => summary_to_graphml(g),
        SummaryFormat::Dot => summary_to_dot(g),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_summary_json(path: impl AsRef<Path>) -> Result<SummaryGraph> {
    let path = path.as_ref();
    let reader = BufReader::new(open(path)?);
    serde_json::from_reader(reader).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// `i,j,w` for every edge of `g` with `i < j`.
pub fn write_weight_triplets(g: &WeightedGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    for (i, j, w) in g.edges() {
        writeln!(out, "{i},{j},{w}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
