//! File formats: SNAP-style edge lists, CSV edge lists, coordinate-list
//! sparse slices, embedding CSV with a JSON sidecar, and flat key-value
//! configuration files.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigen::CsrMatrix;
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::graphgen::LatentSample;
use crate::spectral::{Embedding, EmbeddingKind};

// ---------------------------------------------------------------- edge lists

/// Writes `# key: value` header lines, a `# nodes: n` line, then one
/// `i<TAB>j` line per undirected edge (`i <= j`).
pub fn write_edge_list<W: Write>(g: &SparseGraph, header: &[(&str, String)], out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    for (k, v) in header {
        writeln!(w, "# {k}: {v}")?;
    }
    writeln!(w, "# nodes: {}", g.n())?;
    writeln!(w, "# edges: {}", g.edge_count())?;
    for (i, j) in g.edges() {
        writeln!(w, "{i}\t{j}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_edge_list_file(g: &SparseGraph, header: &[(&str, String)], path: &Path) -> Result<()> {
    write_edge_list(g, header, File::create(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeFormat {
    /// Whitespace-separated pairs with `#` comments.
    SnapTsv,
    /// Comma-separated, optional header row, first two columns used.
    Csv,
}

impl FromStr for EdgeFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "snap" | "snap_tsv" | "tsv" | "txt" => Ok(Self::SnapTsv),
            "csv" => Ok(Self::Csv),
            _ => Err(Error::InvalidParameter(format!("unknown edge-list format {s:?}"))),
        }
    }
}

/// A loaded edge list.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub graph: SparseGraph,
    /// Original id of each node (`node_ids[i]` is the file id of node `i`).
    pub node_ids: Vec<u64>,
    /// Edge lines repeating an already-seen undirected pair.
    pub duplicate_edges: usize,
    /// Self-loop lines dropped.
    pub self_loops_dropped: usize,
    /// Header entries `# key: value` found in the file.
    pub header: BTreeMap<String, String>,
}

/// Reads an edge list. Ids are kept as-is when a `# nodes: n` header is
/// present and every id is below `n`; otherwise distinct ids are
/// compacted to `0..k` in increasing order.
pub fn read_edge_list<R: Read>(input: R, format: EdgeFormat) -> Result<Ingested> {
    let reader = BufReader::new(input);
    let mut header = BTreeMap::new();
    let mut raw: Vec<(u64, u64)> = Vec::new();
    match format {
        EdgeFormat::SnapTsv => {
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                let lineno = idx + 1;
                let t = line.trim();
                if t.is_empty() {
                    continue;
                }
                if let Some(c) = t.strip_prefix('#') {
                    if let Some((k, v)) = c.split_once(':') {
                        header.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
                    }
                    continue;
                }
                let mut it = t.split_whitespace();
                let a = parse_id(it.next(), lineno)?;
                let b = parse_id(it.next(), lineno)?;
                raw.push((a, b));
            }
        }
        EdgeFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .comment(Some(b'#'))
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(reader);
            for (idx, rec) in rdr.records().enumerate() {
                let rec = rec.map_err(|e| Error::Parse {
                    line: e.position().map(|p| p.line() as usize).unwrap_or(idx + 1),
                    message: e.to_string(),
                })?;
                let lineno = rec.position().map(|p| p.line() as usize).unwrap_or(idx + 1);
                if rec.iter().all(|f| f.is_empty()) {
                    continue;
                }
                if idx == 0 && rec.get(0).is_some_and(|f| f.parse::<u64>().is_err()) {
                    continue;
                }
                let a = parse_id(rec.get(0), lineno)?;
                let b = parse_id(rec.get(1), lineno)?;
                raw.push((a, b));
            }
        }
    }
    let declared: Option<usize> = header.get("nodes").and_then(|v| v.split_whitespace().next()?.parse().ok());
    if raw.is_empty() && declared.unwrap_or(0) == 0 {
        return Err(Error::Empty("edge list contains no edges".into()));
    }
    let identity = declared.filter(|&n| raw.iter().all(|&(a, b)| (a as usize) < n && (b as usize) < n));
    let (n, node_ids, index): (usize, Vec<u64>, Box<dyn Fn(u64) -> usize>) = match identity {
        Some(n) => (n, (0..n as u64).collect(), Box::new(|v| v as usize)),
        None => {
            let mut ids: Vec<u64> = raw.iter().flat_map(|&(a, b)| [a, b]).collect();
            ids.sort_unstable();
            ids.dedup();
            let map: HashMap<u64, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            (ids.len(), ids, Box::new(move |v| map[&v]))
        }
    };
    let mut edges = Vec::with_capacity(raw.len());
    let mut self_loops_dropped = 0;
    for &(a, b) in &raw {
        if a == b {
            self_loops_dropped += 1;
        } else {
            let (i, j) = (index(a), index(b));
            edges.push((i.min(j), i.max(j)));
        }
    }
    let lines = edges.len();
    let mut unique = edges.clone();
    unique.sort_unstable();
    unique.dedup();
    let graph = SparseGraph::from_edges(n, &unique, false)?;
    Ok(Ingested {
        graph,
        node_ids,
        duplicate_edges: lines - unique.len(),
        self_loops_dropped,
        header,
    })
}

fn parse_id(field: Option<&str>, line: usize) -> Result<u64> {
    let f = field.ok_or_else(|| Error::Parse {
        line,
        message: "expected two node ids".into(),
    })?;
    f.parse::<u64>().map_err(|_| Error::Parse {
        line,
        message: format!("invalid node id {f:?}"),
    })
}

pub fn ingest_edge_list(path: &Path, format: EdgeFormat) -> Result<Ingested> {
    read_edge_list(File::open(path)?, format)
}

/// Writes `node,original_id` rows.
pub fn write_node_map<W: Write>(ids: &[u64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "original_id"]).map_err(csv_err)?;
    for (i, id) in ids.iter().enumerate() {
        w.write_record([i.to_string(), id.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Writes latent positions as `node,z1..zd,t` rows, `t` being the
/// intrinsic coordinate.
pub fn write_latents<W: Write>(x: &LatentSample, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut head = vec!["node".to_string()];
    head.extend((1..=x.dim).map(|k| format!("z{k}")));
    head.push("t".into());
    w.write_record(&head).map_err(csv_err)?;
    for i in 0..x.len() {
        let mut rec = vec![i.to_string()];
        rec.extend(x.row(i).iter().map(|v| v.to_string()));
        rec.push(x.intrinsic_coordinate(i).to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- sparse slices

/// Coordinate-list text: `# rows cols nnz` header, optional `# row_map:`
/// line, then `row col` per nonzero (value 1) or `row col value`.
pub fn write_coo<W: Write>(m: &CsrMatrix, row_map: Option<&[usize]>, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "# {} {} {}", crate::eigen::LinearOperator::nrows(m), crate::eigen::LinearOperator::ncols(m), m.nnz())?;
    if let Some(map) = row_map {
        let s: Vec<String> = map.iter().map(|v| v.to_string()).collect();
        writeln!(w, "# row_map: {}", s.join(" "))?;
    }
    for (i, j, v) in m.triplets() {
        if v == 1.0 {
            writeln!(w, "{i} {j}")?;
        } else {
            writeln!(w, "{i} {j} {v}")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the format written by [`write_coo`].
pub fn read_coo<R: Read>(input: R) -> Result<(CsrMatrix, Option<Vec<usize>>)> {
    let mut shape: Option<(usize, usize)> = None;
    let mut row_map = None;
    let mut trip = Vec::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let perr = |m: &str| Error::Parse {
            line: lineno,
            message: m.to_string(),
        };
        if let Some(c) = t.strip_prefix('#') {
            let c = c.trim();
            if let Some(rest) = c.strip_prefix("row_map:") {
                row_map = Some(
                    rest.split_whitespace()
                        .map(|v| v.parse().map_err(|_| perr("bad row map")))
                        .collect::<Result<Vec<usize>>>()?,
                );
            } else if shape.is_none() {
                let nums: Vec<usize> = c.split_whitespace().filter_map(|v| v.parse().ok()).collect();
                if nums.len() >= 2 {
                    shape = Some((nums[0], nums[1]));
                }
            }
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() < 2 {
            return Err(perr("expected `row col [value]`"));
        }
        let i: usize = f[0].parse().map_err(|_| perr("bad row index"))?;
        let j: usize = f[1].parse().map_err(|_| perr("bad column index"))?;
        let v: f64 = match f.get(2) {
            Some(s) => s.parse().map_err(|_| perr("bad value"))?,
            None => 1.0,
        };
        trip.push((i, j, v));
    }
    let (r, c) = shape.ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing `# rows cols nnz` header".into(),
    })?;
    Ok((CsrMatrix::from_triplets(r, c, &trip)?, row_map))
}

// ---------------------------------------------------------------- embeddings

/// Metadata stored next to an embedding CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub kind: EmbeddingKind,
    pub n: usize,
    pub d: usize,
    pub values: Vec<f64>,
    pub signature: Vec<f64>,
    pub seed: Option<u64>,
    pub source_hash: String,
}

/// Sidecar path: `emb.csv` -> `emb.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes `node,x1..xd` rows (node = original id when a node map is
/// present) plus the JSON sidecar.
pub fn write_embedding(emb: &Embedding, csv_path: &Path, seed: Option<u64>) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path).map_err(csv_err)?;
    let mut head = vec!["node".to_string()];
    head.extend((1..=emb.dim()).map(|k| format!("x{k}")));
    w.write_record(&head).map_err(csv_err)?;
    for i in 0..emb.n() {
        let id = emb.node_map.as_ref().map_or(i, |m| m[i]);
        let mut rec = vec![id.to_string()];
        rec.extend(emb.rows.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    let meta = EmbeddingMeta {
        kind: emb.kind,
        n: emb.n(),
        d: emb.dim(),
        values: emb.values.clone(),
        signature: emb.signature.clone(),
        seed,
        source_hash: emb.source_hash.clone(),
    };
    let f = File::create(sidecar_path(csv_path))?;
    serde_json::to_writer_pretty(f, &meta)?;
    Ok(())
}

pub fn read_embedding(csv_path: &Path) -> Result<(Embedding, EmbeddingMeta)> {
    let meta: EmbeddingMeta = serde_json::from_reader(File::open(sidecar_path(csv_path))?)?;
    let mut rdr = csv::Reader::from_path(csv_path).map_err(csv_err)?;
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = idx + 2;
        if rec.len() != meta.d + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", meta.d + 1, rec.len()),
            });
        }
        ids.push(rec[0].parse::<usize>().map_err(|_| Error::Parse {
            line,
            message: "bad node id".into(),
        })?);
        for f in rec.iter().skip(1) {
            data.push(f.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("bad coordinate {f:?}"),
            })?);
        }
    }
    if ids.len() != meta.n {
        return Err(Error::DimensionMismatch(format!("sidecar says {} rows, CSV has {}", meta.n, ids.len())));
    }
    let rows = DMatrix::from_row_slice(meta.n, meta.d, &data);
    let identity = ids.iter().enumerate().all(|(i, &v)| i == v);
    let emb = Embedding {
        rows,
        values: meta.values.clone(),
        kind: meta.kind,
        source_hash: meta.source_hash.clone(),
        signature: meta.signature.clone(),
        node_map: if identity { None } else { Some(ids) },
    };
    Ok((emb, meta))
}

// ---------------------------------------------------------------- config

/// Flat `key = value` configuration; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let t = line.split('#').next().unwrap_or("").trim();
            if t.is_empty() {
                continue;
            }
            let (k, v) = t.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, found {t:?}"),
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "empty key".into(),
                });
            }
            entries.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    /// Parsed value, if the key is present.
    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidParameter(format!("config key {key}: cannot parse {v:?}"))),
        }
    }

    /// Comma-separated list value.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| Error::InvalidParameter(format!("config key {key}: cannot parse {s:?}"))))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// `self` with every entry of `other` overriding.
    pub fn merged(mut self, other: &Config) -> Config {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
        self
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }
}
