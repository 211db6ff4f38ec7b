//! Timestamped edge-list ingestion.
//!
//! Records are `src dst timestamp [weight]`, whitespace separated, one per
//! line. Lines starting with `#` are comments. The canonical writer emits a
//! `# universe=N snapshots=T` header; when the reader sees it together with
//! by-distinct-timestamp partitioning, timestamps are read as snapshot
//! indices so that empty snapshots and trailing isolated ids survive a round
//! trip.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;

use super::{NodeId, Snapshot, TemporalGraph};
use crate::error::{Error, Result};

/// Rule for bucketing timestamped records into snapshots.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Partitioning {
    /// One snapshot per distinct timestamp, in ascending order.
    #[default]
    DistinctTimestamps,
    /// `N` buckets of equal timestamp range between the minimum and maximum.
    FixedCount(usize),
}

impl FromStr for Partitioning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "distinct" {
            return Ok(Partitioning::DistinctTimestamps);
        }
        if let Some(n) = s.strip_prefix("fixed:") {
            let n: usize = n
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad bucket count in {s:?}")))?;
            if n == 0 {
                return Err(Error::InvalidArgument("bucket count must be >= 1".into()));
            }
            return Ok(Partitioning::FixedCount(n));
        }
        Err(Error::InvalidArgument(format!(
            "unknown partitioning {s:?} (expected distinct or fixed:N)"
        )))
    }
}

impl fmt::Display for Partitioning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Partitioning::DistinctTimestamps => write!(f, "distinct"),
            Partitioning::FixedCount(n) => write!(f, "fixed:{n}"),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct IngestOptions {
    pub partitioning: Partitioning,
    pub allow_self_loops: bool,
    /// Map arbitrary id tokens to `0..n` (numeric order when every token is an
    /// integer, lexicographic otherwise) instead of using them verbatim.
    pub remap_ids: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub records: usize,
    /// Node ids that appear in at least one record.
    pub distinct_nodes: usize,
    /// Pairs seen in both orientations within one snapshot.
    pub reversed_pairs: usize,
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub graph: TemporalGraph,
    /// Dense id -> original token, present when ids were remapped.
    pub id_map: Option<Vec<String>>,
    pub stats: IngestStats,
}

struct Record {
    line: usize,
    src: String,
    dst: String,
    ts: f64,
    weight: f64,
}

pub fn ingest_edge_list(path: impl AsRef<Path>, opts: &IngestOptions) -> Result<Ingested> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = parse_edge_list(BufReader::new(file), opts).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    out.graph.meta.source = Some(path.to_path_buf());
    if let Some(stem) = path.file_stem() {
        out.graph.meta.name = stem.to_string_lossy().into_owned();
    }
    Ok(out)
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix('#')?.trim();
    let mut universe = None;
    let mut snapshots = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("universe=") {
            universe = v.parse().ok();
        } else {
            snapshots = tok.strip_prefix("snapshots=")?.parse().ok();
        }
    }
    Some((universe?, snapshots?))
}

pub fn parse_edge_list<R: BufRead>(reader: R, opts: &IngestOptions) -> Result<Ingested> {
    let mut records = Vec::new();
    let mut header = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            if records.is_empty() && header.is_none() {
                header = parse_header(trimmed);
            }
            continue;
        }
        records.push(parse_record(line_no, trimmed)?);
    }
    if records.is_empty() {
        return Err(Error::EmptyFile);
    }

    let (ids, id_map) = resolve_ids(&records, opts.remap_ids)?;
    let buckets = bucket_timestamps(&records, opts.partitioning, header)?;
    let num_snapshots = buckets.iter().copied().max().map_or(0, |m| m + 1);
    let num_snapshots = num_snapshots.max(header.map_or(0, |h| h.1));

    let mut layers: Vec<Vec<(NodeId, NodeId, f64)>> = vec![Vec::new(); num_snapshots];
    let mut orientations: Vec<HashMap<(NodeId, NodeId), u8>> = vec![HashMap::new(); num_snapshots];
    for (rec, (&(src, dst), &b)) in records.iter().zip(ids.iter().zip(buckets.iter())) {
        if src == dst && !opts.allow_self_loops {
            return Err(Error::SelfLoop {
                line: rec.line,
                node: src,
            });
        }
        let bit = if src <= dst { 1 } else { 2 };
        *orientations[b]
            .entry((src.min(dst), src.max(dst)))
            .or_insert(0) |= bit;
        layers[b].push((src, dst, rec.weight));
    }
    let reversed_pairs = orientations
        .iter()
        .flat_map(|m| m.values())
        .filter(|&&bits| bits == 3)
        .count();
    if reversed_pairs > 0 {
        warn!("{reversed_pairs} pairs appear in both directions; input treated as undirected");
    }

    let snapshots = layers
        .into_iter()
        .enumerate()
        .map(|(t, edges)| Snapshot::new(t, edges, opts.allow_self_loops))
        .collect::<Result<Vec<_>>>()?;

    let max_id = ids.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0);
    let universe = (max_id + 1).max(header.map_or(0, |h| h.0));
    let distinct_nodes = ids
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .collect::<BTreeSet<_>>()
        .len();
    let graph = TemporalGraph::new(snapshots, universe)?;
    Ok(Ingested {
        graph,
        id_map,
        stats: IngestStats {
            records: records.len(),
            distinct_nodes,
            reversed_pairs,
        },
    })
}

fn parse_record(line: usize, text: &str) -> Result<Record> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() < 3 || fields.len() > 4 {
        return Err(Error::Parse {
            line,
            msg: format!(
                "expected `src dst timestamp [weight]`, got {} fields",
                fields.len()
            ),
        });
    }
    let ts: f64 = fields[2].parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad timestamp {:?}", fields[2]),
    })?;
    if !ts.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite timestamp {:?}", fields[2]),
        });
    }
    let weight = match fields.get(3) {
        None => 1.0,
        Some(w) => {
            let w: f64 = w.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad weight {w:?}"),
            })?;
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::Parse {
                    line,
                    msg: format!("weight must be positive, got {w}"),
                });
            }
            w
        }
    };
    Ok(Record {
        line,
        src: fields[0].to_string(),
        dst: fields[1].to_string(),
        ts,
        weight,
    })
}

type Resolved = (Vec<(NodeId, NodeId)>, Option<Vec<String>>);

fn resolve_ids(records: &[Record], remap: bool) -> Result<Resolved> {
    if !remap {
        let parse = |tok: &str, line: usize| -> Result<NodeId> {
            let id: i64 = tok.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad node id {tok:?}"),
            })?;
            if id < 0 {
                return Err(Error::NegativeNodeId { line, id });
            }
            Ok(id as NodeId)
        };
        let ids = records
            .iter()
            .map(|r| Ok((parse(&r.src, r.line)?, parse(&r.dst, r.line)?)))
            .collect::<Result<Vec<_>>>()?;
        return Ok((ids, None));
    }

    let tokens: BTreeSet<&str> = records
        .iter()
        .flat_map(|r| [r.src.as_str(), r.dst.as_str()])
        .collect();
    let mut order: Vec<&str> = tokens.into_iter().collect();
    let numeric: Option<Vec<i128>> = order.iter().map(|t| t.parse::<i128>().ok()).collect();
    if let Some(nums) = numeric {
        let mut paired: Vec<(i128, &str)> = nums.into_iter().zip(order).collect();
        paired.sort();
        order = paired.into_iter().map(|(_, s)| s).collect();
    }
    let index: HashMap<&str, NodeId> = order.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let ids = records
        .iter()
        .map(|r| (index[r.src.as_str()], index[r.dst.as_str()]))
        .collect();
    Ok((ids, Some(order.into_iter().map(str::to_string).collect())))
}

fn bucket_timestamps(
    records: &[Record],
    partitioning: Partitioning,
    header: Option<(usize, usize)>,
) -> Result<Vec<usize>> {
    match partitioning {
        Partitioning::DistinctTimestamps => {
            if let Some((_, t_count)) = header {
                return records
                    .iter()
                    .map(|r| {
                        let t = r.ts as usize;
                        if r.ts < 0.0 || r.ts.fract() != 0.0 || t >= t_count {
                            Err(Error::Parse {
                                line: r.line,
                                msg: format!(
                                    "timestamp {} is not a snapshot index below {t_count}",
                                    r.ts
                                ),
                            })
                        } else {
                            Ok(t)
                        }
                    })
                    .collect();
            }
            // Exact equality after parsing; -0.0 and 0.0 are the same instant.
            let key = |x: f64| {
                if x == 0.0 {
                    0.0f64.to_bits()
                } else {
                    x.to_bits()
                }
            };
            let mut distinct: Vec<f64> = records.iter().map(|r| r.ts).collect();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup_by(|a, b| key(*a) == key(*b));
            let rank: BTreeMap<u64, usize> = distinct
                .iter()
                .enumerate()
                .map(|(i, &x)| (key(x), i))
                .collect();
            Ok(records.iter().map(|r| rank[&key(r.ts)]).collect())
        }
        Partitioning::FixedCount(n) => {
            let lo = records.iter().map(|r| r.ts).fold(f64::INFINITY, f64::min);
            let hi = records
                .iter()
                .map(|r| r.ts)
                .fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            Ok(records
                .iter()
                .map(|r| {
                    if span <= 0.0 {
                        0
                    } else {
                        (((r.ts - lo) / span * n as f64).floor() as usize).min(n - 1)
                    }
                })
                .collect())
        }
    }
}

/// Writes the canonical edge list: header, then `u v t weight` per edge in
/// snapshot order. Re-ingesting with [`Partitioning::DistinctTimestamps`]
/// reproduces the graph exactly.
pub fn write_edge_list<W: Write>(g: &TemporalGraph, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "# universe={} snapshots={}",
        g.universe_size(),
        g.num_snapshots()
    )?;
    for s in g.snapshots() {
        for e in s.edges() {
            writeln!(w, "{} {} {} {}", e.u, e.v, s.t(), e.weight)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Ingested> {
        parse_edge_list(text.as_bytes(), &IngestOptions::default())
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse(""), Err(Error::EmptyFile)));
        assert!(matches!(
            parse("# only a comment\n\n"),
            Err(Error::EmptyFile)
        ));
    }

    #[test]
    fn duplicate_pair_is_merged() {
        let out = parse("0 1 5\n1 0 5\n1 2 5\n").unwrap();
        let g = &out.graph;
        assert_eq!(g.num_snapshots(), 1);
        assert_eq!(g.snapshot(0).num_edges(), 2);
        assert_eq!(g.snapshot(0).edges()[0].weight, 2.0);
        assert_eq!(out.stats.reversed_pairs, 1);
    }

    #[test]
    fn distinct_timestamps_are_ordered() {
        let g = parse("0 1 2.5\n1 2 -1\n2 3 2.5\n3 4 10\n").unwrap().graph;
        assert_eq!(g.num_snapshots(), 3);
        assert_eq!(g.snapshot(0).active_nodes(), &[1, 2]);
        assert_eq!(g.snapshot(1).num_edges(), 2);
        assert_eq!(g.universe_size(), 5);
    }

    #[test]
    fn fixed_count_buckets() {
        let opts = IngestOptions {
            partitioning: Partitioning::FixedCount(4),
            ..Default::default()
        };
        let g = parse_edge_list("0 1 0\n1 2 10\n2 3 100\n".as_bytes(), &opts)
            .unwrap()
            .graph;
        assert_eq!(g.num_snapshots(), 4);
        assert_eq!(g.snapshot(0).num_edges(), 2);
        assert_eq!(g.snapshot(1).num_edges(), 0);
        assert_eq!(g.snapshot(3).num_edges(), 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse("0 1 0\n# c\n0 x 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("0 -4 1\n"),
            Err(Error::NegativeNodeId { line: 1, id: -4 })
        ));
        assert!(matches!(
            parse("3 3 1\n"),
            Err(Error::SelfLoop { line: 1, node: 3 })
        ));
        assert!(matches!(
            parse("0 1 1 -2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(parse("0 1\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn remapping_sparse_and_string_ids() {
        let opts = IngestOptions {
            remap_ids: true,
            ..Default::default()
        };
        let out = parse_edge_list("100 7 0\n-3 100 1\n".as_bytes(), &opts).unwrap();
        assert_eq!(out.id_map.as_deref().unwrap(), ["-3", "7", "100"]);
        assert_eq!(out.graph.universe_size(), 3);
        assert_eq!(out.graph.snapshot(0).active_nodes(), &[1, 2]);

        let out = parse_edge_list("bob alice 0\n".as_bytes(), &opts).unwrap();
        assert_eq!(out.id_map.unwrap(), ["alice", "bob"]);
    }

    #[test]
    fn round_trip_keeps_empty_snapshots_and_universe() {
        let layers = vec![vec![(0, 1)], vec![], vec![(2, 3), (1, 2)]];
        let mut g = TemporalGraph::from_layers(9, &layers).unwrap();
        g.meta = Default::default();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let back = parse_edge_list(&buf[..], &IngestOptions::default())
            .unwrap()
            .graph;
        assert_eq!(back, g);
    }

    #[test]
    fn partition_flag_parsing() {
        assert_eq!(
            "distinct".parse::<Partitioning>().unwrap(),
            Partitioning::DistinctTimestamps
        );
        assert_eq!(
            "fixed:12".parse::<Partitioning>().unwrap(),
            Partitioning::FixedCount(12)
        );
        assert!("fixed:0".parse::<Partitioning>().is_err());
        assert!("weekly".parse::<Partitioning>().is_err());
    }
}
