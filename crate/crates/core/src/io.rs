//! Text formats: edge lists, post and repost tables, the SNAP activity log,
//! partition files, and CSV reports with a JSON provenance header.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use crate::cascade::{PostRecord, RepostRecord, Timestamp, TweetId};
use crate::community::Partition;
use crate::error::{Error, Result};
use crate::graph::{FollowNetwork, LoadReport, NetworkBuilder, UserId};

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

/// Iterates non-blank, non-comment lines as `(line_number, fields)`.
fn records<'a, R: BufRead + 'a>(
    reader: R,
    name: &'a str,
) -> impl Iterator<Item = Result<(usize, Vec<String>)>> + 'a {
    reader
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| {
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::parse(name, i + 1, e.to_string()))),
            };
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                return None;
            }
            let fields = trimmed
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|f| !f.is_empty())
                .map(str::to_string)
                .collect();
            Some(Ok((i + 1, fields)))
        })
}

fn int<T: std::str::FromStr>(field: &str, what: &str, name: &str, line: usize) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::parse(name, line, format!("{what}: `{field}` is not an integer")))
}

fn is_header(fields: &[String]) -> bool {
    fields
        .first()
        .is_some_and(|f| f.parse::<i64>().is_err() && f.chars().any(char::is_alphabetic))
}

/// Reads `follower followee` pairs, one per line. With `swap` the columns
/// are read as `followee follower`.
pub fn read_edge_list<R: BufRead>(
    reader: R,
    name: &str,
    swap: bool,
) -> Result<(FollowNetwork, LoadReport)> {
    let mut builder = NetworkBuilder::new();
    for rec in records(reader, name) {
        let (line, f) = rec?;
        if f.len() != 2 {
            return Err(Error::parse(
                name,
                line,
                format!("expected 2 fields, found {}", f.len()),
            ));
        }
        let a: UserId = int(&f[0], "user id", name, line)?;
        let b: UserId = int(&f[1], "user id", name, line)?;
        if swap {
            builder.add_follow(b, a);
        } else {
            builder.add_follow(a, b);
        }
    }
    Ok(builder.build())
}

pub fn read_edge_file(path: &Path, swap: bool) -> Result<(FollowNetwork, LoadReport)> {
    read_edge_list(open(path)?, &source_name(path), swap)
}

fn read_triples<R: BufRead>(reader: R, name: &str) -> Result<Vec<(u64, u64, Timestamp)>> {
    let mut out = Vec::new();
    let mut first = true;
    for rec in records(reader, name) {
        let (line, f) = rec?;
        if std::mem::take(&mut first) && is_header(&f) {
            continue;
        }
        if f.len() != 3 {
            return Err(Error::parse(
                name,
                line,
                format!("expected 3 fields, found {}", f.len()),
            ));
        }
        out.push((
            int(&f[0], "tweet id", name, line)?,
            int(&f[1], "user id", name, line)?,
            int(&f[2], "timestamp", name, line)?,
        ));
    }
    Ok(out)
}

/// Reads `tweet_id author_id time` rows. A leading header row is skipped.
pub fn read_posts<R: BufRead>(reader: R, name: &str) -> Result<Vec<PostRecord>> {
    Ok(read_triples(reader, name)?
        .into_iter()
        .map(|(tweet, author, time)| PostRecord { tweet, author, time })
        .collect())
}

/// Reads `tweet_id user_id time` rows. A leading header row is skipped.
pub fn read_reposts<R: BufRead>(reader: R, name: &str) -> Result<Vec<RepostRecord>> {
    Ok(read_triples(reader, name)?
        .into_iter()
        .map(|(tweet, user, time)| RepostRecord { tweet, user, time })
        .collect())
}

pub fn read_posts_file(path: &Path) -> Result<Vec<PostRecord>> {
    read_posts(open(path)?, &source_name(path))
}

pub fn read_reposts_file(path: &Path) -> Result<Vec<RepostRecord>> {
    read_reposts(open(path)?, &source_name(path))
}

/// Reads a SNAP-style activity log with rows `user_a user_b time kind`.
/// Rows whose kind equals `tag` mean `user_a` reposted content of `user_b`.
/// All such rows for one `user_b` form one cascade whose tweet id is
/// `user_b` and whose post time is the earliest repost time.
pub fn read_activity_log<R: BufRead>(
    reader: R,
    name: &str,
    tag: &str,
) -> Result<(Vec<PostRecord>, Vec<RepostRecord>)> {
    let mut reposts = Vec::new();
    for rec in records(reader, name) {
        let (line, f) = rec?;
        if f.len() != 4 {
            return Err(Error::parse(
                name,
                line,
                format!("expected 4 fields, found {}", f.len()),
            ));
        }
        if f[3] != tag {
            continue;
        }
        let user: UserId = int(&f[0], "user id", name, line)?;
        let target: UserId = int(&f[1], "user id", name, line)?;
        let time: Timestamp = int(&f[2], "timestamp", name, line)?;
        reposts.push(RepostRecord {
            tweet: target as TweetId,
            user,
            time,
        });
    }
    let mut first = std::collections::BTreeMap::new();
    for r in &reposts {
        first
            .entry(r.tweet)
            .and_modify(|t: &mut Timestamp| *t = (*t).min(r.time))
            .or_insert(r.time);
    }
    let posts = first
        .into_iter()
        .map(|(tweet, time)| PostRecord {
            tweet,
            author: tweet as UserId,
            time,
        })
        .collect();
    Ok((posts, reposts))
}

pub fn read_activity_file(path: &Path, tag: &str) -> Result<(Vec<PostRecord>, Vec<RepostRecord>)> {
    read_activity_log(open(path)?, &source_name(path), tag)
}

/// Writes `user_id,community_id` rows in node order.
pub fn write_partition<W: Write>(
    mut out: W,
    network: &FollowNetwork,
    partition: &Partition,
) -> Result<()> {
    writeln!(out, "user_id,community_id")?;
    for (u, &id) in network.user_ids().iter().enumerate() {
        writeln!(out, "{},{}", id, partition.community(u as u32))?;
    }
    Ok(())
}

/// Reads a partition file. Users missing from the file get singleton
/// communities; users unknown to the network are ignored.
pub fn read_partition<R: BufRead>(
    reader: R,
    name: &str,
    network: &FollowNetwork,
) -> Result<Partition> {
    let n = network.node_count();
    let mut labels: Vec<Option<u64>> = vec![None; n];
    let mut first = true;
    for rec in records(reader, name) {
        let (line, f) = rec?;
        if std::mem::take(&mut first) && is_header(&f) {
            continue;
        }
        if f.len() != 2 {
            return Err(Error::parse(
                name,
                line,
                format!("expected 2 fields, found {}", f.len()),
            ));
        }
        let user: UserId = int(&f[0], "user id", name, line)?;
        let community: u64 = int(&f[1], "community id", name, line)?;
        if let Some(u) = network.node(user) {
            labels[u as usize] = Some(community);
        }
    }
    let mut next = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let raw: Vec<u32> = labels
        .into_iter()
        .map(|l| {
            l.unwrap_or_else(|| {
                next += 1;
                next - 1
            })
        })
        .map(|l| l as u32)
        .collect();
    Ok(Partition::from_labels(&raw))
}

pub fn read_partition_file(path: &Path, network: &FollowNetwork) -> Result<Partition> {
    read_partition(open(path)?, &source_name(path), network)
}

/// A CSV table. Cells are pre-formatted strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Formats a float with the shortest round-trip representation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NA".to_string()
    } else {
        format!("{x}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), fmt_f64)
}

fn escape(cell: &str) -> std::borrow::Cow<'_, str> {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\"")).into()
    } else {
        cell.into()
    }
}

/// Writes `# {json}` followed by the CSV header and rows.
pub fn write_table<W: Write, H: Serialize>(mut out: W, header: &H, table: &Table) -> Result<()> {
    let json = serde_json::to_string(header).map_err(|e| Error::Config(e.to_string()))?;
    writeln!(out, "# {json}")?;
    writeln!(out, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let cells: Vec<_> = row.iter().map(|c| escape(c)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
