use std::fmt::Write as _;

use super::{AlignmentLinks, SentencePair};
use crate::error::{Error, Result};

fn parse_index(s: &str, token: &str) -> std::result::Result<usize, String> {
    s.parse::<usize>()
        .map_err(|_| format!("malformed alignment token {token:?}"))
}

fn parse_line(line: &str) -> std::result::Result<AlignmentLinks, String> {
    let mut links = AlignmentLinks::new();
    for token in line.split_whitespace() {
        // The probability may itself contain '-' (e.g. 1e-5), so split at most twice.
        let mut parts = token.splitn(3, '-');
        let (Some(i), Some(j)) = (parts.next(), parts.next()) else {
            return Err(format!("malformed alignment token {token:?}"));
        };
        let i = parse_index(i, token)?;
        let j = parse_index(j, token)?;
        let prob = match parts.next() {
            None => None,
            Some(p) => {
                let p: f64 = p
                    .parse()
                    .map_err(|_| format!("malformed probability in {token:?}"))?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(format!("probability in {token:?} outside (0, 1]"));
                }
                Some(p)
            }
        };
        links.insert(i, j, prob);
    }
    Ok(links)
}

/// Parses one Pharaoh line and checks every link against `pair`.
pub fn parse_pharaoh(line: &str, pair: &SentencePair) -> Result<AlignmentLinks> {
    let links = parse_line(line).map_err(|m| Error::parse(0, format!("pair {}: {m}", pair.id)))?;
    links.check_bounds(pair)?;
    Ok(links)
}

/// Parses a whole Pharaoh file, one line per pair in `pairs` order.
pub fn parse_pharaoh_file(text: &str, pairs: &[SentencePair]) -> Result<Vec<AlignmentLinks>> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let lines: Vec<&str> = if body.is_empty() && pairs.len() <= 1 {
        if pairs.is_empty() {
            Vec::new()
        } else {
            vec![""]
        }
    } else {
        body.split('\n').collect()
    };
    if lines.len() != pairs.len() {
        return Err(Error::mismatch(
            pairs
                .get(lines.len().min(pairs.len().saturating_sub(1)))
                .map_or("-", |p| &p.id),
            format!(
                "alignment file has {} lines for {} pairs",
                lines.len(),
                pairs.len()
            ),
        ));
    }
    lines
        .iter()
        .zip(pairs)
        .enumerate()
        .map(|(k, (line, pair))| {
            let line = line.strip_suffix('\r').unwrap_or(line);
            let links = parse_line(line).map_err(|m| Error::parse(k + 1, m))?;
            links.check_bounds(pair)?;
            Ok(links)
        })
        .collect()
}

/// Formats links as a Pharaoh line, `i-j` or `i-j-p`, in ascending order.
pub fn write_pharaoh(links: &AlignmentLinks) -> String {
    let mut out = String::new();
    for (k, ((i, j), p)) in links.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        let _ = match p {
            Some(p) => write!(out, "{i}-{j}-{p}"),
            None => write!(out, "{i}-{j}"),
        };
    }
    out
}

/// One line per link set, each terminated by `\n`.
pub fn write_pharaoh_file<'a, I>(all: I) -> String
where
    I: IntoIterator<Item = &'a AlignmentLinks>,
{
    let mut out = String::new();
    for links in all {
        out.push_str(&write_pharaoh(links));
        out.push('\n');
    }
    out
}
