use super::{tokenize, SentencePair};
use crate::error::{Error, Result};

fn lines(text: &str) -> Vec<&str> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Vec::new();
    }
    body.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect()
}

fn make_pair(id: String, src: &str, tgt: &str, lineno: usize) -> Result<SentencePair> {
    let (src, tgt) = (tokenize(src), tokenize(tgt));
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::parse(lineno, "empty sentence in parallel corpus"));
    }
    SentencePair::new(id, src, tgt).map_err(|e| Error::parse(lineno, e.to_string()))
}

/// Reads two line-aligned files. The 1-based line number is the pair id.
pub fn read_parallel(src_text: &str, tgt_text: &str) -> Result<Vec<SentencePair>> {
    let (src, tgt) = (lines(src_text), lines(tgt_text));
    if src.len() != tgt.len() {
        return Err(Error::mismatch(
            (src.len().min(tgt.len()) + 1).to_string(),
            format!("source has {} lines, target has {}", src.len(), tgt.len()),
        ));
    }
    src.iter()
        .zip(&tgt)
        .enumerate()
        .map(|(k, (s, t))| make_pair((k + 1).to_string(), s, t, k + 1))
        .collect()
}

/// Reads a tab-separated bitext with `src<TAB>tgt` or `id<TAB>src<TAB>tgt`
/// rows. Without an id column the 1-based line number is the pair id.
pub fn parse_bitext_tsv(text: &str) -> Result<Vec<SentencePair>> {
    lines(text)
        .iter()
        .enumerate()
        .map(|(k, line)| {
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                [src, tgt] => make_pair((k + 1).to_string(), src, tgt, k + 1),
                [id, src, tgt] => make_pair(id.trim().to_string(), src, tgt, k + 1),
                _ => Err(Error::parse(
                    k + 1,
                    format!(
                        "expected 2 or 3 tab-separated fields, found {}",
                        fields.len()
                    ),
                )),
            }
        })
        .collect()
}

/// Writes pairs as `id<TAB>src<TAB>tgt` rows.
pub fn write_bitext_tsv(pairs: &[SentencePair]) -> String {
    let mut out = String::new();
    for pair in pairs {
        out.push_str(&pair.id);
        out.push('\t');
        out.push_str(&pair.src_tokens.join(" "));
        out.push('\t');
        out.push_str(&pair.tgt_tokens.join(" "));
        out.push('\n');
    }
    out
}
