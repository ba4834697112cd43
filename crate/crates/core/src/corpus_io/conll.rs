use std::fmt::Write as _;

use super::tags::{repair_iob, Tag};
use super::{check_id, check_token, LabeledSentence};
use crate::error::{Error, Result};

const ID_PREFIX: &str = "# id = ";

/// Output of [`parse_conll`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedCorpus {
    pub sentences: Vec<LabeledSentence>,
    /// Dangling `I-X` tags rewritten to `B-X`.
    pub repairs: usize,
    /// `B-MISC`/`I-MISC` tags rewritten to `O`.
    pub misc_removed: usize,
}

struct Pending {
    id: Option<String>,
    first_line: usize,
    tokens: Vec<String>,
    tags: Vec<Tag>,
}

impl Pending {
    fn new() -> Self {
        Self {
            id: None,
            first_line: 0,
            tokens: Vec::new(),
            tags: Vec::new(),
        }
    }

    fn is_empty(&self) -> bool {
        self.id.is_none() && self.tokens.is_empty()
    }
}

/// Parses tab-separated `token<TAB>tag` lines into sentences.
///
/// MISC tags become `O`, then dangling `I-X` tags are repaired to `B-X`. Both
/// rewrites are counted in the result. Sentences without an explicit
/// `# id = X` line get their 1-based ordinal as id.
pub fn parse_conll(text: &str) -> Result<ParsedCorpus> {
    let mut out = ParsedCorpus::default();
    let mut pending = Pending::new();

    let finish = |pending: &mut Pending, out: &mut ParsedCorpus| -> Result<()> {
        if pending.is_empty() {
            return Ok(());
        }
        let p = std::mem::replace(pending, Pending::new());
        if p.tokens.is_empty() {
            return Err(Error::parse(p.first_line, "sentence id without tokens"));
        }
        let mut tags = p.tags;
        out.repairs += repair_iob(&mut tags);
        let id =
            p.id.unwrap_or_else(|| (out.sentences.len() + 1).to_string());
        let sentence = LabeledSentence::new(id, p.tokens, tags)
            .map_err(|e| Error::parse(p.first_line, e.to_string()))?;
        out.sentences.push(sentence);
        Ok(())
    };

    for (idx, raw) in text.split('\n').enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            finish(&mut pending, &mut out)?;
            continue;
        }
        if pending.is_empty() {
            pending.first_line = lineno;
        }
        if let Some(id) = line
            .strip_prefix(ID_PREFIX)
            .filter(|_| !line.contains('\t'))
        {
            if !pending.tokens.is_empty() || pending.id.is_some() {
                return Err(Error::parse(lineno, "id line inside a sentence"));
            }
            check_id(id).map_err(|m| Error::parse(lineno, m))?;
            pending.id = Some(id.to_string());
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                lineno,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        }
        check_token(fields[0]).map_err(|m| Error::parse(lineno, m))?;
        let tag = match fields[1] {
            "B-MISC" | "I-MISC" => {
                out.misc_removed += 1;
                Tag::O
            }
            other => other
                .parse::<Tag>()
                .map_err(|e| Error::parse(lineno, e.to_string()))?,
        };
        pending.tokens.push(fields[0].to_string());
        pending.tags.push(tag);
    }
    finish(&mut pending, &mut out)?;
    Ok(out)
}

/// Serializes sentences as `token<TAB>tag` lines with a blank line after each
/// sentence. Inverse of [`parse_conll`] on valid input.
pub fn write_conll<'a, I>(sentences: I) -> String
where
    I: IntoIterator<Item = &'a LabeledSentence>,
{
    let mut out = String::new();
    for (k, sentence) in sentences.into_iter().enumerate() {
        if sentence.id() != (k + 1).to_string() {
            let _ = writeln!(out, "{ID_PREFIX}{}", sentence.id());
        }
        for (token, tag) in sentence.tokens().iter().zip(sentence.tags()) {
            let _ = writeln!(out, "{token}\t{tag}");
        }
        out.push('\n');
    }
    out
}
