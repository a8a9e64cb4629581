use std::io::BufRead;

use regex::Regex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Captures the second-to-last path segment of a URI, e.g. `compound` in
/// `http://host/compound/C1`.
pub const DEFAULT_TYPE_RULE: &str = r"([^/#]+)[/#][^/#]+/?$";

const UNKNOWN_TYPE: &str = "unknown";

/// An edge record as read from an input file, before indexing.
#[derive(Clone, Debug, PartialEq)]
pub struct RawEdge<T> {
    pub src: String,
    pub etype: String,
    pub dst: String,
    pub weight: T,
    pub src_type: Option<String>,
    pub dst_type: Option<String>,
}

impl<T> RawEdge<T> {
    pub fn new(src: impl Into<String>, etype: impl Into<String>, dst: impl Into<String>, weight: T) -> Self {
        RawEdge {
            src: src.into(),
            etype: etype.into(),
            dst: dst.into(),
            weight,
            src_type: None,
            dst_type: None,
        }
    }
}

/// Regex with exactly one capture group, applied to node URIs to extract a
/// node-type label.
#[derive(Clone, Debug)]
pub struct TypeRule(Regex);

impl TypeRule {
    pub fn new(pattern: &str) -> Result<Self> {
        let re = Regex::new(pattern).map_err(|e| Error::param(format!("type rule: {e}")))?;
        if re.captures_len() != 2 {
            return Err(Error::param(format!(
                "type rule `{pattern}` must have exactly one capture group"
            )));
        }
        Ok(TypeRule(re))
    }

    pub fn node_type(&self, uri: &str) -> String {
        self.0
            .captures(uri)
            .and_then(|c| c.get(1))
            .map_or_else(|| UNKNOWN_TYPE.to_owned(), |m| m.as_str().to_owned())
    }
}

impl Default for TypeRule {
    fn default() -> Self {
        TypeRule::new(DEFAULT_TYPE_RULE).expect("default type rule compiles")
    }
}

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(Error::from(e))),
            Ok(line) => {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    None
                } else {
                    Some(Ok((i + 1, line.trim_end_matches(['\r', '\n']).to_owned())))
                }
            }
        })
}

fn parse_weight<T: Scalar>(field: &str, line: usize) -> Result<T> {
    let w: T = field.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("weight `{field}` is not a number"),
    })?;
    if !w.is_finite() || w <= T::zero() {
        return Err(Error::Parse {
            line,
            msg: format!("weight `{field}` must be positive and finite"),
        });
    }
    Ok(w)
}

/// Read a tab-separated edge list: `src<TAB>etype<TAB>dst[<TAB>weight]`.
///
/// Blank lines and `#` comments are skipped. When `has_weight` is false a
/// fourth column is ignored and every weight is 1.
pub fn parse_edge_list<T: Scalar, R: BufRead>(reader: R, has_weight: bool) -> Result<Vec<RawEdge<T>>> {
    let mut out = Vec::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        let fields: Vec<&str> = text.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(Error::Parse {
                line,
                msg: format!("expected 3 or 4 tab-separated fields, found {}", fields.len()),
            });
        }
        if fields[..3].iter().any(|f| f.trim().is_empty()) {
            return Err(Error::Parse {
                line,
                msg: "empty src, etype or dst field".into(),
            });
        }
        let weight = match fields.get(3) {
            Some(w) if has_weight => parse_weight(w, line)?,
            _ => T::one(),
        };
        out.push(RawEdge::new(fields[0].trim(), fields[1].trim(), fields[2].trim(), weight));
    }
    Ok(out)
}

fn strip_uri(token: &str) -> &str {
    token
        .strip_prefix('<')
        .and_then(|t| t.strip_suffix('>'))
        .unwrap_or(token)
}

/// Last non-empty `/` or `#` separated segment of a URI.
fn local_name(uri: &str) -> &str {
    let trimmed = uri.trim_end_matches('/');
    match trimmed.rsplit(['/', '#']).next() {
        Some(s) if !s.is_empty() => s,
        _ => uri,
    }
}

/// Read RDF-like triples, one `subject predicate object` per line.
///
/// Node and edge-type labels are the URIs' local names; node types come from
/// `type_rule` applied to the full URI.
pub fn parse_triples<T: Scalar, R: BufRead>(reader: R, type_rule: &TypeRule) -> Result<Vec<RawEdge<T>>> {
    let mut out = Vec::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 3 whitespace-separated tokens, found {}", tokens.len()),
            });
        }
        let (s, p, o) = (strip_uri(tokens[0]), strip_uri(tokens[1]), strip_uri(tokens[2]));
        let mut rec = RawEdge::new(local_name(s), local_name(p), local_name(o), T::one());
        rec.src_type = Some(type_rule.node_type(s));
        rec.dst_type = Some(type_rule.node_type(o));
        out.push(rec);
    }
    Ok(out)
}
