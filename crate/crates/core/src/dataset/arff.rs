//! ARFF reader and dense writer.
//!
//! Supports `@relation`, numeric (`numeric`, `real`, `integer`) and nominal
//! attributes, dense and sparse data rows and `%` comment lines. Missing
//! values (`?`), string and date attributes are rejected.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttributeKind {
    Numeric,
    /// Declared value set; cells store the index into it.
    Nominal(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub relation: String,
    pub attributes: Vec<Attribute>,
    pub rows: Vec<Vec<f64>>,
}

impl DataTable {
    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Renders the table as dense ARFF that [`parse_arff`] reads back unchanged.
    pub fn to_dense_arff(&self) -> String {
        let mut out = String::new();
        writeln!(out, "@relation {}", quote(&self.relation)).unwrap();
        out.push('\n');
        for a in &self.attributes {
            match &a.kind {
                AttributeKind::Numeric => {
                    writeln!(out, "@attribute {} numeric", quote(&a.name)).unwrap()
                }
                AttributeKind::Nominal(values) => {
                    let vs: Vec<String> = values.iter().map(|v| quote(v)).collect();
                    writeln!(out, "@attribute {} {{{}}}", quote(&a.name), vs.join(",")).unwrap()
                }
            }
        }
        out.push_str("\n@data\n");
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .zip(&self.attributes)
                .map(|(v, a)| match &a.kind {
                    AttributeKind::Numeric => format!("{v}"),
                    AttributeKind::Nominal(values) => quote(&values[*v as usize]),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s.chars().any(|c| {
            c.is_whitespace() || matches!(c, ',' | '\'' | '"' | '{' | '}' | '%' | '\\' | '?')
        })
}

fn quote(s: &str) -> String {
    if !needs_quotes(s) {
        return s.to_string();
    }
    let mut q = String::with_capacity(s.len() + 2);
    q.push('\'');
    for c in s.chars() {
        if c == '\'' || c == '\\' {
            q.push('\\');
        }
        q.push(c);
    }
    q.push('\'');
    q
}

/// Reads one possibly-quoted token from the front of `s`; returns it and the rest.
fn take_token(s: &str, line: usize) -> Result<(String, &str)> {
    let s = s.trim_start();
    let mut chars = s.char_indices();
    match chars.next() {
        None => Err(Error::parse(line, "expected a name")),
        Some((_, q @ ('\'' | '"'))) => {
            let mut out = String::new();
            let mut escaped = false;
            for (i, c) in chars {
                if escaped {
                    out.push(c);
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    return Ok((out, &s[i + c.len_utf8()..]));
                } else {
                    out.push(c);
                }
            }
            Err(Error::parse(line, "unterminated quoted name"))
        }
        Some(_) => {
            let end = s
                .find(|c: char| c.is_whitespace() || c == '{')
                .unwrap_or(s.len());
            Ok((s[..end].to_string(), &s[end..]))
        }
    }
}

/// Splits on `sep` outside quotes. Tokens keep their quotes.
fn split_outside_quotes(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match (quote, c) {
            (Some(_), '\\') => escaped = true,
            (Some(q), c) if c == q => quote = None,
            (None, '\'' | '"') => quote = Some(c),
            (None, c) if c == sep => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn unquote(s: &str, line: usize) -> Result<String> {
    let t = s.trim();
    if t.starts_with('\'') || t.starts_with('"') {
        let (tok, rest) = take_token(t, line)?;
        if !rest.trim().is_empty() {
            return Err(Error::parse(line, format!("unexpected text after `{tok}`")));
        }
        Ok(tok)
    } else {
        Ok(t.to_string())
    }
}

fn parse_kind(spec: &str, line: usize) -> Result<AttributeKind> {
    let spec = spec.trim();
    if let Some(inner) = spec.strip_prefix('{') {
        let inner = inner
            .strip_suffix('}')
            .ok_or_else(|| Error::parse(line, "nominal value set is missing `}`"))?;
        let values = split_outside_quotes(inner, ',')
            .into_iter()
            .map(|v| unquote(v, line))
            .collect::<Result<Vec<_>>>()?;
        if values.iter().any(|v| v.is_empty()) {
            return Err(Error::parse(line, "empty nominal value"));
        }
        return Ok(AttributeKind::Nominal(values));
    }
    match spec.to_ascii_lowercase().as_str() {
        "numeric" | "real" | "integer" => Ok(AttributeKind::Numeric),
        "" => Err(Error::parse(line, "attribute type is missing")),
        other => Err(Error::parse(line, format!("unsupported attribute type `{other}`"))),
    }
}

fn parse_cell(raw: &str, attr: &Attribute, line: usize) -> Result<f64> {
    let value = unquote(raw, line)?;
    if value == "?" {
        return Err(Error::parse(
            line,
            format!("missing value for attribute `{}`", attr.name),
        ));
    }
    match &attr.kind {
        AttributeKind::Numeric => match value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::parse(
                line,
                format!("`{value}` is not a number (attribute `{}`)", attr.name),
            )),
        },
        AttributeKind::Nominal(values) => values
            .iter()
            .position(|v| *v == value)
            .map(|i| i as f64)
            .ok_or_else(|| {
                Error::parse(
                    line,
                    format!("`{value}` is not a declared value of `{}`", attr.name),
                )
            }),
    }
}

fn parse_sparse_row(inner: &str, attrs: &[Attribute], line: usize) -> Result<Vec<f64>> {
    let mut row = vec![0.0; attrs.len()];
    if inner.trim().is_empty() {
        return Ok(row);
    }
    for entry in split_outside_quotes(inner, ',') {
        let entry = entry.trim();
        let split = entry
            .find(char::is_whitespace)
            .ok_or_else(|| Error::parse(line, format!("sparse entry `{entry}` lacks a value")))?;
        let index: usize = entry[..split]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad sparse index in `{entry}`")))?;
        let attr = attrs.get(index).ok_or_else(|| {
            Error::parse(
                line,
                format!("sparse index {index} out of range ({} attributes)", attrs.len()),
            )
        })?;
        row[index] = parse_cell(&entry[split..], attr, line)?;
    }
    Ok(row)
}

fn parse_dense_row(text: &str, attrs: &[Attribute], line: usize) -> Result<Vec<f64>> {
    let cells = split_outside_quotes(text, ',');
    if cells.len() != attrs.len() {
        return Err(Error::parse(
            line,
            format!("row has {} values, expected {}", cells.len(), attrs.len()),
        ));
    }
    cells
        .iter()
        .zip(attrs)
        .map(|(c, a)| parse_cell(c, a, line))
        .collect()
}

/// Parses ARFF text into a [`DataTable`].
pub fn parse_arff(text: &str) -> Result<DataTable> {
    let mut relation = String::new();
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut rows = Vec::new();
    let mut in_data = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if in_data {
            let row = if let Some(inner) = trimmed.strip_prefix('{') {
                // Weighted sparse instances end with `}, {weight}`; the weight is dropped.
                let close = inner
                    .find('}')
                    .ok_or_else(|| Error::parse(line, "sparse row is missing `}`"))?;
                parse_sparse_row(&inner[..close], &attributes, line)?
            } else {
                parse_dense_row(trimmed, &attributes, line)?
            };
            rows.push(row);
            continue;
        }

        if !trimmed.starts_with('@') {
            return Err(Error::parse(line, "expected a declaration before @data"));
        }
        let keyword_end = trimmed
            .find(char::is_whitespace)
            .unwrap_or(trimmed.len());
        let keyword = trimmed[..keyword_end].to_ascii_lowercase();
        let rest = &trimmed[keyword_end..];
        match keyword.as_str() {
            "@relation" => {
                let (name, _) = take_token(rest, line)?;
                relation = name;
            }
            "@attribute" => {
                let (name, spec) = take_token(rest, line)?;
                if name.is_empty() {
                    return Err(Error::parse(line, "attribute name is empty"));
                }
                if attributes.iter().any(|a| a.name == name) {
                    return Err(Error::parse(line, format!("attribute `{name}` declared twice")));
                }
                let kind = parse_kind(spec, line)?;
                attributes.push(Attribute { name, kind });
            }
            "@data" => {
                if attributes.is_empty() {
                    return Err(Error::parse(line, "@data before any @attribute"));
                }
                in_data = true;
            }
            other => return Err(Error::parse(line, format!("unknown declaration `{other}`"))),
        }
    }
    if !in_data {
        return Err(Error::parse(text.lines().count().max(1), "missing @data section"));
    }
    Ok(DataTable {
        relation,
        attributes,
        rows,
    })
}
