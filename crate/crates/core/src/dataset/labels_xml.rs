//! MULAN label header: an XML document listing `<label name="..."/>` elements.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Returns label names in document order. Nested labels (hierarchies) are
/// flattened depth-first.
pub fn parse_label_header(text: &str) -> Result<Vec<String>> {
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::LabelHeaderXml(e.to_string()))?;
    let mut names = Vec::new();
    let mut seen = HashSet::new();
    for node in doc
        .root_element()
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "label")
    {
        let name = node.attribute("name").ok_or_else(|| {
            let pos = doc.text_pos_at(node.range().start);
            Error::LabelHeaderXml(format!("<label> without a name at {pos}"))
        })?;
        if !seen.insert(name.to_string()) {
            return Err(Error::DuplicateLabel(name.to_string()));
        }
        names.push(name.to_string());
    }
    if names.is_empty() {
        return Err(Error::EmptyHeader);
    }
    Ok(names)
}

/// Writes a header that [`parse_label_header`] reads back.
pub fn write_label_header(names: &[String]) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<labels xmlns=\"http://mulan.sourceforge.net/labels\">\n",
    );
    for n in names {
        let escaped = n
            .replace('&', "&amp;")
            .replace('"', "&quot;")
            .replace('<', "&lt;")
            .replace('>', "&gt;");
        out.push_str(&format!("  <label name=\"{escaped}\"></label>\n"));
    }
    out.push_str("</labels>\n");
    out
}
