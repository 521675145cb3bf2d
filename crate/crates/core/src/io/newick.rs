use std::collections::HashMap;
use std::fmt::Write as _;

use crate::cluster::Cluster;
use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, MergeTrace, VertexId};
use crate::ultrametric::Dendrogram;

fn quote(label: &str) -> String {
    let plain = !label.is_empty()
        && !label
            .chars()
            .any(|c| c.is_whitespace() || "()[]':;,".contains(c));
    if plain {
        label.to_owned()
    } else {
        format!("'{}'", label.replace('\'', "''"))
    }
}

fn write_tree(
    h: &Hierarchy,
    labels: &[String],
    name: impl Fn(VertexId) -> Option<String>,
    height: impl Fn(VertexId) -> Option<f64>,
) -> String {
    assert_eq!(labels.len(), h.k(), "one label per item");
    let mut out = String::new();
    let suffix = |out: &mut String, v: VertexId| {
        if let Some(n) = name(v) {
            out.push_str(&quote(&n));
        }
        if let Some(x) = height(v) {
            write!(out, "[&height={x}]").unwrap();
        }
    };
    // (vertex, index of the next child to emit)
    let mut stack = vec![(h.root(), 0usize)];
    while let Some((v, next)) = stack.pop() {
        if h.is_leaf(v) {
            out.push_str(&quote(&labels[h.cluster(v).min_member()]));
            suffix(&mut out, v);
            continue;
        }
        let children = h.children(v);
        if next == children.len() {
            out.push(')');
            suffix(&mut out, v);
            continue;
        }
        out.push(if next == 0 { '(' } else { ',' });
        stack.push((v, next + 1));
        stack.push((children[next], 0));
    }
    out.push(';');
    out
}

/// Newick text with unnamed internal vertices, children in canonical order.
pub fn hierarchy_to_newick(h: &Hierarchy, labels: &[String]) -> String {
    write_tree(h, labels, |_| None, |_| None)
}

/// Newick text with internal vertices named `n<creation index>`.
pub fn trace_to_newick(t: &MergeTrace, labels: &[String]) -> String {
    let h = t.hierarchy();
    write_tree(h, labels, |v| t.creation_index(v).map(|m| format!("n{m}")), |_| None)
}

/// Newick text with every height carried as a `[&height=…]` annotation.
pub fn dendrogram_to_newick(d: &Dendrogram, labels: &[String]) -> String {
    write_tree(d.hierarchy(), labels, |_| None, |v| d.height(v))
}

/// A parsed Newick tree: its hierarchy and any `[&height=…]` annotations,
/// indexed by vertex.
#[derive(Clone, Debug)]
pub struct ParsedNewick {
    pub hierarchy: Hierarchy,
    pub heights: Vec<Option<f64>>,
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Newick {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<u8> {
        self.text.as_bytes().get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        if self.eat(b) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", b as char))
        }
    }

    fn name(&mut self) -> Result<String> {
        self.skip_ws();
        if self.peek() == Some(b'\'') {
            self.pos += 1;
            let mut out = String::new();
            loop {
                let rest = &self.text[self.pos..];
                let Some(i) = rest.find('\'') else {
                    return self.err("unterminated quoted label");
                };
                out.push_str(&rest[..i]);
                self.pos += i + 1;
                if self.peek() == Some(b'\'') {
                    out.push('\'');
                    self.pos += 1;
                } else {
                    return Ok(out);
                }
            }
        }
        let start = self.pos;
        while self.peek().is_some_and(|b| !b"()[]':;,".contains(&b)) {
            self.pos += 1;
        }
        Ok(self.text[start..self.pos].trim().to_owned())
    }

    /// Annotations and an optional branch length; returns the height, if any.
    fn suffix(&mut self) -> Result<Option<f64>> {
        let mut height = None;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'[') => {
                    let rest = &self.text[self.pos..];
                    let Some(end) = rest.find(']') else {
                        return self.err("unterminated comment");
                    };
                    let body = &rest[1..end];
                    if let Some(fields) = body.strip_prefix('&') {
                        for field in fields.split(',') {
                            if let Some(v) = field.trim().strip_prefix("height=") {
                                match v.trim().parse::<f64>() {
                                    Ok(x) => height = Some(x),
                                    Err(_) => return self.err(format!("bad height {v:?}")),
                                }
                            }
                        }
                    }
                    self.pos += end + 1;
                }
                Some(b':') => {
                    self.pos += 1;
                    self.skip_ws();
                    let start = self.pos;
                    while self
                        .peek()
                        .is_some_and(|b| b.is_ascii_digit() || b"+-.eE".contains(&b))
                    {
                        self.pos += 1;
                    }
                    if self.text[start..self.pos].parse::<f64>().is_err() {
                        return self.err("bad branch length");
                    }
                }
                _ => return Ok(height),
            }
        }
    }
}

/// Parses Newick text whose leaves are named by `labels`. Internal names
/// and branch lengths are accepted and ignored.
pub fn parse_newick(text: &str, labels: &[String]) -> Result<ParsedNewick> {
    let k = labels.len();
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut cur = Cursor { text, pos: 0 };
    // open internal vertices: members so far and child count
    let mut stack: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut internal: Vec<(Vec<usize>, Option<f64>)> = Vec::new();
    let mut leaf_heights = vec![None; k];
    let mut seen = vec![false; k];
    'node: loop {
        if cur.eat(b'(') {
            stack.push((Vec::new(), 0));
            continue;
        }
        let name = cur.name()?;
        if name.is_empty() {
            return cur.err("expected a leaf label");
        }
        let Some(&item) = index.get(name.as_str()) else {
            return Err(Error::UnknownLabel(name));
        };
        if seen[item] {
            return cur.err(format!("leaf {name:?} appears twice"));
        }
        seen[item] = true;
        leaf_heights[item] = cur.suffix()?;
        let mut finished = vec![item];
        loop {
            let Some(top) = stack.last_mut() else {
                cur.expect(b';')?;
                break 'node;
            };
            top.0.extend(finished);
            top.1 += 1;
            if cur.eat(b',') {
                continue 'node;
            }
            cur.expect(b')')?;
            let (members, arity) = stack.pop().expect("stack is non-empty");
            if arity < 2 {
                return cur.err("internal vertex with a single child");
            }
            cur.name()?;
            internal.push((members.clone(), cur.suffix()?));
            finished = members;
        }
    }
    cur.skip_ws();
    if cur.pos != text.len() {
        return cur.err("trailing text after ';'");
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Parse(format!("leaf {:?} is missing from the tree", labels[missing])));
    }
    let clusters = internal
        .iter()
        .map(|(m, _)| Cluster::from_indices(k, m.iter().copied()))
        .collect::<Result<Vec<_>>>()?;
    let hierarchy = Hierarchy::from_clusters(k, clusters.iter().cloned())?;
    let mut heights = vec![None; hierarchy.len()];
    for (c, (_, h)) in clusters.iter().zip(&internal) {
        heights[hierarchy.vertex_of(c).expect("cluster is a vertex")] = *h;
    }
    for (item, h) in leaf_heights.into_iter().enumerate() {
        if h.is_some() {
            heights[hierarchy.leaf(item)] = h;
        }
    }
    Ok(ParsedNewick { hierarchy, heights })
}
