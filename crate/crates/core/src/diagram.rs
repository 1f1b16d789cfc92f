//! DOT rendering of a concept neighborhood.
//!
//! The document lays the graph out left to right. The browsed concept is the
//! only yellow node and every is-a edge is red. Nodes are keyed by concept id
//! and labelled with preferred terms.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::process::{Command, Stdio};

use thiserror::Error;

use crate::id::ConceptId;
use crate::query::{Neighborhood, NeighborhoodEdge};

/// One complete `digraph` in DOT syntax.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DotDocument(String);

impl DotDocument {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl AsRef<str> for DotDocument {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Escapes a string for use inside a double-quoted DOT id.
pub fn escape_label(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        if matches!(ch, '"' | '\\') {
            out.push('\\');
        }
        out.push(ch);
    }
    out
}

fn edge_line(out: &mut String, from: ConceptId, to: ConceptId, edge: &NeighborhoodEdge) {
    let _ = write!(out, "  \"{from}\" -> \"{to}\" [label=\"{}\"", escape_label(&edge.type_term));
    if edge.is_hierarchy {
        out.push_str(", color=red");
    }
    out.push_str("];\n");
}

pub fn neighborhood_diagram(n: &Neighborhood) -> DotDocument {
    let center = n.concept_id;
    let mut out = String::new();
    let _ = writeln!(out, "digraph concept_{center} {{");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=box, style=filled, fillcolor=white];\n");
    let _ = writeln!(
        out,
        "  \"{center}\" [label=\"{}\", fillcolor=yellow];",
        escape_label(&n.preferred_term)
    );

    let others: BTreeMap<ConceptId, &str> = n
        .outbound
        .iter()
        .chain(&n.inbound)
        .filter(|e| e.other_id != center)
        .map(|e| (e.other_id, e.other_term.as_str()))
        .collect();
    for (id, term) in others {
        let _ = writeln!(out, "  \"{id}\" [label=\"{}\"];", escape_label(term));
    }

    for e in &n.outbound {
        edge_line(&mut out, center, e.other_id, e);
    }
    for e in &n.inbound {
        edge_line(&mut out, e.other_id, center, e);
    }
    out.push_str("}\n");
    DotDocument(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImageFormat {
    Svg,
    Png,
}

impl ImageFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            ImageFormat::Svg => "svg",
            ImageFormat::Png => "png",
        }
    }
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("renderer {path} is unavailable: {source}")]
    RendererUnavailable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("renderer exited with {status}: {stderr}")]
    RendererFailed { status: String, stderr: String },
}

/// Runs `<renderer> -T<format>` with the document on stdin and returns its
/// stdout untouched.
pub fn render_external(dot: &DotDocument, format: ImageFormat, renderer: &Path) -> Result<Vec<u8>, RenderError> {
    let unavailable = |source| RenderError::RendererUnavailable { path: renderer.display().to_string(), source };
    if !renderer.is_file() {
        return Err(unavailable(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            "no such file",
        )));
    }
    let mut child = Command::new(renderer)
        .arg(format!("-T{}", format.as_str()))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(unavailable)?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = dot.as_str().as_bytes().to_vec();
    // Feed stdin from a separate thread so a renderer that writes before
    // draining its input cannot deadlock against us.
    let feeder = std::thread::spawn(move || {
        // A renderer that exits early closes the pipe; its status reports that.
        let _ = stdin.write_all(&input);
    });
    let output = child.wait_with_output().map_err(unavailable)?;
    let _ = feeder.join();

    if !output.status.success() {
        return Err(RenderError::RendererFailed {
            status: output.status.to_string(),
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }
    Ok(output.stdout)
}
