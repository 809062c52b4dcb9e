//! Graphviz DOT export and import.
//!
//! The header comments carry what is needed to rebuild the program context:
//!
//! ```text
//! // formatVersion=1
//! // iset=simple
//! // registers=8
//! // actions=7
//! // sources=f64[2]
//! digraph tpg {
//!   T0 [shape=ellipse];
//!   A3 [shape=box];
//!   T0 -> A3 [label="i0d0$1:0,0:3;i2d1$0:0,0:1;"];
//! }
//! ```
//!
//! Each program line is written `i<instruction>d<destination>$<source>:<location>,...;`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::data::{Address, SourceDescriptor, SourceLayout};
use crate::graph::{TeamId, TpgGraph, Vertex};
use crate::instructions::InstructionSetRegistry;
use crate::program::{validate_program, Line, Program, ProgramContext};

use super::FORMAT_VERSION;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct DotError {
    pub line: usize,
    pub message: String,
}

fn fail<T>(line: usize, message: impl Into<String>) -> Result<T, DotError> {
    Err(DotError {
        line,
        message: message.into(),
    })
}

pub fn program_label(program: &Program) -> String {
    let mut out = String::new();
    for line in program.lines() {
        write!(out, "i{}d{}$", line.instruction, line.destination).unwrap();
        for (i, a) in line.operands.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{}:{}", a.source, a.location).unwrap();
        }
        out.push(';');
    }
    out
}

pub fn parse_program_label(label: &str) -> Result<Program, String> {
    let number = |s: &str, what: &str| s.parse::<usize>().map_err(|_| format!("bad {what} `{s}`"));
    let mut lines = Vec::new();
    let Some(body) = label.strip_suffix(';').or(if label.is_empty() { Some("") } else { None }) else {
        return Err("program must end with `;`".into());
    };
    if body.is_empty() {
        return Ok(Program::default());
    }
    for text in body.split(';') {
        let rest = text.strip_prefix('i').ok_or_else(|| format!("line `{text}` must start with `i`"))?;
        let (instruction, rest) = rest.split_once('d').ok_or_else(|| format!("line `{text}` lacks `d`"))?;
        let (destination, operands) = rest.split_once('$').ok_or_else(|| format!("line `{text}` lacks `$`"))?;
        let operands = operands
            .split(',')
            .map(|op| {
                let (s, l) = op.split_once(':').ok_or_else(|| format!("bad operand `{op}`"))?;
                Ok(Address::new(number(s, "source")?, number(l, "location")?))
            })
            .collect::<Result<Vec<_>, String>>()?;
        lines.push(Line::new(
            number(instruction, "instruction index")?,
            number(destination, "register")?,
            operands,
        ));
    }
    Ok(Program::new(lines))
}

fn vertex_name(v: Vertex) -> String {
    match v {
        Vertex::Team(t) => format!("T{}", t.0),
        Vertex::Action(a) => format!("A{a}"),
    }
}

/// Canonical, byte-deterministic DOT text for `graph`.
pub fn export_dot(graph: &TpgGraph) -> String {
    let ctx = graph.context();
    let layout = ctx.layout();
    let sources: Vec<String> = layout.environment().iter().map(SourceDescriptor::layout_token).collect();
    let mut out = String::new();
    writeln!(out, "// formatVersion={FORMAT_VERSION}").unwrap();
    writeln!(out, "// iset={}", ctx.instruction_set().name()).unwrap();
    writeln!(out, "// registers={}", layout.register_count()).unwrap();
    writeln!(out, "// actions={}", graph.action_count()).unwrap();
    writeln!(out, "// sources={}", sources.join(" ")).unwrap();
    out.push_str("digraph tpg {\n");
    for team in graph.teams() {
        writeln!(out, "  T{} [shape=ellipse];", team.id().0).unwrap();
    }
    let actions: BTreeSet<usize> = graph
        .edges()
        .filter_map(|e| match e.destination() {
            Vertex::Action(a) => Some(a),
            Vertex::Team(_) => None,
        })
        .collect();
    for a in actions {
        writeln!(out, "  A{a} [shape=box];").unwrap();
    }
    for edge in graph.edges() {
        writeln!(
            out,
            "  T{} -> {} [label=\"{}\"];",
            edge.source().0,
            vertex_name(edge.destination()),
            program_label(&edge.program)
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

fn parse_vertex(token: &str, line: usize) -> Result<Vertex, DotError> {
    let parsed = if let Some(id) = token.strip_prefix('T') {
        id.parse().ok().map(|id| Vertex::Team(TeamId(id)))
    } else if let Some(id) = token.strip_prefix('A') {
        id.parse().ok().map(Vertex::Action)
    } else {
        None
    };
    parsed.map_or_else(|| fail(line, format!("bad vertex name `{token}`")), Ok)
}

/// Splits `name [attrs];` into the name and the attribute text.
fn split_statement(text: &str, line: usize) -> Result<(&str, &str), DotError> {
    let Some(text) = text.strip_suffix(';') else {
        return fail(line, "statement must end with `;`");
    };
    match text.split_once('[') {
        Some((head, attrs)) => match attrs.strip_suffix(']') {
            Some(attrs) => Ok((head.trim(), attrs.trim())),
            None => fail(line, "unterminated attribute list"),
        },
        None => Ok((text.trim(), "")),
    }
}

fn label_of(attrs: &str, line: usize) -> Result<&str, DotError> {
    let Some(rest) = attrs.strip_prefix("label=\"") else {
        return fail(line, "edge needs a `label=\"...\"` attribute");
    };
    match rest.split_once('"') {
        Some((label, "")) => Ok(label),
        _ => fail(line, "malformed label"),
    }
}

/// Rebuilds a graph from [`export_dot`] output. Instruction sets are looked up
/// by name in `isets`.
pub fn import_dot(text: &str, isets: &InstructionSetRegistry) -> Result<TpgGraph, DotError> {
    let mut header: Vec<(usize, &str, &str)> = Vec::new();
    let mut body = Vec::new();
    let mut opened = None;
    let mut closed = false;
    for (index, raw) in text.lines().enumerate() {
        let number = index + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if closed {
            return fail(number, "content after closing `}`");
        }
        if let Some(comment) = trimmed.strip_prefix("//") {
            if opened.is_none() {
                if let Some((k, v)) = comment.trim().split_once('=') {
                    header.push((number, k.trim(), v.trim()));
                }
            }
        } else if opened.is_none() {
            if trimmed != "digraph tpg {" {
                return fail(number, "expected `digraph tpg {`");
            }
            opened = Some(number);
        } else if trimmed == "}" {
            closed = true;
        } else {
            body.push((number, trimmed));
        }
    }
    let Some(open_line) = opened else {
        return fail(text.lines().count().max(1), "missing `digraph tpg {`");
    };
    if !closed {
        return fail(text.lines().count(), "missing closing `}`");
    }

    let field = |key: &str| {
        header
            .iter()
            .find(|(_, k, _)| *k == key)
            .map(|(l, _, v)| (*l, *v))
            .ok_or(DotError {
                line: open_line,
                message: format!("missing `{key}` header"),
            })
    };
    let number_field = |key: &str| -> Result<usize, DotError> {
        let (line, v) = field(key)?;
        v.parse().map_err(|_| DotError {
            line,
            message: format!("`{key}` must be a number"),
        })
    };
    let (version_line, _) = field("formatVersion")?;
    if number_field("formatVersion")? != FORMAT_VERSION as usize {
        return fail(version_line, format!("unsupported formatVersion, expected {FORMAT_VERSION}"));
    }
    let (iset_line, iset_name) = field("iset")?;
    let iset = isets.build(iset_name).map_err(|e| DotError {
        line: iset_line,
        message: e.to_string(),
    })?;
    let registers = number_field("registers")?;
    let actions = number_field("actions")?;
    let (sources_line, tokens) = field("sources")?;
    let descriptors = tokens
        .split_whitespace()
        .map(SourceDescriptor::parse_layout_token)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| DotError {
            line: sources_line,
            message: e.to_string(),
        })?;
    let ctx = ProgramContext::new(Arc::new(iset), SourceLayout::new(registers, descriptors)).map_err(|e| {
        DotError {
            line: iset_line,
            message: e.to_string(),
        }
    })?;
    let ctx = Arc::new(ctx);

    let mut graph = TpgGraph::new(ctx.clone(), actions);
    let mut team_lines = Vec::new();
    for (line, statement) in body {
        let (head, attrs) = split_statement(statement, line)?;
        if let Some((from, to)) = head.split_once("->") {
            let Vertex::Team(source) = parse_vertex(from.trim(), line)? else {
                return fail(line, "edges must leave a team");
            };
            let destination = parse_vertex(to.trim(), line)?;
            if destination == Vertex::Team(source) {
                return fail(line, "self-loop forbidden");
            }
            let program = parse_program_label(label_of(attrs, line)?).map_err(|message| DotError { line, message })?;
            if let Some(v) = validate_program(&program, &ctx, None).first() {
                return fail(line, v.to_string());
            }
            graph
                .add_edge(source, destination, program)
                .map_err(|e| DotError {
                    line,
                    message: e.to_string(),
                })?;
        } else {
            match parse_vertex(head, line)? {
                Vertex::Team(t) => {
                    if !graph.insert_team(t) {
                        return fail(line, format!("team {t} declared twice"));
                    }
                    team_lines.push((t, line));
                }
                Vertex::Action(a) if a >= actions => {
                    return fail(line, format!("action {a} out of range ({actions} actions)"));
                }
                Vertex::Action(_) => {}
            }
        }
    }
    for (team, line) in team_lines {
        let outgoing = graph.team(team).expect("inserted").outgoing().len();
        if outgoing < 2 {
            return fail(line, format!("team {team} has {outgoing} outgoing edges, at least 2 needed"));
        }
        if graph.action_edge_count(team) == 0 {
            return fail(line, format!("team {team} has no action edge"));
        }
    }
    if graph.team_count() > 0 && graph.roots().is_empty() {
        return fail(open_line, "graph has no root team");
    }
    Ok(graph)
}
