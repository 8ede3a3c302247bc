//! Line-oriented flow and scenario files.
//!
//! ```text
//! flow cache
//! states: Init Wait GntW Done
//! initial: Init
//! stop: Done
//! atomic: GntW
//! msg ReqE 1 route Cache Dir
//! msg dmusiidata 20 subgroup cputhreadid 6
//! edge Init ReqE Wait
//! ```
//!
//! `#` starts a comment. State lists may span several lines and may use
//! commas as separators.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{read_file, IoError, Result};
use crate::flow::{validate_flow, EdgeSpec, Flow, FlowSpec, MessageDef};
use crate::selection::{Scenario, ScenarioFlow};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        let sep = c.is_whitespace() || c == ',';
        match (sep, start) {
            (true, Some(s)) => {
                out.push(Token {
                    text: &line[s..i],
                    column: line[..s].chars().count() + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: line[..s].chars().count() + 1,
        });
    }
    out
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> IoError {
    IoError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn width(line: usize, tok: &Token<'_>) -> Result<u32> {
    match tok.text.parse::<u32>() {
        Ok(w) if w >= 1 => Ok(w),
        _ => Err(syntax(
            line,
            tok.column,
            format!("width must be a positive integer, got `{}`", tok.text),
        )),
    }
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(head, _)| head)
}

/// Parse and validate a flow from text. `default_name` is used when the
/// text has no `flow` line.
pub fn parse_flow_str(text: &str, default_name: &str) -> Result<Flow> {
    let mut spec = FlowSpec::new(default_name);
    let mut edge_lines = Vec::new();
    let mut state_lines: Vec<(usize, usize, String, &'static str)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let toks = tokenize(strip_comment(raw));
        let Some(head) = toks.first() else { continue };
        let rest = &toks[1..];
        match head.text {
            "flow" => match rest {
                [name] => spec.name = name.text.to_string(),
                _ => return Err(syntax(line, head.column, "expected `flow <name>`")),
            },
            "states:" => spec.states.extend(rest.iter().map(|t| t.text.to_string())),
            "initial:" | "stop:" | "atomic:" => {
                let section = match head.text {
                    "initial:" => "initial",
                    "stop:" => "stop",
                    _ => "atomic",
                };
                for t in rest {
                    state_lines.push((line, t.column, t.text.to_string(), section));
                }
            }
            "msg" => {
                let [name, w, tail @ ..] = rest else {
                    return Err(syntax(line, head.column, "expected `msg <name> <width>`"));
                };
                if spec.messages.iter().any(|m| m.name == name.text) {
                    return Err(IoError::DuplicateMessageName {
                        line,
                        name: name.text.to_string(),
                    });
                }
                let mut msg = MessageDef::new(name.text, width(line, w)?);
                let mut tail = tail;
                while let Some(kw) = tail.first() {
                    match (kw.text, &tail[1..]) {
                        ("subgroup", [sub, sw, more @ ..]) => {
                            let sw_val = width(line, sw)?;
                            if sw_val >= msg.width {
                                return Err(syntax(
                                    line,
                                    sw.column,
                                    format!("subgroup width {sw_val} must be below {}", msg.width),
                                ));
                            }
                            if msg.subgroups.iter().any(|s| s.name == sub.text) {
                                return Err(syntax(
                                    line,
                                    sub.column,
                                    format!("subgroup `{}` declared twice", sub.text),
                                ));
                            }
                            msg = msg.with_subgroup(sub.text, sw_val);
                            tail = more;
                        }
                        ("route", [src, dst, more @ ..]) if msg.route.is_none() => {
                            msg = msg.with_route(src.text, dst.text);
                            tail = more;
                        }
                        _ => {
                            return Err(syntax(
                                line,
                                kw.column,
                                format!("unexpected `{}` in message declaration", kw.text),
                            ))
                        }
                    }
                }
                spec.messages.push(msg);
            }
            "edge" => match rest {
                [src, msg, dst] => edge_lines.push((line, src.text, msg.text, dst.text)),
                _ => return Err(syntax(line, head.column, "expected `edge <src> <msg> <dst>`")),
            },
            other => return Err(syntax(line, head.column, format!("unknown directive `{other}`"))),
        }
    }

    let declared: HashSet<&str> = spec.states.iter().map(String::as_str).collect();
    for (line, _, name, section) in &state_lines {
        if !declared.contains(name.as_str()) {
            return Err(IoError::UnknownState {
                line: *line,
                name: name.clone(),
            });
        }
        let target = match *section {
            "initial" => &mut spec.initial,
            "stop" => &mut spec.stop,
            _ => &mut spec.atomic,
        };
        target.push(name.clone());
    }
    for (line, src, msg, dst) in edge_lines {
        for s in [src, dst] {
            if !declared.contains(s) {
                return Err(IoError::UnknownState {
                    line,
                    name: s.to_string(),
                });
            }
        }
        if !spec.messages.iter().any(|m| m.name == msg) {
            return Err(IoError::UnknownMessage {
                line,
                name: msg.to_string(),
            });
        }
        spec.edges.push(EdgeSpec {
            src: src.into(),
            message: msg.into(),
            dst: dst.into(),
        });
    }
    Ok(validate_flow(spec)?)
}

pub fn parse_flow_file(path: impl AsRef<Path>) -> Result<Flow> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|e| {
        syntax(1, 1, format!("file is not valid UTF-8 (byte {})", e.utf8_error().valid_up_to()))
    })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("flow");
    parse_flow_str(&text, stem)
}

/// Raw scenario file contents: flow files with instance counts plus the
/// buffer width.
///
/// ```text
/// buffer_width 2
/// flow cache.flow 2
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSpec {
    pub flows: Vec<(PathBuf, u32)>,
    pub buffer_width: u32,
}

pub fn parse_scenario_str(text: &str) -> Result<ScenarioSpec> {
    let mut flows = Vec::new();
    let mut buffer_width = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let toks = tokenize(strip_comment(raw));
        let Some(head) = toks.first() else { continue };
        match (head.text, &toks[1..]) {
            ("buffer_width", [w]) => buffer_width = Some(width(line, w)?),
            ("flow", [path]) => flows.push((PathBuf::from(path.text), 1)),
            ("flow", [path, count]) => match count.text.parse::<u32>() {
                Ok(n) if n >= 1 => flows.push((PathBuf::from(path.text), n)),
                _ => {
                    return Err(syntax(
                        line,
                        count.column,
                        format!("instance count must be a positive integer, got `{}`", count.text),
                    ))
                }
            },
            _ => {
                return Err(syntax(
                    line,
                    head.column,
                    "expected `buffer_width <bits>` or `flow <file> [instances]`",
                ))
            }
        }
    }
    let buffer_width = buffer_width.ok_or_else(|| syntax(1, 1, "missing `buffer_width`"))?;
    if flows.is_empty() {
        return Err(syntax(1, 1, "scenario lists no flows"));
    }
    Ok(ScenarioSpec { flows, buffer_width })
}

/// Load a scenario and every flow it references; flow paths are relative to
/// the scenario file.
pub fn parse_scenario_file(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = String::from_utf8(read_file(path)?)
        .map_err(|_| syntax(1, 1, "file is not valid UTF-8"))?;
    let spec = parse_scenario_str(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut flows = Vec::new();
    for (file, instances) in spec.flows {
        let flow = Arc::new(parse_flow_file(base.join(file))?);
        flows.push(ScenarioFlow { flow, instances });
    }
    Ok(Scenario {
        flows,
        buffer_width: spec.buffer_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowError;

    const TOY: &str = "\
# exclusive line access
flow cache
states: Init, Wait, GntW, Done
initial: Init
stop: Done
atomic: GntW
msg ReqE 1 route Cache Dir
msg GntE 1 route Dir Cache
msg Ack 1 route Cache Dir
edge Init ReqE Wait
edge Wait GntE GntW
edge GntW Ack Done
";

    #[test]
    fn toy_flow_parses() {
        let flow = parse_flow_str(TOY, "x").unwrap();
        assert_eq!(flow.name(), "cache");
        assert_eq!(flow.state_count(), 4);
        assert_eq!(flow.messages().len(), 3);
        assert_eq!(flow.messages()[0].route, Some(("Cache".into(), "Dir".into())));
    }

    #[test]
    fn zero_width_is_syntax_error() {
        let text = TOY.replace("msg Ack 1", "msg Ack 0");
        assert!(matches!(
            parse_flow_str(&text, "x"),
            Err(IoError::Syntax { line: 9, column: 9, .. })
        ));
    }

    #[test]
    fn subgroups_parse() {
        let text = "states: A B\ninitial: A\nstop: B\nmsg dmusiidata 20 subgroup cputhreadid 6\nedge A dmusiidata B\n";
        let flow = parse_flow_str(text, "ncu").unwrap();
        assert_eq!(flow.name(), "ncu");
        let m = &flow.messages()[0];
        assert_eq!(m.subgroups.len(), 1);
        assert_eq!((m.subgroups[0].name.as_str(), m.subgroups[0].width), ("cputhreadid", 6));
        let bad = text.replace("cputhreadid 6", "cputhreadid 20");
        assert!(matches!(parse_flow_str(&bad, "x"), Err(IoError::Syntax { line: 4, .. })));
    }

    #[test]
    fn reference_errors() {
        let text = TOY.replace("edge GntW Ack Done", "edge GntW Ack Finished");
        assert!(matches!(
            parse_flow_str(&text, "x"),
            Err(IoError::UnknownState { line: 12, .. })
        ));
        let text = TOY.replace("edge GntW Ack Done", "edge GntW Nak Done");
        assert!(matches!(parse_flow_str(&text, "x"), Err(IoError::UnknownMessage { .. })));
        let text = TOY.replace("msg Ack 1", "msg GntE 1");
        assert!(matches!(
            parse_flow_str(&text, "x"),
            Err(IoError::DuplicateMessageName { line: 9, .. })
        ));
        let text = TOY.replace("stop: Done", "stop: Done\natomic: Done");
        assert!(matches!(
            parse_flow_str(&text, "x"),
            Err(IoError::Flow(FlowError::StopAtomicOverlap { .. }))
        ));
    }

    #[test]
    fn scenario_parses() {
        let spec = parse_scenario_str("buffer_width 32\nflow a.flow 2\nflow b.flow\n").unwrap();
        assert_eq!(spec.buffer_width, 32);
        assert_eq!(spec.flows, [(PathBuf::from("a.flow"), 2), (PathBuf::from("b.flow"), 1)]);
        assert!(parse_scenario_str("flow a.flow 0\nbuffer_width 2").is_err());
        assert!(parse_scenario_str("flow a.flow\n").is_err());
    }
}
