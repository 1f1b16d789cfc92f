//! A small recursive-descent reader for the DOT subset: one digraph of node,
//! edge, attribute and `a=b` statements, each `;`-terminated.
#![allow(dead_code)]

use std::collections::BTreeMap;

pub type Attrs = BTreeMap<String, String>;

#[derive(Debug, Default, PartialEq)]
pub struct Graph {
    pub name: String,
    pub settings: Vec<(String, String)>,
    pub defaults: Vec<(String, Attrs)>,
    pub nodes: Vec<(String, Attrs)>,
    pub edges: Vec<(String, String, Attrs)>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Quoted(String),
    Sym(&'static str),
}

fn lex(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '{' | '}' | '[' | ']' | ';' | ',' | '=' => {
                out.push(Tok::Sym(match c {
                    '{' => "{",
                    '}' => "}",
                    '[' => "[",
                    ']' => "]",
                    ';' => ";",
                    ',' => ",",
                    _ => "=",
                }));
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push(Tok::Sym("->"));
                i += 2;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err("unterminated string".into()),
                        Some('"') => break,
                        Some('\\') => {
                            let next = *chars.get(i + 1).ok_or("dangling escape")?;
                            if next != '"' && next != '\\' {
                                return Err(format!("unexpected escape \\{next}"));
                            }
                            s.push(next);
                            i += 2;
                        }
                        Some(&ch) => {
                            if ch == '\n' {
                                return Err("newline in string".into());
                            }
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                i += 1;
                out.push(Tok::Quoted(s));
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Id(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character {other:?}")),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at)
    }
    fn next(&mut self) -> Result<Tok, String> {
        let t = self.toks.get(self.at).cloned().ok_or("unexpected end")?;
        self.at += 1;
        Ok(t)
    }
    fn sym(&mut self, s: &str) -> Result<(), String> {
        match self.next()? {
            Tok::Sym(x) if x == s => Ok(()),
            t => Err(format!("expected {s}, found {t:?}")),
        }
    }
    fn id(&mut self) -> Result<String, String> {
        match self.next()? {
            Tok::Id(s) | Tok::Quoted(s) => Ok(s),
            t => Err(format!("expected id, found {t:?}")),
        }
    }
    fn attrs(&mut self) -> Result<Attrs, String> {
        self.sym("[")?;
        let mut a = Attrs::new();
        loop {
            if self.peek() == Some(&Tok::Sym("]")) {
                self.at += 1;
                return Ok(a);
            }
            let k = self.id()?;
            self.sym("=")?;
            let v = self.id()?;
            if a.insert(k.clone(), v).is_some() {
                return Err(format!("duplicate attribute {k}"));
            }
            if self.peek() == Some(&Tok::Sym(",")) {
                self.at += 1;
            }
        }
    }
}

pub fn parse(src: &str) -> Result<Graph, String> {
    let mut p = Parser { toks: lex(src)?, at: 0 };
    match p.next()? {
        Tok::Id(k) if k == "digraph" => {}
        t => return Err(format!("expected digraph, found {t:?}")),
    }
    let mut g = Graph { name: p.id()?, ..Default::default() };
    p.sym("{")?;
    loop {
        if p.peek() == Some(&Tok::Sym("}")) {
            p.at += 1;
            break;
        }
        let first = p.next()?;
        match (&first, p.peek()) {
            (Tok::Id(k), Some(Tok::Sym("["))) if ["graph", "node", "edge"].contains(&k.as_str()) => {
                let a = p.attrs()?;
                g.defaults.push((k.clone(), a));
            }
            (Tok::Id(k), Some(Tok::Sym("="))) => {
                p.at += 1;
                let v = p.id()?;
                g.settings.push((k.clone(), v));
            }
            (Tok::Id(s) | Tok::Quoted(s), Some(Tok::Sym("->"))) => {
                p.at += 1;
                let to = p.id()?;
                let a = if p.peek() == Some(&Tok::Sym("[")) { p.attrs()? } else { Attrs::new() };
                g.edges.push((s.clone(), to, a));
            }
            (Tok::Id(s) | Tok::Quoted(s), _) => {
                let a = if p.peek() == Some(&Tok::Sym("[")) { p.attrs()? } else { Attrs::new() };
                g.nodes.push((s.clone(), a));
            }
            (t, _) => return Err(format!("unexpected statement start {t:?}")),
        }
        p.sym(";")?;
    }
    if p.at != p.toks.len() {
        return Err("tokens after closing brace".into());
    }
    Ok(g)
}
