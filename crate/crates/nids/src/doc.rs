//! Document text layer: a small JSON-compatible reader and a canonical
//! writer. The reader tracks line/column for every value so schema errors
//! can point at the offending spot; the writer emits a single normal form
//! (sorted keys, two-space indent, numbers rounded to 12 significant
//! digits) so equal documents always serialize to identical bytes.

use crate::{canon_float, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
pub struct Val {
    pub pos: Pos,
    pub kind: ValKind,
}

#[derive(Debug, Clone)]
pub enum ValKind {
    Bool(bool),
    Num(f64),
    Str(String),
    Arr(Vec<Val>),
    /// Key, position of the key, value. Declaration order is preserved.
    Obj(Vec<(String, Pos, Val)>),
}

impl Val {
    pub fn type_name(&self) -> &'static str {
        match self.kind {
            ValKind::Bool(_) => "boolean",
            ValKind::Num(_) => "number",
            ValKind::Str(_) => "string",
            ValKind::Arr(_) => "array",
            ValKind::Obj(_) => "object",
        }
    }
}

// ==== reading ====

struct Reader {
    chars: Vec<char>,
    i: usize,
    line: usize,
    col: usize,
}

pub fn parse_text(text: &str) -> Result<Val> {
    let mut r = Reader {
        chars: text.chars().collect(),
        i: 0,
        line: 1,
        col: 1,
    };
    r.skip_ws();
    if r.peek().is_none() {
        return Err(r.fail("empty document"));
    }
    let v = r.value()?;
    r.skip_ws();
    if let Some(c) = r.peek() {
        return Err(r.fail(&format!("unexpected trailing {c:?} after the document")));
    }
    Ok(v)
}

impl Reader {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn fail(&self, msg: &str) -> Error {
        Error::Syntax {
            line: self.line,
            col: self.col,
            msg: msg.to_string(),
        }
    }

    fn fail_at(&self, pos: Pos, msg: &str) -> Error {
        Error::Syntax {
            line: pos.line,
            col: pos.col,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\n' | '\r')) {
            self.bump();
        }
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.fail(&format!("expected {want:?}, found {c:?}"))),
            None => Err(self.fail(&format!("expected {want:?}, found end of input"))),
        }
    }

    fn value(&mut self) -> Result<Val> {
        let pos = self.pos();
        match self.peek() {
            Some('{') => self.object(pos),
            Some('[') => self.array(pos),
            Some('"') => {
                let s = self.string()?;
                Ok(Val {
                    pos,
                    kind: ValKind::Str(s),
                })
            }
            Some(c) if c == '-' || c.is_ascii_digit() => self.number(pos),
            Some(c) if c.is_ascii_alphabetic() => {
                let word = self.word();
                match word.as_str() {
                    "true" => Ok(Val {
                        pos,
                        kind: ValKind::Bool(true),
                    }),
                    "false" => Ok(Val {
                        pos,
                        kind: ValKind::Bool(false),
                    }),
                    _ => Err(self.fail_at(pos, &format!("unexpected token {word:?}"))),
                }
            }
            Some(c) => Err(self.fail(&format!("unexpected {c:?}"))),
            None => Err(self.fail("unexpected end of input")),
        }
    }

    fn word(&mut self) -> String {
        let mut w = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                w.push(c);
                self.bump();
            } else {
                break;
            }
        }
        w
    }

    fn object(&mut self, pos: Pos) -> Result<Val> {
        self.expect('{')?;
        let mut entries: Vec<(String, Pos, Val)> = Vec::new();
        self.skip_ws();
        if self.peek() == Some('}') {
            self.bump();
            return Ok(Val {
                pos,
                kind: ValKind::Obj(entries),
            });
        }
        loop {
            self.skip_ws();
            let key_pos = self.pos();
            if self.peek() != Some('"') {
                return Err(self.fail("expected a quoted key"));
            }
            let key = self.string()?;
            if entries.iter().any(|(k, _, _)| *k == key) {
                return Err(self.fail_at(key_pos, &format!("duplicate key {key:?}")));
            }
            self.skip_ws();
            self.expect(':')?;
            self.skip_ws();
            let val = self.value()?;
            entries.push((key, key_pos, val));
            self.skip_ws();
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                Some('}') => {
                    self.bump();
                    return Ok(Val {
                        pos,
                        kind: ValKind::Obj(entries),
                    });
                }
                Some(c) => return Err(self.fail(&format!("expected ',' or '}}', found {c:?}"))),
                None => return Err(self.fail("unterminated object")),
            }
        }
    }

    fn array(&mut self, pos: Pos) -> Result<Val> {
        self.expect('[')?;
        let mut items = Vec::new();
        self.skip_ws();
        if self.peek() == Some(']') {
            self.bump();
            return Ok(Val {
                pos,
                kind: ValKind::Arr(items),
            });
        }
        loop {
            self.skip_ws();
            items.push(self.value()?);
            self.skip_ws();
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                Some(']') => {
                    self.bump();
                    return Ok(Val {
                        pos,
                        kind: ValKind::Arr(items),
                    });
                }
                Some(c) => return Err(self.fail(&format!("expected ',' or ']', found {c:?}"))),
                None => return Err(self.fail("unterminated array")),
            }
        }
    }

    fn string(&mut self) -> Result<String> {
        self.expect('"')?;
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(self.fail("unterminated string")),
                Some('"') => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    Some('/') => s.push('/'),
                    Some('b') => s.push('\u{8}'),
                    Some('f') => s.push('\u{c}'),
                    Some('n') => s.push('\n'),
                    Some('r') => s.push('\r'),
                    Some('t') => s.push('\t'),
                    Some('u') => {
                        let mut code = 0u32;
                        for _ in 0..4 {
                            let d = self
                                .bump()
                                .and_then(|c| c.to_digit(16))
                                .ok_or_else(|| self.fail("expected four hex digits after \\u"))?;
                            code = code * 16 + d;
                        }
                        let c = char::from_u32(code)
                            .ok_or_else(|| self.fail("escape is not a valid character"))?;
                        s.push(c);
                    }
                    Some(c) => return Err(self.fail(&format!("unknown escape \\{c}"))),
                    None => return Err(self.fail("unterminated string")),
                },
                Some(c) if (c as u32) < 0x20 => {
                    return Err(self.fail("raw control character in string"))
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn number(&mut self, pos: Pos) -> Result<Val> {
        let mut text = String::new();
        if self.peek() == Some('-') {
            text.push('-');
            self.bump();
        }
        let digits = |text: &mut String, this: &mut Self| {
            let mut any = false;
            while let Some(c) = this.peek() {
                if c.is_ascii_digit() {
                    text.push(c);
                    this.bump();
                    any = true;
                } else {
                    break;
                }
            }
            any
        };
        if !digits(&mut text, self) {
            return Err(self.fail("expected a digit"));
        }
        if self.peek() == Some('.') {
            text.push('.');
            self.bump();
            if !digits(&mut text, self) {
                return Err(self.fail("expected a digit after the decimal point"));
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            text.push('e');
            self.bump();
            if matches!(self.peek(), Some('+' | '-')) {
                text.push(self.bump().unwrap());
            }
            if !digits(&mut text, self) {
                return Err(self.fail("expected a digit in the exponent"));
            }
        }
        let v: f64 = text
            .parse()
            .map_err(|_| self.fail_at(pos, &format!("bad number {text:?}")))?;
        if !v.is_finite() {
            return Err(self.fail_at(pos, &format!("number {text:?} overflows")));
        }
        Ok(Val {
            pos,
            kind: ValKind::Num(v),
        })
    }
}

// ==== writing ====

/// Build form for the writer. Objects sort their keys, so insertion order
/// never leaks into the output.
#[derive(Debug, Clone)]
pub enum Out {
    Bool(bool),
    Num(f64),
    Str(String),
    Arr(Vec<Out>),
    Obj(Vec<(String, Out)>),
}

impl Out {
    pub fn str(s: &str) -> Out {
        Out::Str(s.to_string())
    }

    pub fn strings<S: AsRef<str>>(items: &[S]) -> Out {
        Out::Arr(items.iter().map(|s| Out::str(s.as_ref())).collect())
    }
}

/// Width under which a collection is printed on one line.
const INLINE_BUDGET: usize = 100;

pub fn emit(v: &Out) -> String {
    let mut s = String::new();
    write_val(&mut s, v, 0);
    s.push('\n');
    s
}

fn write_val(s: &mut String, v: &Out, indent: usize) {
    if let Some(w) = inline_len(v, INLINE_BUDGET) {
        debug_assert!(w <= INLINE_BUDGET);
        write_inline(s, v);
        return;
    }
    match v {
        Out::Arr(items) => {
            s.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                s.push('\n');
                push_indent(s, indent + 1);
                write_val(s, item, indent + 1);
            }
            s.push('\n');
            push_indent(s, indent);
            s.push(']');
        }
        Out::Obj(entries) => {
            let mut sorted: Vec<&(String, Out)> = entries.iter().collect();
            sorted.sort_by(|a, b| a.0.cmp(&b.0));
            s.push('{');
            for (i, (k, val)) in sorted.iter().map(|e| (&e.0, &e.1)).enumerate() {
                if i > 0 {
                    s.push(',');
                }
                s.push('\n');
                push_indent(s, indent + 1);
                write_string(s, k);
                s.push_str(": ");
                write_val(s, val, indent + 1);
            }
            s.push('\n');
            push_indent(s, indent);
            s.push('}');
        }
        _ => write_inline(s, v),
    }
}

fn push_indent(s: &mut String, indent: usize) {
    for _ in 0..indent {
        s.push_str("  ");
    }
}

fn write_inline(s: &mut String, v: &Out) {
    match v {
        Out::Bool(b) => s.push_str(if *b { "true" } else { "false" }),
        Out::Num(n) => s.push_str(&canon_float(*n)),
        Out::Str(t) => write_string(s, t),
        Out::Arr(items) => {
            s.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                write_inline(s, item);
            }
            s.push(']');
        }
        Out::Obj(entries) => {
            let mut sorted: Vec<&(String, Out)> = entries.iter().collect();
            sorted.sort_by(|a, b| a.0.cmp(&b.0));
            s.push('{');
            for (i, (k, val)) in sorted.iter().map(|e| (&e.0, &e.1)).enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                write_string(s, k);
                s.push_str(": ");
                write_inline(s, val);
            }
            s.push('}');
        }
    }
}

fn write_string(s: &mut String, t: &str) {
    s.push('"');
    for c in t.chars() {
        match c {
            '"' => s.push_str("\\\""),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            '\r' => s.push_str("\\r"),
            '\t' => s.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                s.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => s.push(c),
        }
    }
    s.push('"');
}

/// Inline width of `v`, or None once it exceeds `budget`.
fn inline_len(v: &Out, budget: usize) -> Option<usize> {
    let w = match v {
        Out::Bool(b) => {
            if *b {
                4
            } else {
                5
            }
        }
        Out::Num(n) => canon_float(*n).chars().count(),
        Out::Str(t) => string_len(t),
        Out::Arr(items) => {
            let mut w = 2;
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    w += 2;
                }
                w += inline_len(item, budget.checked_sub(w)?)?;
            }
            w
        }
        Out::Obj(entries) => {
            let mut w = 2;
            for (i, (k, val)) in entries.iter().enumerate() {
                if i > 0 {
                    w += 2;
                }
                w += string_len(k) + 2;
                w += inline_len(val, budget.checked_sub(w)?)?;
            }
            w
        }
    };
    if w <= budget {
        Some(w)
    } else {
        None
    }
}

fn string_len(t: &str) -> usize {
    let mut w = 2;
    for c in t.chars() {
        w += match c {
            '"' | '\\' | '\n' | '\r' | '\t' => 2,
            c if (c as u32) < 0x20 => 6,
            _ => 1,
        };
    }
    w
}
