//! Line-oriented machine description format.
//!
//! ```text
//! # comment
//! states: p0:rw q0:final q1:final
//! alphabet: 0 1            # first symbol is the blank
//! initial: p0
//! tape_cells: 1
//! result_cell: 1           # optional, defaults to 1
//! transition: rw (p0,0) -> (q1,1)
//! transition: move s -> b +1
//! ```

use thiserror::Error;

use super::{Direction, RtmSpec, SpecError, StateId, StateKind, SymbolId, Transition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: unknown state `{name}`")]
    UnknownState {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("{line}:{column}: unknown symbol `{name}`")]
    UnknownSymbol {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("{line}: duplicate transition: {message}")]
    DuplicateTransition { line: usize, message: String },
    #[error("{line}: kind mismatch: {message}")]
    KindMismatch { line: usize, message: String },
    #[error("missing `{0}` declaration")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

/// A token with its 1-based column.
#[derive(Debug, Clone, Copy)]
struct Tok<'a> {
    text: &'a str,
    column: usize,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    /// Byte offset of `src` within the physical line.
    base: usize,
}

impl<'a> Cursor<'a> {
    fn column(&self) -> usize {
        self.base + self.pos + 1
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.src.len()
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            column: self.column(),
            message: message.into(),
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), ParseError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(lit) {
            self.pos += lit.len();
            Ok(())
        } else {
            Err(self.error(format!("expected `{lit}`")))
        }
    }

    /// Identifier or symbol: anything up to whitespace or punctuation.
    fn word(&mut self, what: &str) -> Result<Tok<'a>, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let column = self.column();
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() || matches!(c, '(' | ')' | ',') || self.src[self.pos..].starts_with("->") {
                break;
            }
            self.pos += c.len_utf8();
        }
        if self.pos == start {
            return Err(self.error(format!("expected {what}")));
        }
        Ok(Tok {
            text: &self.src[start..self.pos],
            column,
        })
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn kind_from_tag(tag: &str) -> Option<StateKind> {
    Some(match tag {
        "rw" => StateKind::ReadWrite,
        "right" => StateKind::MoveRight,
        "left" => StateKind::MoveLeft,
        "final" => StateKind::Final,
        _ => return None,
    })
}

enum RawTransition<'a> {
    Moving {
        from: Tok<'a>,
        to: Tok<'a>,
        dir: Direction,
    },
    ReadWrite {
        from: Tok<'a>,
        read: Tok<'a>,
        to: Tok<'a>,
        write: Tok<'a>,
    },
}

fn parse_transition<'a>(cur: &mut Cursor<'a>) -> Result<RawTransition<'a>, ParseError> {
    let kw = cur.word("`move` or `rw`")?;
    let raw = match kw.text {
        "move" => {
            let from = cur.word("state")?;
            cur.expect("->")?;
            let to = cur.word("state")?;
            let d = cur.word("direction `+1` or `-1`")?;
            let dir = match d.text {
                "+1" => Direction::Right,
                "-1" => Direction::Left,
                other => {
                    return Err(ParseError::Syntax {
                        line: cur.line,
                        column: d.column,
                        message: format!("direction must be +1 or -1, got `{other}`"),
                    })
                }
            };
            RawTransition::Moving { from, to, dir }
        }
        "rw" => {
            cur.expect("(")?;
            let from = cur.word("state")?;
            cur.expect(",")?;
            let read = cur.word("symbol")?;
            cur.expect(")")?;
            cur.expect("->")?;
            cur.expect("(")?;
            let to = cur.word("state")?;
            cur.expect(",")?;
            let write = cur.word("symbol")?;
            cur.expect(")")?;
            RawTransition::ReadWrite {
                from,
                read,
                to,
                write,
            }
        }
        other => {
            return Err(ParseError::Syntax {
                line: cur.line,
                column: kw.column,
                message: format!("unknown transition kind `{other}`"),
            })
        }
    };
    if !cur.at_end() {
        return Err(cur.error("trailing input after transition"));
    }
    Ok(raw)
}

fn parse_count(cur: &mut Cursor<'_>, what: &str) -> Result<usize, ParseError> {
    let tok = cur.word(what)?;
    let value = tok.text.parse::<usize>().map_err(|_| ParseError::Syntax {
        line: cur.line,
        column: tok.column,
        message: format!("{what} must be a non-negative integer, got `{}`", tok.text),
    })?;
    if !cur.at_end() {
        return Err(cur.error("trailing input"));
    }
    Ok(value)
}

/// Parses a machine description.
pub fn parse_rtm_spec(text: &str) -> Result<RtmSpec, ParseError> {
    let mut states: Vec<(String, StateKind)> = Vec::new();
    let mut alphabet: Option<Vec<String>> = None;
    let mut initial: Option<(usize, Tok<'_>)> = None;
    let mut tape_cells: Option<usize> = None;
    let mut result_cell: Option<usize> = None;
    let mut raw_transitions = Vec::new();

    for (idx, physical) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(physical);
        if line.trim().is_empty() {
            continue;
        }
        let colon = line.find(':').ok_or_else(|| ParseError::Syntax {
            line: line_no,
            column: line.len() - line.trim_start().len() + 1,
            message: "expected `key: value`".into(),
        })?;
        let key = line[..colon].trim();
        let mut cur = Cursor {
            src: &line[colon + 1..],
            pos: 0,
            line: line_no,
            base: colon + 1,
        };
        match key {
            "states" => {
                while !cur.at_end() {
                    let tok = cur.word("state declaration")?;
                    let (name, tag) = tok.text.split_once(':').ok_or_else(|| ParseError::Syntax {
                        line: line_no,
                        column: tok.column,
                        message: format!("expected `<id>:<rw|right|left|final>`, got `{}`", tok.text),
                    })?;
                    let kind = kind_from_tag(tag).ok_or_else(|| ParseError::Syntax {
                        line: line_no,
                        column: tok.column + name.len() + 1,
                        message: format!("unknown state kind `{tag}`"),
                    })?;
                    if name.is_empty() {
                        return Err(ParseError::Syntax {
                            line: line_no,
                            column: tok.column,
                            message: "empty state name".into(),
                        });
                    }
                    if states.iter().any(|(n, _)| n == name) {
                        return Err(ParseError::Syntax {
                            line: line_no,
                            column: tok.column,
                            message: format!("state `{name}` declared twice"),
                        });
                    }
                    states.push((name.to_owned(), kind));
                }
            }
            "alphabet" => {
                let mut syms: Vec<String> = Vec::new();
                while !cur.at_end() {
                    let tok = cur.word("symbol")?;
                    if syms.iter().any(|s| s == tok.text) {
                        return Err(ParseError::Syntax {
                            line: line_no,
                            column: tok.column,
                            message: format!("symbol `{}` declared twice", tok.text),
                        });
                    }
                    syms.push(tok.text.to_owned());
                }
                if alphabet.replace(syms).is_some() {
                    return Err(ParseError::Syntax {
                        line: line_no,
                        column: 1,
                        message: "alphabet declared twice".into(),
                    });
                }
            }
            "initial" => {
                let tok = cur.word("initial state")?;
                if !cur.at_end() {
                    return Err(cur.error("trailing input"));
                }
                initial = Some((line_no, tok));
            }
            "tape_cells" => tape_cells = Some(parse_count(&mut cur, "tape_cells")?),
            "result_cell" => result_cell = Some(parse_count(&mut cur, "result_cell")?),
            "transition" => raw_transitions.push((line_no, parse_transition(&mut cur)?)),
            other => {
                return Err(ParseError::Syntax {
                    line: line_no,
                    column: line.len() - line.trim_start().len() + 1,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }

    if states.is_empty() {
        return Err(ParseError::Missing("states"));
    }
    let alphabet = alphabet.ok_or(ParseError::Missing("alphabet"))?;
    let (init_line, init_tok) = initial.ok_or(ParseError::Missing("initial"))?;
    let tape_cells = tape_cells.ok_or(ParseError::Missing("tape_cells"))?;
    let result_cell = result_cell.unwrap_or(1);

    let state = |line: usize, tok: Tok<'_>| -> Result<StateId, ParseError> {
        states
            .iter()
            .position(|(n, _)| n == tok.text)
            .map(StateId)
            .ok_or_else(|| ParseError::UnknownState {
                line,
                column: tok.column,
                name: tok.text.to_owned(),
            })
    };
    let symbol = |line: usize, tok: Tok<'_>| -> Result<SymbolId, ParseError> {
        alphabet
            .iter()
            .position(|s| s == tok.text)
            .map(SymbolId)
            .ok_or_else(|| ParseError::UnknownSymbol {
                line,
                column: tok.column,
                name: tok.text.to_owned(),
            })
    };

    let initial = state(init_line, init_tok)?;
    let mut transitions = Vec::with_capacity(raw_transitions.len());
    for (line, raw) in raw_transitions {
        let t = match raw {
            RawTransition::Moving { from, to, dir } => Transition::Moving {
                from: state(line, from)?,
                to: state(line, to)?,
                dir,
            },
            RawTransition::ReadWrite {
                from,
                read,
                to,
                write,
            } => Transition::ReadWrite {
                from: state(line, from)?,
                read: symbol(line, read)?,
                to: state(line, to)?,
                write: symbol(line, write)?,
            },
        };
        // Attribute structural errors to the line that introduced them.
        transitions.push(t);
        if let Err(e) = RtmSpec::new(
            states.clone(),
            alphabet.clone(),
            transitions.clone(),
            initial,
            tape_cells.max(1),
            1,
        ) {
            return Err(match e {
                SpecError::DuplicateTransition(message) => {
                    ParseError::DuplicateTransition { line, message }
                }
                SpecError::KindMismatch(message) => ParseError::KindMismatch { line, message },
                SpecError::Invalid(message) => ParseError::Invalid(message),
            });
        }
    }

    RtmSpec::new(
        states,
        alphabet,
        transitions,
        initial,
        tape_cells,
        result_cell,
    )
    .map_err(|e| ParseError::Invalid(e.to_string()))
}
