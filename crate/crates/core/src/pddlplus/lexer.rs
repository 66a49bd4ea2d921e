//! Tokenizer for the planning-language subset. Every token carries its
//! line/column so diagnostics point at the offending source position.

use super::PddlError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokKind {
    LParen,
    RParen,
    /// Bare symbol: names and operators (`goto_waypoint`, `<=`, `-`, `*`).
    Sym(String),
    /// `?name` variable, stored without the marker.
    Var(String),
    /// `:name` section or requirement keyword, stored without the colon.
    Key(String),
    Num(f64),
    /// `#t`, the continuous-time differential in process rates.
    TimeVar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tok {
    pub kind: TokKind,
    pub line: usize,
    pub col: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '+' | '*' | '/' | '<' | '>' | '=')
}

/// Does a raw word denote a number? Words that merely *contain* digits
/// (`wp1`) stay symbols; words that *lead* with a digit or a sign/dot
/// followed by a digit must parse as numbers.
fn looks_numeric(word: &str) -> bool {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) if c.is_ascii_digit() => true,
        Some('-') | Some('+') | Some('.') => {
            matches!(chars.next(), Some(c) if c.is_ascii_digit() || c == '.')
        }
        _ => false,
    }
}

pub fn lex(text: &str) -> Result<Vec<Tok>, PddlError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '(' => {
                bump!();
                toks.push(Tok { kind: TokKind::LParen, line: tl, col: tc });
            }
            ')' => {
                bump!();
                toks.push(Tok { kind: TokKind::RParen, line: tl, col: tc });
            }
            '?' => {
                bump!();
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if is_word_char(c) {
                        name.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                if name.is_empty() {
                    return Err(PddlError::Syntax {
                        line: tl,
                        col: tc,
                        msg: "'?' must introduce a variable name".into(),
                    });
                }
                toks.push(Tok { kind: TokKind::Var(name), line: tl, col: tc });
            }
            ':' => {
                bump!();
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if is_word_char(c) {
                        name.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                if name.is_empty() {
                    return Err(PddlError::Syntax {
                        line: tl,
                        col: tc,
                        msg: "':' must introduce a keyword".into(),
                    });
                }
                toks.push(Tok { kind: TokKind::Key(name), line: tl, col: tc });
            }
            '#' => {
                bump!();
                match bump!() {
                    Some('t') => toks.push(Tok { kind: TokKind::TimeVar, line: tl, col: tc }),
                    other => {
                        return Err(PddlError::Syntax {
                            line: tl,
                            col: tc,
                            msg: format!(
                                "unknown token '#{}'; only #t is recognized",
                                other.map(String::from).unwrap_or_default()
                            ),
                        })
                    }
                }
            }
            c if is_word_char(c) => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if is_word_char(c) {
                        word.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                if looks_numeric(&word) {
                    match word.parse::<f64>() {
                        Ok(n) if n.is_finite() => {
                            toks.push(Tok { kind: TokKind::Num(n), line: tl, col: tc })
                        }
                        _ => {
                            return Err(PddlError::Syntax {
                                line: tl,
                                col: tc,
                                msg: format!("malformed number '{word}'"),
                            })
                        }
                    }
                } else {
                    toks.push(Tok { kind: TokKind::Sym(word), line: tl, col: tc });
                }
            }
            other => {
                return Err(PddlError::Syntax {
                    line: tl,
                    col: tc,
                    msg: format!("unexpected character '{other}'"),
                });
            }
        }
    }
    Ok(toks)
}
