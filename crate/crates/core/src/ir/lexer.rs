use super::IrError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Token {
    Ident(String),
    Int(i64),
    Decimal(f64),
    Str(String),
    Comma,
    Dot,
    LParen,
    RParen,
    Star,
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
    Ne,
    Minus,
    Slash,
    Percent,
    Eof,
}

impl Token {
    pub(crate) fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("`{s}`"),
            Token::Int(i) => i.to_string(),
            Token::Decimal(d) => d.to_string(),
            Token::Str(s) => format!("'{s}'"),
            Token::Comma => "`,`".into(),
            Token::Dot => "`.`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::Star => "`*`".into(),
            Token::Eq => "`=`".into(),
            Token::Lt => "`<`".into(),
            Token::Gt => "`>`".into(),
            Token::Le => "`<=`".into(),
            Token::Ge => "`>=`".into(),
            Token::Ne => "`<>`".into(),
            Token::Minus => "`-`".into(),
            Token::Slash => "`/`".into(),
            Token::Percent => "`%`".into(),
            Token::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub token: Token,
    pub pos: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Spanned>, IrError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = |t: Token| Spanned { token: t, pos: start };
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
            }
            b',' => {
                out.push(single(Token::Comma));
                i += 1;
            }
            b'.' => {
                out.push(single(Token::Dot));
                i += 1;
            }
            b'(' => {
                out.push(single(Token::LParen));
                i += 1;
            }
            b')' => {
                out.push(single(Token::RParen));
                i += 1;
            }
            b'*' => {
                out.push(single(Token::Star));
                i += 1;
            }
            b'=' => {
                out.push(single(Token::Eq));
                i += 1;
            }
            b'-' => {
                out.push(single(Token::Minus));
                i += 1;
            }
            b'/' => {
                out.push(single(Token::Slash));
                i += 1;
            }
            b'%' => {
                out.push(single(Token::Percent));
                i += 1;
            }
            b'<' => {
                let (t, n) = match bytes.get(i + 1) {
                    Some(b'=') => (Token::Le, 2),
                    Some(b'>') => (Token::Ne, 2),
                    _ => (Token::Lt, 1),
                };
                out.push(single(t));
                i += n;
            }
            b'>' => {
                let (t, n) = match bytes.get(i + 1) {
                    Some(b'=') => (Token::Ge, 2),
                    _ => (Token::Gt, 1),
                };
                out.push(single(t));
                i += n;
            }
            b'!' if bytes.get(i + 1) == Some(&b'=') => {
                out.push(single(Token::Ne));
                i += 2;
            }
            b'\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match bytes.get(i) {
                        None => {
                            return Err(IrError::Syntax {
                                position: start,
                                expected: "closing `'`".into(),
                                found: "end of input".into(),
                            })
                        }
                        Some(b'\'') if bytes.get(i + 1) == Some(&b'\'') => {
                            s.push('\'');
                            i += 2;
                        }
                        Some(b'\'') => {
                            i += 1;
                            break;
                        }
                        Some(_) => {
                            let ch = text[i..].chars().next().expect("in bounds");
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                out.push(single(Token::Str(s)));
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let is_decimal =
                    bytes.get(i) == Some(&b'.') && bytes.get(i + 1).is_some_and(u8::is_ascii_digit);
                if is_decimal {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let v: f64 = text[start..i].parse().map_err(|_| bad_number(start, &text[start..i]))?;
                    out.push(single(Token::Decimal(v)));
                } else {
                    let v: i64 = text[start..i].parse().map_err(|_| bad_number(start, &text[start..i]))?;
                    out.push(single(Token::Int(v)));
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(single(Token::Ident(text[start..i].to_string())));
            }
            _ => {
                let ch = text[i..].chars().next().expect("in bounds");
                return Err(IrError::Syntax {
                    position: start,
                    expected: "a token".into(),
                    found: format!("`{ch}`"),
                });
            }
        }
    }
    out.push(Spanned {
        token: Token::Eof,
        pos: text.len(),
    });
    Ok(out)
}

fn bad_number(pos: usize, text: &str) -> IrError {
    IrError::Syntax {
        position: pos,
        expected: "a number in range".into(),
        found: text.to_string(),
    }
}
