use chrono::NaiveDate;

use super::ParseError;
use crate::value::{CmpOp, Value};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Get,
    From,
    Where,
    If,
    Else,
    Do,
    Lit(Value),
    Cmp(CmpOp),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Semi,
    Dot,
    Star,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Get => "`get`".into(),
            Tok::From => "`from`".into(),
            Tok::Where => "`where`".into(),
            Tok::If => "`if`".into(),
            Tok::Else => "`else`".into(),
            Tok::Do => "`do`".into(),
            Tok::Lit(v) => format!("literal {v}"),
            Tok::Cmp(op) => format!("`{op}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Star => "`*`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub col: usize,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        // line comments
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let err = |msg: String| ParseError::Syntax {
            line: pos.line,
            col: pos.col,
            message: msg,
        };

        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.to_ascii_lowercase().as_str() {
                "get" => Tok::Get,
                "from" => Tok::From,
                "where" => Tok::Where,
                "if" => Tok::If,
                "else" => Tok::Else,
                "do" => Tok::Do,
                "null" => Tok::Lit(Value::Null),
                _ => Tok::Ident(word),
            };
            out.push((tok, pos));
            continue;
        }

        let negative_number = c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
        if c.is_ascii_digit() || negative_number {
            let start = i;
            bump!();
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let digits = i - start;
            // YYYY-MM-DD
            if !negative_number
                && digits == 4
                && i + 6 <= chars.len()
                && chars[i] == '-'
                && chars[i + 1].is_ascii_digit()
                && chars[i + 2].is_ascii_digit()
                && chars[i + 3] == '-'
                && chars[i + 4].is_ascii_digit()
                && chars[i + 5].is_ascii_digit()
            {
                for _ in 0..6 {
                    bump!();
                }
                let text: String = chars[start..i].iter().collect();
                let date = NaiveDate::parse_from_str(&text, "%Y-%m-%d")
                    .map_err(|_| err(format!("invalid date literal {text}")))?;
                out.push((Tok::Lit(Value::Date(date)), pos));
                continue;
            }
            let mut is_decimal = false;
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                is_decimal = true;
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = if is_decimal {
                text.parse::<f64>().map(Value::decimal).ok()
            } else {
                text.parse::<i64>().map(Value::Int).ok()
            }
            .ok_or_else(|| err(format!("number out of range: {text}")))?;
            out.push((Tok::Lit(value), pos));
            continue;
        }

        if c == '\'' {
            bump!();
            let mut s = String::new();
            loop {
                if i >= chars.len() {
                    return Err(err("unterminated string literal".into()));
                }
                if chars[i] == '\'' {
                    if chars.get(i + 1) == Some(&'\'') {
                        s.push('\'');
                        bump!();
                        bump!();
                        continue;
                    }
                    bump!();
                    break;
                }
                s.push(chars[i]);
                bump!();
            }
            out.push((Tok::Lit(Value::Str(s)), pos));
            continue;
        }

        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let (tok, len) = match two.as_str() {
            "!=" => (Tok::Cmp(CmpOp::Ne), 2),
            "<=" => (Tok::Cmp(CmpOp::Le), 2),
            ">=" => (Tok::Cmp(CmpOp::Ge), 2),
            _ => match c {
                '=' => (Tok::Cmp(CmpOp::Eq), 1),
                '<' => (Tok::Cmp(CmpOp::Lt), 1),
                '>' => (Tok::Cmp(CmpOp::Gt), 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '{' => (Tok::LBrace, 1),
                '}' => (Tok::RBrace, 1),
                ',' => (Tok::Comma, 1),
                ':' => (Tok::Colon, 1),
                ';' => (Tok::Semi, 1),
                '.' => (Tok::Dot, 1),
                '*' => (Tok::Star, 1),
                other => return Err(err(format!("unexpected character {other:?}"))),
            },
        };
        for _ in 0..len {
            bump!();
        }
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn literals() {
        assert_eq!(
            toks("2009 -3 2.5 2001-02-03 'a''b' NULL"),
            vec![
                Tok::Lit(Value::Int(2009)),
                Tok::Lit(Value::Int(-3)),
                Tok::Lit(Value::decimal(2.5)),
                Tok::Lit(Value::date(2001, 2, 3).unwrap()),
                Tok::Lit(Value::str("a'b")),
                Tok::Lit(Value::Null),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn keywords_are_case_insensitive() {
        assert_eq!(toks("Get FROM"), vec![Tok::Get, Tok::From, Tok::Eof]);
    }

    #[test]
    fn positions_and_errors() {
        let t = tokenize("get\n  (x").unwrap();
        assert_eq!(t[1].1, Pos { line: 2, col: 3 });
        let e = tokenize("get ?").unwrap_err();
        assert!(matches!(
            e,
            ParseError::Syntax {
                line: 1,
                col: 5,
                ..
            }
        ));
        assert!(tokenize("'open").is_err());
        assert!(tokenize("2009-13-01").is_err());
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(
            toks("# note\nget // more\n;"),
            vec![Tok::Get, Tok::Semi, Tok::Eof]
        );
    }
}
