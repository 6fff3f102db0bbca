//! Reading solver responses: balanced-parenthesis accumulation and value parsing.

use num_traits::Zero;

use crate::rat::parse_rat;
use crate::Rat;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

/// Collects stdout lines until they form one complete response.
#[derive(Debug, Default)]
pub struct Accumulator {
    buf: String,
    depth: i64,
    in_string: bool,
    in_quoted: bool,
}

impl Accumulator {
    pub fn new() -> Accumulator {
        Accumulator::default()
    }

    /// Feed one line; returns the response when it is complete.
    pub fn push_line(&mut self, line: &str) -> Option<String> {
        for c in line.chars() {
            match c {
                '"' if !self.in_quoted => self.in_string = !self.in_string,
                '|' if !self.in_string => self.in_quoted = !self.in_quoted,
                '(' if !self.in_string && !self.in_quoted => self.depth += 1,
                ')' if !self.in_string && !self.in_quoted => self.depth -= 1,
                _ => {}
            }
        }
        if !self.buf.is_empty() {
            self.buf.push('\n');
        }
        self.buf.push_str(line);
        if self.depth <= 0 && !self.in_string && !self.in_quoted {
            let done = std::mem::take(&mut self.buf);
            self.depth = 0;
            let trimmed = done.trim();
            (!trimmed.is_empty()).then(|| trimmed.to_string())
        } else {
            None
        }
    }
}

pub fn parse(text: &str) -> Option<Sexp> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let s = parse_tokens(&tokens, &mut pos)?;
    (pos == tokens.len()).then_some(s)
}

fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' | ')' => {
                tokens.push(c.to_string());
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '"' | '|' => {
                let close = c;
                let mut tok = String::from(c);
                chars.next();
                while let Some(d) = chars.next() {
                    tok.push(d);
                    if d == close {
                        // "" is an escaped quote inside string literals
                        if close == '"' && chars.peek() == Some(&'"') {
                            tok.push(chars.next().unwrap());
                            continue;
                        }
                        break;
                    }
                }
                tokens.push(tok);
            }
            _ => {
                let mut tok = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_whitespace() || d == '(' || d == ')' {
                        break;
                    }
                    tok.push(d);
                    chars.next();
                }
                tokens.push(tok);
            }
        }
    }
    tokens
}

fn parse_tokens(tokens: &[String], pos: &mut usize) -> Option<Sexp> {
    let tok = tokens.get(*pos)?;
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                if tokens.get(*pos)? == ")" {
                    *pos += 1;
                    return Some(Sexp::List(items));
                }
                items.push(parse_tokens(tokens, pos)?);
            }
        }
        ")" => None,
        _ => Some(Sexp::Atom(tok.clone())),
    }
}

/// Read a model value as an exact rational.
///
/// Accepts numerals, decimals, `(- v)`, `(- a b)`, `(+ …)`, `(* …)`, `(/ a b)` and
/// `(to_real v)`, nested arbitrarily. Anything else (algebraic `root-obj` values,
/// for instance) yields `None`.
pub fn value(s: &Sexp) -> Option<Rat> {
    match s {
        Sexp::Atom(a) => {
            if a.starts_with(|c: char| c.is_ascii_digit()) {
                parse_rat(a).ok()
            } else {
                None
            }
        }
        Sexp::List(items) => {
            let (head, args) = items.split_first()?;
            let head = match head {
                Sexp::Atom(h) => h.as_str(),
                _ => return None,
            };
            let vals = args.iter().map(value).collect::<Option<Vec<_>>>()?;
            match (head, vals.as_slice()) {
                ("-", [v]) => Some(-v.clone()),
                ("-", [first, rest @ ..]) => Some(rest.iter().fold(first.clone(), |acc, v| acc - v)),
                ("+", vs) if !vs.is_empty() => Some(vs.iter().sum()),
                ("*", vs) if !vs.is_empty() => Some(vs.iter().product()),
                ("/", [a, b]) if !b.is_zero() => Some(a / b),
                ("to_real", [v]) => Some(v.clone()),
                _ => None,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};

    fn val(text: &str) -> Option<Rat> {
        value(&parse(text).unwrap())
    }

    #[test]
    fn value_forms() {
        assert_eq!(val("3"), Some(int(3)));
        assert_eq!(val("0.25"), Some(frac(1, 4)));
        assert_eq!(val("(- 3)"), Some(int(-3)));
        assert_eq!(val("(/ 1 3)"), Some(frac(1, 3)));
        assert_eq!(val("(/ 1.0 3.0)"), Some(frac(1, 3)));
        assert_eq!(val("(- (/ 1.0 3.0))"), Some(frac(-1, 3)));
        assert_eq!(val("(/ (- 1) 3)"), Some(frac(-1, 3)));
        assert_eq!(val("(to_real 4)"), Some(int(4)));
        assert_eq!(val("(root-obj (+ (^ x 2) (- 2)) 1)"), None);
        assert_eq!(val("(/ 1 0)"), None);
        assert_eq!(val("x"), None);
    }

    #[test]
    fn accumulator_waits_for_balance() {
        let mut acc = Accumulator::new();
        assert_eq!(acc.push_line("sat"), Some("sat".into()));
        assert_eq!(acc.push_line("((x 1)"), None);
        assert_eq!(acc.push_line(" (y (/ 1 2)))"), Some("((x 1)\n (y (/ 1 2)))".into()));
        assert_eq!(acc.push_line("(error \"unbalanced ( in message\")"), Some("(error \"unbalanced ( in message\")".into()));
        assert_eq!(acc.push_line(""), None);
        assert_eq!(acc.push_line("(|weird ) name| 2)"), Some("(|weird ) name| 2)".into()));
    }

    #[test]
    fn parses_nested_lists_and_strings() {
        let s = parse("((x 1) (|a b| (- 2)) (:reason-unknown \"in(complete\"))").unwrap();
        match s {
            Sexp::List(items) => assert_eq!(items.len(), 3),
            _ => panic!("expected list"),
        }
        assert!(parse("(a b").is_none());
        assert!(parse("a b").is_none());
    }
}
