//! Reader for the parenthesized symbolic syntax used by native netlists,
//! printed equations and state files.

use std::fmt;

use crate::error::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Sexpr {
    Atom { text: String, line: usize },
    List { items: Vec<Sexpr>, line: usize },
    Quote { inner: Box<Sexpr>, line: usize },
}

impl Sexpr {
    pub fn line(&self) -> usize {
        match self {
            Sexpr::Atom { line, .. } | Sexpr::List { line, .. } | Sexpr::Quote { line, .. } => *line,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom { text, .. } => Some(text),
            _ => None,
        }
    }

    /// List items; the atom `nil` reads as the empty list.
    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List { items, .. } => Some(items),
            Sexpr::Atom { text, .. } if text.eq_ignore_ascii_case("nil") => Some(&[]),
            _ => None,
        }
    }

    /// Strips any number of leading quotes.
    pub fn unquoted(&self) -> &Sexpr {
        match self {
            Sexpr::Quote { inner, .. } => inner.unquoted(),
            other => other,
        }
    }
}

impl fmt::Display for Sexpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexpr::Atom { text, .. } => f.write_str(text),
            Sexpr::Quote { inner, .. } => write!(f, "'{inner}"),
            Sexpr::List { items, .. } => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '\'' | ';' | '"')
}

/// Reads every top-level form in `text`. `;` starts a comment that runs to
/// the end of the line.
pub fn read_all(text: &str) -> Result<Vec<Sexpr>, ParseError> {
    let mut reader = Reader { chars: text.chars().collect(), pos: 0, line: 1 };
    let mut forms = Vec::new();
    loop {
        reader.skip_blank();
        if reader.pos >= reader.chars.len() {
            return Ok(forms);
        }
        forms.push(reader.read()?);
    }
}

/// Reads exactly one form.
pub fn read_one(text: &str) -> Result<Sexpr, ParseError> {
    let mut forms = read_all(text)?;
    match forms.len() {
        1 => Ok(forms.pop().unwrap()),
        0 => Err(ParseError::new(1, "expected an expression, found end of input")),
        _ => Err(ParseError::new(forms[1].line(), "unexpected text after expression")),
    }
}

struct Reader {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Reader {
    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.get(self.pos) {
            if c == ';' {
                while let Some(&c) = self.chars.get(self.pos) {
                    if c == '\n' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if c.is_whitespace() {
                if c == '\n' {
                    self.line += 1;
                }
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexpr, ParseError> {
        self.skip_blank();
        let line = self.line;
        let Some(&c) = self.chars.get(self.pos) else {
            return Err(ParseError::new(line, "unexpected end of input"));
        };
        match c {
            '(' => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_blank();
                    match self.chars.get(self.pos) {
                        None => return Err(ParseError::new(line, "unbalanced parentheses: missing `)`")),
                        Some(')') => {
                            self.pos += 1;
                            return Ok(Sexpr::List { items, line });
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            ')' => Err(ParseError::new(line, "unbalanced parentheses: unexpected `)`")),
            '\'' => {
                self.pos += 1;
                let inner = self.read()?;
                Ok(Sexpr::Quote { inner: Box::new(inner), line })
            }
            '"' => Err(ParseError::new(line, "string literals are not supported")),
            _ => {
                let start = self.pos;
                while self.chars.get(self.pos).is_some_and(|&c| !is_delimiter(c)) {
                    self.pos += 1;
                }
                Ok(Sexpr::Atom { text: self.chars[start..self.pos].iter().collect(), line })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_forms_with_quotes_and_comments() {
        let form = read_one("; header\n(a 'b (c '1/5)) ; trailing").unwrap();
        assert_eq!(form.to_string(), "(a 'b (c '1/5))");
        assert_eq!(form.line(), 2);
    }

    #[test]
    fn reports_unbalanced_parentheses() {
        let err = read_all("(a (b)\n").unwrap_err();
        assert!(err.to_string().contains("unbalanced"), "{err}");
        let err = read_all("a)").unwrap_err();
        assert!(err.to_string().contains("unbalanced"), "{err}");
    }

    #[test]
    fn nil_is_an_empty_list() {
        let form = read_one("nil").unwrap();
        assert_eq!(form.as_list().map(<[Sexpr]>::len), Some(0));
    }
}
