//! Parser for initial-condition expressions like `1.5*sin(x)+cos(2x)`.
//!
//! Grammar: a sum of terms, each `[sign][coeff*]sin(kx)` or `cos(kx)` with
//! integer wavenumber `k >= 1` (`x` alone means `k = 1`). Whitespace is
//! ignored. Constants (`k = 0`) are rejected because the equation lives on
//! mean-zero data.

use std::fmt;

use num_complex::Complex64;
use sgverify_core::field::TWO_PI;
use sgverify_core::{FourierField, Harmonic};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub amplitude: f64,
    pub kind: Harmonic,
    pub wavenumber: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConditionExpr {
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseError {
    /// Unexpected input at a byte position (counted over the original text).
    Unexpected {
        pos: usize,
        expected: &'static str,
        found: String,
    },
    /// A `k = 0` term would break the mean-zero invariant.
    RejectsConstant { pos: usize },
    Empty,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Unexpected { pos, expected, found } => {
                write!(f, "at position {pos}: expected {expected}, found {found}")
            }
            ParseError::RejectsConstant { pos } => write!(
                f,
                "at position {pos}: wavenumber 0 is a constant term; initial data must be mean-zero"
            ),
            ParseError::Empty => write!(f, "empty initial-condition expression"),
        }
    }
}

impl std::error::Error for ParseError {}

struct Cursor<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { text: text.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn found(&self) -> String {
        match self.text.get(self.pos) {
            Some(&c) => format!("{:?}", c as char),
            None => "end of input".into(),
        }
    }

    fn error(&self, expected: &'static str) -> ParseError {
        ParseError::Unexpected {
            pos: self.pos,
            expected,
            found: self.found(),
        }
    }

    fn expect(&mut self, c: u8, expected: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    /// Parses an unsigned decimal number (`12`, `1.5`, `.5`, `2e-3`).
    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.text.get(self.pos), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.text.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while matches!(self.text.get(self.pos), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if self.pos == start {
            return Err(self.error("a number"));
        }
        // Exponent part only if it is actually followed by digits, so that
        // `2e` never eats the `e` of a (hypothetical) identifier.
        if matches!(self.text.get(self.pos), Some(&b'e') | Some(&b'E')) {
            let mut probe = self.pos + 1;
            if matches!(self.text.get(probe), Some(&b'+') | Some(&b'-')) {
                probe += 1;
            }
            if matches!(self.text.get(probe), Some(c) if c.is_ascii_digit()) {
                self.pos = probe;
                while matches!(self.text.get(self.pos), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
        }
        let s = std::str::from_utf8(&self.text[start..self.pos]).expect("ascii digits");
        s.parse().map_err(|_| ParseError::Unexpected {
            pos: start,
            expected: "a number",
            found: s.to_string(),
        })
    }

    fn unsigned_integer(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.text.get(self.pos), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("an integer wavenumber"));
        }
        let s = std::str::from_utf8(&self.text[start..self.pos]).expect("ascii digits");
        s.parse().map_err(|_| ParseError::Unexpected {
            pos: start,
            expected: "an integer wavenumber",
            found: s.to_string(),
        })
    }
}

/// Parses one term after its sign: `[coeff*]sin(kx)` / `cos(kx)`.
fn term(c: &mut Cursor) -> Result<Term, ParseError> {
    let mut amplitude = 1.0;
    if matches!(c.peek(), Some(b'0'..=b'9') | Some(b'.')) {
        amplitude = c.number()?;
        c.expect(b'*', "'*' between coefficient and sin/cos")?;
    }
    let name_pos = {
        c.skip_ws();
        c.pos
    };
    let kind = match (c.bump(), c.bump(), c.bump()) {
        (Some(b's'), Some(b'i'), Some(b'n')) => Harmonic::Sin,
        (Some(b'c'), Some(b'o'), Some(b's')) => Harmonic::Cos,
        _ => {
            return Err(ParseError::Unexpected {
                pos: name_pos,
                expected: "'sin' or 'cos'",
                found: match c.text.get(name_pos) {
                    Some(&ch) => format!("{:?}", ch as char),
                    None => "end of input".into(),
                },
            })
        }
    };
    c.expect(b'(', "'('")?;
    let k_pos = {
        c.skip_ws();
        c.pos
    };
    let wavenumber = if matches!(c.peek(), Some(b'0'..=b'9')) {
        c.unsigned_integer()?
    } else {
        1
    };
    c.expect(b'x', "'x'")?;
    c.expect(b')', "')'")?;
    if wavenumber == 0 {
        return Err(ParseError::RejectsConstant { pos: k_pos });
    }
    Ok(Term { amplitude, kind, wavenumber })
}

pub fn parse_ic(text: &str) -> Result<InitialConditionExpr, ParseError> {
    let mut c = Cursor::new(text);
    if c.peek().is_none() {
        return Err(ParseError::Empty);
    }
    let mut terms = Vec::new();
    // Leading sign is optional; between terms it is mandatory.
    let mut sign = match c.peek() {
        Some(b'+') => {
            c.bump();
            1.0
        }
        Some(b'-') => {
            c.bump();
            -1.0
        }
        _ => 1.0,
    };
    loop {
        let mut t = term(&mut c)?;
        t.amplitude *= sign;
        terms.push(t);
        match c.peek() {
            None => break,
            Some(b'+') => {
                c.bump();
                sign = 1.0;
            }
            Some(b'-') => {
                c.bump();
                sign = -1.0;
            }
            Some(_) => return Err(c.error("'+', '-', or end of input")),
        }
    }
    Ok(InitialConditionExpr { terms })
}

impl InitialConditionExpr {
    /// Renders back to the grammar; `parse_ic(render())` yields equal terms.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.terms.iter().enumerate() {
            let a = t.amplitude;
            if i == 0 {
                if a < 0.0 {
                    out.push('-');
                }
            } else {
                out.push(if a < 0.0 { '-' } else { '+' });
            }
            let mag = a.abs();
            if mag != 1.0 {
                out.push_str(&format!("{mag}*"));
            }
            out.push_str(match t.kind {
                Harmonic::Sin => "sin(",
                Harmonic::Cos => "cos(",
            });
            if t.wavenumber != 1 {
                out.push_str(&t.wavenumber.to_string());
            }
            out.push_str("x)");
        }
        out
    }

    /// Exact conversion to a spectral field (one complex coefficient pair
    /// per term; repeated wavenumbers accumulate).
    pub fn to_field(&self) -> FourierField {
        let n = self
            .terms
            .iter()
            .map(|t| t.wavenumber)
            .max()
            .expect("expression has at least one term");
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for t in &self.terms {
            let half = t.amplitude * TWO_PI.sqrt() / 2.0;
            coeffs[t.wavenumber - 1] += match t.kind {
                Harmonic::Sin => Complex64::new(0.0, -half),
                Harmonic::Cos => Complex64::new(half, 0.0),
            };
        }
        FourierField::from_positive_coeffs(coeffs).expect("finite amplitudes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_and_scaled_terms() {
        let e = parse_ic("2*sin(x)").unwrap();
        assert_eq!(e.terms, vec![Term { amplitude: 2.0, kind: Harmonic::Sin, wavenumber: 1 }]);

        let e = parse_ic("sin(2x)+cos(2x)").unwrap();
        assert_eq!(
            e.terms,
            vec![
                Term { amplitude: 1.0, kind: Harmonic::Sin, wavenumber: 2 },
                Term { amplitude: 1.0, kind: Harmonic::Cos, wavenumber: 2 },
            ]
        );
    }

    #[test]
    fn whitespace_signs_and_decimals() {
        let e = parse_ic(" 1.5 * sin( x ) - 0.25*cos(3x) ").unwrap();
        assert_eq!(e.terms.len(), 2);
        assert_eq!(e.terms[0].amplitude, 1.5);
        assert_eq!(e.terms[1].amplitude, -0.25);
        assert_eq!(e.terms[1].wavenumber, 3);

        let e = parse_ic("-sin(x)").unwrap();
        assert_eq!(e.terms[0].amplitude, -1.0);

        let e = parse_ic("2e-1*sin(x)").unwrap();
        assert_eq!(e.terms[0].amplitude, 0.2);
    }

    #[test]
    fn rejects_constants_and_garbage() {
        assert_eq!(
            parse_ic("cos(0x)"),
            Err(ParseError::RejectsConstant { pos: 4 })
        );
        assert!(matches!(parse_ic("0"), Err(ParseError::Unexpected { .. })));
        assert!(matches!(parse_ic(""), Err(ParseError::Empty)));
        assert!(matches!(parse_ic("tan(x)"), Err(ParseError::Unexpected { .. })));
        assert!(matches!(parse_ic("sin(x)+"), Err(ParseError::Unexpected { .. })));
        assert!(matches!(parse_ic("sin(x)cos(x)"), Err(ParseError::Unexpected { .. })));
        assert!(matches!(parse_ic("2sin(x)"), Err(ParseError::Unexpected { .. })));
    }

    #[test]
    fn error_positions_point_at_the_offender() {
        match parse_ic("sin(x)+cos(y)") {
            Err(ParseError::Unexpected { pos, .. }) => assert_eq!(pos, 11),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn render_round_trips() {
        for text in [
            "2*sin(x)",
            "sin(2x)+cos(2x)",
            "-1.5*sin(x)+0.25*cos(7x)-sin(3x)",
            "0.5*cos(x)",
        ] {
            let e = parse_ic(text).unwrap();
            let again = parse_ic(&e.render()).unwrap();
            assert_eq!(e, again, "render {:?} -> {:?}", text, e.render());
        }
    }

    #[test]
    fn field_conversion_matches_harmonic_constructor() {
        let e = parse_ic("1.5*sin(x)+sin(2x)").unwrap();
        let f = e.to_field();
        let expect = {
            let a = FourierField::harmonic(1.5, Harmonic::Sin, 1)
                .zero_padded(2)
                .unwrap();
            let b = FourierField::harmonic(1.0, Harmonic::Sin, 2);
            &a + &b
        };
        assert_eq!(f, expect);
    }
}
