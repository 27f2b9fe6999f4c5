//! Text form of Λ: `term ('+' term)*` with `term = [weight '*'] atom` and
//! atoms `kingman`, `star`, `uniform`, `beta:a,b`, `point:z`.

use super::{Component, LambdaMeasure, WeightedComponent, NORMALIZATION_TOL};
use crate::error::{Error, Result};

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, ch: char) -> bool {
        if self.peek() == Some(ch) {
            self.pos += ch.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, ch: char) -> Result<()> {
        if self.eat(ch) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{ch}'")))
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Syntax { position: self.pos, message: message.into() }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .char_indices()
            .take_while(|&(i, c)| {
                c.is_ascii_digit()
                    || c == '.'
                    || c == 'e'
                    || c == 'E'
                    || ((c == '-' || c == '+') && (i == 0 || matches!(rest.as_bytes()[i - 1], b'e' | b'E')))
            })
            .count();
        let text = &rest[..len];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos += len;
                Ok(v)
            }
            _ => Err(self.error("expected a number")),
        }
    }

    fn word(&mut self) -> &'a str {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest.chars().take_while(|c| c.is_ascii_alphabetic()).count();
        self.pos += len;
        &rest[..len]
    }
}

enum Atom {
    Kingman,
    Star,
    Component(Component),
}

fn atom(cur: &mut Cursor<'_>) -> Result<Atom> {
    let start = cur.pos;
    match cur.word() {
        "kingman" => Ok(Atom::Kingman),
        "star" => Ok(Atom::Star),
        "uniform" => Ok(Atom::Component(Component::Beta { a: 1.0, b: 1.0 })),
        "beta" => {
            cur.expect(':')?;
            let a_pos = cur.pos;
            let a = cur.number()?;
            cur.expect(',')?;
            let b = cur.number()?;
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::Syntax { position: a_pos, message: format!("Beta shapes must be positive, got ({a}, {b})") });
            }
            Ok(Atom::Component(Component::Beta { a, b }))
        }
        "point" => {
            cur.expect(':')?;
            let z_pos = cur.pos;
            let z = cur.number()?;
            if !(0.0..=1.0).contains(&z) {
                return Err(Error::Syntax { position: z_pos, message: format!("atom {z} outside [0, 1]") });
            }
            Ok(if z == 0.0 {
                Atom::Kingman
            } else if z == 1.0 {
                Atom::Star
            } else {
                Atom::Component(Component::Point { z })
            })
        }
        "" => Err(cur.error("expected an atom")),
        other => Err(Error::Syntax { position: start, message: format!("unknown atom '{other}'") }),
    }
}

/// Parse a Λ spec string. Weights that do not sum to one are rescaled with a
/// warning; a missing weight counts as one.
pub fn parse_lambda(spec: &str) -> Result<LambdaMeasure> {
    let mut cur = Cursor { src: spec, pos: 0 };
    let (mut kingman, mut star) = (0.0, 0.0);
    let mut components: Vec<WeightedComponent> = Vec::new();
    loop {
        let weight_pos = {
            cur.skip_ws();
            cur.pos
        };
        let starts_numeric = matches!(cur.peek(), Some(c) if c.is_ascii_digit() || c == '.' || c == '-' || c == '+');
        let weight = if starts_numeric {
            let w = cur.number()?;
            cur.expect('*')?;
            if w <= 0.0 {
                return Err(Error::Syntax { position: weight_pos, message: format!("nonpositive weight {w}") });
            }
            w
        } else {
            1.0
        };
        match atom(&mut cur)? {
            Atom::Kingman => kingman += weight,
            Atom::Star => star += weight,
            Atom::Component(component) => {
                match components.iter_mut().find(|c| c.component == component) {
                    Some(existing) => existing.weight += weight,
                    None => components.push(WeightedComponent { weight, component }),
                }
            }
        }
        if cur.peek().is_none() {
            break;
        }
        cur.expect('+')?;
    }
    let total = kingman + star + components.iter().map(|c| c.weight).sum::<f64>();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        log::warn!("Λ weights sum to {total}; rescaling to a probability measure");
        kingman /= total;
        star /= total;
        for c in &mut components {
            c.weight /= total;
        }
    }
    LambdaMeasure::new(kingman, star, components)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_named_atoms() {
        assert_eq!(parse_lambda("kingman").unwrap(), LambdaMeasure::kingman());
        assert_eq!(parse_lambda(" star ").unwrap(), LambdaMeasure::star());
        assert_eq!(parse_lambda("uniform").unwrap(), LambdaMeasure::uniform());
        assert_eq!(parse_lambda("beta:1,1").unwrap(), LambdaMeasure::uniform());
        assert_eq!(parse_lambda("point:0").unwrap(), LambdaMeasure::kingman());
        assert_eq!(parse_lambda("point:1").unwrap(), LambdaMeasure::star());
    }

    #[test]
    fn parses_mixtures() {
        let m = parse_lambda("0.5*kingman + 0.5*point:0.5").unwrap();
        assert_eq!(m.kingman_mass(), 0.5);
        assert_eq!(m.components().len(), 1);
        let m = parse_lambda("0.25 * beta: 2.5 , 1e0 + 0.75*star").unwrap();
        assert_eq!(m.star_mass(), 0.75);
        assert_eq!(m.components()[0].component, Component::Beta { a: 2.5, b: 1.0 });
    }

    #[test]
    fn rescales_unnormalised_weights() {
        let m = parse_lambda("kingman + star").unwrap();
        assert_eq!(m.kingman_mass(), 0.5);
        assert_eq!(m.star_mass(), 0.5);
        let m = parse_lambda("2*point:0.5").unwrap();
        assert_eq!(m.components()[0].weight, 1.0);
    }

    #[test]
    fn reports_syntax_errors_with_position() {
        let cases = [
            ("kingmann", 0),
            ("0.5*kingman +", 13),
            ("point:1.5", 6),
            ("beta:0,1", 5),
            ("-1*kingman", 0),
            ("0*kingman", 0),
            ("kingman star", 8),
            ("point:x", 6),
        ];
        for (src, pos) in cases {
            match parse_lambda(src) {
                Err(Error::Syntax { position, .. }) => assert_eq!(position, pos, "{src}"),
                other => panic!("{src}: expected syntax error, got {other:?}"),
            }
        }
    }
}
