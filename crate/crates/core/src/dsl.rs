//! The textual expression language.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := rational ['*' power] [mask] | power [mask]
//! power    := 'e^(' rational ')'
//! mask     := '@' 'mod(' int ',' int (',' int)* ')'
//! rational := ['-'] int ['/' int]
//! ```
//!
//! Scaling nets use a prefix syntax over expressions:
//! `const(q)`, `pow(a)`, `absdiff{x}{y}`, `sum(c,d)`, `prod(c,d)`,
//! `scale(q,c)`, `min(c,d)`, `max(c,d)`, `env(c)`, `switch(k,c,d)`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::algebra::{Mask, NormalForm, Representative, Term};
use crate::error::{Error, Result};
use crate::geometry::CNet;
use crate::rational::{fmt_rational, Rational};

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.rest().chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", token))
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.src.len()
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        let digits = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        if digits == 0 {
            return self.err("expected integer");
        }
        self.pos += digits;
        Ok(self.src[start..self.pos].parse().expect("ascii digits"))
    }

    fn small(&mut self, what: &str) -> Result<u32> {
        let start = self.pos;
        let n = self.integer()?;
        u32::try_from(n).map_err(|_| Error::Parse {
                pos: start,
                msg: format!("{} out of range", what),
            })
    }

    fn rational(&mut self) -> Result<Rational> {
        let negative = self.eat("-");
        let n = self.integer()?;
        let d = if self.eat("/") {
            let at = self.pos;
            let d = self.integer()?;
            if d.is_zero() {
                return Err(Error::Parse {
                    pos: at,
                    msg: "zero denominator".into(),
                });
            }
            d
        } else {
            BigInt::one()
        };
        let q = Rational::new(n, d);
        Ok(if negative { -q } else { q })
    }

    fn power(&mut self) -> Result<Rational> {
        self.expect("e^(")?;
        let a = self.rational()?;
        self.expect(")")?;
        Ok(a)
    }

    fn mask(&mut self) -> Result<Mask> {
        self.expect("mod(")?;
        let at = self.pos;
        let modulus = self.small("modulus")?;
        if modulus == 0 {
            return Err(Error::Parse {
                pos: at,
                msg: "modulus must be positive".into(),
            });
        }
        let mut residues = Vec::new();
        while self.eat(",") {
            let at = self.pos;
            let r = self.small("residue")?;
            if r >= modulus {
                return Err(Error::Parse {
                    pos: at,
                    msg: format!("residue {} not below modulus {}", r, modulus),
                });
            }
            residues.push(r);
        }
        if residues.is_empty() {
            return self.err("mask needs at least one residue");
        }
        self.expect(")")?;
        Ok(Mask::new(modulus, residues).expect("residues checked"))
    }

    fn term(&mut self) -> Result<Term> {
        let (coeff, exponent) = if self.rest_starts("e^(") {
            (Rational::one(), self.power()?)
        } else {
            let c = self.rational()?;
            let a = if self.eat("*") {
                self.power()?
            } else {
                Rational::zero()
            };
            (c, a)
        };
        let mask = if self.eat("@") {
            self.mask()?
        } else {
            Mask::all()
        };
        Ok(Term::new(coeff, exponent, mask))
    }

    fn rest_starts(&mut self, token: &str) -> bool {
        self.skip_ws();
        self.rest().starts_with(token)
    }

    fn expr(&mut self) -> Result<NormalForm> {
        let mut terms = vec![self.term()?];
        loop {
            let negate = if self.eat("+") {
                false
            } else if self.peek() == Some('-') {
                self.pos += 1;
                true
            } else {
                break;
            };
            let mut t = self.term()?;
            if negate {
                t.coeff = -t.coeff;
            }
            terms.push(t);
        }
        Ok(NormalForm::canonicalize(terms))
    }

    fn cnet(&mut self) -> Result<CNet> {
        self.skip_ws();
        let at = self.pos;
        let name: String = self
            .rest()
            .chars()
            .take_while(|c| c.is_ascii_alphabetic())
            .collect();
        self.pos += name.len();
        let lift = |r: Result<CNet>, pos: usize| {
            r.map_err(|e| match e {
                Error::Precondition(msg) => Error::Parse { pos, msg },
                other => other,
            })
        };
        let net = match name.as_str() {
            "absdiff" => {
                self.expect("{")?;
                let x = self.expr()?;
                self.expect("}")?;
                self.expect("{")?;
                let y = self.expr()?;
                self.expect("}")?;
                return Ok(CNet::abs_diff(
                    Representative::canonical(x),
                    Representative::canonical(y),
                ));
            }
            "const" => {
                self.expect("(")?;
                let q = self.rational()?;
                lift(CNet::constant(q), at)?
            }
            "pow" => {
                self.expect("(")?;
                CNet::power(self.rational()?)
            }
            "scale" => {
                self.expect("(")?;
                let q = self.rational()?;
                self.expect(",")?;
                let c = self.cnet()?;
                lift(CNet::scale(q, c), at)?
            }
            "env" => {
                self.expect("(")?;
                CNet::envelope(self.cnet()?)
            }
            "switch" => {
                self.expect("(")?;
                let at_k = self.pos;
                let k = self.small("switch index")?;
                if k == 0 {
                    return Err(Error::Parse {
                        pos: at_k,
                        msg: "grid indices start at 1".into(),
                    });
                }
                self.expect(",")?;
                let a = self.cnet()?;
                self.expect(",")?;
                CNet::switch(k, a, self.cnet()?)
            }
            "sum" | "prod" | "min" | "max" => {
                self.expect("(")?;
                let a = self.cnet()?;
                self.expect(",")?;
                let b = self.cnet()?;
                match name.as_str() {
                    "sum" => CNet::sum(a, b),
                    "prod" => CNet::prod(a, b),
                    "min" => CNet::min(a, b),
                    _ => CNet::max(a, b),
                }
            }
            _ => {
                self.pos = at;
                return self.err("expected net constructor");
            }
        };
        self.expect(")")?;
        Ok(net)
    }
}

/// Parses an expression into its normal form.
pub fn parse_expression(text: &str) -> Result<NormalForm> {
    let mut cur = Cursor::new(text);
    let x = cur.expr()?;
    if !cur.at_end() {
        return cur.err("trailing input");
    }
    Ok(x)
}

/// Parses a scaling net.
pub fn parse_cnet(text: &str) -> Result<CNet> {
    let mut cur = Cursor::new(text);
    let c = cur.cnet()?;
    if !cur.at_end() {
        return cur.err("trailing input");
    }
    Ok(c)
}

/// Parses a bare rational `p` or `p/q`.
pub fn parse_rational_field(text: &str) -> Result<Rational> {
    let mut cur = Cursor::new(text);
    let q = cur.rational()?;
    if !cur.at_end() {
        return cur.err("trailing input");
    }
    Ok(q)
}

fn write_term(f: &mut fmt::Formatter<'_>, coeff: &Rational, t: &Term) -> fmt::Result {
    if t.exponent.is_zero() {
        write!(f, "{}", fmt_rational(coeff))?;
    } else if coeff.is_one() {
        write!(f, "e^({})", fmt_rational(&t.exponent))?;
    } else {
        write!(f, "{}*e^({})", fmt_rational(coeff), fmt_rational(&t.exponent))?;
    }
    if !t.mask.is_all() {
        write!(f, " @ {}", t.mask)?;
    }
    Ok(())
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in terms.iter().enumerate() {
            if i == 0 {
                write_term(f, &t.coeff, t)?;
            } else if t.coeff.is_negative() {
                write!(f, " - ")?;
                write_term(f, &-t.coeff.clone(), t)?;
            } else {
                write!(f, " + ")?;
                write_term(f, &t.coeff, t)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn parse_examples() {
        let x = parse_expression("3*e^(1/2) + 2*e^(3)").unwrap();
        assert_eq!(x.terms().len(), 2);
        assert_eq!(x.valuation(), Some(rat(1, 2)));
        let even = parse_expression("1 @ mod(2,0)").unwrap();
        assert_eq!(even, NormalForm::indicator(Mask::new(2, [0]).unwrap()));
        assert!(parse_expression("e^(1) + -1*e^(1)").unwrap().is_zero());
        assert_eq!(parse_expression("e^(1) - e^(1)").unwrap(), NormalForm::zero());
    }

    #[test]
    fn print_round_trip() {
        for s in ["0", "e^(1)", "-3/2*e^(-1/3) @ mod(3,0,2) + 5", "1 - 2*e^(2)"] {
            let x = parse_expression(s).unwrap();
            let printed = x.to_string();
            assert_eq!(parse_expression(&printed).unwrap(), x, "{}", printed);
        }
        let x = &NormalForm::from_rational(int(2)) - &NormalForm::epsilon();
        assert_eq!(x.to_string(), "2 - e^(1)");
    }

    #[test]
    fn errors_carry_positions() {
        match parse_expression("1 + 2/0") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("{:?}", other),
        }
        match parse_expression("1 @ mod(2,5)") {
            Err(Error::Parse { pos, msg }) => {
                assert_eq!(pos, 10);
                assert!(msg.contains("residue"));
            }
            other => panic!("{:?}", other),
        }
        assert!(matches!(parse_expression("e^(1) )"), Err(Error::Parse { pos: 6, .. })));
        assert!(parse_expression("").is_err());
    }

    #[test]
    fn cnet_round_trip() {
        for s in [
            "const(1)",
            "max(const(1), absdiff{2}{e^(1)})",
            "switch(3, scale(1/2, prod(const(1), pow(-1))), env(sum(pow(0), const(2))))",
            "min(pow(-1/2), const(3))",
        ] {
            let c = parse_cnet(s).unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert!(matches!(parse_cnet("const(0)"), Err(Error::Parse { pos: 0, .. })));
        assert!(parse_cnet("foo(1)").is_err());
    }
}
