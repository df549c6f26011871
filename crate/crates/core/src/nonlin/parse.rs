//! Textual catalog addresses, e.g. `clip(tau=1.0)⊗clip(tau=1.0)` or
//! `mono(2,1)`.
//!
//! Grammar: `factor (TENSOR factor)*` where a factor is `name` or
//! `name(arg, ...)`, arguments are numbers optionally prefixed by `name=`,
//! and `TENSOR` is `⊗` (or `@` for keyboards without it). Errors carry the
//! byte offset of the offending token.

use crate::error::{Error, Result};
use crate::nonlin::GeneralizedFunction;

pub fn parse_nonlinearity(input: &str) -> Result<GeneralizedFunction> {
    let mut p = Parser { input, pos: 0 };
    let g = p.parse_product()?;
    p.skip_ws();
    if p.pos < p.input.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(g)
}

struct Parser<'a> {
    input: &'a str,
    pos: usize,
}

struct Arg {
    name: Option<String>,
    value: f64,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn error_at(&self, pos: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos,
            msg: msg.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.input[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn parse_product(&mut self) -> Result<GeneralizedFunction> {
        let mut factors = vec![self.parse_factor()?];
        loop {
            self.skip_ws();
            if self.eat('⊗') || self.eat('@') {
                self.skip_ws();
                factors.push(self.parse_factor()?);
            } else {
                break;
            }
        }
        if factors.len() == 1 {
            Ok(factors.pop().expect("one factor"))
        } else {
            GeneralizedFunction::tensor(&factors)
        }
    }

    fn parse_factor(&mut self) -> Result<GeneralizedFunction> {
        self.skip_ws();
        let name_pos = self.pos;
        let name = self.parse_ident()?;
        let args = if self.peek() == Some('(') {
            self.parse_args()?
        } else {
            Vec::new()
        };
        self.build(&name, name_pos, args)
    }

    fn parse_ident(&mut self) -> Result<String> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        if self.pos == start {
            return Err(self.error("expected a catalog name"));
        }
        Ok(self.input[start..self.pos].to_string())
    }

    fn parse_args(&mut self) -> Result<Vec<Arg>> {
        assert!(self.eat('('));
        let mut args = Vec::new();
        self.skip_ws();
        if self.eat(')') {
            return Ok(args);
        }
        loop {
            self.skip_ws();
            let arg_pos = self.pos;
            // optional `name=` prefix
            let name = if matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
                let ident = self.parse_ident()?;
                self.skip_ws();
                if self.eat('=') {
                    self.skip_ws();
                    Some(ident)
                } else {
                    return Err(self.error_at(arg_pos, format!("expected '=' after '{ident}'")));
                }
            } else {
                None
            };
            let value = self.parse_number()?;
            args.push(Arg {
                name,
                value,
                pos: arg_pos,
            });
            self.skip_ws();
            if self.eat(',') {
                continue;
            }
            if self.eat(')') {
                return Ok(args);
            }
            return Err(self.error("expected ',' or ')'"));
        }
    }

    fn parse_number(&mut self) -> Result<f64> {
        let start = self.pos;
        if matches!(self.peek(), Some('+' | '-')) {
            self.bump();
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
            self.bump();
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            self.bump();
            if matches!(self.peek(), Some('+' | '-')) {
                self.bump();
            }
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
        }
        let text = &self.input[start..self.pos];
        text.parse::<f64>()
            .map_err(|_| self.error_at(start, format!("expected a number, got '{text}'")))
    }

    fn build(&self, name: &str, name_pos: usize, args: Vec<Arg>) -> Result<GeneralizedFunction> {
        let positional = |args: &[Arg]| -> Result<Vec<f64>> {
            for a in args {
                if let Some(n) = &a.name {
                    return Err(self.error_at(a.pos, format!("unexpected named argument '{n}'")));
                }
            }
            Ok(args.iter().map(|a| a.value).collect())
        };
        match name {
            "clip" => {
                let tau = match args.as_slice() {
                    [a] if a.name.as_deref() == Some("tau") || a.name.is_none() => a.value,
                    _ => {
                        return Err(self.error_at(
                            name_pos,
                            "clip takes exactly one argument: clip(tau=T)",
                        ))
                    }
                };
                GeneralizedFunction::clip_1d(tau)
                    .map_err(|e| self.error_at(name_pos, e.to_string()))
            }
            "sign" => {
                if !args.is_empty() {
                    return Err(self.error_at(name_pos, "sign takes no arguments"));
                }
                Ok(GeneralizedFunction::sign_1d())
            }
            "relu" => {
                if !args.is_empty() {
                    return Err(self.error_at(name_pos, "relu takes no arguments"));
                }
                Ok(GeneralizedFunction::positive_part_1d())
            }
            "mono" => {
                if args.is_empty() {
                    return Err(self.error_at(name_pos, "mono needs at least one exponent"));
                }
                let vals = positional(&args)?;
                let mut gamma = Vec::with_capacity(vals.len());
                for (a, v) in args.iter().zip(&vals) {
                    if v.fract() != 0.0 || *v < 0.0 || *v > u32::MAX as f64 {
                        return Err(
                            self.error_at(a.pos, format!("exponent must be a nonnegative integer, got {v}"))
                        );
                    }
                    gamma.push(*v as u32);
                }
                Ok(GeneralizedFunction::monomial(&gamma))
            }
            "const" => {
                let vals = positional(&args)?;
                match vals.as_slice() {
                    [c] => Ok(GeneralizedFunction::constant(1, *c)),
                    _ => Err(self.error_at(name_pos, "const takes exactly one value")),
                }
            }
            "dirac" => {
                let vals = positional(&args)?;
                if vals.is_empty() {
                    return Err(self.error_at(name_pos, "dirac needs point coordinates"));
                }
                Ok(GeneralizedFunction::dirac(&vals, 1.0))
            }
            other => Err(self.error_at(
                name_pos,
                format!("unknown catalog name '{other}' (known: clip, sign, relu, mono, const, dirac)"),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn parses_clip_tensor() {
        let g = parse_nonlinearity("clip(tau=1.0)⊗clip(tau=1.0)").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.eval_fn(&[2.0, 0.5]).unwrap(), 0.5);
    }

    #[test]
    fn parses_ascii_tensor_alias() {
        let g = parse_nonlinearity("sign @ clip(0.5)").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.eval_fn(&[-3.0, 2.0]).unwrap(), -0.5);
    }

    #[test]
    fn parses_monomial() {
        let g = parse_nonlinearity("mono(2,1)").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.eval_fn(&[3.0, 4.0]).unwrap(), 36.0);
    }

    #[test]
    fn parses_const_and_dirac() {
        let g = parse_nonlinearity("const(2.5)").unwrap();
        assert_eq!(g.eval_fn(&[7.0]).unwrap(), 2.5);
        let g = parse_nonlinearity("dirac(0.5,-0.5)").unwrap();
        assert_eq!(g.atoms(), vec![(vec![0.5, -0.5], 1.0)]);
    }

    #[test]
    fn reports_position_of_unknown_name() {
        let err = parse_nonlinearity("clip(tau=1)⊗blob(2)").unwrap_err();
        let Error::Parse { pos, msg } = err else { panic!("wrong error") };
        // "clip(tau=1)" is 11 bytes, "⊗" is 3
        assert_eq!(pos, 14);
        assert!(msg.contains("blob"));
    }

    #[test]
    fn reports_position_of_bad_number() {
        let err = parse_nonlinearity("mono(2,x)").unwrap_err();
        let Error::Parse { pos, .. } = err else { panic!("wrong error") };
        assert_eq!(pos, 7);
    }

    #[test]
    fn rejects_nonpositive_tau() {
        assert!(parse_nonlinearity("clip(tau=0)").is_err());
        assert!(parse_nonlinearity("clip(-2)").is_err());
    }

    #[test]
    fn rejects_trailing_garbage() {
        assert!(parse_nonlinearity("sign sign").is_err());
        assert!(parse_nonlinearity("mono(1))").is_err());
    }

    #[test]
    fn rejects_fractional_exponent() {
        assert!(parse_nonlinearity("mono(1.5)").is_err());
    }
}
