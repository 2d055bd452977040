//! Text form of graded lines.
//!
//! ```text
//! gline  := gfactor ("(x)" gfactor)*
//! gfactor:= gatom ("^" ["-"] INT)?
//! gatom  := "1" | "(" gline ")" | NAME
//!         | "det_rf" "(" NAME "," expr ")" | "DetRf" "[" NAME "]" "(" expr ")"
//!         | "pairing" "(" NAME ("," expr)+ ")"
//!         | "Pull" "[" NAME "]" "(" gline ")" | "Adams" "[" INT "]" "(" gline ")"
//! ```

use num_bigint::BigInt;
use num_traits::One;

use super::{det_rf_atom, pairing_to_det, GradedLine, PairingExpr, PicError};
use crate::kexpr::{KexprError, Parser, SymbolTable, Tok};

fn gline(p: &mut Parser<'_>) -> Result<GradedLine, PicError> {
    let mut acc = gfactor(p)?;
    while *p.peek() == Tok::Tensor {
        p.bump();
        acc = acc.tensor(&gfactor(p)?);
    }
    Ok(acc)
}

fn gfactor(p: &mut Parser<'_>) -> Result<GradedLine, PicError> {
    let atom = gatom(p)?;
    if *p.peek() == Tok::Caret {
        p.bump();
        let k = p.signed_exponent()?;
        return Ok(atom.pow(k));
    }
    Ok(atom)
}

fn bracketed_name(p: &mut Parser<'_>) -> Result<String, KexprError> {
    p.expect(Tok::LBracket, "`[`")?;
    let name = p.expect_name()?;
    p.expect(Tok::RBracket, "`]`")?;
    Ok(name)
}

fn gatom(p: &mut Parser<'_>) -> Result<GradedLine, PicError> {
    let pos = p.pos();
    match p.peek().clone() {
        Tok::Int(n) if n == BigInt::one() => {
            p.bump();
            Ok(GradedLine::trivial())
        }
        Tok::LParen => {
            p.bump();
            let g = gline(p)?;
            p.expect(Tok::RParen, "`)`")?;
            Ok(g)
        }
        Tok::Name(name) => {
            p.bump();
            match name.as_str() {
                "det_rf" => {
                    p.expect(Tok::LParen, "`(`")?;
                    let m = p.expect_name()?;
                    p.expect(Tok::Comma, "`,`")?;
                    let e = p.expr()?;
                    p.expect(Tok::RParen, "`)`")?;
                    det_rf_atom(p.table(), &m, e)
                }
                "DetRf" => {
                    let m = bracketed_name(p)?;
                    p.expect(Tok::LParen, "`(`")?;
                    let e = p.expr()?;
                    p.expect(Tok::RParen, "`)`")?;
                    det_rf_atom(p.table(), &m, e)
                }
                "pairing" => {
                    p.expect(Tok::LParen, "`(`")?;
                    let m = p.expect_name()?;
                    let mut entries = Vec::new();
                    while *p.peek() == Tok::Comma {
                        p.bump();
                        entries.push(p.expr()?);
                    }
                    p.expect(Tok::RParen, "`)`")?;
                    pairing_to_det(&PairingExpr::new(&m, entries), p.table())
                }
                "Pull" => {
                    let m = bracketed_name(p)?;
                    p.expect(Tok::LParen, "`(`")?;
                    let g = gline(p)?;
                    p.expect(Tok::RParen, "`)`")?;
                    Ok(g.pullback(&m))
                }
                "Adams" => {
                    p.expect(Tok::LBracket, "`[`")?;
                    let k = p.expect_small_int()?;
                    p.expect(Tok::RBracket, "`]`")?;
                    p.expect(Tok::LParen, "`(`")?;
                    let g = gline(p)?;
                    p.expect(Tok::RParen, "`)`")?;
                    Ok(g.adams(k))
                }
                _ => Ok(GradedLine::free(&name, 0)),
            }
        }
        _ => Err(KexprError::Syntax { pos, message: "expected line factor".into() }.into()),
    }
}

fn parse_with(text: &str, table: &SymbolTable, lenient: bool) -> Result<GradedLine, PicError> {
    let mut p = Parser::new(text, table)?;
    if lenient {
        p = p.lenient();
    }
    let g = gline(&mut p)?;
    if !p.at_eof() {
        return Err(p.error("trailing input").into());
    }
    Ok(g)
}

/// Parses a graded line; expression symbols must be declared.
pub fn parse_graded(text: &str, table: &SymbolTable) -> Result<GradedLine, PicError> {
    parse_with(text, table, false)
}

/// Like [`parse_graded`] but undeclared names are read as bundles.
pub fn parse_graded_lenient(text: &str, table: &SymbolTable) -> Result<GradedLine, PicError> {
    parse_with(text, table, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::picdet::normalize;

    fn table() -> SymbolTable {
        SymbolTable::parse_declarations(
            "line L; bundle H0 rank 2; bundle H1 rank 2; bundle H rank 1; morphism f dim 1;",
        )
        .unwrap()
    }

    #[test]
    fn parses_atoms() {
        let t = table();
        let g = parse_graded("det_rf(f, L) (x) DetRf[f](H)^-2", &t).unwrap();
        assert_eq!(g.render_line(), "DetRf[f](H)^-2 (x) DetRf[f](L)");
        let g = parse_graded("Adams[2](DetRf[f](L))^3 (x) M", &t).unwrap();
        assert_eq!(g.render_line(), "Adams[2](DetRf[f](L))^3 (x) M");
        let g = parse_graded("Pull[g](DetRf[f](L) (x) M)", &t).unwrap();
        assert_eq!(g.render_line(), "Pull[g](DetRf[f](L)) (x) Pull[g](M)");
    }

    #[test]
    fn trivial_pattern_normalizes_away() {
        let t = table();
        let g = parse_graded("det_rf(f, (H0-H1)^3 (x) H)", &t).unwrap();
        assert!(normalize(&g, &t).is_trivial());
    }

    #[test]
    fn render_round_trips() {
        let t = table();
        let g = parse_graded("DetRf[f](L - 1)^2 (x) Pull[g](DetRf[f](H))", &t).unwrap();
        let again = parse_graded(&g.render_line(), &t).unwrap();
        assert_eq!(again.render_line(), g.render_line());
    }

    #[test]
    fn errors() {
        let t = table();
        assert!(parse_graded("det_rf(h, L)", &t).is_err());
        assert!(parse_graded("det_rf(f, Q)", &t).is_err());
        assert!(parse_graded_lenient("det_rf(f, Q)", &t).is_ok());
        assert!(parse_graded("DetRf[f](L) (x)", &t).is_err());
    }
}
