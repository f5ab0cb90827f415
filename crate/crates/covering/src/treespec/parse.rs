//! Hand-written recursive descent parser for the tree DSL.

use crate::arith::is_prime;

use super::{Child, FactorToken, Leaf, Power, Termination, TreeError, TreeNode, TreeSpec, Wedge};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Int(u64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Star,
    Caret,
    At,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = *self.src.get(self.pos)?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, TreeError> {
        let mut out = Vec::new();
        while let Some(b) = self.peek() {
            let (line, col) = (self.line, self.col);
            match b {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.bump();
                }
                b'#' => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                b'{' | b'}' | b'[' | b']' | b';' | b',' | b'*' | b'^' | b'@' => {
                    self.bump();
                    let tok = match b {
                        b'{' => Tok::LBrace,
                        b'}' => Tok::RBrace,
                        b'[' => Tok::LBracket,
                        b']' => Tok::RBracket,
                        b';' => Tok::Semi,
                        b',' => Tok::Comma,
                        b'*' => Tok::Star,
                        b'^' => Tok::Caret,
                        _ => Tok::At,
                    };
                    out.push(Spanned { tok, line, col });
                }
                b'0'..=b'9' => {
                    let mut v: u64 = 0;
                    while let Some(c) = self.peek() {
                        if !c.is_ascii_digit() {
                            break;
                        }
                        v = v
                            .checked_mul(10)
                            .and_then(|v| v.checked_add((c - b'0') as u64))
                            .ok_or(TreeError::Syntax {
                                line,
                                col,
                                msg: "integer literal overflows 64 bits".into(),
                            })?;
                        self.bump();
                    }
                    out.push(Spanned {
                        tok: Tok::Int(v),
                        line,
                        col,
                    });
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    let mut w = String::new();
                    while let Some(c) = self.peek() {
                        if !(c.is_ascii_alphanumeric() || c == b'_') {
                            break;
                        }
                        w.push(c as char);
                        self.bump();
                    }
                    out.push(Spanned {
                        tok: Tok::Word(w),
                        line,
                        col,
                    });
                }
                other => {
                    return Err(TreeError::Syntax {
                        line,
                        col,
                        msg: format!("unexpected character {:?}", other as char),
                    })
                }
            }
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn err_here(&self, msg: impl Into<String>) -> TreeError {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .or_else(|| self.toks.last().map(|s| (s.line, s.col + 1)))
            .unwrap_or((1, 1));
        TreeError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), TreeError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err_here(format!("expected {}", what))),
        }
    }

    fn expect_word(&mut self, word: &str) -> Result<(), TreeError> {
        match self.peek() {
            Some(Tok::Word(w)) if w == word => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err_here(format!("expected `{}`", word))),
        }
    }

    fn expect_int(&mut self, what: &str) -> Result<u64, TreeError> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err_here(format!("expected {}", what))),
        }
    }

    fn expect_prime(&mut self, what: &str) -> Result<u64, TreeError> {
        let v = self.expect_int(what)?;
        if !is_prime(v) {
            return Err(TreeError::NonPrime { value: v });
        }
        Ok(v)
    }

    fn tree(&mut self) -> Result<TreeSpec, TreeError> {
        let declared_q = if matches!(self.peek(), Some(Tok::Word(w)) if w == "q") {
            self.bump();
            let q = self.expect_prime("a prime after `q`")?;
            self.expect(Tok::Semi, "`;`")?;
            Some(q)
        } else {
            None
        };
        let root = self.node()?;
        if self.pos != self.toks.len() {
            return Err(self.err_here("trailing input after the root node"));
        }
        Ok(TreeSpec { root, declared_q })
    }

    fn node(&mut self) -> Result<TreeNode, TreeError> {
        self.expect_word("node")?;
        let prime = self.expect_prime("a prime after `node`")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut children = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::RBrace) => {
                    self.bump();
                    break;
                }
                Some(Tok::Word(w)) => {
                    let child = match w.as_str() {
                        "node" => Child::Node(self.node()?),
                        "leaf" => Child::Leaf(self.leaf()?),
                        "wedge" => Child::Wedge(self.wedge()?),
                        "power" => Child::Power(self.power()?),
                        other => {
                            return Err(self.err_here(format!(
                                "expected `node`, `leaf`, `wedge`, `power`, or `}}`, found `{}`",
                                other
                            )))
                        }
                    };
                    children.push(child);
                }
                _ => return Err(self.err_here("expected a child or `}`")),
            }
        }
        Ok(TreeNode { prime, children })
    }

    fn leaf(&mut self) -> Result<Leaf, TreeError> {
        self.expect_word("leaf")?;
        self.expect(Tok::LBracket, "`[`")?;
        let retained = self.factors()?;
        self.expect(Tok::RBracket, "`]`")?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(Leaf { retained })
    }

    fn wedge(&mut self) -> Result<Wedge, TreeError> {
        self.expect_word("wedge")?;
        self.expect(Tok::LBrace, "`{`")?;
        let optional_factors = self.factors()?;
        self.expect(Tok::RBrace, "`}`")?;
        self.expect_word("x")?;
        self.expect(Tok::LBracket, "`[`")?;
        let base = self.factors()?;
        self.expect(Tok::RBracket, "`]`")?;
        self.expect_word("take")?;
        let take = self.expect_int("a branch count after `take`")?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(Wedge {
            optional_factors,
            base,
            take,
        })
    }

    fn power(&mut self) -> Result<Power, TreeError> {
        self.expect_word("power")?;
        let base_prime = self.expect_prime("a prime after `power`")?;
        let start_exponent = if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let e = self.expect_int("an exponent after `^`")?;
            u32::try_from(e).map_err(|_| self.err_here("exponent too large"))?
        } else {
            1
        };
        if start_exponent == 0 {
            return Err(self.err_here("power exponent must be at least 1"));
        }
        let termination = if matches!(self.peek(), Some(Tok::Word(w)) if w == "term") {
            self.bump();
            match self.bump() {
                Some(Tok::Word(w)) if w == "minimal" => Termination::Minimal,
                Some(Tok::Word(w)) if w == "full" => Termination::FullContext,
                _ => return Err(self.err_here("expected `minimal` or `full` after `term`")),
            }
        } else {
            Termination::default()
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(Power {
            base_prime,
            start_exponent,
            termination,
        })
    }

    fn factors(&mut self) -> Result<Vec<FactorToken>, TreeError> {
        let mut out = vec![self.factor()?];
        while matches!(self.peek(), Some(Tok::Comma) | Some(Tok::Star)) {
            self.bump();
            out.push(self.factor()?);
        }
        Ok(out)
    }

    fn factor(&mut self) -> Result<FactorToken, TreeError> {
        if matches!(self.peek(), Some(Tok::At)) {
            self.bump();
            let prime = self.expect_prime("a prime after `@`")?;
            return Ok(FactorToken::PathRef { prime });
        }
        let prime = self.expect_prime("a prime factor")?;
        let exp = if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let e = self.expect_int("an exponent after `^`")?;
            let e = u32::try_from(e).map_err(|_| self.err_here("exponent too large"))?;
            if e == 0 {
                return Err(self.err_here("exponent must be at least 1"));
            }
            e
        } else {
            1
        };
        Ok(FactorToken::Literal { prime, exp })
    }
}

/// Parses the DSL text and checks the purely structural invariants: child
/// counts, wedge sizes, power placement.
pub fn parse_tree(text: &str) -> Result<TreeSpec, TreeError> {
    let toks = Lexer::new(text).tokens()?;
    let mut parser = Parser { toks, pos: 0 };
    let tree = parser.tree()?;
    super::validate::validate_shape(&tree)?;
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_plain_tree() {
        let t = parse_tree("node 2 { node 3 { leaf [3]; leaf [2*3]; leaf [2]; } leaf [2]; }")
            .unwrap();
        assert_eq!(t.root.prime, 2);
        assert_eq!(t.root.children.len(), 2);
        assert_eq!(t.declared_q, None);
    }

    #[test]
    fn parses_the_q_header() {
        let t = parse_tree("q 23; node 2 { leaf [2]; leaf [2]; }").unwrap();
        assert_eq!(t.declared_q, Some(23));
    }

    #[test]
    fn child_count_mismatch_is_reported() {
        let err = parse_tree("node 3 { leaf [3]; leaf [3]; }").unwrap_err();
        match err {
            TreeError::ChildCountMismatch {
                expected, actual, ..
            } => {
                assert_eq!(expected, 3);
                assert_eq!(actual, 2);
            }
            other => panic!("expected ChildCountMismatch, got {:?}", other),
        }
    }

    #[test]
    fn wedge_take_fills_the_node_and_boundary_errors() {
        let ok = parse_tree("node 5 { wedge {7,3} x [5] take 4 ; leaf [@5]; }").unwrap();
        assert_eq!(ok.root.effective_child_count(), 5);

        let err = parse_tree("node 6 { wedge {7,3} x [5] take 5 ; leaf [@5]; }").unwrap_err();
        assert!(matches!(err, TreeError::NonPrime { value: 6 }));

        let err = parse_tree("node 5 { wedge {7} x [5] take 5 ; }").unwrap_err();
        match err {
            TreeError::WedgeTakeTooLarge {
                take, available, ..
            } => {
                assert_eq!(take, 5);
                assert_eq!(available, 2);
            }
            other => panic!("expected WedgeTakeTooLarge, got {:?}", other),
        }
    }

    #[test]
    fn power_forms() {
        let t = parse_tree("node 3 { power 3; leaf [3]; leaf [3]; }").unwrap();
        match &t.root.children[0] {
            Child::Power(p) => {
                assert_eq!(p.base_prime, 3);
                assert_eq!(p.start_exponent, 1);
                assert_eq!(p.termination, Termination::Minimal);
            }
            other => panic!("expected power, got {:?}", other),
        }
        let t = parse_tree("node 7 { power 7^2 term full; wedge {3,5} x [7^2] take 4; leaf [7]; leaf [7]; }")
            .unwrap();
        match &t.root.children[0] {
            Child::Power(p) => {
                assert_eq!(p.start_exponent, 2);
                assert_eq!(p.termination, Termination::FullContext);
            }
            other => panic!("expected power, got {:?}", other),
        }
    }

    #[test]
    fn power_must_be_leftmost_and_unique() {
        let err = parse_tree("node 3 { leaf [3]; power 3; leaf [3]; }").unwrap_err();
        assert!(matches!(err, TreeError::PowerNotLeftmost { .. }));
        let err = parse_tree("node 3 { power 3; power 3; leaf [3]; }").unwrap_err();
        assert!(matches!(err, TreeError::DuplicatePower { .. }));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_tree("node 2 {\n  leaf [2);\n}").unwrap_err();
        match err {
            TreeError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("expected Syntax, got {:?}", other),
        }
    }
}
