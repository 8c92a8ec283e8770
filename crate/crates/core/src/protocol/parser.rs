//! Recursive-descent parser for the protocol language.
//!
//! ```text
//! protocol := stmt*
//! stmt     := query | branch | action
//! query    := "get" "(" binding ("," binding)* ")" "from" classref ("," classref)* ["where" cond+] ";"
//! binding  := NAME ":" (NAME | "*")
//! classref := NAME ("." NAME)*
//! cond     := "(" operand CMP operand ")"
//! branch   := "if" cond+ block ["else" (block | branch)]
//! block    := "{" stmt* "}"
//! action   := "do" NAME "(" [operand ("," operand)*] ")" ";"
//! ```
//!
//! Scoping is checked while parsing: a variable may only be read where it is
//! instantiated on every path, and a name introduced inside one block cannot
//! be re-bound elsewhere.

use std::collections::BTreeSet;

use super::ast::*;
use super::lexer::{tokenize, Pos, Tok};
use super::ParseError;
use crate::value::DateField;

pub fn parse_protocol(src: &str) -> Result<ProtocolAst, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens,
        at: 0,
        next_query: 1,
        next_branch: 1,
        introduced: BTreeSet::new(),
    };
    let mut definite = BTreeSet::new();
    let statements = p.block_body(&mut definite, true)?;
    Ok(ProtocolAst { statements })
}

struct Parser {
    tokens: Vec<(Tok, Pos)>,
    at: usize,
    next_query: usize,
    next_branch: usize,
    /// Every variable bound so far, on any path.
    introduced: BTreeSet<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].0
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].1
    }

    fn advance(&mut self) -> (Tok, Pos) {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn syntax<T>(&self, pos: Pos, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        })
    }

    fn semantic<T>(&self, pos: Pos, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Semantic {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<Pos, ParseError> {
        let pos = self.pos();
        if *self.peek() == want {
            self.advance();
            Ok(pos)
        } else {
            let found = self.peek().describe();
            self.syntax(pos, format!("expected {}, found {found}", want.describe()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok((name, pos))
            }
            other => self.syntax(pos, format!("expected {what}, found {}", other.describe())),
        }
    }

    fn block_body(
        &mut self,
        definite: &mut BTreeSet<String>,
        top: bool,
    ) -> Result<Vec<Statement>, ParseError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof if top => return Ok(out),
                Tok::RBrace if !top => return Ok(out),
                Tok::Get => out.push(Statement::Query(self.query(definite)?)),
                Tok::If => out.push(Statement::Branch(self.branch(definite)?)),
                Tok::Do => out.push(Statement::Action(self.action(definite)?)),
                other => {
                    let found = other.describe();
                    return self.syntax(
                        self.pos(),
                        format!("expected `get`, `if` or `do`, found {found}"),
                    );
                }
            }
        }
    }

    fn query(&mut self, definite: &mut BTreeSet<String>) -> Result<Query, ParseError> {
        self.expect(Tok::Get)?;
        let id = QueryId(self.next_query);
        self.next_query += 1;

        self.expect(Tok::LParen)?;
        let mut bindings = Vec::new();
        let mut fresh: BTreeSet<String> = BTreeSet::new();
        loop {
            let (attribute, _) = self.ident("attribute name")?;
            self.expect(Tok::Colon)?;
            let pos = self.pos();
            let variable = match self.peek().clone() {
                Tok::Star => {
                    self.advance();
                    None
                }
                Tok::Ident(v) => {
                    self.advance();
                    if !definite.contains(&v) && !fresh.contains(&v) {
                        if self.introduced.contains(&v) {
                            return self.semantic(
                                pos,
                                format!(
                                    "variable `{v}` is bound on another branch and is not \
                                     instantiated here"
                                ),
                            );
                        }
                        fresh.insert(v.clone());
                    }
                    Some(v)
                }
                other => {
                    return self.syntax(
                        pos,
                        format!("expected variable or `*`, found {}", other.describe()),
                    )
                }
            };
            bindings.push(Binding {
                attribute,
                variable,
            });
            if *self.peek() == Tok::Comma {
                self.advance();
            } else {
                break;
            }
        }
        self.expect(Tok::RParen)?;

        self.expect(Tok::From)?;
        let mut class_refs = vec![self.class_ref()?];
        while *self.peek() == Tok::Comma {
            self.advance();
            class_refs.push(self.class_ref()?);
        }

        let mut conditions = Vec::new();
        if *self.peek() == Tok::Where {
            self.advance();
            let scope: BTreeSet<String> = definite.union(&fresh).cloned().collect();
            conditions.push(self.condition(&scope)?);
            while *self.peek() == Tok::LParen {
                conditions.push(self.condition(&scope)?);
            }
        }
        self.expect(Tok::Semi)?;

        self.introduced.extend(fresh.iter().cloned());
        definite.extend(fresh);
        Ok(Query {
            id,
            bindings,
            class_refs,
            conditions,
        })
    }

    fn class_ref(&mut self) -> Result<ClassRef, ParseError> {
        let (first, _) = self.ident("class name")?;
        let mut names = vec![first];
        while *self.peek() == Tok::Dot {
            self.advance();
            let (next, pos) = self.ident("class name")?;
            if names.last() == Some(&next) {
                return self.semantic(
                    pos,
                    format!("specialization sequence repeats `{next}` consecutively"),
                );
            }
            names.push(next);
        }
        Ok(ClassRef(names))
    }

    fn condition(&mut self, scope: &BTreeSet<String>) -> Result<Condition, ParseError> {
        self.expect(Tok::LParen)?;
        let lhs = self.operand(scope)?;
        let pos = self.pos();
        let op = match self.advance().0 {
            Tok::Cmp(op) => op,
            other => {
                return self.syntax(
                    pos,
                    format!("expected comparison operator, found {}", other.describe()),
                )
            }
        };
        let rhs = self.operand(scope)?;
        self.expect(Tok::RParen)?;
        Ok(Condition { lhs, op, rhs })
    }

    fn operand(&mut self, scope: &BTreeSet<String>) -> Result<Operand, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Lit(v) => {
                self.advance();
                Ok(Operand::Literal(v))
            }
            Tok::Ident(name) => {
                self.advance();
                if !scope.contains(&name) {
                    return self.semantic(
                        pos,
                        format!("variable `{name}` is read before it is instantiated"),
                    );
                }
                if *self.peek() == Tok::Dot {
                    self.advance();
                    let (field, fpos) = self.ident("date field")?;
                    match DateField::parse(&field) {
                        Some(f) => Ok(Operand::Field(name, f)),
                        None => self.semantic(
                            fpos,
                            format!("unknown field `{field}`; expected year, month or day"),
                        ),
                    }
                } else {
                    Ok(Operand::Var(name))
                }
            }
            other => self.syntax(
                pos,
                format!("expected variable or literal, found {}", other.describe()),
            ),
        }
    }

    fn branch(&mut self, definite: &mut BTreeSet<String>) -> Result<Branch, ParseError> {
        self.expect(Tok::If)?;
        let id = BranchId(self.next_branch);
        self.next_branch += 1;
        let mut conditions = vec![self.condition(definite)?];
        while *self.peek() == Tok::LParen {
            conditions.push(self.condition(definite)?);
        }
        let then_block = self.block(definite)?;
        let else_block = if *self.peek() == Tok::Else {
            self.advance();
            if *self.peek() == Tok::If {
                let mut inner = definite.clone();
                Some(vec![Statement::Branch(self.branch(&mut inner)?)])
            } else {
                Some(self.block(definite)?)
            }
        } else {
            None
        };
        Ok(Branch {
            id,
            conditions,
            then_block,
            else_block,
        })
    }

    fn block(&mut self, definite: &BTreeSet<String>) -> Result<Vec<Statement>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut inner = definite.clone();
        let body = self.block_body(&mut inner, false)?;
        self.expect(Tok::RBrace)?;
        Ok(body)
    }

    fn action(&mut self, definite: &BTreeSet<String>) -> Result<Action, ParseError> {
        self.expect(Tok::Do)?;
        let (name, _) = self.ident("action name")?;
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            args.push(self.operand(definite)?);
            while *self.peek() == Tok::Comma {
                self.advance();
                args.push(self.operand(definite)?);
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Semi)?;
        Ok(Action { name, args })
    }
}
