//! Recursive descent parser for the ASCII formula grammar.
//!
//! ```text
//! formula := iff
//! iff     := imp ("<->" imp)*        left associative
//! imp     := or ("->" imp)?          right associative
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "~" unary | "K" "{" agent "}" unary | "D" unary | "C" unary
//!          | atom | "(" formula ")"
//! ```

use super::{is_identifier, Agent, AgentSet, Formula, FormulaError};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Not,
    And,
    Or,
    Imp,
    Iff,
    Knows,
    Dist,
    Common,
    LBrace,
    RBrace,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, FormulaError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let token = match c {
            '~' => Token::Not,
            '&' => Token::And,
            '|' => Token::Or,
            '{' => Token::LBrace,
            '}' => Token::RBrace,
            '(' => Token::LParen,
            ')' => Token::RParen,
            'K' => Token::Knows,
            'D' => Token::Dist,
            'C' => Token::Common,
            '-' if text[i..].starts_with("->") => {
                i += 1;
                Token::Imp
            }
            '<' if text[i..].starts_with("<->") => {
                i += 2;
                Token::Iff
            }
            c if c.is_ascii_lowercase() => {
                while i + 1 < bytes.len()
                    && ((bytes[i + 1] as char).is_ascii_alphanumeric() || bytes[i + 1] == b'_')
                {
                    i += 1;
                }
                Token::Ident(text[start..=i].to_string())
            }
            other => {
                return Err(FormulaError::Syntax {
                    pos: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        tokens.push((start, token));
        i += 1;
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
    agents: Option<&'a AgentSet>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            pos: self.offset(),
            message: message.into(),
        })
    }

    fn eat(&mut self, token: &Token) -> bool {
        if self.peek() == Some(token) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<(), FormulaError> {
        if self.eat(&token) {
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn iff(&mut self) -> Result<Formula, FormulaError> {
        let mut left = self.imp()?;
        while self.eat(&Token::Iff) {
            let right = self.imp()?;
            left = left.iff(right);
        }
        Ok(left)
    }

    fn imp(&mut self) -> Result<Formula, FormulaError> {
        let left = self.or()?;
        if self.eat(&Token::Imp) {
            let right = self.imp()?;
            return Ok(left.implies(right));
        }
        Ok(left)
    }

    fn or(&mut self) -> Result<Formula, FormulaError> {
        let mut left = self.and()?;
        while self.eat(&Token::Or) {
            let right = self.and()?;
            left = left.or(right);
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<Formula, FormulaError> {
        let mut left = self.unary()?;
        while self.eat(&Token::And) {
            let right = self.unary()?;
            left = left.and(right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(self.unary()?.not())
            }
            Some(Token::Dist) => {
                self.pos += 1;
                Ok(Formula::dist(self.unary()?))
            }
            Some(Token::Common) => {
                self.pos += 1;
                Ok(Formula::common(self.unary()?))
            }
            Some(Token::Knows) => {
                self.pos += 1;
                self.expect(Token::LBrace, "`{` after `K`")?;
                let agent_pos = self.offset();
                let name = match self.peek().cloned() {
                    Some(Token::Ident(name)) => name,
                    _ => return self.error("expected an agent name"),
                };
                self.pos += 1;
                self.expect(Token::RBrace, "`}` after the agent name")?;
                let agent = Agent::new(&name)?;
                if let Some(agents) = self.agents {
                    if !agents.contains(&agent) {
                        return Err(FormulaError::UnknownAgent {
                            name,
                            pos: agent_pos,
                        });
                    }
                }
                Ok(Formula::knows(&agent, self.unary()?))
            }
            Some(Token::Ident(name)) => {
                debug_assert!(is_identifier(&name));
                self.pos += 1;
                Ok(Formula::atom(&name))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.iff()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Some(_) => Err(FormulaError::Syntax {
                pos: at,
                message: "expected a formula".into(),
            }),
            None => self.error("unexpected end of input"),
        }
    }
}

fn parse_with(text: &str, agents: Option<&AgentSet>) -> Result<Formula, FormulaError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        agents,
    };
    let formula = parser.iff()?;
    if parser.pos != parser.tokens.len() {
        return parser.error("unexpected trailing input");
    }
    Ok(formula)
}

/// Parses `text`, rejecting agents outside `agents`.
pub fn parse(text: &str, agents: &AgentSet) -> Result<Formula, FormulaError> {
    parse_with(text, Some(agents))
}

/// Parses `text` accepting any well-formed agent name.
pub fn parse_unchecked(text: &str) -> Result<Formula, FormulaError> {
    parse_with(text, None)
}
