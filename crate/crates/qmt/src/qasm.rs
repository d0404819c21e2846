//! OpenQASM 3 export and a subset parser.
//!
//! Mutants are exported fully bound (weights and data substituted) so the
//! text re-executes on any stack without parameter declarations. The parser
//! accepts exactly the subset the emitter produces plus literal π-expression
//! angles, and reports syntax errors with line and column.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::circuit::{Bindings, Circuit, CircuitError, GateKind, Instruction, ParamExpr};

#[derive(Debug, Error, PartialEq)]
pub enum QasmError {
    #[error("circuit has unbound symbols; bind before export")]
    Unbound,
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}, column {col}: unsupported gate `{name}`")]
    UnsupportedGate { name: String, line: usize, col: usize },
    #[error("line {line}, column {col}: gate `{name}` expects {expected} operand(s), got {got}")]
    OperandCount {
        name: String,
        expected: usize,
        got: usize,
        line: usize,
        col: usize,
    },
    #[error("line {line}, column {col}: index {index} out of range for register of width {width}")]
    IndexOutOfRange {
        index: usize,
        width: usize,
        line: usize,
        col: usize,
    },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Emit a fully bound circuit as OpenQASM 3 text. Deterministic: identical
/// circuits produce byte-identical text. Angles are printed with the
/// shortest decimal that round-trips the binary value.
pub fn emit(circuit: &Circuit) -> Result<String, QasmError> {
    if !circuit.is_bound() {
        return Err(QasmError::Unbound);
    }
    let empty = Bindings::new();
    let mut out = String::new();
    out.push_str("OPENQASM 3.0;\n");
    out.push_str("include \"stdgates.inc\";\n");
    out.push_str(&format!("qubit[{}] q;\n", circuit.n_qubits()));
    let measured: Vec<usize> = circuit.measured_qubits().iter().copied().collect();
    if !measured.is_empty() {
        out.push_str(&format!("bit[{}] c;\n", measured.len()));
    }
    for inst in circuit.instructions() {
        let operands: Vec<String> = inst.qubits.iter().map(|q| format!("q[{q}]")).collect();
        match &inst.angle {
            Some(expr) => {
                let value = expr.eval(&empty).map_err(|_| QasmError::Unbound)?;
                out.push_str(&format!(
                    "{}({:?}) {};\n",
                    inst.kind,
                    value,
                    operands.join(", ")
                ));
            }
            None => out.push_str(&format!("{} {};\n", inst.kind, operands.join(", "))),
        }
    }
    for (i, q) in measured.iter().enumerate() {
        out.push_str(&format!("c[{i}] = measure q[{q}];\n"));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Equals,
    Plus,
    Minus,
    Star,
    Slash,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, QasmError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&ch) = chars.peek() {
        let (tl, tc) = (line, col);
        let bump = |c: char, line: &mut usize, col: &mut usize| {
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        match ch {
            ' ' | '\t' | '\r' | '\n' => {
                chars.next();
                bump(ch, &mut line, &mut col);
            }
            '/' => {
                chars.next();
                bump('/', &mut line, &mut col);
                if chars.peek() == Some(&'/') {
                    while let Some(&c) = chars.peek() {
                        chars.next();
                        bump(c, &mut line, &mut col);
                        if c == '\n' {
                            break;
                        }
                    }
                } else {
                    tokens.push(Token { tok: Tok::Slash, line: tl, col: tc });
                }
            }
            '"' => {
                chars.next();
                bump('"', &mut line, &mut col);
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => {
                            bump('"', &mut line, &mut col);
                            break;
                        }
                        Some(c) => {
                            bump(c, &mut line, &mut col);
                            s.push(c);
                        }
                        None => {
                            return Err(QasmError::Syntax {
                                line: tl,
                                col: tc,
                                msg: "unterminated string".into(),
                            })
                        }
                    }
                }
                tokens.push(Token { tok: Tok::Str(s), line: tl, col: tc });
            }
            '(' | ')' | '[' | ']' | ',' | ';' | '=' | '+' | '-' | '*' => {
                chars.next();
                bump(ch, &mut line, &mut col);
                let tok = match ch {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '=' => Tok::Equals,
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    _ => Tok::Star,
                };
                tokens.push(Token { tok, line: tl, col: tc });
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() || d == '.' {
                        s.push(d);
                        chars.next();
                        bump(d, &mut line, &mut col);
                    } else if d == 'e' || d == 'E' {
                        s.push(d);
                        chars.next();
                        bump(d, &mut line, &mut col);
                        if let Some(&sign @ ('+' | '-')) = chars.peek() {
                            s.push(sign);
                            chars.next();
                            bump(sign, &mut line, &mut col);
                        }
                    } else {
                        break;
                    }
                }
                let value = s.parse::<f64>().map_err(|_| QasmError::Syntax {
                    line: tl,
                    col: tc,
                    msg: format!("invalid number `{s}`"),
                })?;
                tokens.push(Token { tok: Tok::Number(value), line: tl, col: tc });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        chars.next();
                        bump(d, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                tokens.push(Token { tok: Tok::Ident(s), line: tl, col: tc });
            }
            other => {
                return Err(QasmError::Syntax {
                    line: tl,
                    col: tc,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, msg: impl Into<String>) -> QasmError {
        let (line, col) = self
            .peek()
            .map(|t| (t.line, t.col))
            .or_else(|| self.tokens.last().map(|t| (t.line, t.col)))
            .unwrap_or((1, 1));
        QasmError::Syntax { line, col, msg: msg.into() }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, QasmError> {
        match self.next() {
            Some(t) if t.tok == want => Ok(t),
            Some(t) => Err(QasmError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected {what}"),
            }),
            None => Err(self.err_here(format!("expected {what}, found end of input"))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, usize, usize), QasmError> {
        match self.next() {
            Some(Token { tok: Tok::Ident(s), line, col }) => Ok((s, line, col)),
            Some(t) => Err(QasmError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected {what}"),
            }),
            None => Err(self.err_here(format!("expected {what}, found end of input"))),
        }
    }

    fn expect_index(&mut self) -> Result<(usize, usize, usize), QasmError> {
        self.expect(Tok::LBracket, "`[`")?;
        let (value, line, col) = match self.next() {
            Some(Token { tok: Tok::Number(n), line, col }) => (n, line, col),
            Some(t) => {
                return Err(QasmError::Syntax {
                    line: t.line,
                    col: t.col,
                    msg: "expected index".into(),
                })
            }
            None => return Err(self.err_here("expected index, found end of input")),
        };
        self.expect(Tok::RBracket, "`]`")?;
        if value.fract() != 0.0 || value < 0.0 {
            return Err(QasmError::Syntax { line, col, msg: format!("invalid index {value}") });
        }
        Ok((value as usize, line, col))
    }

    // expr := term ((+|-) term)*
    fn parse_expr(&mut self) -> Result<f64, QasmError> {
        let mut acc = self.parse_term()?;
        loop {
            match self.peek().map(|t| t.tok.clone()) {
                Some(Tok::Plus) => {
                    self.next();
                    acc += self.parse_term()?;
                }
                Some(Tok::Minus) => {
                    self.next();
                    acc -= self.parse_term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    // term := factor ((*|/) factor)*
    fn parse_term(&mut self) -> Result<f64, QasmError> {
        let mut acc = self.parse_factor()?;
        loop {
            match self.peek().map(|t| t.tok.clone()) {
                Some(Tok::Star) => {
                    self.next();
                    acc *= self.parse_factor()?;
                }
                Some(Tok::Slash) => {
                    self.next();
                    acc /= self.parse_factor()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    // factor := NUMBER | pi | tau | - factor | ( expr )
    fn parse_factor(&mut self) -> Result<f64, QasmError> {
        match self.next() {
            Some(Token { tok: Tok::Number(n), .. }) => Ok(n),
            Some(Token { tok: Tok::Ident(ref s), .. }) if s == "pi" => Ok(std::f64::consts::PI),
            Some(Token { tok: Tok::Ident(ref s), .. }) if s == "tau" => Ok(std::f64::consts::TAU),
            Some(Token { tok: Tok::Minus, .. }) => Ok(-self.parse_factor()?),
            Some(Token { tok: Tok::LParen, .. }) => {
                let v = self.parse_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(v)
            }
            Some(t) => Err(QasmError::Syntax {
                line: t.line,
                col: t.col,
                msg: "expected angle expression".into(),
            }),
            None => Err(self.err_here("expected angle expression, found end of input")),
        }
    }
}

/// Parse the supported OpenQASM 3 subset: version line, `stdgates.inc`
/// include, one qubit and one bit register, the fixed gate set with literal
/// or π-expression angles, and measure statements in either
/// `c[i] = measure q[j];` or bare `measure q[j];` form.
pub fn parse(text: &str) -> Result<Circuit, QasmError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };

    let (kw, line, col) = p.expect_ident("`OPENQASM`")?;
    if kw != "OPENQASM" {
        return Err(QasmError::Syntax { line, col, msg: "expected `OPENQASM`".into() });
    }
    match p.next() {
        Some(Token { tok: Tok::Number(v), line, col }) => {
            if v.trunc() != 3.0 {
                return Err(QasmError::Syntax {
                    line,
                    col,
                    msg: format!("unsupported version {v}"),
                });
            }
        }
        _ => return Err(p.err_here("expected version number")),
    }
    p.expect(Tok::Semi, "`;`")?;

    let mut qreg: Option<(String, usize)> = None;
    let mut circuit: Option<Circuit> = None;
    let mut creg_width: Option<usize> = None;
    let mut measured: Vec<usize> = Vec::new();

    while let Some(token) = p.peek().cloned() {
        match token.tok {
            Tok::Ident(ref word) => match word.as_str() {
                "include" => {
                    p.next();
                    match p.next() {
                        Some(Token { tok: Tok::Str(_), .. }) => {}
                        _ => return Err(p.err_here("expected include path string")),
                    }
                    p.expect(Tok::Semi, "`;`")?;
                }
                "qubit" => {
                    p.next();
                    let (width, wl, wc) = p.expect_index()?;
                    if qreg.is_some() {
                        return Err(QasmError::Syntax {
                            line: wl,
                            col: wc,
                            msg: "multiple qubit registers are not supported".into(),
                        });
                    }
                    let (name, ..) = p.expect_ident("register name")?;
                    p.expect(Tok::Semi, "`;`")?;
                    qreg = Some((name, width));
                    circuit = Some(Circuit::new(width));
                }
                "bit" => {
                    p.next();
                    let (width, ..) = p.expect_index()?;
                    let (_name, ..) = p.expect_ident("register name")?;
                    p.expect(Tok::Semi, "`;`")?;
                    creg_width = Some(width);
                }
                "measure" => {
                    p.next();
                    let q = parse_qubit_operand(&mut p, &qreg)?;
                    p.expect(Tok::Semi, "`;`")?;
                    measured.push(q);
                }
                _ => {
                    // gate statement or `c[i] = measure q[j];`
                    let (name, nl, nc) = p.expect_ident("statement")?;
                    if p.peek().map(|t| t.tok.clone()) == Some(Tok::LBracket) {
                        let (index, il, ic) = p.expect_index()?;
                        p.expect(Tok::Equals, "`=`")?;
                        let (kw, kl, kc) = p.expect_ident("`measure`")?;
                        if kw != "measure" {
                            return Err(QasmError::Syntax {
                                line: kl,
                                col: kc,
                                msg: "expected `measure`".into(),
                            });
                        }
                        if let Some(width) = creg_width {
                            if index >= width {
                                return Err(QasmError::IndexOutOfRange {
                                    index,
                                    width,
                                    line: il,
                                    col: ic,
                                });
                            }
                        }
                        let q = parse_qubit_operand(&mut p, &qreg)?;
                        p.expect(Tok::Semi, "`;`")?;
                        measured.push(q);
                    } else {
                        let kind = GateKind::from_qasm_name(&name).ok_or(QasmError::UnsupportedGate {
                            name: name.clone(),
                            line: nl,
                            col: nc,
                        })?;
                        let angle = if p.peek().map(|t| t.tok.clone()) == Some(Tok::LParen) {
                            p.next();
                            let v = p.parse_expr()?;
                            p.expect(Tok::RParen, "`)`")?;
                            Some(v)
                        } else {
                            None
                        };
                        let mut qubits = vec![parse_qubit_operand(&mut p, &qreg)?];
                        while p.peek().map(|t| t.tok.clone()) == Some(Tok::Comma) {
                            p.next();
                            qubits.push(parse_qubit_operand(&mut p, &qreg)?);
                        }
                        p.expect(Tok::Semi, "`;`")?;
                        if qubits.len() != kind.arity() {
                            return Err(QasmError::OperandCount {
                                name,
                                expected: kind.arity(),
                                got: qubits.len(),
                                line: nl,
                                col: nc,
                            });
                        }
                        let circuit = circuit
                            .as_mut()
                            .ok_or_else(|| QasmError::Syntax {
                                line: nl,
                                col: nc,
                                msg: "gate before qubit declaration".into(),
                            })?;
                        circuit.push(Instruction::new(
                            kind,
                            qubits,
                            angle.map(ParamExpr::Const),
                        ))?;
                    }
                }
            },
            _ => return Err(p.err_here("expected statement")),
        }
    }

    let mut circuit = circuit.ok_or_else(|| QasmError::Syntax {
        line: 1,
        col: 1,
        msg: "missing qubit declaration".into(),
    })?;
    for q in measured {
        circuit.measure(q)?;
    }
    Ok(circuit)
}

fn parse_qubit_operand(p: &mut Parser, qreg: &Option<(String, usize)>) -> Result<usize, QasmError> {
    let (name, line, col) = p.expect_ident("qubit operand")?;
    let (index, il, ic) = p.expect_index()?;
    match qreg {
        Some((reg, width)) => {
            if name != *reg {
                return Err(QasmError::Syntax {
                    line,
                    col,
                    msg: format!("unknown register `{name}`"),
                });
            }
            if index >= *width {
                return Err(QasmError::IndexOutOfRange { index, width: *width, line: il, col: ic });
            }
            Ok(index)
        }
        None => Err(QasmError::Syntax {
            line,
            col,
            msg: "operand before qubit declaration".into(),
        }),
    }
}

/// Parse a full binding map that was printed one `symbol value` per line.
/// Used by the CLI to rehydrate exported weights; blank lines and `#`
/// comments are skipped.
pub fn parse_bindings(text: &str) -> Result<Bindings, QasmError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(QasmError::Syntax {
                line: i + 1,
                col: 1,
                msg: "expected `symbol value`".into(),
            });
        };
        let value: f64 = value.parse().map_err(|_| QasmError::Syntax {
            line: i + 1,
            col: 1,
            msg: format!("invalid value `{value}`"),
        })?;
        out.insert(crate::circuit::Symbol::new(name), value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn bell() -> Circuit {
        let mut c = Circuit::new(2);
        c.push(Instruction::gate1(GateKind::H, 0)).unwrap();
        c.push(Instruction::gate2(GateKind::Cx, 0, 1)).unwrap();
        c.set_measured([0, 1]).unwrap();
        c
    }

    #[test]
    fn emit_bell_golden() {
        let text = emit(&bell()).unwrap();
        assert_eq!(
            text,
            "OPENQASM 3.0;\n\
             include \"stdgates.inc\";\n\
             qubit[2] q;\n\
             bit[2] c;\n\
             h q[0];\n\
             cx q[0], q[1];\n\
             c[0] = measure q[0];\n\
             c[1] = measure q[1];\n"
        );
    }

    #[test]
    fn emit_prints_full_precision_angle() {
        let mut c = Circuit::new(1);
        c.push(Instruction::gate1p(GateKind::Ry, 0, ParamExpr::constant(PI / 2.0))).unwrap();
        let text = emit(&c).unwrap();
        assert!(text.contains("ry(1.5707963267948966) q[0];"), "{text}");
    }

    #[test]
    fn emit_empty_circuit_is_header_only() {
        let c = Circuit::new(1);
        let text = emit(&c).unwrap();
        assert_eq!(text, "OPENQASM 3.0;\ninclude \"stdgates.inc\";\nqubit[1] q;\n");
    }

    #[test]
    fn emit_rejects_unbound() {
        let mut c = Circuit::new(1);
        c.push(Instruction::gate1p(GateKind::Ry, 0, ParamExpr::symbol("t"))).unwrap();
        assert_eq!(emit(&c).unwrap_err(), QasmError::Unbound);
    }

    #[test]
    fn emit_is_deterministic() {
        assert_eq!(emit(&bell()).unwrap(), emit(&bell()).unwrap());
    }

    #[test]
    fn round_trip_preserves_canonical_form() {
        let c = bell();
        let parsed = parse(&emit(&c).unwrap()).unwrap();
        assert_eq!(parsed.canonical_form(), c.canonical_form());
    }

    #[test]
    fn round_trip_angle_exact() {
        let mut c = Circuit::new(1);
        c.push(Instruction::gate1p(GateKind::Ry, 0, ParamExpr::constant(0.1234567890123456))).unwrap();
        let parsed = parse(&emit(&c).unwrap()).unwrap();
        let angle = parsed.instructions()[0].angle.as_ref().unwrap().as_const().unwrap();
        assert_eq!(angle, 0.1234567890123456);
    }

    #[test]
    fn parse_pi_expressions() {
        let text = "OPENQASM 3.0;\nqubit[1] q;\nry(pi/2) q[0];\nrz(-pi) q[0];\nrx(2*pi) q[0];\np((pi+pi)/2) q[0];\n";
        let c = parse(text).unwrap();
        let angles: Vec<f64> = c
            .instructions()
            .iter()
            .map(|i| i.angle.as_ref().unwrap().as_const().unwrap())
            .collect();
        assert_abs_diff_eq!(angles[0], PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(angles[1], -PI, epsilon = 1e-15);
        assert_abs_diff_eq!(angles[2], 2.0 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(angles[3], PI, epsilon = 1e-15);
    }

    #[test]
    fn parse_scientific_notation() {
        let text = "OPENQASM 3.0;\nqubit[1] q;\nry(1e-3) q[0];\n";
        let c = parse(text).unwrap();
        assert_eq!(c.instructions()[0].angle.as_ref().unwrap().as_const(), Some(1e-3));
    }

    #[test]
    fn parse_unsupported_gate() {
        let text = "OPENQASM 3.0;\nqubit[1] q;\nfoo q[0];\n";
        match parse(text).unwrap_err() {
            QasmError::UnsupportedGate { name, line, .. } => {
                assert_eq!(name, "foo");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_operand_count_mismatch() {
        let text = "OPENQASM 3.0;\nqubit[2] q;\ncx q[0];\n";
        assert!(matches!(
            parse(text).unwrap_err(),
            QasmError::OperandCount { expected: 2, got: 1, .. }
        ));
    }

    #[test]
    fn parse_index_out_of_range() {
        let text = "OPENQASM 3.0;\nqubit[2] q;\nh q[5];\n";
        assert!(matches!(
            parse(text).unwrap_err(),
            QasmError::IndexOutOfRange { index: 5, width: 2, .. }
        ));
    }

    #[test]
    fn parse_syntax_error_reports_position() {
        let text = "OPENQASM 3.0;\nqubit[2] q;\nh q[0]\nh q[1];\n";
        match parse(text).unwrap_err() {
            QasmError::Syntax { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_bare_measure() {
        let text = "OPENQASM 3.0;\nqubit[2] q;\nh q[0];\nmeasure q[1];\n";
        let c = parse(text).unwrap();
        assert_eq!(c.measured_qubits().iter().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn parse_comments_and_whitespace() {
        let text = "OPENQASM 3.0;\n// a comment\nqubit[1] q;\n  h q[0]; // trailing\n";
        let c = parse(text).unwrap();
        assert_eq!(c.instructions().len(), 1);
    }

    #[test]
    fn bindings_round_trip() {
        let b = parse_bindings("# weights\ntheta[0] 0.5\ntheta[1] -1.25\n").unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[&crate::circuit::Symbol::new("theta[1]")], -1.25);
    }
}
