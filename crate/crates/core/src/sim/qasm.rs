//! OpenQASM 2.0 import and export for the supported gate kinds.

use std::fmt::Write as _;

use super::gate::{Angle, Circuit, GateKind, GateOp};
use crate::error::{Error, Result};

/// Serializes the circuit with every angle bound to a number.
pub fn to_qasm(circuit: &Circuit, params: &[f64]) -> Result<String> {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(out, "qreg q[{}];", circuit.n_qubits);
    for op in &circuit.ops {
        op.validate(circuit.n_qubits)?;
        let args = op
            .qubits
            .iter()
            .map(|q| format!("q[{q}]"))
            .collect::<Vec<_>>()
            .join(",");
        match op.angle {
            Some(a) => {
                let _ = writeln!(out, "{}({:.17}) {};", op.kind.name(), a.resolve(params)?, args);
            }
            None => {
                let _ = writeln!(out, "{} {};", op.kind.name(), args);
            }
        }
    }
    Ok(out)
}

/// Parses a QASM program restricted to one quantum register and the supported gates.
/// Angles are constant expressions over numbers, `pi`, `+ - * /` and parentheses.
pub fn from_qasm(text: &str) -> Result<Circuit> {
    let mut circuit: Option<Circuit> = None;
    let mut reg_name = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |msg: String| Error::Qasm { line: line_no, msg };
        let line = raw.split("//").next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        for stmt in line.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            if stmt.starts_with("OPENQASM") || stmt.starts_with("include") || stmt.starts_with("barrier") {
                continue;
            }
            if stmt.starts_with("creg") || stmt.starts_with("measure") {
                continue;
            }
            if let Some(rest) = stmt.strip_prefix("qreg") {
                if circuit.is_some() {
                    return Err(err("only one qreg is supported".into()));
                }
                let (name, size) = parse_indexed(rest.trim()).map_err(err)?;
                reg_name = name;
                circuit = Some(Circuit::new(size));
                continue;
            }
            let c = circuit
                .as_mut()
                .ok_or_else(|| err("gate before qreg declaration".into()))?;
            let (head, operands) = split_head(stmt).ok_or_else(|| err(format!("malformed statement `{stmt}`")))?;
            let (name, angle) = match head.find('(') {
                Some(open) => {
                    let close = head.rfind(')').ok_or_else(|| err("unclosed parenthesis".into()))?;
                    let value = eval_expr(&head[open + 1..close]).map_err(err)?;
                    (&head[..open], Some(Angle::Fixed(value)))
                }
                None => (head, None),
            };
            let kind = GateKind::from_name(name.trim()).ok_or_else(|| err(format!("unsupported gate `{name}`")))?;
            let qubits = operands
                .split(',')
                .map(|s| {
                    let (reg, idx) = parse_indexed(s.trim())?;
                    if reg != reg_name {
                        return Err(format!("unknown register `{reg}`"));
                    }
                    Ok(idx)
                })
                .collect::<std::result::Result<Vec<_>, String>>()
                .map_err(err)?;
            let op = GateOp::new(kind, qubits, angle);
            op.validate(c.n_qubits).map_err(|e| err(e.to_string()))?;
            c.push(op);
        }
    }
    circuit.ok_or(Error::Qasm {
        line: 0,
        msg: "no qreg declared".into(),
    })
}

/// Splits `name(args) operands` at the first whitespace outside parentheses.
fn split_head(stmt: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, ch) in stmt.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c.is_whitespace() && depth == 0 => return Some((&stmt[..i], stmt[i..].trim())),
            _ => {}
        }
    }
    None
}

fn parse_indexed(s: &str) -> std::result::Result<(String, usize), String> {
    let open = s.find('[').ok_or_else(|| format!("expected `name[index]`, got `{s}`"))?;
    let close = s.find(']').ok_or_else(|| format!("expected `]` in `{s}`"))?;
    let idx = s[open + 1..close]
        .trim()
        .parse()
        .map_err(|_| format!("bad index in `{s}`"))?;
    Ok((s[..open].trim().to_string(), idx))
}

fn eval_expr(s: &str) -> std::result::Result<f64, String> {
    let tokens: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut parser = ExprParser { tokens, pos: 0 };
    let value = parser.sum()?;
    if parser.pos != parser.tokens.len() {
        return Err(format!("trailing characters in angle `{s}`"));
    }
    Ok(value)
}

struct ExprParser {
    tokens: Vec<char>,
    pos: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<char> {
        self.tokens.get(self.pos).copied()
    }

    fn sum(&mut self) -> std::result::Result<f64, String> {
        let mut value = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            value = if op == '+' { value + rhs } else { value - rhs };
        }
        Ok(value)
    }

    fn product(&mut self) -> std::result::Result<f64, String> {
        let mut value = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            value = if op == '*' { value * rhs } else { value / rhs };
        }
        Ok(value)
    }

    fn unary(&mut self) -> std::result::Result<f64, String> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> std::result::Result<f64, String> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let v = self.sum()?;
                if self.peek() != Some(')') {
                    return Err("expected `)`".into());
                }
                self.pos += 1;
                Ok(v)
            }
            Some('p') => {
                if self.tokens[self.pos..].starts_with(&['p', 'i']) {
                    self.pos += 2;
                    Ok(std::f64::consts::PI)
                } else {
                    Err("unknown identifier in angle".into())
                }
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    let exp_sign = (c == '-' || c == '+')
                        && matches!(self.tokens.get(self.pos.wrapping_sub(1)), Some('e' | 'E'));
                    if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let text: String = self.tokens[start..self.pos].iter().collect();
                text.parse().map_err(|_| format!("bad number `{text}`"))
            }
            _ => Err("unexpected end of angle expression".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn round_trip() {
        let mut c = Circuit::new(3);
        c.push(GateOp::single(GateKind::H, 0));
        c.push(GateOp::controlled(GateKind::Crz, 0, 2, Angle::param(0)));
        c.push(GateOp::rotation(GateKind::Rx, 1, Angle::Fixed(-0.25)));
        c.push(GateOp::two(GateKind::Swap, 1, 2));
        let text = to_qasm(&c, &[1.5]).unwrap();
        let back = from_qasm(&text).unwrap();
        assert_eq!(back, c.bind(&[1.5]).unwrap());
    }

    #[test]
    fn parses_pi_expressions() {
        let c = from_qasm("OPENQASM 2.0;\nqreg q[1];\nrz(-pi/2) q[0];\nry(2*pi/4 + 1e-1) q[0];").unwrap();
        assert_abs_diff_eq!(c.ops[0].angle.unwrap().resolve(&[]).unwrap(), -std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(
            c.ops[1].angle.unwrap().resolve(&[]).unwrap(),
            std::f64::consts::FRAC_PI_2 + 0.1,
            epsilon = 1e-12
        );
    }

    #[test]
    fn reports_line_numbers() {
        let err = from_qasm("OPENQASM 2.0;\nqreg q[2];\nccx q[0],q[1];").unwrap_err();
        assert!(matches!(err, Error::Qasm { line: 3, .. }));
        let err = from_qasm("qreg q[2];\ncx q[0],q[5];").unwrap_err();
        assert!(matches!(err, Error::Qasm { line: 2, .. }));
    }
}
