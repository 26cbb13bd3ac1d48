//! Lowering to the `{RZ, SX, X, CX}` basis and a small peephole pass.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::sim::{Angle, Circuit, GateKind, GateOp};

pub const BASIS: [GateKind; 4] = [GateKind::Rz, GateKind::Sx, GateKind::X, GateKind::Cx];

pub fn is_basis(kind: GateKind) -> bool {
    BASIS.contains(&kind)
}

fn rz(q: usize, a: Angle) -> GateOp {
    GateOp::rotation(GateKind::Rz, q, a)
}

fn sx(q: usize) -> GateOp {
    GateOp::single(GateKind::Sx, q)
}

fn fixed(v: f64) -> Angle {
    Angle::Fixed(v)
}

fn lower_single(kind: GateKind, q: usize, angle: Option<Angle>, out: &mut Vec<GateOp>) -> Result<()> {
    let theta = || angle.ok_or(Error::MissingAngle(kind.name()));
    match kind {
        GateKind::Rz => out.push(rz(q, theta()?)),
        GateKind::Sx | GateKind::X => out.push(GateOp::single(kind, q)),
        GateKind::H => out.extend([rz(q, fixed(FRAC_PI_2)), sx(q), rz(q, fixed(FRAC_PI_2))]),
        GateKind::Rx => out.extend([
            rz(q, fixed(FRAC_PI_2)),
            sx(q),
            rz(q, theta()?.scaled(1.0, PI)),
            sx(q),
            rz(q, fixed(FRAC_PI_2)),
        ]),
        GateKind::Ry => out.extend([sx(q), rz(q, theta()?.scaled(1.0, PI)), sx(q), rz(q, fixed(PI))]),
        other => return Err(Error::Unsupported(other.name().into())),
    }
    Ok(())
}

/// Appends the basis form of `op`, equal to it up to global phase.
pub fn lower_op(op: &GateOp, out: &mut Vec<GateOp>) -> Result<()> {
    match op.kind {
        GateKind::Cx => out.push(op.clone()),
        GateKind::Swap => {
            let (a, b) = (op.qubits[0], op.qubits[1]);
            out.extend([GateOp::cx(a, b), GateOp::cx(b, a), GateOp::cx(a, b)]);
        }
        GateKind::Crz | GateKind::Cry => {
            let (c, t) = (op.qubits[0], op.qubits[1]);
            let theta = op.angle.ok_or(Error::MissingAngle(op.kind.name()))?;
            let base = if op.kind == GateKind::Crz { GateKind::Rz } else { GateKind::Ry };
            lower_single(base, t, Some(theta.scaled(0.5, 0.0)), out)?;
            out.push(GateOp::cx(c, t));
            lower_single(base, t, Some(theta.scaled(-0.5, 0.0)), out)?;
            out.push(GateOp::cx(c, t));
        }
        GateKind::Crx => {
            let t = op.qubits[1];
            lower_single(GateKind::H, t, None, out)?;
            lower_op(&GateOp::new(GateKind::Crz, op.qubits.clone(), op.angle), out)?;
            lower_single(GateKind::H, t, None, out)?;
        }
        kind => lower_single(kind, op.qubits[0], op.angle, out)?,
    }
    Ok(())
}

/// Rewrites every gate into `{RZ, SX, X, CX}`; trainable angles stay symbolic.
pub fn decompose_to_basis(circuit: &Circuit) -> Result<Circuit> {
    let mut ops = Vec::with_capacity(circuit.ops.len() * 4);
    for op in &circuit.ops {
        op.validate(circuit.n_qubits)?;
        lower_op(op, &mut ops)?;
    }
    let mut out = Circuit::new(circuit.n_qubits);
    out.extend(ops);
    out.n_params = out.n_params.max(circuit.n_params);
    Ok(out)
}

fn is_identity_rz(angle: &Angle) -> bool {
    match angle {
        Angle::Fixed(v) => {
            let r = v.rem_euclid(TAU);
            r < 1e-12 || TAU - r < 1e-12
        }
        Angle::Param { .. } => false,
    }
}

fn merge_rz(a: &Angle, b: &Angle) -> Option<Angle> {
    match (*a, *b) {
        (Angle::Fixed(x), Angle::Fixed(y)) => Some(Angle::Fixed(x + y)),
        (Angle::Param { index, scale, offset }, Angle::Fixed(y))
        | (Angle::Fixed(y), Angle::Param { index, scale, offset }) => Some(Angle::Param {
            index,
            scale,
            offset: offset + y,
        }),
        (
            Angle::Param {
                index: i,
                scale: s1,
                offset: o1,
            },
            Angle::Param {
                index: j,
                scale: s2,
                offset: o2,
            },
        ) if i == j => Some(Angle::Param {
            index: i,
            scale: s1 + s2,
            offset: o1 + o2,
        }),
        _ => None,
    }
}

/// Cancels adjacent self-inverse pairs (`X·X`, `CX·CX` on the same operands)
/// and merges runs of RZ on a qubit. Unitary is preserved up to global phase.
pub fn optimize(circuit: &Circuit) -> Circuit {
    let mut slots: Vec<Option<GateOp>> = Vec::with_capacity(circuit.ops.len());
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); circuit.n_qubits];
    for op in &circuit.ops {
        let tops: Vec<Option<usize>> = op.qubits.iter().map(|&q| stacks[q].last().copied()).collect();
        let shared = tops[0].filter(|&i| tops.iter().all(|t| *t == Some(i)));
        if let Some(i) = shared {
            let prev = slots[i].as_ref().expect("stack holds live ops");
            if prev.qubits == op.qubits {
                match op.kind {
                    GateKind::X | GateKind::Cx | GateKind::Swap | GateKind::H if prev.kind == op.kind => {
                        slots[i] = None;
                        op.qubits.iter().for_each(|&q| {
                            stacks[q].pop();
                        });
                        continue;
                    }
                    GateKind::Rz if prev.kind == GateKind::Rz => {
                        if let Some(merged) = merge_rz(prev.angle.as_ref().unwrap(), op.angle.as_ref().unwrap()) {
                            if is_identity_rz(&merged) {
                                slots[i] = None;
                                stacks[op.qubits[0]].pop();
                            } else {
                                slots[i].as_mut().unwrap().angle = Some(merged);
                            }
                            continue;
                        }
                    }
                    _ => {}
                }
            }
        }
        if op.kind == GateKind::Rz && op.angle.as_ref().is_some_and(is_identity_rz) {
            continue;
        }
        let idx = slots.len();
        slots.push(Some(op.clone()));
        op.qubits.iter().for_each(|&q| stacks[q].push(idx));
    }
    let mut out = Circuit::new(circuit.n_qubits);
    out.extend(slots.into_iter().flatten());
    out.n_params = out.n_params.max(circuit.n_params);
    out
}
