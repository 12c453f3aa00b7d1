//! Bit-blasting of word-level netlists.

use crate::error::{Error, Result};
use crate::netlist::{GateKind, Netlist};

use super::{AigGraph, Lit};

/// Lowers `nl` into a fresh graph. Input bits are numbered word by word,
/// least significant bit first, and named `<word>[<bit>]`; outputs follow
/// the same layout.
pub fn lower_netlist(nl: &Netlist) -> Result<AigGraph> {
    let mut g = AigGraph::new(nl.input_bits());
    let mut k = 0;
    for &s in nl.inputs() {
        let name = nl.name(s).map_or_else(|| s.to_string(), str::to_string);
        for b in 0..nl.width(s) {
            g.set_input_name(k, format!("{name}[{b}]"));
            k += 1;
        }
    }
    let inputs: Vec<Lit> = (0..g.num_inputs()).map(|k| g.input(k)).collect();
    let outs = lower_into(&mut g, nl, &inputs)?;
    let mut offset = 0;
    for &s in nl.outputs() {
        let name = nl.name(s).map_or_else(|| s.to_string(), str::to_string);
        for b in 0..nl.width(s) as usize {
            g.add_output(outs[offset + b], Some(format!("{name}[{b}]")));
        }
        offset += nl.width(s) as usize;
    }
    Ok(g)
}

/// Lowers `nl` into `g` with its input bits bound to `inputs`; returns the
/// output bits in the same layout as [`lower_netlist`].
pub fn lower_into(g: &mut AigGraph, nl: &Netlist, inputs: &[Lit]) -> Result<Vec<Lit>> {
    if inputs.len() != nl.input_bits() {
        return Err(Error::structural(format!(
            "netlist has {} input bits, {} literals given",
            nl.input_bits(),
            inputs.len()
        )));
    }
    let mut bits: Vec<Vec<Lit>> = vec![Vec::new(); nl.signals().len()];
    let mut offset = 0;
    for &s in nl.inputs() {
        let w = nl.width(s) as usize;
        bits[s.index()] = inputs[offset..offset + w].to_vec();
        offset += w;
    }
    for gate in nl.gates() {
        let ops: Vec<&[Lit]> = gate.operands.iter().map(|o| bits[o.index()].as_slice()).collect();
        let width = nl.width(gate.output) as usize;
        let out = match &gate.kind {
            GateKind::Const(v) => (0..width).map(|k| if (v >> k) & 1 == 1 { Lit::TRUE } else { Lit::FALSE }).collect(),
            GateKind::Add => ripple_add(g, ops[0], ops[1], Lit::FALSE),
            GateKind::Sub => {
                let nb: Vec<Lit> = ops[1].iter().map(|&l| !l).collect();
                ripple_add(g, ops[0], &nb, Lit::TRUE)
            }
            GateKind::Mul => multiply(g, ops[0], ops[1]),
            GateKind::CompareGt => vec![greater(g, ops[0], ops[1], true)],
            GateKind::CompareGtU => vec![greater(g, ops[0], ops[1], false)],
            GateKind::Mux => {
                let s = ops[0][0];
                ops[1].iter().zip(ops[2]).map(|(&t, &e)| g.mux(s, t, e)).collect()
            }
            GateKind::Shr { amount, arithmetic } => {
                let src = ops[0];
                let fill = if *arithmetic { src[src.len() - 1] } else { Lit::FALSE };
                (0..width)
                    .map(|k| src.get(k + *amount as usize).copied().unwrap_or(fill))
                    .collect()
            }
            GateKind::SignExtend(_) => {
                let src = ops[0];
                (0..width).map(|k| src.get(k).copied().unwrap_or(src[src.len() - 1])).collect()
            }
            GateKind::ZeroExtend(_) => (0..width).map(|k| ops[0].get(k).copied().unwrap_or(Lit::FALSE)).collect(),
            GateKind::Slice { lo, hi } => ops[0][*lo as usize..*hi as usize].to_vec(),
            GateKind::Concat => ops.iter().flat_map(|o| o.iter().copied()).collect(),
            GateKind::Clip(to) => clip(g, ops[0], *to as usize),
            GateKind::Lut(table) => vec![lut(g, table, &ops.iter().map(|o| o[0]).collect::<Vec<_>>())],
            GateKind::Not => ops[0].iter().map(|&l| !l).collect(),
            GateKind::And => ops[0].iter().zip(ops[1]).map(|(&a, &b)| g.and(a, b)).collect(),
            GateKind::Or => ops[0].iter().zip(ops[1]).map(|(&a, &b)| g.or(a, b)).collect(),
            GateKind::Xor => ops[0].iter().zip(ops[1]).map(|(&a, &b)| g.xor(a, b)).collect(),
        };
        if out.len() != width {
            return Err(Error::structural(format!(
                "{} gate lowered to {} bits, expected {width}",
                gate.kind.mnemonic(),
                out.len()
            )));
        }
        bits[gate.output.index()] = out;
    }
    Ok(nl.outputs().iter().flat_map(|o| bits[o.index()].iter().copied()).collect())
}

fn full_add(g: &mut AigGraph, a: Lit, b: Lit, c: Lit) -> (Lit, Lit) {
    let ab = g.xor(a, b);
    let sum = g.xor(ab, c);
    let x = g.and(a, b);
    let y = g.and(ab, c);
    (sum, g.or(x, y))
}

/// Sum truncated to the operand width.
fn ripple_add(g: &mut AigGraph, a: &[Lit], b: &[Lit], carry_in: Lit) -> Vec<Lit> {
    let mut carry = carry_in;
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let (s, c) = full_add(g, x, y, carry);
            carry = c;
            s
        })
        .collect()
}

/// Signed `w x w -> 2w`: operands are sign-extended to `2w` and multiplied
/// by unsigned shift-and-add modulo `2^(2w)`.
fn multiply(g: &mut AigGraph, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
    let w2 = 2 * a.len();
    let ext = |v: &[Lit]| -> Vec<Lit> { (0..w2).map(|k| v.get(k).copied().unwrap_or(v[v.len() - 1])).collect() };
    let (a, b) = (ext(a), ext(b));
    let mut acc = vec![Lit::FALSE; w2];
    for (i, &ai) in a.iter().enumerate() {
        let partial: Vec<Lit> = b[..w2 - i].iter().map(|&bj| g.and(ai, bj)).collect();
        let sum = ripple_add(g, &acc[i..], &partial, Lit::FALSE);
        acc[i..].copy_from_slice(&sum);
    }
    acc
}

/// `a > b`, read off the sign of `b - a` computed one bit wider.
fn greater(g: &mut AigGraph, a: &[Lit], b: &[Lit], signed: bool) -> Lit {
    let ext = |v: &[Lit]| -> Vec<Lit> {
        let mut e = v.to_vec();
        e.push(if signed { v[v.len() - 1] } else { Lit::FALSE });
        e
    };
    let (a, b) = (ext(a), ext(b));
    let na: Vec<Lit> = a.iter().map(|&l| !l).collect();
    let diff = ripple_add(g, &b, &na, Lit::TRUE);
    diff[diff.len() - 1]
}

/// Signed saturation of `src` to `to` bits.
fn clip(g: &mut AigGraph, src: &[Lit], to: usize) -> Vec<Lit> {
    let w = src.len();
    if to >= w {
        return src.to_vec();
    }
    let sign = src[w - 1];
    let upper = &src[to - 1..];
    let all_zero = {
        let inv: Vec<Lit> = upper.iter().map(|&l| !l).collect();
        g.and_all(&inv)
    };
    let all_one = g.and_all(upper);
    let fits = g.or(all_zero, all_one);
    let mut out: Vec<Lit> = src[..to - 1].iter().map(|&l| g.mux(fits, l, !sign)).collect();
    out.push(g.mux(fits, src[to - 1], sign));
    out
}

/// Multiplexer tree with select 0 nearest the constant entries.
fn lut(g: &mut AigGraph, table: &[bool], selects: &[Lit]) -> Lit {
    let mut level: Vec<Lit> = table.iter().map(|&e| if e { Lit::TRUE } else { Lit::FALSE }).collect();
    for &s in selects {
        level = level.chunks(2).map(|p| g.mux(s, p[1], p[0])).collect();
    }
    level[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::to_signed;

    fn word_bits(v: u128, w: u32) -> Vec<bool> {
        (0..w).map(|k| (v >> k) & 1 == 1).collect()
    }

    fn bits_word(bits: &[bool]) -> u128 {
        bits.iter().enumerate().fold(0, |acc, (k, &b)| acc | (u128::from(b) << k))
    }

    /// Checks every input combination of a two-operand netlist against
    /// both the netlist simulator and `oracle`.
    fn exhaustive2(nl: &Netlist, w: u32, oracle: impl Fn(u128, u128) -> u128) {
        let g = lower_netlist(nl).unwrap();
        for a in 0..1u128 << w {
            for b in 0..1u128 << w {
                let mut input = word_bits(a, w);
                input.extend(word_bits(b, w));
                let got = bits_word(&g.simulate(&input));
                assert_eq!(got, nl.simulate(&[a, b]).unwrap()[0], "a={a} b={b}");
                assert_eq!(got, oracle(a, b), "a={a} b={b}");
            }
        }
    }

    fn binary(w: u32, f: impl Fn(&mut Netlist, crate::netlist::SignalId, crate::netlist::SignalId) -> crate::netlist::SignalId) -> Netlist {
        let mut nl = Netlist::new();
        let a = nl.add_input(w, "a").unwrap();
        let b = nl.add_input(w, "b").unwrap();
        let o = f(&mut nl, a, b);
        nl.add_output(o).unwrap();
        nl
    }

    #[test]
    fn adder_subtractor_exhaustive() {
        exhaustive2(&binary(4, |n, a, b| n.add(a, b).unwrap()), 4, |a, b| (a + b) & 0xf);
        exhaustive2(&binary(4, |n, a, b| n.sub(a, b).unwrap()), 4, |a, b| a.wrapping_sub(b) & 0xf);
    }

    #[test]
    fn signed_multiplier_exhaustive() {
        exhaustive2(&binary(4, |n, a, b| n.mul(a, b).unwrap()), 4, |a, b| {
            (to_signed(a, 4) * to_signed(b, 4)) as u128 & 0xff
        });
    }

    #[test]
    fn comparators_exhaustive() {
        exhaustive2(&binary(4, |n, a, b| n.compare_gt(a, b).unwrap()), 4, |a, b| {
            u128::from(to_signed(a, 4) > to_signed(b, 4))
        });
        exhaustive2(&binary(4, |n, a, b| n.compare_gt_unsigned(a, b).unwrap()), 4, |a, b| u128::from(a > b));
    }

    #[test]
    fn one_bit_mux() {
        let mut nl = Netlist::new();
        let s = nl.add_input(1, "s").unwrap();
        let t = nl.add_input(1, "t").unwrap();
        let e = nl.add_input(1, "e").unwrap();
        let o = nl.mux(s, t, e).unwrap();
        nl.add_output(o).unwrap();
        let g = lower_netlist(&nl).unwrap();
        assert!(g.num_ands() <= 7);
        for v in 0..8u128 {
            let bits = word_bits(v, 3);
            assert_eq!(g.simulate(&bits), vec![if bits[0] { bits[1] } else { bits[2] }]);
        }
    }

    #[test]
    fn four_bit_mux_shifts_clip_and_extensions() {
        let mut nl = Netlist::new();
        let s = nl.add_input(1, "s").unwrap();
        let a = nl.add_input(4, "a").unwrap();
        let b = nl.add_input(4, "b").unwrap();
        let m = nl.mux(s, a, b).unwrap();
        let sx = nl.sign_extend(a, 7).unwrap();
        let zx = nl.zero_extend(b, 6).unwrap();
        let lsr = nl.shr(a, 2, false).unwrap();
        let asr = nl.shr(a, 1, true).unwrap();
        let cat = nl.concat(&[a, b]).unwrap();
        let clipped = nl.clip(cat, 3).unwrap();
        let sl = nl.slice(cat, 2, 7).unwrap();
        let x = nl.xor(a, b).unwrap();
        let o = nl.or(a, b).unwrap();
        let n = nl.not(a).unwrap();
        for out in [m, sx, zx, lsr, asr, clipped, sl, x, o, n] {
            nl.add_output(out).unwrap();
        }
        let g = lower_netlist(&nl).unwrap();
        for v in 0..1u128 << 9 {
            let bits = word_bits(v, 9);
            let words = [v & 1, (v >> 1) & 0xf, (v >> 5) & 0xf];
            assert_eq!(g.simulate(&bits), nl.simulate_bits(&bits).unwrap(), "{words:?}");
        }
    }

    #[test]
    fn lut_lowering() {
        let table = vec![true, false, false, true, true, true, false, false];
        let mut nl = Netlist::new();
        let sel: Vec<_> = (0..3).map(|k| nl.add_input(1, format!("s{k}")).unwrap()).collect();
        let o = nl.lut(table.clone(), &sel).unwrap();
        nl.add_output(o).unwrap();
        let g = lower_netlist(&nl).unwrap();
        for v in 0..8usize {
            let bits: Vec<bool> = (0..3).map(|k| (v >> k) & 1 == 1).collect();
            assert_eq!(g.simulate(&bits), vec![table[v]]);
        }
    }

    #[test]
    fn names_follow_words() {
        let nl = binary(2, |n, a, b| n.add(a, b).unwrap());
        let g = lower_netlist(&nl).unwrap();
        assert_eq!(g.input_names()[3].as_deref(), Some("b[1]"));
        assert_eq!(g.output_names().len(), 2);
    }

    #[test]
    fn lowering_twice_adds_nothing() {
        let nl = binary(4, |n, a, b| {
            let p = n.mul(a, b).unwrap();
            let q = n.sign_extend(a, 8).unwrap();
            n.add(p, q).unwrap()
        });
        let mut g = lower_netlist(&nl).unwrap();
        let n = g.num_ands();
        let inputs: Vec<Lit> = (0..8).map(|k| g.input(k)).collect();
        let again = lower_into(&mut g, &nl, &inputs).unwrap();
        assert_eq!(g.num_ands(), n);
        assert_eq!(again, g.outputs());
    }
}
