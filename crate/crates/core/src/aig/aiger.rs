//! ASCII AIGER (`aag`) reading and writing, combinational only.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::{AigGraph, Lit};

/// Serializes `g`. Variable indices equal node ids, so a graph read back
/// from this text has the same numbering.
pub fn write_aiger(g: &AigGraph) -> String {
    let i = g.num_inputs();
    let a = g.num_ands();
    let mut out = format!("aag {} {i} 0 {} {a}\n", i + a, g.outputs().len());
    for k in 0..i {
        let _ = writeln!(out, "{}", g.input(k).raw());
    }
    for o in g.outputs() {
        let _ = writeln!(out, "{}", o.raw());
    }
    for node in i + 1..g.node_count() {
        let (x, y) = g.fanins(node).expect("AND node");
        let _ = writeln!(out, "{} {} {}", 2 * node, x.raw().max(y.raw()), x.raw().min(y.raw()));
    }
    for (k, name) in g.input_names().iter().enumerate() {
        if let Some(n) = name {
            let _ = writeln!(out, "i{k} {n}");
        }
    }
    for (k, name) in g.output_names().iter().enumerate() {
        if let Some(n) = name {
            let _ = writeln!(out, "o{k} {n}");
        }
    }
    if !g.comments().is_empty() {
        out.push_str("c\n");
        for c in g.comments() {
            let _ = writeln!(out, "{c}");
        }
    }
    out
}

pub fn write_aiger_file(g: &AigGraph, path: &Path) -> Result<()> {
    std::fs::write(path, write_aiger(g)).map_err(|e| Error::io(path, e))
}

pub fn read_aiger_file(path: &Path) -> Result<AigGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_aiger(&text)
}

fn numbers(line: &str, lineno: usize, expect: usize) -> Result<Vec<u32>> {
    let v = line
        .split_whitespace()
        .map(|t| t.parse::<u32>().map_err(|_| Error::parse(lineno, format!("bad number '{t}'"))))
        .collect::<Result<Vec<_>>>()?;
    if v.len() != expect {
        return Err(Error::parse(lineno, format!("expected {expect} numbers, found {}", v.len())));
    }
    Ok(v)
}

/// Parses ASCII AIGER. AND definitions may appear in any order; they are
/// rebuilt through the structural hash in dependency order.
pub fn read_aiger(text: &str) -> Result<AigGraph> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty AIGER file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "aag" {
        return Err(Error::parse(1, "expected header 'aag M I L O A'"));
    }
    let h = numbers(&fields[1..].join(" "), 1, 5)?;
    let (max_var, ni, nl, no, na) = (h[0] as usize, h[1] as usize, h[2], h[3] as usize, h[4] as usize);
    if nl != 0 {
        return Err(Error::parse(1, "latches are not supported"));
    }
    if max_var < ni + na {
        return Err(Error::parse(1, "M is smaller than I + A"));
    }
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("file ends before all {what} lines")))
    };

    // var -> Some(input position) or the AND definition
    let mut input_of = vec![None; max_var + 1];
    for k in 0..ni {
        let (no_, line) = next("input")?;
        let lit = numbers(line, no_, 1)?[0];
        let var = (lit >> 1) as usize;
        if lit & 1 == 1 || var == 0 || var > max_var || input_of[var].is_some() {
            return Err(Error::parse(no_, format!("invalid input literal {lit}")));
        }
        input_of[var] = Some(k);
    }
    let mut outputs = Vec::with_capacity(no);
    for _ in 0..no {
        let (no_, line) = next("output")?;
        let lit = numbers(line, no_, 1)?[0];
        if (lit >> 1) as usize > max_var {
            return Err(Error::parse(no_, format!("output literal {lit} out of range")));
        }
        outputs.push(lit);
    }
    let mut def: Vec<Option<(u32, u32)>> = vec![None; max_var + 1];
    for _ in 0..na {
        let (no_, line) = next("AND")?;
        let v = numbers(line, no_, 3)?;
        let var = (v[0] >> 1) as usize;
        if v[0] & 1 == 1 || var == 0 || var > max_var || input_of[var].is_some() || def[var].is_some() {
            return Err(Error::parse(no_, format!("invalid AND literal {}", v[0])));
        }
        if v[1..].iter().any(|&l| (l >> 1) as usize > max_var) {
            return Err(Error::parse(no_, "AND fanin out of range"));
        }
        def[var] = Some((v[1], v[2]));
    }

    let mut g = AigGraph::new(ni);
    let mut comments = Vec::new();
    let mut output_names = Vec::new();
    let mut in_comment = false;
    for (no_, line) in lines {
        if in_comment {
            comments.push(line.to_string());
            continue;
        }
        if line == "c" {
            in_comment = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (tag, name) = line
            .split_once(' ')
            .ok_or_else(|| Error::parse(no_, "expected a symbol entry"))?;
        let (kind, pos) = tag.split_at(1);
        let pos: usize = pos.parse().map_err(|_| Error::parse(no_, format!("bad symbol '{tag}'")))?;
        match kind {
            "i" if pos < ni => g.set_input_name(pos, name),
            "o" if pos < no => output_names.push((pos, name.to_string())),
            _ => return Err(Error::parse(no_, format!("bad symbol '{tag}'"))),
        }
    }

    // resolve vars to literals of the new graph with an explicit DFS path
    let mut lit_of: Vec<Option<Lit>> = vec![None; max_var + 1];
    lit_of[0] = Some(Lit::FALSE);
    for (var, k) in input_of.iter().enumerate() {
        if let Some(k) = k {
            lit_of[var] = Some(g.input(*k));
        }
    }
    let mut on_path = vec![false; max_var + 1];
    let mut resolve = |g: &mut AigGraph, root: usize| -> Result<Lit> {
        let mut path = vec![root];
        while let Some(&var) = path.last() {
            if lit_of[var].is_some() {
                path.pop();
                continue;
            }
            let (a, b) = def[var].ok_or_else(|| Error::parse(0, format!("variable {var} is undefined")))?;
            on_path[var] = true;
            let pending = [(a >> 1) as usize, (b >> 1) as usize]
                .into_iter()
                .find(|&v| lit_of[v].is_none());
            match pending {
                Some(v) if on_path[v] => return Err(Error::parse(0, "combinational cycle")),
                Some(v) => path.push(v),
                None => {
                    let la = lit_of[(a >> 1) as usize].expect("resolved").xor_compl(a & 1 == 1);
                    let lb = lit_of[(b >> 1) as usize].expect("resolved").xor_compl(b & 1 == 1);
                    lit_of[var] = Some(g.and(la, lb));
                    on_path[var] = false;
                    path.pop();
                }
            }
        }
        Ok(lit_of[root].expect("resolved"))
    };
    for var in 1..=max_var {
        if def[var].is_some() {
            resolve(&mut g, var)?;
        }
    }
    for lit in outputs {
        let base = resolve(&mut g, (lit >> 1) as usize)?;
        g.add_output(base.xor_compl(lit & 1 == 1), None);
    }
    for (pos, name) in output_names {
        g.set_output_name(pos, name);
    }
    for c in comments {
        g.add_comment(c);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> AigGraph {
        let mut g = AigGraph::new(3);
        let (a, b, c) = (g.input(0), g.input(1), g.input(2));
        let x = g.xor(a, b);
        let y = g.mux(c, x, !a);
        g.add_output(y, Some("y".into()));
        g.add_output(!x, None);
        g.add_output(Lit::TRUE, Some("one".into()));
        g.set_input_name(0, "a[0]");
        g.add_comment("format 4 2");
        g
    }

    #[test]
    fn round_trip_is_identical() {
        let g = sample();
        let text = write_aiger(&g);
        assert!(text.starts_with(&format!("aag {} 3 0 3 {}\n", 3 + g.num_ands(), g.num_ands())));
        let h = read_aiger(&text).unwrap();
        assert_eq!(h, g);
        assert_eq!(h.comments(), &["format 4 2".to_string()]);
        assert_eq!(write_aiger(&h), text);
    }

    #[test]
    fn reads_out_of_order_definitions() {
        let text = "aag 4 2 0 1 2\n2\n4\n9\n8 6 2\n6 2 4\n";
        let g = read_aiger(text).unwrap();
        for v in 0..4u32 {
            let bits = [(v & 1) == 1, (v & 2) == 2];
            assert_eq!(g.simulate(&bits), vec![!(bits[0] && bits[1])]);
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_aiger("").is_err());
        assert!(read_aiger("aig 0 0 0 0 0\n").is_err());
        assert!(read_aiger("aag 1 0 1 0 0\n").is_err());
        assert!(read_aiger("aag 1 1 0 1 0\n2\n").is_err());
        assert!(read_aiger("aag 2 1 0 1 1\n2\n4\n4 4 2\n").is_err());
        assert!(read_aiger("aag 1 1 0 1 0\n2\n9\n").is_err());
    }
}
