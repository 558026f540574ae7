//! Plain-text sparse dump of an [`SdpProblem`].
//!
//! ```text
//! sdp <num_blocks> <num_free> <num_constraints>
//! blocks <n_1> ... <n_k>
//! obj X <block> <row> <col> <value>
//! obj F <index> <value>
//! rhs <constraint> <value>
//! con <constraint> X <block> <row> <col> <value>
//! con <constraint> F <index> <value>
//! ```
//!
//! All indices are zero-based; `row <= col`. Lines starting with `#` are
//! comments. Values are written with round-trip precision.

use std::io::{BufRead, Write};

use super::{Constraint, Entry, SdpProblem};
use crate::error::{Error, Result};

pub fn write_sparse<W: Write>(problem: &SdpProblem, mut w: W) -> Result<()> {
    writeln!(
        w,
        "sdp {} {} {}",
        problem.block_sizes.len(),
        problem.num_free,
        problem.constraints.len()
    )?;
    let sizes: Vec<String> = problem.block_sizes.iter().map(|n| n.to_string()).collect();
    writeln!(w, "blocks {}", sizes.join(" "))?;
    for e in &problem.objective {
        writeln!(w, "obj X {} {} {} {:e}", e.block, e.row, e.col, e.value)?;
    }
    for &(j, v) in &problem.objective_free {
        writeln!(w, "obj F {j} {v:e}")?;
    }
    for (i, c) in problem.constraints.iter().enumerate() {
        writeln!(w, "rhs {i} {:e}", c.rhs)?;
        for e in &c.matrix {
            writeln!(w, "con {i} X {} {} {} {:e}", e.block, e.row, e.col, e.value)?;
        }
        for &(j, v) in &c.free {
            writeln!(w, "con {i} F {j} {v:e}")?;
        }
    }
    Ok(())
}

fn bad(line: usize, msg: &str) -> Error {
    Error::Solver(format!("sdp dump line {line}: {msg}"))
}

pub fn read_sparse<R: BufRead>(r: R) -> Result<SdpProblem> {
    let mut problem: Option<SdpProblem> = None;
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        let num = |i: usize| -> Result<usize> {
            tok.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(lineno, "expected an index"))
        };
        let val = |i: usize| -> Result<f64> {
            tok.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(lineno, "expected a number"))
        };
        if tok[0] == "sdp" {
            let mut p = SdpProblem::new(Vec::with_capacity(num(1)?), num(2)?);
            p.constraints = vec![Constraint::default(); num(3)?];
            problem = Some(p);
            continue;
        }
        let p = problem
            .as_mut()
            .ok_or_else(|| bad(lineno, "missing `sdp` header"))?;
        match tok[0] {
            "blocks" => {
                p.block_sizes = (1..tok.len()).map(num).collect::<Result<_>>()?;
            }
            "obj" => match tok.get(1) {
                Some(&"X") => p
                    .objective
                    .push(Entry::new(num(2)?, num(3)?, num(4)?, val(5)?)),
                Some(&"F") => p.objective_free.push((num(2)?, val(3)?)),
                _ => return Err(bad(lineno, "expected X or F")),
            },
            "rhs" => {
                let i = num(1)?;
                p.constraints
                    .get_mut(i)
                    .ok_or_else(|| bad(lineno, "constraint index out of range"))?
                    .rhs = val(2)?;
            }
            "con" => {
                let i = num(1)?;
                let entry = match tok.get(2) {
                    Some(&"X") => Ok(Entry::new(num(3)?, num(4)?, num(5)?, val(6)?)),
                    Some(&"F") => Err((num(3)?, val(4)?)),
                    _ => return Err(bad(lineno, "expected X or F")),
                };
                let c = p
                    .constraints
                    .get_mut(i)
                    .ok_or_else(|| bad(lineno, "constraint index out of range"))?;
                match entry {
                    Ok(e) => c.matrix.push(e),
                    Err(f) => c.free.push(f),
                }
            }
            _ => return Err(bad(lineno, "unknown record")),
        }
    }
    let p = problem.ok_or_else(|| bad(0, "empty dump"))?;
    p.validate()?;
    Ok(p)
}
