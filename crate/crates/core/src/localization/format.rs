//! Grid exports.
//!
//! CSV: header `<axis names>,member`, then one row per node with `member`
//! 0 or 1. Nodes are listed with the last axis varying fastest.
//!
//! Run-length binary (`LSG1`), all integers and floats little-endian:
//!
//! ```text
//! magic      4 bytes  "LSG1"
//! kind       u8       0 = S_delta, 1 = R_eps, 2 = intersection
//! ndim       u8
//! reserved   u16      0
//! lambda     f64      NaN unless kind = 0
//! parameter  f64      delta or eps; NaN for intersections
//! per axis:  u16 name length, name bytes (UTF-8), f64 lower, f64 upper, u32 resolution
//! nodes      u64      product of resolutions
//! runs       u64      number of run lengths that follow
//! lengths    u32 each alternating non-member / member runs, starting with
//!                     non-members (the first run may be 0)
//! ```

use std::io::{Read, Write};

use super::{LevelSetGrid, SetKind};
use crate::error::{Error, Result};
use crate::grid::Grid;

const MAGIC: &[u8; 4] = b"LSG1";

pub fn write_csv<W: Write>(set: &LevelSetGrid, mut w: W) -> Result<()> {
    writeln!(w, "{},member", set.axes.join(","))?;
    let mut c = vec![0.0; set.grid.dimension()];
    for (idx, &m) in set.members.iter().enumerate() {
        set.grid.node(idx, &mut c);
        for v in &c {
            write!(w, "{v:.9e},")?;
        }
        writeln!(w, "{}", u8::from(m))?;
    }
    Ok(())
}

pub fn write_rle<W: Write>(set: &LevelSetGrid, mut w: W) -> Result<()> {
    let g = &set.grid;
    w.write_all(MAGIC)?;
    w.write_all(&[set.kind.code(), g.dimension() as u8])?;
    w.write_all(&0u16.to_le_bytes())?;
    w.write_all(&set.lambda.to_le_bytes())?;
    w.write_all(&set.parameter.to_le_bytes())?;
    for i in 0..g.dimension() {
        let name = set.axes[i].as_bytes();
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&g.lower[i].to_le_bytes())?;
        w.write_all(&g.upper[i].to_le_bytes())?;
        w.write_all(&(g.resolution[i] as u32).to_le_bytes())?;
    }
    let mut runs: Vec<u32> = Vec::new();
    let mut current = false;
    let mut len = 0u32;
    for &m in &set.members {
        if m != current || len == u32::MAX {
            runs.push(len);
            // A zero-length run keeps the alternation when a run overflows.
            if m == current {
                runs.push(0);
            }
            current = m;
            len = 0;
        }
        len += 1;
    }
    runs.push(len);
    w.write_all(&(set.members.len() as u64).to_le_bytes())?;
    w.write_all(&(runs.len() as u64).to_le_bytes())?;
    for r in runs {
        w.write_all(&r.to_le_bytes())?;
    }
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_rle<R: Read>(mut r: R) -> Result<LevelSetGrid> {
    let bad = |m: &str| Error::InvalidProblem(format!("malformed LSG1 data: {m}"));
    if &take::<4>(&mut r)? != MAGIC {
        return Err(bad("wrong magic"));
    }
    let [kind, ndim] = take::<2>(&mut r)?;
    let kind = SetKind::from_code(kind).ok_or_else(|| bad("unknown set kind"))?;
    take::<2>(&mut r)?;
    let lambda = f64::from_le_bytes(take(&mut r)?);
    let parameter = f64::from_le_bytes(take(&mut r)?);
    let mut axes = Vec::new();
    let (mut lower, mut upper, mut resolution) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..ndim {
        let len = u16::from_le_bytes(take(&mut r)?) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        axes.push(String::from_utf8(name).map_err(|_| bad("axis name is not UTF-8"))?);
        lower.push(f64::from_le_bytes(take(&mut r)?));
        upper.push(f64::from_le_bytes(take(&mut r)?));
        resolution.push(u32::from_le_bytes(take(&mut r)?) as usize);
    }
    let grid = Grid::new(lower, upper, resolution)?;
    let nodes = u64::from_le_bytes(take(&mut r)?) as usize;
    if nodes != grid.len() {
        return Err(bad("node count does not match resolutions"));
    }
    let nruns = u64::from_le_bytes(take(&mut r)?) as usize;
    let mut members = Vec::with_capacity(nodes);
    let mut value = false;
    for _ in 0..nruns {
        let len = u32::from_le_bytes(take(&mut r)?) as usize;
        if members.len() + len > nodes {
            return Err(bad("runs exceed node count"));
        }
        members.extend(std::iter::repeat_n(value, len));
        value = !value;
    }
    if members.len() != nodes {
        return Err(bad("runs do not cover the grid"));
    }
    Ok(LevelSetGrid {
        grid,
        axes,
        kind,
        lambda,
        parameter,
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LevelSetGrid {
        let grid = Grid::parse("0:1,-1:1", "3,4").unwrap();
        LevelSetGrid {
            members: vec![true, true, false, false, true, false, false, false, true, true, true, true],
            grid,
            axes: vec!["x1".into(), "x2".into()],
            kind: SetKind::SDelta,
            lambda: 1.5,
            parameter: 0.01,
        }
    }

    #[test]
    fn rle_round_trip() {
        let set = sample();
        let mut buf = Vec::new();
        write_rle(&set, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"LSG1");
        let back = read_rle(&buf[..]).unwrap();
        assert_eq!(back, set);
        assert!(read_rle(&buf[..buf.len() - 2]).is_err());
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        write_csv(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x1,x2,member");
        assert_eq!(lines.len(), 13);
        assert!(lines[1].ends_with(",1") && lines[3].ends_with(",0"));
    }
}
