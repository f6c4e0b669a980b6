//! Label snapshots.
//!
//! `MBOLBL1` is an ASCII header line `MBOLBL1 d n_cells P Lambda` followed by
//! the row-major cell labels as unsigned bytes, 1-based. 2-D partitions can
//! also be written as binary PGM (`P5`, `maxval = P`).

use super::{FieldError, Partition, TorusGrid};
use std::io::{BufRead, Write};

pub const MAGIC: &str = "MBOLBL1";

pub fn write_labels<W: Write>(p: &Partition, mut out: W) -> Result<(), FieldError> {
    let g = p.grid();
    writeln!(out, "{MAGIC} {} {} {} {}", g.dim(), g.n(), p.phases(), g.side())?;
    let bytes: Vec<u8> = p.labels().iter().map(|&l| l + 1).collect();
    out.write_all(&bytes)?;
    Ok(())
}

pub fn read_labels<R: BufRead>(mut input: R) -> Result<Partition, FieldError> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != MAGIC {
        return Err(FieldError::Snapshot(format!("bad header {:?}", header.trim_end())));
    }
    let parse_usize = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| FieldError::Snapshot(format!("bad {what} {s:?}")))
    };
    let dim = parse_usize(fields[1], "dimension")?;
    let n = parse_usize(fields[2], "cell count")?;
    let phases = parse_usize(fields[3], "phase count")?;
    let side: f64 = fields[4]
        .parse()
        .map_err(|_| FieldError::Snapshot(format!("bad side length {:?}", fields[4])))?;
    let grid = TorusGrid::new(dim, side, n)?;
    let mut bytes = vec![0u8; grid.len()];
    input
        .read_exact(&mut bytes)
        .map_err(|e| FieldError::Snapshot(format!("truncated label data: {e}")))?;
    if bytes.iter().any(|&b| b == 0 || b as usize > phases) {
        return Err(FieldError::Snapshot("label outside 1..=P".into()));
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(FieldError::Snapshot(format!("{} trailing bytes", rest.len())));
    }
    Partition::new(grid, phases, bytes.into_iter().map(|b| b - 1).collect())
}

/// Binary greymap of a 2-D partition: rows follow axis 0, columns axis 1.
pub fn write_pgm<W: Write>(p: &Partition, mut out: W) -> Result<(), FieldError> {
    let g = p.grid();
    if g.dim() != 2 {
        return Err(FieldError::Snapshot("PGM output needs a 2-D partition".into()));
    }
    write!(out, "P5\n{} {}\n{}\n", g.n(), g.n(), p.phases())?;
    let bytes: Vec<u8> = p.labels().iter().map(|&l| l + 1).collect();
    out.write_all(&bytes)?;
    Ok(())
}
