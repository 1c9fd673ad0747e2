//! Versioned text records for lattice filters and design-node sets.
//! All decimals carry 17 significant digits, so read-after-write
//! reproduces every f64 bit-exactly.

use std::io::{BufRead, Write};

use crate::error::Result;
use crate::lattice::LatticeParams;
use crate::matcore::CMat;
use crate::textfmt::{fmt_f64, parse_f64, read_cmat_block, write_cmat_block, LineReader};

/// Write a lattice parameter record:
///
/// ```text
/// latticeparams v1
/// m <dim>
/// order <M>
/// kappa <k>
/// <row-major re im pairs, m lines>
/// ...
/// residue
/// <row-major re im pairs>
/// end
/// ```
pub fn write_lattice_params(w: &mut impl Write, p: &LatticeParams) -> std::io::Result<()> {
    writeln!(w, "latticeparams v1")?;
    writeln!(w, "m {}", p.dim())?;
    writeln!(w, "order {}", p.order())?;
    for (k, kappa) in p.kappas.iter().enumerate() {
        writeln!(w, "kappa {k}")?;
        write_cmat_block(w, kappa)?;
    }
    writeln!(w, "residue")?;
    write_cmat_block(w, &p.residue)?;
    writeln!(w, "end")?;
    Ok(())
}

pub fn read_lattice_params(reader: impl BufRead) -> Result<LatticeParams> {
    let mut r = LineReader::new(reader);
    r.expect("latticeparams v1")?;
    let m: usize = r.keyed("m")?.parse().map_err(|_| r.err("bad dimension"))?;
    let order: usize = r.keyed("order")?.parse().map_err(|_| r.err("bad order"))?;
    if m == 0 || order == 0 {
        return Err(r.err("dimension and order must be positive"));
    }
    let mut kappas = Vec::with_capacity(order - 1);
    for k in 0..order - 1 {
        let header = r.next()?;
        if header != format!("kappa {k}") {
            return Err(r.err(format!("expected 'kappa {k}', got '{header}'")));
        }
        kappas.push(read_cmat_block(&mut r, m, m)?);
    }
    r.expect("residue")?;
    let residue = read_cmat_block(&mut r, m, m)?;
    r.expect("end")?;
    Ok(LatticeParams::new(kappas, residue))
}

/// Write an interpolation node set:
///
/// ```text
/// nodes v1
/// m <dim>
/// count <n>
/// node <i> <omega>
/// <row-major re im pairs>
/// ...
/// end
/// ```
pub fn write_nodes(w: &mut impl Write, nodes: &[(f64, CMat)]) -> std::io::Result<()> {
    writeln!(w, "nodes v1")?;
    writeln!(w, "m {}", nodes.first().map_or(0, |(_, v)| v.nrows()))?;
    writeln!(w, "count {}", nodes.len())?;
    for (i, (omega, v)) in nodes.iter().enumerate() {
        writeln!(w, "node {i} {}", fmt_f64(*omega))?;
        write_cmat_block(w, v)?;
    }
    writeln!(w, "end")?;
    Ok(())
}

pub fn read_nodes(reader: impl BufRead) -> Result<Vec<(f64, CMat)>> {
    let mut r = LineReader::new(reader);
    r.expect("nodes v1")?;
    let m: usize = r.keyed("m")?.parse().map_err(|_| r.err("bad dimension"))?;
    let count: usize = r.keyed("count")?.parse().map_err(|_| r.err("bad count"))?;
    if m == 0 {
        return Err(r.err("dimension must be positive"));
    }
    let mut nodes = Vec::with_capacity(count);
    for i in 0..count {
        let header = r.next()?;
        let rest = header
            .strip_prefix(&format!("node {i} "))
            .ok_or_else(|| r.err(format!("expected 'node {i} <omega>'")))?;
        let omega = parse_f64(rest).map_err(|e| r.err(e))?;
        nodes.push((omega, read_cmat_block(&mut r, m, m)?));
    }
    r.expect("end")?;
    Ok(nodes)
}
