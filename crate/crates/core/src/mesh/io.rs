//! Plain-text mesh format.
//!
//! ```text
//! meshcond v1 dim=<d> nv=<Nv> ne=<Ne>
//! <x> [<y> [<z>]] <b>        (Nv lines, b = 1 on the boundary)
//! <i0> ... <id>              (Ne lines, zero-based vertex indices)
//! ```
//!
//! Coordinates are written with 17 significant digits so that reading a
//! written mesh reproduces it bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::SimplicialMesh;
use crate::error::{Error, Result};

const MAGIC: &str = "meshcond";
const VERSION: &str = "v1";

pub fn write_mesh(mesh: &SimplicialMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_mesh_to(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_mesh_to(mesh: &SimplicialMesh, w: &mut impl Write) -> Result<()> {
    writeln!(
        w,
        "{MAGIC} {VERSION} dim={} nv={} ne={}",
        mesh.dim(),
        mesh.num_vertices(),
        mesh.num_elements()
    )?;
    for i in 0..mesh.num_vertices() {
        for x in mesh.vertex(i) {
            write!(w, "{x:.16e} ")?;
        }
        writeln!(w, "{}", u8::from(mesh.is_boundary(i)))?;
    }
    for k in 0..mesh.num_elements() {
        let el = mesh.element(k);
        for (i, v) in el.iter().enumerate() {
            if i > 0 {
                write!(w, " ")?;
            }
            write!(w, "{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<SimplicialMesh> {
    read_mesh_from(BufReader::new(File::open(path)?))
}

pub fn read_mesh_from(r: impl Read) -> Result<SimplicialMesh> {
    let mut lines = BufReader::new(r)
        .lines()
        .enumerate()
        .filter_map(|(i, l)| match l {
            Ok(s) if s.trim().is_empty() => None,
            other => Some((i + 1, other)),
        });

    let (line_no, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(Error::parse(1, "missing header")),
    };
    let (dim, nv, ne) = parse_header(&header).map_err(|m| Error::parse(line_no, m))?;

    let mut coords = Vec::with_capacity(nv * dim);
    let mut boundary = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, line) = lines
            .next()
            .ok_or_else(|| Error::parse(line_no, "unexpected end of file in vertex block"))?;
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != dim + 1 {
            return Err(Error::parse(
                n,
                format!("expected {} fields, found {}", dim + 1, fields.len()),
            ));
        }
        for f in &fields[..dim] {
            let x: f64 = f
                .parse()
                .map_err(|_| Error::parse(n, format!("bad coordinate {f:?}")))?;
            if !x.is_finite() {
                return Err(Error::parse(n, format!("non-finite coordinate {f}")));
            }
            coords.push(x);
        }
        boundary.push(match fields[dim] {
            "0" => false,
            "1" => true,
            b => {
                return Err(Error::parse(
                    n,
                    format!("boundary flag must be 0 or 1, found {b:?}"),
                ))
            }
        });
    }

    let mut cells = Vec::with_capacity(ne * (dim + 1));
    let mut last_line = line_no;
    for _ in 0..ne {
        let (n, line) = lines
            .next()
            .ok_or_else(|| Error::parse(last_line, "unexpected end of file in element block"))?;
        last_line = n;
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != dim + 1 {
            return Err(Error::parse(
                n,
                format!(
                    "expected {} vertex indices, found {}",
                    dim + 1,
                    fields.len()
                ),
            ));
        }
        for f in fields {
            let v: usize = f
                .parse()
                .map_err(|_| Error::parse(n, format!("bad vertex index {f:?}")))?;
            if v >= nv {
                return Err(Error::parse(
                    n,
                    format!("vertex index {v} out of range (nv = {nv})"),
                ));
            }
            cells.push(v);
        }
    }
    if let Some((n, _)) = lines.next() {
        return Err(Error::parse(n, "trailing data after element block"));
    }

    SimplicialMesh::new(dim, coords, cells, boundary)
}

fn parse_header(line: &str) -> std::result::Result<(usize, usize, usize), String> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err("missing header".into());
    }
    match parts.next() {
        Some(VERSION) => {}
        other => return Err(format!("unsupported format version {other:?}")),
    }
    let mut field = |key: &str| -> std::result::Result<usize, String> {
        let tok = parts.next().ok_or_else(|| format!("header lacks {key}="))?;
        tok.strip_prefix(key)
            .and_then(|s| s.strip_prefix('='))
            .ok_or_else(|| format!("expected {key}=<value>, found {tok:?}"))?
            .parse()
            .map_err(|_| format!("bad value in {tok:?}"))
    };
    let dim = field("dim")?;
    let nv = field("nv")?;
    let ne = field("ne")?;
    if !(1..=3).contains(&dim) {
        return Err(format!("dimension {dim} not in 1..=3"));
    }
    Ok((dim, nv, ne))
}
