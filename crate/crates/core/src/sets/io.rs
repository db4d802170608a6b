//! Plain-text grid files.
//!
//! Header: `origin_x origin_y cell nx ny t_meas spread_max`, then `ny` rows of
//! `nx` whitespace-separated samples. Bitmasks use `0` (free), `1` (burning)
//! and `-` (unknown); their spread field is written as 0.

use std::io::{BufRead, Write};

use super::grid::Grid2;
use super::sdf::{Bitmask, CellState, SdfForecastSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn write_header<S: Scalar, W: Write>(w: &mut W, g: &Grid2<S>, t: S, spread: S) -> Result<()> {
    writeln!(w, "{} {} {} {} {} {} {}", g.origin[0], g.origin[1], g.cell, g.nx, g.ny, t, spread)?;
    Ok(())
}

fn write_rows<W: Write, T>(w: &mut W, nx: usize, items: &[T], fmt: impl Fn(&T) -> String) -> Result<()> {
    for row in items.chunks(nx) {
        let line: Vec<String> = row.iter().map(&fmt).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_sdf<S: Scalar, W: Write>(w: &mut W, set: &SdfForecastSet<S>) -> Result<()> {
    write_header(w, set.grid(), set.t_meas(), set.spread_max())?;
    write_rows(w, set.grid().nx, set.phi0(), |v| v.to_string())
}

pub fn write_bitmask<S: Scalar, W: Write>(w: &mut W, mask: &Bitmask<S>) -> Result<()> {
    write_header(w, mask.grid(), mask.t(), S::zero())?;
    write_rows(w, mask.grid().nx, mask.cells(), |c| {
        match c {
            CellState::Free => "0",
            CellState::Burning => "1",
            CellState::Unknown => "-",
        }
        .to_string()
    })
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?;
    tok.parse().map_err(|_| Error::Parse(format!("bad {what}: {tok:?}")))
}

type Parsed<S> = (Grid2<S>, S, S, Vec<String>);

fn read_grid<S: Scalar, R: BufRead>(r: R) -> Result<Parsed<S>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty grid file".into()))??;
    let mut h = header.split_whitespace();
    let ox: S = parse_num(h.next(), "origin_x")?;
    let oy: S = parse_num(h.next(), "origin_y")?;
    let cell: S = parse_num(h.next(), "cell")?;
    let nx: usize = parse_num(h.next(), "nx")?;
    let ny: usize = parse_num(h.next(), "ny")?;
    let t: S = parse_num(h.next(), "t_meas")?;
    let spread: S = parse_num(h.next(), "spread_max")?;
    if h.next().is_some() {
        return Err(Error::Parse("trailing header fields".into()));
    }
    let grid = Grid2::new([ox, oy], cell, nx, ny)?;
    let mut tokens = Vec::with_capacity(grid.len());
    for line in lines {
        tokens.extend(line?.split_whitespace().map(str::to_owned));
    }
    if tokens.len() != grid.len() {
        return Err(Error::Parse(format!("expected {} samples, found {}", grid.len(), tokens.len())));
    }
    Ok((grid, t, spread, tokens))
}

pub fn read_sdf<S: Scalar, R: BufRead>(r: R) -> Result<SdfForecastSet<S>> {
    let (grid, t, spread, tokens) = read_grid::<S, _>(r)?;
    let phi = tokens.iter().map(|s| parse_num(Some(s), "sample")).collect::<Result<Vec<S>>>()?;
    SdfForecastSet::new(grid, phi, t, spread)
}

pub fn read_bitmask<S: Scalar, R: BufRead>(r: R) -> Result<Bitmask<S>> {
    let (grid, t, _, tokens) = read_grid::<S, _>(r)?;
    let cells = tokens
        .iter()
        .map(|s| match s.as_str() {
            "0" => Ok(CellState::Free),
            "1" => Ok(CellState::Burning),
            "-" => Ok(CellState::Unknown),
            other => Err(Error::Parse(format!("bad mask cell {other:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Bitmask::new(grid, cells, t)
}
