//! Flat binary and CSV serialization of grid fields.
//!
//! Binary layout: a 24-byte header of little-endian 64-bit values — the
//! dimension `d`, the axis length `n` (both as u64) and the period
//! multiplier `P` (as f64) — followed by the `n^d` samples as row-major
//! little-endian f64.

use std::io::{Read, Write};
use std::sync::Arc;

use super::field::GridField;
use super::grid::TorusGrid;

/// Write the binary snapshot layout.
pub fn write_binary(field: &GridField, out: &mut impl Write) -> std::io::Result<()> {
    let g = field.grid();
    out.write_all(&(g.dim() as u64).to_le_bytes())?;
    out.write_all(&(g.n() as u64).to_le_bytes())?;
    out.write_all(&g.period().to_le_bytes())?;
    for s in field.samples() {
        out.write_all(&s.to_le_bytes())?;
    }
    Ok(())
}

/// Read a binary snapshot, reconstructing its grid from the header.
pub fn read_binary(input: &mut impl Read) -> std::io::Result<GridField> {
    let mut u64buf = [0u8; 8];
    input.read_exact(&mut u64buf)?;
    let d = u64::from_le_bytes(u64buf) as usize;
    input.read_exact(&mut u64buf)?;
    let n = u64::from_le_bytes(u64buf) as usize;
    input.read_exact(&mut u64buf)?;
    let period = f64::from_le_bytes(u64buf);
    let grid = TorusGrid::new(d, n, period)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
    let mut samples = vec![0.0f64; grid.len()];
    for s in &mut samples {
        input.read_exact(&mut u64buf)?;
        *s = f64::from_le_bytes(u64buf);
    }
    GridField::from_samples(&grid, samples)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
}

/// Write the CSV dialect for small grids: header `x1,...,xd,value`, one
/// row per grid point in row-major order.
pub fn write_csv(field: &GridField, out: &mut impl Write) -> csv::Result<()> {
    let g = field.grid();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=g.dim()).map(|j| format!("x{j}")).collect();
    header.push("value".to_string());
    w.write_record(&header)?;
    for (i, s) in field.samples().iter().enumerate() {
        let mut row: Vec<String> = g.point(i).iter().map(|x| format!("{x}")).collect();
        row.push(format!("{s}"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Render a grid reference for manifests.
pub fn grid_descriptor(grid: &Arc<TorusGrid>) -> String {
    format!("d={},n={},period={}", grid.dim(), grid.n(), grid.period())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let g = TorusGrid::new(2, 8, 1.5).unwrap();
        let f = GridField::from_fn(&g, |p| (p[0] / 1.5).sin() * 0.3 + p[1] * 1e-3);
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 64 * 8);
        let back = read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back.grid().dim(), 2);
        assert_eq!(back.grid().n(), 8);
        assert_eq!(back.grid().period(), 1.5);
        assert_eq!(back.samples(), f.samples());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = TorusGrid::new(1, 4, 1.0).unwrap();
        let f = GridField::from_fn(&g, |p| p[0]);
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x1,value");
        assert_eq!(lines.len(), 5);
    }
}
