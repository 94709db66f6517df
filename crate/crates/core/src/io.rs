//! Text and binary output formats.
//!
//! * Cylinder tables: one `word<TAB>mass` line per cylinder, the word as
//!   colon-separated symbols, the mass in exact text or 17 significant digits.
//! * CSV with a header row; floats in 17 significant digits.
//! * Densities as binary PGM (P5), scaled so the largest cell maps to the
//!   maximum gray value.

use std::collections::BTreeMap;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::dynamics::{Subshift, Word};
use crate::error::{Error, Result};
use crate::measures::{CylinderTable, EmpiricalCloud, GridDensity};
use crate::scalar::{format_f64, parse_scalar, Scalar};

pub fn write_cylinder_table<S: Scalar, W: Write>(table: &CylinderTable<S>, out: &mut W) -> io::Result<()> {
    writeln!(out, "# depth {}", table.depth())?;
    let mut rows: Vec<(&Word, &S)> = table.entries().collect();
    rows.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(b.0)));
    for (w, m) in rows {
        writeln!(out, "{w:?}\t{}", m.to_text())?;
    }
    Ok(())
}

/// Inverse of [`write_cylinder_table`]; `#` lines and blank lines are skipped.
pub fn read_cylinder_table<S: Scalar>(sys: Subshift, text: &str) -> Result<CylinderTable<S>> {
    let mut masses = BTreeMap::new();
    let mut depth = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (w, m) = line
            .split_once('\t')
            .ok_or_else(|| Error::InvalidInput(format!("line {}: expected word<TAB>mass", lineno + 1)))?;
        let word = Word::parse(w)?;
        let mass: S = parse_scalar(m.trim())
            .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))?;
        depth = depth.max(word.len());
        masses.insert(word, mass);
    }
    CylinderTable::from_masses(sys, depth, masses)
}

pub fn write_grid_csv<W: Write>(grid: &GridDensity, out: &mut W) -> io::Result<()> {
    writeln!(out, "x,weight")?;
    for (x, w) in grid.nodes().iter().zip(grid.weights()) {
        writeln!(out, "{},{}", format_f64(x.to_f64()), format_f64(*w))?;
    }
    Ok(())
}

pub fn write_cloud_csv<W: Write>(cloud: &EmpiricalCloud<Complex64>, out: &mut W) -> io::Result<()> {
    writeln!(out, "re,im")?;
    for z in cloud.points() {
        writeln!(out, "{},{}", format_f64(z.re), format_f64(z.im))?;
    }
    Ok(())
}

/// Counts of points per cell of a `width × height` raster over the square
/// `[−r, r]²`, row 0 at the top (largest imaginary part).
pub fn rasterize(points: &[Complex64], half_width: f64, width: usize, height: usize) -> Vec<u64> {
    let mut cells = vec![0u64; width * height];
    if width == 0 || height == 0 {
        return cells;
    }
    for z in points {
        let u = (z.re + half_width) / (2.0 * half_width);
        let v = (half_width - z.im) / (2.0 * half_width);
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            continue;
        }
        let col = ((u * width as f64) as usize).min(width - 1);
        let row = ((v * height as f64) as usize).min(height - 1);
        cells[row * width + col] += 1;
    }
    cells
}

/// Binary PGM with gray value `round(count/max · maxval)`; an all-zero
/// raster is written black.
pub fn write_pgm<W: Write>(out: &mut W, cells: &[u64], width: usize, height: usize, sixteen_bit: bool) -> io::Result<()> {
    assert_eq!(cells.len(), width * height, "raster size mismatch");
    let maxval: u64 = if sixteen_bit { 65535 } else { 255 };
    write!(out, "P5\n{width} {height}\n{maxval}\n")?;
    let peak = cells.iter().copied().max().unwrap_or(0);
    let mut bytes = Vec::with_capacity(cells.len() * if sixteen_bit { 2 } else { 1 });
    for &c in cells {
        let g = if peak == 0 { 0 } else { (c * maxval + peak / 2) / peak };
        if sixteen_bit {
            bytes.extend_from_slice(&(g as u16).to_be_bytes());
        } else {
            bytes.push(g as u8);
        }
    }
    out.write_all(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Surd;
    use crate::weights::WeightFunction;

    #[test]
    fn cylinder_table_round_trip_exact() {
        let sys = Subshift::golden_mean();
        let t = crate::measures::perron_fixed_measure(&sys, &WeightFunction::Constant(Surd::integer(1)), 3).unwrap();
        let mut buf = Vec::new();
        write_cylinder_table(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("0\t"));
        let back: CylinderTable<Surd> = read_cylinder_table(sys, &text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn cylinder_table_round_trip_float() {
        let t = CylinderTable::bernoulli(vec![0.3, 0.7], 3).unwrap();
        let mut buf = Vec::new();
        write_cylinder_table(&t, &mut buf).unwrap();
        let back: CylinderTable<f64> = read_cylinder_table(Subshift::full(2), &String::from_utf8(buf).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn pgm_header_and_scaling() {
        let cells = rasterize(&[Complex64::new(0.5, 0.5), Complex64::new(0.5, 0.5), Complex64::new(-0.5, -0.5)], 1.0, 2, 2);
        assert_eq!(cells, vec![0, 2, 1, 0]);
        let mut buf = Vec::new();
        write_pgm(&mut buf, &cells, 2, 2, false).unwrap();
        assert_eq!(&buf[..11], b"P5\n2 2\n255\n");
        assert_eq!(&buf[11..], &[0, 255, 128, 0]);
        let mut blank = Vec::new();
        write_pgm(&mut blank, &[0; 4], 2, 2, true).unwrap();
        assert_eq!(blank.len(), "P5\n2 2\n65535\n".len() + 8);
    }
}
