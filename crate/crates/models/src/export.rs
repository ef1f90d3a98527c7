//! Field snapshots: CSV (`x,y,value`) and a compact binary dump.
//!
//! Binary layout, little endian:
//!
//! ```text
//! magic   [u8; 4] = b"OSCF"
//! version u32     = 1
//! rows    u64
//! cols    u64
//! data    rows*cols f64, row-major
//! ```

use std::io::{self, Read, Write};

use crate::model::ModelFibration;

pub const MAGIC: &[u8; 4] = b"OSCF";

pub fn field_csv(model: &ModelFibration, f: &[f64]) -> String {
    let mut s = String::from("x,y,value\n");
    for j in 0..model.ny() {
        for i in 0..model.nx() {
            s.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", model.x()[i], model.y()[j], f[model.idx(j, i)]));
        }
    }
    s
}

pub fn base_csv(model: &ModelFibration, names: &[&str], cols: &[&[f64]]) -> String {
    let mut s = String::from("y");
    for n in names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for j in 0..model.ny() {
        s.push_str(&format!("{:.17e}", model.y()[j]));
        for c in cols {
            s.push_str(&format!(",{:.17e}", c[j]));
        }
        s.push('\n');
    }
    s
}

pub fn write_dump<W: Write>(mut w: W, rows: usize, cols: usize, data: &[f64]) -> io::Result<()> {
    assert_eq!(rows * cols, data.len());
    w.write_all(MAGIC)?;
    w.write_all(&1u32.to_le_bytes())?;
    w.write_all(&(rows as u64).to_le_bytes())?;
    w.write_all(&(cols as u64).to_le_bytes())?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_dump<R: Read>(mut r: R) -> io::Result<(usize, usize, Vec<f64>)> {
    let mut head = [0u8; 4];
    r.read_exact(&mut head)?;
    if &head != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != 1 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "unsupported version"));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let rows = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let cols = u64::from_le_bytes(b8) as usize;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        r.read_exact(&mut b8)?;
        data.push(f64::from_le_bytes(b8));
    }
    Ok((rows, cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trip() {
        let data: Vec<f64> = (0..12).map(|i| i as f64 * 0.25 - 1.0).collect();
        let mut buf = Vec::new();
        write_dump(&mut buf, 3, 4, &data).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 16 + 96);
        let (r, c, d) = read_dump(&buf[..]).unwrap();
        assert_eq!((r, c), (3, 4));
        assert_eq!(d, data);
    }
}
