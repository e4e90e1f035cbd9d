//! Flat binary blob and CSV export of nodal fields.
//!
//! Blob layout (little endian):
//!
//! ```text
//! b"KSHF"  u32 version = 1  u32 channels  u32 n_t  u32 n_theta  u32 n_z
//! f64 h  f64 omega  f64 z_lo  f64 z_hi  u32 name_len  name bytes (utf-8)
//! channels * n_t * n_theta * n_z f64 values, channel-major, t-fastest
//! ```

use std::io::{Read, Write};

use super::{ScalarField, ShellGrid};
use crate::error::{KornError, Result};

const MAGIC: &[u8; 4] = b"KSHF";
const VERSION: u32 = 1;

pub fn write_blob<W: Write>(channels: &[&ScalarField], mut out: W) -> Result<()> {
    let grid = match channels.first() {
        Some(c) => c.grid(),
        None => return Err(KornError::InvalidParameter("no channels to write".into())),
    };
    if channels.iter().any(|c| c.grid() != grid) {
        return Err(KornError::GridMismatch);
    }
    out.write_all(MAGIC)?;
    for v in [VERSION, channels.len() as u32, grid.n_t as u32, grid.n_theta as u32, grid.n_z as u32] {
        out.write_all(&v.to_le_bytes())?;
    }
    for v in [grid.h, grid.omega, grid.z_lo, grid.z_hi] {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(&(grid.patch.len() as u32).to_le_bytes())?;
    out.write_all(grid.patch.as_bytes())?;
    for c in channels {
        for v in c.values() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads a blob written by [`write_blob`].
pub fn read_blob<R: Read>(mut r: R) -> Result<(ShellGrid, Vec<ScalarField>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(KornError::Parse("not a field blob (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(KornError::Parse(format!("unsupported blob version {version}")));
    }
    let channels = read_u32(&mut r)? as usize;
    let (n_t, n_theta, n_z) = (read_u32(&mut r)? as usize, read_u32(&mut r)? as usize, read_u32(&mut r)? as usize);
    let (h, omega, z_lo, z_hi) = (read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?);
    let name_len = read_u32(&mut r)? as usize;
    let mut name = vec![0u8; name_len];
    r.read_exact(&mut name)?;
    let patch = String::from_utf8(name).map_err(|e| KornError::Parse(e.to_string()))?;
    let grid = ShellGrid { h, n_t, n_theta, n_z, omega, z_lo, z_hi, patch };
    let mut fields = Vec::with_capacity(channels);
    for _ in 0..channels {
        let mut vals = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            vals.push(read_f64(&mut r)?);
        }
        fields.push(ScalarField::from_values(&grid, vals)?);
    }
    Ok((grid, fields))
}

/// CSV with columns `t,theta,z,<names...>`, one row per node in storage order.
pub fn write_csv<W: Write>(channels: &[(&str, &ScalarField)], mut out: W) -> Result<()> {
    let grid = match channels.first() {
        Some((_, c)) => c.grid(),
        None => return Err(KornError::InvalidParameter("no channels to write".into())),
    };
    if channels.iter().any(|(_, c)| c.grid() != grid) {
        return Err(KornError::GridMismatch);
    }
    write!(out, "t,theta,z")?;
    for (name, _) in channels {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for idx in 0..grid.len() {
        let (t, th, z) = grid.coords(idx);
        write!(out, "{t},{th},{z}")?;
        for (_, c) in channels {
            write!(out, ",{}", c.values()[idx])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_field::sample;
    use crate::surface::SurfacePatch;

    #[test]
    fn blob_round_trip_is_bit_exact() {
        let p = SurfacePatch::cylinder(1.5, 2.0, 1.0).unwrap();
        let g = ShellGrid::new(&p, 0.05, 3, 4, 5).unwrap();
        let a = sample(|t, th, z| (t + 3.0 * th).sin() * z.exp(), &g);
        let b = sample(|t, _, z| t * z - 1.0 / 3.0, &g);
        let mut buf = Vec::new();
        write_blob(&[&a, &b], &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 5 * 4 + 4 * 8 + 4 + "cylinder".len() + 2 * g.len() * 8);
        let (g2, fields) = read_blob(buf.as_slice()).unwrap();
        assert_eq!(g2, g);
        assert_eq!(fields[0], a);
        assert_eq!(fields[1], b);
    }

    #[test]
    fn blob_rejects_garbage() {
        assert!(matches!(read_blob(&b"NOPE0000"[..]), Err(KornError::Parse(_))));
        assert!(matches!(read_blob(&b"KSHF"[..]), Err(KornError::Io(_))));
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let p = SurfacePatch::plate(1.0, 1.0).unwrap();
        let g = ShellGrid::new(&p, 0.1, 3, 3, 3).unwrap();
        let f = sample(|t, _, _| t, &g);
        let mut buf = Vec::new();
        write_csv(&[("u", &f)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,theta,z,u");
        assert_eq!(lines.len(), 1 + 27);
        assert_eq!(lines[1], "-0.05,0,0,-0.05");
    }
}
