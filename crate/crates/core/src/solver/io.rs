//! CSV and binary export of solve results. The binary layout is described in
//! `docs/formats.md`; all integers and floats are little-endian.

use std::io::{Read, Write};

use super::SolveResult;
use crate::error::{Error, Result};

pub const BINARY_MAGIC: [u8; 4] = *b"SHSR";
pub const BINARY_VERSION: u32 = 1;

impl SolveResult {
    /// 1D: `t,x,u`; 2D: `t,x,y,u`. One row per node (boundary included) per level.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let space = self.space();
        let time = self.time();
        if space.dim() == 1 {
            writeln!(w, "t,x,u")?;
        } else {
            writeln!(w, "t,x,y,u")?;
        }
        for (n, level) in self.u.iter().enumerate() {
            let t = time.t(n);
            for (idx, v) in level.iter().enumerate() {
                let p = space.point(idx);
                if space.dim() == 1 {
                    writeln!(w, "{t},{},{v}", p[0])?;
                } else {
                    writeln!(w, "{t},{},{},{v}", p[0], p[1])?;
                }
            }
        }
        Ok(())
    }

    pub fn to_array(&self) -> SolutionArray {
        let space = self.space();
        let ax = space.axis(0);
        let (ny, hy, y_lower) = if space.dim() == 2 {
            let ay = space.axis(1);
            (ay.nodes(), ay.h(), ay.lower)
        } else {
            (1, 0.0, 0.0)
        };
        SolutionArray {
            ndim: space.dim() as u32,
            nt: self.u.len(),
            nx: ax.nodes(),
            ny,
            dt: self.time().dt(),
            hx: ax.h(),
            hy,
            x_lower: ax.lower,
            y_lower,
            data: self.u.iter().flatten().copied().collect(),
        }
    }

    pub fn write_binary<W: Write>(&self, w: W) -> Result<()> {
        self.to_array().write(w)
    }
}

/// Raw grid data as stored in the binary format.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionArray {
    pub ndim: u32,
    /// time levels (steps + 1)
    pub nt: usize,
    /// nodes along x, boundary included
    pub nx: usize,
    /// nodes along y, boundary included (1 in 1D)
    pub ny: usize,
    pub dt: f64,
    pub hx: f64,
    pub hy: f64,
    pub x_lower: f64,
    pub y_lower: f64,
    /// row-major `[t][x][y]`
    pub data: Vec<f64>,
}

impl SolutionArray {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&self.ndim.to_le_bytes())?;
        for n in [self.nt, self.nx, self.ny] {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        for v in [self.dt, self.hx, self.hy, self.x_lower, self.y_lower] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn value(&self, n: usize, ix: usize, iy: usize) -> f64 {
        self.data[(n * self.nx + ix) * self.ny + iy]
    }
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_binary<R: Read>(mut r: R) -> Result<SolutionArray> {
    if take::<4>(&mut r)? != BINARY_MAGIC {
        return Err(Error::Parse("bad magic, expected SHSR".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != BINARY_VERSION {
        return Err(Error::Parse(format!("unsupported version {version}")));
    }
    let ndim = u32::from_le_bytes(take(&mut r)?);
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = u64::from_le_bytes(take(&mut r)?) as usize;
    }
    let mut f = [0.0f64; 5];
    for v in &mut f {
        *v = f64::from_le_bytes(take(&mut r)?);
    }
    let count = dims[0]
        .checked_mul(dims[1])
        .and_then(|c| c.checked_mul(dims[2]))
        .ok_or_else(|| Error::Parse("dimensions overflow".into()))?;
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        data.push(f64::from_le_bytes(take(&mut r)?));
    }
    Ok(SolutionArray {
        ndim,
        nt: dims[0],
        nx: dims[1],
        ny: dims[2],
        dt: f[0],
        hx: f[1],
        hy: f[2],
        x_lower: f[3],
        y_lower: f[4],
        data,
    })
}
