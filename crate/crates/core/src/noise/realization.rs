use super::{NoiseError, SpacetimeGrid, SpatialGrid};
use std::fmt::Write;

const MAGIC: &[u8; 4] = b"CLNR";
const VERSION: u32 = 1;

/// A sampled field w on a spacetime lattice, stored time-major
/// (`index = k·sites + site`), with the seed and spectrum that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub grid: SpacetimeGrid,
    pub values: Vec<f64>,
    pub seed: u64,
    pub spectrum_tag: String,
}

impl NoiseRealization {
    pub fn at(&self, step: usize, site: usize) -> f64 {
        self.values[step * self.grid.space.sites() + site]
    }

    /// CSV with header `t,x[,y,z],w`; t is the cell centre.
    pub fn to_csv(&self) -> String {
        let space = &self.grid.space;
        let mut out = String::new();
        out.push_str(if space.dim == 1 { "t,x,w\n" } else { "t,x,y,z,w\n" });
        for k in 0..self.grid.steps {
            let t = self.grid.time_centre(k);
            for a in 0..space.sites() {
                let p = space.position(a);
                let w = self.at(k, a);
                if space.dim == 1 {
                    let _ = writeln!(out, "{t},{},{w}", p[0]);
                } else {
                    let _ = writeln!(out, "{t},{},{},{},{w}", p[0], p[1], p[2]);
                }
            }
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let g = &self.grid;
        let mut b = Vec::with_capacity(128 + 8 * self.values.len());
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.extend_from_slice(&self.seed.to_le_bytes());
        b.extend_from_slice(&(self.spectrum_tag.len() as u32).to_le_bytes());
        b.extend_from_slice(self.spectrum_tag.as_bytes());
        b.extend_from_slice(&(g.space.dim as u32).to_le_bytes());
        for n in g.space.counts {
            b.extend_from_slice(&(n as u64).to_le_bytes());
        }
        b.extend_from_slice(&g.space.spacing.to_le_bytes());
        for o in g.space.origin {
            b.extend_from_slice(&o.to_le_bytes());
        }
        b.extend_from_slice(&g.t0.to_le_bytes());
        b.extend_from_slice(&g.t1.to_le_bytes());
        b.extend_from_slice(&(g.steps as u64).to_le_bytes());
        for v in &self.values {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NoiseError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(NoiseError::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(NoiseError::Format(format!("unsupported version {version}")));
        }
        let seed = r.u64()?;
        let tag_len = r.u32()? as usize;
        let spectrum_tag = String::from_utf8(r.take(tag_len)?.to_vec())
            .map_err(|_| NoiseError::Format("spectrum tag is not UTF-8".into()))?;
        let dim = r.u32()? as usize;
        let counts = [r.u64()? as usize, r.u64()? as usize, r.u64()? as usize];
        let spacing = r.f64()?;
        let origin = [r.f64()?, r.f64()?, r.f64()?];
        let space = match dim {
            1 => SpatialGrid::line(counts[0], spacing)?,
            3 => SpatialGrid::cube(counts, spacing)?,
            _ => return Err(NoiseError::Format(format!("dimension {dim}"))),
        }
        .with_origin(origin);
        let (t0, t1) = (r.f64()?, r.f64()?);
        let steps = r.u64()? as usize;
        let grid = SpacetimeGrid::new(space, t0, t1, steps)?;
        let n = grid.site_count();
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(r.f64()?);
        }
        if r.pos != bytes.len() {
            return Err(NoiseError::Format("trailing bytes".into()));
        }
        Ok(NoiseRealization {
            grid,
            values,
            seed,
            spectrum_tag,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NoiseError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(NoiseError::Format("truncated".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32, NoiseError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, NoiseError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, NoiseError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
