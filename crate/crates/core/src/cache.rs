//! On-disk propagator cache keyed by the layout fingerprint.
//!
//! File layout, little-endian: magic `SPLP`, format version (u32), site
//! count (u64), fingerprint (64 ASCII hex bytes), sector flag (u8), then for
//! each stored sector its dimension (u64), eigenvalues and the eigenvector
//! matrix in column-major order (f64).

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use faer::Mat;

use crate::error::{Error, Result};
use crate::evolution::{BlockPropagator, Sectors};
use crate::layout::CouplingLayout;
use crate::linalg::Spectrum;

const MAGIC: &[u8; 4] = b"SPLP";
pub const FORMAT_VERSION: u32 = 1;
pub const ENV_VAR: &str = "SPINLINE_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropagatorCache {
    dir: PathBuf,
}

impl PropagatorCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Cache rooted at `$SPINLINE_CACHE_DIR`, if set and nonempty.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(ENV_VAR).filter(|v| !v.is_empty()).map(Self::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, fingerprint: &str, sectors: Sectors) -> PathBuf {
        let tag = match sectors {
            Sectors::OneOnly => "one",
            Sectors::Both => "both",
        };
        self.dir.join(format!("{fingerprint}.{tag}.bin"))
    }

    /// Cached propagator for `layout`; `Ok(None)` when no file exists.
    pub fn load(&self, layout: &CouplingLayout, sectors: Sectors) -> Result<Option<BlockPropagator>> {
        let fp = layout.fingerprint();
        let path = self.path(&fp, sectors);
        let file = match fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let prop = read_propagator(&mut BufReader::new(file))?;
        if prop.fingerprint() != fp || prop.n_sites() != layout.n_sites() {
            return Err(Error::Cache(format!("{} does not belong to this layout", path.display())));
        }
        if sectors == Sectors::Both && prop.two_excitation().is_none() {
            return Err(Error::Cache(format!("{} lacks the two-excitation sector", path.display())));
        }
        Ok(Some(prop))
    }

    pub fn store(&self, prop: &BlockPropagator) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let sectors = if prop.two_excitation().is_some() { Sectors::Both } else { Sectors::OneOnly };
        let path = self.path(prop.fingerprint(), sectors);
        let tmp = path.with_extension("tmp");
        {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            write_propagator(&mut w, prop)?;
            w.flush()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// Loads from the cache or diagonalizes and stores.
    pub fn get_or_build(&self, layout: &CouplingLayout, sectors: Sectors) -> Result<BlockPropagator> {
        if let Some(p) = self.load(layout, sectors)? {
            return Ok(p);
        }
        let prop = BlockPropagator::for_layout(layout, sectors)?;
        self.store(&prop)?;
        Ok(prop)
    }
}

fn write_spectrum<W: Write>(w: &mut W, s: &Spectrum) -> Result<()> {
    let n = s.values.len();
    w.write_all(&(n as u64).to_le_bytes())?;
    for v in &s.values {
        w.write_all(&v.to_le_bytes())?;
    }
    for j in 0..n {
        for i in 0..n {
            w.write_all(&s.vectors[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_propagator<W: Write>(w: &mut W, prop: &BlockPropagator) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(prop.n_sites() as u64).to_le_bytes())?;
    let fp = prop.fingerprint().as_bytes();
    if fp.len() != 64 {
        return Err(Error::Cache("fingerprint is not 64 hex digits".into()));
    }
    w.write_all(fp)?;
    w.write_all(&[u8::from(prop.two_excitation().is_some())])?;
    write_spectrum(w, prop.one_excitation())?;
    if let Some(two) = prop.two_excitation() {
        write_spectrum(w, two)?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn read_spectrum<R: Read>(r: &mut R, expected: usize) -> Result<Spectrum> {
    let n = read_u64(r)? as usize;
    if n != expected {
        return Err(Error::Cache(format!("sector dimension {n}, expected {expected}")));
    }
    let values = (0..n).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
    let mut vectors = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            vectors[(i, j)] = read_f64(r)?;
        }
    }
    Ok(Spectrum { values, vectors })
}

pub fn read_propagator<R: Read>(r: &mut R) -> Result<BlockPropagator> {
    let mut head = [0u8; 8];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(Error::Cache("not a propagator cache file".into()));
    }
    let version = u32::from_le_bytes(head[4..].try_into().expect("four bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Cache(format!("format version {version}, expected {FORMAT_VERSION}")));
    }
    let n = read_u64(r)? as usize;
    if n < 2 {
        return Err(Error::Cache(format!("site count {n}")));
    }
    let mut fp = [0u8; 64];
    r.read_exact(&mut fp)?;
    let fingerprint = String::from_utf8(fp.to_vec()).map_err(|_| Error::Cache("fingerprint is not ASCII".into()))?;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let one = read_spectrum(r, n)?;
    let two = match flag[0] {
        0 => None,
        1 => Some(read_spectrum(r, n * (n - 1) / 2)?),
        f => return Err(Error::Cache(format!("sector flag {f}"))),
    };
    Ok(BlockPropagator { n_sites: n, one, two, fingerprint })
}
