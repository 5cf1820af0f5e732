//! On-disk cache of kernel tables.
//!
//! Layout: 8-byte magic, `u32` version, the key, then every array of the table as
//! little-endian IEEE bits, so a reload is bit-exact. Files are named by a hash of the key.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;

use super::contour::{ContourFamily, ContourNode, ContourSpec};
use super::table::{KernelTable, TimeKernel};
use crate::error::{Error, Result};
use crate::grid::ZGrid;

const MAGIC: &[u8; 8] = b"SLIPKTAB";
pub const CACHE_VERSION: u32 = 1;

/// Identity of a cached table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableKey {
    pub t: f64,
    pub nu: f64,
    pub beta: f64,
    pub alpha: i64,
    pub grid_hash: u64,
    pub contour_hash: u64,
}

impl TableKey {
    pub fn new(t: f64, nu: f64, beta: f64, alpha: i64, grid: &ZGrid, contour: &ContourSpec) -> Self {
        Self {
            t,
            nu,
            beta,
            alpha,
            grid_hash: grid.fingerprint(),
            contour_hash: contour.fingerprint(),
        }
    }

    pub fn of(table: &KernelTable) -> Self {
        let sh = table.time_kernel();
        Self {
            t: sh.t,
            nu: sh.nu,
            beta: sh.beta,
            alpha: table.alpha,
            grid_hash: sh.grid.fingerprint(),
            contour_hash: sh.requested,
        }
    }

    fn bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(48);
        for v in [self.t, self.nu, self.beta] {
            b.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        b.extend_from_slice(&self.alpha.to_le_bytes());
        b.extend_from_slice(&self.grid_hash.to_le_bytes());
        b.extend_from_slice(&self.contour_hash.to_le_bytes());
        b
    }

    pub fn file_name(&self) -> String {
        use sha2::{Digest, Sha256};
        let d = Sha256::digest(self.bytes());
        let hex: String = d[..12].iter().map(|x| format!("{x:02x}")).collect();
        format!("kernel_{hex}.bin")
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn c64(&mut self, v: Complex64) {
        self.f64(v.re);
        self.f64(v.im);
    }
    fn reals(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        v.iter().for_each(|x| self.f64(*x));
    }
    fn complexes(&mut self, v: &[Complex64]) {
        self.u64(v.len() as u64);
        v.iter().for_each(|x| self.c64(*x));
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Cache("truncated kernel file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()? as usize;
        if n > self.buf.len() {
            return Err(Error::Cache(format!("implausible array length {n}")));
        }
        Ok(n)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn c64(&mut self) -> Result<Complex64> {
        Ok(Complex64::new(self.f64()?, self.f64()?))
    }
    fn reals(&mut self) -> Result<Vec<f64>> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn complexes(&mut self) -> Result<Vec<Complex64>> {
        let n = self.len()?;
        (0..n).map(|_| self.c64()).collect()
    }
}

fn encode(table: &KernelTable) -> Vec<u8> {
    let sh = table.time_kernel();
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.0.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    w.0.extend_from_slice(&TableKey::of(table).bytes());
    let name = sh.contour.family.name().as_bytes();
    w.u64(name.len() as u64);
    w.0.extend_from_slice(name);
    for v in [sh.contour.vertex, sh.contour.radius, sh.contour.b_max] {
        w.f64(v);
    }
    w.u64(sh.contour.n_nodes as u64);
    w.u64(sh.heat_rows.len() as u64);
    for (first, row) in &sh.heat_rows {
        w.u64(*first as u64);
        w.reals(row);
    }
    w.u64(sh.nodes.len() as u64);
    for nd in &sh.nodes {
        w.c64(nd.lambda);
        w.c64(nd.weight);
    }
    w.complexes(&sh.mu);
    w.complexes(&sh.exp_z);
    w.complexes(&sh.moments);
    w.f64(table.heat_factor);
    w.reals(&table.moments_a);
    w.complexes(&table.p);
    w.complexes(&table.q);
    w.0
}

fn decode(buf: &[u8], key: &TableKey, grid: Arc<ZGrid>) -> Result<KernelTable> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!("cache version {version}, expected {CACHE_VERSION}")));
    }
    if r.take(48)? != key.bytes().as_slice() {
        return Err(Error::Cache("key mismatch".into()));
    }
    if grid.fingerprint() != key.grid_hash {
        return Err(Error::Cache("grid does not match the key".into()));
    }
    let name_len = r.len()?;
    let name = String::from_utf8(r.take(name_len)?.to_vec()).map_err(|e| Error::Cache(e.to_string()))?;
    let contour = ContourSpec {
        family: ContourFamily::parse(&name)?,
        vertex: r.f64()?,
        radius: r.f64()?,
        b_max: r.f64()?,
        n_nodes: r.u64()? as usize,
    };
    let rows = r.len()?;
    let mut heat_rows = Vec::with_capacity(rows);
    for _ in 0..rows {
        let first = r.u64()? as usize;
        heat_rows.push((first, r.reals()?));
    }
    let nk = r.len()?;
    let mut nodes = Vec::with_capacity(nk);
    for _ in 0..nk {
        nodes.push(ContourNode {
            lambda: r.c64()?,
            weight: r.c64()?,
        });
    }
    let shared = TimeKernel {
        t: key.t,
        nu: key.nu,
        beta: key.beta,
        grid,
        contour,
        requested: key.contour_hash,
        heat_rows,
        nodes,
        mu: r.complexes()?,
        exp_z: r.complexes()?,
        moments: r.complexes()?,
    };
    let table = KernelTable {
        shared: Arc::new(shared),
        alpha: key.alpha,
        heat_factor: r.f64()?,
        moments_a: r.reals()?,
        p: r.complexes()?,
        q: r.complexes()?,
    };
    if r.pos != buf.len() {
        return Err(Error::Cache("trailing bytes in kernel file".into()));
    }
    Ok(table)
}

/// Writes `table` into `dir` and returns the file path.
pub fn store_table(dir: &Path, table: &KernelTable) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(TableKey::of(table).file_name());
    let mut f = fs::File::create(&path)?;
    f.write_all(&encode(table))?;
    Ok(path)
}

/// Loads the table for `key`, or `None` when no file exists.
pub fn load_table(dir: &Path, key: &TableKey, grid: Arc<ZGrid>) -> Result<Option<KernelTable>> {
    let path = dir.join(key.file_name());
    let mut f = match fs::File::open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut buf = Vec::new();
    f.read_to_end(&mut buf)?;
    decode(&buf, key, grid).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::stokes_green::build_kernel_table;

    #[test]
    fn reload_is_bit_exact() {
        let grid = Arc::new(GridSpec::default().build(1e-2).unwrap());
        let spec = ContourSpec::production();
        let table = build_kernel_table(0.25, 1e-2, 0.5, 2, grid.clone(), &spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        store_table(dir.path(), &table).unwrap();
        let key = TableKey::new(0.25, 1e-2, 0.5, 2, &grid, &spec);
        let back = load_table(dir.path(), &key, grid.clone()).unwrap().unwrap();
        assert_eq!(encode(&table), encode(&back));
        let v: Vec<Complex64> = grid.nodes().iter().map(|z| Complex64::new((-z).exp(), 0.0)).collect();
        let (a, b) = (table.apply(&v), back.apply(&v));
        assert!(a.iter().zip(&b).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
        let other = TableKey { alpha: 3, ..key };
        assert!(load_table(dir.path(), &other, grid).unwrap().is_none());
    }

    #[test]
    fn corrupt_version_is_rejected() {
        let grid = Arc::new(GridSpec::default().build(1e-2).unwrap());
        let spec = ContourSpec::production();
        let table = build_kernel_table(0.25, 1e-2, 1.0, 0, grid.clone(), &spec).unwrap();
        let mut buf = encode(&table);
        buf[8] ^= 0xff;
        let key = TableKey::of(&table);
        assert!(matches!(decode(&buf, &key, grid), Err(Error::Cache(_))));
    }
}
