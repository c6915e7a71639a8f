//! Little-endian binary formats for reduced models and training snapshots.
//!
//! Both start with a 7-byte magic carrying the format version, followed by
//! the geometry tag and the dimensions; arrays are `f64` in column-major
//! order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::mesh::Geometry;
use crate::rom::model::{ModelKind, OfflineTimings, ReducedModel};
use crate::rom::snapshots::TrainingSnapshot;
use crate::scalar::Real;

pub const MODEL_MAGIC: &[u8; 7] = b"RTEROM1";
pub const SNAPSHOT_MAGIC: &[u8; 7] = b"RTESNP1";

struct Out<W: Write>(W);

impl<W: Write> Out<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.0.write_all(&[v])?)
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u64(&mut self, v: usize) -> Result<()> {
        Ok(self.0.write_all(&(v as u64).to_le_bytes())?)
    }
    fn f64s<T: Real>(&mut self, v: &[T]) -> Result<()> {
        for x in v {
            self.0.write_all(&x.to_f64_lossy().to_le_bytes())?;
        }
        Ok(())
    }
}

struct In<R: Read>(R);

impl<R: Read> In<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated file: {e}")))?;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.bytes()?);
        usize::try_from(v).map_err(|_| Error::Format("dimension overflow".into()))
    }
    fn f64s<T: Real>(&mut self, n: usize) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(T::lit(f64::from_le_bytes(self.bytes()?)));
        }
        Ok(out)
    }
    fn magic(&mut self, expected: &[u8; 7]) -> Result<()> {
        let m = self.bytes::<7>()?;
        if &m != expected {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&m),
                String::from_utf8_lossy(expected)
            )));
        }
        Ok(())
    }
    fn geometry(&mut self) -> Result<Geometry> {
        let t = self.u8()?;
        Geometry::from_tag(t).ok_or_else(|| Error::Format(format!("unknown geometry tag {t}")))
    }
}

/// Writes the online part of a model (the basis is not stored).
pub fn write_model<T: Real, W: Write>(model: &ReducedModel<T>, w: W) -> Result<()> {
    let mut o = Out(w);
    o.0.write_all(MODEL_MAGIC)?;
    o.u8(model.geometry.tag())?;
    o.u64(model.n_dir)?;
    o.u64(model.n_dof)?;
    o.u64(model.rank)?;
    o.u64(model.operators.len())?;
    o.u32(model.kind.tag())?;
    o.u64(model.inflow.len())?;
    o.u64(model.singular_values.len())?;
    o.f64s(&[model.eps_pod, model.discarded_fraction])?;
    o.f64s(&[T::lit(model.timings.basis_seconds), T::lit(model.timings.operator_seconds)])?;
    o.f64s(&model.u_rho)?;
    o.f64s(&model.u_iso)?;
    for a in &model.operators {
        o.f64s(&a.transpose().data().to_vec())?;
    }
    for p in &model.inflow {
        o.f64s(p)?;
    }
    o.f64s(&model.singular_values)?;
    o.0.flush()?;
    Ok(())
}

pub fn read_model<T: Real, R: Read>(r: R) -> Result<ReducedModel<T>> {
    let mut i = In(r);
    i.magic(MODEL_MAGIC)?;
    let geometry = i.geometry()?;
    let n_dir = i.u64()?;
    let n_dof = i.u64()?;
    let rank = i.u64()?;
    let k_affine = i.u64()?;
    let kind = ModelKind::from_tag(i.u32()?);
    let n_inflow = i.u64()?;
    let n_sv = i.u64()?;
    let meta: Vec<T> = i.f64s(4)?;
    let u_rho = i.f64s(n_dof * rank)?;
    let u_iso = i.f64s(n_dof * rank)?;
    let mut operators = Vec::with_capacity(k_affine);
    for _ in 0..k_affine {
        let cm: Vec<T> = i.f64s(rank * rank)?;
        operators.push(DenseMatrix::from_fn(rank, rank, |a, b| cm[b * rank + a]));
    }
    let mut inflow = Vec::with_capacity(n_inflow);
    for _ in 0..n_inflow {
        inflow.push(i.f64s(rank)?);
    }
    let singular_values = i.f64s(n_sv)?;
    Ok(ReducedModel {
        kind,
        geometry,
        n_dir,
        n_dof,
        rank,
        eps_pod: meta[0],
        singular_values,
        discarded_fraction: meta[1],
        operators,
        u_rho,
        u_iso,
        inflow,
        basis: None,
        timings: OfflineTimings { basis_seconds: meta[2].to_f64_lossy(), operator_seconds: meta[3].to_f64_lossy() },
    })
}

pub fn save_model<T: Real>(model: &ReducedModel<T>, path: impl AsRef<Path>) -> Result<()> {
    write_model(model, BufWriter::new(File::create(path)?))
}

pub fn load_model<T: Real>(path: impl AsRef<Path>) -> Result<ReducedModel<T>> {
    read_model(BufReader::new(File::open(path)?))
}

pub fn write_snapshot<T: Real, W: Write>(
    snap: &TrainingSnapshot<T>,
    geometry: Geometry,
    n_dir: usize,
    n_dof: usize,
    w: W,
) -> Result<()> {
    if snap.converged.len() != n_dir * n_dof {
        return Err(Error::DimensionMismatch { expected: n_dir * n_dof, got: snap.converged.len() });
    }
    let mut o = Out(w);
    o.0.write_all(SNAPSHOT_MAGIC)?;
    o.u8(geometry.tag())?;
    o.u64(n_dir)?;
    o.u64(n_dof)?;
    o.u64(snap.mu.len())?;
    o.u64(snap.intermediates.len())?;
    o.u64(snap.n_conv)?;
    o.f64s(&snap.mu)?;
    o.f64s(&snap.converged)?;
    for f in &snap.intermediates {
        o.f64s(f)?;
    }
    o.0.flush()?;
    Ok(())
}

pub fn read_snapshot<T: Real, R: Read>(r: R) -> Result<(Geometry, usize, usize, TrainingSnapshot<T>)> {
    let mut i = In(r);
    i.magic(SNAPSHOT_MAGIC)?;
    let geometry = i.geometry()?;
    let n_dir = i.u64()?;
    let n_dof = i.u64()?;
    let n_mu = i.u64()?;
    let n_int = i.u64()?;
    let n_conv = i.u64()?;
    let mu = i.f64s(n_mu)?;
    let converged = i.f64s(n_dir * n_dof)?;
    let mut intermediates = Vec::with_capacity(n_int);
    for _ in 0..n_int {
        intermediates.push(i.f64s(n_dir * n_dof)?);
    }
    Ok((geometry, n_dir, n_dof, TrainingSnapshot { mu, converged, intermediates, n_conv }))
}

/// Writes each snapshot to `dir/snapshot_{index}.bin`.
#[derive(Debug)]
pub struct SnapshotDirectory {
    dir: std::path::PathBuf,
    geometry: Geometry,
    n_dir: usize,
    n_dof: usize,
    count: usize,
}

impl SnapshotDirectory {
    pub fn create(dir: impl AsRef<Path>, geometry: Geometry, n_dir: usize, n_dof: usize) -> Result<Self> {
        std::fs::create_dir_all(dir.as_ref())?;
        Ok(Self { dir: dir.as_ref().to_path_buf(), geometry, n_dir, n_dof, count: 0 })
    }
    pub fn path(&self, index: usize) -> std::path::PathBuf {
        self.dir.join(format!("snapshot_{index}.bin"))
    }
    pub fn len(&self) -> usize {
        self.count
    }
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

impl<T: Real> crate::rom::snapshots::SnapshotSink<T> for SnapshotDirectory {
    fn accept(&mut self, snapshot: TrainingSnapshot<T>) -> Result<()> {
        let f = BufWriter::new(File::create(self.path(self.count))?);
        write_snapshot(&snapshot, self.geometry, self.n_dir, self.n_dof, f)?;
        self.count += 1;
        Ok(())
    }
}
