//! Self-describing binary container for benchmark instances, plus a
//! plain-text provenance manifest written alongside.
//!
//! Layout (all integers little-endian):
//!   magic "MMXB" | version u32 | family u8 (1 qvm, 2 trr, 3 pc)
//!   | has_constraint u8 | family payload | [constraint payload]
//! Vectors are length-prefixed (u64 count, f64 entries); sparse matrices are
//! rows/cols/nnz, row_ptr, col_idx, values.

use super::{Instance, PcInstance, QvmInstance, TrrInstance};
use crate::error::{Error, Result};
use crate::linalg::Csr;
use crate::problem::ProblemConstants;
use crate::qp_aipp::LinearConstraint;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"MMXB";
const VERSION: u32 = 1;

/// Dense equality-constraint data A x = b, stored with the instance.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseConstraint {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl DenseConstraint {
    pub fn to_linear(&self) -> Result<LinearConstraint> {
        LinearConstraint::from_dense(self.a.clone(), self.b.clone())
    }
}

/// An instance as stored on disk: the problem data plus an optional linear
/// constraint block.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredInstance {
    pub instance: Instance,
    pub constraint: Option<DenseConstraint>,
}

pub fn write_instance(path: &Path, stored: &StoredInstance) -> Result<()> {
    let mut buf = Vec::new();
    buf.write_all(MAGIC)?;
    buf.write_u32::<LittleEndian>(VERSION)?;
    let tag = match stored.instance {
        Instance::Qvm(_) => 1u8,
        Instance::Trr(_) => 2,
        Instance::Pc(_) => 3,
    };
    buf.write_u8(tag)?;
    buf.write_u8(stored.constraint.is_some() as u8)?;
    match &stored.instance {
        Instance::Qvm(q) => write_qvm(&mut buf, q)?,
        Instance::Trr(t) => write_trr(&mut buf, t)?,
        Instance::Pc(p) => write_pc(&mut buf, p)?,
    }
    if let Some(c) = &stored.constraint {
        buf.write_u64::<LittleEndian>(c.a.len() as u64)?;
        buf.write_u64::<LittleEndian>(c.a[0].len() as u64)?;
        for row in &c.a {
            for &v in row {
                buf.write_f64::<LittleEndian>(v)?;
            }
        }
        for &v in &c.b {
            buf.write_f64::<LittleEndian>(v)?;
        }
    }
    std::fs::write(path, &buf)?;
    std::fs::write(manifest_path(path), manifest_text(stored))?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<StoredInstance> {
    let data = std::fs::read(path)?;
    let mut r = &data[..];
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let tag = r.read_u8()?;
    let has_constraint = r.read_u8()? != 0;
    let instance = match tag {
        1 => Instance::Qvm(read_qvm(&mut r)?),
        2 => Instance::Trr(read_trr(&mut r)?),
        3 => Instance::Pc(read_pc(&mut r)?),
        other => return Err(Error::Format(format!("unknown family tag {other}"))),
    };
    let constraint = if has_constraint {
        let rows = r.read_u64::<LittleEndian>()? as usize;
        let cols = r.read_u64::<LittleEndian>()? as usize;
        let mut a = Vec::with_capacity(rows);
        for _ in 0..rows {
            let mut row = Vec::with_capacity(cols);
            for _ in 0..cols {
                row.push(r.read_f64::<LittleEndian>()?);
            }
            a.push(row);
        }
        let mut b = Vec::with_capacity(rows);
        for _ in 0..rows {
            b.push(r.read_f64::<LittleEndian>()?);
        }
        Some(DenseConstraint { a, b })
    } else {
        None
    };
    Ok(StoredInstance {
        instance,
        constraint,
    })
}

pub fn manifest_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".manifest");
    p.into()
}

fn manifest_text(stored: &StoredInstance) -> String {
    let inst = &stored.instance;
    let c = inst.constants();
    let mut out = String::new();
    out.push_str(&format!("family: {}\n", inst.family_tag()));
    out.push_str(&format!("dims: {}\n", inst.dims_label()));
    match inst {
        Instance::Qvm(q) => {
            out.push_str(&format!("seed: {}\n", q.seed));
            out.push_str(&format!("density: {}\n", q.density));
            out.push_str(&format!("M_target: {}\n", q.big_m_target));
            out.push_str(&format!("m_target: {}\n", q.m_target));
            out.push_str(&format!("norm_P: {}\n", q.norm_p));
        }
        Instance::Trr(t) => {
            out.push_str(&format!("alpha: {}\n", t.alpha));
        }
        Instance::Pc(p) => {
            out.push_str(&format!("seed: {}\n", p.seed));
            out.push_str(&format!("sigma: {}\n", p.sigma));
            out.push_str(&format!("R: {}\n", p.r));
        }
    }
    out.push_str(&format!("m: {}\n", c.m));
    out.push_str(&format!("L_x: {}\n", c.l_x));
    out.push_str(&format!("L_y: {}\n", c.l_y));
    out.push_str(&format!("D_y: {}\n", c.d_y));
    if let Some(cons) = &stored.constraint {
        out.push_str(&format!("constraint_rows: {}\n", cons.a.len()));
    }
    out
}

fn write_vec(w: &mut Vec<u8>, v: &[f64]) -> Result<()> {
    w.write_u64::<LittleEndian>(v.len() as u64)?;
    for &x in v {
        w.write_f64::<LittleEndian>(x)?;
    }
    Ok(())
}

fn read_vec(r: &mut &[u8]) -> Result<Vec<f64>> {
    let len = r.read_u64::<LittleEndian>()? as usize;
    let mut v = Vec::with_capacity(len);
    for _ in 0..len {
        v.push(r.read_f64::<LittleEndian>()?);
    }
    Ok(v)
}

fn write_csr(w: &mut Vec<u8>, m: &Csr) -> Result<()> {
    w.write_u64::<LittleEndian>(m.rows as u64)?;
    w.write_u64::<LittleEndian>(m.cols as u64)?;
    w.write_u64::<LittleEndian>(m.vals.len() as u64)?;
    for &p in &m.row_ptr {
        w.write_u64::<LittleEndian>(p as u64)?;
    }
    for &c in &m.col_idx {
        w.write_u64::<LittleEndian>(c as u64)?;
    }
    for &v in &m.vals {
        w.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

fn read_csr(r: &mut &[u8]) -> Result<Csr> {
    let rows = r.read_u64::<LittleEndian>()? as usize;
    let cols = r.read_u64::<LittleEndian>()? as usize;
    let nnz = r.read_u64::<LittleEndian>()? as usize;
    let mut row_ptr = Vec::with_capacity(rows + 1);
    for _ in 0..=rows {
        row_ptr.push(r.read_u64::<LittleEndian>()? as usize);
    }
    let mut col_idx = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        col_idx.push(r.read_u64::<LittleEndian>()? as usize);
    }
    let mut vals = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        vals.push(r.read_f64::<LittleEndian>()?);
    }
    Ok(Csr {
        rows,
        cols,
        row_ptr,
        col_idx,
        vals,
    })
}

fn write_constants(w: &mut Vec<u8>, c: &ProblemConstants) -> Result<()> {
    for v in [c.m, c.l_x, c.l_y, c.d_y] {
        w.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

fn read_constants(r: &mut &[u8]) -> Result<ProblemConstants> {
    Ok(ProblemConstants {
        m: r.read_f64::<LittleEndian>()?,
        l_x: r.read_f64::<LittleEndian>()?,
        l_y: r.read_f64::<LittleEndian>()?,
        d_y: r.read_f64::<LittleEndian>()?,
    })
}

fn write_qvm(w: &mut Vec<u8>, q: &QvmInstance) -> Result<()> {
    for v in [q.n as u64, q.l as u64, q.k as u64, q.seed] {
        w.write_u64::<LittleEndian>(v)?;
    }
    for v in [q.density, q.big_m_target, q.m_target, q.norm_p] {
        w.write_f64::<LittleEndian>(v)?;
    }
    write_vec(w, &q.alpha)?;
    write_vec(w, &q.beta)?;
    for i in 0..q.k {
        write_csr(w, &q.c_mats[i])?;
        write_csr(w, &q.b_mats[i])?;
        write_vec(w, &q.d_vecs[i])?;
        write_vec(w, &q.d_diags[i])?;
    }
    write_constants(w, &q.constants)
}

fn read_qvm(r: &mut &[u8]) -> Result<QvmInstance> {
    let n = r.read_u64::<LittleEndian>()? as usize;
    let l = r.read_u64::<LittleEndian>()? as usize;
    let k = r.read_u64::<LittleEndian>()? as usize;
    let seed = r.read_u64::<LittleEndian>()?;
    let density = r.read_f64::<LittleEndian>()?;
    let big_m_target = r.read_f64::<LittleEndian>()?;
    let m_target = r.read_f64::<LittleEndian>()?;
    let norm_p = r.read_f64::<LittleEndian>()?;
    let alpha = read_vec(r)?;
    let beta = read_vec(r)?;
    let mut c_mats = Vec::with_capacity(k);
    let mut b_mats = Vec::with_capacity(k);
    let mut d_vecs = Vec::with_capacity(k);
    let mut d_diags = Vec::with_capacity(k);
    for _ in 0..k {
        c_mats.push(read_csr(r)?);
        b_mats.push(read_csr(r)?);
        d_vecs.push(read_vec(r)?);
        d_diags.push(read_vec(r)?);
    }
    let constants = read_constants(r)?;
    Ok(QvmInstance {
        n,
        l,
        k,
        alpha,
        beta,
        c_mats,
        b_mats,
        d_diags,
        d_vecs,
        big_m_target,
        m_target,
        density,
        seed,
        norm_p,
        constants,
    })
}

fn write_trr(w: &mut Vec<u8>, t: &TrrInstance) -> Result<()> {
    w.write_u64::<LittleEndian>(t.k as u64)?;
    w.write_u64::<LittleEndian>(t.n_points() as u64)?;
    w.write_f64::<LittleEndian>(t.alpha)?;
    write_vec(w, &t.labels)?;
    for row in &t.features {
        w.write_u64::<LittleEndian>(row.len() as u64)?;
        for &(i, v) in row {
            w.write_u64::<LittleEndian>(i as u64)?;
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    write_constants(w, &t.constants)
}

fn read_trr(r: &mut &[u8]) -> Result<TrrInstance> {
    let k = r.read_u64::<LittleEndian>()? as usize;
    let n = r.read_u64::<LittleEndian>()? as usize;
    let alpha = r.read_f64::<LittleEndian>()?;
    let labels = read_vec(r)?;
    let mut features = Vec::with_capacity(n);
    for _ in 0..n {
        let nnz = r.read_u64::<LittleEndian>()? as usize;
        let mut row = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let i = r.read_u64::<LittleEndian>()? as usize;
            let v = r.read_f64::<LittleEndian>()?;
            row.push((i, v));
        }
        features.push(row);
    }
    let constants = read_constants(r)?;
    Ok(TrrInstance {
        features,
        labels,
        k,
        alpha,
        constants,
    })
}

fn write_pc(w: &mut Vec<u8>, p: &PcInstance) -> Result<()> {
    for v in [p.n_dim as u64, p.k_dim as u64, p.seed] {
        w.write_u64::<LittleEndian>(v)?;
    }
    w.write_f64::<LittleEndian>(p.sigma)?;
    w.write_f64::<LittleEndian>(p.r)?;
    write_vec(w, &p.a)?;
    write_vec(w, &p.b)?;
    write_constants(w, &p.constants)
}

fn read_pc(r: &mut &[u8]) -> Result<PcInstance> {
    let n_dim = r.read_u64::<LittleEndian>()? as usize;
    let k_dim = r.read_u64::<LittleEndian>()? as usize;
    let seed = r.read_u64::<LittleEndian>()?;
    let sigma = r.read_f64::<LittleEndian>()?;
    let rr = r.read_f64::<LittleEndian>()?;
    let a = read_vec(r)?;
    let b = read_vec(r)?;
    let constants = read_constants(r)?;
    Ok(PcInstance {
        n_dim,
        k_dim,
        a,
        b,
        sigma,
        r: rr,
        seed,
        constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{pc::pc_generate, qvm::qvm_generate, trr::trr_generate_synthetic};

    #[test]
    fn roundtrip_all_families() {
        let dir = tempfile::tempdir().unwrap();
        let cases = vec![
            StoredInstance {
                instance: Instance::Qvm(qvm_generate(6, 2, 2, 3.0, 1.0, 0.4, 1).unwrap()),
                constraint: Some(DenseConstraint {
                    a: vec![vec![1.0; 6], vec![0.5; 6]],
                    b: vec![1.0, 0.5],
                }),
            },
            StoredInstance {
                instance: Instance::Trr(trr_generate_synthetic(10, 4, 0.5, 2).unwrap()),
                constraint: None,
            },
            StoredInstance {
                instance: Instance::Pc(pc_generate(3, 2, 3).unwrap()),
                constraint: None,
            },
        ];
        for (i, stored) in cases.iter().enumerate() {
            let path = dir.path().join(format!("case{i}.mmx"));
            write_instance(&path, stored).unwrap();
            let loaded = read_instance(&path).unwrap();
            assert_eq!(*stored, loaded);
            assert!(manifest_path(&path).exists());
            let manifest = std::fs::read_to_string(manifest_path(&path)).unwrap();
            assert!(manifest.contains("family:"));
        }
    }

    #[test]
    fn identical_seeds_produce_identical_files() {
        let dir = tempfile::tempdir().unwrap();
        let mk = || StoredInstance {
            instance: Instance::Pc(pc_generate(3, 3, 77).unwrap()),
            constraint: None,
        };
        let p1 = dir.path().join("a.mmx");
        let p2 = dir.path().join("b.mmx");
        write_instance(&p1, &mk()).unwrap();
        write_instance(&p2, &mk()).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.mmx");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(read_instance(&path), Err(Error::Format(_))));
    }
}
