//! Binary container for traces, fields and movies, plus CSV export.
//!
//! Layout (little endian):
//!
//! ```text
//! magic "WCIP" | version u16 | payload u8 | tag_len u8 | tag bytes
//! ndim u8 | dims u64 × ndim | dt f64 | hx f64 | hy f64
//! has_eta u8 | eta f64 × 2 | has_alpha u8 | alpha f64
//! payload (row major) | sha256 of every preceding byte
//! ```
//!
//! Writes go to a sibling temp file that is renamed into place, so readers
//! never observe a partial file.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::domain::{BoundaryPartition, GridSpec, RField};
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use crate::wave::{BoundaryTrace, Quantity, WaveMovie};

pub const MAGIC: &[u8; 4] = b"WCIP";
pub const VERSION: u16 = 1;
const CHECKSUM_LEN: usize = 32;

/// Element type of the payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Payload {
    /// Two f64 per entry.
    #[default]
    Complex128,
    /// Two f32 per entry.
    Complex64,
    Real64,
}

impl Payload {
    fn code(self) -> u8 {
        match self {
            Payload::Complex128 => 1,
            Payload::Complex64 => 2,
            Payload::Real64 => 3,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            1 => Ok(Payload::Complex128),
            2 => Ok(Payload::Complex64),
            3 => Ok(Payload::Real64),
            _ => Err(Error::Format(format!("unknown payload code {c}"))),
        }
    }

    fn entry_bytes(self) -> usize {
        match self {
            Payload::Complex128 => 16,
            Payload::Complex64 => 8,
            Payload::Real64 => 8,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "complex128" => Some(Payload::Complex128),
            "complex64" => Some(Payload::Complex64),
            "real64" => Some(Payload::Real64),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Header {
    pub payload: Payload,
    pub quantity: Quantity,
    pub dims: Vec<usize>,
    pub dt: f64,
    pub hx: f64,
    pub hy: f64,
    pub eta: Option<[f64; 2]>,
    pub alpha: Option<f64>,
}

/// Decoded container. Real payloads are stored with zero imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub header: Header,
    pub data: Vec<Complex64>,
}

impl Container {
    pub fn len(&self) -> usize {
        self.header.dims.iter().product()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn encode(c: &Container) -> Result<Vec<u8>> {
    let h = &c.header;
    if c.data.len() != c.len() {
        return Err(Error::Format(format!(
            "payload has {} entries, dims {:?} need {}",
            c.data.len(),
            h.dims,
            c.len()
        )));
    }
    let tag = h.quantity.tag().as_bytes();
    let mut out = Vec::with_capacity(128 + c.data.len() * h.payload.entry_bytes());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(h.payload.code());
    out.push(tag.len() as u8);
    out.extend_from_slice(tag);
    out.push(h.dims.len() as u8);
    for &d in &h.dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in [h.dt, h.hx, h.hy] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let [ex, ey] = h.eta.unwrap_or([0.0, 0.0]);
    out.push(h.eta.is_some() as u8);
    out.extend_from_slice(&ex.to_le_bytes());
    out.extend_from_slice(&ey.to_le_bytes());
    out.push(h.alpha.is_some() as u8);
    out.extend_from_slice(&h.alpha.unwrap_or(0.0).to_le_bytes());
    for v in &c.data {
        match h.payload {
            Payload::Complex128 => {
                out.extend_from_slice(&v.re.to_le_bytes());
                out.extend_from_slice(&v.im.to_le_bytes());
            }
            Payload::Complex64 => {
                out.extend_from_slice(&(v.re as f32).to_le_bytes());
                out.extend_from_slice(&(v.im as f32).to_le_bytes());
            }
            Payload::Real64 => out.extend_from_slice(&v.re.to_le_bytes()),
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("truncated container".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Container> {
    if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    if bytes.len() < 4 + CHECKSUM_LEN {
        return Err(Error::Format("truncated container".into()));
    }
    let (body, sum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != sum {
        return Err(Error::Format("checksum mismatch".into()));
    }
    let mut c = Cursor { buf: body, pos: 4 };
    let version = c.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let payload = Payload::from_code(c.u8()?)?;
    let tag_len = c.u8()? as usize;
    let tag = std::str::from_utf8(c.take(tag_len)?).map_err(|_| Error::Format("tag is not UTF-8".into()))?;
    let quantity = Quantity::from_tag(tag).ok_or_else(|| Error::Format(format!("unknown quantity tag {tag:?}")))?;
    let ndim = c.u8()? as usize;
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        dims.push(usize::try_from(c.u64()?).map_err(|_| Error::Format("dimension overflows".into()))?);
    }
    let (dt, hx, hy) = (c.f64()?, c.f64()?, c.f64()?);
    let has_eta = c.u8()? != 0;
    let eta = [c.f64()?, c.f64()?];
    let has_alpha = c.u8()? != 0;
    let alpha = c.f64()?;
    let n: usize = dims.iter().product();
    if body.len() - c.pos != n * payload.entry_bytes() {
        return Err(Error::Format(format!(
            "payload is {} bytes, dims {:?} need {}",
            body.len() - c.pos,
            dims,
            n * payload.entry_bytes()
        )));
    }
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        data.push(match payload {
            Payload::Complex128 => Complex64::new(c.f64()?, c.f64()?),
            Payload::Complex64 => Complex64::new(c.f32()? as f64, c.f32()? as f64),
            Payload::Real64 => Complex64::new(c.f64()?, 0.0),
        });
    }
    Ok(Container {
        header: Header {
            payload,
            quantity,
            dims,
            dt,
            hx,
            hy,
            eta: has_eta.then_some(eta),
            alpha: has_alpha.then_some(alpha),
        },
        data,
    })
}

static TMP_SEQ: AtomicU64 = AtomicU64::new(0);

/// Writes `bytes` to `path` through a temp file and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let seq = TMP_SEQ.fetch_add(1, Ordering::Relaxed);
    let tmp = dir.join(format!(".{name}.{}.{seq}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_container(path: &Path, c: &Container) -> Result<()> {
    write_atomic(path, &encode(c)?)
}

pub fn read_container(path: &Path) -> Result<Container> {
    decode(&fs::read(path)?)
}

fn to64<T: Real>(v: Cplx<T>) -> Complex64 {
    Complex64::new(v.re.as_f64(), v.im.as_f64())
}

fn from64<T: Real>(v: Complex64) -> Cplx<T> {
    Cplx::new(T::lit(v.re), T::lit(v.im))
}

pub fn trace_container<T: Real>(trace: &BoundaryTrace<T>, grid: &GridSpec<T>, payload: Payload) -> Container {
    Container {
        header: Header {
            payload,
            quantity: trace.quantity,
            dims: vec![trace.steps(), trace.samples()],
            dt: trace.dt.as_f64(),
            hx: grid.hx().as_f64(),
            hy: grid.hy().as_f64(),
            eta: trace.eta.map(|[a, b]| [a.as_f64(), b.as_f64()]),
            alpha: trace.alpha.map(|a| a.as_f64()),
        },
        data: trace.values.iter().map(|&v| to64(v)).collect(),
    }
}

pub fn container_trace<T: Real>(c: &Container) -> Result<BoundaryTrace<T>> {
    let h = &c.header;
    if h.dims.len() != 2 {
        return Err(Error::Format(format!("trace needs 2 dimensions, found {:?}", h.dims)));
    }
    let values = Array2::from_shape_vec((h.dims[0], h.dims[1]), c.data.iter().map(|&v| from64(v)).collect())
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(BoundaryTrace {
        values,
        quantity: h.quantity,
        dt: T::lit(h.dt),
        eta: h.eta.map(|[a, b]| [T::lit(a), T::lit(b)]),
        alpha: h.alpha.map(T::lit),
    })
}

pub fn field_container<T: Real>(field: &RField<T>, grid: &GridSpec<T>) -> Container {
    Container {
        header: Header {
            payload: Payload::Real64,
            quantity: Quantity::Field,
            dims: vec![field.dim().0, field.dim().1],
            dt: 0.0,
            hx: grid.hx().as_f64(),
            hy: grid.hy().as_f64(),
            eta: None,
            alpha: None,
        },
        data: field.iter().map(|&v| Complex64::new(v.as_f64(), 0.0)).collect(),
    }
}

pub fn container_field<T: Real>(c: &Container) -> Result<RField<T>> {
    let h = &c.header;
    if h.dims.len() != 2 {
        return Err(Error::Format(format!("field needs 2 dimensions, found {:?}", h.dims)));
    }
    RField::from_shape_vec((h.dims[0], h.dims[1]), c.data.iter().map(|v| T::lit(v.re)).collect())
        .map_err(|e| Error::Format(e.to_string()))
}

pub fn movie_container<T: Real>(movie: &WaveMovie<T>, payload: Payload) -> Container {
    let (a, b, d) = movie.values.dim();
    Container {
        header: Header {
            payload,
            quantity: Quantity::Movie,
            dims: vec![a, b, d],
            dt: movie.grid.dt().as_f64(),
            hx: movie.grid.hx().as_f64(),
            hy: movie.grid.hy().as_f64(),
            eta: None,
            alpha: None,
        },
        data: movie.values.iter().map(|&v| to64(v)).collect(),
    }
}

pub fn container_movie_values<T: Real>(c: &Container) -> Result<Array3<Cplx<T>>> {
    let h = &c.header;
    if h.dims.len() != 3 {
        return Err(Error::Format(format!("movie needs 3 dimensions, found {:?}", h.dims)));
    }
    Array3::from_shape_vec((h.dims[0], h.dims[1], h.dims[2]), c.data.iter().map(|&v| from64(v)).collect())
        .map_err(|e| Error::Format(e.to_string()))
}

/// One row per (step, sample): `step,t,side,x,y,re,im`.
pub fn trace_csv<T: Real>(trace: &BoundaryTrace<T>, partition: &BoundaryPartition<T>) -> Result<String> {
    if trace.samples() != partition.len() {
        return Err(Error::TraceMismatch(format!(
            "{} columns over {} samples",
            trace.samples(),
            partition.len()
        )));
    }
    let mut s = String::from("step,t,side,x,y,re,im\n");
    for (n, row) in trace.values.outer_iter().enumerate() {
        let t = trace.dt.as_f64() * n as f64;
        for (v, g) in row.iter().zip(partition.samples()) {
            writeln!(
                s,
                "{n},{t},{},{},{},{:e},{:e}",
                g.side.name(),
                g.x.as_f64(),
                g.y.as_f64(),
                v.re.as_f64(),
                v.im.as_f64()
            )
            .expect("writing to a String");
        }
    }
    Ok(s)
}
