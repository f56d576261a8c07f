//! Binary batch files and pooled CSV export.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic      4 bytes  "WDMB"
//! version    u32
//! n          u64
//! M          u64
//! seed       u64
//! descriptor u32 length + UTF-8 bytes
//! data       M * n f64, sample-major, each sample ascending
//! ```

use std::io::{Read, Write};

use super::{Spectrum, SpectrumBatch};
use crate::ensembles::EnsembleSpec;
use crate::error::{Error, Result};

pub const BATCH_MAGIC: &[u8; 4] = b"WDMB";
pub const BATCH_FORMAT_VERSION: u32 = 1;

/// Longest descriptor accepted when reading; guards against garbage lengths.
const MAX_DESCRIPTOR_LEN: u32 = 1 << 16;

pub fn write_batch<W: Write>(batch: &SpectrumBatch, mut out: W) -> Result<()> {
    let descriptor = batch.spec.descriptor();
    out.write_all(BATCH_MAGIC)?;
    out.write_all(&BATCH_FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(batch.spec.n as u64).to_le_bytes())?;
    out.write_all(&(batch.spectra.len() as u64).to_le_bytes())?;
    out.write_all(&batch.spec.seed.to_le_bytes())?;
    out.write_all(&(descriptor.len() as u32).to_le_bytes())?;
    out.write_all(descriptor.as_bytes())?;
    let mut buf = Vec::with_capacity(batch.spec.n * 8);
    for s in &batch.spectra {
        buf.clear();
        for x in &s.eigenvalues {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

fn read_exact_field<R: Read>(input: &mut R, buf: &mut [u8], field: &'static str) -> Result<()> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format {
            field,
            detail: "file ends before this field".into(),
        },
        _ => Error::Io(e),
    })
}

fn read_u32<R: Read>(input: &mut R, field: &'static str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_field(input, &mut b, field)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(input: &mut R, field: &'static str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact_field(input, &mut b, field)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_batch<R: Read>(mut input: R) -> Result<SpectrumBatch> {
    let mut magic = [0u8; 4];
    read_exact_field(&mut input, &mut magic, "magic")?;
    if &magic != BATCH_MAGIC {
        return Err(Error::Format {
            field: "magic",
            detail: format!("expected \"WDMB\", found {magic:?}"),
        });
    }
    let version = read_u32(&mut input, "version")?;
    if version != BATCH_FORMAT_VERSION {
        return Err(Error::Format {
            field: "version",
            detail: format!("unsupported version {version}"),
        });
    }
    let n = read_u64(&mut input, "n")?;
    if n == 0 || n > u32::MAX as u64 {
        return Err(Error::Format {
            field: "n",
            detail: format!("matrix size {n} out of range"),
        });
    }
    let m = read_u64(&mut input, "M")?;
    if m == 0 || m.checked_mul(n).is_none_or(|t| t > (1u64 << 40)) {
        return Err(Error::Format {
            field: "M",
            detail: format!("sample count {m} out of range"),
        });
    }
    let seed = read_u64(&mut input, "seed")?;
    let len = read_u32(&mut input, "descriptor")?;
    if len > MAX_DESCRIPTOR_LEN {
        return Err(Error::Format {
            field: "descriptor",
            detail: format!("length {len} exceeds {MAX_DESCRIPTOR_LEN}"),
        });
    }
    let mut raw = vec![0u8; len as usize];
    read_exact_field(&mut input, &mut raw, "descriptor")?;
    let descriptor = String::from_utf8(raw).map_err(|_| Error::Format {
        field: "descriptor",
        detail: "not valid UTF-8".into(),
    })?;
    let spec = EnsembleSpec::from_descriptor(&descriptor, n as usize, seed).map_err(|e| {
        Error::Format {
            field: "descriptor",
            detail: e.to_string(),
        }
    })?;

    let n = n as usize;
    let mut spectra = Vec::with_capacity(m as usize);
    let mut buf = vec![0u8; n * 8];
    for i in 0..m as usize {
        read_exact_field(&mut input, &mut buf, "eigenvalues")?;
        let ev: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        if ev.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format {
                field: "eigenvalues",
                detail: format!("sample {i} contains a non-finite value"),
            });
        }
        if !ev.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::Format {
                field: "eigenvalues",
                detail: format!("sample {i} is not sorted ascending"),
            });
        }
        spectra.push(Spectrum { eigenvalues: ev });
    }
    let mut extra = [0u8; 1];
    if input.read(&mut extra)? != 0 {
        return Err(Error::Format {
            field: "eigenvalues",
            detail: "trailing bytes after the last sample".into(),
        });
    }
    Ok(SpectrumBatch { spec, spectra })
}

/// One eigenvalue per line under an `eigenvalue` header, 17 significant
/// digits.
pub fn write_pooled_csv<W: Write>(batch: &SpectrumBatch, mut out: W) -> Result<()> {
    writeln!(out, "eigenvalue")?;
    for x in batch.pooled() {
        writeln!(out, "{x:.16e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::AtomDistribution;
    use crate::spectra::batch_sample;

    fn small_batch() -> SpectrumBatch {
        let atom = "gaussdiv:base=bernoulli,t=0.01".parse::<AtomDistribution>().unwrap();
        let spec = EnsembleSpec::new(7, atom, 99).unwrap();
        batch_sample(&spec, 4).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let b = small_batch();
        let mut bytes = Vec::new();
        write_batch(&b, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 8 * 3 + 4 + b.spec.descriptor().len() + 4 * 7 * 8);
        let back = read_batch(&bytes[..]).unwrap();
        assert_eq!(back, b);
        let mut again = Vec::new();
        write_batch(&back, &mut again).unwrap();
        assert_eq!(again, bytes);
    }

    fn field_of(bytes: &[u8]) -> &'static str {
        match read_batch(bytes) {
            Err(Error::Format { field, .. }) => field,
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_files_name_the_field() {
        let mut bytes = Vec::new();
        write_batch(&small_batch(), &mut bytes).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(field_of(&bad), "magic");

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert_eq!(field_of(&bad), "version");

        let mut bad = bytes.clone();
        bad[8..16].copy_from_slice(&0u64.to_le_bytes());
        assert_eq!(field_of(&bad), "n");

        let mut bad = bytes.clone();
        bad[36] = b'?';
        assert_eq!(field_of(&bad), "descriptor");

        assert_eq!(field_of(&bytes[..bytes.len() - 3]), "eigenvalues");

        let mut bad = bytes.clone();
        bad.push(0);
        assert_eq!(field_of(&bad), "eigenvalues");

        assert_eq!(field_of(&bytes[..10]), "n");
    }

    #[test]
    fn csv_has_header_and_all_values() {
        let b = small_batch();
        let mut out = Vec::new();
        write_pooled_csv(&b, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("eigenvalue"));
        let vals: Vec<f64> = lines.map(|l| l.parse().unwrap()).collect();
        assert_eq!(vals.len(), 28);
        assert_eq!(vals, b.pooled());
    }
}
