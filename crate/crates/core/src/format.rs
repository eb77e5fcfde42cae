//! On-disk formats for spectral fields.
//!
//! JSON: `{"dim": n, "trunc": N, "components": m, "coeffs": [[k, re, im], ...]}`
//! with one entry per (component, mode). Entries are component-major and
//! lexicographic in `k` within a component, so component `c` occupies entries
//! `c * (2N+1)^n .. (c+1) * (2N+1)^n`.
//!
//! Binary (`.tmf`): the magic `TMF1`, then `n`, `m`, `N` as little-endian
//! `u32`, then `(re, im)` pairs of little-endian IEEE-754 `f64` in the same
//! order as the JSON entries.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::Lattice;

pub const MAGIC: &[u8; 4] = b"TMF1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldJson {
    dim: usize,
    trunc: usize,
    components: usize,
    coeffs: Vec<(Vec<i32>, f64, f64)>,
}

pub fn to_json(field: &SpectralField) -> Result<String> {
    let lat = field.lattice();
    let mut coeffs = Vec::with_capacity(field.coeffs().len());
    for c in 0..field.components() {
        for (i, k) in lat.iter() {
            let z = field.coeff(c, i);
            coeffs.push((k.to_vec(), z.re, z.im));
        }
    }
    let doc = FieldJson {
        dim: field.dim(),
        trunc: field.trunc(),
        components: field.components(),
        coeffs,
    };
    Ok(serde_json::to_string(&doc)?)
}

pub fn from_json(text: &str) -> Result<SpectralField> {
    let doc: FieldJson = serde_json::from_str(text)?;
    let lat = Lattice::new(doc.dim, doc.trunc)?;
    if doc.coeffs.len() != doc.components * lat.len() {
        return Err(Error::Format(format!(
            "expected {} coefficient entries, found {}",
            doc.components * lat.len(),
            doc.coeffs.len()
        )));
    }
    let mut values = Vec::with_capacity(doc.coeffs.len());
    for (slot, (k, re, im)) in doc.coeffs.into_iter().enumerate() {
        let expect = lat.mode(slot % lat.len());
        if k.as_slice() != expect {
            return Err(Error::Format(format!(
                "entry {slot} carries mode {k:?}, expected {expect:?}"
            )));
        }
        values.push(Complex64::new(re, im));
    }
    SpectralField::from_coeffs(&lat, doc.components, values)
}

pub fn write_binary<W: Write>(field: &SpectralField, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    for v in [field.dim(), field.components(), field.trunc()] {
        let v = u32::try_from(v).map_err(|_| Error::Format("header value exceeds u32".into()))?;
        w.write_all(&v.to_le_bytes())?;
    }
    for z in field.coeffs() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn to_binary(field: &SpectralField) -> Vec<u8> {
    let mut buf = Vec::with_capacity(16 + 16 * field.coeffs().len());
    write_binary(field, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

pub fn read_binary<R: Read>(mut r: R) -> Result<SpectralField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 4];
    let mut header = [0usize; 3];
    for h in header.iter_mut() {
        r.read_exact(&mut word)?;
        *h = u32::from_le_bytes(word) as usize;
    }
    let [dim, components, trunc] = header;
    let lat = Lattice::new(dim, trunc)?;
    let count = components
        .checked_mul(lat.len())
        .ok_or_else(|| Error::Format("coefficient count overflows".into()))?;
    let mut values = Vec::with_capacity(count);
    let mut pair = [0u8; 16];
    for _ in 0..count {
        r.read_exact(&mut pair)?;
        let re = f64::from_le_bytes(pair[..8].try_into().unwrap());
        let im = f64::from_le_bytes(pair[8..].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after coefficients".into()));
    }
    SpectralField::from_coeffs(&lat, components, values)
}

pub fn from_binary(bytes: &[u8]) -> Result<SpectralField> {
    read_binary(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field_from(values: &[(f64, f64)], dim: usize, trunc: usize, comps: usize) -> SpectralField {
        let lat = Lattice::new(dim, trunc).unwrap();
        let coeffs = (0..comps * lat.len())
            .map(|i| {
                let (a, b) = values[i % values.len()];
                Complex64::new(a, b)
            })
            .collect();
        SpectralField::from_coeffs(&lat, comps, coeffs).unwrap()
    }

    #[test]
    fn binary_header_layout() {
        let f = field_from(&[(1.0, -2.0)], 2, 1, 2);
        let bytes = to_binary(&f);
        assert_eq!(&bytes[..4], b"TMF1");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &1u32.to_le_bytes());
        assert_eq!(bytes.len(), 16 + 16 * 18);
        assert_eq!(&bytes[16..24], &1.0f64.to_le_bytes());
    }

    #[test]
    fn json_entries_are_lexicographic() {
        let f = field_from(&[(0.5, 0.25)], 2, 1, 1);
        let v: serde_json::Value = serde_json::from_str(&to_json(&f).unwrap()).unwrap();
        assert_eq!(v["coeffs"][0][0], serde_json::json!([-1, -1]));
        assert_eq!(v["coeffs"][8][0], serde_json::json!([1, 1]));
        assert_eq!(v["components"], 1);
    }

    #[test]
    fn rejects_corrupt_input() {
        let f = field_from(&[(1.0, 0.0)], 2, 1, 1);
        let mut bytes = to_binary(&f);
        bytes.push(0);
        assert!(from_binary(&bytes).is_err());
        assert!(from_binary(b"TMF2").is_err());
        let text = to_json(&f).unwrap().replacen("[-1,-1]", "[-1,0]", 1);
        assert!(from_json(&text).is_err());
    }

    proptest! {
        #[test]
        fn formats_round_trip_bit_exactly(
            values in prop::collection::vec((-1e300f64..1e300, -1e-300f64..1e-300), 1..40),
            dim in 1usize..4,
            trunc in 1usize..3,
            comps in 1usize..4,
        ) {
            let f = field_from(&values, dim, trunc, comps);
            let from_bin = from_binary(&to_binary(&f)).unwrap();
            let from_json = from_json(&to_json(&f).unwrap()).unwrap();
            for g in [from_bin, from_json] {
                prop_assert!(g.same_shape(&f));
                for (a, b) in g.coeffs().iter().zip(f.coeffs()) {
                    prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                    prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
                }
            }
        }
    }
}
