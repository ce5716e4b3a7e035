//! On-disk formats: raw complex images, PGM previews, CSV masks and supports,
//! and `key = value` blocks.

use std::io::{Read, Write};

use tvls_core::certify::{CertificateReport, LineKind};
use tvls_core::ops::{freq_in_range, freq_min, IndexSet2D};
use tvls_core::{Complex64, ComplexImage, StructureReport, Support2D};

use crate::error::{Error, Result};

pub const TVLS_MAGIC: &[u8; 8] = b"TVLS0001";

/// Writes `TVLS0001`, `N` as little-endian u64, then `N^2` (re, im) pairs of
/// little-endian f64 in row-major order.
pub fn write_tvls<W: Write>(mut w: W, img: &ComplexImage) -> Result<()> {
    w.write_all(TVLS_MAGIC)?;
    w.write_all(&(img.n() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * img.data().len());
    for v in img.data() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_tvls<R: Read>(mut r: R) -> Result<ComplexImage> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != TVLS_MAGIC {
        return Err(Error::Format("not a TVLS0001 file".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word);
    if n == 0 || n > 1 << 15 {
        return Err(Error::Format(format!("implausible side length {n}")));
    }
    let n = n as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * n * n {
        return Err(Error::Format(format!(
            "expected {} payload bytes for N = {n}, found {}",
            16 * n * n,
            bytes.len()
        )));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let data = bytes.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect();
    Ok(ComplexImage::from_vec(n, data)?)
}

fn write_pgm<W: Write>(mut w: W, n: usize, pixels: &[u8]) -> Result<()> {
    write!(w, "P5\n{n} {n}\n255\n")?;
    w.write_all(pixels)?;
    Ok(())
}

/// 8-bit magnitude image, scaled so the largest magnitude maps to 255.
pub fn write_pgm_magnitude<W: Write>(w: W, img: &ComplexImage) -> Result<()> {
    let peak = img.max_abs();
    let pixels: Vec<u8> = img
        .data()
        .iter()
        .map(|v| if peak > 0.0 { (255.0 * v.norm() / peak).round() as u8 } else { 0 })
        .collect();
    write_pgm(w, img.n(), &pixels)
}

/// Mask as a PGM with the zero frequency at the centre: pixel `(r, c)` shows
/// frequency `(r + min, c + min)` where `min` is the lowest signed frequency.
pub fn write_mask_pgm<W: Write>(w: W, mask: &IndexSet2D) -> Result<()> {
    let n = mask.n();
    let lo = freq_min(n);
    let mut pixels = vec![0u8; n * n];
    for r in 0..n {
        for c in 0..n {
            if mask.contains(lo + r as i64, lo + c as i64) {
                pixels[r * n + c] = 255;
            }
        }
    }
    write_pgm(w, n, &pixels)
}

pub fn write_mask_csv<W: Write>(w: W, mask: &IndexSet2D) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k1", "k2"])?;
    for (k1, k2) in mask.iter() {
        out.write_record([k1.to_string(), k2.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_mask_csv<R: Read>(r: R, n: usize) -> Result<IndexSet2D> {
    let mut mask = IndexSet2D::empty(n);
    let mut rdr = csv::Reader::from_reader(r);
    for rec in rdr.records() {
        let rec = rec?;
        let k1 = parse_field::<i64>(&rec, 0)?;
        let k2 = parse_field::<i64>(&rec, 1)?;
        if !freq_in_range(k1, n) || !freq_in_range(k2, n) {
            return Err(Error::Format(format!("frequency ({k1}, {k2}) outside the range for N = {n}")));
        }
        mask.insert(k1, k2)?;
    }
    Ok(mask)
}

/// Support members as 1-based `(k, j)` = (row, column) pairs.
pub fn write_support_csv<W: Write>(w: W, support: &Support2D) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "j"])?;
    for (r, c) in support.iter() {
        out.write_record([(r + 1).to_string(), (c + 1).to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_support_csv<R: Read>(r: R, n: usize) -> Result<Support2D> {
    let mut members = Vec::new();
    let mut rdr = csv::Reader::from_reader(r);
    for rec in rdr.records() {
        let rec = rec?;
        let k = parse_field::<usize>(&rec, 0)?;
        let j = parse_field::<usize>(&rec, 1)?;
        if k == 0 || j == 0 {
            return Err(Error::Format("support indices are 1-based".into()));
        }
        members.push((k - 1, j - 1));
    }
    Ok(Support2D::from_members(n, members)?)
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::Format(format!("missing column {i}")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Format(format!("cannot parse {raw:?} in column {i}")))
}

/// Ordered `key = value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvBlock(pub Vec<(String, String)>);

impl KvBlock {
    pub fn new() -> Self {
        KvBlock(Vec::new())
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.0 {
            writeln!(w, "{k} = {v}")?;
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = KvBlock::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected key = value", no + 1)))?;
            out.push(k.trim(), v.trim());
        }
        Ok(out)
    }
}

fn opt_sep(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x}"))
}

pub fn structure_block(s: &StructureReport) -> KvBlock {
    let mut kv = KvBlock::new();
    kv.push("n", s.n)
        .push("s1", s.s1)
        .push("s2", s.s2)
        .push("nu_row", opt_sep(s.nu_row))
        .push("nu_col", opt_sep(s.nu_col))
        .push("t1", s.t1)
        .push("t2", s.t2)
        .push("bandwidth1", s.m1)
        .push("bandwidth2", s.m2);
    kv
}

pub fn certificate_summary(r: &CertificateReport) -> KvBlock {
    let mut kv = KvBlock::new();
    kv.push("c1_min", r.c1_min)
        .push("c2_max", r.c2_max)
        .push("l_sq", r.l_sq)
        .push("classes", r.per_line.len())
        .push("all_pass", r.all_pass);
    kv
}

fn join_one_based(v: &[usize]) -> String {
    v.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ")
}

/// One row per distinct line class; indices are 1-based.
pub fn write_certificate_csv<W: Write>(w: W, r: &CertificateReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "kind",
        "lines",
        "support",
        "sigma_min",
        "min_norm_off_sup",
        "off_sup_norm",
        "w_norm",
        "solvable",
        "pass",
    ])?;
    for l in &r.per_line {
        let kind = match l.kind {
            LineKind::Column => "column",
            LineKind::Row => "row",
        };
        out.write_record([
            kind.to_string(),
            join_one_based(&l.lines),
            join_one_based(&l.support),
            format!("{:e}", l.sigma_min),
            format!("{:e}", l.min_norm_off_sup),
            format!("{:e}", l.off_sup_norm),
            format!("{:e}", l.w_norm),
            l.solvable.to_string(),
            l.passes().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let mut kv = KvBlock::new();
        kv.push("a", 1).push("b", "x y");
        let mut buf = Vec::new();
        kv.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "a = 1\nb = x y\n");
        assert_eq!(KvBlock::parse(&format!("# c\n\n{text}")).unwrap(), kv);
        assert!(KvBlock::parse("nonsense").is_err());
    }

    #[test]
    fn mask_pgm_puts_dc_in_the_middle() {
        let mut mask = IndexSet2D::empty(4);
        mask.insert(0, 0).unwrap();
        let mut buf = Vec::new();
        write_mask_pgm(&mut buf, &mask).unwrap();
        let header = b"P5\n4 4\n255\n";
        assert_eq!(&buf[..header.len()], header);
        let px = &buf[header.len()..];
        // [4] = {-1, 0, 1, 2}: zero sits at row 1, column 1
        assert_eq!(px.iter().position(|&p| p == 255), Some(5));
        assert_eq!(px.iter().filter(|&&p| p == 255).count(), 1);
    }

    #[test]
    fn tvls_rejects_bad_headers() {
        assert!(read_tvls(&b"TVLS0002\x01\0\0\0\0\0\0\0"[..]).is_err());
        let mut buf = Vec::new();
        write_tvls(&mut buf, &ComplexImage::zeros(2)).unwrap();
        buf.pop();
        assert!(read_tvls(&buf[..]).is_err());
    }
}
