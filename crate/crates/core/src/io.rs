use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serializer;
use sha2::{Digest, Sha256};

use crate::error::{GlctError, Result};
use crate::graph::{hex, Graph, GraphSignal};
use crate::linalg::CMatrix;

/// Serializes an `f64` as a JSON number with 17 significant digits.
pub fn ser_f64_17<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::Error;
    let raw = serde_json::value::RawValue::from_string(fmt17(*x)).map_err(S::Error::custom)?;
    serde::Serialize::serialize(&raw, s)
}

pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| GlctError::Parse(format!("{what}: cannot parse {s:?} as a number")))
}

fn csv_err(e: csv::Error) -> GlctError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => GlctError::Io(e.to_string()),
        k => GlctError::Parse(format!("csv: {k:?}")),
    }
}

/// Writes the lower triangle of a symmetric matrix as
/// `matrix coordinate real symmetric`.
pub fn write_matrix_market<W: Write>(mut w: W, a: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    let mut entries = Vec::new();
    for j in 0..n {
        for i in j..n {
            if a[(i, j)] != 0.0 {
                entries.push((i, j, a[(i, j)]));
            }
        }
    }
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{n} {n} {}", entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {}", i + 1, j + 1, fmt17(v))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a Matrix Market coordinate file (`real`, `integer` or `pattern`;
/// `general` or `symmetric`) into a dense matrix.
pub fn read_matrix_market<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or_else(|| GlctError::Parse("empty Matrix Market file".into()))??;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(GlctError::Parse(format!("bad Matrix Market header {header:?}")));
    }
    if fields[2] != "coordinate" {
        return Err(GlctError::Parse(format!("unsupported format {:?}", fields[2])));
    }
    let pattern = match fields[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        f => return Err(GlctError::Parse(format!("unsupported field {f:?}"))),
    };
    let symmetric = match fields[4].as_str() {
        "symmetric" => true,
        "general" => false,
        s => return Err(GlctError::Parse(format!("unsupported symmetry {s:?}"))),
    };
    let mut body = lines.filter(|l| match l {
        Ok(s) => !(s.trim().is_empty() || s.starts_with('%')),
        Err(_) => true,
    });
    let size = body
        .next()
        .ok_or_else(|| GlctError::Parse("missing size line".into()))??;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| GlctError::Parse(format!("bad size line {size:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(GlctError::Parse(format!("bad size line {size:?}")));
    };
    if rows != cols {
        return Err(GlctError::Parse(format!("adjacency must be square, got {rows}x{cols}")));
    }
    let mut a = DMatrix::zeros(rows, cols);
    let mut count = 0;
    for line in body {
        let line = line?;
        let t: Vec<&str> = line.split_whitespace().collect();
        let want = if pattern { 2 } else { 3 };
        if t.len() != want {
            return Err(GlctError::Parse(format!("bad entry line {line:?}")));
        }
        let idx = |s: &str| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(k) if (1..=rows).contains(&k) => Ok(k - 1),
                _ => Err(GlctError::Parse(format!("index {s:?} out of range 1..={rows}"))),
            }
        };
        let (i, j) = (idx(t[0])?, idx(t[1])?);
        let v = if pattern { 1.0 } else { parse_f64(t[2], "entry")? };
        if symmetric && j > i {
            return Err(GlctError::Parse(format!("symmetric file has upper-triangle entry {line:?}")));
        }
        a[(i, j)] = v;
        if symmetric {
            a[(j, i)] = v;
        }
        count += 1;
    }
    if count != nnz {
        return Err(GlctError::Parse(format!("expected {nnz} entries, found {count}")));
    }
    Ok(a)
}

/// Signal CSV with header `re,im`. Real results still get an `im` column.
pub fn write_signal_csv<W: Write>(w: W, x: &GraphSignal) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["re", "im"]).map_err(csv_err)?;
    for z in &x.values {
        wr.write_record([fmt17(z.re), fmt17(z.im)]).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a one-column (real) or two-column (`re,im`) signal. A header row is
/// recognized when its first field is not a number.
pub fn read_signal_csv<R: Read>(r: R) -> Result<GraphSignal> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut values = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if row == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        let z = match rec.len() {
            1 => Complex64::new(parse_f64(&rec[0], "signal")?, 0.0),
            2 => Complex64::new(parse_f64(&rec[0], "signal re")?, parse_f64(&rec[1], "signal im")?),
            k => return Err(GlctError::Parse(format!("signal row {} has {k} columns", row + 1))),
        };
        values.push(z);
    }
    if values.is_empty() {
        return Err(GlctError::Parse("empty signal".into()));
    }
    Ok(GraphSignal::new(values))
}

pub fn write_coords_csv<W: Write>(w: W, coords: &DMatrix<f64>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record((0..coords.ncols()).map(|j| format!("x{j}"))).map_err(csv_err)?;
    for i in 0..coords.nrows() {
        wr.write_record(coords.row(i).iter().map(|v| fmt17(*v))).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_coords_csv<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut data = Vec::new();
    let mut ncols = None;
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        if *ncols.get_or_insert(rec.len()) != rec.len() {
            return Err(GlctError::Parse("ragged coordinate rows".into()));
        }
        for f in rec.iter() {
            data.push(parse_f64(f, "coordinate")?);
        }
    }
    let k = ncols.unwrap_or(0);
    let n = data.len().checked_div(k).unwrap_or(0);
    Ok(DMatrix::from_row_slice(n, k, &data))
}

/// Dense complex matrix with interleaved `re_j,im_j` columns.
pub fn write_operator_csv<W: Write>(w: W, m: &CMatrix) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record((0..m.ncols()).flat_map(|j| [format!("re{j}"), format!("im{j}")]))
        .map_err(csv_err)?;
    for i in 0..m.nrows() {
        wr.write_record(m.row(i).iter().flat_map(|z| [fmt17(z.re), fmt17(z.im)]))
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_operator_csv<R: Read>(r: R) -> Result<CMatrix> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut data = Vec::new();
    let mut nrows = 0;
    let mut ncols = None;
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() % 2 != 0 || *ncols.get_or_insert(rec.len() / 2) != rec.len() / 2 {
            return Err(GlctError::Parse("operator rows need matching re/im pairs".into()));
        }
        for p in 0..rec.len() / 2 {
            data.push(Complex64::new(
                parse_f64(&rec[2 * p], "operator re")?,
                parse_f64(&rec[2 * p + 1], "operator im")?,
            ));
        }
        nrows += 1;
    }
    Ok(CMatrix::from_row_slice(nrows, ncols.unwrap_or(0), &data))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| GlctError::Io(format!("{}: {e}", path.display())))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| GlctError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| GlctError::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Loads a graph from a Matrix Market file and optional coordinate CSV.
pub fn load_graph(adjacency: &Path, coords: Option<&Path>) -> Result<Graph> {
    let a = read_matrix_market(open(adjacency)?)?;
    let c = coords.map(|p| read_coords_csv(open(p)?)).transpose()?;
    Graph::new(a, c)
}

/// A file read or written by a run, with its SHA-256 digest.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(FileDigest {
            path: path.display().to_string(),
            sha256: file_sha256(path)?,
        })
    }
}

/// Everything needed to re-run a command and check its outputs.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    /// Effective configuration after defaults were applied.
    pub config: serde_json::Value,
    pub config_hash: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: String,
    /// Wall-clock timings in seconds, keyed by label. Not part of any CSV.
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub timings: std::collections::BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new<C: serde::Serialize>(command: &str, args: Vec<String>, config: &C, seed: Option<u64>) -> Result<Self> {
        let config = serde_json::to_value(config).map_err(|e| GlctError::Config(e.to_string()))?;
        let config_hash = sha256_hex(config.to_string().as_bytes());
        Ok(RunManifest {
            command: command.to_string(),
            args,
            config,
            config_hash,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed,
            version: crate::VERSION.to_string(),
            timings: Default::default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matrix_market_round_trip() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 0.1, 0.0, 0.1, 0.0, 1.0 / 3.0, 0.0, 1.0 / 3.0, 0.0]);
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &a).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n"));
        assert_eq!(read_matrix_market(&buf[..]).unwrap(), a);
    }

    #[test]
    fn matrix_market_variants() {
        let pattern = "%%MatrixMarket matrix coordinate pattern general\n% c\n2 2 2\n1 2\n2 1\n";
        let a = read_matrix_market(pattern.as_bytes()).unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        for bad in [
            "",
            "%%MatrixMarket matrix array real general\n2 2\n",
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1.0\n",
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n2 1 1.0\n",
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1.0\n",
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 x\n",
        ] {
            assert!(matches!(read_matrix_market(bad.as_bytes()), Err(GlctError::Parse(_))), "{bad:?}");
        }
    }

    #[test]
    fn signal_formats() {
        let x = read_signal_csv("1\n-2.5\n".as_bytes()).unwrap();
        assert_eq!(x, GraphSignal::from_real(&[1.0, -2.5]));
        let y = read_signal_csv("re,im\n1,2\n3,-4\n".as_bytes()).unwrap();
        assert_eq!(y.values[1], Complex64::new(3.0, -4.0));
        assert!(read_signal_csv("re,im\n".as_bytes()).is_err());
        assert!(read_signal_csv("1,2,3\n".as_bytes()).is_err());
        let mut buf = Vec::new();
        write_signal_csv(&mut buf, &GraphSignal::from_real(&[1.0])).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "re,im\n1.0000000000000000e0,0.0000000000000000e0\n");
    }

    #[test]
    fn operator_and_coords_round_trip() {
        let m = CMatrix::from_fn(3, 2, |i, j| Complex64::new(i as f64 / 7.0, -(j as f64) * 0.3));
        let mut buf = Vec::new();
        write_operator_csv(&mut buf, &m).unwrap();
        assert_eq!(read_operator_csv(&buf[..]).unwrap(), m);
        let c = DMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 * 0.1);
        let mut buf = Vec::new();
        write_coords_csv(&mut buf, &c).unwrap();
        assert_eq!(read_coords_csv(&buf[..]).unwrap(), c);
    }

    #[test]
    fn manifest_hash_tracks_config() {
        let a = RunManifest::new("opcount", vec![], &serde_json::json!({"nmin": 1, "nmax": 4}), None).unwrap();
        let b = RunManifest::new("opcount", vec![], &serde_json::json!({"nmin": 1, "nmax": 5}), None).unwrap();
        assert_ne!(a.config_hash, b.config_hash);
        assert_eq!(a.config_hash.len(), 64);
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    proptest! {
        #[test]
        fn signal_round_trip_is_exact(v in prop::collection::vec((-1e300f64..1e300, -1e-300f64..1e-300), 1..20)) {
            let x = GraphSignal::new(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect());
            let mut buf = Vec::new();
            write_signal_csv(&mut buf, &x).unwrap();
            prop_assert_eq!(read_signal_csv(&buf[..]).unwrap(), x);
        }
    }
}
