//! File formats: datasets, masks, dense matrices, embeddings, labels, edge
//! lists, violation reports, JSON, and MNIST IDX files.
//!
//! Floats are written in the shortest form that parses back to the same bits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::embedding::{Embedding, NeighborGraph};
use crate::error::{Error, Result};
use crate::masked::MaskedDataset;
use crate::matrix::SquareMatrix;
use crate::repair::ViolationReport;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Shortest round-trip decimal form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?))
}

fn csv_records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(BufReader::new(file));
    reader
        .records()
        .map(|r| r.map_err(|e| format_err(path, e.to_string())))
        .filter(|r| !matches!(r, Ok(rec) if rec.len() == 1 && rec[0].is_empty()))
        .collect()
}

fn write_row<W: Write>(w: &mut csv::Writer<W>, path: &Path, fields: impl IntoIterator<Item = String>) -> Result<()> {
    w.write_record(fields.into_iter().collect::<Vec<_>>())
        .map_err(|e| format_err(path, e.to_string()))
}

fn finish<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(io_err(path))
}

/// Missing markers in dataset files.
fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("nan")
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok()
}

/// A row is a header when some field is neither numeric nor a missing marker.
fn looks_like_header(rec: &csv::StringRecord) -> bool {
    rec.iter().any(|f| !is_missing_token(f) && parse_f64(f).is_none())
}

/// Dataset CSV: one point per row, empty fields or `NaN` mark missing entries.
/// A leading non-numeric row is taken as a header.
pub fn read_dataset(path: &Path) -> Result<MaskedDataset> {
    let mut records = csv_records(path)?;
    if records.first().is_some_and(looks_like_header) {
        records.remove(0);
    }
    if records.is_empty() {
        return Err(format_err(path, "no data rows"));
    }
    let m = records[0].len();
    let mut rows = Vec::with_capacity(records.len());
    for (r, rec) in records.iter().enumerate() {
        if rec.len() != m {
            return Err(format_err(path, format!("row {} has {} fields, expected {m}", r + 1, rec.len())));
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, f)| {
                if is_missing_token(f) {
                    return Ok(None);
                }
                match parse_f64(f) {
                    Some(v) if v.is_finite() => Ok(Some(v)),
                    _ => Err(format_err(path, format!("row {}, column {}: '{f}' is not a finite number", r + 1, c + 1))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    MaskedDataset::from_rows(&rows)
}

/// Writes present entries as numbers and missing ones as empty fields.
pub fn write_dataset(path: &Path, data: &MaskedDataset, header: Option<&[String]>) -> Result<()> {
    let mut w = csv_writer(path)?;
    if let Some(h) = header {
        write_row(&mut w, path, h.iter().cloned())?;
    }
    for i in 0..data.n() {
        let fields = data
            .value_row(i)
            .iter()
            .zip(data.mask_row(i))
            .map(|(&v, &p)| if p { fmt_f64(v) } else { String::new() });
        write_row(&mut w, path, fields)?;
    }
    finish(w, path)
}

/// 0/1 mask CSV, 1 = present.
pub fn read_mask(path: &Path, n: usize, m: usize) -> Result<Vec<bool>> {
    let mut records = csv_records(path)?;
    if records.first().is_some_and(|r| r.iter().any(|f| f != "0" && f != "1")) {
        records.remove(0);
    }
    if records.len() != n {
        return Err(format_err(path, format!("{} mask rows for {n} points", records.len())));
    }
    let mut mask = Vec::with_capacity(n * m);
    for (r, rec) in records.iter().enumerate() {
        if rec.len() != m {
            return Err(format_err(path, format!("mask row {} has {} fields, expected {m}", r + 1, rec.len())));
        }
        for f in rec {
            mask.push(match f {
                "1" => true,
                "0" => false,
                _ => return Err(format_err(path, format!("mask row {}: '{f}' is not 0 or 1", r + 1))),
            });
        }
    }
    Ok(mask)
}

pub fn write_mask(path: &Path, data: &MaskedDataset) -> Result<()> {
    let mut w = csv_writer(path)?;
    for i in 0..data.n() {
        write_row(&mut w, path, data.mask_row(i).iter().map(|&p| if p { "1" } else { "0" }.to_string()))?;
    }
    finish(w, path)
}

/// Dense square matrix, one row per line, no header. `inf` is allowed.
pub fn read_matrix(path: &Path) -> Result<SquareMatrix> {
    let mut records = csv_records(path)?;
    if records.first().is_some_and(looks_like_header) {
        records.remove(0);
    }
    let n = records.len();
    let mut data = Vec::with_capacity(n * n);
    for (r, rec) in records.iter().enumerate() {
        if rec.len() != n {
            return Err(format_err(path, format!("row {} has {} fields, expected {n} for a square matrix", r + 1, rec.len())));
        }
        for f in rec {
            data.push(parse_f64(f).ok_or_else(|| format_err(path, format!("row {}: '{f}' is not a number", r + 1)))?);
        }
    }
    SquareMatrix::from_vec(n, data)
}

pub fn write_matrix(path: &Path, matrix: &SquareMatrix) -> Result<()> {
    let mut w = csv_writer(path)?;
    for row in matrix.rows() {
        write_row(&mut w, path, row.iter().map(|&v| fmt_f64(v)))?;
    }
    finish(w, path)
}

/// Header `index,c1,...,cd`; `index` is the point's row in the input.
pub fn write_embedding(path: &Path, embedding: &Embedding) -> Result<()> {
    write_coords(path, &embedding.coords, &embedding.kept_indices)
}

pub fn write_coords(path: &Path, coords: &DMatrix<f64>, indices: &[usize]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let header = std::iter::once("index".to_string()).chain((1..=coords.ncols()).map(|c| format!("c{c}")));
    write_row(&mut w, path, header)?;
    for (r, &idx) in indices.iter().enumerate() {
        let fields = std::iter::once(idx.to_string()).chain(coords.row(r).iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>());
        write_row(&mut w, path, fields)?;
    }
    finish(w, path)
}

/// Embedding CSV back into `(indices, coords)`.
pub fn read_embedding(path: &Path) -> Result<(Vec<usize>, DMatrix<f64>)> {
    let mut records = csv_records(path)?;
    let has_index = match records.first() {
        Some(h) if looks_like_header(h) => {
            let idx = h.get(0).is_some_and(|f| f.eq_ignore_ascii_case("index"));
            records.remove(0);
            idx
        }
        _ => false,
    };
    if records.is_empty() {
        return Err(format_err(path, "no embedding rows"));
    }
    let width = records[0].len();
    let dim = width - usize::from(has_index);
    if dim == 0 {
        return Err(format_err(path, "no coordinate columns"));
    }
    let mut indices = Vec::with_capacity(records.len());
    let mut values = Vec::with_capacity(records.len() * dim);
    for (r, rec) in records.iter().enumerate() {
        if rec.len() != width {
            return Err(format_err(path, format!("row {} has {} fields, expected {width}", r + 1, rec.len())));
        }
        let mut fields = rec.iter();
        if has_index {
            let f = fields.next().unwrap_or_default();
            indices.push(f.parse().map_err(|_| format_err(path, format!("row {}: bad index '{f}'", r + 1)))?);
        } else {
            indices.push(r);
        }
        for f in fields {
            match parse_f64(f) {
                Some(v) if v.is_finite() => values.push(v),
                _ => return Err(format_err(path, format!("row {}: '{f}' is not a finite number", r + 1))),
            }
        }
    }
    Ok((indices, DMatrix::from_row_slice(records.len(), dim, &values)))
}

pub fn write_eigenvalues(path: &Path, eigenvalues: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(&mut w, path, ["component".to_string(), "eigenvalue".to_string()])?;
    for (c, &v) in eigenvalues.iter().enumerate() {
        write_row(&mut w, path, [(c + 1).to_string(), fmt_f64(v)])?;
    }
    finish(w, path)
}

/// Plain table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(&mut w, path, header.iter().map(|s| s.to_string()))?;
    for row in rows {
        write_row(&mut w, path, row.iter().map(|&v| fmt_f64(v)))?;
    }
    finish(w, path)
}

/// One nonnegative integer label per row; a non-numeric first row is a header.
/// With several columns the last one holds the label.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut records = csv_records(path)?;
    if records.first().is_some_and(|r| r.iter().last().is_some_and(|f| f.parse::<usize>().is_err())) {
        records.remove(0);
    }
    records
        .iter()
        .enumerate()
        .map(|(r, rec)| {
            let f = rec.iter().last().unwrap_or_default();
            f.parse().map_err(|_| format_err(path, format!("row {}: '{f}' is not a label", r + 1)))
        })
        .collect()
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(&mut w, path, ["label".to_string()])?;
    for l in labels {
        write_row(&mut w, path, [l.to_string()])?;
    }
    finish(w, path)
}

pub fn write_edges(path: &Path, graph: &NeighborGraph) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(&mut w, path, ["i", "j", "weight"].map(String::from))?;
    for e in graph.edges() {
        write_row(&mut w, path, [e.i.to_string(), e.j.to_string(), fmt_f64(e.weight)])?;
    }
    finish(w, path)
}

/// One `{"i","k","j","slack"}` object per line.
pub fn write_violations(path: &Path, report: &ViolationReport) -> Result<()> {
    let mut w = create(path)?;
    for v in &report.triples {
        serde_json::to_writer(&mut w, v)?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Pretty JSON with object keys in sorted order.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json's default map is ordered by key.
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_sorted_json(value)?;
    text.push('\n');
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| format_err(path, e.to_string()))
}

const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;

/// Whole file, gunzipped when it starts with the gzip magic bytes.
fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let mut reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    let gz = reader.fill_buf().map_err(io_err(path))?.starts_with(&[0x1f, 0x8b]);
    let mut bytes = Vec::new();
    if gz {
        GzDecoder::new(reader).read_to_end(&mut bytes).map_err(io_err(path))?;
    } else {
        reader.read_to_end(&mut bytes).map_err(io_err(path))?;
    }
    Ok(bytes)
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().expect("four bytes"))
}

/// MNIST-style images: `count x (rows * cols)` pixels scaled to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<f64>,
}

impl IdxImages {
    pub fn pixel_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Fully observed dataset of the selected images.
    pub fn dataset(&self, select: &[usize]) -> Result<MaskedDataset> {
        let m = self.pixel_count();
        let values = select.iter().flat_map(|&i| self.pixels[i * m..(i + 1) * m].iter().copied()).collect();
        MaskedDataset::complete(select.len(), m, values)
    }
}

/// Big-endian IDX image file, magic `0x00000803`, optionally gzipped.
pub fn read_idx_images(path: &Path) -> Result<IdxImages> {
    let bytes = read_maybe_gzip(path)?;
    if bytes.len() < 16 {
        return Err(format_err(path, "truncated IDX header"));
    }
    let magic = be_u32(&bytes, 0);
    if magic != IDX_IMAGES {
        return Err(format_err(path, format!("magic number {magic:#010x}, expected {IDX_IMAGES:#010x} for images")));
    }
    let (count, rows, cols) = (be_u32(&bytes, 4) as usize, be_u32(&bytes, 8) as usize, be_u32(&bytes, 12) as usize);
    let expected = 16 + count * rows * cols;
    if bytes.len() != expected {
        return Err(format_err(path, format!("{} bytes, header implies {expected}", bytes.len())));
    }
    let pixels = bytes[16..].iter().map(|&b| f64::from(b) / 255.0).collect();
    Ok(IdxImages { count, rows, cols, pixels })
}

/// Big-endian IDX label file, magic `0x00000801`, optionally gzipped.
pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_maybe_gzip(path)?;
    if bytes.len() < 8 {
        return Err(format_err(path, "truncated IDX header"));
    }
    let magic = be_u32(&bytes, 0);
    if magic != IDX_LABELS {
        return Err(format_err(path, format!("magic number {magic:#010x}, expected {IDX_LABELS:#010x} for labels")));
    }
    let count = be_u32(&bytes, 4) as usize;
    if bytes.len() != 8 + count {
        return Err(format_err(path, format!("{} bytes, header implies {}", bytes.len(), 8 + count)));
    }
    Ok(bytes[8..].to_vec())
}

/// Raw IDX bytes for `images` (each `rows * cols` bytes).
pub fn encode_idx_images(images: &[Vec<u8>], rows: usize, cols: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IDX_IMAGES, images.len() as u32, rows as u32, cols as u32] {
        out.extend(v.to_be_bytes());
    }
    for img in images {
        out.extend(img);
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend(IDX_LABELS.to_be_bytes());
    out.extend((labels.len() as u32).to_be_bytes());
    out.extend(labels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;

    #[test]
    fn dataset_round_trip_with_missing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let data = MaskedDataset::from_rows(&[
            vec![Some(0.1), None, Some(1.0 / 3.0)],
            vec![Some(-2.5e-300), Some(7.0), None],
        ])
        .unwrap();
        write_dataset(&path, &data, Some(&["a".into(), "b".into(), "c".into()])).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back.mask(), data.mask());
        for i in 0..2 {
            for k in 0..3 {
                if data.is_present(i, k) {
                    assert_eq!(back.value_row(i)[k].to_bits(), data.value_row(i)[k].to_bits());
                }
            }
        }
    }

    #[test]
    fn dataset_nan_tokens_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "1,NaN,3\n4,5,\n").unwrap();
        let d = read_dataset(&path).unwrap();
        assert_eq!(d.mask(), &[true, false, true, true, true, false]);
        std::fs::write(&path, "1,2\n3\n").unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Format { .. })));
        std::fs::write(&path, "1,2\n3,abc\n").unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Format { .. })));
        assert!(matches!(read_dataset(&dir.path().join("none.csv")), Err(Error::Io { .. })));
    }

    #[test]
    fn matrix_and_embedding_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = SquareMatrix::from_fn(4, |i, j| if i == j { 0.0 } else { (i * 7 + j) as f64 / 3.0 });
        let path = dir.path().join("m.csv");
        write_matrix(&path, &m).unwrap();
        assert_eq!(read_matrix(&path).unwrap(), m);

        let mut inf = m.clone();
        inf.set(0, 1, f64::INFINITY);
        write_matrix(&path, &inf).unwrap();
        assert_eq!(read_matrix(&path).unwrap().get(0, 1), f64::INFINITY);

        let e = Embedding {
            coords: DMatrix::from_row_slice(3, 2, &[0.1, -0.2, 1e-17, 3.0, 5.5, 0.7]),
            eigenvalues: vec![2.0, 1.0],
            kept_indices: vec![0, 2, 5],
        };
        let path = dir.path().join("e.csv");
        write_embedding(&path, &e).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("index,c1,c2\n0,"));
        let (idx, coords) = read_embedding(&path).unwrap();
        assert_eq!(idx, e.kept_indices);
        assert_eq!(coords, e.coords);
    }

    #[test]
    fn labels_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.csv");
        write_labels(&path, &[3, 1, 4]).unwrap();
        assert_eq!(read_labels(&path).unwrap(), vec![3, 1, 4]);

        #[derive(Serialize)]
        struct Out {
            zeta: u32,
            alpha: f64,
        }
        let text = to_sorted_json(&Out { zeta: 1, alpha: 0.5 }).unwrap();
        assert!(text.find("alpha").unwrap() < text.find("zeta").unwrap());
    }

    #[test]
    fn idx_plain_and_gzip() {
        let dir = tempfile::tempdir().unwrap();
        let images: Vec<Vec<u8>> = (0..10).map(|i| (0..4).map(|p| (i * 25 + p) as u8).collect()).collect();
        let mut imgs = images.clone();
        imgs[0][0] = 255;
        let raw = encode_idx_images(&imgs, 2, 2);
        let path = dir.path().join("img.idx");
        std::fs::write(&path, &raw).unwrap();
        let parsed = read_idx_images(&path).unwrap();
        assert_eq!((parsed.count, parsed.rows, parsed.cols), (10, 2, 2));
        assert_eq!(parsed.pixels[0], 1.0);
        assert_eq!(parsed.dataset(&[0, 3]).unwrap().n(), 2);

        let gz_path = dir.path().join("img.idx.gz");
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&raw).unwrap();
        std::fs::write(&gz_path, enc.finish().unwrap()).unwrap();
        assert_eq!(read_idx_images(&gz_path).unwrap(), parsed);

        let lpath = dir.path().join("lab.idx");
        std::fs::write(&lpath, encode_idx_labels(&[1, 2, 3])).unwrap();
        assert_eq!(read_idx_labels(&lpath).unwrap(), vec![1, 2, 3]);
        // Label file where images are expected.
        assert!(matches!(read_idx_images(&lpath), Err(Error::Format { .. })));
        let mut bad = raw.clone();
        bad.pop();
        std::fs::write(&path, bad).unwrap();
        assert!(read_idx_images(&path).is_err());
    }
}
