//! CSV and binary formats.
//!
//! Floats are written as the shortest string that parses back to the same
//! value, in plain notation for magnitudes in `[1e-5, 1e16)` and in exponent
//! notation otherwise, so output is byte-stable across runs.
//!
//! A cloud file starts with one metadata comment line,
//! `# gamma=<g> epsilon=<e> seed=<n> region=<lo...>,<hi...>`, followed by a
//! header `x1,...,xd` and one row per point.

use std::io::{BufRead, BufReader, Read, Write};

use crate::bad_boxes::{BoundaryStats, Classification, ComponentGraph};
use crate::error::{Error, Result};
use crate::field::{CloudField, LatticeField};
use crate::geometry::{Region, MAX_DIM};
use crate::lattice::{BoxId, LatticePartition};
use crate::point_process::{PointCloud, ProcessParams};
use crate::regularity::{RegularityReport, VoronoiRaster};

pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let a = x.abs();
    if (1e-5..1e16).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn parse_f64(field: &str, line: u64) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("not a number: {field:?}") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, msg: format!("non-finite value {field:?}") });
    }
    Ok(v)
}

fn parse_int<T: std::str::FromStr>(field: &str, line: u64) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("not an integer: {field:?}") })
}

fn parse_flag(field: &str, line: u64) -> Result<bool> {
    match field.trim() {
        "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        other => Err(Error::Parse { line, msg: format!("not a flag: {other:?}") }),
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r)
}

/// Checks a header of the form `<prefix>1..<prefix>d` followed by `tail`, and
/// returns `d`. `lead` columns come first.
fn lattice_header(headers: &csv::StringRecord, lead: &[&str], prefix: &str, tail: &[&str]) -> Result<usize> {
    let cols: Vec<&str> = headers.iter().collect();
    let bad = || Error::Parse {
        line: 1,
        msg: format!("unexpected header {cols:?}, want {lead:?} + {prefix}1..{prefix}d + {tail:?}"),
    };
    if cols.len() < lead.len() + tail.len() + 1 {
        return Err(bad());
    }
    let dim = cols.len() - lead.len() - tail.len();
    if dim > MAX_DIM || cols[..lead.len()] != *lead || cols[cols.len() - tail.len()..] != *tail {
        return Err(bad());
    }
    for k in 0..dim {
        if cols[lead.len() + k] != format!("{prefix}{}", k + 1) {
            return Err(bad());
        }
    }
    Ok(dim)
}

fn coord_header(lead: &[&str], prefix: &str, dim: usize, tail: &[&str]) -> Vec<String> {
    lead.iter()
        .map(|s| s.to_string())
        .chain((1..=dim).map(|k| format!("{prefix}{k}")))
        .chain(tail.iter().map(|s| s.to_string()))
        .collect()
}

fn box_id(record: &csv::StringRecord, from: usize, dim: usize) -> Result<BoxId> {
    let line = line_of(record);
    let mut c = [0i64; MAX_DIM];
    for k in 0..dim {
        c[k] = parse_int(&record[from + k], line)?;
    }
    Ok(BoxId(c))
}

/// Cloud metadata carried by the comment line of a cloud file. Fields left
/// `None` must be supplied by the caller.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CloudMeta {
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub region: Option<Region>,
}

impl CloudMeta {
    /// Fills the fields of `self` that are unset from `other`.
    pub fn or(self, other: CloudMeta) -> CloudMeta {
        CloudMeta {
            gamma: self.gamma.or(other.gamma),
            epsilon: self.epsilon.or(other.epsilon),
            seed: self.seed.or(other.seed),
            region: self.region.or(other.region),
        }
    }

    fn parse_line(line: &str) -> Result<CloudMeta> {
        let mut meta = CloudMeta::default();
        let body = line.trim_start_matches('#');
        for token in body.split_whitespace() {
            let Some((key, value)) = token.split_once('=') else { continue };
            match key {
                "gamma" => meta.gamma = Some(parse_f64(value, 1)?),
                "epsilon" => meta.epsilon = Some(parse_f64(value, 1)?),
                "seed" => meta.seed = Some(parse_int(value, 1)?),
                "region" => meta.region = Some(Region::parse(value)?),
                _ => {}
            }
        }
        Ok(meta)
    }
}

pub fn write_cloud<W: Write>(cloud: &PointCloud, w: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(w);
    let p = cloud.params();
    let r = cloud.region();
    let region: Vec<String> = r.lo().iter().chain(r.hi()).map(|&v| fmt_f64(v)).collect();
    writeln!(
        w,
        "# gamma={} epsilon={} seed={} region={}",
        fmt_f64(p.gamma),
        fmt_f64(p.epsilon),
        p.seed,
        region.join(",")
    )?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(coord_header(&[], "x", cloud.dim(), &[]))?;
    for x in cloud.points() {
        out.write_record(x.iter().map(|&v| fmt_f64(v)))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a cloud file. Metadata from the comment line takes precedence over
/// `fallback`; the region and epsilon must come from one of them.
pub fn read_cloud<R: Read>(r: R, fallback: CloudMeta) -> Result<PointCloud> {
    let mut buf = BufReader::new(r);
    let mut first = String::new();
    buf.read_line(&mut first)?;
    let (meta, rest): (CloudMeta, Box<dyn Read>) = if first.starts_with('#') {
        (CloudMeta::parse_line(&first)?, Box::new(buf))
    } else {
        (CloudMeta::default(), Box::new(std::io::Cursor::new(first.into_bytes()).chain(buf)))
    };
    let meta = meta.or(fallback);
    let region = meta.region.ok_or_else(|| Error::Config("cloud region unknown".into()))?;
    let epsilon = meta.epsilon.ok_or_else(|| Error::Config("cloud epsilon unknown".into()))?;
    let params = ProcessParams::new(meta.gamma.unwrap_or(1.0), epsilon, region.dim(), meta.seed.unwrap_or(0))?;

    let mut rdr = reader(rest);
    let dim = lattice_header(rdr.headers()?, &[], "x", &[])?;
    if dim != region.dim() {
        return Err(Error::DimensionMismatch { expected: region.dim(), got: dim });
    }
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let x = (0..dim).map(|k| parse_f64(&rec[k], line)).collect::<Result<Vec<_>>>()?;
        points.push(x);
    }
    PointCloud::from_points(points, params, region)
}

pub fn write_cloud_field<W: Write>(u: &CloudField, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["point_index", "value"])?;
    for (i, &v) in u.values().iter().enumerate() {
        out.write_record([i.to_string(), fmt_f64(v)])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `point_index,value` rows; every index `0..n` must appear exactly once.
pub fn read_cloud_field<R: Read>(r: R, cloud: &PointCloud) -> Result<CloudField> {
    let mut rdr = reader(r);
    let cols: Vec<&str> = rdr.headers()?.iter().collect();
    if cols != ["point_index", "value"] {
        return Err(Error::Parse { line: 1, msg: format!("unexpected header {cols:?}") });
    }
    let mut values = vec![None; cloud.len()];
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let i: usize = parse_int(&rec[0], line)?;
        let v = parse_f64(&rec[1], line)?;
        let slot = values
            .get_mut(i)
            .ok_or_else(|| Error::Parse { line, msg: format!("point index {i} out of range") })?;
        if slot.replace(v).is_some() {
            return Err(Error::Parse { line, msg: format!("duplicate point index {i}") });
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or(Error::FieldLength { expected: cloud.len(), got: i }))
        .collect::<Result<Vec<_>>>()?;
    CloudField::new(cloud, values)
}

/// Writes `J1..Jd,value` for every defined box.
pub fn write_lattice_field<W: Write>(v: &LatticeField, partition: &LatticePartition, w: W) -> Result<()> {
    let dim = partition.dim();
    let mut out = csv::Writer::from_writer(w);
    out.write_record(coord_header(&[], "J", dim, &["value"]))?;
    for i in v.domain() {
        let id = partition.box_at(i);
        let mut row: Vec<String> = id.coords(dim).iter().map(i64::to_string).collect();
        row.push(fmt_f64(v.get(i).expect("domain")));
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Entries of a lattice field file and its dimension.
pub fn read_lattice_entries<R: Read>(r: R) -> Result<(usize, Vec<(BoxId, f64)>)> {
    let mut rdr = reader(r);
    let dim = lattice_header(rdr.headers()?, &[], "J", &["value"])?;
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = box_id(&rec, 0, dim)?;
        entries.push((id, parse_f64(&rec[dim], line_of(&rec))?));
    }
    Ok((dim, entries))
}

pub fn write_classification<W: Write>(cls: &Classification, partition: &LatticePartition, w: W) -> Result<()> {
    let dim = partition.dim();
    let mut out = csv::Writer::from_writer(w);
    out.write_record(coord_header(&[], "J", dim, &["count", "is_bad"]))?;
    for (i, id) in partition.boxes().enumerate() {
        let mut row: Vec<String> = id.coords(dim).iter().map(i64::to_string).collect();
        row.push(cls.counts[i].to_string());
        row.push(flag(cls.bad[i]).to_string());
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationRow {
    pub id: BoxId,
    pub count: usize,
    pub is_bad: bool,
}

pub fn read_classification<R: Read>(r: R) -> Result<(usize, Vec<ClassificationRow>)> {
    let mut rdr = reader(r);
    let dim = lattice_header(rdr.headers()?, &[], "J", &["count", "is_bad"])?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        rows.push(ClassificationRow {
            id: box_id(&rec, 0, dim)?,
            count: parse_int(&rec[dim], line)?,
            is_bad: parse_flag(&rec[dim + 1], line)?,
        });
    }
    Ok((dim, rows))
}

/// `component_id,J1..Jd`, one row per bad box.
pub fn write_members<W: Write>(graph: &ComponentGraph, partition: &LatticePartition, w: W) -> Result<()> {
    let dim = partition.dim();
    let mut out = csv::Writer::from_writer(w);
    out.write_record(coord_header(&["component_id"], "J", dim, &[]))?;
    for (id, members) in graph.components.iter().enumerate() {
        for &i in members {
            let mut row = vec![id.to_string()];
            row.extend(partition.box_at(i).coords(dim).iter().map(i64::to_string));
            out.write_record(row)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_members<R: Read>(r: R) -> Result<(usize, Vec<(usize, BoxId)>)> {
    let mut rdr = reader(r);
    let dim = lattice_header(rdr.headers()?, &["component_id"], "J", &[])?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push((parse_int(&rec[0], line_of(&rec))?, box_id(&rec, 1, dim)?));
    }
    Ok((dim, rows))
}

pub fn write_component_summary<W: Write>(graph: &ComponentGraph, stats: &[BoundaryStats], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["component_id", "size", "boundary_size", "max_path_len", "boundary_connected"])?;
    for (id, (members, st)) in graph.components.iter().zip(stats).enumerate() {
        out.write_record([
            id.to_string(),
            members.len().to_string(),
            graph.boundary[id].len().to_string(),
            st.max_path_len.to_string(),
            flag(st.connected).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_regularity<W: Write>(report: &RegularityReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["point_index", "inradius_est", "diam_est", "is_regular", "touches_boundary"])?;
    for i in 0..report.regular.len() {
        out.write_record([
            i.to_string(),
            fmt_f64(report.inradius_est[i]),
            fmt_f64(report.diam_est[i]),
            flag(report.regular[i]).to_string(),
            flag(report.touches_boundary[i]).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Raster labels as little-endian `u32`, axis 0 fastest, no header.
pub fn write_raster_labels<W: Write>(raster: &VoronoiRaster, w: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(w);
    for &l in raster.labels() {
        w.write_all(&l.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_raster_labels<R: Read>(mut r: R) -> Result<Vec<u32>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Parse { line: 0, msg: format!("raster dump length {} is not a multiple of 4", bytes.len()) });
    }
    Ok(bytes.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

/// The smallest partition at scale `s` holding every box in `ids`.
pub fn bounding_partition(s: f64, dim: usize, ids: impl IntoIterator<Item = BoxId>) -> Result<LatticePartition> {
    let mut lo = [i64::MAX; MAX_DIM];
    let mut hi = [i64::MIN; MAX_DIM];
    let mut any = false;
    for id in ids {
        any = true;
        for k in 0..dim {
            lo[k] = lo[k].min(id.0[k]);
            hi[k] = hi[k].max(id.0[k]);
        }
    }
    if !any {
        return Err(Error::EmptyDomain);
    }
    LatticePartition::from_ranges(s, dim, &lo[..dim], &hi[..dim])
}
