//! TSPLIB instance ingestion, distance metrics, tour evaluation, and random
//! instance generation.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{QacoError, Result};

/// Distance convention for an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Metric {
    /// TSPLIB Euclidean distance, rounded to nearest integer.
    Euc2d,
    /// TSPLIB geographical distance (degrees.minutes coordinates, earth radius 6378.388).
    Geo,
    /// Plain unrounded Euclidean distance on the coordinates as printed.
    RawEuclidean,
    /// Distances read from an explicit matrix.
    Explicit,
}

/// A (symmetric) TSP instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TspInstance {
    pub name: String,
    pub dimension: usize,
    pub metric: Metric,
    /// Present for coordinate metrics, and for EXPLICIT instances that carry
    /// display coordinates (needed for clustering).
    pub coords: Option<Vec<(f64, f64)>>,
    /// Full matrix, row-major, for EXPLICIT instances.
    pub matrix: Option<Vec<f64>>,
}

/// A closed tour as a permutation of city indices.
pub type Tour = Vec<usize>;

impl TspInstance {
    pub fn from_coords(name: &str, coords: Vec<(f64, f64)>, metric: Metric) -> Result<Self> {
        if metric == Metric::Explicit {
            return Err(QacoError::Usage(
                "explicit metric requires a matrix".into(),
            ));
        }
        Ok(TspInstance {
            name: name.to_string(),
            dimension: coords.len(),
            metric,
            coords: Some(coords),
            matrix: None,
        })
    }

    /// Reinterpret the instance under a different coordinate metric.
    pub fn with_metric(&self, metric: Metric) -> Result<Self> {
        if metric == Metric::Explicit && self.matrix.is_none() {
            return Err(QacoError::Config(format!(
                "instance {} has no explicit matrix",
                self.name
            )));
        }
        if metric != Metric::Explicit && self.coords.is_none() {
            return Err(QacoError::Config(format!(
                "instance {} has no coordinates",
                self.name
            )));
        }
        let mut out = self.clone();
        out.metric = metric;
        Ok(out)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dimension && j < self.dimension, "city index out of range");
        if i == j {
            return 0.0;
        }
        match self.metric {
            Metric::Explicit => {
                let m = self.matrix.as_ref().expect("explicit instance has matrix");
                m[i * self.dimension + j]
            }
            Metric::RawEuclidean => {
                let c = self.coords.as_ref().expect("coordinate instance");
                let (dx, dy) = (c[i].0 - c[j].0, c[i].1 - c[j].1);
                (dx * dx + dy * dy).sqrt()
            }
            Metric::Euc2d => {
                let c = self.coords.as_ref().expect("coordinate instance");
                let (dx, dy) = (c[i].0 - c[j].0, c[i].1 - c[j].1);
                (dx * dx + dy * dy).sqrt().round()
            }
            Metric::Geo => {
                let c = self.coords.as_ref().expect("coordinate instance");
                geo_distance(c[i], c[j])
            }
        }
    }

    pub fn tour_length(&self, tour: &[usize]) -> f64 {
        assert!(is_permutation(tour, self.dimension), "invalid tour");
        let mut total = 0.0;
        for w in tour.windows(2) {
            total += self.distance(w[0], w[1]);
        }
        total + self.distance(tour[self.dimension - 1], tour[0])
    }

    /// Mean over all distinct edges; used as the scale-free deposit constant.
    pub fn mean_edge_length(&self) -> f64 {
        let n = self.dimension;
        if n < 2 {
            return 1.0;
        }
        let mut sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += self.distance(i, j);
            }
        }
        sum / (n * (n - 1) / 2) as f64
    }

    /// Restriction to a subset of cities; returned instance uses local indices
    /// in the order given.
    pub fn restrict(&self, cities: &[usize]) -> TspInstance {
        let coords = self
            .coords
            .as_ref()
            .map(|c| cities.iter().map(|&i| c[i]).collect());
        let matrix = self.matrix.as_ref().map(|_| {
            let k = cities.len();
            let mut m = vec![0.0; k * k];
            for (a, &i) in cities.iter().enumerate() {
                for (b, &j) in cities.iter().enumerate() {
                    m[a * k + b] = self.distance(i, j);
                }
            }
            m
        });
        TspInstance {
            name: format!("{}-sub{}", self.name, cities.len()),
            dimension: cities.len(),
            metric: self.metric,
            coords,
            matrix,
        }
    }
}

pub fn is_permutation(tour: &[usize], n: usize) -> bool {
    if tour.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &c in tour {
        if c >= n || seen[c] {
            return false;
        }
        seen[c] = true;
    }
    true
}

/// TSPLIB geographical distance between two degree.minute coordinate pairs.
fn geo_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    const PI: f64 = 3.141592;
    const RRR: f64 = 6378.388;
    fn to_radians(x: f64) -> f64 {
        let deg = x.trunc();
        let min = x - deg;
        PI * (deg + 5.0 * min / 3.0) / 180.0
    }
    let (lat1, lon1) = (to_radians(a.0), to_radians(a.1));
    let (lat2, lon2) = (to_radians(b.0), to_radians(b.1));
    let q1 = (lon1 - lon2).cos();
    let q2 = (lat1 - lat2).cos();
    let q3 = (lat1 + lat2).cos();
    (RRR * (0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3)).acos() + 1.0).trunc()
}

/// Uniform random instance in the bounding box, RAW_EUCLIDEAN metric.
pub fn random_instance(n: usize, seed: u64, bbox: (f64, f64)) -> Result<TspInstance> {
    if n < 2 {
        return Err(QacoError::Config(format!("need at least 2 cities, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords: Vec<(f64, f64)> = Vec::with_capacity(n);
    while coords.len() < n {
        let p = (rng.gen_range(0.0..bbox.0), rng.gen_range(0.0..bbox.1));
        // exact collisions would make a degenerate 2-city instance
        if !coords.contains(&p) {
            coords.push(p);
        }
    }
    TspInstance::from_coords(&format!("random-{n}-seed{seed}"), coords, Metric::RawEuclidean)
}

#[derive(Debug, PartialEq)]
enum WeightFormat {
    UpperRow,
    FullMatrix,
}

/// Parse a TSPLIB 95 instance (EUC_2D, GEO, or EXPLICIT with
/// UPPER_ROW / FULL_MATRIX layouts).
pub fn parse_tsplib(text: &str) -> Result<TspInstance> {
    let mut name = String::new();
    let mut dimension: Option<usize> = None;
    let mut weight_type: Option<String> = None;
    let mut weight_format: Option<WeightFormat> = None;
    let mut coords: Option<Vec<(f64, f64)>> = None;
    let mut display: Option<Vec<(f64, f64)>> = None;
    let mut weights: Vec<f64> = Vec::new();
    let mut saw_weights = false;

    let err = |line: usize, message: &str| QacoError::Parse {
        line,
        message: message.to_string(),
    };

    let mut lines = text.lines().enumerate().peekable();
    while let Some((idx, raw)) = lines.next() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some((key, value)) = split_keyword(line) {
            match key.as_str() {
                "NAME" => name = value.to_string(),
                "TYPE" | "COMMENT" | "DISPLAY_DATA_TYPE" => {}
                "DIMENSION" => {
                    dimension = Some(
                        value
                            .parse()
                            .map_err(|_| err(lineno, "DIMENSION is not an integer"))?,
                    );
                }
                "EDGE_WEIGHT_TYPE" => weight_type = Some(value.to_string()),
                "EDGE_WEIGHT_FORMAT" => {
                    weight_format = Some(match value {
                        "UPPER_ROW" => WeightFormat::UpperRow,
                        "FULL_MATRIX" => WeightFormat::FullMatrix,
                        other => {
                            return Err(err(
                                lineno,
                                &format!("unsupported EDGE_WEIGHT_FORMAT {other}"),
                            ))
                        }
                    });
                }
                other => {
                    return Err(err(lineno, &format!("unknown keyword {other}")));
                }
            }
            continue;
        }
        match line {
            "NODE_COORD_SECTION" | "DISPLAY_DATA_SECTION" => {
                let dim = dimension.ok_or_else(|| err(lineno, "DIMENSION missing before coordinate section"))?;
                let mut pts = Vec::with_capacity(dim);
                for _ in 0..dim {
                    let (cidx, craw) = lines
                        .next()
                        .ok_or_else(|| err(lineno, "coordinate section truncated"))?;
                    let parts: Vec<&str> = craw.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(err(cidx + 1, "expected: index x y"));
                    }
                    let x: f64 = parts[1]
                        .parse()
                        .map_err(|_| err(cidx + 1, "bad x coordinate"))?;
                    let y: f64 = parts[2]
                        .parse()
                        .map_err(|_| err(cidx + 1, "bad y coordinate"))?;
                    pts.push((x, y));
                }
                if line == "NODE_COORD_SECTION" {
                    coords = Some(pts);
                } else {
                    display = Some(pts);
                }
            }
            "EDGE_WEIGHT_SECTION" => {
                saw_weights = true;
                while let Some((_, wraw)) = lines.peek() {
                    let t = wraw.trim();
                    if t.is_empty()
                        || t == "EOF"
                        || t.chars().next().is_some_and(|c| c.is_alphabetic())
                    {
                        break;
                    }
                    let (widx, wraw) = lines.next().unwrap();
                    for tok in wraw.split_whitespace() {
                        weights.push(
                            tok.parse()
                                .map_err(|_| err(widx + 1, "bad edge weight"))?,
                        );
                    }
                }
            }
            "EOF" => break,
            other => {
                return Err(err(lineno, &format!("unexpected line: {other}")));
            }
        }
    }

    let dim = dimension.ok_or_else(|| QacoError::Parse {
        line: 0,
        message: "missing required field DIMENSION".into(),
    })?;
    let wt = weight_type.ok_or_else(|| QacoError::Parse {
        line: 0,
        message: "missing required field EDGE_WEIGHT_TYPE".into(),
    })?;

    let (metric, matrix) = match wt.as_str() {
        "EUC_2D" => (Metric::Euc2d, None),
        "GEO" => (Metric::Geo, None),
        "EXPLICIT" => {
            if !saw_weights {
                return Err(QacoError::Parse {
                    line: 0,
                    message: "EXPLICIT instance without EDGE_WEIGHT_SECTION".into(),
                });
            }
            let fmt = weight_format.ok_or_else(|| QacoError::Parse {
                line: 0,
                message: "EXPLICIT instance without EDGE_WEIGHT_FORMAT".into(),
            })?;
            (Metric::Explicit, Some(expand_matrix(&weights, dim, &fmt)?))
        }
        other => {
            return Err(QacoError::Parse {
                line: 0,
                message: format!("unknown EDGE_WEIGHT_TYPE {other}"),
            });
        }
    };

    if metric != Metric::Explicit {
        let c = coords.as_ref().ok_or_else(|| QacoError::Parse {
            line: 0,
            message: "missing NODE_COORD_SECTION".into(),
        })?;
        if c.len() != dim {
            return Err(QacoError::Parse {
                line: 0,
                message: format!("DIMENSION {dim} does not match {} coordinates", c.len()),
            });
        }
    }

    Ok(TspInstance {
        name,
        dimension: dim,
        metric,
        coords: coords.or(display),
        matrix,
    })
}

fn split_keyword(line: &str) -> Option<(String, &str)> {
    let (key, value) = line.split_once(':')?;
    let key = key.trim();
    if key.chars().all(|c| c.is_ascii_uppercase() || c == '_') && !key.is_empty() {
        Some((key.to_string(), value.trim()))
    } else {
        None
    }
}

fn expand_matrix(weights: &[f64], dim: usize, fmt: &WeightFormat) -> Result<Vec<f64>> {
    let mut m = vec![0.0; dim * dim];
    match fmt {
        WeightFormat::FullMatrix => {
            if weights.len() != dim * dim {
                return Err(QacoError::Parse {
                    line: 0,
                    message: format!(
                        "FULL_MATRIX expects {} weights, got {}",
                        dim * dim,
                        weights.len()
                    ),
                });
            }
            m.copy_from_slice(weights);
            // symmetrize check happens implicitly; asymmetric input is out of scope
        }
        WeightFormat::UpperRow => {
            let expect = dim * (dim - 1) / 2;
            if weights.len() != expect {
                return Err(QacoError::Parse {
                    line: 0,
                    message: format!("UPPER_ROW expects {expect} weights, got {}", weights.len()),
                });
            }
            let mut it = weights.iter();
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let w = *it.next().unwrap();
                    m[i * dim + j] = w;
                    m[j * dim + i] = w;
                }
            }
        }
    }
    Ok(m)
}

/// Serialize back to TSPLIB text (inverse of `parse_tsplib` for the supported
/// subset).
pub fn serialize_tsplib(inst: &TspInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME : {}", inst.name);
    let _ = writeln!(out, "TYPE : TSP");
    let _ = writeln!(out, "DIMENSION : {}", inst.dimension);
    let wt = match inst.metric {
        Metric::Euc2d => "EUC_2D",
        Metric::Geo => "GEO",
        Metric::RawEuclidean => "RAW_EUC",
        Metric::Explicit => "EXPLICIT",
    };
    let _ = writeln!(out, "EDGE_WEIGHT_TYPE : {wt}");
    if inst.metric == Metric::Explicit {
        let _ = writeln!(out, "EDGE_WEIGHT_FORMAT : UPPER_ROW");
        let _ = writeln!(out, "EDGE_WEIGHT_SECTION");
        let m = inst.matrix.as_ref().expect("explicit instance has matrix");
        for i in 0..inst.dimension {
            let row: Vec<String> = ((i + 1)..inst.dimension)
                .map(|j| format_weight(m[i * inst.dimension + j]))
                .collect();
            if !row.is_empty() {
                let _ = writeln!(out, " {}", row.join(" "));
            }
        }
        if let Some(coords) = &inst.coords {
            let _ = writeln!(out, "DISPLAY_DATA_SECTION");
            for (i, (x, y)) in coords.iter().enumerate() {
                let _ = writeln!(out, " {} {} {}", i + 1, x, y);
            }
        }
    } else {
        let _ = writeln!(out, "NODE_COORD_SECTION");
        for (i, (x, y)) in inst.coords.as_ref().expect("coords").iter().enumerate() {
            let _ = writeln!(out, " {} {} {}", i + 1, x, y);
        }
    }
    out.push_str("EOF\n");
    out
}

fn format_weight(w: f64) -> String {
    if w.fract() == 0.0 {
        format!("{}", w as i64)
    } else {
        format!("{w}")
    }
}

/// `serialize_tsplib` writes RAW_EUCLIDEAN as the nonstandard tag RAW_EUC;
/// accept it back on parse for round-tripping.
pub fn parse_tsplib_ext(text: &str) -> Result<TspInstance> {
    match parse_tsplib(text) {
        Err(QacoError::Parse { message, .. }) if message.contains("RAW_EUC") => {
            let swapped = text.replace("EDGE_WEIGHT_TYPE : RAW_EUC", "EDGE_WEIGHT_TYPE : EUC_2D");
            let mut inst = parse_tsplib(&swapped)?;
            inst.metric = Metric::RawEuclidean;
            Ok(inst)
        }
        other => other,
    }
}

/// Tour report format: `NAME LENGTH` then the 0-based order, one city per line.
pub fn format_tour(name: &str, length: f64, tour: &[usize]) -> String {
    let mut out = format!("{name} {length}\n");
    for c in tour {
        let _ = writeln!(out, "{c}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const SQUARE: [(f64, f64); 4] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];

    #[test]
    fn raw_euclidean_345() {
        let inst =
            TspInstance::from_coords("t", vec![(0.0, 0.0), (3.0, 4.0)], Metric::RawEuclidean)
                .unwrap();
        assert_abs_diff_eq!(inst.distance(0, 1), 5.0);
        assert_abs_diff_eq!(inst.distance(1, 0), 5.0);
        assert_abs_diff_eq!(inst.distance(0, 0), 0.0);
    }

    #[test]
    fn euc2d_rounds() {
        let inst =
            TspInstance::from_coords("t", vec![(0.0, 0.0), (3.0, 4.0), (1.0, 1.0)], Metric::Euc2d)
                .unwrap();
        assert_abs_diff_eq!(inst.distance(0, 1), 5.0);
        // sqrt(2) rounds to 1
        assert_abs_diff_eq!(inst.distance(0, 2), 1.0);
    }

    /// Independent rendering of the TSPLIB GEO recipe, kept deliberately
    /// separate from the implementation path.
    fn geo_oracle(a: (f64, f64), b: (f64, f64)) -> f64 {
        let pi = 3.141592_f64;
        let conv = |x: f64| {
            let deg = f64::trunc(x);
            pi * (deg + 5.0 * (x - deg) / 3.0) / 180.0
        };
        let (la1, lo1, la2, lo2) = (conv(a.0), conv(a.1), conv(b.0), conv(b.1));
        let q1 = f64::cos(lo1 - lo2);
        let q2 = f64::cos(la1 - la2);
        let q3 = f64::cos(la1 + la2);
        f64::floor(6378.388 * f64::acos(0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3)) + 1.0)
    }

    #[test]
    fn geo_matches_oracle() {
        // first two ulysses16 cities
        let a = (38.24, 20.42);
        let b = (39.57, 26.15);
        let inst = TspInstance::from_coords("t", vec![a, b], Metric::Geo).unwrap();
        assert_abs_diff_eq!(inst.distance(0, 1), geo_oracle(a, b), epsilon = 1e-9);
    }

    #[test]
    fn tour_length_square() {
        let inst = TspInstance::from_coords("sq", SQUARE.to_vec(), Metric::RawEuclidean).unwrap();
        assert_abs_diff_eq!(inst.tour_length(&[0, 1, 2, 3]), 4.0);
    }

    #[test]
    fn tour_length_two_cities() {
        let inst =
            TspInstance::from_coords("t", vec![(0.0, 0.0), (3.0, 4.0)], Metric::RawEuclidean)
                .unwrap();
        assert_abs_diff_eq!(inst.tour_length(&[0, 1]), 10.0);
    }

    #[test]
    fn tour_length_rotation_and_reversal_invariant() {
        let inst = random_instance(7, 3, (100.0, 100.0)).unwrap();
        let tour = vec![3, 1, 6, 0, 2, 5, 4];
        let base = inst.tour_length(&tour);
        let rotated: Vec<usize> = tour.iter().cycle().skip(3).take(7).copied().collect();
        let reversed: Vec<usize> = tour.iter().rev().copied().collect();
        assert_abs_diff_eq!(inst.tour_length(&rotated), base, epsilon = 1e-9);
        assert_abs_diff_eq!(inst.tour_length(&reversed), base, epsilon = 1e-9);
    }

    #[test]
    fn parse_ulysses16_fixture() {
        let text = include_str!("../fixtures/ulysses16.tsp");
        let inst = parse_tsplib(text).unwrap();
        assert_eq!(inst.dimension, 16);
        assert_eq!(inst.metric, Metric::Geo);
        assert_eq!(inst.coords.as_ref().unwrap().len(), 16);
    }

    #[test]
    fn parse_bayg29_fixture() {
        let text = include_str!("../fixtures/bayg29.tsp");
        let inst = parse_tsplib(text).unwrap();
        assert_eq!(inst.dimension, 29);
        assert_eq!(inst.metric, Metric::Explicit);
        let m = inst.matrix.as_ref().unwrap();
        for i in 0..29 {
            assert_eq!(m[i * 29 + i], 0.0);
            for j in 0..29 {
                assert_eq!(m[i * 29 + j], m[j * 29 + i]);
            }
        }
        // display coordinates are available for clustering
        assert_eq!(inst.coords.as_ref().unwrap().len(), 29);
    }

    #[test]
    fn parse_missing_dimension() {
        let text = "NAME : broken\nEDGE_WEIGHT_TYPE : EUC_2D\nEOF\n";
        let e = parse_tsplib(text).unwrap_err();
        assert!(e.to_string().contains("DIMENSION"), "{e}");
    }

    #[test]
    fn parse_dimension_mismatch() {
        let text = "NAME : t\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 1 1\nEOF\n";
        assert!(parse_tsplib(text).is_err());
    }

    #[test]
    fn parse_unknown_weight_type() {
        let text = "NAME : t\nDIMENSION : 2\nEDGE_WEIGHT_TYPE : ATT\nNODE_COORD_SECTION\n1 0 0\n2 1 1\nEOF\n";
        let e = parse_tsplib(text).unwrap_err();
        assert!(e.to_string().contains("ATT"));
    }

    #[test]
    fn random_instance_deterministic() {
        let a = random_instance(64, 9, (1000.0, 1000.0)).unwrap();
        let b = random_instance(64, 9, (1000.0, 1000.0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dimension, 64);
        for (x, y) in a.coords.as_ref().unwrap() {
            assert!((0.0..=1000.0).contains(x) && (0.0..=1000.0).contains(y));
        }
    }

    #[test]
    fn random_instance_two_distinct() {
        let a = random_instance(2, 1, (10.0, 10.0)).unwrap();
        let c = a.coords.unwrap();
        assert_ne!(c[0], c[1]);
    }

    #[test]
    fn roundtrip_serialize_parse() {
        for inst in [
            random_instance(10, 4, (100.0, 100.0)).unwrap(),
            parse_tsplib(include_str!("../fixtures/ulysses16.tsp")).unwrap(),
            parse_tsplib(include_str!("../fixtures/bayg29.tsp")).unwrap(),
        ] {
            let text = serialize_tsplib(&inst);
            let back = parse_tsplib_ext(&text).unwrap();
            assert_eq!(inst.dimension, back.dimension);
            assert_eq!(inst.metric, back.metric);
            assert_eq!(inst.matrix, back.matrix);
            assert_eq!(inst.coords, back.coords);
        }
    }
}
