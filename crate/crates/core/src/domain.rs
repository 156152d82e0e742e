//! Discretizations of the compact domain Ω.
//!
//! Grids are uniform: `x_i = lo + i·h` with `h = (hi - lo)/(n - 1)`, so each
//! sample is the centre of its dual cell and both box endpoints are sampled.
//! Any point of the box lies within `h/2` (per axis) of a sample.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::rational::{format_rational, parse_rational, to_exact_decimal, Rational};

pub const METRIC_TOLERANCE: f64 = 1e-12;
const MAX_GRID_POINTS: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("bad domain descriptor {text:?}: {reason}")]
    Descriptor { text: String, reason: String },
    #[error("grid needs lo < hi and at least 2 points per axis")]
    DegenerateGrid,
    #[error("grid has too many samples ({0})")]
    TooLarge(usize),
    #[error("finite metric space: {0}")]
    Metric(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub lo: Rational,
    pub hi: Rational,
    pub points: usize,
    coords: Vec<f64>,
}

impl GridAxis {
    pub fn new(lo: Rational, hi: Rational, points: usize) -> Result<Self, DomainError> {
        if points < 2 || lo >= hi {
            return Err(DomainError::DegenerateGrid);
        }
        // Node i is (a*m + i*(c-a)) / (b*m) over the common denominator of
        // lo = a/b, hi = c/b, with m = points - 1.
        let den = lo.denom().lcm(hi.denom());
        let a = lo.numer() * (&den / lo.denom());
        let c = hi.numer() * (&den / hi.denom());
        let m = BigInt::from(points - 1);
        let total = &den * &m;
        let delta = c - &a;
        let base = a * &m;
        let coords = (0..points)
            .into_par_iter()
            .map(|i| node_to_f64(&base + &delta * BigInt::from(i), &total))
            .collect::<Vec<_>>();
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(DomainError::DegenerateGrid);
        }
        Ok(Self { lo, hi, points, coords })
    }

    pub fn mesh_exact(&self) -> Rational {
        (&self.hi - &self.lo) / BigInt::from(self.points - 1)
    }

    pub fn mesh(&self) -> f64 {
        self.mesh_exact().to_f64().unwrap_or(f64::NAN)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn lo_f64(&self) -> f64 {
        self.coords[0]
    }

    pub fn hi_f64(&self) -> f64 {
        self.coords[self.points - 1]
    }

    /// Same box, mesh halved.
    pub fn refined(&self) -> Self {
        Self::new(self.lo.clone(), self.hi.clone(), 2 * self.points - 1).expect("refinement of a valid axis")
    }
}

/// Correctly rounded `num / den` for `den > 0`.
fn node_to_f64(num: BigInt, den: &BigInt) -> f64 {
    const EXACT: i64 = 1 << 53;
    if let (Some(n), Some(d)) = (num.to_i64(), den.to_i64()) {
        if n.abs() <= EXACT && d <= EXACT {
            // Both operands are exact doubles; IEEE division rounds once.
            return n as f64 / d as f64;
        }
    }
    Rational::new_raw(num, den.clone()).to_f64().unwrap_or(f64::NAN)
}

/// Box grid in one or two dimensions; samples are row-major with the first
/// axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<GridAxis>,
}

impl Grid {
    pub fn new(axes: Vec<GridAxis>) -> Result<Self, DomainError> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(DomainError::DegenerateGrid);
        }
        let total = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.points));
        match total {
            Some(t) if t <= MAX_GRID_POINTS => Ok(Self { axes }),
            Some(t) => Err(DomainError::TooLarge(t)),
            None => Err(DomainError::TooLarge(usize::MAX)),
        }
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest per-axis mesh.
    pub fn mesh(&self) -> f64 {
        self.axes.iter().map(GridAxis::mesh).fold(0.0, f64::max)
    }

    pub fn min_mesh(&self) -> f64 {
        self.axes.iter().map(GridAxis::mesh).fold(f64::INFINITY, f64::min)
    }

    pub fn index_of(&self, multi: &[usize]) -> usize {
        match multi {
            [i] => *i,
            [i, j] => j * self.axes[0].points + i,
            _ => unreachable!("grids are 1D or 2D"),
        }
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        match self.axes.len() {
            1 => vec![flat],
            _ => {
                let nx = self.axes[0].points;
                vec![flat % nx, flat / nx]
            }
        }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.coords[i])
            .collect()
    }

    pub fn refined(&self) -> Self {
        Self {
            axes: self.axes.iter().map(GridAxis::refined).collect(),
        }
    }

    /// Box centre in coordinates.
    pub fn center(&self) -> Vec<f64> {
        self.axes
            .iter()
            .map(|a| ((&a.lo + &a.hi) / BigInt::from(2)).to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    /// Distance from a point to the complement of the box.
    pub fn distance_to_boundary(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(&self.axes)
            .map(|(&x, a)| (x - a.lo_f64()).min(a.hi_f64() - x))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetric {
    pub labels: Vec<String>,
    pub coords: Vec<Vec<f64>>,
    pub distances: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FiniteMetricFile {
    labels: Option<Vec<String>>,
    coords: Vec<Vec<f64>>,
    distances: Vec<Vec<f64>>,
}

impl FiniteMetric {
    /// Validates a symmetric, zero-diagonal distance matrix satisfying the
    /// triangle inequality within [`METRIC_TOLERANCE`].
    pub fn new(labels: Vec<String>, coords: Vec<Vec<f64>>, distances: Vec<Vec<f64>>) -> Result<Self, DomainError> {
        let n = coords.len();
        let err = |m: String| Err(DomainError::Metric(m));
        if n == 0 {
            return err("no points".into());
        }
        if labels.len() != n {
            return err(format!("{} labels for {n} points", labels.len()));
        }
        let dim = coords[0].len();
        if dim == 0 || coords.iter().any(|c| c.len() != dim) {
            return err("coordinates must share a nonzero dimension".into());
        }
        if coords.iter().flatten().any(|x| !x.is_finite()) {
            return err("coordinates must be finite".into());
        }
        if distances.len() != n || distances.iter().any(|row| row.len() != n) {
            return err(format!("distance matrix must be {n}x{n}"));
        }
        for i in 0..n {
            if distances[i][i] != 0.0 {
                return err(format!("d({i},{i}) must be 0"));
            }
            for j in 0..n {
                let d = distances[i][j];
                if !d.is_finite() || d < 0.0 {
                    return err(format!("d({i},{j}) = {d} is not a nonnegative number"));
                }
                if (d - distances[j][i]).abs() > METRIC_TOLERANCE {
                    return err(format!("d({i},{j}) != d({j},{i})"));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if distances[i][k] > distances[i][j] + distances[j][k] + METRIC_TOLERANCE {
                        return err(format!("triangle inequality fails for ({i},{j},{k})"));
                    }
                }
            }
        }
        Ok(Self {
            labels,
            coords,
            distances,
        })
    }

    /// JSON form: `{"labels": [...], "coords": [[...]], "distances": [[...]]}`;
    /// labels default to the point indices.
    pub fn from_json(text: &str) -> Result<Self, DomainError> {
        let file: FiniteMetricFile =
            serde_json::from_str(text).map_err(|e| DomainError::Metric(e.to_string()))?;
        let labels = file
            .labels
            .unwrap_or_else(|| (0..file.coords.len()).map(|i| i.to_string()).collect());
        Self::new(labels, file.coords, file.distances)
    }

    pub fn to_json(&self) -> Value {
        json!({"labels": self.labels, "coords": self.coords, "distances": self.distances})
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampledDomain {
    Grid(Grid),
    Finite { source: String, metric: FiniteMetric },
}

/// Parsed `--domain` flag; `finite:` paths still have to be loaded.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Grid(Grid),
    FinitePath(String),
}

fn descriptor_error(text: &str, reason: impl Into<String>) -> DomainError {
    DomainError::Descriptor {
        text: text.to_owned(),
        reason: reason.into(),
    }
}

/// `grid1d:<lo>:<hi>:<n>`, `grid2d:<lo>:<hi>:<n>x<m>`, or `finite:<path.json>`.
pub fn parse_domain_spec(text: &str) -> Result<DomainSpec, DomainError> {
    let t = text.trim();
    if let Some(path) = t.strip_prefix("finite:") {
        if path.is_empty() {
            return Err(descriptor_error(text, "missing path"));
        }
        return Ok(DomainSpec::FinitePath(path.to_owned()));
    }
    let parts: Vec<&str> = t.split(':').collect();
    let (kind, rest) = parts.split_first().ok_or_else(|| descriptor_error(text, "empty"))?;
    if rest.len() != 3 {
        return Err(descriptor_error(text, "expected <kind>:<lo>:<hi>:<points>"));
    }
    let lo = parse_rational(rest[0]).map_err(|e| descriptor_error(text, e.to_string()))?;
    let hi = parse_rational(rest[1]).map_err(|e| descriptor_error(text, e.to_string()))?;
    let count = |s: &str| -> Result<usize, DomainError> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| descriptor_error(text, format!("bad point count {s:?}")))
    };
    let axes = match *kind {
        "grid1d" => vec![GridAxis::new(lo, hi, count(rest[2])?)?],
        "grid2d" => {
            let (nx, ny) = rest[2]
                .split_once('x')
                .ok_or_else(|| descriptor_error(text, "grid2d needs <n>x<m>"))?;
            let (nx, ny) = (count(nx)?, count(ny)?);
            if nx.checked_mul(ny).is_none_or(|t| t > MAX_GRID_POINTS) {
                return Err(DomainError::TooLarge(nx.saturating_mul(ny)));
            }
            vec![
                GridAxis::new(lo.clone(), hi.clone(), nx)?,
                GridAxis::new(lo, hi, ny)?,
            ]
        }
        other => return Err(descriptor_error(text, format!("unknown domain kind {other:?}"))),
    };
    if axes.iter().any(|a| a.points > MAX_GRID_POINTS) {
        return Err(DomainError::TooLarge(axes.iter().map(|a| a.points).max().unwrap_or(0)));
    }
    Ok(DomainSpec::Grid(Grid::new(axes)?))
}

impl SampledDomain {
    pub fn grid1d(lo: Rational, hi: Rational, points: usize) -> Result<Self, DomainError> {
        Ok(Self::Grid(Grid::new(vec![GridAxis::new(lo, hi, points)?])?))
    }

    pub fn grid2d(lo: Rational, hi: Rational, nx: usize, ny: usize) -> Result<Self, DomainError> {
        Ok(Self::Grid(Grid::new(vec![
            GridAxis::new(lo.clone(), hi.clone(), nx)?,
            GridAxis::new(lo, hi, ny)?,
        ])?))
    }

    /// Parses a descriptor, reading `finite:` files with `load`.
    pub fn from_descriptor(
        text: &str,
        load: impl FnOnce(&str) -> std::io::Result<String>,
    ) -> Result<Self, DomainError> {
        match parse_domain_spec(text)? {
            DomainSpec::Grid(g) => Ok(Self::Grid(g)),
            DomainSpec::FinitePath(path) => {
                let body = load(&path).map_err(|e| DomainError::Metric(format!("{path}: {e}")))?;
                Ok(Self::Finite {
                    source: path,
                    metric: FiniteMetric::from_json(&body)?,
                })
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Grid(g) => g.len(),
            Self::Finite { metric, .. } => metric.coords.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate dimension (the number of DSL variables).
    pub fn dim(&self) -> usize {
        match self {
            Self::Grid(g) => g.dim(),
            Self::Finite { metric, .. } => metric.coords[0].len(),
        }
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        match self {
            Self::Grid(g) => g.point(i),
            Self::Finite { metric, .. } => metric.coords[i].clone(),
        }
    }

    pub fn as_grid(&self) -> Option<&Grid> {
        match self {
            Self::Grid(g) => Some(g),
            Self::Finite { .. } => None,
        }
    }

    /// Short descriptor in flag syntax.
    pub fn spec(&self) -> String {
        let r = |q: &Rational| to_exact_decimal(q).unwrap_or_else(|| format_rational(q));
        match self {
            Self::Grid(g) => match g.axes() {
                [a] => format!("grid1d:{}:{}:{}", r(&a.lo), r(&a.hi), a.points),
                [a, b] => format!("grid2d:{}:{}:{}x{}", r(&a.lo), r(&a.hi), a.points, b.points),
                _ => unreachable!(),
            },
            Self::Finite { source, .. } => format!("finite:{source}"),
        }
    }

    /// JSON descriptor with exact bounds.
    pub fn descriptor(&self) -> Value {
        match self {
            Self::Grid(g) => json!({
                "kind": if g.dim() == 1 { "grid1d" } else { "grid2d" },
                "bounds": g.axes().iter().map(|a| [format_rational(&a.lo), format_rational(&a.hi)]).collect::<Vec<_>>(),
                "points": g.shape(),
                "mesh": g.axes().iter().map(|a| format_rational(&a.mesh_exact())).collect::<Vec<_>>(),
            }),
            Self::Finite { source, metric } => json!({
                "kind": "finite-metric",
                "source": source,
                "points": metric.coords.len(),
            }),
        }
    }
}

/// Distance between two grid samples in physical units (for tests and
/// brute-force oracles).
pub fn grid_distance(g: &Grid, a: usize, b: usize) -> f64 {
    let (pa, pb) = (g.point(a), g.point(b));
    pa.iter().zip(&pb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn nodes_are_correctly_rounded() {
        let big = parse_rational("123456789012345678901/7").unwrap();
        for (lo, hi, n) in [
            (rat(-1, 3), rat(2, 7), 101),
            (rat(0, 1), rat(3, 1), 1025),
            (rat(1, 10_000_000), rat(1, 1_000_000), 33),
            (-big.clone(), big, 17),
        ] {
            let axis = GridAxis::new(lo.clone(), hi.clone(), n).unwrap();
            let step = (&hi - &lo) / BigInt::from(n - 1);
            for (i, &c) in axis.coords().iter().enumerate() {
                let exact = &lo + &step * BigInt::from(i);
                assert_eq!(c, exact.to_f64().unwrap(), "node {i} of ({lo}, {hi})");
            }
        }
    }

    #[test]
    fn grid1d_descriptor() {
        let d = SampledDomain::from_descriptor("grid1d:0:3:1025", |_| unreachable!()).unwrap();
        let g = d.as_grid().unwrap();
        assert_eq!(d.len(), 1025);
        assert_eq!(g.axes()[0].mesh_exact(), rat(3, 1024));
        assert_eq!(d.point(0), vec![0.0]);
        assert_eq!(d.point(1024), vec![3.0]);
        assert_eq!(d.point(512), vec![1.5]);
        assert_eq!(d.spec(), "grid1d:0:3:1025");
    }

    #[test]
    fn grid2d_is_row_major() {
        let d = SampledDomain::from_descriptor("grid2d:-1:1:5x3", |_| unreachable!()).unwrap();
        assert_eq!(d.len(), 15);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.point(1), vec![-0.5, -1.0]);
        assert_eq!(d.point(5), vec![-1.0, 0.0]);
        let g = d.as_grid().unwrap();
        assert_eq!(g.index_of(&g.multi_index(13)), 13);
        assert_eq!(g.refined().shape(), vec![9, 5]);
    }

    #[test]
    fn bad_descriptors() {
        for t in [
            "",
            "grid1d",
            "grid1d:0:3",
            "grid1d:3:0:10",
            "grid1d:0:3:1",
            "grid2d:0:1:10",
            "grid3d:0:1:3",
            "grid1d:0:1:x",
            "grid2d:0:1:100000x100000",
            "finite:",
        ] {
            assert!(parse_domain_spec(t).is_err(), "{t}");
        }
    }

    #[test]
    fn finite_metric_validation() {
        let ok = r#"{"labels":["a","b","c"],"coords":[[0],[1],[3]],"distances":[[0,1,3],[1,0,2],[3,2,0]]}"#;
        let m = FiniteMetric::from_json(ok).unwrap();
        assert_eq!(m.labels, vec!["a", "b", "c"]);

        let asym = r#"{"coords":[[0],[1]],"distances":[[0,1],[2,0]]}"#;
        assert!(FiniteMetric::from_json(asym).is_err());
        let triangle = r#"{"coords":[[0],[1],[2]],"distances":[[0,1,5],[1,0,1],[5,1,0]]}"#;
        assert!(FiniteMetric::from_json(triangle).is_err());
        let diag = r#"{"coords":[[0]],"distances":[[1]]}"#;
        assert!(FiniteMetric::from_json(diag).is_err());
        assert!(FiniteMetric::from_json("[]").is_err());

        let d = SampledDomain::from_descriptor("finite:pts.json", |_| Ok(ok.to_owned())).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.spec(), "finite:pts.json");
    }

    #[test]
    fn boundary_distance() {
        let g = Grid::new(vec![GridAxis::new(int(0), int(3), 7).unwrap()]).unwrap();
        assert_eq!(g.distance_to_boundary(&[1.0]), 1.0);
        assert_eq!(g.center(), vec![1.5]);
    }
}
