//! Element batches in element-major or lane-interleaved storage.
//!
//! With `W` the lane width and `DS` the per-element datum count, datum `d`
//! of element `e` lives at
//!
//! * element-major: `e·DS + d`
//! * lane-interleaved: `(e/W)·W·DS + d·W + e mod W`
//!
//! Interleaved arrays are padded to a whole number of `W`-element blocks.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::ElementGeometry;
use crate::kernels::{CoefficientSet, ProblemClass};
use crate::refelem::ElementType;

/// Fill value for padded slots. NaN in debug builds so stray reads poison
/// the output.
pub const PAD: f64 = if cfg!(debug_assertions) { f64::NAN } else { 0.0 };

pub const LANE_WIDTHS: [usize; 6] = [1, 4, 8, 16, 32, 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    ElementMajor,
    LaneInterleaved,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::ElementMajor, Scheme::LaneInterleaved];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::ElementMajor => "major",
            Scheme::LaneInterleaved => "interleaved",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "major" | "element-major" => Ok(Scheme::ElementMajor),
            "interleaved" | "lane-interleaved" => Ok(Scheme::LaneInterleaved),
            other => Err(Error::Parse(format!("unknown layout '{other}'"))),
        }
    }
}

/// Storage scheme plus lane width. The width only affects placement for
/// the interleaved scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BatchLayout {
    pub scheme: Scheme,
    pub lane_width: usize,
}

/// Output arrays use the same two schemes with `DS = N_S² + N_S`.
pub type OutputLayout = BatchLayout;

impl BatchLayout {
    pub fn new(scheme: Scheme, lane_width: usize) -> Result<Self> {
        if !LANE_WIDTHS.contains(&lane_width) {
            return Err(Error::InvalidLaneWidth(lane_width));
        }
        Ok(BatchLayout { scheme, lane_width })
    }

    pub const fn element_major() -> Self {
        BatchLayout { scheme: Scheme::ElementMajor, lane_width: 1 }
    }

    pub fn interleaved(lane_width: usize) -> Result<Self> {
        Self::new(Scheme::LaneInterleaved, lane_width)
    }

    /// Elements per storage block.
    #[inline]
    pub fn block_len(self) -> usize {
        match self.scheme {
            Scheme::ElementMajor => 1,
            Scheme::LaneInterleaved => self.lane_width,
        }
    }

    /// Element slots allocated for `n` elements.
    pub fn padded_len(self, n: usize) -> usize {
        n.div_ceil(self.block_len()) * self.block_len()
    }

    #[inline(always)]
    pub fn index(self, e: usize, d: usize, ds: usize) -> usize {
        match self.scheme {
            Scheme::ElementMajor => e * ds + d,
            Scheme::LaneInterleaved => {
                let w = self.lane_width;
                (e / w) * w * ds + d * w + e % w
            }
        }
    }
}

impl fmt::Display for BatchLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.scheme {
            Scheme::ElementMajor => f.write_str("major"),
            Scheme::LaneInterleaved => write!(f, "interleaved/{}", self.lane_width),
        }
    }
}

/// Geometry and coefficients of `n_elements` elements of one type and
/// problem class.
#[derive(Debug, Clone)]
pub struct ElementBatch {
    element: ElementType,
    problem: ProblemClass,
    n_elements: usize,
    layout: BatchLayout,
    geometry_data: Vec<f64>,
    coefficient_data: Vec<f64>,
}

fn scatter(src: &[f64], n: usize, ds: usize, layout: BatchLayout) -> Vec<f64> {
    let mut out = vec![PAD; layout.padded_len(n) * ds];
    for e in 0..n {
        for d in 0..ds {
            out[layout.index(e, d, ds)] = src[e * ds + d];
        }
    }
    out
}

impl ElementBatch {
    pub fn build(elements: &[(ElementGeometry, CoefficientSet)], layout: BatchLayout) -> Result<Self> {
        let (first_geom, first_coeff) = elements.first().ok_or(Error::EmptyBatch)?;
        let element = first_geom.element;
        let problem = first_coeff.problem();
        let mut geometry = Vec::with_capacity(elements.len() * element.geometry_len());
        let mut coefficients = Vec::with_capacity(elements.len() * problem.coefficient_len(element));
        for (index, (g, c)) in elements.iter().enumerate() {
            if g.element != element || c.problem() != problem {
                return Err(Error::HeterogeneousBatch { index });
            }
            if g.coords.len() != element.num_vertices() {
                return Err(Error::ShapeMismatch {
                    what: "element vertices",
                    expected: element.num_vertices(),
                    found: g.coords.len(),
                });
            }
            c.check(element)?;
            geometry.extend(g.coords.iter().flatten());
            coefficients.extend(c.flat());
        }
        Self::from_element_major(element, problem, layout, &geometry, &coefficients)
    }

    /// Lay out flat element-major arrays (no padding) in `layout`.
    pub fn from_element_major(
        element: ElementType,
        problem: ProblemClass,
        layout: BatchLayout,
        geometry: &[f64],
        coefficients: &[f64],
    ) -> Result<Self> {
        let gs = element.geometry_len();
        let cs = problem.coefficient_len(element);
        if !geometry.len().is_multiple_of(gs) {
            return Err(Error::ShapeMismatch { what: "geometry data", expected: gs, found: geometry.len() % gs });
        }
        let n = geometry.len() / gs;
        if coefficients.len() != n * cs {
            return Err(Error::ShapeMismatch { what: "coefficient data", expected: n * cs, found: coefficients.len() });
        }
        Ok(ElementBatch {
            element,
            problem,
            n_elements: n,
            layout,
            geometry_data: scatter(geometry, n, gs, layout),
            coefficient_data: scatter(coefficients, n, cs, layout),
        })
    }

    pub fn element(&self) -> ElementType {
        self.element
    }

    pub fn problem(&self) -> ProblemClass {
        self.problem
    }

    pub fn len(&self) -> usize {
        self.n_elements
    }

    pub fn is_empty(&self) -> bool {
        self.n_elements == 0
    }

    pub fn layout(&self) -> BatchLayout {
        self.layout
    }

    pub fn geometry_data(&self) -> &[f64] {
        &self.geometry_data
    }

    pub fn coefficient_data(&self) -> &[f64] {
        &self.coefficient_data
    }

    pub fn geometry_stride(&self) -> usize {
        self.element.geometry_len()
    }

    pub fn coefficient_stride(&self) -> usize {
        self.problem.coefficient_len(self.element)
    }

    #[inline(always)]
    pub(crate) fn geometry_at(&self, e: usize, d: usize) -> f64 {
        self.geometry_data[self.layout.index(e, d, self.element.geometry_len())]
    }

    #[inline(always)]
    pub(crate) fn coefficient_at(&self, e: usize, d: usize) -> f64 {
        self.coefficient_data[self.layout.index(e, d, self.coefficient_stride())]
    }

    fn gather(&self, data: &[f64], ds: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_elements * ds);
        for e in 0..self.n_elements {
            out.extend((0..ds).map(|d| data[self.layout.index(e, d, ds)]));
        }
        out
    }

    /// Element-major copies of both arrays, without padding.
    pub fn to_element_major(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.gather(&self.geometry_data, self.geometry_stride()),
            self.gather(&self.coefficient_data, self.coefficient_stride()),
        )
    }

    pub fn convert(&self, to: BatchLayout) -> ElementBatch {
        if to == self.layout {
            return self.clone();
        }
        let (g, c) = self.to_element_major();
        Self::from_element_major(self.element, self.problem, to, &g, &c).expect("sizes preserved by conversion")
    }

    pub fn extract(&self, e: usize) -> Result<(ElementGeometry, CoefficientSet)> {
        if e >= self.n_elements {
            return Err(Error::IndexOutOfRange { index: e, len: self.n_elements });
        }
        let g: Vec<f64> = (0..self.geometry_stride()).map(|d| self.geometry_at(e, d)).collect();
        let c: Vec<f64> = (0..self.coefficient_stride()).map(|d| self.coefficient_at(e, d)).collect();
        Ok((ElementGeometry::from_flat(self.element, &g)?, CoefficientSet::from_flat(self.problem, self.element, &c)?))
    }

    /// Keep the first `n` elements.
    pub fn truncate(&self, n: usize) -> ElementBatch {
        if n >= self.n_elements {
            return self.clone();
        }
        let (g, c) = self.to_element_major();
        Self::from_element_major(
            self.element,
            self.problem,
            self.layout,
            &g[..n * self.geometry_stride()],
            &c[..n * self.coefficient_stride()],
        )
        .expect("prefix of a valid batch")
    }
}

const MAGIC: &[u8; 4] = b"FEKB";
const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

fn element_code(e: ElementType) -> u8 {
    match e {
        ElementType::Tetrahedron => 0,
        ElementType::Prism => 1,
    }
}

fn problem_code(p: ProblemClass) -> u8 {
    match p {
        ProblemClass::Poisson => 0,
        ProblemClass::ConvDiff => 1,
    }
}

fn scheme_code(s: Scheme) -> u8 {
    match s {
        Scheme::ElementMajor => 0,
        Scheme::LaneInterleaved => 1,
    }
}

impl ElementBatch {
    /// Binary batch file: a 32-byte header followed by the stored geometry
    /// and coefficient arrays (padding included) as little-endian `f64`.
    ///
    /// ```text
    /// 0..4   "FEKB"
    /// 4..8   version (u32)
    /// 8      element type (0 tet, 1 prism)
    /// 9      problem (0 Poisson, 1 conv-diff)
    /// 10     layout (0 element-major, 1 lane-interleaved)
    /// 11     reserved
    /// 12..16 lane width (u32)
    /// 16..24 element count (u64)
    /// 24..32 reserved
    /// ```
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = [0u8; HEADER_LEN];
        header[0..4].copy_from_slice(MAGIC);
        header[4..8].copy_from_slice(&VERSION.to_le_bytes());
        header[8] = element_code(self.element);
        header[9] = problem_code(self.problem);
        header[10] = scheme_code(self.layout.scheme);
        header[12..16].copy_from_slice(&(self.layout.lane_width as u32).to_le_bytes());
        header[16..24].copy_from_slice(&(self.n_elements as u64).to_le_bytes());
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(8 * (self.geometry_data.len() + self.coefficient_data.len()));
        for v in self.geometry_data.iter().chain(&self.coefficient_data) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header).map_err(|_| Error::Format("truncated header".into()))?;
        if &header[0..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let element = match header[8] {
            0 => ElementType::Tetrahedron,
            1 => ElementType::Prism,
            c => return Err(Error::Format(format!("bad element type code {c}"))),
        };
        let problem = match header[9] {
            0 => ProblemClass::Poisson,
            1 => ProblemClass::ConvDiff,
            c => return Err(Error::Format(format!("bad problem code {c}"))),
        };
        let scheme = match header[10] {
            0 => Scheme::ElementMajor,
            1 => Scheme::LaneInterleaved,
            c => return Err(Error::Format(format!("bad layout code {c}"))),
        };
        let lane_width = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
        let layout = BatchLayout::new(scheme, lane_width)?;
        let n = usize::try_from(u64::from_le_bytes(header[16..24].try_into().unwrap()))
            .map_err(|_| Error::Format("element count overflows".into()))?;
        let slots = layout.padded_len(n);
        let glen = slots * element.geometry_len();
        let clen = slots * problem.coefficient_len(element);
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * (glen + clen) {
            return Err(Error::Format(format!("payload is {} bytes, expected {}", bytes.len(), 8 * (glen + clen))));
        }
        let mut values = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()));
        let geometry_data: Vec<f64> = values.by_ref().take(glen).collect();
        let coefficient_data: Vec<f64> = values.collect();
        Ok(ElementBatch { element, problem, n_elements: n, layout, geometry_data, coefficient_data })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}
