//! Cell-centred radial meshes on `[0, R]` carrying the measure of the ball
//! `B_R` in `N` dimensions, and the fields that live on them.
//!
//! Radial integrals are normalised so that `int_Omega f = omega_N int_0^R
//! r^(N-1) f(r) dr`, with `omega_N` the surface measure of the unit sphere.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Surface measure of the unit sphere in `R^N`: `2 pi^(N/2) / Gamma(N/2)`.
pub fn sphere_measure(dim: usize) -> f64 {
    use std::f64::consts::PI;
    assert!(dim >= 1);
    // omega_1 = 2, omega_2 = 2 pi, omega_{N+2} = 2 pi omega_N / N
    let mut w = if dim % 2 == 1 { 2.0 } else { 2.0 * PI };
    let mut n = if dim % 2 == 1 { 1 } else { 2 };
    while n < dim {
        w *= 2.0 * PI / n as f64;
        n += 2;
    }
    w
}

/// Volume of `B_R` in `R^N`.
pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    sphere_measure(dim) * radius.powi(dim as i32) / dim as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: usize,
    radius: f64,
    faces: Vec<f64>,
    centers: Vec<f64>,
    volumes: Vec<f64>,
    /// `omega_N r^(N-1)` at every face, including `r = 0` and `r = R`.
    areas: Vec<f64>,
    /// Distance between neighbouring centres, indexed by interior face `1..n`.
    spacing: Vec<f64>,
}

impl RadialGrid {
    pub fn uniform(dim: usize, radius: f64, n_cells: usize) -> Result<Self> {
        Self::from_widths(dim, radius, vec![1.0; n_cells])
    }

    /// Cell widths shrink geometrically towards the origin: each cell is
    /// `ratio` times the width of its outer neighbour. `ratio = 1` is uniform.
    pub fn geometric(dim: usize, radius: f64, n_cells: usize, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "refinement ratio must lie in (0, 1], got {ratio}"
            )));
        }
        let widths = (0..n_cells)
            .map(|i| ratio.powi((n_cells - 1 - i) as i32))
            .collect();
        Self::from_widths(dim, radius, widths)
    }

    /// Geometric grid whose innermost cell has width `finest` (or the uniform
    /// grid, if that is already fine enough).
    pub fn refined(dim: usize, radius: f64, n_cells: usize, finest: f64) -> Result<Self> {
        if !(finest > 0.0) {
            return Err(Error::InvalidParams(format!("finest width must be positive, got {finest}")));
        }
        if n_cells == 0 || finest * n_cells as f64 >= radius {
            return Self::uniform(dim, radius, n_cells);
        }
        // innermost / total as a function of the ratio is monotone: bisect.
        let target = finest / radius;
        let inner_fraction = |ratio: f64| {
            let (mut total, mut w) = (0.0, 1.0);
            for _ in 0..n_cells {
                total += w;
                w /= ratio;
            }
            1.0 / total
        };
        let (mut lo, mut hi) = (1e-3f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if inner_fraction(mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Self::geometric(dim, radius, n_cells, lo)
    }

    fn from_widths(dim: usize, radius: f64, widths: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParams("dimension must be positive".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParams(format!("radius must be positive, got {radius}")));
        }
        let n = widths.len();
        if n == 0 {
            return Err(Error::InvalidParams("grid needs at least one cell".into()));
        }
        let total: f64 = widths.iter().sum();
        let mut faces = Vec::with_capacity(n + 1);
        faces.push(0.0);
        let mut acc = 0.0;
        for w in &widths {
            acc += w;
            faces.push(radius * acc / total);
        }
        faces[n] = radius;
        if faces.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParams("grid cells collapsed to zero width".into()));
        }
        let omega = sphere_measure(dim);
        let d = dim as f64;
        let centers: Vec<f64> = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let volumes = faces
            .windows(2)
            .map(|w| omega * (w[1].powi(dim as i32) - w[0].powi(dim as i32)) / d)
            .collect();
        let areas = faces.iter().map(|&r| omega * r.powi(dim as i32 - 1)).collect();
        let mut spacing = vec![0.0; n + 1];
        for f in 1..n {
            spacing[f] = centers[f] - centers[f - 1];
        }
        Ok(RadialGrid {
            dim,
            radius,
            faces,
            centers,
            volumes,
            areas,
            spacing,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn len(&self) -> usize {
        self.centers.len()
    }
    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
    pub fn faces(&self) -> &[f64] {
        &self.faces
    }
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }
    pub fn face_areas(&self) -> &[f64] {
        &self.areas
    }
    /// Centre-to-centre distance across interior face `f` (`1 <= f < n`).
    pub fn spacing(&self, f: usize) -> f64 {
        self.spacing[f]
    }
    pub fn width(&self, i: usize) -> f64 {
        self.faces[i + 1] - self.faces[i]
    }
    pub fn finest_width(&self) -> f64 {
        (0..self.len()).map(|i| self.width(i)).fold(f64::INFINITY, f64::min)
    }
    pub fn coarsest_width(&self) -> f64 {
        (0..self.len()).map(|i| self.width(i)).fold(0.0, f64::max)
    }
    pub fn volume(&self) -> f64 {
        ball_volume(self.dim, self.radius)
    }

    /// `int_Omega f`, second order for smooth `f`.
    pub fn integrate(&self, f: &RadialField) -> Result<f64> {
        if !f.is_on(self) {
            return Err(Error::GridMismatch);
        }
        Ok(self.volumes.iter().zip(&f.values).map(|(v, x)| v * x).sum())
    }

    /// `int_Omega g` for a face-centred quantity, using the dual cells of the
    /// interior faces (`area * centre spacing`).
    pub fn integrate_faces(&self, g: &FaceField) -> f64 {
        (1..self.len())
            .map(|f| self.areas[f] * self.spacing[f] * g.values[f])
            .sum()
    }

    pub fn lp_norm(&self, f: &RadialField, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("L^p norm needs p >= 1, got {p}")));
        }
        if !f.is_on(self) {
            return Err(Error::GridMismatch);
        }
        let s: f64 = self
            .volumes
            .iter()
            .zip(&f.values)
            .map(|(v, x)| v * x.abs().powf(p))
            .sum();
        Ok(s.powf(1.0 / p))
    }

    /// Centred differences at interior faces; zero at `r = 0` and `r = R`.
    pub fn radial_derivative(&self, f: &RadialField) -> Result<FaceField> {
        if !f.is_on(self) {
            return Err(Error::GridMismatch);
        }
        let n = self.len();
        let mut values = vec![0.0; n + 1];
        for face in 1..n {
            values[face] = (f.values[face] - f.values[face - 1]) / self.spacing[face];
        }
        Ok(FaceField { values })
    }
}

/// Values at the `n + 1` faces of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    pub values: Vec<f64>,
}

/// A radial function sampled at the cell centres of a grid.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl PartialEq for RadialField {
    fn eq(&self, other: &Self) -> bool {
        self.same_grid(other) && self.values == other.values
    }
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParams(format!(
                "field has {} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value {} in cell {i}", values[i])));
        }
        Ok(RadialField { grid, values })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.centers().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<RadialGrid>, c: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![c; n])
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        RadialField {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn is_on(&self, grid: &RadialGrid) -> bool {
        std::ptr::eq(&*self.grid, grid) || *self.grid == *grid
    }

    pub fn same_grid(&self, other: &RadialField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(self).expect("field is on its own grid")
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&x| f(x)).collect())
    }

    pub fn zip_with(&self, other: &RadialField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Self::new(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    /// `int_Omega f g`.
    pub fn inner(&self, other: &RadialField) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .grid
            .volumes()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(v, (a, b))| v * a * b)
            .sum())
    }

    /// CSV with header `r,value` and 17 significant digits per number.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "value"])?;
        for (r, v) in self.grid.centers().iter().zip(&self.values) {
            w.write_record([format_float(*r), format_float(*v)])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads a field written by [`RadialField::write_csv`]; the `r` column must
    /// match the grid centres.
    pub fn read_csv<R: Read>(grid: Arc<RadialGrid>, input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "r" || &headers[1] != "value" {
            return Err(Error::Config(format!("expected header `r,value`, found {headers:?}")));
        }
        let mut values = Vec::with_capacity(grid.len());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("row {i}: cannot parse `{s}`: {e}")))
            };
            let r = parse(&rec[0])?;
            let v = parse(&rec[1])?;
            match grid.centers().get(i) {
                Some(&c) if (c - r).abs() <= 1e-12 * grid.radius() => values.push(v),
                Some(&c) => {
                    return Err(Error::Config(format!(
                        "row {i}: r = {r} does not match grid centre {c}"
                    )))
                }
                None => return Err(Error::Config("more rows than grid cells".into())),
            }
        }
        Self::new(grid, values)
    }
}

/// 17 significant digits: enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}
