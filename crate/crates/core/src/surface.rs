//! Evaluated grids of break-even `pi` and tagged ASL, for external plotting.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, BreakEven, CollectionParams, TagParams, TermParams};
use crate::numfmt::{sig, MACHINE_DIGITS};

pub const DEFAULT_STEPS: usize = 51;
/// Absolute tolerance for comparing model values.
pub const EQ_TOL: f64 = 1e-12;
/// Lower end of the default `p` axis; `p = 0` has no break-even point.
pub const DEFAULT_P_MIN: f64 = 0.02;

/// Two inclusive linear axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axis1_name: String,
    pub axis1_min: f64,
    pub axis1_max: f64,
    pub axis1_steps: usize,
    pub axis2_name: String,
    pub axis2_min: f64,
    pub axis2_max: f64,
    pub axis2_steps: usize,
}

fn lattice(min: f64, max: f64, steps: usize) -> Vec<f64> {
    let last = (steps - 1) as f64;
    (0..steps)
        .map(|i| {
            if i + 1 == steps {
                max
            } else {
                min + (max - min) * i as f64 / last
            }
        })
        .collect()
}

impl GridSpec {
    pub fn new(axis1: (&str, f64, f64, usize), axis2: (&str, f64, f64, usize)) -> Result<Self> {
        let spec = GridSpec {
            axis1_name: axis1.0.to_string(),
            axis1_min: axis1.1,
            axis1_max: axis1.2,
            axis1_steps: axis1.3,
            axis2_name: axis2.0.to_string(),
            axis2_min: axis2.1,
            axis2_max: axis2.2,
            axis2_steps: axis2.3,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `p` from [`DEFAULT_P_MIN`] to 1 against `tau` from 0 to 1.
    pub fn break_even(steps: usize) -> Result<Self> {
        Self::new(("p", DEFAULT_P_MIN, 1.0, steps), ("tau", 0.0, 1.0, steps))
    }

    /// `tau` against `pi`, both over [0, 1].
    pub fn mesh(steps: usize) -> Result<Self> {
        Self::new(("tau", 0.0, 1.0, steps), ("pi", 0.0, 1.0, steps))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, min, max, steps) in [
            (
                &self.axis1_name,
                self.axis1_min,
                self.axis1_max,
                self.axis1_steps,
            ),
            (
                &self.axis2_name,
                self.axis2_min,
                self.axis2_max,
                self.axis2_steps,
            ),
        ] {
            if steps < 2 {
                return Err(Error::Grid(format!("axis `{name}` needs at least 2 steps")));
            }
            if min.is_nan() || max.is_nan() || min >= max {
                return Err(Error::Grid(format!("axis `{name}` needs min < max")));
            }
        }
        Ok(())
    }

    pub fn axis1(&self) -> Vec<f64> {
        lattice(self.axis1_min, self.axis1_max, self.axis1_steps)
    }

    pub fn axis2(&self) -> Vec<f64> {
        lattice(self.axis2_min, self.axis2_max, self.axis2_steps)
    }

    fn within_unit(&self) -> Result<()> {
        for (name, min, max) in [
            (&self.axis1_name, self.axis1_min, self.axis1_max),
            (&self.axis2_name, self.axis2_min, self.axis2_max),
        ] {
            if min < 0.0 || max > 1.0 {
                return Err(Error::Grid(format!("axis `{name}` must lie within [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Value(f64),
    Always,
    Undef,
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(*v),
            _ => None,
        }
    }

    pub fn to_csv(&self) -> String {
        match self {
            Cell::Value(v) => sig(*v, MACHINE_DIGITS),
            Cell::Always => "always".into(),
            Cell::Undef => "undef".into(),
        }
    }
}

impl From<BreakEven> for Cell {
    fn from(be: BreakEven) -> Self {
        match be {
            BreakEven::Pi(v) => Cell::Value(v),
            BreakEven::AlwaysBeneficial => Cell::Always,
            BreakEven::Undefined => Cell::Undef,
        }
    }
}

/// `values[i][j]` is the cell at `(axis1[i], axis2[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub spec: GridSpec,
    pub metadata: BTreeMap<String, f64>,
    pub values: Vec<Vec<Cell>>,
}

impl SurfaceGrid {
    fn evaluate<F>(spec: GridSpec, metadata: BTreeMap<String, f64>, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<Cell> + Sync,
    {
        spec.validate()?;
        let (xs, ys) = (spec.axis1(), spec.axis2());
        let values = xs
            .par_iter()
            .map(|&x| ys.iter().map(|&y| f(x, y)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(SurfaceGrid {
            spec,
            metadata,
            values,
        })
    }

    pub fn cell_at(&self, i: usize, j: usize) -> Cell {
        self.values[i][j]
    }

    /// Iterates `(axis1, axis2, cell)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, Cell)> + '_ {
        let (xs, ys) = (self.spec.axis1(), self.spec.axis2());
        xs.into_iter().enumerate().flat_map(move |(i, x)| {
            let ys = ys.clone();
            ys.into_iter()
                .enumerate()
                .map(move |(j, y)| (x, y, self.values[i][j]))
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["axis1", "axis2", "value"])
            .map_err(csv_err)?;
        for (x, y, cell) in self.cells() {
            w.write_record([
                sig(x, MACHINE_DIGITS),
                sig(y, MACHINE_DIGITS),
                cell.to_csv(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Break-even `pi` over a `(p, tau)` lattice for fixed `t`.
pub fn break_even_surface(t: f64, spec: GridSpec) -> Result<SurfaceGrid> {
    spec.validate()?;
    spec.within_unit()?;
    if spec.axis1_min <= 0.0 {
        return Err(Error::Grid("p axis must start above 0".into()));
    }
    TermParams::new(t, 1.0)?;
    let metadata = BTreeMap::from([("t".to_string(), t)]);
    SurfaceGrid::evaluate(spec, metadata, |p, tau| {
        Ok(model::break_even_pi(&TermParams::new(t, p)?, tau)?.into())
    })
}

/// Tagged ASL over a `(tau, pi)` lattice next to the constant untagged ASL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AslMesh {
    pub tagged: SurfaceGrid,
    pub untagged_plane: f64,
}

impl AslMesh {
    /// Number of lattice cells where tagging lowers the ASL by more than
    /// [`EQ_TOL`]; cells on the break-even line count as ties.
    pub fn improving_cells(&self) -> usize {
        self.tagged
            .values
            .iter()
            .flatten()
            .filter(|c| c.value().is_some_and(|v| self.untagged_plane - v > EQ_TOL))
            .count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau", "pi", "asl_tagged", "asl_untagged"])
            .map_err(csv_err)?;
        let plane = sig(self.untagged_plane, MACHINE_DIGITS);
        for (tau, pi, cell) in self.tagged.cells() {
            w.write_record([
                sig(tau, MACHINE_DIGITS),
                sig(pi, MACHINE_DIGITS),
                cell.to_csv(),
                plane.clone(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn asl_mesh(coll: &CollectionParams, term: &TermParams, spec: GridSpec) -> Result<AslMesh> {
    spec.validate()?;
    spec.within_unit()?;
    let metadata = BTreeMap::from([
        ("N".to_string(), coll.n_docs() as f64),
        ("t".to_string(), term.t()),
        ("p".to_string(), term.p()),
    ]);
    let tagged = SurfaceGrid::evaluate(spec, metadata, |tau, pi| {
        Ok(Cell::Value(
            model::asl_tagged(coll, term, &TagParams::new(tau, pi)?).asl,
        ))
    })?;
    Ok(AslMesh {
        tagged,
        untagged_plane: model::asl_untagged(coll, term).asl,
    })
}
