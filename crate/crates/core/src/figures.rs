//! Data series behind the six reference plots.
//!
//! Each figure is a set of columns sampled on one grid. Tables are written as
//! CSV with a header row and every real printed with 17 significant digits,
//! which is enough to read back the exact `f64`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::activation::{ActivationSpec, Kind, Registry};
use crate::analysis::Grid;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Value,
    Grad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub header: String,
    pub spec: ActivationSpec,
    pub quantity: Quantity,
}

impl Column {
    fn new(header: &str, spec: ActivationSpec, quantity: Quantity) -> Self {
        Self {
            header: header.to_owned(),
            spec,
            quantity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    /// `fig1` through `fig6`; also the CSV file stem.
    pub id: String,
    pub title: String,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub columns: Vec<Column>,
}

pub const DEFAULT_STEP: f64 = 0.01;

/// The six figure definitions with their default grids.
pub fn figure_specs() -> Vec<FigureSpec> {
    use Quantity::{Grad, Value};
    let aptx = ActivationSpec::aptx(1.0, 1.0, 0.5);
    let fig = |id: &str, title: &str, lo: f64, hi: f64, columns: Vec<Column>| FigureSpec {
        id: id.to_owned(),
        title: title.to_owned(),
        lo,
        hi,
        step: DEFAULT_STEP,
        columns,
    };
    vec![
        fig(
            "fig1",
            "APTx(1, 1, 0.5)",
            -5.0,
            5.0,
            vec![Column::new("aptx", aptx, Value)],
        ),
        fig(
            "fig2",
            "derivative of APTx(1, 1, 0.5)",
            -5.0,
            5.0,
            vec![Column::new("aptx_grad", aptx, Grad)],
        ),
        fig(
            "fig3",
            "derivatives of tanh and sigmoid",
            -10.0,
            10.0,
            vec![
                Column::new("tanh_grad", ActivationSpec::new(Kind::Tanh), Grad),
                Column::new("sigmoid_grad", ActivationSpec::new(Kind::Sigmoid), Grad),
            ],
        ),
        fig(
            "fig4",
            "ReLU, leaky ReLU (0.05) and ELU (2)",
            -5.0,
            5.0,
            vec![
                Column::new("relu", ActivationSpec::new(Kind::Relu), Value),
                Column::new("leaky_relu", ActivationSpec::leaky_relu(0.05), Value),
                Column::new("elu", ActivationSpec::elu(2.0), Value),
            ],
        ),
        fig(
            "fig5",
            "derivatives of SWISH and MISH",
            -5.0,
            5.0,
            vec![
                Column::new("swish_grad", ActivationSpec::swish(1.0), Grad),
                Column::new("mish_grad", ActivationSpec::new(Kind::Mish), Grad),
            ],
        ),
        fig(
            "fig6",
            "derivatives of MISH and APTx(1, 1, 0.5)",
            -5.0,
            5.0,
            vec![
                Column::new("mish_grad", ActivationSpec::new(Kind::Mish), Grad),
                Column::new("aptx_grad", aptx, Grad),
            ],
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureTable {
    pub spec: FigureSpec,
    pub xs: Vec<f64>,
    /// One vector per column, in header order.
    pub columns: Vec<Vec<f64>>,
}

impl FigureSpec {
    pub fn with_grid(mut self, lo: f64, hi: f64, step: f64) -> Self {
        self.lo = lo;
        self.hi = hi;
        self.step = step;
        self
    }

    pub fn render(&self, registry: &Registry) -> Result<FigureTable> {
        let grid = Grid::new(self.lo, self.hi, self.step)?;
        let xs: Vec<f64> = grid.points().collect();
        let mut columns = Vec::with_capacity(self.columns.len());
        for col in &self.columns {
            let act = registry.resolve(&col.spec)?;
            let mut out = vec![0.0; xs.len()];
            match col.quantity {
                Quantity::Value => act.forward_f64(&xs, &mut out),
                Quantity::Grad => act.derivative_f64(&xs, &mut out),
            }
            columns.push(out);
        }
        Ok(FigureTable {
            spec: self.clone(),
            xs,
            columns,
        })
    }
}

impl FigureTable {
    pub fn headers(&self) -> Vec<&str> {
        std::iter::once("x")
            .chain(self.spec.columns.iter().map(|c| c.header.as_str()))
            .collect()
    }

    /// Row index whose x is closest to `x`.
    pub fn nearest_row(&self, x: f64) -> Option<usize> {
        (0..self.xs.len())
            .min_by(|&i, &j| (self.xs[i] - x).abs().total_cmp(&(self.xs[j] - x).abs()))
    }

    pub fn column(&self, header: &str) -> Option<&[f64]> {
        self.spec
            .columns
            .iter()
            .position(|c| c.header == header)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.headers().join(","))?;
        for (i, x) in self.xs.iter().enumerate() {
            write!(w, "{}", fmt_real(*x))?;
            for col in &self.columns {
                write!(w, ",{}", fmt_real(col[i]))?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// 17 significant digits in scientific notation.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render_all(registry: &Registry) -> Result<Vec<FigureTable>> {
    figure_specs().iter().map(|f| f.render(registry)).collect()
}
