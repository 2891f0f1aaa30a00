//! File formats: mesh JSON, OFF surfaces, immersion JSON, ρ descriptions and
//! trace output (per-step JSON, CSV metrics, SVG for curves).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::complex::SimplicialComplex;
use crate::cy::{CYSpace, LagrangianAffine, Rho};
use crate::error::{Error, Result};
use crate::geometry::Embedding;
use crate::moduli::{Immersion, TraceStep};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub dim: usize,
    pub top_simplices: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Vec<f64>>>,
    /// Per coordinate; `null` for non-periodic directions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<Option<f64>>>,
}

impl MeshFile {
    pub fn from_parts(complex: &SimplicialComplex, embedding: &Embedding) -> Self {
        let periodic = embedding.periods.iter().any(|p| p.is_some());
        Self {
            dim: complex.dim(),
            top_simplices: complex.simplices(complex.dim()).to_vec(),
            positions: Some(embedding.positions.clone()),
            periods: periodic.then(|| embedding.periods.clone()),
        }
    }

    pub fn complex(&self) -> Result<SimplicialComplex> {
        SimplicialComplex::build(self.dim, &self.top_simplices)
    }

    pub fn embedding(&self) -> Result<Embedding> {
        let pos = self
            .positions
            .clone()
            .ok_or_else(|| Error::InvalidMesh("mesh has no vertex positions".into()))?;
        let width = pos.first().map_or(0, Vec::len);
        if pos.iter().any(|p| p.len() != width) {
            return Err(Error::InvalidMesh("positions have mixed dimensions".into()));
        }
        Ok(match &self.periods {
            Some(p) if p.len() != width => {
                return Err(Error::InvalidMesh(format!("{} periods for {width} coordinates", p.len())))
            }
            Some(p) => Embedding::with_periods(pos, p.clone()),
            None => Embedding::new(pos),
        })
    }
}

/// Parses a JSON mesh; syntax errors carry the offending line.
pub fn parse_mesh_json(text: &str) -> Result<MeshFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: Some(e.line()),
        message: e.to_string(),
    })
}

/// Parses an OFF file of triangles. Comments start with `#`.
pub fn parse_off(text: &str) -> Result<MeshFile> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line: usize, message: &str| Error::Parse {
        line: Some(line),
        message: message.to_string(),
    };
    let (l0, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
    let mut tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.first() != Some(&"OFF") {
        return Err(err(l0, "expected OFF header"));
    }
    tokens.remove(0);
    let (lc, counts) = if tokens.is_empty() {
        let (l, c) = lines.next().ok_or_else(|| err(l0, "missing counts"))?;
        (l, c.split_whitespace().collect::<Vec<_>>())
    } else {
        (l0, tokens)
    };
    let nums: Vec<usize> = counts
        .iter()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| err(lc, "counts must be non-negative integers"))?;
    if nums.len() < 2 {
        return Err(err(lc, "expected vertex and face counts"));
    }
    let (nv, nf) = (nums[0], nums[1]);
    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, text) = lines.next().ok_or_else(|| err(lc, "file ends before all vertices"))?;
        let coords: Vec<f64> = text
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(l, "vertex coordinates must be numbers"))?;
        if coords.len() != 3 {
            return Err(err(l, "vertex needs three coordinates"));
        }
        positions.push(coords);
    }
    let mut top_simplices = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, text) = lines.next().ok_or_else(|| err(lc, "file ends before all faces"))?;
        let ids: Vec<usize> = text
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(l, "face entries must be non-negative integers"))?;
        if ids.first() != Some(&3) || ids.len() < 4 {
            return Err(err(l, "only triangles are supported"));
        }
        if ids[1..4].iter().any(|&v| v >= nv) {
            return Err(err(l, "face references a missing vertex"));
        }
        top_simplices.push(ids[1..4].to_vec());
    }
    Ok(MeshFile {
        dim: 2,
        top_simplices,
        positions: Some(positions),
        periods: None,
    })
}

/// Reads `.off` files as OFF and anything else as mesh JSON.
pub fn read_mesh(path: &Path) -> Result<MeshFile> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("off")) {
        parse_off(&text)
    } else {
        parse_mesh_json(&text)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSpec {
    pub point: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<Option<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeshRef {
    Path(PathBuf),
    Inline(MeshFile),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImmersionFile {
    pub mesh: MeshRef,
    /// Points of `R^{2n}` in interleaved coordinates `(x1, y1, x2, y2, ...)`.
    pub positions: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<Option<f64>>>,
    /// One per boundary component, in component order. Omit for an
    /// unconstrained immersion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<LambdaSpec>>,
    /// Rotation used by unconstrained immersions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_a: Option<f64>,
}

impl ImmersionFile {
    pub fn from_immersion(imm: &Immersion) -> Self {
        let cx = imm.complex();
        let periodic = imm.space().periods().iter().any(|p| p.is_some());
        Self {
            mesh: MeshRef::Inline(MeshFile {
                dim: cx.dim(),
                top_simplices: cx.simplices(cx.dim()).to_vec(),
                positions: None,
                periods: None,
            }),
            positions: imm.positions().to_vec(),
            periods: periodic.then(|| imm.space().periods().to_vec()),
            lambdas: imm.is_constrained().then(|| {
                imm.lambdas()
                    .iter()
                    .map(|l| LambdaSpec {
                        point: l.point.clone(),
                        basis: l.basis.clone(),
                        periods: None,
                    })
                    .collect()
            }),
            free_a: (!imm.is_constrained()).then(|| imm.frames().first().map_or(0.0, |f| f.a)),
        }
    }

    /// Builds the immersion; relative mesh paths resolve against `base`.
    pub fn build(&self, base: &Path, rho: Option<Rho>) -> Result<Immersion> {
        let mesh = match &self.mesh {
            MeshRef::Inline(m) => m.clone(),
            MeshRef::Path(p) => read_mesh(&base.join(p))?,
        };
        let complex = mesh.complex()?;
        let n = complex.dim();
        let mut periods = self.periods.clone();
        if periods.is_none() {
            periods = self.lambdas.iter().flatten().find_map(|l| l.periods.clone());
        }
        let periods = periods.unwrap_or_else(|| vec![None; 2 * n]);
        for l in self.lambdas.iter().flatten() {
            if let Some(p) = &l.periods {
                if p != &periods {
                    return Err(Error::InvalidImmersion("Lagrangian periods differ from the ambient periods".into()));
                }
            }
        }
        let mut space = CYSpace::from_real_periods(periods)?;
        if space.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "mesh has dimension {n} but positions live in R^{}",
                2 * space.n()
            )));
        }
        if let Some(r) = rho {
            space = space.with_rho(r);
        }
        match &self.lambdas {
            Some(ls) => {
                let lambdas = ls
                    .iter()
                    .map(|l| LagrangianAffine::new(l.point.clone(), l.basis.clone()))
                    .collect::<Result<Vec<_>>>()?;
                Immersion::new(complex, space, self.positions.clone(), lambdas)
            }
            None => Immersion::unconstrained(complex, space, self.positions.clone(), self.free_a.unwrap_or(0.0)),
        }
    }
}

pub fn read_immersion(path: &Path, rho: Option<Rho>) -> Result<Immersion> {
    let text = fs::read_to_string(path)?;
    let file: ImmersionFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: Some(e.line()),
        message: e.to_string(),
    })?;
    file.build(path.parent().unwrap_or(Path::new(".")), rho)
}

/// `rho` from a file: `{"constant": c}` or
/// `{"affine": {"offset": c0, "gradient": [...]}}` for `c0 + <gradient, x>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoSpec {
    Constant(f64),
    Affine { offset: f64, gradient: Vec<f64> },
}

impl RhoSpec {
    pub fn into_rho(self) -> Result<Rho> {
        match self {
            RhoSpec::Constant(c) if c > 0.0 && c.is_finite() => Ok(Rho::Constant(c)),
            RhoSpec::Constant(c) => Err(Error::InvalidImmersion(format!("rho must be positive, got {c}"))),
            RhoSpec::Affine { offset, gradient } => Ok(Rho::Function(Arc::new(move |x: &[f64]| {
                offset + x.iter().zip(&gradient).map(|(a, b)| a * b).sum::<f64>()
            }))),
        }
    }
}

/// `--rho` argument: a positive number or a path to a [`RhoSpec`] file.
pub fn parse_rho(arg: &str) -> Result<Rho> {
    if let Ok(c) = arg.parse::<f64>() {
        return RhoSpec::Constant(c).into_rho();
    }
    let text = fs::read_to_string(arg)?;
    let spec: RhoSpec = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: Some(e.line()),
        message: e.to_string(),
    })?;
    spec.into_rho()
}

pub fn trace_csv(steps: &[TraceStep]) -> String {
    let mut out = String::from("step,sl_residual,theta_norm,min_quality\n");
    for s in steps {
        let _ = writeln!(out, "{},{:e},{:e},{:e}", s.step, s.sl_residual, s.theta_norm, s.min_quality);
    }
    out
}

/// Writes `step_NNNN.json` per step and `trace.csv` into `dir`.
pub fn write_trace(dir: &Path, steps: &[TraceStep]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for s in steps {
        fs::write(dir.join(format!("step_{:04}.json", s.step)), serde_json::to_string_pretty(s)?)?;
    }
    fs::write(dir.join("trace.csv"), trace_csv(steps))?;
    Ok(())
}

/// Polylines of the traced curves of an `n = 1` trace in the `(x, y)` plane.
pub fn trace_svg(steps: &[TraceStep]) -> String {
    let pts = steps.iter().flat_map(|s| s.positions.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let pad = 0.05 * (x1 - x0).max(y1 - y0).max(1e-9);
    let (w, h) = (x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {w} {h}\" width=\"640\" height=\"{:.0}\">\n",
        x0 - pad,
        -(y1 + pad),
        640.0 * h / w
    );
    for s in steps {
        let path: Vec<String> = s.positions.iter().map(|p| format!("{},{}", p[0], -p[1])).collect();
        let _ = writeln!(
            svg,
            "  <polyline fill=\"none\" stroke=\"black\" stroke-width=\"{}\" points=\"{}\"/>",
            0.003 * w,
            path.join(" ")
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::configs;

    #[test]
    fn off_roundtrip_and_line_numbers() {
        let text = "OFF\n# square\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n";
        let m = parse_off(text).unwrap();
        assert_eq!(m.top_simplices.len(), 2);
        assert_eq!(m.complex().unwrap().num_boundary_components(), 1);

        let bad = "OFF\n3 1 0\n0 0 0\n1 0 x\n0 1 0\n3 0 1 2\n";
        match parse_off(bad) {
            Err(Error::Parse { line: Some(4), .. }) => {}
            other => panic!("{other:?}"),
        }
        let missing = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n";
        assert!(matches!(parse_off(missing), Err(Error::Parse { line: Some(6), .. })));
    }

    #[test]
    fn json_errors_report_lines() {
        let text = "{\n  \"dim\": 1,\n  \"top_simplices\": [[0, 1], [1 2]]\n}";
        assert!(matches!(parse_mesh_json(text), Err(Error::Parse { line: Some(3), .. })));
    }

    #[test]
    fn immersion_roundtrip() {
        let imm = configs::cylinder_sl(2, 5, 1.0, 2.0).unwrap();
        let file = ImmersionFile::from_immersion(&imm);
        let text = serde_json::to_string(&file).unwrap();
        let back: ImmersionFile = serde_json::from_str(&text).unwrap();
        let rebuilt = back.build(Path::new("."), None).unwrap();
        assert_eq!(rebuilt.positions(), imm.positions());
        for (a, b) in rebuilt.lambdas().iter().zip(imm.lambdas()) {
            assert_eq!(a.point, b.point);
            let diff = a.basis.iter().flatten().zip(b.basis.iter().flatten());
            assert!(diff.map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) < 1e-15);
        }
        assert_eq!(rebuilt.space().periods(), imm.space().periods());
    }

    #[test]
    fn rho_specs() {
        let r = RhoSpec::Affine {
            offset: 2.0,
            gradient: vec![1.0, 0.0],
        }
        .into_rho()
        .unwrap();
        assert_eq!(r.eval(&[0.5, 3.0]), 2.5);
        assert!(RhoSpec::Constant(-1.0).into_rho().is_err());
        let spec: RhoSpec = serde_json::from_str("{\"constant\": 3.0}").unwrap();
        assert_eq!(spec, RhoSpec::Constant(3.0));
    }
}
