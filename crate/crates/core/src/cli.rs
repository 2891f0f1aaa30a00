//! Command-line front end: `betti`, `hodge`, `sl-verify`, `trace` and
//! `fixture`. Reports go to stdout as JSON (default), an aligned table or CSV.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cohomology::{lefschetz_check, BettiReport, LefschetzReport};
use crate::complex::{Cochain, SimplicialComplex};
use crate::cy::Rho;
use crate::error::{Error, Result};
use crate::fixtures;
use crate::hodge::{BoundaryCondition, HodgeConfig, HodgeSolver, SpectralGap};
use crate::io::{self, ImmersionFile, MeshFile};
use crate::metric::{to_matrix_market, DualScheme, MetricComplex};
use crate::moduli::{self, configs, Immersion, TraceOptions};

#[derive(Parser, Debug)]
#[command(name = "slag", version, about = "Hodge theory with boundary and special Lagrangian moduli on simplicial meshes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Absolute and relative Betti numbers with the Lefschetz check.
    Betti {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Harmonic field dimensions and Hodge splits of random cochains.
    Hodge {
        #[arg(long)]
        mesh: PathBuf,
        /// Degree; all degrees when omitted.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value = "barycentric")]
        dual: DualScheme,
        /// Positive constant or a JSON file (`{"constant": c}` or `{"affine": ...}`).
        #[arg(long)]
        rho: Option<String>,
        #[arg(long, default_value_t = 1e-9)]
        tol_kernel: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random cochains decomposed per degree.
        #[arg(long, default_value_t = 3)]
        samples: usize,
        /// Writes stars and Laplacians in MatrixMarket format into this directory.
        #[arg(long)]
        export_matrices: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// SL residuals, moduli dimension and the tangent-form duality residual.
    SlVerify {
        #[arg(long)]
        immersion: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol_sl: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol_kernel: f64,
        #[arg(long)]
        rho: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Traces the moduli space along a harmonic Dirichlet direction.
    Trace {
        #[arg(long)]
        immersion: PathBuf,
        #[arg(long, default_value_t = 0)]
        direction: usize,
        #[arg(long, default_value_t = 1e-2)]
        step: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Directory for per-step JSON and `trace.csv`.
        #[arg(long, default_value = "trace_out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol_sl: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol_kernel: f64,
        #[arg(long, default_value_t = 25)]
        max_iterations: usize,
        #[arg(long)]
        rho: Option<String>,
        /// Also write `trace.svg` (curves only).
        #[arg(long)]
        svg: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Writes a bundled mesh or SL configuration as JSON.
    Fixture {
        #[arg(value_enum)]
        name: FixtureName,
        /// Resolution multiplier.
        #[arg(long, default_value_t = 1)]
        refine: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FixtureName {
    Interval,
    Disk,
    Annulus,
    Cylinder,
    PairOfPants,
    Torus,
    SolidTorus,
    /// Immersion: segment between two lines in C.
    TwoLines,
    /// Immersion: flat cylinder between two Lagrangians in C x (C/Z^2).
    CylinderSl,
    /// Immersion: graph of grad(0.2 log r) over an annulus.
    CurvedAnnulus,
    /// Immersion: square patch of an SL plane.
    FlatPatch,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("--{name} must be positive, got {v}")))
    }
}

fn load_mesh(path: &Path) -> Result<(SimplicialComplex, MeshFile)> {
    let mesh = io::read_mesh(path)?;
    Ok((mesh.complex()?, mesh))
}

fn rho_arg(arg: &Option<String>) -> Result<Option<Rho>> {
    arg.as_deref().map(io::parse_rho).transpose()
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

#[derive(Serialize)]
struct BettiOutput {
    betti: BettiReport,
    lefschetz: LefschetzReport,
}

#[derive(Serialize)]
struct DegreeReport {
    k: usize,
    dirichlet_dim: usize,
    neumann_dim: usize,
    relative_betti: usize,
    betti: usize,
    dirichlet_gap: SpectralGap,
    neumann_gap: SpectralGap,
    /// Worst reconstruction and orthogonality residuals over the samples.
    reconstruction: f64,
    orthogonality: f64,
}

#[derive(Serialize)]
struct SlReport {
    n: usize,
    vertices: usize,
    top_simplices: usize,
    constrained: bool,
    omega_residual: f64,
    im_omega_residual: f64,
    sl_defect: f64,
    special_lagrangian: bool,
    calibration_residual: Option<f64>,
    boundary_residual: f64,
    moduli_dimension: Option<usize>,
    moduli_error: Option<String>,
    duality_residual: Option<f64>,
}

/// Runs one command, writing its report to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Betti { mesh, format } => {
            let (complex, _) = load_mesh(&mesh)?;
            let report = BettiOutput {
                betti: BettiReport::compute(&complex)?,
                lefschetz: lefschetz_check(&complex)?,
            };
            match format {
                Format::Json => emit(out, &report),
                Format::Table | Format::Csv => {
                    write!(out, "{}", report.betti.table())?;
                    writeln!(out, "lefschetz b_k(L,dL) = b_(n-k)(L): ok")?;
                    Ok(())
                }
            }
        }
        Command::Hodge {
            mesh,
            k,
            dual,
            rho,
            tol_kernel,
            seed,
            samples,
            export_matrices,
            format,
        } => {
            positive("tol-kernel", tol_kernel)?;
            let (complex, file) = load_mesh(&mesh)?;
            let embedding = file.embedding()?;
            let rho = rho_arg(&rho)?
                .map(|r| embedding.positions.iter().map(|p| r.eval(p)).collect::<Vec<f64>>());
            let metric = MetricComplex::new(complex.clone(), embedding, dual, rho)?;
            let config = HodgeConfig {
                kernel_tol: tol_kernel,
                ..HodgeConfig::default()
            };
            let solver = HodgeSolver::new(&metric, config);
            let degrees: Vec<usize> = match k {
                Some(k) if k > complex.dim() => {
                    return Err(Error::DegreeOutOfRange {
                        degree: k,
                        max: complex.dim(),
                    })
                }
                Some(k) => vec![k],
                None => (0..=complex.dim()).collect(),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut reports = Vec::new();
            for &d in &degrees {
                let dir = solver.harmonic_fields(d, BoundaryCondition::Dirichlet)?;
                let neu = solver.harmonic_fields(d, BoundaryCondition::Neumann)?;
                let (mut rec, mut orth) = (0.0_f64, 0.0_f64);
                for _ in 0..samples {
                    let v: Vec<f64> = (0..complex.count(d)).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let split = solver.decompose(&Cochain::from_vec(d, v))?;
                    rec = rec.max(split.residuals.reconstruction);
                    orth = orth.max(split.residuals.orthogonality());
                }
                reports.push(DegreeReport {
                    k: d,
                    dirichlet_dim: dir.dim(),
                    neumann_dim: neu.dim(),
                    relative_betti: crate::cohomology::relative_betti(&complex, d)?,
                    betti: crate::cohomology::betti(&complex, d)?,
                    dirichlet_gap: dir.gap,
                    neumann_gap: neu.gap,
                    reconstruction: rec,
                    orthogonality: orth,
                });
            }
            if let Some(dir) = export_matrices {
                std::fs::create_dir_all(&dir)?;
                for &d in &degrees {
                    std::fs::write(dir.join(format!("star_{d}.mtx")), to_matrix_market(&metric.hodge_star(d)?))?;
                    std::fs::write(dir.join(format!("laplacian_{d}.mtx")), to_matrix_market(&metric.laplacian(d)?))?;
                }
            }
            match format {
                Format::Json => emit(out, &reports),
                Format::Table | Format::Csv => {
                    let sep = if format == Format::Csv { "," } else { " | " };
                    let head = ["k", "dirichlet", "neumann", "b_k(L,dL)", "b_k(L)", "gap_D", "gap_N", "recon", "orth"];
                    writeln!(out, "{}", head.join(sep))?;
                    for r in &reports {
                        writeln!(
                            out,
                            "{}",
                            [
                                r.k.to_string(),
                                r.dirichlet_dim.to_string(),
                                r.neumann_dim.to_string(),
                                r.relative_betti.to_string(),
                                r.betti.to_string(),
                                format!("{:.3e}", r.dirichlet_gap.ratio),
                                format!("{:.3e}", r.neumann_gap.ratio),
                                format!("{:.3e}", r.reconstruction),
                                format!("{:.3e}", r.orthogonality),
                            ]
                            .join(sep)
                        )?;
                    }
                    Ok(())
                }
            }
        }
        Command::SlVerify {
            immersion,
            tol_sl,
            tol_kernel,
            rho,
            seed,
            format,
        } => {
            positive("tol-sl", tol_sl)?;
            positive("tol-kernel", tol_kernel)?;
            let imm = io::read_immersion(&immersion, rho_arg(&rho)?)?;
            let config = HodgeConfig {
                kernel_tol: tol_kernel,
                ..HodgeConfig::default()
            };
            let report = sl_verify(&imm, tol_sl, &config, seed)?;
            match format {
                Format::Json => emit(out, &report)?,
                Format::Table | Format::Csv => {
                    let mut s = String::new();
                    let _ = writeln!(s, "special Lagrangian : {}", report.special_lagrangian);
                    let _ = writeln!(s, "omega residual     : {:.3e}", report.omega_residual);
                    let _ = writeln!(s, "Im Omega residual  : {:.3e}", report.im_omega_residual);
                    let _ = writeln!(s, "SL defect          : {:.3e}", report.sl_defect);
                    if let Some(c) = report.calibration_residual {
                        let _ = writeln!(s, "calibration        : {c:.3e}");
                    }
                    match (&report.moduli_dimension, &report.moduli_error) {
                        (Some(d), _) => {
                            let _ = writeln!(s, "moduli dimension   : {d}");
                        }
                        (None, Some(e)) => {
                            let _ = writeln!(s, "moduli dimension   : error ({e})");
                        }
                        _ => {}
                    }
                    if let Some(d) = report.duality_residual {
                        let _ = writeln!(s, "duality residual   : {d:.3e}");
                    }
                    write!(out, "{s}")?;
                }
            }
            if report.special_lagrangian {
                Ok(())
            } else {
                Err(Error::NotSpecialLagrangian(report.sl_defect))
            }
        }
        Command::Trace {
            immersion,
            direction,
            step,
            steps,
            out: dir,
            tol_sl,
            tol_kernel,
            max_iterations,
            rho,
            svg,
            format,
        } => {
            positive("tol-sl", tol_sl)?;
            positive("tol-kernel", tol_kernel)?;
            positive("step", step)?;
            let imm = io::read_immersion(&immersion, rho_arg(&rho)?)?;
            let opts = TraceOptions {
                direction,
                step,
                steps,
                tol_sl,
                max_iterations,
                hodge: HodgeConfig {
                    kernel_tol: tol_kernel,
                    ..HodgeConfig::default()
                },
                ..TraceOptions::default()
            };
            let trace = moduli::newton_trace(&imm, &opts)?;
            let records: Vec<_> = trace.into_iter().map(|(s, _)| s).collect();
            io::write_trace(&dir, &records)?;
            if svg {
                if imm.n() != 1 {
                    return Err(Error::InvalidArgument("--svg draws curves only (n = 1)".into()));
                }
                std::fs::write(dir.join("trace.svg"), io::trace_svg(&records))?;
            }
            match format {
                Format::Csv => write!(out, "{}", io::trace_csv(&records))?,
                Format::Json => emit(out, &records)?,
                Format::Table => {
                    writeln!(out, "step | SL defect | theta norm | min quality | iterations")?;
                    for r in &records {
                        writeln!(
                            out,
                            "{:>4} | {:>9.2e} | {:>10.3e} | {:>11.4} | {:>10}",
                            r.step, r.sl_residual, r.theta_norm, r.min_quality, r.corrector_iterations
                        )?;
                    }
                }
            }
            Ok(())
        }
        Command::Fixture { name, refine, out: path } => {
            let r = refine.max(1);
            let text = fixture_json(name, r)?;
            match path {
                Some(p) => std::fs::write(p, text)?,
                None => writeln!(out, "{text}")?,
            }
            Ok(())
        }
    }
}

fn fixture_json(name: FixtureName, r: usize) -> Result<String> {
    let mesh = |(c, e): (SimplicialComplex, crate::geometry::Embedding)| {
        serde_json::to_string_pretty(&MeshFile::from_parts(&c, &e))
    };
    let imm = |i: Immersion| serde_json::to_string_pretty(&ImmersionFile::from_immersion(&i));
    Ok(match name {
        FixtureName::Interval => mesh(fixtures::interval(8 * r))?,
        FixtureName::Disk => mesh(fixtures::disk(3 * r, 6))?,
        FixtureName::Annulus => mesh(fixtures::annulus(2 * r, 10 * r))?,
        FixtureName::Cylinder => mesh(fixtures::cylinder(3 * r, 6 * r))?,
        FixtureName::PairOfPants => mesh(fixtures::pair_of_pants(r))?,
        FixtureName::Torus => mesh(fixtures::torus(4 * r, 4 * r))?,
        FixtureName::SolidTorus => mesh(fixtures::solid_torus(2 * r, 4 * r))?,
        FixtureName::TwoLines => imm(configs::interval_between_lines(8 * r, 1.1, 2.0, 0.0)?)?,
        FixtureName::CylinderSl => imm(configs::cylinder_sl(3 * r, 6 * r, 1.1, 2.0)?)?,
        FixtureName::CurvedAnnulus => imm(configs::curved_annulus(2 * r, 12 * r, 0.2)?)?,
        FixtureName::FlatPatch => imm(configs::flat_patch(3 * r, 3 * r, 0.4)?)?,
    })
}

/// SL report for `imm`. The duality residual uses the deformation field of
/// the first harmonic Dirichlet field, or of a seeded random Dirichlet
/// 1-cochain when the moduli space is a point.
fn sl_verify(imm: &Immersion, tol_sl: f64, config: &HodgeConfig, seed: u64) -> Result<SlReport> {
    let res = moduli::sl_residual(imm);
    let defect = moduli::sl_defect(imm);
    let sl = defect <= tol_sl;
    let (dim, err) = match moduli::moduli_dimension(imm, config) {
        Ok(d) => (Some(d.harmonic), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut boundary: f64 = 0.0;
    for (v, f) in imm.frames().iter().enumerate() {
        if let Some(c) = f.component {
            boundary = boundary.max(imm.lambdas()[c].distance(&imm.positions()[v], imm.space().periods()));
        }
    }
    let duality = if sl {
        let metric = imm.pullback_metric(DualScheme::Barycentric)?;
        let basis = crate::hodge::harmonic_fields_dirichlet(&metric, 1, config)?;
        let theta = match basis.fields.first() {
            Some(h) => h.clone(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let cx = imm.complex();
                let v = DVector::from_iterator(
                    cx.count(1),
                    (0..cx.count(1)).map(|e| if cx.is_boundary(1, e) { 0.0 } else { rng.gen_range(-1.0..1.0) }),
                );
                Cochain::new(1, v)
            }
        };
        let field = imm.deformation_field(&theta)?;
        Some(moduli::hodge_duality_check(imm, &field, tol_sl)?.residual)
    } else {
        None
    };
    Ok(SlReport {
        n: imm.n(),
        vertices: imm.complex().num_vertices(),
        top_simplices: imm.complex().count(imm.n()),
        constrained: imm.is_constrained(),
        omega_residual: res.omega_norm,
        im_omega_residual: res.im_omega_norm,
        sl_defect: defect,
        special_lagrangian: sl,
        calibration_residual: if sl { moduli::calibration_residual(imm).ok() } else { None },
        boundary_residual: boundary,
        moduli_dimension: dim,
        moduli_error: err,
        duality_residual: duality,
    })
}
