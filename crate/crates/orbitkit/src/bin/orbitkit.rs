//! Command-line front end: orbit coordinates, product-orbit tests, surface
//! grids for figure reproduction, classicalization, and orbit-maximal
//! negativity, all with deterministic machine-readable output.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use orbitkit::density::{random_density, CMatrix, RandomSource};
use orbitkit::entanglement::{
    equi_negativity_surface, max_negativity_orbit, OptimizerConfig,
};
use orbitkit::orbits::{coords_d4, inverse_coords_d4, OrbitCoords, Spectrum};
use orbitkit::product::{
    estimate_dimension, factor_multipartite, product_orbit_dims, sample_product_surface,
    surface_constraint_residual, GridSpec, SurfaceSample,
};
use orbitkit::{classical, DensityMatrix, Error};

const EXIT_INVALID_INPUT: u8 = 2;
const EXIT_CAPACITY: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "orbitkit", version, about = "Geometry of unitary orbits of density matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tetrahedron coordinates of a length-4 spectrum
    Coords {
        /// Four non-negative values summing to 1
        spectrum: Vec<f64>,
    },
    /// Test whether an orbit spectrum factors into subsystem marginals
    ProductTest {
        spectrum: Vec<f64>,
        /// Subsystem dimensions, e.g. 2,2 or 2,2,2
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Sample a surface through the tetrahedron as CSV
    Surface {
        #[arg(long)]
        kind: SurfaceKind,
        /// Negativity level for --kind negativity
        #[arg(long, default_value_t = 0.0)]
        level: f64,
        /// Grid resolution nx,ny
        #[arg(long, value_delimiter = ',', default_value = "41,41")]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Map a bipartite state to a classically correlated state on its orbit
    Classicalize {
        /// JSON state file {dims:[dA,dB], re:[[..]], im:[[..]]}
        #[arg(long, conflicts_with = "random")]
        state: Option<std::path::PathBuf>,
        /// Sample a random state of the given dimensions instead
        #[arg(long, value_delimiter = ',')]
        random: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use Haar-random control-unitary blocks instead of identity
        #[arg(long)]
        rotate_local: bool,
    },
    /// Maximal negativity over the orbit of a length-4 spectrum
    MaxNegativity {
        spectrum: Vec<f64>,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Product-orbit dimension report, optionally cross-checked numerically
    Dims {
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long)]
        estimate: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Re-check a product-surface CSV against the constraint equation
    VerifySurface {
        #[arg(long = "in")]
        input: std::path::PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SurfaceKind {
    Product,
    Negativity,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    parameters: BTreeMap<String, String>,
    seed: u64,
    tool_version: String,
}

impl RunManifest {
    fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            parameters: BTreeMap::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl ToString) -> Self {
        Self {
            code: EXIT_INVALID_INPUT,
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CapacityExceeded { .. } => EXIT_CAPACITY,
            _ => EXIT_INVALID_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(e: std::io::Error, path: &std::path::Path) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("ORBITKIT_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    let cli = Cli::parse();
    let start = std::time::Instant::now();
    let result = run(cli.command);
    match result {
        Ok(()) => {
            eprintln!("elapsed_ms: {}", start.elapsed().as_millis());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Parse a hand-typed spectrum: sorted and renormalized when within 1e-6 of
/// the simplex, with a warning when adjustment was needed.
fn parse_spectrum(values: &[f64], expected_len: usize) -> Result<Spectrum, Failure> {
    if values.len() != expected_len {
        return Err(Failure::invalid(format!(
            "expected {expected_len} spectrum entries, got {}",
            values.len()
        )));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Failure::invalid(format!(
            "spectrum sums to {sum}, expected 1 within 1e-6"
        )));
    }
    let sorted_ok = values.windows(2).all(|w| w[0] >= w[1]);
    if !sorted_ok || (sum - 1.0).abs() > 1e-12 {
        eprintln!("warning: spectrum auto-sorted/renormalized");
    }
    Spectrum::from_probabilities(values).map_err(Failure::from)
}

fn print_json(doc: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(doc).expect("serializable"));
}

fn matrix_json(m: &CMatrix, dims: (usize, usize)) -> serde_json::Value {
    let re: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect())
        .collect();
    let im: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect())
        .collect();
    json!({ "dims": [dims.0, dims.1], "re": re, "im": im })
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Coords { spectrum } => {
            let s = parse_spectrum(&spectrum, 4)?;
            let c = coords_d4(&s)?;
            let manifest = RunManifest::new("coords", 0)
                .param("spectrum", format!("{:?}", s.entries()));
            print_json(&json!({
                "manifest": manifest,
                "x": c.x,
                "y": c.y,
                "z": c.z,
                "chamber_ok": c.in_chamber(1e-9),
            }));
            Ok(())
        }
        Command::ProductTest { spectrum, dims, tol } => {
            if dims.len() < 2 {
                return Err(Failure::invalid("need at least two subsystem dims"));
            }
            let n: usize = dims.iter().product();
            let s = parse_spectrum(&spectrum, n)?;
            let factorization = factor_multipartite(&s, &dims, tol)?;
            let manifest = RunManifest::new("product-test", 0)
                .param("dims", format!("{dims:?}"))
                .param("tol", tol)
                .param("spectrum", format!("{:?}", s.entries()));
            let doc = match factorization {
                Some(f) => json!({
                    "manifest": manifest,
                    "factorable": true,
                    "marginals": f.marginals.iter().map(|m| m.entries().to_vec()).collect::<Vec<_>>(),
                    "residual": f.residual,
                }),
                None => json!({
                    "manifest": manifest,
                    "factorable": false,
                    "residual": serde_json::Value::Null,
                }),
            };
            print_json(&doc);
            Ok(())
        }
        Command::Surface {
            kind,
            level,
            grid,
            seed,
            restarts,
            out,
        } => {
            if grid.len() != 2 {
                return Err(Failure::invalid("grid must be nx,ny"));
            }
            let spec = GridSpec {
                x_range: (0.0, 6.0f64.sqrt() / 3.0),
                y_range: (0.0, std::f64::consts::SQRT_2 / 3.0),
                nx: grid[0],
                ny: grid[1],
            };
            let (kind_name, samples) = match kind {
                SurfaceKind::Product => ("product", sample_product_surface(&spec)?),
                SurfaceKind::Negativity => {
                    let cfg = OptimizerConfig {
                        restarts: restarts.max(1),
                        seed: RandomSource::new(seed),
                        ..OptimizerConfig::fast(RandomSource::new(seed))
                    };
                    let surf = equi_negativity_surface(level, &spec, &cfg)?;
                    for v in &surf.monotonicity_violations {
                        eprintln!(
                            "warning: z-scan monotonicity violated at ({}, {}) by {:.3e}",
                            v.x, v.y, v.drop
                        );
                    }
                    ("negativity", surf.samples)
                }
            };
            let manifest = RunManifest::new("surface", seed)
                .param("kind", kind_name)
                .param("level", level)
                .param("grid", format!("{}x{}", spec.nx, spec.ny))
                .param("restarts", restarts);
            write_surface_csv(&out, &manifest, &samples)?;
            Ok(())
        }
        Command::Classicalize {
            state,
            random,
            seed,
            rotate_local,
        } => {
            let (rho, da, db) = match (state, random) {
                (Some(path), None) => read_state_file(&path)?,
                (None, Some(dims)) => {
                    if dims.len() != 2 || dims.iter().any(|&d| d == 0) {
                        return Err(Failure::invalid("--random needs dA,dB >= 1"));
                    }
                    let rho = random_density(dims[0] * dims[1], RandomSource::new(seed))?;
                    (rho, dims[0], dims[1])
                }
                _ => return Err(Failure::invalid("provide exactly one of --state or --random")),
            };
            let rs = rotate_local.then(|| RandomSource::with_stream(seed, 1));
            let result = classical::classicalize(&rho, da, db, rs)?;
            let s_in = orbitkit::orbits::spectrum_of(&rho)?;
            let s_out = orbitkit::orbits::spectrum_of(&result.classical_state)?;
            let spectrum_check = s_in
                .entries()
                .iter()
                .zip(s_out.entries())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let manifest = RunManifest::new("classicalize", seed)
                .param("dims", format!("[{da}, {db}]"))
                .param("rotate_local", rotate_local);
            print_json(&json!({
                "manifest": manifest,
                "rho_cl": matrix_json(result.classical_state.matrix(), (da, db)),
                "W": matrix_json(result.w.matrix(), (da, db)),
                "U_cd": matrix_json(result.u_cd.matrix(), (da, db)),
                "weights": result.factorization.weights,
                "conditionals": result.factorization.conditionals,
                "spectrum_check": spectrum_check,
            }));
            Ok(())
        }
        Command::MaxNegativity {
            spectrum,
            restarts,
            seed,
        } => {
            let s = parse_spectrum(&spectrum, 4)?;
            let cfg = OptimizerConfig {
                restarts: restarts.max(1),
                seed: RandomSource::new(seed),
                ..OptimizerConfig::default()
            };
            let report = max_negativity_orbit(&s, &cfg)?;
            let manifest = RunManifest::new("max-negativity", seed)
                .param("restarts", restarts)
                .param("spectrum", format!("{:?}", s.entries()));
            print_json(&json!({
                "manifest": manifest,
                "best_negativity": report.best_negativity,
                "best_unitary": matrix_json(report.best_unitary.matrix(), (2, 2)),
                "restarts_used": report.restarts_used,
                "converged": report.converged,
                "trace_of_iterations": report.trace_of_iterations,
            }));
            Ok(())
        }
        Command::Dims {
            dims,
            estimate,
            seed,
            trials,
        } => {
            let report = product_orbit_dims(&dims)?;
            let estimated = if estimate {
                Some(estimate_dimension(&dims, RandomSource::new(seed), trials)?)
            } else {
                None
            };
            let manifest = RunManifest::new("dims", seed)
                .param("dims", format!("{dims:?}"))
                .param("estimate", estimate);
            let mut doc = json!({
                "manifest": manifest,
                "subsystem_dims": report.subsystem_dims,
                "product_orbit_dim": report.product_orbit_dim,
                "ambient_dim": report.ambient_dim,
            });
            if let Some(rank) = estimated {
                doc["estimated_rank"] = json!(rank);
            }
            print_json(&doc);
            Ok(())
        }
        Command::VerifySurface { input, tol } => {
            let text = std::fs::read_to_string(&input).map_err(|e| io_failure(e, &input))?;
            let mut checked = 0usize;
            let mut max_residual = 0.0f64;
            for line in text.lines() {
                if line.starts_with('#') || line.starts_with("x,") || line.is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != 4 {
                    return Err(Failure::invalid(format!("malformed CSV row: {line}")));
                }
                if fields[3].trim() != "1" {
                    continue;
                }
                let parse = |s: &str| -> Result<f64, Failure> {
                    s.trim()
                        .parse()
                        .map_err(|_| Failure::invalid(format!("bad number in row: {line}")))
                };
                let (x, y, z) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                let residual = surface_constraint_residual(x, y, z).abs();
                max_residual = max_residual.max(residual);
                checked += 1;
                let coords = OrbitCoords::new(x, y, z);
                if inverse_coords_d4(&coords).is_err() {
                    return Err(Failure::invalid(format!(
                        "surface point outside chamber: {line}"
                    )));
                }
            }
            let manifest = RunManifest::new("verify-surface", 0)
                .param("input", input.display().to_string())
                .param("tol", tol);
            print_json(&json!({
                "manifest": manifest,
                "checked": checked,
                "max_residual": max_residual,
                "ok": max_residual <= tol,
            }));
            if max_residual <= tol {
                Ok(())
            } else {
                Err(Failure::invalid(format!(
                    "constraint residual {max_residual:.3e} exceeds tol {tol:.3e}"
                )))
            }
        }
    }
}

fn write_surface_csv(
    path: &std::path::Path,
    manifest: &RunManifest,
    samples: &[SurfaceSample],
) -> Result<(), Failure> {
    let mut buf = String::new();
    buf.push_str(&format!(
        "# {}\n",
        serde_json::to_string(manifest).expect("serializable")
    ));
    buf.push_str("x,y,z,present\n");
    for s in samples {
        match s.z {
            Some(z) => buf.push_str(&format!("{},{},{},1\n", s.x, s.y, z)),
            None => buf.push_str(&format!("{},{},,0\n", s.x, s.y)),
        }
    }
    let mut file = std::fs::File::create(path).map_err(|e| io_failure(e, path))?;
    file.write_all(buf.as_bytes()).map_err(|e| io_failure(e, path))?;
    Ok(())
}

fn read_state_file(path: &std::path::Path) -> Result<(DensityMatrix, usize, usize), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(e, path))?;
    let doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("bad JSON: {e}")))?;
    let dims = doc["dims"]
        .as_array()
        .ok_or_else(|| Failure::invalid("missing dims"))?;
    if dims.len() != 2 {
        return Err(Failure::invalid("dims must be [dA, dB]"));
    }
    let da = dims[0].as_u64().ok_or_else(|| Failure::invalid("bad dims"))? as usize;
    let db = dims[1].as_u64().ok_or_else(|| Failure::invalid("bad dims"))? as usize;
    let n = da * db;
    let read_grid = |key: &str| -> Result<Vec<Vec<f64>>, Failure> {
        let rows = doc[key]
            .as_array()
            .ok_or_else(|| Failure::invalid(format!("missing {key}")))?;
        if rows.len() != n {
            return Err(Failure::invalid(format!("{key} must be {n}x{n}")));
        }
        rows.iter()
            .map(|r| {
                let row = r
                    .as_array()
                    .ok_or_else(|| Failure::invalid(format!("bad row in {key}")))?;
                if row.len() != n {
                    return Err(Failure::invalid(format!("{key} must be {n}x{n}")));
                }
                row.iter()
                    .map(|v| v.as_f64().ok_or_else(|| Failure::invalid("bad entry")))
                    .collect()
            })
            .collect()
    };
    let re = read_grid("re")?;
    let im = read_grid("im")?;
    let mat = CMatrix::from_fn(n, n, |i, j| Complex64::new(re[i][j], im[i][j]));
    let rho = DensityMatrix::new(mat)?;
    Ok((rho, da, db))
}
