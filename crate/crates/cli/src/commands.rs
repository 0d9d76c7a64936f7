use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use shapeopt::acontrario::{detect, detect_and_match, erode, DetectionParams, PsiMode};
use shapeopt::data_terms::{background_difference, edge_weight, median_background};
use shapeopt::energy::shape_energy;
use shapeopt::graph_cut::{cut_segment_with, CapacityMode};
use shapeopt::io::{read_field_file, write_mask_file, write_pfm_file, write_pgm_file, IntensityScale};
use shapeopt::level_set::alpha_sweep;
use shapeopt::rof::{rof_solve, rof_solve_traced, ResidueNorm, RofParams};
use shapeopt::{BinaryMask, ScalarField, ShapeError, WeightField};

use crate::{BackgroundArgs, Command, CutArgs, DetectArgs, Intensity, Residue, RofArgs, ThresholdArgs, WeightArgs};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<ShapeError> for Failure {
    fn from(e: ShapeError) -> Self {
        let code = match e {
            ShapeError::Io(_) | ShapeError::Format(_) => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self { code: EXIT_IO, message: e.to_string() }
    }
}

type Outcome = Result<(), Failure>;

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Rof(a) => rof(a),
        Command::Threshold(a) => threshold(a),
        Command::Cut(a) => cut(a),
        Command::Detect(a) => detect_cmd(a),
        Command::Background(a) => background(a),
    }
}

fn scale(i: Intensity) -> IntensityScale {
    match i {
        Intensity::Raw => IntensityScale::Raw,
        Intensity::Normalized => IntensityScale::Normalized,
    }
}

fn read(path: &Path, intensity: Intensity) -> Result<ScalarField, Failure> {
    read_field_file(path, scale(intensity)).map_err(|e| with_path(e, path))
}

fn with_path(e: ShapeError, path: &Path) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

/// `.pgm` gets an 8-bit PGM, anything else a PFM.
fn write_field(path: &Path, field: &ScalarField) -> Outcome {
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let r = if is_pgm {
        write_pgm_file(path, field)
    } else {
        write_pfm_file(path, field)
    };
    r.map_err(|e| with_path(e, path))
}

fn write_mask(path: &Path, mask: &BinaryMask) -> Outcome {
    write_mask_file(path, mask).map_err(|e| with_path(e, path))
}

fn load_weights(args: &WeightArgs, dims: (usize, usize)) -> Result<WeightField, Failure> {
    let g = if let Some(path) = &args.image {
        edge_weight(&read(path, args.intensity)?, args.lambda, args.mu)?
    } else if let Some(path) = &args.weights {
        WeightField::new(read(path, args.intensity)?)?
    } else {
        if !(args.lambda >= 0.0 && args.mu >= 0.0 && args.lambda + args.mu > 0.0) {
            return Err(Failure::usage(format!(
                "constant weight lambda + mu must be positive, got {} + {}",
                args.lambda, args.mu
            )));
        }
        WeightField::uniform(dims.0, dims.1, args.lambda + args.mu)?
    };
    if g.dims() != dims {
        return Err(ShapeError::DimensionMismatch { expected: dims, found: g.dims() }.into());
    }
    Ok(g)
}

fn rof(a: RofArgs) -> Outcome {
    let w0 = read(&a.input, a.weights.intensity)?;
    let g = load_weights(&a.weights, w0.dims())?;
    // the regularization strength lives in g, so the solver runs at lambda = 1
    let params = RofParams::default()
        .with_tau(a.tau)?
        .with_tol(a.tol)?
        .with_max_iter(a.max_iter)?
        .with_residue_norm(match a.residue_norm {
            Residue::Plain => ResidueNorm::Plain,
            Residue::PerPixel => ResidueNorm::PerPixel,
        });

    let start = Instant::now();
    let sol = match &a.trace {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path).map_err(|e| with_path(e.into(), path))?);
            let sol = rof_solve_traced(&w0, &g, &params, &mut out)?;
            out.flush()?;
            sol
        }
        None => rof_solve(&w0, &g, &params)?,
    };
    let elapsed = start.elapsed();

    write_field(&a.output, &sol.u)?;
    if let Some(path) = &a.duals_out {
        let (h, w) = sol.duals.dims();
        let mut stacked = Vec::with_capacity(4 * h * w);
        stacked.extend_from_slice(sol.duals.xi.comp_x());
        stacked.extend_from_slice(sol.duals.xi.comp_y());
        stacked.extend_from_slice(sol.duals.eta.comp_x());
        stacked.extend_from_slice(sol.duals.eta.comp_y());
        write_pfm_file(path, &ScalarField::new(4 * h, w, stacked)?).map_err(|e| with_path(e, path))?;
    }
    if let Some(path) = &a.weights_out {
        write_pfm_file(path, g.field()).map_err(|e| with_path(e, path))?;
    }

    let r = &sol.report;
    println!("iterations {}", r.iterations);
    println!("residue {:e}", r.final_residue);
    println!("converged {}", r.converged);
    // timing varies run to run, keep it off stdout
    eprintln!("time {:.3} s", elapsed.as_secs_f64());
    if a.strict_convergence && !r.converged {
        return Err(Failure {
            code: EXIT_NUMERICAL,
            message: format!(
                "no convergence within {} iterations (residue {:e} > {:e})",
                r.iterations, r.final_residue, a.tol
            ),
        });
    }
    Ok(())
}

fn expand_pattern(pattern: &str, alpha: f64) -> PathBuf {
    PathBuf::from(pattern.replace("{alpha}", &alpha.to_string()))
}

fn threshold(a: ThresholdArgs) -> Outcome {
    if a.alpha.len() > 1 && !a.output_pattern.contains("{alpha}") {
        return Err(Failure::usage("several --alpha values need {alpha} in --output-pattern"));
    }
    let u = read(&a.input, a.intensity)?;
    let energy_terms = match (&a.data, &a.weights) {
        (Some(d), Some(w)) => {
            let f = read(d, a.intensity)?;
            let g = WeightField::new(read(w, a.intensity)?)?;
            Some((f, g))
        }
        _ => None,
    };
    let strict = !a.non_strict;
    let sweep = alpha_sweep(&u, &a.alpha, strict);

    for s in &sweep {
        write_mask(&expand_pattern(&a.output_pattern, s.alpha), &s.mask)?;
        print!("alpha {} pixels {}", s.alpha, s.mask.count());
        if let Some((f, g)) = &energy_terms {
            print!(" energy {:.12}", shape_energy(&s.mask, f, g, s.alpha)?);
        }
        println!();
        if s.near_level {
            eprintln!("warning: alpha {} is within 1e-3 of a value of the field", s.alpha);
        }
    }

    let mut by_level: Vec<_> = sweep.iter().collect();
    by_level.sort_by(|x, y| x.alpha.total_cmp(&y.alpha));
    let nested = by_level.windows(2).all(|p| p[1].mask.is_subset_of(&p[0].mask));
    if !nested {
        return Err(Failure { code: EXIT_NUMERICAL, message: "level sets are not nested".into() });
    }
    Ok(())
}

fn cut(a: CutArgs) -> Outcome {
    let f = read(&a.data, a.weights.intensity)?;
    let g = load_weights(&a.weights, f.dims())?;
    let mode = match a.quantize {
        Some(bits) if bits == 0 || bits > 52 => {
            return Err(Failure::usage(format!("--quantize must be in 1..=52, got {bits}")))
        }
        Some(bits) => CapacityMode::Quantized { bits },
        None => CapacityMode::Real,
    };
    let seg = cut_segment_with(&f, &g, a.alpha, mode)?;
    write_mask(&a.output, &seg.mask)?;
    println!("energy {:.12}", seg.energy);
    println!("flow {:.12}", seg.flow_value);
    println!("pixels {}", seg.mask.count());
    Ok(())
}

fn detect_cmd(a: DetectArgs) -> Outcome {
    let field = read(&a.field, a.intensity)?;
    let params = DetectionParams {
        radius: a.radius,
        epsilon: a.epsilon,
        psi: a.psi_scale.map_or(PsiMode::MaxNormalized, PsiMode::Fixed),
    };
    let raw = detect(&field, &params)?;
    let eroded = erode(&raw.mask, params.radius / 2);
    write_mask(&a.output, &eroded)?;
    println!("mu_hat {:.12}", raw.mu_hat);
    println!("detected {}", raw.mask.count());
    println!("eroded {}", eroded.count());

    if let Some(path) = &a.match_field {
        let u = read(path, a.intensity)?;
        let m = detect_and_match(&field, &u, &params)?;
        println!("level {} distance {}", m.matched.level, m.matched.distance);
        if let Some(out) = &a.match_output {
            write_mask(out, &m.matched.mask)?;
        }
    }
    Ok(())
}

fn diff_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match output.extension() {
        Some(ext) => format!("{stem}-diff.{}", ext.to_string_lossy()),
        None => format!("{stem}-diff"),
    };
    output.with_file_name(name)
}

fn background(a: BackgroundArgs) -> Outcome {
    let frames = a
        .frames
        .iter()
        .map(|p| read(p, a.intensity))
        .collect::<Result<Vec<_>, _>>()?;
    let b = median_background(&frames)?;
    write_field(&a.output, &b)?;
    println!("frames {}", frames.len());
    if let Some(path) = &a.current {
        let current = read(path, a.intensity)?;
        let d = background_difference(&current, &b)?;
        let out = a.diff_output.clone().unwrap_or_else(|| diff_path(&a.output));
        write_field(&out, &d)?;
        println!("difference max {:.12}", d.max());
    }
    Ok(())
}
