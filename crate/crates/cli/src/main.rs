use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use canopy_par::config::RunConfig;
use canopy_par::field::build_field;
use canopy_par::geometry::{save_ply, LengthUnit, PlyEncoding};
use canopy_par::output::{self, create};
use canopy_par::plantgen::{generate_maize, PlantParams};
use canopy_par::radiation::default_sensors;
use canopy_par::simdriver::{run_season, run_sweep, run_timepoint};
use canopy_par::solar::TimePoint;
use canopy_par::validate::{read_records, validate, write_report};
use clap::{Args, Parser, Subcommand};
use log::info;

#[derive(Parser)]
#[command(name = "canopy-par", version, about = "PAR interception in virtual maize fields")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "CANOPY_PAR_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Unit of the field spacings in the config.
    #[arg(long, value_parser = parse_unit)]
    unit: Option<LengthUnit>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one field over the season and write flux, timepoint, daily and seasonal tables.
    Simulate(RunArgs),
    /// Run every scenario of the config's sweep block.
    Sweep(RunArgs),
    /// Write a procedural plant as PLY with a JSON sidecar.
    GenPlant {
        /// JSON file of plant parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// PLY path; the sidecar goes next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        binary: bool,
    },
    /// R² of simulated against measured intercepted fractions.
    Validate {
        /// CSV with genotype,measured_fraction,simulated_fraction.
        pairs: PathBuf,
        /// Report CSV; printed when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the configured field (one periodic tile, world frame) as PLY.
    ExportField {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_unit)]
        unit: Option<LengthUnit>,
        #[arg(long)]
        binary: bool,
    },
}

fn parse_unit(s: &str) -> Result<LengthUnit, String> {
    s.parse().map_err(|e: canopy_par::Error| e.to_string())
}

fn encoding(binary: bool) -> PlyEncoding {
    if binary {
        PlyEncoding::BinaryLittleEndian
    } else {
        PlyEncoding::Ascii
    }
}

fn load_config(path: Option<&Path>) -> Result<(RunConfig, PathBuf)> {
    match path {
        Some(p) => {
            let cfg = RunConfig::load(p)?;
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            Ok((cfg, base))
        }
        None => Ok((RunConfig::default(), PathBuf::from("."))),
    }
}

fn prepare(args: &RunArgs) -> Result<(RunConfig, PathBuf, PathBuf)> {
    let (mut cfg, base) = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(unit) = args.unit {
        cfg.field.unit = unit;
    }
    cfg.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("canopy-par-out"));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok((cfg, base, out))
}

fn simulate(args: &RunArgs) -> Result<()> {
    let (cfg, base, out) = prepare(args)?;
    let plant = cfg.plant.build(&base)?;
    let scene = build_field(&cfg.layout(plant))?;
    let sensors = default_sensors(&scene);
    let radiation = cfg.radiation_config();
    info!("{} primitives, {} plants", scene.mesh.len(), scene.plants.len());

    let season = run_season(&scene, &cfg.schedule, &cfg.sky, &radiation, &sensors)?;
    let snap_time = TimePoint {
        date: cfg.schedule.start_date,
        minutes: cfg.flux_snapshot.minutes(),
    };
    let snap = run_timepoint(&scene, &cfg.schedule.location, &snap_time, &cfg.sky, &radiation, &sensors)?;

    let key = cfg.scenario_key();
    output::write_flux(create(&out.join("flux.csv"))?, &scene, &snap.flux)?;
    output::write_sensors(create(&out.join("sensors.csv"))?, &[(snap_time, sensors, snap.sensors)])?;
    output::write_timepoints(create(&out.join("timepoints.csv"))?, &season)?;
    output::write_daily(create(&out.join("daily.csv"))?, &key, &season)?;
    output::write_seasonal(create(&out.join("seasonal.csv"))?, &key, &season)?;

    let area = season.per_ground_area_mol.unwrap_or(f64::NAN);
    println!(
        "season {} days: {area:.3} mol/m2, {:.4} mol/plant, outputs in {}",
        season.days.len(),
        season.mean_per_plant_mol(),
        out.display()
    );
    Ok(())
}

fn sweep(args: &RunArgs) -> Result<()> {
    let (cfg, base, out) = prepare(args)?;
    let plant = cfg.plant.build(&base)?;
    let spec = cfg.scenario_spec(plant);
    info!("{} scenarios", spec.len());
    let table = run_sweep(&spec)?;
    output::write_sweep(create(&out.join("sweep.csv"))?, &table)?;
    output::write_ranking(create(&out.join("ranking.csv"))?, &table)?;
    let failed = table.rows.iter().filter(|r| r.outcome.is_err()).count();
    println!(
        "{} scenarios, {failed} failed, outputs in {}",
        table.rows.len(),
        out.display()
    );
    Ok(())
}

fn gen_plant(config: Option<&Path>, out: &Path, seed: Option<u64>, binary: bool) -> Result<()> {
    let mut params: PlantParams = match config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("{}", p.display()))?
        }
        None => PlantParams::default(),
    };
    if let Some(s) = seed {
        params.seed = s;
    }
    let plant = generate_maize(&params)?;
    save_ply(&plant.mesh, out, encoding(binary))?;
    let sidecar = serde_json::json!({
        "params": params,
        "leaf_plane_azimuth": plant.leaf_plane_azimuth,
        "total_leaf_area": plant.total_leaf_area,
    });
    let side = out.with_extension("json");
    fs::write(&side, serde_json::to_string_pretty(&sidecar)? + "\n")
        .with_context(|| format!("writing {}", side.display()))?;
    println!(
        "{} triangles, leaf area {:.4} m2, leaf plane {:.4} rad",
        plant.mesh.len(),
        plant.total_leaf_area,
        plant.leaf_plane_azimuth
    );
    Ok(())
}

fn validate_cmd(pairs: &Path, out: Option<&Path>) -> Result<()> {
    let report = validate(read_records(pairs)?)?;
    match out {
        Some(p) => write_report(create(p)?, &report)?,
        None => write_report(std::io::stdout().lock(), &report)?,
    }
    println!("R2 {}", report.r_squared);
    Ok(())
}

fn export_field(config: Option<&Path>, out: &Path, unit: Option<LengthUnit>, binary: bool) -> Result<()> {
    let (mut cfg, base) = load_config(config)?;
    if let Some(u) = unit {
        cfg.field.unit = u;
        cfg.validate()?;
    }
    let plant = cfg.plant.build(&base)?;
    let scene = build_field(&cfg.layout(plant))?;
    save_ply(&scene.world_mesh(), out, encoding(binary))?;
    println!("{} triangles written to {}", scene.mesh.len(), out.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => sweep(args),
        Command::GenPlant {
            config,
            out,
            seed,
            binary,
        } => gen_plant(config.as_deref(), out, *seed, *binary),
        Command::Validate { pairs, out } => validate_cmd(pairs, out.as_deref()),
        Command::ExportField {
            config,
            out,
            unit,
            binary,
        } => export_field(config.as_deref(), out, *unit, *binary),
    }
}
