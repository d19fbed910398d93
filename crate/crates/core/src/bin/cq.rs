use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cq_core::colorspace::Scaling;
use cq_core::imagestats::{characterize_image, COVARIATE_NAMES};
use cq_core::metrics::{mse, psnr_from_mse, vif_with, VifChannel};
use cq_core::pipeline::{
    decode, encode, quantize_image, run_experiment, write_outputs, ExperimentConfig, ImageInput,
};
use cq_core::quantizer::KMeansConfig;
use cq_core::Space;

#[derive(Parser)]
#[command(
    name = "cq",
    version,
    about = "k-means color quantization across colorspaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct VifArgs {
    /// Compute VIF on the three RGB planes instead of luminance.
    #[arg(long)]
    rgb_vif: bool,
}

impl VifArgs {
    fn channel(&self) -> VifChannel {
        if self.rgb_vif {
            VifChannel::RgbMean
        } else {
            VifChannel::Luminance
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Quantize one image.
    Quantize {
        #[arg(long)]
        space: Space,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, default_value = "fixed")]
        scaling: Scaling,
        input: PathBuf,
        output: PathBuf,
    },
    /// Print VIF, PSNR and MSE of DIST against REF.
    Evaluate {
        reference: PathBuf,
        distorted: PathBuf,
        #[command(flatten)]
        vif: VifArgs,
    },
    /// Print the image profile as a CSV row.
    Characterize { input: PathBuf },
    /// Run every (space, k) cell over a set of images.
    Batch {
        #[arg(long, value_delimiter = ',', default_value = "rgb,xyz,luv")]
        spaces: Vec<Space>,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        ks: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, default_value = "fixed")]
        scaling: Scaling,
        /// Record per-cell wall time in the `ms` column.
        #[arg(long)]
        timings: bool,
        /// Skip writing quantized images.
        #[arg(long)]
        no_images: bool,
        #[command(flatten)]
        vif: VifArgs,
        #[arg(required = true)]
        images: Vec<PathBuf>,
    },
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("CQ_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("CQ_THREADS must be a positive integer, got '{v}'"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Quantize {
            space,
            k,
            seed,
            restarts,
            scaling,
            input,
            output,
        } => {
            let img = decode(&input)?;
            let mut cfg = KMeansConfig::new(k).with_seed(seed);
            if let Some(r) = restarts {
                cfg = cfg.with_restarts(r);
            }
            let q = quantize_image(&img, space, &cfg, scaling)?;
            encode(&q.image, &output)?;
            println!("wcss={} clamped={}", q.wcss, q.clamped);
            Ok(true)
        }
        Command::Evaluate {
            reference,
            distorted,
            vif,
        } => {
            let r = decode(&reference)?;
            let d = decode(&distorted)?;
            let v = vif_with(&r, &d, vif.channel())?;
            let m = mse(&r, &d)?;
            println!("vif={v} psnr={} mse={m}", psnr_from_mse(m));
            Ok(true)
        }
        Command::Characterize { input } => {
            let img = decode(&input)?;
            let p = characterize_image(&img)?;
            println!("image,{},zero_chroma", COVARIATE_NAMES.join(","));
            let values: Vec<String> = p.covariates().iter().map(f64::to_string).collect();
            let id = input.file_stem().unwrap_or_default().to_string_lossy();
            println!("{id},{},{}", values.join(","), p.zero_chroma);
            Ok(true)
        }
        Command::Batch {
            spaces,
            ks,
            out,
            seed,
            restarts,
            scaling,
            timings,
            no_images,
            vif,
            images,
        } => {
            let mut cfg = ExperimentConfig::new(spaces, ks, seed);
            cfg.restarts = restarts;
            cfg.scaling = scaling;
            cfg.timings = timings;
            cfg.vif_channel = vif.channel();
            if !no_images {
                cfg.image_dir = Some(out.join("images"));
            }
            let inputs: Vec<ImageInput> = images.into_iter().map(ImageInput::file).collect();
            let output = run_experiment(&inputs, &cfg)?;
            write_outputs(&out, &output)?;
            for f in &output.failures {
                eprintln!("failed: {}: {}", f.id, f.message);
            }
            Ok(output.failures.is_empty())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
