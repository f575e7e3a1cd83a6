use std::process::ExitCode;

use clap::{Parser, Subcommand};
use glint_cli::commands::{self, *};

#[derive(Parser)]
#[command(name = "glint", version, about = "Specular material stimuli and illumination statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Unpolarized Fresnel reflectance against incident angle, as CSV.
    FresnelCurve(FresnelCurveArgs),
    /// Low- or high-pass Gaussian filtering of a light map.
    Filter(FilterArgs),
    /// Multiply a light map by a positive factor.
    Scale(ScaleArgs),
    /// Replace each pixel by its Rec.709 luminance.
    Desaturate(DesaturateArgs),
    /// Spherical-harmonic spectrum, per-order power and illumination metrics.
    ShAnalyze(ShAnalyzeArgs),
    /// Render one stimulus as an 8-bit PNG plus object mask.
    Render(RenderArgs),
    /// Specular coverage and mean intensity of a stimulus image.
    Coverage(CoverageArgs),
    /// Bias index per light map from a ratings CSV.
    Bias(BiasArgs),
    /// Least-squares fit between two CSV columns joined on light_map.
    Regress(RegressArgs),
    /// Run the rating experiment HTTP service.
    Serve(ServeArgs),
    /// Run the full map, render, coverage, metrics and regression pipeline.
    Pipeline(PipelineArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::FresnelCurve(a) => commands::fresnel_curve(a),
        Command::Filter(a) => commands::filter(a),
        Command::Scale(a) => commands::scale(a),
        Command::Desaturate(a) => commands::desaturate(a),
        Command::ShAnalyze(a) => commands::sh_analyze(a),
        Command::Render(a) => commands::render(a),
        Command::Coverage(a) => commands::coverage(a),
        Command::Bias(a) => commands::bias(a),
        Command::Regress(a) => commands::regress(a),
        Command::Serve(a) => commands::serve(a),
        Command::Pipeline(a) => commands::pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
