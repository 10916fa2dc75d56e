//! `ellip`: data, confidence and HE ellipses, shrinkage estimators and
//! their figures from the command line.
//!
//! Every subcommand prints one JSON object (or writes it with `--json`) and
//! can emit an SVG figure with `--svg`. Exit status is 0 on success, 2 for
//! bad input and 3 when the data are numerically unusable.

mod commands;
mod json;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ellip_core::EllipError;

#[derive(Parser, Debug)]
#[command(name = "ellip", version, about = "Ellipsoids for statistical data analysis and graphics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Output {
    /// Write the JSON result here instead of standard output.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    /// Also write an SVG figure.
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    /// Chi-square coverage constant.
    Chisq,
    /// Small-sample F coverage constant.
    F,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeScale {
    Effect,
    Significance,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoyMode {
    Corrected,
    AsPrinted,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaModel {
    Fixed,
    Random,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GellDemo {
    /// Signatures of the proper and flat 3D examples and the flat one's dual.
    Signatures,
    /// Conjugate axes of the 2D example under three factorizations.
    Conjugate,
    /// Projection of the proper 3D example onto a plane and a line.
    Project,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Data ellipse, correlation and regression slopes for two variables.
    DataEllipse {
        #[arg(long)]
        data: String,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        /// Coverage level(s), comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0.68")]
        level: Vec<f64>,
        #[arg(long, value_enum, default_value = "chisq")]
        coverage: Coverage,
    },
    /// Within-group, between-group and marginal slopes.
    Decompose {
        /// CSV file; omit to use the seeded five-group simulation.
        #[arg(long)]
        data: Option<String>,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long)]
        group: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Simulate negatively correlated within-group data.
        #[arg(long)]
        negative_within: bool,
    },
    /// Joint confidence ellipse for two coefficients and its shadows.
    Betaspace {
        #[arg(long, default_value = "synthetic-coffee")]
        data: String,
        #[arg(long, default_value = "heart")]
        response: String,
        #[arg(long, value_delimiter = ',', default_value = "coffee,stress")]
        predictors: Vec<String>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Added-variable coordinates for one predictor.
    Avp {
        #[arg(long, default_value = "synthetic-coffee")]
        data: String,
        #[arg(long, default_value = "heart")]
        response: String,
        #[arg(long, value_delimiter = ',', default_value = "coffee,stress")]
        predictors: Vec<String>,
        /// The predictor whose partial relation is shown.
        #[arg(long, default_value = "coffee")]
        focus: String,
        /// Draw marginal points joined to the added-variable points.
        #[arg(long)]
        overlay: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Slope attenuation under added predictor noise.
    MeasureError {
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,1.5,2")]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// One-way MANOVA tests and HE ellipses.
    Heplot {
        #[arg(long)]
        data: String,
        #[arg(long)]
        group: String,
        /// Response variables; defaults to every numeric column.
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
        /// Two variables to draw; defaults to the first two responses.
        #[arg(long, value_delimiter = ',')]
        plot: Vec<String>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "significance")]
        scaling: HeScale,
        #[arg(long, default_value_t = 0.68)]
        level: f64,
        #[arg(long, value_enum, default_value = "corrected")]
        roy_df: RoyMode,
    },
    /// Split the group hypothesis into one-degree-of-freedom contrasts.
    Contrasts {
        #[arg(long)]
        data: String,
        #[arg(long)]
        group: String,
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
        /// `label=c1:c2:...` over the groups in order of appearance;
        /// repeatable. Defaults to Helmert contrasts.
        #[arg(long)]
        contrast: Vec<String>,
    },
    /// Canonical discriminant analysis.
    Canonical {
        #[arg(long)]
        data: String,
        #[arg(long)]
        group: String,
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
    },
    /// Locus where two ellipse families touch.
    Kiss {
        #[arg(long, value_delimiter = ',', default_value = "-2,2")]
        m1: Vec<f64>,
        /// Row-major 2×2 matrix.
        #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.5,1.5")]
        a1: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "2,6")]
        m2: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1.5,-0.3,-0.3,1")]
        a2: Vec<f64>,
        /// Treat the matrices as shapes (moment form) instead of quadratic forms.
        #[arg(long)]
        shape: bool,
        /// Radii of the first family at which to find touching members.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        /// x_min,x_max,y_min,y_max.
        #[arg(long, value_delimiter = ',', default_value = "-8,8,-4,12")]
        bbox: Vec<f64>,
    },
    /// Linear discriminant axis between two groups.
    Lda {
        #[arg(long)]
        data: String,
        #[arg(long)]
        group: String,
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
        /// The two groups to separate; defaults to the first two.
        #[arg(long, value_delimiter = ',')]
        groups: Vec<String>,
    },
    /// Ridge coefficients and variance ellipses over a grid of constants.
    RidgeTrace {
        #[arg(long, default_value = "longley")]
        data: String,
        #[arg(long, default_value = "Employed")]
        response: String,
        /// Defaults to every other numeric column.
        #[arg(long, value_delimiter = ',')]
        predictors: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "0,0.005,0.01,0.02,0.04,0.08")]
        ks: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "GNP,Unemployed")]
        pair: Vec<String>,
    },
    /// Posterior mean under a normal prior, on standardized predictors.
    Bayes {
        #[arg(long, default_value = "longley")]
        data: String,
        #[arg(long, default_value = "Employed")]
        response: String,
        #[arg(long, value_delimiter = ',')]
        predictors: Vec<String>,
        /// Prior mean; defaults to zero.
        #[arg(long, value_delimiter = ',')]
        prior: Vec<f64>,
        /// Prior precision k in `A = k I`.
        #[arg(long, default_value_t = 0.01)]
        precision: f64,
    },
    /// Per-school BLUEs and BLUPs for the simulated school sample.
    Blup {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Estimate G by moments instead of using the generating value.
        #[arg(long)]
        estimate_g: bool,
    },
    /// Multivariate meta-analysis of bivariate effects.
    Meta {
        #[arg(long, default_value = "berkey")]
        data: String,
        #[arg(long, value_enum, default_value = "random")]
        model: MetaModel,
        /// Between-study covariance `d11,d12,d22`; estimated by moments if absent.
        #[arg(long, value_delimiter = ',')]
        delta: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "PD,AL")]
        effects: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "var_PD,cov_PD_AL,var_AL")]
        cov: Vec<String>,
    },
    /// Generalized-ellipsoid demonstrations on fixed example matrices.
    Gell {
        #[arg(value_enum, default_value = "signatures")]
        demo: GellDemo,
    },
    /// List bundled datasets.
    Fixtures,
}

/// Failure categories mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl From<EllipError> for CliError {
    fn from(e: EllipError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.cmd, &cli.out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
