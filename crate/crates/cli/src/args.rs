use std::path::PathBuf;

use clap::{Args, ValueEnum};
use edgemorph::eval::{Crop, EvalConfig};
use edgemorph::{OcclusionParams, Thresholds, View};

/// Hyperparameters shared by every stage.
#[derive(Args, Debug, Clone)]
pub struct ThresholdArgs {
    /// Morph sample-space control
    #[arg(long = "t", default_value_t = 1.0)]
    pub t: f64,
    /// Edge gradient threshold
    #[arg(long, default_value_t = 0.11)]
    pub k1: f64,
    /// Association radius in pixels
    #[arg(long, default_value_t = 20.0)]
    pub k2: f64,
    /// Occlusion mask threshold
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub k3: f64,
    /// Locality gate steepness
    #[arg(long, default_value_t = 17.0, allow_negative_numbers = true)]
    pub m1: f64,
    /// Locality gate midpoint
    #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
    pub m2: f64,
    /// Relative weight offset
    #[arg(long, default_value_t = 1.6)]
    pub m3: f64,
    /// Relative weight exponent
    #[arg(long, default_value_t = 1.9, allow_negative_numbers = true)]
    pub m4: f64,
    /// SSIM share of the photometric loss
    #[arg(long, default_value_t = 0.85)]
    pub alpha: f64,
    /// Proxy loss weight
    #[arg(long, default_value_t = 1.0)]
    pub lambda1: f64,
    /// Morph loss weight
    #[arg(long, default_value_t = 5.0)]
    pub lambda2: f64,
    /// Pixels per unit of distance fed to the morph weights
    #[arg(long, default_value_t = 7.0)]
    pub distance_scale: f64,
    /// Occlusion search width in pixels [default: image width]
    #[arg(long)]
    pub search_width: Option<usize>,
}

impl ThresholdArgs {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            t: self.t,
            k1: self.k1,
            k2: self.k2,
            k3: self.k3,
            m1: self.m1,
            m2: self.m2,
            m3: self.m3,
            m4: self.m4,
            alpha: self.alpha,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            search_width: self.search_width,
            distance_scale: self.distance_scale,
        }
    }

    pub fn occlusion(&self, view: ViewArg) -> OcclusionParams {
        OcclusionParams { search_width: self.search_width, k3: self.k3, view: view.into() }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Default)]
pub enum ViewArg {
    #[default]
    Left,
    Right,
}

impl From<ViewArg> for View {
    fn from(v: ViewArg) -> Self {
        match v {
            ViewArg::Left => View::Left,
            ViewArg::Right => View::Right,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Default)]
pub enum CropArg {
    None,
    #[default]
    Garg,
}

impl From<CropArg> for Crop {
    fn from(c: CropArg) -> Self {
        match c {
            CropArg::None => Crop::None,
            CropArg::Garg => Crop::Garg,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Default)]
pub enum ImageFormatArg {
    #[default]
    Png,
    Pfm,
}

impl ImageFormatArg {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormatArg::Png => "png",
            ImageFormatArg::Pfm => "pfm",
        }
    }
}

/// Maps stored as disparity are converted with the camera below.
#[derive(ValueEnum, Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MapKind {
    #[default]
    Depth,
    Disparity,
}

#[derive(Args, Debug, Clone)]
pub struct CameraArgs {
    /// Focal length in pixels
    #[arg(long, default_value_t = 721.0)]
    pub focal: f64,
    /// Stereo baseline in metres
    #[arg(long, default_value_t = 0.54)]
    pub baseline: f64,
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    /// Depth cap in metres
    #[arg(long, default_value_t = 80.0)]
    pub cap: f64,
    /// Evaluation crop
    #[arg(long, value_enum, default_value_t = CropArg::Garg)]
    pub crop: CropArg,
    /// Near-edge band in pixels
    #[arg(long, default_value_t = 3.0)]
    pub band: f64,
    /// Rescale predictions to the ground-truth median
    #[arg(long)]
    pub median_scale: bool,
}

impl EvalArgs {
    pub fn config(&self) -> EvalConfig {
        EvalConfig { cap: self.cap, crop: self.crop.into(), median_scale: self.median_scale }
    }
}

#[derive(Args, Debug)]
pub struct EdgesArgs {
    /// Disparity PFM or mask (PGM/PNG)
    #[arg(long)]
    pub input: PathBuf,
    /// Edge gradient threshold
    #[arg(long, default_value_t = 0.11)]
    pub k1: f64,
    /// Divide a disparity map by this before thresholding
    #[arg(long)]
    pub normalize_max: Option<f64>,
    /// Edge mask output (PGM)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConsistencyArgs {
    /// Segmentation mask (PGM/PNG)
    #[arg(long)]
    pub seg: PathBuf,
    /// Disparity PFM
    #[arg(long)]
    pub disp: PathBuf,
    /// Edge gradient threshold
    #[arg(long, default_value_t = 0.11)]
    pub k1: f64,
    /// Association radius in pixels
    #[arg(long, default_value_t = 20.0)]
    pub k2: f64,
    /// Divide the disparity by this before edge detection
    #[arg(long)]
    pub normalize_max: Option<f64>,
}

#[derive(Args, Debug)]
pub struct MorphArgs {
    /// Segmentation mask (PGM/PNG)
    #[arg(long)]
    pub seg: PathBuf,
    /// Disparity PFM
    #[arg(long)]
    pub disp: PathBuf,
    /// Morphed disparity output (PFM)
    #[arg(long)]
    pub out: PathBuf,
    /// Divide the disparity by this before edge detection
    #[arg(long)]
    pub normalize_max: Option<f64>,
    #[command(flatten)]
    pub th: ThresholdArgs,
}

#[derive(Args, Debug)]
pub struct OcclusionArgs {
    /// Disparity PFM in pixels
    #[arg(long)]
    pub disp: PathBuf,
    /// Mask output (PGM)
    #[arg(long)]
    pub out: PathBuf,
    /// Occlusion mask threshold
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub k3: f64,
    /// Search width in pixels [default: image width]
    #[arg(long)]
    pub search_width: Option<usize>,
    /// View the disparity belongs to
    #[arg(long, value_enum, default_value_t = ViewArg::Left)]
    pub view: ViewArg,
}

#[derive(Args, Debug)]
pub struct LossArgs {
    /// Left image (PNG or PFM)
    #[arg(long)]
    pub left: PathBuf,
    /// Right image (PNG or PFM)
    #[arg(long)]
    pub right: PathBuf,
    /// Left-view disparity PFM in pixels
    #[arg(long)]
    pub disp: PathBuf,
    /// Segmentation-augmented disparity PFM
    #[arg(long)]
    pub morphed: Option<PathBuf>,
    /// Proxy disparity PFM
    #[arg(long)]
    pub proxy: Option<PathBuf>,
    /// Occlusion mask (PGM/PNG) [default: computed from --disp]
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[command(flatten)]
    pub th: ThresholdArgs,
}

#[derive(Args, Debug)]
pub struct EvalCmdArgs {
    /// Predicted map (PFM); a glob pattern with --glob
    #[arg(long)]
    pub pred: String,
    /// Ground-truth map (PFM); a directory with --glob
    #[arg(long)]
    pub gt: PathBuf,
    /// Segmentation mask for region splits; a directory with --glob
    #[arg(long)]
    pub seg: Option<PathBuf>,
    /// Treat --pred as a glob and match ground truth by file name
    #[arg(long)]
    pub glob: bool,
    /// Whether the maps hold depth or disparity
    #[arg(long, value_enum, default_value_t = MapKind::Depth)]
    pub kind: MapKind,
    #[command(flatten)]
    pub camera: CameraArgs,
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Emit a delta profile over signed edge distances -N..=N (needs --seg)
    #[arg(long)]
    pub profile: Option<u32>,
    /// Metric table output (CSV)
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Scene description (JSON)
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Encoding of the rendered views
    #[arg(long, value_enum, default_value_t = ImageFormatArg::Png)]
    pub format: ImageFormatArg,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Scene description (JSON) [default: a random scene from --seed]
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Seed of the random scene used without --spec
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Border misalignment in pixels (negative shrinks)
    #[arg(long, default_value_t = 4, allow_negative_numbers = true)]
    pub offset: i64,
    /// Width of the synthetic bleeding fade in pixels
    #[arg(long, default_value_t = 0)]
    pub bleed: usize,
    /// Seed of the perturbation jitter
    #[arg(long, default_value_t = 0)]
    pub perturb_seed: u64,
    /// Write fixture, perturbed and morphed maps here
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub th: ThresholdArgs,
    #[command(flatten)]
    pub camera: CameraArgs,
    /// Depth cap in metres
    #[arg(long, default_value_t = 80.0)]
    pub cap: f64,
    /// Evaluation crop
    #[arg(long, value_enum, default_value_t = CropArg::None)]
    pub crop: CropArg,
}
