use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use convexseg::admm::run_segmentation;
use convexseg::convexity::{is_mask_convex, mask_report, sublevel_convexity_oracle, DEFAULT_TOLERANCE_PX};
use convexseg::io;
use convexseg::sdf::{mask_from_sdf, BinaryMask, Shape};
use convexseg::synth::{generate, SynthShape, SynthSpec};
use convexseg::{AdmmConfig, ForceConfig, LabelSet, Model};

#[derive(Parser)]
#[command(name = "convexseg", version, about = "Level set segmentation with an optional convexity prior")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment an image and write mask, overlay, phi and diagnostics.
    Segment(Box<SegmentArgs>),
    /// Generate a synthetic test image with its ground truth.
    Synth(SynthArgs),
    /// Check a phi.f64 file or a mask PGM for convexity.
    Check(CheckArgs),
}

#[derive(Args, Default)]
struct SegmentArgs {
    /// `key = value` file; command line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input image (PGM or PPM).
    #[arg(long)]
    image: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// GMM, GMMC, GMML, GMMLC, RP or RPC.
    #[arg(long)]
    model: Option<String>,
    /// Initial circle `cx,cy,r` in pixels.
    #[arg(long, value_name = "CX,CY,R")]
    init_circle: Option<String>,
    /// Initial rectangle `x0,y0,x1,y1` in pixels.
    #[arg(long, value_name = "X0,Y0,X1,Y1")]
    init_rect: Option<String>,
    /// Initial object mask (PGM, object = 255).
    #[arg(long)]
    init_mask: Option<PathBuf>,
    /// Landmark file, one `m n` pair per line.
    #[arg(long)]
    landmarks: Option<PathBuf>,
    /// Scribble PGM: 255 object, 128 background, 0 unlabeled.
    #[arg(long)]
    scribbles: Option<PathBuf>,
    /// Ground truth mask; adds a Dice column to the diagnostics.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long)]
    rho1: Option<f64>,
    /// Number of outer iterations.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    inner_steps: Option<usize>,
    /// Stop once residuals are small and the mask has settled.
    #[arg(long)]
    early_stop: Option<bool>,
    #[arg(long)]
    w0: Option<f64>,
    #[arg(long)]
    w1: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    #[arg(long)]
    eps_p: Option<f64>,
    /// Diagonal loading of the GMM covariances.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    /// disk, ellipse, crescent, occluded-disk, low-contrast-disk or sector-disk.
    #[arg(value_parser = parse_shape)]
    shape: SynthShape,
    /// Image size `W` or `W,H`.
    #[arg(long, default_value = "128")]
    size: String,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// phi.f64 or mask PGM.
    file: PathBuf,
    /// Hull tolerance in pixels.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE_PX)]
    tol: f64,
}

fn parse_shape(s: &str) -> Result<SynthShape, String> {
    s.parse().map_err(|e: convexseg::Error| e.to_string())
}

#[derive(Debug)]
enum Failure {
    /// Bad configuration or usage (exit 2).
    Config(String),
    /// Anything that went wrong while running (exit 1).
    Run(String),
}

impl From<convexseg::Error> for Failure {
    fn from(e: convexseg::Error) -> Self {
        match e {
            convexseg::Error::InvalidParameter { .. } | convexseg::Error::MissingLabels { .. } => Failure::Config(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn with_path(path: &Path) -> impl FnOnce(convexseg::Error) -> Failure + '_ {
    move |e| Failure::Run(format!("{}: {e}", path.display()))
}

/// Settings after merging the config file (lowest), then flags.
struct Settings {
    values: BTreeMap<String, String>,
    base: PathBuf,
}

const KEYS: &[&str] = &[
    "image", "out", "model", "init_circle", "init_rect", "init_mask", "landmarks", "scribbles", "truth", "rho0", "rho1",
    "iters", "inner_steps", "early_stop", "w0", "w1", "alpha", "beta", "eps", "theta", "a1", "a2", "eps_p", "lambda",
];

impl Settings {
    fn load(args: &SegmentArgs) -> Result<Self, Failure> {
        let mut values = BTreeMap::new();
        let mut base = PathBuf::from(".");
        if let Some(path) = &args.config {
            let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            for (k, v) in io::parse_config(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))? {
                if !KEYS.contains(&k.as_str()) {
                    return Err(config_err(format!("{}: unknown key `{k}`", path.display())));
                }
                values.insert(k, v);
            }
            base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        }
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        set("image", path(&args.image));
        set("out", path(&args.out));
        set("init_mask", path(&args.init_mask));
        set("landmarks", path(&args.landmarks));
        set("scribbles", path(&args.scribbles));
        set("truth", path(&args.truth));
        set("model", args.model.clone());
        set("init_circle", args.init_circle.clone());
        set("init_rect", args.init_rect.clone());
        set("iters", args.iters.map(|v| v.to_string()));
        set("inner_steps", args.inner_steps.map(|v| v.to_string()));
        set("early_stop", args.early_stop.map(|v| v.to_string()));
        for (k, v) in [
            ("rho0", args.rho0),
            ("rho1", args.rho1),
            ("w0", args.w0),
            ("w1", args.w1),
            ("alpha", args.alpha),
            ("beta", args.beta),
            ("eps", args.eps),
            ("theta", args.theta),
            ("a1", args.a1),
            ("a2", args.a2),
            ("eps_p", args.eps_p),
            ("lambda", args.lambda),
        ] {
            set(k, v.map(|x| x.to_string()));
        }
        // paths given on the command line are relative to the working directory
        let mut s = Self { values, base };
        for k in ["image", "out", "init_mask", "landmarks", "scribbles", "truth"] {
            let from_flag = match k {
                "image" => args.image.is_some(),
                "out" => args.out.is_some(),
                "init_mask" => args.init_mask.is_some(),
                "landmarks" => args.landmarks.is_some(),
                "scribbles" => args.scribbles.is_some(),
                _ => args.truth.is_some(),
            };
            if !from_flag {
                if let Some(v) = s.values.get_mut(k) {
                    *v = s.base.join(&*v).display().to_string();
                }
            }
        }
        Ok(s)
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    fn number<T: std::str::FromStr>(&self, key: &str, slot: &mut T) -> Result<(), Failure> {
        if let Some(v) = self.get(key) {
            *slot = v
                .parse()
                .map_err(|_| config_err(format!("invalid value `{v}` for `{key}`")))?;
        }
        Ok(())
    }
}

fn parse_list(key: &str, text: &str, len: usize) -> Result<Vec<f64>, Failure> {
    let parts: Result<Vec<f64>, _> = text.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match parts {
        Ok(v) if v.len() == len && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(config_err(format!("`{key}` expects {len} comma separated numbers, got `{text}`"))),
    }
}

fn initial_mask(s: &Settings, w: usize, h: usize) -> Result<BinaryMask, Failure> {
    let given = ["init_circle", "init_rect", "init_mask"].iter().filter(|k| s.get(k).is_some()).count();
    if given > 1 {
        return Err(config_err("give at most one of `init_circle`, `init_rect` and `init_mask`"));
    }
    if let Some(text) = s.get("init_circle") {
        let v = parse_list("init_circle", text, 3)?;
        return Ok(Shape::Circle { cx: v[0], cy: v[1], r: v[2] }.rasterize(w, h));
    }
    if let Some(text) = s.get("init_rect") {
        let v = parse_list("init_rect", text, 4)?;
        return Ok(Shape::Rect { x0: v[0], y0: v[1], x1: v[2], y1: v[3] }.rasterize(w, h));
    }
    if let Some(path) = s.path("init_mask") {
        let mask = io::read_mask(&path).map_err(with_path(&path))?;
        if mask.dims() != (w, h) {
            return Err(config_err(format!("`init_mask` is {:?}, the image is {:?}", mask.dims(), (w, h))));
        }
        return Ok(mask);
    }
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    Ok(Shape::Circle { cx, cy, r: 0.4 * w.min(h) as f64 }.rasterize(w, h))
}

fn segment(args: &SegmentArgs) -> Result<(), Failure> {
    let s = Settings::load(args)?;
    let model: Model = s.get("model").unwrap_or("GMMC").parse()?;
    let mut cfg = AdmmConfig::new(model);
    s.number("rho0", &mut cfg.rho0)?;
    s.number("rho1", &mut cfg.rho1)?;
    s.number("iters", &mut cfg.num_iters)?;
    s.number("inner_steps", &mut cfg.inner_steps)?;
    s.number("early_stop", &mut cfg.early_stop)?;
    let mut force = ForceConfig::default();
    for (k, slot) in [
        ("w0", &mut force.w0),
        ("w1", &mut force.w1),
        ("alpha", &mut force.alpha),
        ("beta", &mut force.beta),
        ("eps", &mut force.eps),
        ("theta", &mut force.theta),
        ("a1", &mut force.a1),
        ("a2", &mut force.a2),
        ("eps_p", &mut force.eps_p),
        ("lambda", &mut force.lambda),
    ] {
        s.number(k, slot)?;
    }
    cfg.validate()?;
    force.validate()?;

    let image_path = s.path("image").ok_or_else(|| config_err("missing `image`: no input image given"))?;
    let out = s.path("out").ok_or_else(|| config_err("missing `out`: no output directory given"))?;
    let mut labels = LabelSet::default();
    if model.uses_landmarks() {
        let path = s
            .path("landmarks")
            .ok_or_else(|| config_err(format!("missing `landmarks`: model {model} needs a landmarks file")))?;
        labels.landmarks = io::read_landmarks(&path).map_err(with_path(&path))?;
    }
    if model.uses_scribbles() {
        let path = s
            .path("scribbles")
            .ok_or_else(|| config_err(format!("missing `scribbles`: model {model} needs a scribble image")))?;
        let sc = io::read_scribbles(&path).map_err(with_path(&path))?;
        labels.object = sc.object;
        labels.background = sc.background;
    }

    let img = io::read_image(&image_path).map_err(with_path(&image_path))?;
    let (w, h) = img.dims();
    let init = initial_mask(&s, w, h)?;
    let truth = match s.path("truth") {
        Some(p) => Some(io::read_mask(&p).map_err(with_path(&p))?),
        None => None,
    };

    let start = Instant::now();
    let res = run_segmentation(&img, &init, &labels, &cfg, &force, truth.as_ref())?;
    let elapsed = start.elapsed();

    fs::create_dir_all(&out).map_err(|e| Failure::Run(format!("{}: {e}", out.display())))?;
    let write = |name: &str, r: convexseg::Result<()>| r.map_err(|e| Failure::Run(format!("{}: {e}", out.join(name).display())));
    write("mask.pgm", io::write_mask(out.join("mask.pgm"), &res.mask))?;
    write("overlay.ppm", io::overlay(&img, &res.phi).and_then(|o| io::write_image(out.join("overlay.ppm"), &o)))?;
    write("phi.f64", io::write_phi(out.join("phi.f64"), &res.phi))?;
    write("diagnostics.csv", io::write_text(out.join("diagnostics.csv"), &res.diagnostics_csv()))?;

    let report = sublevel_convexity_oracle(&res.phi, &[0.0]);
    let mut text = String::new();
    let _ = writeln!(text, "model = {model}");
    let _ = writeln!(text, "size = {w} {h}");
    let _ = writeln!(text, "iterations = {}", res.iterations());
    let _ = writeln!(text, "seconds = {:.3}", elapsed.as_secs_f64());
    if let Some(last) = res.history.last() {
        let _ = writeln!(text, "energy = {:.6e}", last.energy);
        let _ = writeln!(text, "res_zeta = {:.6e}", last.res_zeta);
        let _ = writeln!(text, "res_xi = {:.6e}", last.res_xi);
        if let Some(d) = last.dice {
            let _ = writeln!(text, "dice = {d:.6}");
        }
    }
    text.push_str(&report.to_string());
    write("report.txt", io::write_text(out.join("report.txt"), &text))?;
    print!("{text}");
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), Failure> {
    let (w, h) = match args.size.split_once(',') {
        Some((a, b)) => (a.trim().parse(), b.trim().parse()),
        None => (args.size.trim().parse(), args.size.trim().parse()),
    };
    let (w, h): (usize, usize) = match (w, h) {
        (Ok(w), Ok(h)) => (w, h),
        _ => return Err(config_err(format!("invalid size `{}` (expected W or W,H)", args.size))),
    };
    let scene = generate(&SynthSpec::new(args.shape, w, h, args.sigma, args.seed))?;
    let out = &args.out;
    fs::create_dir_all(out).map_err(|e| Failure::Run(format!("{}: {e}", out.display())))?;
    let run = |r: convexseg::Result<()>| r.map_err(|e| Failure::Run(format!("{}: {e}", out.display())));
    run(io::write_image(out.join("image.pgm"), &scene.image))?;
    run(io::write_mask(out.join("truth.pgm"), &scene.truth))?;

    let mut cfg = String::from("image = image.pgm\ntruth = truth.pgm\n");
    if let Shape::Circle { cx, cy, r } = scene.init {
        let _ = writeln!(cfg, "init_circle = {cx},{cy},{r}");
    }
    if !scene.labels.landmarks.is_empty() {
        run(io::write_text(out.join("landmarks.txt"), &io::format_landmarks(&scene.labels.landmarks)))?;
        cfg.push_str("landmarks = landmarks.txt\nmodel = GMMLC\n");
    }
    if scene.labels.has_scribbles() {
        let bytes = io::encode_scribbles(w, h, &scene.labels);
        run(fs::write(out.join("scribbles.pgm"), bytes).map_err(Into::into))?;
        cfg.push_str("scribbles = scribbles.pgm\nmodel = RPC\n");
    }
    run(io::write_text(out.join("scene.cfg"), &cfg))?;
    println!("wrote {} scene ({w}x{h}, sigma {}, seed {}) to {}", args.shape, args.sigma, args.seed, out.display());
    Ok(())
}

/// `Ok(true)` when convex within tolerance.
fn check(args: &CheckArgs) -> Result<bool, Failure> {
    let bytes = fs::read(&args.file).map_err(|e| config_err(format!("{}: {e}", args.file.display())))?;
    let parse_err = |e: convexseg::Error| config_err(format!("{}: {e}", args.file.display()));
    let report = if bytes.starts_with(io::PHI_MAGIC) {
        let phi = io::decode_phi(&bytes).map_err(parse_err)?;
        let mut report = sublevel_convexity_oracle(&phi, &[0.0]);
        let mask = mask_from_sdf(&phi);
        report.mask_convex = is_mask_convex(&mask, args.tol).map_err(|e| Failure::Run(e.to_string()))?;
        report
    } else {
        let mask = io::decode_mask(&bytes).map_err(parse_err)?;
        mask_report(&mask, args.tol).map_err(|e| Failure::Run(format!("{}: {e}", args.file.display())))?
    };
    print!("{report}");
    println!("{}", if report.mask_convex { "convex" } else { "not convex" });
    Ok(report.mask_convex)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Segment(a) => segment(a).map(|_| true),
        Command::Synth(a) => synth(a).map(|_| true),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
