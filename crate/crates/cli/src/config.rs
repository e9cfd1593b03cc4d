use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};

use elastic_networks::export::ExportFormat;
use elastic_networks::scene::{builtin, load_scene, BuiltinArgs, Scene};
use elastic_networks::solver::Scheme;

#[derive(Args, Debug, Clone)]
pub struct SceneArgs {
    /// Built-in scene name or path to a scene JSON file.
    #[arg(long)]
    pub scene: String,
    /// Arc length for `theta_eps`.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Radius for `circle`.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Length penalty weight.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Grid intervals per curve.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Initial time step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Reparametrize to constant speed every this many steps.
    #[arg(long)]
    pub reparam_cadence: Option<usize>,
}

impl SceneArgs {
    pub fn load(&self) -> Result<Scene> {
        let path = Path::new(&self.scene);
        let mut scene = if path.extension().is_some_and(|e| e == "json") || path.is_file() {
            if self.eps.is_some() || self.radius.is_some() {
                bail!("--eps and --radius only apply to built-in scenes");
            }
            load_scene(path).with_context(|| format!("loading {}", path.display()))?
        } else {
            let defaults = BuiltinArgs::default();
            let args = BuiltinArgs {
                eps: self.eps.unwrap_or(defaults.eps),
                radius: self.radius.unwrap_or(defaults.radius),
            };
            builtin(&self.scene, &args)?
        };
        let p = &mut scene.params;
        if let Some(v) = self.mu {
            p.mu = v;
        }
        if let Some(v) = self.grid_n {
            p.grid_n = v;
        }
        if let Some(v) = self.dt {
            p.dt = v;
        }
        if let Some(v) = self.t_end {
            p.t_end = v;
        }
        if let Some(v) = self.reparam_cadence {
            p.reparam_cadence = v;
        }
        scene.validate()?;
        Ok(scene)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Svg,
    Both,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Implicit,
    Rk4,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Keep a frame every this many steps.
    #[arg(long, default_value_t = 10)]
    pub frames_every: usize,
    /// Frame export: csv writes JSON polylines, svg one drawing per frame.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    /// Time stepping: linearly implicit, or explicit RK4 under its stability limit.
    #[arg(long, value_enum, default_value_t = SchemeArg::Implicit)]
    pub scheme: SchemeArg,
    /// Run one simulation per value, e.g. `mu=1,2,4`, each into `<out>/<param>=<value>`.
    #[arg(long)]
    pub sweep: Option<String>,
}

/// A fully resolved simulate invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scene_args: SceneArgs,
    pub out: PathBuf,
    pub frames_every: usize,
    pub format: ExportFormat,
    pub scheme: Scheme,
}

impl RunConfig {
    pub fn from_args(args: &SimulateArgs) -> Result<RunConfig> {
        if args.frames_every == 0 {
            bail!("--frames-every must be at least 1");
        }
        std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
        if std::fs::metadata(&args.out)?.permissions().readonly() {
            bail!("output directory {} is not writable", args.out.display());
        }
        let config = RunConfig {
            scene_args: args.scene.clone(),
            out: args.out.clone(),
            frames_every: args.frames_every,
            format: match args.format {
                FormatArg::Csv => ExportFormat::Csv,
                FormatArg::Svg => ExportFormat::Svg,
                FormatArg::Both => ExportFormat::Both,
            },
            scheme: match args.scheme {
                SchemeArg::Implicit => Scheme::Implicit,
                SchemeArg::Rk4 => Scheme::ExplicitRk4,
            },
        };
        // fail on a bad scene before any sweep fans out
        config.scene()?;
        Ok(config)
    }

    pub fn scene(&self) -> Result<Scene> {
        self.scene_args.load()
    }

    /// Copy with one scene parameter replaced by a sweep value.
    pub fn with_override(&self, param: &str, value: &str) -> Result<RunConfig> {
        let mut c = self.clone();
        let a = &mut c.scene_args;
        let float = || value.parse::<f64>().map_err(|e| anyhow!("{param}={value}: {e}"));
        let int = || value.parse::<usize>().map_err(|e| anyhow!("{param}={value}: {e}"));
        match param {
            "mu" => a.mu = Some(float()?),
            "dt" => a.dt = Some(float()?),
            "t-end" | "t_end" => a.t_end = Some(float()?),
            "eps" => a.eps = Some(float()?),
            "radius" => a.radius = Some(float()?),
            "grid-n" | "grid_n" => a.grid_n = Some(int()?),
            "reparam-cadence" | "reparam_cadence" => a.reparam_cadence = Some(int()?),
            other => bail!("cannot sweep over `{other}`"),
        }
        c.scene()?;
        Ok(c)
    }
}

/// `<param>=<v1>,<v2>,...`
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<String>,
}

impl FromStr for Sweep {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Sweep> {
        let (param, list) = s.split_once('=').ok_or_else(|| anyhow!("sweep must look like param=v1,v2"))?;
        let values: Vec<String> = list.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if param.trim().is_empty() || values.is_empty() {
            bail!("sweep must look like param=v1,v2");
        }
        Ok(Sweep {
            param: param.trim().to_string(),
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parses_lists() {
        let s: Sweep = "mu=1, 2,4".parse().unwrap();
        assert_eq!(s.param, "mu");
        assert_eq!(s.values, vec!["1", "2", "4"]);
        assert!("mu".parse::<Sweep>().is_err());
        assert!("mu=".parse::<Sweep>().is_err());
    }

    fn args(scene: &str) -> SceneArgs {
        SceneArgs {
            scene: scene.into(),
            eps: None,
            radius: None,
            mu: None,
            grid_n: None,
            dt: None,
            t_end: None,
            reparam_cadence: None,
        }
    }

    #[test]
    fn overrides_reach_the_scene() {
        let mut a = args("circle");
        a.radius = Some(1.0);
        a.mu = Some(2.0);
        a.grid_n = Some(32);
        let s = a.load().unwrap();
        assert_eq!(s.params.mu, 2.0);
        assert_eq!(s.params.grid_n, 32);
        assert!((s.curves[0].length().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn unknown_scene_is_an_error() {
        assert!(args("no_such_scene").load().is_err());
    }
}
