//! Run settings from flags and an optional TOML file. Flags win over file values.

use std::path::{Path, PathBuf};

use clap::Args;
use levelfit::lp::SolverOptions;
use levelfit::verify::VerifyOptions;
use levelfit::{BasisKind, BoxDomain, FitOptions, GridSpec};
use serde::Deserialize;

use crate::error::{CliError, Result};

/// Settings shared by every command. Each one can also be given in the
/// `--config` file under the same name with underscores (`grid_samples`).
#[derive(Args, Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// TOML file supplying defaults for any of the settings below
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// CSV point cloud, one point per line
    #[arg(long, value_name = "PATH")]
    pub points: Option<PathBuf>,

    /// Bounding box as "l1,u1;l2,u2;..."
    #[arg(long = "box", value_name = "BOX", allow_hyphen_values = true)]
    #[serde(rename = "box")]
    pub bounds: Option<String>,

    /// Polynomial degree
    #[arg(long, value_name = "D")]
    pub degree: Option<u32>,

    /// Ascending degree list for `sweep`
    #[arg(long, value_name = "D1,D2,...", value_delimiter = ',')]
    pub degrees: Option<Vec<u32>>,

    /// Basis of the reported coefficients: monomial or chebyshev
    #[arg(long, value_name = "KIND")]
    pub basis: Option<BasisKind>,

    /// Basis the LP is solved in: chebyshev (default) or monomial
    #[arg(long, value_name = "KIND")]
    pub lp_basis: Option<BasisKind>,

    /// Tensor grid with this many points per axis
    #[arg(long, value_name = "PPA", conflicts_with = "grid_samples")]
    pub grid: Option<usize>,

    /// Quasi-random grid with this many points
    #[arg(long, value_name = "N")]
    pub grid_samples: Option<usize>,

    /// Seed for Monte Carlo sampling and quasi-random grids
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,

    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Monte Carlo samples for the volume estimate
    #[arg(long, value_name = "N")]
    pub mc_samples: Option<usize>,

    /// Scale the box about its center by this factor before fitting
    #[arg(long, value_name = "F")]
    pub inflate: Option<f64>,

    /// Bound every LP coefficient in absolute value (off by default)
    #[arg(long, value_name = "B")]
    pub coefficient_bound: Option<f64>,

    /// Cells per axis for component counting, or grid points per axis for `plotdata`
    #[arg(long, value_name = "R")]
    pub resolution: Option<usize>,

    /// Simplex iteration limit
    #[arg(long, value_name = "N")]
    pub max_iters: Option<usize>,

    /// Relative primal feasibility tolerance
    #[arg(long, value_name = "TOL")]
    pub feas_tol: Option<f64>,

    /// Relative duality gap tolerance
    #[arg(long, value_name = "TOL")]
    pub opt_tol: Option<f64>,
}

impl Settings {
    /// `self` with unset fields taken from the `--config` file, if any.
    pub fn resolve(self) -> Result<Settings> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let mut file: Settings =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        file.points = file.points.map(|p| base.join(p));
        file.out = file.out.map(|p| base.join(p));
        Ok(self.over(file))
    }

    fn over(self, file: Settings) -> Settings {
        // the two grid flags are alternatives, so they are taken as a pair
        let (grid, grid_samples) = if self.grid.is_some() || self.grid_samples.is_some() {
            (self.grid, self.grid_samples)
        } else {
            (file.grid, file.grid_samples)
        };
        Settings {
            config: self.config,
            points: self.points.or(file.points),
            bounds: self.bounds.or(file.bounds),
            degree: self.degree.or(file.degree),
            degrees: self.degrees.or(file.degrees),
            basis: self.basis.or(file.basis),
            lp_basis: self.lp_basis.or(file.lp_basis),
            grid,
            grid_samples,
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            mc_samples: self.mc_samples.or(file.mc_samples),
            inflate: self.inflate.or(file.inflate),
            coefficient_bound: self.coefficient_bound.or(file.coefficient_bound),
            resolution: self.resolution.or(file.resolution),
            max_iters: self.max_iters.or(file.max_iters),
            feas_tol: self.feas_tol.or(file.feas_tol),
            opt_tol: self.opt_tol.or(file.opt_tol),
        }
    }

    pub fn points_path(&self) -> Result<&Path> {
        self.points.as_deref().ok_or_else(|| CliError::Usage("--points is required".into()))
    }

    pub fn domain(&self) -> Result<BoxDomain> {
        let text = self.bounds.as_deref().ok_or_else(|| CliError::Usage("--box is required".into()))?;
        parse_box(text)
    }

    pub fn degree(&self) -> Result<u32> {
        self.degree.ok_or_else(|| CliError::Usage("--degree is required".into()))
    }

    pub fn degrees(&self) -> Result<Vec<u32>> {
        match (&self.degrees, self.degree) {
            (Some(list), _) => Ok(list.clone()),
            (None, Some(d)) => Ok(vec![d]),
            (None, None) => Err(CliError::Usage("--degrees is required".into())),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn grid_spec(&self, dimension: usize) -> GridSpec {
        match (self.grid, self.grid_samples) {
            (Some(points_per_axis), _) => GridSpec::Tensor { points_per_axis },
            (None, Some(samples)) => GridSpec::QuasiRandom { samples, seed: self.seed() },
            (None, None) => match GridSpec::default_for(dimension) {
                GridSpec::QuasiRandom { samples, .. } => GridSpec::QuasiRandom { samples, seed: self.seed() },
                tensor => tensor,
            },
        }
    }

    pub fn fit_options(&self, degree: u32, dimension: usize) -> FitOptions {
        let defaults = SolverOptions::default();
        FitOptions {
            basis: self.basis.unwrap_or(BasisKind::Monomial),
            lp_basis: self.lp_basis.unwrap_or(BasisKind::Chebyshev),
            grid: Some(self.grid_spec(dimension)),
            solver: SolverOptions {
                max_iters: self.max_iters.unwrap_or(defaults.max_iters),
                feas_tol: self.feas_tol.unwrap_or(defaults.feas_tol),
                opt_tol: self.opt_tol.unwrap_or(defaults.opt_tol),
            },
            inflate: self.inflate.unwrap_or(1.0),
            coefficient_bound: self.coefficient_bound,
            ..FitOptions::new(degree)
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        let defaults = VerifyOptions::default();
        VerifyOptions {
            mc_samples: self.mc_samples.unwrap_or(defaults.mc_samples),
            seed: self.seed(),
            resolution: self.resolution,
            scan: None,
        }
    }
}

/// Parses `"l1,u1;l2,u2;..."`.
pub fn parse_box(text: &str) -> Result<BoxDomain> {
    let bad = |why: String| CliError::Usage(format!("invalid --box '{text}': {why}"));
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for axis in text.split(';') {
        let bounds: Vec<&str> = axis.split(',').map(str::trim).collect();
        let [l, u] = bounds[..] else {
            return Err(bad(format!("axis '{axis}' needs exactly two numbers")));
        };
        let parse = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("'{s}' is not a number")));
        lower.push(parse(l)?);
        upper.push(parse(u)?);
    }
    BoxDomain::new(lower, upper).map_err(|e| bad(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_syntax() {
        let b = parse_box("-1,1").unwrap();
        assert_eq!((b.lower(), b.upper()), (&[-1.0][..], &[1.0][..]));
        let b = parse_box("-1, 1; 0,2.5").unwrap();
        assert_eq!(b.upper(), &[1.0, 2.5]);
        for bad in ["", "1", "1,2,3", "a,1", "1,-1", "0,1;"] {
            assert!(matches!(parse_box(bad), Err(CliError::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn flags_override_file() {
        let file: Settings = toml::from_str(
            "points = \"k.csv\"\nbox = \"-1,1\"\ndegree = 3\ngrid_samples = 500\nseed = 9\nbasis = \"chebyshev\"\n",
        )
        .unwrap();
        let flags = Settings { degree: Some(7), grid: Some(101), ..Settings::default() };
        let s = flags.over(file);
        assert_eq!(s.degree, Some(7));
        assert_eq!(s.seed, Some(9));
        assert_eq!(s.basis, Some(BasisKind::Chebyshev));
        assert_eq!(s.grid_spec(1), GridSpec::Tensor { points_per_axis: 101 });
        assert_eq!(s.grid_samples, None);
        assert!(toml::from_str::<Settings>("degre = 3").is_err());
    }

    #[test]
    fn defaults() {
        let s = Settings::default();
        assert_eq!(s.grid_spec(1), GridSpec::Tensor { points_per_axis: 2001 });
        assert_eq!(s.grid_spec(3), GridSpec::QuasiRandom { samples: 100_000, seed: 0 });
        let o = s.fit_options(4, 1);
        assert_eq!(o.basis, BasisKind::Monomial);
        assert_eq!(o.inflate, 1.0);
        assert_eq!(s.verify_options().mc_samples, 1_000_000);
        assert!(s.domain().is_err());
    }
}
