//! Parameter resolution: flags override the config file, which overrides the defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use isophote::inpaint::FastKernel;
use isophote::{CedParams, DiffusionParams, Error, InitMode, SolverConfig};

use crate::args::ParamArgs;

/// Default `k` when `--k-paper-scale` is given (unit-range intensities).
pub const K_UNIT_RANGE: f64 = 0.05;

const KEYS: &[&str] = &[
    "dt",
    "c",
    "k",
    "sigma",
    "rho",
    "iters",
    "eps",
    "init",
    "clamp",
    "stop-tol",
    "k-paper-scale",
    "tv-eps",
    "fast-corner",
    "c1",
    "c2",
];

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str, origin: &Path) -> Result<BTreeMap<String, String>, Error> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("{}:{}: expected key=value", origin.display(), n + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::InvalidParameter(format!(
                "{}:{}: unknown key {key:?}",
                origin.display(),
                n + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn load_config(path: &Path) -> Result<BTreeMap<String, String>, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path.into())
        } else {
            Error::Io {
                path: path.into(),
                source,
            }
        }
    })?;
    parse_config(&text, path)
}

struct Layered<'a> {
    file: &'a BTreeMap<String, String>,
}

impl Layered<'_> {
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, Error> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("config key {key}: cannot parse {raw:?}"))),
            None => Ok(default),
        }
    }
}

pub fn resolve(args: &ParamArgs) -> Result<SolverConfig, Error> {
    let file = match &args.config {
        Some(path) => load_config(path)?,
        None => BTreeMap::new(),
    };
    let l = Layered { file: &file };
    let d = DiffusionParams::default();
    let unit_range = args.k_unit_range || l.pick(None, "k-paper-scale", false)?;
    let k_default = if unit_range { K_UNIT_RANGE } else { d.k };
    let init = match args.init.as_deref().or(file.get("init").map(String::as_str)) {
        Some(s) => s.parse::<InitMode>()?,
        None => d.init,
    };
    let stop_tol = match args.stop_tol {
        Some(v) => Some(v),
        None => file
            .get("stop-tol")
            .map(|raw| {
                raw.parse()
                    .map_err(|_| Error::InvalidParameter(format!("config key stop-tol: {raw:?}")))
            })
            .transpose()?,
    };
    let params = DiffusionParams {
        dt: l.pick(args.dt, "dt", d.dt)?,
        c: l.pick(args.c, "c", d.c)?,
        k: l.pick(args.k, "k", k_default)?,
        sigma: l.pick(args.sigma, "sigma", d.sigma)?,
        rho: l.pick(args.rho, "rho", d.rho)?,
        iterations: l.pick(args.iters, "iters", d.iterations)?,
        eps: l.pick(args.eps, "eps", d.eps)?,
        init,
        clamp: l.pick(args.clamp, "clamp", d.clamp)?,
        stop_tolerance: stop_tol,
    };
    params.validate()?;
    let base = SolverConfig::default();
    let ced = CedParams::default();
    Ok(SolverConfig {
        params,
        tv_eps: l.pick(args.tv_eps, "tv-eps", base.tv_eps)?,
        fast_kernel: FastKernel::from_corner(l.pick(args.fast_corner, "fast-corner", base.fast_kernel.corner())?)?,
        ced: CedParams::new(l.pick(args.c1, "c1", ced.c1())?, l.pick(args.c2, "c2", ced.c2())?)?,
    })
}
