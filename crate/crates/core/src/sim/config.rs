//! Scenario configurations, the key=value file format and the built-in
//! ABS and HRS scenarios.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::data::Design;
use crate::params::{Engine, McmcBudget};
use crate::sim::SimError;

/// True parameter values of the data-generating model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    pub beta0: f64,
    pub beta1: f64,
    pub var_f: f64,
    pub var_t: f64,
    /// Crossed design only.
    pub rho: Option<f64>,
}

impl Truth {
    pub fn alpha(&self) -> f64 {
        0.5 * (self.var_f / self.var_t).ln()
    }

    /// Intercept of the log-SD regression, ln σ_t.
    pub fn alpha0(&self) -> f64 {
        0.5 * self.var_t.ln()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Workload {
    /// Respondents of each mode split as evenly as possible over the
    /// interviewers serving that mode.
    Even,
    /// One respondent per interviewer and mode, the rest assigned uniformly.
    Random,
    /// CSV with columns interviewer, mode, count.
    Table(PathBuf),
}

impl std::fmt::Display for Workload {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Workload::Even => f.write_str("even"),
            Workload::Random => f.write_str("random"),
            Workload::Table(p) => write!(f, "table:{}", p.display()),
        }
    }
}

impl std::str::FromStr for Workload {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        match s {
            "even" => Ok(Workload::Even),
            "random" => Ok(Workload::Random),
            _ => match s.strip_prefix("table:") {
                Some(p) if !p.is_empty() => Ok(Workload::Table(PathBuf::from(p))),
                _ => Err(format!(
                    "unknown workload `{s}` (expected even, random or table:<path>)"
                )),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub n: usize,
    /// Telephone respondents; `None` takes the interviewer-weighted share.
    pub n_tel: Option<usize>,
    /// Interviewers working only FTF, only TEL, and both modes.
    pub interviewers_ftf: usize,
    pub interviewers_tel: usize,
    pub interviewers_both: usize,
    pub workload: Workload,
}

impl Population {
    pub fn n_interviewers(&self) -> usize {
        self.interviewers_ftf + self.interviewers_tel + self.interviewers_both
    }

    /// round(n·(TEL-only + both/2)/total) unless set explicitly.
    pub fn resolved_n_tel(&self) -> usize {
        self.n_tel.unwrap_or_else(|| {
            let share = (self.interviewers_tel as f64 + 0.5 * self.interviewers_both as f64)
                / self.n_interviewers().max(1) as f64;
            (self.n as f64 * share).round() as usize
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub design: Design,
    pub truth: Truth,
    pub population: Population,
    pub replications: usize,
    pub engine: Engine,
    pub budget: McmcBudget,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        let t = &self.truth;
        let p = &self.population;
        if ![t.beta0, t.beta1, t.var_f, t.var_t]
            .iter()
            .all(|v| v.is_finite())
        {
            return bad("truth values must be finite".into());
        }
        if !(t.var_f > 0.0 && t.var_t > 0.0) {
            return bad(format!(
                "variances must be positive (var_f={}, var_t={})",
                t.var_f, t.var_t
            ));
        }
        match (self.design, t.rho) {
            (Design::Nested, Some(_)) => {
                return bad("rho is only valid for the crossed design".into())
            }
            (Design::Nested, None) => {
                if p.interviewers_both > 0 {
                    return bad("interviewers_both must be 0 for the nested design".into());
                }
            }
            (Design::Crossed, None) => return bad("the crossed design needs rho".into()),
            (Design::Crossed, Some(r)) => {
                if !(r > -1.0 && r < 1.0) {
                    return bad(format!("rho {r} must lie strictly inside (-1, 1)"));
                }
            }
        }
        if self.replications == 0 {
            return bad("K must be at least 1".into());
        }
        if self.budget.thin == 0 || self.budget.iterations <= self.budget.burn_in {
            return bad(format!(
                "invalid budget: iterations {} burn_in {} thin {}",
                self.budget.iterations, self.budget.burn_in, self.budget.thin
            ));
        }
        if p.workload != Workload::Even && p.workload != Workload::Random {
            return Ok(());
        }
        let n_tel = p.resolved_n_tel();
        if n_tel > p.n {
            return bad(format!("n_tel {n_tel} exceeds n {}", p.n));
        }
        let serve_f = p.interviewers_ftf + p.interviewers_both;
        let serve_t = p.interviewers_tel + p.interviewers_both;
        if serve_f == 0 || serve_t == 0 {
            return bad("both modes need at least one interviewer".into());
        }
        if p.n - n_tel < serve_f || n_tel < serve_t {
            return bad(format!(
                "infeasible workload: {} FTF and {n_tel} TEL respondents for {serve_f} FTF and {serve_t} TEL interviewer slots",
                p.n - n_tel
            ));
        }
        Ok(())
    }

    /// key=value text that `parse_config` reads back to the same config.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let t = &self.truth;
        let p = &self.population;
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "design = {}", self.design);
        let _ = writeln!(s, "beta0 = {}", t.beta0);
        let _ = writeln!(s, "beta1 = {}", t.beta1);
        let _ = writeln!(s, "var_f = {}", t.var_f);
        let _ = writeln!(s, "var_t = {}", t.var_t);
        if let Some(r) = t.rho {
            let _ = writeln!(s, "rho = {r}");
        }
        let _ = writeln!(s, "n = {}", p.n);
        if let Some(nt) = p.n_tel {
            let _ = writeln!(s, "n_tel = {nt}");
        }
        let _ = writeln!(s, "interviewers_ftf = {}", p.interviewers_ftf);
        let _ = writeln!(s, "interviewers_tel = {}", p.interviewers_tel);
        let _ = writeln!(s, "interviewers_both = {}", p.interviewers_both);
        let _ = writeln!(s, "workload = {}", p.workload);
        let _ = writeln!(s, "K = {}", self.replications);
        let _ = writeln!(s, "engine = {}", self.engine);
        let _ = writeln!(s, "iterations = {}", self.budget.iterations);
        let _ = writeln!(s, "burn_in = {}", self.budget.burn_in);
        let _ = writeln!(s, "thin = {}", self.budget.thin);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

pub const CONFIG_KEYS: [&str; 19] = [
    "name",
    "design",
    "beta0",
    "beta1",
    "var_f",
    "var_t",
    "rho",
    "n",
    "n_tel",
    "interviewers_ftf",
    "interviewers_tel",
    "interviewers_both",
    "workload",
    "K",
    "engine",
    "seed",
    "iterations",
    "burn_in",
    "thin",
];

/// Parses a scenario file: `key = value` lines, `#` comments.
/// Unknown and duplicate keys are rejected. Defaults: name "custom",
/// beta0 0, interviewers_both 0, workload even, desk MCMC budget.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, SimError> {
    let mut map = std::collections::BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| SimError::Config(format!("line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !CONFIG_KEYS.contains(&k) {
            return Err(SimError::Config(format!(
                "unknown key `{k}` on line {}",
                i + 1
            )));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(SimError::Config(format!(
                "duplicate key `{k}` on line {}",
                i + 1
            )));
        }
    }
    fn get<T: std::str::FromStr>(
        map: &std::collections::BTreeMap<String, String>,
        key: &str,
    ) -> Result<Option<T>, SimError> {
        map.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| SimError::Config(format!("invalid value `{v}` for key `{key}`")))
            })
            .transpose()
    }
    let need = |key: &str| SimError::Config(format!("missing required key `{key}`"));
    let design: Design = map
        .get("design")
        .ok_or_else(|| need("design"))?
        .parse()
        .map_err(|e: String| SimError::Config(e))?;
    let engine: Engine = match map.get("engine") {
        Some(v) => v.parse().map_err(SimError::Config)?,
        None => return Err(need("engine")),
    };
    let workload: Workload = match map.get("workload") {
        Some(v) => v.parse().map_err(SimError::Config)?,
        None => Workload::Even,
    };
    let desk = McmcBudget::DESK;
    let config = ScenarioConfig {
        name: map.get("name").cloned().unwrap_or_else(|| "custom".into()),
        design,
        truth: Truth {
            beta0: get(&map, "beta0")?.unwrap_or(0.0),
            beta1: get(&map, "beta1")?.ok_or_else(|| need("beta1"))?,
            var_f: get(&map, "var_f")?.ok_or_else(|| need("var_f"))?,
            var_t: get(&map, "var_t")?.ok_or_else(|| need("var_t"))?,
            rho: get(&map, "rho")?,
        },
        population: Population {
            n: get(&map, "n")?.ok_or_else(|| need("n"))?,
            n_tel: get(&map, "n_tel")?,
            interviewers_ftf: get(&map, "interviewers_ftf")?
                .ok_or_else(|| need("interviewers_ftf"))?,
            interviewers_tel: get(&map, "interviewers_tel")?
                .ok_or_else(|| need("interviewers_tel"))?,
            interviewers_both: get(&map, "interviewers_both")?.unwrap_or(0),
            workload,
        },
        replications: get(&map, "K")?.ok_or_else(|| need("K"))?,
        engine,
        budget: McmcBudget {
            iterations: get(&map, "iterations")?.unwrap_or(desk.iterations),
            burn_in: get(&map, "burn_in")?.unwrap_or(desk.burn_in),
            thin: get(&map, "thin")?.unwrap_or(desk.thin),
        },
        seed: get(&map, "seed")?.ok_or_else(|| need("seed"))?,
    };
    config.validate()?;
    Ok(config)
}

const ABS_VARIANCES: [(f64, f64); 4] = [(0.14, 0.14), (0.20, 0.14), (0.24, 0.14), (0.50, 0.14)];
const HRS_VARIANCES: [(f64, f64); 4] = [(0.03, 0.03), (0.05, 0.03), (0.06, 0.03), (0.09, 0.03)];
const DEFAULT_SEED: u64 = 20_240_101;

fn abs(i: usize) -> ScenarioConfig {
    let (var_f, var_t) = ABS_VARIANCES[i];
    ScenarioConfig {
        name: format!("abs-{}", i + 1),
        design: Design::Nested,
        truth: Truth {
            beta0: 0.0,
            beta1: 0.5,
            var_f,
            var_t,
            rho: None,
        },
        population: Population {
            n: 2521,
            n_tel: Some(1212),
            interviewers_ftf: 31,
            interviewers_tel: 13,
            interviewers_both: 0,
            workload: Workload::Even,
        },
        replications: 200,
        engine: Engine::Likelihood,
        budget: McmcBudget::DESK,
        seed: DEFAULT_SEED,
    }
}

fn hrs(i: usize, full_scale: bool) -> ScenarioConfig {
    let (var_f, var_t) = HRS_VARIANCES[i];
    let population = if full_scale {
        Population {
            n: 20_868,
            n_tel: None,
            interviewers_ftf: 37,
            interviewers_tel: 82,
            interviewers_both: 263,
            workload: Workload::Even,
        }
    } else {
        Population {
            n: 5000,
            n_tel: None,
            interviewers_ftf: 9,
            interviewers_tel: 20,
            interviewers_both: 63,
            workload: Workload::Even,
        }
    };
    ScenarioConfig {
        name: if full_scale {
            format!("hrs-{}-full", i + 1)
        } else {
            format!("hrs-{}", i + 1)
        },
        design: Design::Crossed,
        truth: Truth {
            beta0: 0.0,
            beta1: 0.5,
            var_f,
            var_t,
            rho: Some(0.5),
        },
        population,
        replications: 200,
        engine: Engine::Likelihood,
        budget: McmcBudget::DESK,
        seed: DEFAULT_SEED,
    }
}

/// abs-1..abs-4 (nested, 2,521 respondents, 31 FTF and 13 TEL interviewers)
/// and hrs-1..hrs-4 (crossed, desk scale: 5,000 respondents, 92 interviewers).
pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    (0..4)
        .map(abs)
        .chain((0..4).map(|i| hrs(i, false)))
        .collect()
}

/// hrs-1-full..hrs-4-full: 20,868 respondents and 382 interviewers
/// (37 FTF only, 82 TEL only, 263 both).
pub fn full_scale_scenarios() -> Vec<ScenarioConfig> {
    (0..4).map(|i| hrs(i, true)).collect()
}

/// Looks up a built-in or full-scale scenario by name.
pub fn scenario_by_name(name: &str) -> Option<ScenarioConfig> {
    builtin_scenarios()
        .into_iter()
        .chain(full_scale_scenarios())
        .find(|c| c.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_recompute_rounded_alphas() {
        let b = builtin_scenarios();
        let alphas: Vec<f64> = b.iter().map(|c| c.truth.alpha()).collect();
        let rounded = [0.0, 0.18, 0.27, 0.64, 0.0, 0.26, 0.35, 0.55];
        for (a, p) in alphas.iter().zip(rounded) {
            assert!((a - p).abs() < 0.005, "{a} vs {p}");
        }
        assert!((b[0].truth.alpha0() + 0.98).abs() < 0.005);
        assert!((b[4].truth.alpha0() + 1.75).abs() < 0.005);
        assert!(b
            .iter()
            .all(|c| c.validate().is_ok() && c.replications == 200));
    }

    #[test]
    fn config_text_round_trip() {
        for c in builtin_scenarios()
            .into_iter()
            .chain(full_scale_scenarios())
        {
            assert_eq!(parse_config(&c.to_config_text()).unwrap(), c);
        }
    }

    #[test]
    fn misspelled_key_is_named() {
        let text = abs(0).to_config_text().replace("var_f", "ver_f");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("ver_f"), "{err}");
    }

    #[test]
    fn missing_and_duplicate_keys() {
        let text = abs(0).to_config_text().replace("seed = ", "# seed = ");
        assert!(parse_config(&text)
            .unwrap_err()
            .to_string()
            .contains("seed"));
        let text = format!("{}beta1 = 0.2\n", abs(0).to_config_text());
        assert!(parse_config(&text)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
    }

    #[test]
    fn default_tel_share_follows_interviewers() {
        let p = hrs(0, true).population;
        assert_eq!(
            p.resolved_n_tel(),
            (20_868.0f64 * 213.5 / 382.0).round() as usize
        );
    }
}
