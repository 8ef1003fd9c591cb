//! Seeded data generation for the nested and crossed designs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{Dataset, Design, Mode, RespondentRecord, SourceColumns};
use crate::sim::config::{Population, Truth, Workload};
use crate::sim::SimError;

/// Independent random streams of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Effects = 1,
    Outcomes = 2,
    Assignment = 3,
    Sampler = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of substream `role` of replication `k` under base seed `base`.
pub fn derive_seed(base: u64, k: u64, role: StreamRole) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ k) ^ role as u64)
}

/// Interviewer-level effects actually drawn; a mode the interviewer does not
/// serve is `None` in the nested design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterviewerEffects {
    pub ftf: Option<f64>,
    pub tel: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub dataset: Dataset,
    pub effects: Vec<InterviewerEffects>,
}

#[derive(Debug, Clone)]
struct Slot {
    label: String,
    ftf: usize,
    tel: usize,
}

fn even_split(total: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|i| total / parts + usize::from(i < total % parts))
        .collect()
}

fn random_split<R: Rng>(rng: &mut R, total: usize, parts: usize) -> Vec<usize> {
    let mut counts = vec![1; parts];
    for _ in parts..total {
        counts[rng.random_range(0..parts)] += 1;
    }
    counts
}

fn read_table(path: &std::path::Path, design: Design) -> Result<Vec<Slot>, SimError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Workload(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut slots: Vec<Slot> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| SimError::Workload(e.to_string()))?;
        let line = i + 2;
        if rec.len() != 3 {
            return Err(SimError::Workload(format!(
                "line {line}: expected interviewer,mode,count"
            )));
        }
        let mode = match rec[1].to_ascii_uppercase().as_str() {
            "FTF" | "1" => Mode::Ftf,
            "TEL" | "0" => Mode::Tel,
            other => {
                return Err(SimError::Workload(format!(
                    "line {line}: unknown mode `{other}`"
                )))
            }
        };
        let count: usize = rec[2]
            .parse()
            .map_err(|_| SimError::Workload(format!("line {line}: invalid count `{}`", &rec[2])))?;
        let idx = match slots.iter().position(|s| s.label == rec[0]) {
            Some(i) => i,
            None => {
                slots.push(Slot {
                    label: rec[0].to_string(),
                    ftf: 0,
                    tel: 0,
                });
                slots.len() - 1
            }
        };
        match mode {
            Mode::Ftf => slots[idx].ftf += count,
            Mode::Tel => slots[idx].tel += count,
        }
    }
    if design == Design::Nested {
        if let Some(s) = slots.iter().find(|s| s.ftf > 0 && s.tel > 0) {
            return Err(SimError::Workload(format!(
                "interviewer {} works both modes in a nested design",
                s.label
            )));
        }
    }
    Ok(slots)
}

/// Interviewers with their respondent counts per mode.
fn allocate(
    design: Design,
    population: &Population,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Slot>, SimError> {
    let p = population;
    if let Workload::Table(path) = &p.workload {
        let slots = read_table(path, design)?;
        let total: usize = slots.iter().map(|s| s.ftf + s.tel).sum();
        if total != p.n {
            return Err(SimError::Workload(format!(
                "assignment table has {total} respondents, config says n = {}",
                p.n
            )));
        }
        return Ok(slots);
    }
    if design == Design::Nested && p.interviewers_both > 0 {
        return Err(SimError::Workload(
            "nested design with interviewers in both modes".into(),
        ));
    }
    let n_tel = p.resolved_n_tel();
    let serve_f = p.interviewers_ftf + p.interviewers_both;
    let serve_t = p.interviewers_tel + p.interviewers_both;
    if n_tel > p.n || serve_f == 0 || serve_t == 0 || p.n - n_tel < serve_f || n_tel < serve_t {
        return Err(SimError::Workload(format!(
            "cannot place {} FTF and {n_tel} TEL respondents on {serve_f} FTF and {serve_t} TEL interviewers",
            p.n.saturating_sub(n_tel)
        )));
    }
    let (f_counts, t_counts) = match p.workload {
        Workload::Random => {
            let f = random_split(rng, p.n - n_tel, serve_f);
            let t = random_split(rng, n_tel, serve_t);
            (f, t)
        }
        _ => (even_split(p.n - n_tel, serve_f), even_split(n_tel, serve_t)),
    };
    let mut slots = Vec::with_capacity(p.n_interviewers());
    for (i, &ftf) in f_counts.iter().take(p.interviewers_ftf).enumerate() {
        slots.push(Slot {
            label: format!("F{:03}", i + 1),
            ftf,
            tel: 0,
        });
    }
    for (i, &tel) in t_counts.iter().take(p.interviewers_tel).enumerate() {
        slots.push(Slot {
            label: format!("T{:03}", i + 1),
            ftf: 0,
            tel,
        });
    }
    for i in 0..p.interviewers_both {
        slots.push(Slot {
            label: format!("B{:03}", i + 1),
            ftf: f_counts[p.interviewers_ftf + i],
            tel: t_counts[p.interviewers_tel + i],
        });
    }
    Ok(slots)
}

/// Generates one replication. Records are grouped by interviewer, FTF first.
pub fn generate(
    design: Design,
    truth: &Truth,
    population: &Population,
    base_seed: u64,
    replication: u64,
) -> Result<Generated, SimError> {
    let seed = |role| derive_seed(base_seed, replication, role);
    let mut assign_rng = ChaCha8Rng::seed_from_u64(seed(StreamRole::Assignment));
    let mut effect_rng = ChaCha8Rng::seed_from_u64(seed(StreamRole::Effects));
    let mut outcome_rng = ChaCha8Rng::seed_from_u64(seed(StreamRole::Outcomes));

    let rho = match design {
        Design::Crossed => {
            let r = truth
                .rho
                .ok_or_else(|| SimError::Config("the crossed design needs rho".into()))?;
            if !(r > -1.0 && r < 1.0) {
                return Err(SimError::Config(format!("rho {r} outside (-1, 1)")));
            }
            r
        }
        Design::Nested => 0.0,
    };
    if !(truth.var_f >= 0.0 && truth.var_t >= 0.0) {
        return Err(SimError::Config(format!(
            "variances must be non-negative (var_f={}, var_t={})",
            truth.var_f, truth.var_t
        )));
    }
    let slots = allocate(design, population, &mut assign_rng)?;
    let (sd_f, sd_t) = (truth.var_f.sqrt(), truth.var_t.sqrt());
    let effects: Vec<InterviewerEffects> = slots
        .iter()
        .map(|s| match design {
            Design::Nested => {
                let z: f64 = effect_rng.sample(StandardNormal);
                if s.ftf > 0 {
                    InterviewerEffects {
                        ftf: Some(sd_f * z),
                        tel: None,
                    }
                } else {
                    InterviewerEffects {
                        ftf: None,
                        tel: Some(sd_t * z),
                    }
                }
            }
            Design::Crossed => {
                let z1: f64 = effect_rng.sample(StandardNormal);
                let z2: f64 = effect_rng.sample(StandardNormal);
                InterviewerEffects {
                    ftf: Some(sd_f * z1),
                    tel: Some(sd_t * (rho * z1 + (1.0 - rho * rho).sqrt() * z2)),
                }
            }
        })
        .collect();

    let mut records = Vec::with_capacity(population.n);
    for (j, (slot, eff)) in slots.iter().zip(&effects).enumerate() {
        for (mode, count, b) in [
            (Mode::Ftf, slot.ftf, eff.ftf),
            (Mode::Tel, slot.tel, eff.tel),
        ] {
            let eta = truth.beta0 + truth.beta1 * mode.as_f64() + b.unwrap_or(0.0);
            for _ in 0..count {
                let e: f64 = outcome_rng.sample(StandardNormal);
                records.push(RespondentRecord {
                    outcome: u8::from(eta + e > 0.0),
                    mode,
                    interviewer: j,
                    covariates: Vec::new(),
                });
            }
        }
    }
    let labels = slots.into_iter().map(|s| s.label).collect();
    let dataset = Dataset::new(
        records,
        Vec::new(),
        labels,
        Some(design),
        SourceColumns::default(),
    )
    .map_err(|e| SimError::Workload(e.to_string()))?;
    Ok(Generated { dataset, effects })
}

/// Nested-design dataset (each interviewer works one mode).
pub fn generate_nested(
    truth: &Truth,
    population: &Population,
    seed: u64,
) -> Result<Dataset, SimError> {
    generate(Design::Nested, truth, population, seed, 0).map(|g| g.dataset)
}

/// Crossed-design dataset with correlated (b_f, b_t) per interviewer.
pub fn generate_crossed(
    truth: &Truth,
    population: &Population,
    seed: u64,
) -> Result<Dataset, SimError> {
    generate(Design::Crossed, truth, population, seed, 0).map(|g| g.dataset)
}
