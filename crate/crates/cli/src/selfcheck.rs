//! Built-in invariant suite.
//!
//! Every check reports a measured defect against a fixed limit. Random
//! samples come from a seeded generator, so two runs print the same numbers.

use std::fmt;
use std::time::Instant;

use cmt_core::chain::{ChainLeads, ChainModel};
use cmt_core::cylinder::{overlap_v_cyl, overlap_v_cyl_quadrature, CylinderModel};
use cmt_core::lattice::Lattice2DModel;
use cmt_core::oracle::{direct_scattering_chain, direct_scattering_lattice2d};
use cmt_core::rect::{overlap_v, overlap_v_quadrature, RectModel};
use cmt_core::special::{bessel_j1, j1_zeros};
use cmt_core::{Complex64, EffectiveHamiltonian, Energy, LeadId, SMatrix, ScatteringModel};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const SEED: u64 = 0x5eed_c0de;
const SAMPLES: usize = 24;

/// Deliberate corruption of the effective Hamiltonian, used to show that the
/// suite notices broken physics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flip the sign of the source term of the first right-lead channel.
    CouplingSign,
    /// Take the wrong branch of the evanescent wavenumber, `kappa -> -i kappa`.
    EvanescentBranch,
}

impl std::str::FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "coupling-sign" => Ok(Fault::CouplingSign),
            "evanescent-branch" => Ok(Fault::EvanescentBranch),
            other => Err(format!(
                "unknown fault `{other}` (expected coupling-sign or evanescent-branch)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            limit,
            // NaN must not pass
            passed: measured <= limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<28} measured {:.3e}  limit {:.1e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.limit
            )?;
        }
        write!(
            f,
            "{} of {} checks passed in {:.1} s",
            self.checks.len() - self.failures(),
            self.checks.len(),
            self.seconds
        )
    }
}

fn tamper(
    heff: EffectiveHamiltonian,
    fault: Option<Fault>,
) -> cmt_core::Result<EffectiveHamiltonian> {
    let Some(fault) = fault else { return Ok(heff) };
    let mut terms = heff.terms().to_vec();
    for t in &mut terms {
        match fault {
            Fault::CouplingSign if t.open && t.id.lead == LeadId::RIGHT && t.id.index == 0 => {
                t.drive = -t.drive
            }
            Fault::EvanescentBranch if !t.open => t.factor *= Complex64::new(0.0, -1.0),
            _ => {}
        }
    }
    EffectiveHamiltonian::assemble(heff.diag().to_vec(), terms)
}

fn max_abs_difference(a: &SMatrix, b: &SMatrix) -> f64 {
    if a.channels != b.channels {
        return f64::INFINITY;
    }
    let n = a.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a.matrix[(i, j)] - b.matrix[(i, j)]).norm());
        }
    }
    worst
}

/// One randomly drawn model together with a working energy.
struct Sample {
    model: Box<dyn ScatteringModel>,
    energy: Energy,
}

fn draw_samples(family: &str, rng: &mut StdRng) -> Vec<Sample> {
    let mut out = Vec::with_capacity(SAMPLES);
    let mut attempts = 0;
    while out.len() < SAMPLES && attempts < 50 * SAMPLES {
        attempts += 1;
        let built: cmt_core::Result<(Box<dyn ScatteringModel>, f64)> = match family {
            "chain" => ChainModel::new(
                rng.gen_range(1..=9),
                rng.gen_range(0.05..1.0),
                ChainLeads::Both,
            )
            .map(|m| {
                (
                    Box::new(m) as Box<dyn ScatteringModel>,
                    rng.gen_range(0.05..3.95),
                )
            }),
            "lattice" => {
                let p = rng.gen_range(1..=4);
                let m = p + 2 * rng.gen_range(0..=2);
                let a0 = rng.gen_range(0.1..0.5);
                Lattice2DModel::new(rng.gen_range(2..=7), m, p, a0).map(|l| {
                    (
                        Box::new(l) as Box<dyn ScatteringModel>,
                        rng.gen_range(0.05..7.9) / (a0 * a0),
                    )
                })
            }
            "continuum" => {
                let ly = rng.gen_range(1.0..2.0);
                RectModel::new(
                    rng.gen_range(0.5..1.5),
                    ly,
                    rng.gen_range(0.3..ly),
                    10,
                    10,
                    4,
                )
                .map(|r| {
                    (
                        Box::new(r) as Box<dyn ScatteringModel>,
                        rng.gen_range(0.5f64..9.0).powi(2),
                    )
                })
            }
            "cylinder" => {
                let radius = rng.gen_range(1.0..2.0);
                CylinderModel::continuum(
                    radius,
                    rng.gen_range(0.5..1.5),
                    rng.gen_range(0.3..radius),
                    10,
                    8,
                    3,
                )
                .map(|c| {
                    (
                        Box::new(c) as Box<dyn ScatteringModel>,
                        rng.gen_range(0.5f64..9.0).powi(2),
                    )
                })
            }
            "cylinder-mixed" => {
                let radius = rng.gen_range(1.0..2.0);
                CylinderModel::mixed(
                    radius,
                    rng.gen_range(0.5..1.5),
                    rng.gen_range(0.3..radius),
                    12,
                    8,
                    3,
                )
                .map(|c| {
                    (
                        Box::new(c) as Box<dyn ScatteringModel>,
                        rng.gen_range(0.5f64..9.0).powi(2),
                    )
                })
            }
            _ => unreachable!("unknown family {family}"),
        };
        let Ok((model, e)) = built else { continue };
        let Ok(energy) = Energy::new(e) else { continue };
        // skip draws with nothing propagating or sitting on a degeneracy
        if model.smatrix(energy).is_ok() {
            out.push(Sample { model, energy });
        }
    }
    out
}

const FAMILIES: [&str; 5] = [
    "chain",
    "lattice",
    "continuum",
    "cylinder",
    "cylinder-mixed",
];

/// Runs the whole suite, optionally against a corrupted effective Hamiltonian.
pub fn run_selfcheck(fault: Option<Fault>) -> Report {
    let start = Instant::now();
    let mut checks = Vec::new();

    // J1 roots against tabulated values
    let table = [
        0.0,
        3.831_705_970_207_512,
        7.015_586_669_815_619,
        10.173_468_135_062_722,
        13.323_691_936_314_223,
        16.470_630_050_877_634,
        19.615_858_510_468_243,
    ];
    let roots = j1_zeros(table.len());
    let mut bessel = 0.0f64;
    for (i, &mu) in table.iter().enumerate() {
        bessel = bessel
            .max((roots.get(i) - mu).abs())
            .max(bessel_j1(roots.get(i)).abs());
    }
    checks.push(Check::new("bessel-root-table", bessel, 1e-12));

    let mut rect_overlap = 0.0f64;
    for (d, ly) in [(1.0, 1.8), (0.35, 1.0), (0.7, 1.3)] {
        for p in 0..6 {
            for m in 0..10 {
                rect_overlap = rect_overlap
                    .max((overlap_v(p, m, d, ly) - overlap_v_quadrature(p, m, d, ly)).abs());
            }
        }
    }
    checks.push(Check::new("overlap-rect-closed-form", rect_overlap, 1e-10));

    let mut cyl_overlap = 0.0f64;
    for (a, radius) in [(1.0, 1.5), (1.0, 2.0), (0.4, 1.1)] {
        for p in 0..5 {
            for m in 0..8 {
                let (mu_p, mu_m) = (
                    roots.get(p.min(table.len() - 1)),
                    roots.get(m.min(table.len() - 1)),
                );
                let diff = (overlap_v_cyl(mu_p, mu_m, a, radius)
                    - overlap_v_cyl_quadrature(mu_p, mu_m, a, radius))
                .abs();
                cyl_overlap = cyl_overlap.max(diff);
            }
        }
    }
    checks.push(Check::new(
        "overlap-cylinder-closed-form",
        cyl_overlap,
        1e-10,
    ));

    let mut rng = StdRng::seed_from_u64(SEED);
    for family in FAMILIES {
        let samples = draw_samples(family, &mut rng);
        let (mut unitarity, mut reciprocity, mut causality) = (0.0f64, 0.0f64, 0.0f64);
        for s in &samples {
            let heff = s.model.heff(s.energy).and_then(|h| tamper(h, fault));
            let smatrix = heff.as_ref().ok().map(|h| h.smatrix(s.energy));
            match smatrix {
                Some(Ok(sm)) => {
                    unitarity = unitarity.max(sm.unitarity_defect());
                    reciprocity = reciprocity.max(sm.reciprocity_defect());
                }
                _ => {
                    unitarity = f64::INFINITY;
                    reciprocity = f64::INFINITY;
                }
            }
            match heff.and_then(|h| h.resonances()) {
                Ok(list) => {
                    for z in list {
                        causality = causality.max(-z.width() / z.position().abs().max(1.0));
                    }
                }
                Err(_) => causality = f64::INFINITY,
            }
        }
        if samples.len() < SAMPLES / 2 {
            // too few usable draws means the sampler itself is broken
            unitarity = f64::INFINITY;
        }
        checks.push(Check::new(format!("unitarity/{family}"), unitarity, 1e-10));
        checks.push(Check::new(
            format!("reciprocity/{family}"),
            reciprocity,
            1e-10,
        ));
        checks.push(Check::new(format!("causality/{family}"), causality, 1e-10));
    }

    let mut oracle_chain = 0.0f64;
    for _ in 0..SAMPLES {
        let model = ChainModel::new(
            rng.gen_range(1..=9),
            rng.gen_range(0.05..1.0),
            ChainLeads::Both,
        )
        .expect("valid chain");
        let energy = Energy::new(rng.gen_range(0.05..3.95)).expect("finite energy");
        let cmt = model
            .heff(energy)
            .and_then(|h| tamper(h, fault))
            .and_then(|h| h.smatrix(energy));
        let direct = direct_scattering_chain(&model, energy);
        oracle_chain = oracle_chain.max(match (cmt, direct) {
            (Ok(a), Ok(b)) => max_abs_difference(&a, &b.smatrix),
            _ => f64::INFINITY,
        });
    }
    checks.push(Check::new("oracle/chain", oracle_chain, 1e-10));

    let mut oracle_lattice = 0.0f64;
    let mut drawn = 0;
    while drawn < SAMPLES / 2 {
        let p = rng.gen_range(1..=4);
        let m = p + 2 * rng.gen_range(0..=2);
        let a0 = rng.gen_range(0.1..0.5);
        let model = Lattice2DModel::new(rng.gen_range(2..=6), m, p, a0).expect("valid lattice");
        let energy = Energy::new(rng.gen_range(0.05..7.9) / (a0 * a0)).expect("finite energy");
        let Ok(direct) = direct_scattering_lattice2d(&model, energy) else {
            continue;
        };
        drawn += 1;
        let cmt = model
            .heff(energy)
            .and_then(|h| tamper(h, fault))
            .and_then(|h| h.smatrix(energy));
        oracle_lattice = oracle_lattice
            .max(cmt.map_or(f64::INFINITY, |a| max_abs_difference(&a, &direct.smatrix)));
    }
    checks.push(Check::new("oracle/lattice", oracle_lattice, 1e-10));

    Report {
        checks,
        seconds: start.elapsed().as_secs_f64(),
    }
}
