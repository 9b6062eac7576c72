//! Formulation-agnostic effective non-Hermitian Hamiltonian.
//!
//! Every geometry in this crate reduces its scattering problem to the same
//! data: real closed-resonator eigenvalues `E_m` plus a list of
//! [`ChannelTerm`]s, each carrying a real coupling column `w_c` and the
//! scalars that enter
//!
//! ```text
//! H_eff = diag(E_m) + sum_c f_c w_c w_c^T
//! (H_eff - E) chi = sum_c drive_c w_c a+_c
//! a-_c = -a+_c + g_c w_c^T chi
//! ```
//!
//! Since every `w_c` is real, `H_eff` is complex symmetric. With the
//! flux-normalized scales used throughout (`drive_c / g_c = -i / 2pi` and
//! `-Im f_c = g_c^2 / 4pi` for open channels) the resulting S-matrix is
//! unitary and symmetric regardless of how many resonator modes or
//! evanescent channels are retained.

use std::fmt;
use std::io::Write as _;
use std::sync::OnceLock;

use faer::linalg::solvers::{DenseSolveCore, PartialPivLu, Solve};
use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{CmtError, Result};
use crate::linalg;

/// Squared wavenumber in the units of the resonator eigenvalues.
///
/// Acoustic models use `E = omega^2` (sound speed set to one); the
/// tight-binding chain uses its lattice eigenvalue directly.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Energy(f64);

impl Energy {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Energy(value))
        } else {
            Err(CmtError::invalid(format!(
                "energy must be finite, got {value}"
            )))
        }
    }

    pub fn from_omega(omega: f64) -> Result<Self> {
        Energy::new(omega * omega)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Non-negative frequency with `omega^2 = E`; zero for negative energies.
    pub fn omega(self) -> f64 {
        self.0.max(0.0).sqrt()
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LeadId(pub usize);

impl LeadId {
    pub const LEFT: LeadId = LeadId(0);
    pub const RIGHT: LeadId = LeadId(1);
}

impl fmt::Display for LeadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => write!(f, "L"),
            1 => write!(f, "R"),
            n => write!(f, "C{n}"),
        }
    }
}

/// A scattering channel: lead plus 0-based transverse quantum number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelId {
    pub lead: LeadId,
    pub index: usize,
}

impl ChannelId {
    pub fn new(lead: LeadId, index: usize) -> Self {
        ChannelId { lead, index }
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.lead, self.index)
    }
}

/// One channel's contribution to `H_eff` and to the source/extraction
/// relations.
#[derive(Debug, Clone)]
pub struct ChannelTerm {
    pub id: ChannelId,
    /// Coupling column over resonator modes.
    pub w: Vec<f64>,
    /// Multiplies `w w^T` in `H_eff`.
    pub factor: Complex64,
    /// Multiplies `w a+` on the right-hand side; zero for evanescent channels.
    pub drive: Complex64,
    /// Scale `g` in `a- = -a+ + g w^T chi`.
    pub extraction: f64,
    pub k: Complex64,
    pub open: bool,
}

impl ChannelTerm {
    /// Propagating channel with flux-normalized drive `-i g / 2pi`.
    pub fn propagating(
        id: ChannelId,
        w: Vec<f64>,
        factor: Complex64,
        extraction: f64,
        k: f64,
    ) -> Self {
        ChannelTerm {
            id,
            w,
            factor,
            drive: Complex64::new(0.0, -extraction / (2.0 * std::f64::consts::PI)),
            extraction,
            k: Complex64::new(k, 0.0),
            open: true,
        }
    }

    /// Closed channel: real level shift only, no source and no outgoing flux.
    pub fn evanescent(id: ChannelId, w: Vec<f64>, shift: f64, k: Complex64) -> Self {
        ChannelTerm {
            id,
            w,
            factor: Complex64::new(shift, 0.0),
            drive: Complex64::new(0.0, 0.0),
            extraction: 0.0,
            k,
            open: false,
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        let is_open = self.k.im == 0.0 && self.k.re > 0.0;
        // exactly at the top of a lattice band k is real but no flux is carried
        let band_edge = !self.open && is_open && self.factor.im == 0.0;
        if is_open != self.open && !band_edge {
            return Err(CmtError::invalid(format!(
                "channel {}: open flag {} inconsistent with k = {}",
                self.id, self.open, self.k
            )));
        }
        if self.open && self.factor.im > 0.0 {
            return Err(CmtError::invalid(format!(
                "channel {}: open channel factor {} has positive imaginary part",
                self.id, self.factor
            )));
        }
        if !self.open && (self.factor.im != 0.0 || self.drive != Complex64::new(0.0, 0.0)) {
            return Err(CmtError::invalid(format!(
                "channel {}: evanescent channel must have a real factor and no drive",
                self.id
            )));
        }
        Ok(())
    }
}

/// Complex eigenvalue of `H_eff` at a fixed energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub z: Complex64,
}

impl Resonance {
    pub fn position(&self) -> f64 {
        self.z.re
    }

    pub fn width(&self) -> f64 {
        -2.0 * self.z.im
    }
}

/// S-matrix over open channels, in the `-delta` sign convention.
#[derive(Debug, Clone)]
pub struct SMatrix {
    pub channels: Vec<ChannelId>,
    pub matrix: Mat<Complex64>,
}

impl SMatrix {
    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    pub fn position(&self, id: ChannelId) -> Option<usize> {
        self.channels.iter().position(|c| *c == id)
    }

    /// `S[out, in]`; zero if either channel is closed.
    pub fn amplitude(&self, out: ChannelId, incoming: ChannelId) -> Complex64 {
        match (self.position(out), self.position(incoming)) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn probability(&self, out: ChannelId, incoming: ChannelId) -> f64 {
        self.amplitude(out, incoming).norm_sqr()
    }

    /// Total probability for a wave entering through `incoming` to leave
    /// through any open channel of `lead`.
    pub fn lead_probability(&self, lead: LeadId, incoming: ChannelId) -> f64 {
        let Some(j) = self.position(incoming) else {
            return 0.0;
        };
        self.channels
            .iter()
            .enumerate()
            .filter(|(_, c)| c.lead == lead)
            .map(|(i, _)| self.matrix[(i, j)].norm_sqr())
            .sum()
    }

    /// `|S_{c'c}|^2` for every open pair.
    pub fn probabilities(&self) -> Mat<f64> {
        Mat::from_fn(self.dim(), self.dim(), |i, j| {
            self.matrix[(i, j)].norm_sqr()
        })
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(self.matrix.as_ref())
    }

    pub fn reciprocity_defect(&self) -> f64 {
        reciprocity_defect(self.matrix.as_ref())
    }
}

/// `max |S^dagger S - I|`.
pub fn unitarity_defect(s: MatRef<'_, Complex64>) -> f64 {
    assert_eq!(s.nrows(), s.ncols(), "S-matrix must be square");
    let n = s.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += s[(k, i)].conj() * s[(k, j)];
            }
            if i == j {
                acc -= 1.0;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

/// `max |S - S^T|`.
pub fn reciprocity_defect(s: MatRef<'_, Complex64>) -> f64 {
    assert_eq!(s.nrows(), s.ncols(), "S-matrix must be square");
    let n = s.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((s[(i, j)] - s[(j, i)]).norm());
        }
    }
    worst
}

/// Interior coefficients together with the channel amplitudes they produce.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub energy: Energy,
    pub chi: Vec<Complex64>,
    /// Open channels, in the order used by `incoming`, `outgoing` and `smatrix`.
    pub channels: Vec<ChannelId>,
    pub incoming: Vec<Complex64>,
    pub outgoing: Vec<Complex64>,
    pub smatrix: Option<SMatrix>,
}

impl ScatteringSolution {
    pub fn probabilities(&self) -> Option<Mat<f64>> {
        self.smatrix.as_ref().map(SMatrix::probabilities)
    }
}

/// `H_eff(E)` for one energy snapshot. The dense matrix is realized on
/// first use and cached.
#[derive(Debug)]
pub struct EffectiveHamiltonian {
    diag: Vec<f64>,
    terms: Vec<ChannelTerm>,
    matrix: OnceLock<Mat<Complex64>>,
}

impl Clone for EffectiveHamiltonian {
    fn clone(&self) -> Self {
        EffectiveHamiltonian {
            diag: self.diag.clone(),
            terms: self.terms.clone(),
            matrix: OnceLock::new(),
        }
    }
}

impl EffectiveHamiltonian {
    pub fn assemble(diag: Vec<f64>, terms: Vec<ChannelTerm>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(CmtError::invalid(
                "effective Hamiltonian needs at least one mode",
            ));
        }
        if let Some(e) = diag.iter().find(|e| !e.is_finite()) {
            return Err(CmtError::invalid(format!(
                "non-finite resonator eigenvalue {e}"
            )));
        }
        for term in &terms {
            if term.w.len() != n {
                return Err(CmtError::invalid(format!(
                    "channel {} couples {} modes, expected {n}",
                    term.id,
                    term.w.len()
                )));
            }
            let finite = term.factor.re.is_finite()
                && term.factor.im.is_finite()
                && term.drive.re.is_finite()
                && term.drive.im.is_finite()
                && term.extraction.is_finite()
                && term.w.iter().all(|x| x.is_finite());
            if !finite {
                return Err(CmtError::invalid(format!(
                    "channel {} has non-finite data",
                    term.id
                )));
            }
        }
        Ok(EffectiveHamiltonian {
            diag,
            terms,
            matrix: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn terms(&self) -> &[ChannelTerm] {
        &self.terms
    }

    pub fn open_terms(&self) -> impl Iterator<Item = &ChannelTerm> {
        self.terms.iter().filter(|t| t.open)
    }

    pub fn open_channels(&self) -> Vec<ChannelId> {
        self.open_terms().map(|t| t.id).collect()
    }

    /// `diag(E_m) + sum_c f_c w_c w_c^T`, exactly symmetric.
    pub fn matrix(&self) -> &Mat<Complex64> {
        self.matrix.get_or_init(|| self.build_matrix())
    }

    fn build_matrix(&self) -> Mat<Complex64> {
        let n = self.dim();
        let k = self.terms.len();
        let mut h = Mat::<Complex64>::zeros(n, n);
        if k > 0 {
            let scaled =
                Mat::<Complex64>::from_fn(n, k, |i, c| self.terms[c].factor * self.terms[c].w[i]);
            let plain =
                Mat::<Complex64>::from_fn(n, k, |i, c| Complex64::new(self.terms[c].w[i], 0.0));
            h = &scaled * plain.transpose();
            // matmul rounding is not symmetric; mirror the upper triangle
            for j in 0..n {
                for i in (j + 1)..n {
                    h[(i, j)] = h[(j, i)];
                }
            }
        }
        for (i, e) in self.diag.iter().enumerate() {
            h[(i, i)] += *e;
        }
        h
    }

    /// LU factorization of `H_eff - E`, with a condition guard.
    pub fn factorize(&self, energy: Energy) -> Result<InteriorSolver> {
        let mut a = self.matrix().clone();
        for i in 0..self.dim() {
            a[(i, i)] -= energy.value();
        }
        let lu = a.partial_piv_lu();
        let condition = linalg::condition_estimate(a.as_ref(), &lu);
        if !condition.is_finite() || condition > linalg::CONDITION_LIMIT {
            return Err(CmtError::NumericalDegeneracy {
                energy: energy.value(),
                condition,
            });
        }
        Ok(InteriorSolver {
            energy,
            lu,
            condition,
        })
    }

    fn check_incoming(&self, incoming: &[Complex64]) -> Result<()> {
        let open = self.open_terms().count();
        if open == 0 {
            return Err(CmtError::NoOpenChannel { energy: f64::NAN });
        }
        if incoming.len() != open {
            return Err(CmtError::invalid(format!(
                "incoming vector has {} entries but {open} channels are open",
                incoming.len()
            )));
        }
        Ok(())
    }

    fn source(&self, incoming: &[Complex64]) -> Mat<Complex64> {
        let mut rhs = Mat::<Complex64>::zeros(self.dim(), 1);
        for (term, a) in self.open_terms().zip(incoming) {
            let scale = term.drive * a;
            for (i, w) in term.w.iter().enumerate() {
                rhs[(i, 0)] += scale * w;
            }
        }
        rhs
    }

    /// Interior coefficients for the given amplitudes on the open channels.
    pub fn solve_interior(&self, energy: Energy, incoming: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_incoming(incoming)
            .map_err(|e| with_energy(e, energy))?;
        let solver = self.factorize(energy)?;
        Ok(solver.solve_column(self.source(incoming)))
    }

    /// `a-_c = -a+_c + g_c w_c^T chi` over the open channels.
    pub fn outgoing_amplitudes(
        &self,
        chi: &[Complex64],
        incoming: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        if chi.len() != self.dim() {
            return Err(CmtError::invalid(format!(
                "chi has {} entries, expected {}",
                chi.len(),
                self.dim()
            )));
        }
        let open: Vec<&ChannelTerm> = self.open_terms().collect();
        if incoming.len() != open.len() {
            return Err(CmtError::invalid(format!(
                "incoming vector has {} entries but {} channels are open",
                incoming.len(),
                open.len()
            )));
        }
        Ok(open
            .iter()
            .zip(incoming)
            .map(|(term, a)| -a + term.extraction * project(&term.w, chi))
            .collect())
    }

    /// Projection of `chi` onto every channel column, open or not.
    pub fn channel_projections(&self, chi: &[Complex64]) -> Vec<Complex64> {
        self.terms.iter().map(|t| project(&t.w, chi)).collect()
    }

    /// Full solution for one incoming amplitude vector, including the S-matrix.
    pub fn scatter(&self, energy: Energy, incoming: &[Complex64]) -> Result<ScatteringSolution> {
        self.check_incoming(incoming)
            .map_err(|e| with_energy(e, energy))?;
        let solver = self.factorize(energy)?;
        let chi = solver.solve_column(self.source(incoming));
        let outgoing = self.outgoing_amplitudes(&chi, incoming)?;
        let smatrix = self.smatrix_with(&solver);
        Ok(ScatteringSolution {
            energy,
            chi,
            channels: self.open_channels(),
            incoming: incoming.to_vec(),
            outgoing,
            smatrix: Some(smatrix),
        })
    }

    /// S-matrix from one solve per open channel.
    pub fn smatrix(&self, energy: Energy) -> Result<SMatrix> {
        if self.open_terms().next().is_none() {
            return Err(CmtError::NoOpenChannel {
                energy: energy.value(),
            });
        }
        let solver = self.factorize(energy)?;
        Ok(self.smatrix_with(&solver))
    }

    pub fn smatrix_with(&self, solver: &InteriorSolver) -> SMatrix {
        let open: Vec<&ChannelTerm> = self.open_terms().collect();
        let n = self.dim();
        let rhs = Mat::<Complex64>::from_fn(n, open.len(), |i, c| open[c].drive * open[c].w[i]);
        let x = solver.solve(rhs.as_ref());
        let matrix = Mat::<Complex64>::from_fn(open.len(), open.len(), |r, c| {
            let col: Vec<Complex64> = (0..n).map(|i| x[(i, c)]).collect();
            let delta = if r == c { 1.0 } else { 0.0 };
            open[r].extraction * project(&open[r].w, &col) - delta
        });
        SMatrix {
            channels: open.iter().map(|t| t.id).collect(),
            matrix,
        }
    }

    /// `S = -I + G W^T (H_eff - E)^{-1} W D` through the explicit inverse.
    pub fn smatrix_via_inverse(&self, energy: Energy) -> Result<SMatrix> {
        if self.open_terms().next().is_none() {
            return Err(CmtError::NoOpenChannel {
                energy: energy.value(),
            });
        }
        let solver = self.factorize(energy)?;
        let inverse = solver.lu.inverse();
        let open: Vec<&ChannelTerm> = self.open_terms().collect();
        let n = self.dim();
        let left = Mat::<Complex64>::from_fn(open.len(), n, |r, i| {
            Complex64::new(open[r].extraction * open[r].w[i], 0.0)
        });
        let right = Mat::<Complex64>::from_fn(n, open.len(), |i, c| open[c].drive * open[c].w[i]);
        let mut matrix = &left * (&inverse * &right);
        for i in 0..open.len() {
            matrix[(i, i)] -= 1.0;
        }
        Ok(SMatrix {
            channels: open.iter().map(|t| t.id).collect(),
            matrix,
        })
    }

    /// Eigenvalues of the dense matrix at this energy snapshot, sorted by
    /// real part.
    ///
    /// Each eigenvalue is evaluated as the Rayleigh quotient `v^H H v / v^H v`
    /// of its eigenvector. With `H = diag(E) + sum_c f_c w_c w_c^T` this is
    /// `(sum_i E_i |v_i|^2 + sum_c f_c |w_c^T v|^2) / |v|^2`, so `Im z` is a sum
    /// of `Im f_c` weighted by non-negative numbers and its sign does not
    /// depend on the roundoff of the eigensolver.
    pub fn resonances(&self) -> Result<Vec<Resonance>> {
        let m = self.matrix();
        let eigen = match m.eigen() {
            Ok(e) => e,
            Err(_) => {
                return Err(CmtError::EigenSolver {
                    dump: dump_matrix(m.as_ref()),
                })
            }
        };
        let (u, s) = (eigen.U(), eigen.S());
        let n = self.dim();
        let mut out = Vec::with_capacity(n);
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi = u[(i, j)];
            }
            let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum();
            let z = if norm > 0.0 && norm.is_finite() {
                let diag: f64 = self
                    .diag
                    .iter()
                    .zip(&v)
                    .map(|(e, x)| e * x.norm_sqr())
                    .sum();
                let coupled: Complex64 = self
                    .terms
                    .iter()
                    .map(|t| t.factor * project(&t.w, &v).norm_sqr())
                    .sum();
                (coupled + diag) / norm
            } else {
                s[j]
            };
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(CmtError::EigenSolver {
                    dump: dump_matrix(m.as_ref()),
                });
            }
            out.push(Resonance { z });
        }
        out.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
        Ok(out)
    }
}

fn with_energy(err: CmtError, energy: Energy) -> CmtError {
    match err {
        CmtError::NoOpenChannel { .. } => CmtError::NoOpenChannel {
            energy: energy.value(),
        },
        other => other,
    }
}

fn project(w: &[f64], chi: &[Complex64]) -> Complex64 {
    w.iter().zip(chi).map(|(w, c)| c * w).sum()
}

fn dump_matrix(m: MatRef<'_, Complex64>) -> std::path::PathBuf {
    let path =
        std::env::temp_dir().join(format!("cmt-heff-{}-{}.txt", std::process::id(), m.nrows()));
    if let Ok(mut f) = std::fs::File::create(&path) {
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols())
                .map(|j| format!("{:?} {:?}", m[(i, j)].re, m[(i, j)].im))
                .collect();
            let _ = writeln!(f, "{}", row.join(" "));
        }
    }
    path
}

/// Factorized `H_eff - E` for one energy.
pub struct InteriorSolver {
    energy: Energy,
    lu: PartialPivLu<Complex64>,
    condition: f64,
}

impl InteriorSolver {
    pub fn energy(&self) -> Energy {
        self.energy
    }

    /// 1-norm condition number estimate of `H_eff - E`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, rhs: MatRef<'_, Complex64>) -> Mat<Complex64> {
        self.lu.solve(rhs)
    }

    fn solve_column(&self, rhs: Mat<Complex64>) -> Vec<Complex64> {
        let x = self.lu.solve(&rhs);
        (0..x.nrows()).map(|i| x[(i, 0)]).collect()
    }
}
