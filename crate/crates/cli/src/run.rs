//! Spectrum sweeps, field maps and resonance snapshots, with their CSV forms.
//!
//! Numbers are written in the shortest decimal form that parses back to the
//! same `f64`. A sweep point that fails records its error and the sweep
//! carries on.

use std::io::{self, Write};

use cmt_core::{ChannelId, Energy, FieldGrid, LeadId, Resonance, SMatrix};
use rayon::prelude::*;

use crate::config::{Quantity, Sweep};
use crate::experiment::Model;

/// Energy offset applied to sweep points that land on a channel threshold.
pub const THRESHOLD_NUDGE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PointData {
    /// Open channels per lead.
    pub open: usize,
    /// `transmission[i][q]`: probability from incoming channel `i` (config
    /// order) to channel `q` of the opposite lead; `None` if either is closed.
    pub transmission: Vec<Vec<Option<f64>>>,
    pub reflection: Vec<Vec<Option<f64>>>,
    pub total_transmission: Vec<Option<f64>>,
    pub total_reflection: Vec<Option<f64>>,
    pub unitarity_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPoint {
    pub sweep: f64,
    pub energy: f64,
    pub nudged: bool,
    pub outcome: Result<PointData, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub quantity: Quantity,
    pub incoming: Vec<usize>,
    pub source: LeadId,
    pub drain: Option<LeadId>,
    pub points: Vec<SpectrumPoint>,
}

/// Moves `energy` off any threshold it coincides with.
pub fn nudge_off_thresholds(energy: f64, thresholds: &[f64]) -> (f64, bool) {
    if thresholds
        .iter()
        .any(|t| (energy - t).abs() <= 1e-12 * t.abs().max(1.0))
    {
        (energy + THRESHOLD_NUDGE, true)
    } else {
        (energy, false)
    }
}

fn point_data(s: &SMatrix, incoming: &[usize], source: LeadId, drain: Option<LeadId>) -> PointData {
    let open = s.channels.iter().filter(|c| c.lead == source).count();
    let row = |lead: LeadId, p: usize| -> Vec<Option<f64>> {
        let input = ChannelId::new(source, p);
        (0..open)
            .map(|q| {
                let out = ChannelId::new(lead, q);
                (s.position(input).is_some() && s.position(out).is_some())
                    .then(|| s.probability(out, input))
            })
            .collect()
    };
    let total = |lead: LeadId, p: usize| -> Option<f64> {
        let input = ChannelId::new(source, p);
        s.position(input).map(|_| s.lead_probability(lead, input))
    };
    PointData {
        open,
        transmission: incoming
            .iter()
            .map(|&p| drain.map(|d| row(d, p)).unwrap_or_default())
            .collect(),
        reflection: incoming.iter().map(|&p| row(source, p)).collect(),
        total_transmission: incoming
            .iter()
            .map(|&p| drain.and_then(|d| total(d, p)))
            .collect(),
        total_reflection: incoming.iter().map(|&p| total(source, p)).collect(),
        unitarity_defect: s.unitarity_defect(),
    }
}

/// Solves every sweep point on a pool of `threads` workers; results keep sweep order.
pub fn compute_spectrum(
    model: &Model,
    sweep: &Sweep,
    incoming: &[usize],
    threads: usize,
) -> io::Result<Spectrum> {
    let thresholds = model.thresholds();
    let (source, drain) = (model.source_lead(), model.drain_lead());
    let solve = |value: f64| -> SpectrumPoint {
        let (energy, nudged) = nudge_off_thresholds(sweep.quantity.to_energy(value), &thresholds);
        let outcome = Energy::new(energy)
            .and_then(|e| model.smatrix(e))
            .map(|s| point_data(&s, incoming, source, drain))
            .map_err(|e| e.to_string());
        if nudged {
            log::info!("sweep point {value} sits on a threshold; E moved to {energy}");
        }
        SpectrumPoint {
            sweep: value,
            energy,
            nudged,
            outcome,
        }
    };
    let values = sweep.values();
    let points = if threads <= 1 {
        values.into_iter().map(solve).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| io::Error::other(e.to_string()))?;
        pool.install(|| values.into_par_iter().map(solve).collect())
    };
    Ok(Spectrum {
        quantity: sweep.quantity,
        incoming: incoming.to_vec(),
        source,
        drain,
        points,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn quoted(text: &str) -> String {
    format!("\"{}\"", text.replace('"', "\"\""))
}

impl Spectrum {
    /// Largest number of open channels per lead seen in the sweep.
    pub fn reported_channels(&self) -> usize {
        self.points
            .iter()
            .filter_map(|p| p.outcome.as_ref().ok().map(|d| d.open))
            .max()
            .unwrap_or(1)
    }

    pub fn header(&self) -> Vec<String> {
        let report = self.reported_channels();
        let mut h = vec![self.quantity.label().to_string(), "E".to_string()];
        for &p in &self.incoming {
            let input = ChannelId::new(self.source, p);
            if let Some(d) = self.drain {
                h.extend((0..report).map(|q| format!("T_{}_{input}", ChannelId::new(d, q))));
            }
            h.extend((0..report).map(|q| format!("R_{}_{input}", ChannelId::new(self.source, q))));
        }
        for &p in &self.incoming {
            let input = ChannelId::new(self.source, p);
            if self.drain.is_some() {
                h.push(format!("T_total_{input}"));
            }
            h.push(format!("R_total_{input}"));
        }
        h.extend(
            [
                "unitarity_defect",
                "open_channels",
                "threshold",
                "nudged",
                "error",
            ]
            .map(String::from),
        );
        h
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        let report = self.reported_channels();
        writeln!(out, "{}", self.header().join(","))?;
        let mut previous_open = None;
        for point in &self.points {
            let mut row = vec![point.sweep.to_string(), point.energy.to_string()];
            let blanks = (self.incoming.len() * report * if self.drain.is_some() { 2 } else { 1 })
                + self.incoming.len() * if self.drain.is_some() { 2 } else { 1 };
            match &point.outcome {
                Ok(d) => {
                    let pad = |v: &[Option<f64>]| {
                        (0..report)
                            .map(|q| cell(v.get(q).copied().flatten()))
                            .collect::<Vec<_>>()
                    };
                    for i in 0..self.incoming.len() {
                        if self.drain.is_some() {
                            row.extend(pad(&d.transmission[i]));
                        }
                        row.extend(pad(&d.reflection[i]));
                    }
                    for i in 0..self.incoming.len() {
                        if self.drain.is_some() {
                            row.push(cell(d.total_transmission[i]));
                        }
                        row.push(cell(d.total_reflection[i]));
                    }
                    let flag = previous_open.is_some_and(|o| o != d.open);
                    previous_open = Some(d.open);
                    row.extend([
                        d.unitarity_defect.to_string(),
                        d.open.to_string(),
                        u8::from(flag).to_string(),
                        u8::from(point.nudged).to_string(),
                        String::new(),
                    ]);
                }
                Err(e) => {
                    row.extend(std::iter::repeat_n(String::new(), blanks + 3));
                    row.push(u8::from(point.nudged).to_string());
                    row.push(quoted(e));
                }
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn write_field_csv(grid: &FieldGrid, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "{},{},re,im,abs", grid.axes[0], grid.axes[1])?;
    for p in &grid.points {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.x,
            p.y,
            p.value.re,
            p.value.im,
            p.value.norm()
        )?;
    }
    Ok(())
}

/// Eigenvalue snapshots of `H_eff` at each probe energy.
pub fn compute_resonances(
    model: &Model,
    probes: &[f64],
) -> Vec<(f64, Result<Vec<Resonance>, String>)> {
    probes
        .iter()
        .map(|&e| {
            let r = Energy::new(e)
                .and_then(|energy| model.heff(energy))
                .and_then(|h| h.resonances())
                .map_err(|err| err.to_string());
            (e, r)
        })
        .collect()
}

pub fn write_resonances_csv(
    snapshots: &[(f64, Result<Vec<Resonance>, String>)],
    out: &mut dyn Write,
) -> io::Result<()> {
    writeln!(out, "E_probe,index,re_z,width,error")?;
    for (e, r) in snapshots {
        match r {
            Ok(list) => {
                for (i, z) in list.iter().enumerate() {
                    writeln!(out, "{e},{i},{},{},", z.position(), z.width())?;
                }
            }
            Err(msg) => writeln!(out, "{e},,,,{}", quoted(msg))?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, ModelSpec};

    fn chain_model(sites: usize, hopping: f64) -> Model {
        Model::build(&ModelSpec::Chain {
            sites,
            hopping,
            leads: cmt_core::chain::ChainLeads::Both,
        })
        .unwrap()
    }

    fn csv(s: &Spectrum) -> String {
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn nudges_only_on_thresholds() {
        assert_eq!(
            nudge_off_thresholds(4.0, &[0.0, 4.0]),
            (4.0 + THRESHOLD_NUDGE, true)
        );
        assert_eq!(nudge_off_thresholds(3.9, &[0.0, 4.0]), (3.9, false));
    }

    #[test]
    fn chain_sweep_rows_and_flux() {
        let sweep = Sweep {
            quantity: Quantity::Energy,
            start: 0.0,
            stop: 4.0,
            points: 9,
        };
        let s = compute_spectrum(&chain_model(5, 0.4), &sweep, &[0], 1).unwrap();
        assert!(s.points[0].nudged && s.points[8].nudged);
        for p in &s.points[1..8] {
            let d = p.outcome.as_ref().unwrap();
            let t = d.total_transmission[0].unwrap();
            let r = d.total_reflection[0].unwrap();
            assert!((t + r - 1.0).abs() < 1e-10);
        }
        let text = csv(&s);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 10);
        assert_eq!(
            lines[0],
            "E,E,T_R0_L0,R_L0_L0,T_total_L0,R_total_L0,unitarity_defect,open_channels,threshold,nudged,error"
        );
        let width = lines[0].split(',').count();
        for l in &lines[1..] {
            assert_eq!(l.split(',').count(), width, "{l}");
        }
    }

    #[test]
    fn threshold_rows_are_flagged() {
        let cfg = parse_config("[model]\nkind = continuum2d\nLx = 1\nLy = 1.8\nd = 1\nn_max = 6\nm_max = 8\np_max = 4\n").unwrap();
        let model = Model::build(&cfg.model).unwrap();
        let sweep = Sweep {
            quantity: Quantity::Omega,
            start: 2.0,
            stop: 4.0,
            points: 5,
        };
        let s = compute_spectrum(&model, &sweep, &[0], 1).unwrap();
        let text = csv(&s);
        // pi lies between 3.0 and 3.5: the second channel opens there
        let flags: Vec<&str> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').rev().nth(2).unwrap())
            .collect();
        assert_eq!(flags, vec!["0", "0", "0", "1", "0"]);
        assert_eq!(s.reported_channels(), 2);
    }

    #[test]
    fn parallel_matches_sequential() {
        let model = chain_model(7, 0.4);
        let sweep = Sweep {
            quantity: Quantity::Energy,
            start: 0.01,
            stop: 3.99,
            points: 200,
        };
        let a = compute_spectrum(&model, &sweep, &[0], 1).unwrap();
        let b = compute_spectrum(&model, &sweep, &[0], 4).unwrap();
        assert_eq!(csv(&a), csv(&b));
    }

    #[test]
    fn failed_points_keep_the_row_shape() {
        // below the first lattice band edge nothing propagates
        let model = Model::build(&ModelSpec::Chain {
            sites: 3,
            hopping: 0.5,
            leads: cmt_core::chain::ChainLeads::Both,
        })
        .unwrap();
        let sweep = Sweep {
            quantity: Quantity::Energy,
            start: 3.0,
            stop: 5.0,
            points: 3,
        };
        let s = compute_spectrum(&model, &sweep, &[0], 1).unwrap();
        assert!(s.points[2].outcome.is_err());
        let text = csv(&s);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[3].ends_with('"'));
        assert!(lines[3].contains("no open channel"));
    }

    #[test]
    fn resonance_widths_are_non_negative() {
        let snaps = compute_resonances(&chain_model(5, 0.4), &[2.0]);
        let list = snaps[0].1.as_ref().unwrap();
        assert_eq!(list.len(), 5);
        assert!(list.iter().all(|z| z.width() >= -1e-12));
        let mut buf = Vec::new();
        write_resonances_csv(&snaps, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 6);
    }
}
