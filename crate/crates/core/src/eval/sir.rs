use serde::Serialize;

use crate::audio::TimeSignal;
use crate::error::{Error, Result};

pub const SIR_CAP_DB: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SirResult {
    pub sir_db: f64,
    pub target_energy: f64,
    pub interference_energy: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Signal-to-interference ratio of `estimate` by least-squares projection:
/// the target component is the projection onto the target signal, the
/// interference component the further projection onto the interferers,
/// orthogonalized against the target and each other. Capped at ±100 dB.
pub fn sir(estimate: &TimeSignal, target: &TimeSignal, interferers: &[&TimeSignal]) -> Result<SirResult> {
    estimate.check_compatible(target)?;
    for i in interferers {
        estimate.check_compatible(i)?;
    }
    let t = target.samples();
    let t_energy = dot(t, t);
    if t_energy == 0.0 {
        return Err(Error::invalid("SIR target is identically zero"));
    }
    let e = estimate.samples();
    let target_energy = dot(e, t).powi(2) / t_energy;

    let mut basis: Vec<Vec<f64>> = vec![t.iter().map(|v| v / t_energy.sqrt()).collect()];
    let mut interference_energy = 0.0;
    for src in interferers {
        let mut v = src.samples().to_vec();
        let norm0 = dot(&v, &v).sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm <= 1e-10 * norm0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        interference_energy += dot(e, &v).powi(2);
        basis.push(v);
    }

    let sir_db = if target_energy == 0.0 {
        -SIR_CAP_DB
    } else if interference_energy == 0.0 {
        SIR_CAP_DB
    } else {
        (10.0 * (target_energy / interference_energy).log10()).clamp(-SIR_CAP_DB, SIR_CAP_DB)
    };
    Ok(SirResult {
        sir_db,
        target_energy,
        interference_energy,
    })
}
