//! Combinatorial assembly of the N-particle scattering matrix.
//!
//! Each term is a product of frequency delta constraints and a complex
//! coefficient. A term with `k` pass-through particles pairs a k-subset of
//! outputs with a k-subset of inputs through all permutations; the remaining
//! N-k particles are scattered by the emitter, contributing
//! `(V0^2 / 2 pi i) G(x, x_d; omega) E(x_d, Omega, nu)` weights and an
//! (N-k)-excitation Green's function factor. Closed forms exist for one and
//! two excitations; higher connected orders are reported as unsupported.

use num_complex::Complex64;

use crate::emitter::EmitterResponse;
use crate::error::{Error, Result};

use super::BathFields;

/// Symbolic frequency constraint carried by an assembled term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum DeltaConstraint {
    /// `delta(omega_out - nu_in)`
    Pair { out_idx: usize, in_idx: usize },
    /// `delta(sum omega_outs - sum nu_ins)`
    Total { outs: Vec<usize>, ins: Vec<usize> },
}

/// One term of the assembled scattering matrix: the coefficient multiplying
/// the product of the listed delta constraints, evaluated at the given
/// arguments.
#[derive(Debug, Clone)]
pub struct SmatrixTerm {
    pub constraints: Vec<DeltaConstraint>,
    pub coefficient: Complex64,
}

impl SmatrixTerm {
    /// Canonical signature for grouping terms (sorted constraints).
    pub fn signature(&self) -> Vec<DeltaConstraint> {
        let mut sig = self.constraints.clone();
        sig.sort();
        sig
    }
}

/// Structural energy conservation: the constraints of a term must cover every
/// output and input index exactly once, which forces `sum omega = sum nu`.
pub fn term_covers_all_indices(n: usize, term: &SmatrixTerm) -> bool {
    let mut outs = vec![0usize; n];
    let mut ins = vec![0usize; n];
    for c in &term.constraints {
        match c {
            DeltaConstraint::Pair { out_idx, in_idx } => {
                outs[*out_idx] += 1;
                ins[*in_idx] += 1;
            }
            DeltaConstraint::Total { outs: os, ins: is } => {
                for &o in os {
                    outs[o] += 1;
                }
                for &i in is {
                    ins[i] += 1;
                }
            }
        }
    }
    outs.iter().all(|&c| c == 1) && ins.iter().all(|&c| c == 1)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0..1usize << n)
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect()
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest: Vec<usize> = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

fn complement(n: usize, subset: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !subset.contains(i)).collect()
}

/// Expansion of the m-excitation Green's function over the given output and
/// input indices, as (extra constraints, coefficient) pieces.
fn excitation_green(
    resp: &EmitterResponse,
    outs: &[usize],
    ins: &[usize],
    omegas: &[f64],
    nus: &[f64],
) -> Result<Vec<(Vec<DeltaConstraint>, Complex64)>> {
    let tau = 2.0 * std::f64::consts::PI;
    match outs.len() {
        0 => Ok(vec![(Vec::new(), Complex64::new(1.0, 0.0))]),
        1 => Ok(vec![(
            vec![DeltaConstraint::Pair {
                out_idx: outs[0],
                in_idx: ins[0],
            }],
            tau * resp.response_freq(nus[ins[0]]),
        )]),
        2 => {
            let mut pieces = Vec::with_capacity(3);
            // Disconnected permanent: both pairings of G1 G1.
            for (i0, i1) in [(ins[0], ins[1]), (ins[1], ins[0])] {
                pieces.push((
                    vec![
                        DeltaConstraint::Pair {
                            out_idx: outs[0],
                            in_idx: i0,
                        },
                        DeltaConstraint::Pair {
                            out_idx: outs[1],
                            in_idx: i1,
                        },
                    ],
                    tau * tau * resp.response_freq(nus[i0]) * resp.response_freq(nus[i1]),
                ));
            }
            // Connected part.
            pieces.push((
                vec![DeltaConstraint::Total {
                    outs: outs.to_vec(),
                    ins: ins.to_vec(),
                }],
                super::gc2_coefficient(
                    resp,
                    [omegas[outs[0]], omegas[outs[1]]],
                    [nus[ins[0]], nus[ins[1]]],
                )?,
            ));
            Ok(pieces)
        }
        m => Err(Error::UnsupportedExcitationOrder(m)),
    }
}

/// Assemble the N-particle scattering matrix (N <= 3) at the given output
/// positions/frequencies and input directions/frequencies. Terms with an
/// exactly zero coefficient (uncoupled emitter) are dropped.
pub fn assemble_n(
    n: usize,
    resp: &EmitterResponse,
    fields: &impl BathFields,
    xs: &[[f64; 2]],
    omegas: &[f64],
    dirs: &[[f64; 2]],
    nus: &[f64],
) -> Result<Vec<SmatrixTerm>> {
    if n == 0 || n > 3 {
        return Err(Error::UnsupportedParticleNumber(n));
    }
    if xs.len() != n || omegas.len() != n || dirs.len() != n || nus.len() != n {
        return Err(Error::Parameter(format!(
            "argument arrays must all have length {n}"
        )));
    }
    let v0 = resp.params.v0;
    let scatter_weight = Complex64::new(v0 * v0, 0.0)
        / (2.0 * std::f64::consts::PI * Complex64::i());

    let mut terms = Vec::new();
    for k in (0..=n).rev() {
        for b in subsets(n, k) {
            for d in subsets(n, k) {
                for perm in permutations(&d) {
                    // Pass-through factors.
                    let mut coeff = Complex64::new(1.0, 0.0);
                    let mut constraints = Vec::with_capacity(n);
                    for (&out_idx, &in_idx) in b.iter().zip(&perm) {
                        coeff *= fields.total_field(xs[out_idx], dirs[in_idx], nus[in_idx])?;
                        constraints.push(DeltaConstraint::Pair { out_idx, in_idx });
                    }

                    let rest_outs = complement(n, &b);
                    let rest_ins = complement(n, &d);
                    if rest_outs.is_empty() {
                        terms.push(SmatrixTerm {
                            constraints,
                            coefficient: coeff,
                        });
                        continue;
                    }
                    if v0 == 0.0 {
                        continue; // scattered factors vanish identically
                    }
                    for &o in &rest_outs {
                        coeff *= scatter_weight * fields.dipole_field(xs[o], omegas[o])?;
                    }
                    for &i in &rest_ins {
                        coeff *= fields.field_at_emitter(dirs[i], nus[i])?;
                    }
                    for (extra, g_coeff) in
                        excitation_green(resp, &rest_outs, &rest_ins, omegas, nus)?
                    {
                        let mut all = constraints.clone();
                        all.extend(extra);
                        terms.push(SmatrixTerm {
                            constraints: all,
                            coefficient: coeff * g_coeff,
                        });
                    }
                }
            }
        }
    }
    Ok(terms)
}
