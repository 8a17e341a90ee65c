//! Certificate verification: re-evaluate every defining condition of the
//! claimed property directly through the probe, independently of the search
//! that produced the witness.

use thiserror::Error;

use super::probe::Probe;
use super::{PropertyCertificate, PropertyKind};
use crate::eval::{EvalCache, EvalError};
use crate::structure::FiniteStructure;
use crate::table::all_tuples;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("certificate names structure `{cert}` but was checked against `{actual}`")]
    StructureMismatch { cert: String, actual: String },
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn check_tuples(
    what: &str,
    tuples: &[Vec<usize>],
    expected_len: usize,
    arity: usize,
    size: usize,
) -> Result<(), VerifyError> {
    if tuples.len() != expected_len {
        return Err(VerifyError::Malformed(format!(
            "{what}: expected {expected_len} tuples, got {}",
            tuples.len()
        )));
    }
    for t in tuples {
        if t.len() != arity {
            return Err(VerifyError::Malformed(format!(
                "{what}: tuple arity {} where {arity} expected",
                t.len()
            )));
        }
        if t.iter().any(|&e| e >= size) {
            return Err(VerifyError::Malformed(format!(
                "{what}: entry out of range for universe size {size}"
            )));
        }
    }
    Ok(())
}

/// Re-check all defining conditions of `cert` for `probe` on `m`.
///
/// Returns `Ok(false)` when some biconditional, inclusion, or path condition
/// fails; errors are reserved for malformed payloads.
pub fn verify_witness<P: Probe + ?Sized>(
    cert: &PropertyCertificate,
    probe: &P,
    m: &FiniteStructure,
) -> Result<bool, VerifyError> {
    if cert.structure != m.name() {
        return Err(VerifyError::StructureMismatch {
            cert: cert.structure.clone(),
            actual: m.name().to_string(),
        });
    }
    let n = cert.n;
    if n == 0 {
        return Err(VerifyError::Malformed("n must be >= 1".into()));
    }
    let (xa, ya) = (probe.x_arity(), probe.y_arity());
    let size = m.size();
    let mut cache = EvalCache::new();
    let mut holds = |xt: &[usize], yt: &[usize]| -> Result<bool, VerifyError> {
        Ok(probe.eval_pair(m, xt, yt, &mut cache)?)
    };

    match cert.kind {
        PropertyKind::Op => {
            check_tuples("a", &cert.a, n, xa, size)?;
            check_tuples("b", &cert.b, n, ya, size)?;
            for i in 1..=n {
                for j in 1..=n {
                    if holds(&cert.a[i - 1], &cert.b[j - 1])? != (i < j) {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        PropertyKind::Sop => {
            if !cert.a.is_empty() {
                return Err(VerifyError::Malformed("sOP payload has no a-part".into()));
            }
            check_tuples("b", &cert.b, n, ya, size)?;
            // Strict inclusions checked by a full sweep over M^x.
            let x_tuples = all_tuples(size, xa);
            for i in 0..n - 1 {
                let mut strict = false;
                for xt in &x_tuples {
                    let lo = holds(xt, &cert.b[i])?;
                    let hi = holds(xt, &cert.b[i + 1])?;
                    if lo && !hi {
                        return Ok(false);
                    }
                    if hi && !lo {
                        strict = true;
                    }
                }
                if !strict {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        PropertyKind::Ip => {
            let param_count = 1usize
                .checked_shl(n as u32)
                .ok_or_else(|| VerifyError::Malformed("n too large".into()))?;
            check_tuples("a", &cert.a, n, xa, size)?;
            check_tuples("b", &cert.b, param_count, ya, size)?;
            for i in 1..=n {
                for j in 1..=param_count {
                    let member = (j - 1) >> (i - 1) & 1 == 1;
                    if holds(&cert.a[i - 1], &cert.b[j - 1])? != member {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        PropertyKind::Tp2 => {
            let f_count = n
                .checked_pow(n as u32)
                .ok_or_else(|| VerifyError::Malformed("n too large".into()))?;
            check_tuples("a", &cert.a, f_count, xa, size)?;
            check_tuples("b", &cert.b, n * n, ya, size)?;
            // Row inconsistency: within a row, no x-tuple satisfies two
            // distinct columns simultaneously.
            let x_tuples = all_tuples(size, xa);
            for i in 1..=n {
                for j in 1..=n {
                    for k in (j + 1)..=n {
                        for xt in &x_tuples {
                            if holds(xt, cert.tp2_entry(i, j))? && holds(xt, cert.tp2_entry(i, k))?
                            {
                                return Ok(false);
                            }
                        }
                    }
                }
            }
            // Path satisfiability: the recorded a_f realizes every path.
            let mut f = vec![1usize; n];
            loop {
                let rank = PropertyCertificate::tp2_f_rank(n, &f);
                for i in 1..=n {
                    if !holds(&cert.a[rank], cert.tp2_entry(i, f[i - 1]))? {
                        return Ok(false);
                    }
                }
                // next function in row-major order
                let mut idx = n;
                loop {
                    if idx == 0 {
                        return Ok(true);
                    }
                    idx -= 1;
                    f[idx] += 1;
                    if f[idx] <= n {
                        break;
                    }
                    f[idx] = 1;
                }
            }
        }
    }
}
