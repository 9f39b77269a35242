//! Per-field classification at an odd split prime p: the class-side and
//! unit-side obstructions, p-rationality, the torsion order, and the
//! closed-form ambiguous class count.

use rayon::prelude::*;
use serde::Serialize;

use crate::arith;
use crate::classgroup::ClassGroup;
use crate::error::{Error, Result};
use crate::field::{self, QuadraticField, Splitting};
use crate::norms;
use crate::padic;
use crate::units;

/// Snapshot of the p-structure of a real quadratic field at an odd split
/// prime: orders, Fermat quotient valuations, obstruction flags, and the
/// derived p-power invariants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvariantReport {
    pub m: u64,
    #[serde(rename = "D")]
    pub d: u64,
    pub p: u64,
    /// Class number.
    pub h: u64,
    /// Order of the ideal class of a prime above p.
    pub h0: u64,
    pub vp_h: u32,
    pub vp_h0: u32,
    /// Fermat quotient valuation of the fundamental unit.
    pub delta_eps: u32,
    /// Fermat quotient valuation of the p-unit at its unit embedding.
    pub delta_eta: u32,
    /// The prime above p generates a proper subgroup of the p-classes.
    pub pb_classes: bool,
    /// Both unit Fermat quotients vanish mod p.
    pub pb_normique: bool,
    /// Neither obstruction holds.
    pub sufficient: bool,
    /// Split-case criterion for triviality of the logarithmic class group.
    pub log_trivial: bool,
    /// No p-classes and a nonvanishing unit Fermat quotient.
    pub p_rational: bool,
    /// p^(vp_h + delta_eps), the order of the p-torsion module.
    pub torsion_order: u64,
    /// p^delta_eps, the p-part of the normalized regulator.
    pub regulator_order: u64,
}

impl InvariantReport {
    pub fn csv_header() -> &'static str {
        "m,D,p,h,h0,vp_h,vp_h0,delta_eps,delta_eta,pb_classes,pb_normique,\
         sufficient,log_trivial,p_rational,torsion_order"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.m,
            self.d,
            self.p,
            self.h,
            self.h0,
            self.vp_h,
            self.vp_h0,
            self.delta_eps,
            self.delta_eta,
            self.pb_classes,
            self.pb_normique,
            self.sufficient,
            self.log_trivial,
            self.p_rational,
            self.torsion_order,
        )
    }

    pub fn json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Number of classes of the n-th tower layer fixed by the Galois action:
    /// p^vp_h from the classes factor times p^min(delta_eps, n) from the
    /// normic factor. Nondecreasing in n, stabilizing at n = delta_eps with
    /// value `torsion_order`.
    pub fn ambiguous_class_number(&self, n: u32) -> u64 {
        self.p
            .checked_pow(self.vp_h + self.delta_eps.min(n))
            .expect("p-power fits u64")
    }
}

fn validate_prime(field: &QuadraticField, p: u64) -> Result<()> {
    if p == 2 || !arith::is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not an odd prime")));
    }
    if field.splitting(p) != Splitting::Split {
        return Err(Error::NotSplit(p));
    }
    Ok(())
}

/// Classify `field` at the odd split prime `p`. P-adic precision starts at a
/// per-prime default and doubles while a quotient valuation is saturated, so
/// the reported deltas are exact.
pub fn analyze(field: &QuadraticField, p: u64) -> Result<InvariantReport> {
    validate_prime(field, p)?;
    let cg = ClassGroup::compute(field);
    analyze_in(&cg, p)
}

/// See [`analyze`]; reuses an already computed class group.
pub fn analyze_in(cg: &ClassGroup, p: u64) -> Result<InvariantReport> {
    let field = &cg.field;
    validate_prime(field, p)?;
    let pu = norms::p_unit_in(cg, p)?;
    debug_assert_eq!(cg.h % pu.h0, 0);
    let delta_eps = padic::fermat_quotient_auto(field, p, &cg.pc.unit_group.eps)?.delta;
    let delta_eta = padic::fermat_quotient_counit_auto(field, p, &pu)?.delta;
    let vp_h = cg.vp_h(p);
    let vp_h0 = arith::valuation(pu.h0, p);
    let pb_classes = vp_h != vp_h0;
    let pb_normique = delta_eps >= 1 && delta_eta >= 1;
    let sufficient = !pb_classes && !pb_normique;
    let p_rational = vp_h == 0 && delta_eps == 0;
    Ok(InvariantReport {
        m: field.m,
        d: field.d,
        p,
        h: cg.h,
        h0: pu.h0,
        vp_h,
        vp_h0,
        delta_eps,
        delta_eta,
        pb_classes,
        pb_normique,
        sufficient,
        log_trivial: sufficient,
        p_rational,
        torsion_order: p
            .checked_pow(vp_h + delta_eps)
            .expect("p-power fits u64"),
        regulator_order: p.checked_pow(delta_eps).expect("p-power fits u64"),
    })
}

/// Fixed classes of the n-th tower layer; see
/// [`InvariantReport::ambiguous_class_number`].
pub fn ambiguous_class_number(field: &QuadraticField, p: u64, n: u32) -> Result<u64> {
    Ok(analyze(field, p)?.ambiguous_class_number(n))
}

/// Pruning thresholds for [`scan`]. `zmax_exp` is the exponent g in the
/// delta filter (keep fields with delta_eps >= g); `vh_min` the minimum
/// p-valuation of the class number.
#[derive(Debug, Clone, Copy)]
pub struct ScanFilter {
    pub vh_min: u32,
    pub zmax_exp: u32,
    /// Skip non-split discriminants up front instead of attempting (and
    /// logging) a doomed analysis.
    pub require_split: bool,
}

impl Default for ScanFilter {
    fn default() -> Self {
        ScanFilter { vh_min: 0, zmax_exp: 0, require_split: true }
    }
}

/// Decide delta_eps >= g from the unit's embeddings at word precision; the
/// threshold needs only p^(g+1), never an escalation.
fn delta_eps_at_least(field: &QuadraticField, p: u64, g: u32) -> Result<bool> {
    let t = (g + 1).max(2);
    let pt = p.checked_pow(t).ok_or(Error::PrecisionExhausted(t))?;
    let emb = units::unit_embeddings_mod(field, p, t)?;
    Ok(emb.iter().all(|&u| arith::powmod(u, p - 1, pt) == 1))
}

fn scan_one(d: u64, p: u64, filter: &ScanFilter) -> Option<InvariantReport> {
    let field = QuadraticField::from_discriminant(d).ok()?;
    let split = field.splitting(p) == Splitting::Split;
    if !split && filter.require_split {
        return None;
    }
    if split && filter.zmax_exp > 0 {
        // cheap threshold first; on precision trouble fall through to the
        // exact path, which escalates properly
        if let Ok(false) = delta_eps_at_least(&field, p, filter.zmax_exp) {
            return None;
        }
    }
    let report = (|| -> Result<Option<InvariantReport>> {
        let cg = ClassGroup::compute(&field);
        if cg.vp_h(p) < filter.vh_min {
            return Ok(None);
        }
        let r = analyze_in(&cg, p)?;
        Ok((r.delta_eps >= filter.zmax_exp).then_some(r))
    })();
    match report {
        Ok(r) => r,
        Err(Error::NotSplit(_)) => None,
        Err(e) => {
            eprintln!("scan: skipping D={d}: {e}");
            None
        }
    }
}

/// Classify every fundamental discriminant in [lo, hi] passing the filter,
/// in ascending order. Discriminants are processed in parallel; per-field
/// errors are logged and skipped.
pub fn scan(lo: u64, hi: u64, p: u64, filter: &ScanFilter) -> Result<Vec<InvariantReport>> {
    if lo > hi {
        return Err(Error::InvalidArgument(format!("empty range {lo}..{hi}")));
    }
    if p == 2 || !arith::is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not an odd prime")));
    }
    let mut out: Vec<InvariantReport> = field::fundamental_discriminants(lo, hi)
        .par_iter()
        .filter_map(|&d| scan_one(d, p, filter))
        .collect();
    out.sort_by_key(|r| r.d);
    Ok(out)
}
