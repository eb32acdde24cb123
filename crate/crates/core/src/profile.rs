//! Association matrices and eigen-behavior profiles.
//!
//! Each user is summarized by a `t × n` matrix of online-time fractions (rows
//! are time slots, columns are locations), then by the leading right-singular
//! vectors of that matrix together with the share of squared singular-value
//! mass each one carries.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::trace_io::{LocationUniverse, SessionRecord, TimeWindow};

/// Singular values at or below this fraction of the largest are rank-deficient.
pub const RANK_EPS: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct AssociationMatrix {
    pub user: String,
    /// `t × n`, rows sum to 1 (or 0 for a fully offline slot).
    pub values: DMatrix<f64>,
    pub slot_length: i64,
    pub universe: u64,
}

impl AssociationMatrix {
    /// Wrap a raw matrix; used for hand-built inputs.
    pub fn from_values(user: impl Into<String>, values: DMatrix<f64>, universe: u64) -> Self {
        AssociationMatrix {
            user: user.into(),
            values,
            slot_length: crate::trace_io::DAY,
            universe,
        }
    }

    pub fn slots(&self) -> usize {
        self.values.nrows()
    }

    pub fn locations(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// CSV dump: header of location ids, then one row of fractions per slot.
    pub fn write_csv<W: Write>(&self, universe: &LocationUniverse, mut out: W) -> Result<()> {
        if universe.fingerprint() != self.universe {
            return Err(Error::Consistency(format!(
                "matrix for {} was built against a different location universe",
                self.user
            )));
        }
        writeln!(out, "{}", universe.ids().join(","))?;
        for row in self.values.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Entry `(i, j)` is the share of slot `i`'s online seconds spent at location `j`.
///
/// `sessions` must all belong to one node; parts outside `window` are ignored.
pub fn build_association_matrix(
    sessions: &[SessionRecord],
    window: &TimeWindow,
    universe: &LocationUniverse,
) -> Result<AssociationMatrix> {
    let slots = window.slot_count();
    let mut values = DMatrix::<f64>::zeros(slots, universe.len());
    let user = sessions
        .first()
        .map(|s| s.node_id.clone())
        .unwrap_or_default();

    for s in sessions {
        if s.node_id != user {
            return Err(Error::Consistency(format!(
                "sessions of {} and {} passed as one user",
                user, s.node_id
            )));
        }
        let col = universe.position(&s.location_id).ok_or_else(|| {
            Error::Consistency(format!("location {} is not in the universe", s.location_id))
        })?;
        let start = s.start_time.max(window.start);
        let end = s.end_time.min(window.end());
        if end <= start {
            continue;
        }
        let first = ((start - window.start) / window.slot_length) as usize;
        let last = ((end - 1 - window.start) / window.slot_length) as usize;
        for slot in first..=last {
            let lo = window.start + slot as i64 * window.slot_length;
            let hi = lo + window.slot_length;
            let secs = end.min(hi) - start.max(lo);
            values[(slot, col)] += secs as f64;
        }
    }

    for mut row in values.row_iter_mut() {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row /= total;
        }
    }

    Ok(AssociationMatrix {
        user,
        values,
        slot_length: window.slot_length,
        universe: universe.fingerprint(),
    })
}

/// Thin SVD truncated at numerical rank.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub user: String,
    pub universe: u64,
    /// `t × r`.
    pub u: DMatrix<f64>,
    /// Descending, length `r`.
    pub singular_values: Vec<f64>,
    /// `n × r`.
    pub v: DMatrix<f64>,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let s =
            DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.singular_values));
        &self.u * s * self.v.transpose()
    }
}

pub fn compute_svd(a: &AssociationMatrix) -> Result<SvdResult> {
    let mut svd = svd_of(&a.values).ok_or_else(|| Error::NoActivity(a.user.clone()))?;
    svd.user = a.user.clone();
    svd.universe = a.universe;
    Ok(svd)
}

/// SVD of an arbitrary matrix; `None` when it is all zeros.
///
/// All-zero columns are dropped before factorizing and restored as zero rows
/// of `V`. Each singular vector pair is oriented so the largest-magnitude
/// entry of the `V` column is positive.
pub fn svd_of(a: &DMatrix<f64>) -> Option<SvdResult> {
    let (t, n) = a.shape();
    let live: Vec<usize> = (0..n)
        .filter(|&j| a.column(j).iter().any(|&x| x != 0.0))
        .collect();
    if live.is_empty() || t == 0 {
        return None;
    }
    let compact = a.select_columns(&live);
    let svd = compact.svd(true, true);
    let u_full = svd.u.expect("requested U");
    let vt_full = svd.v_t.expect("requested V^T");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .total_cmp(&svd.singular_values[i])
            .then(i.cmp(&j))
    });
    let top = svd.singular_values[order[0]];
    if top <= 0.0 {
        return None;
    }
    let order: Vec<usize> = order
        .into_iter()
        .filter(|&i| svd.singular_values[i] > RANK_EPS * top)
        .collect();
    let r = order.len();

    let mut u = DMatrix::zeros(t, r);
    let mut v = DMatrix::zeros(n, r);
    let mut s = Vec::with_capacity(r);
    for (c, &i) in order.iter().enumerate() {
        let vcol = vt_full.row(i);
        let mut pivot = 0;
        for k in 1..vcol.len() {
            if vcol[k].abs() > vcol[pivot].abs() {
                pivot = k;
            }
        }
        let sign = if vcol[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (k, &j) in live.iter().enumerate() {
            v[(j, c)] = sign * vcol[k];
        }
        u.set_column(c, &(u_full.column(i) * sign));
        s.push(svd.singular_values[i]);
    }

    Some(SvdResult {
        user: String::new(),
        universe: 0,
        u,
        singular_values: s,
        v,
    })
}

/// Share of total squared singular-value mass held by the first `k` values.
pub fn cumulative_power(singular_values: &[f64], k: usize) -> Result<f64> {
    let r = singular_values.len();
    if k == 0 || k > r {
        return Err(Error::arg(format!("component count {k} outside 1..={r}")));
    }
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let kept: f64 = singular_values[..k].iter().map(|s| s * s).sum();
    Ok(kept / total)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct ProfileOptions {
    pub power_threshold: f64,
    pub max_components: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            power_threshold: 0.9,
            max_components: 7,
        }
    }
}

impl ProfileOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.power_threshold > 0.0 && self.power_threshold <= 1.0) {
            return Err(Error::arg(format!(
                "power threshold {} outside (0, 1]",
                self.power_threshold
            )));
        }
        if self.max_components == 0 {
            return Err(Error::arg("max_components must be positive"));
        }
        Ok(())
    }
}

/// Leading eigen-behaviors of one user.
///
/// Vectors are stored on `support`, the sorted set of locations the user was
/// ever seen at; every other coordinate is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct BehavioralProfile {
    pub user: String,
    pub universe: u64,
    pub dimension: usize,
    pub support: Vec<u32>,
    /// `k` unit vectors, each of length `support.len()`.
    pub vectors: Vec<Vec<f64>>,
    /// Per-component power fractions, not renormalized after truncation.
    pub weights: Vec<f64>,
    pub captured_power: f64,
}

impl BehavioralProfile {
    /// Build from dense length-`dimension` vectors.
    pub fn from_dense(
        user: impl Into<String>,
        universe: u64,
        vectors: &[Vec<f64>],
        weights: Vec<f64>,
    ) -> Result<Self> {
        let dimension = vectors.first().map_or(0, Vec::len);
        if vectors.len() != weights.len() || vectors.iter().any(|v| v.len() != dimension) {
            return Err(Error::arg("profile vectors and weights disagree in shape"));
        }
        let support: Vec<u32> = (0..dimension)
            .filter(|&j| vectors.iter().any(|v| v[j] != 0.0))
            .map(|j| j as u32)
            .collect();
        let compact = vectors
            .iter()
            .map(|v| support.iter().map(|&j| v[j as usize]).collect())
            .collect();
        let captured_power = weights.iter().sum();
        Ok(BehavioralProfile {
            user: user.into(),
            universe,
            dimension,
            support,
            vectors: compact,
            weights,
            captured_power,
        })
    }

    pub fn components(&self) -> usize {
        self.vectors.len()
    }

    pub fn dense_vector(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        for (&j, &x) in self.support.iter().zip(&self.vectors[i]) {
            out[j as usize] = x;
        }
        out
    }

    pub fn to_dump(&self) -> ProfileDump {
        ProfileDump {
            user: self.user.clone(),
            k: self.components(),
            weights: self.weights.clone(),
            vectors: (0..self.components())
                .map(|i| self.dense_vector(i))
                .collect(),
            captured_power: self.captured_power,
        }
    }
}

/// JSON shape of a profile dump.
#[derive(Clone, Debug, Serialize)]
pub struct ProfileDump {
    pub user: String,
    pub k: usize,
    pub weights: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub captured_power: f64,
}

pub fn profile_from_svd(svd: &SvdResult, opts: &ProfileOptions) -> Result<BehavioralProfile> {
    opts.validate()?;
    let r = svd.rank();
    if r == 0 {
        return Err(Error::NoActivity(svd.user.clone()));
    }
    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let weights_all: Vec<f64> = svd.singular_values.iter().map(|s| s * s / total).collect();

    let mut k = r;
    for kk in 1..=r {
        if cumulative_power(&svd.singular_values, kk)? + 1e-12 >= opts.power_threshold {
            k = kk;
            break;
        }
    }
    let k = k.min(opts.max_components).min(r);

    let n = svd.v.nrows();
    let support: Vec<u32> = (0..n)
        .filter(|&j| (0..k).any(|c| svd.v[(j, c)] != 0.0))
        .map(|j| j as u32)
        .collect();
    let vectors = (0..k)
        .map(|c| support.iter().map(|&j| svd.v[(j as usize, c)]).collect())
        .collect();
    let weights = weights_all[..k].to_vec();
    let captured_power = weights.iter().sum();
    Ok(BehavioralProfile {
        user: svd.user.clone(),
        universe: svd.universe,
        dimension: n,
        support,
        vectors,
        weights,
        captured_power,
    })
}

/// Matrix → SVD → profile in one step.
pub fn build_profile(a: &AssociationMatrix, opts: &ProfileOptions) -> Result<BehavioralProfile> {
    profile_from_svd(&compute_svd(a)?, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace_io::LocationUniverse;

    fn five_location_days() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            5,
            5,
            &[
                0.0, 0.0, 0.5, 0.3, 0.2, //
                0.2, 0.3, 0.4, 0.1, 0.0, //
                0.0, 0.0, 0.0, 0.6, 0.4, //
                0.2, 0.3, 0.1, 0.2, 0.2, //
                0.1, 0.0, 0.0, 0.0, 0.9,
            ],
        )
    }

    fn universe(n: usize) -> LocationUniverse {
        LocationUniverse::from_ids((0..n).map(|i| format!("Loc-{}", i + 1)))
    }

    #[test]
    fn one_session_fills_its_slot() {
        let u = universe(3);
        let w = TimeWindow::new(0, 500, 100).unwrap();
        let s = [SessionRecord::new("a", "Loc-2", 300, 400)];
        let m = build_association_matrix(&s, &w, &u).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                let expect = if i == 3 && j == 1 { 1.0 } else { 0.0 };
                assert_eq!(m.values[(i, j)], expect);
            }
        }
    }

    #[test]
    fn equal_split_within_slot() {
        let u = universe(2);
        let w = TimeWindow::days(0, 1).unwrap();
        let s = [
            SessionRecord::new("a", "Loc-1", 0, 7200),
            SessionRecord::new("a", "Loc-2", 7200, 14400),
        ];
        let m = build_association_matrix(&s, &w, &u).unwrap();
        assert_eq!(
            m.values.row(0).iter().copied().collect::<Vec<_>>(),
            [0.5, 0.5]
        );
    }

    #[test]
    fn session_spanning_slots_is_split() {
        let u = universe(2);
        let w = TimeWindow::new(0, 300, 100).unwrap();
        let s = [
            SessionRecord::new("a", "Loc-1", 50, 250),
            SessionRecord::new("a", "Loc-2", 250, 300),
        ];
        let m = build_association_matrix(&s, &w, &u).unwrap();
        assert_eq!(m.values[(0, 0)], 1.0);
        assert_eq!(m.values[(1, 0)], 1.0);
        assert_eq!(m.values[(2, 0)], 0.5);
        assert_eq!(m.values[(2, 1)], 0.5);
    }

    #[test]
    fn unknown_location_is_a_consistency_error() {
        let u = universe(1);
        let w = TimeWindow::days(0, 1).unwrap();
        let s = [SessionRecord::new("a", "elsewhere", 0, 10)];
        assert!(matches!(
            build_association_matrix(&s, &w, &u),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn five_location_days_rows_are_stochastic() {
        for row in five_location_days().row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_one_matrix() {
        let mut a = DMatrix::zeros(4, 3);
        for i in 0..4 {
            a[(i, 2)] = 1.0;
        }
        let svd = svd_of(&a).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!((svd.v[(2, 0)] - 1.0).abs() < 1e-12);
        assert!(svd.v[(0, 0)].abs() < 1e-12);
        let p = profile_from_svd(&svd, &ProfileOptions::default()).unwrap();
        assert_eq!(p.weights, [1.0]);
        assert_eq!(p.captured_power, 1.0);
        assert_eq!(p.support, [2]);
    }

    #[test]
    fn identity_singular_values() {
        let svd = svd_of(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(svd.rank(), 2);
        for s in &svd.singular_values {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix_has_no_activity() {
        let a = AssociationMatrix::from_values("z", DMatrix::zeros(3, 3), 0);
        assert!(matches!(compute_svd(&a), Err(Error::NoActivity(_))));
    }

    #[test]
    fn five_location_days_reconstructs() {
        let a = five_location_days();
        let svd = svd_of(&a).unwrap();
        let resid = (svd.reconstruct() - &a).norm() / a.norm();
        assert!(resid <= 1e-8, "residual {resid}");
        assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let utu = svd.u.transpose() * &svd.u;
        let vtv = svd.v.transpose() * &svd.v;
        let id = DMatrix::<f64>::identity(svd.rank(), svd.rank());
        assert!((utu - &id).amax() < 1e-8);
        assert!((vtv - &id).amax() < 1e-8);
    }

    #[test]
    fn cumulative_power_arithmetic() {
        assert_eq!(cumulative_power(&[2.0, 1.0], 1).unwrap(), 0.8);
        assert_eq!(cumulative_power(&[2.0, 1.0], 2).unwrap(), 1.0);
        assert!(cumulative_power(&[2.0, 1.0], 0).is_err());
        assert!(cumulative_power(&[2.0, 1.0], 3).is_err());
    }

    #[test]
    fn truncation_keeps_unnormalized_weights() {
        let svd = SvdResult {
            user: "x".into(),
            universe: 0,
            u: DMatrix::identity(3, 3),
            singular_values: vec![2.0, 1.0, 1.0],
            v: DMatrix::identity(3, 3),
        };
        let p = profile_from_svd(&svd, &ProfileOptions::default()).unwrap();
        assert_eq!(p.components(), 3);
        let expect = [4.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for (w, e) in p.weights.iter().zip(expect) {
            assert!((w - e).abs() < 1e-15);
        }

        let capped = profile_from_svd(
            &svd,
            &ProfileOptions {
                power_threshold: 0.9,
                max_components: 2,
            },
        )
        .unwrap();
        assert_eq!(capped.components(), 2);
        assert!((capped.captured_power - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn bad_options_rejected() {
        for opts in [
            ProfileOptions {
                power_threshold: 0.0,
                max_components: 3,
            },
            ProfileOptions {
                power_threshold: 1.5,
                max_components: 3,
            },
            ProfileOptions {
                power_threshold: 0.9,
                max_components: 0,
            },
        ] {
            assert!(opts.validate().is_err());
        }
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let u = universe(5);
        let m = AssociationMatrix::from_values("a", five_location_days(), u.fingerprint());
        let mut buf = Vec::new();
        m.write_csv(&u, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "Loc-1,Loc-2,Loc-3,Loc-4,Loc-5");
        assert_eq!(lines[5], "0.1,0,0,0,0.9");
    }
}
