use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rbm::{RbmParams, Temperature};
use crate::rng::SeedSequence;
use crate::scalar::Real;
use crate::state::SpinBatch;

/// `H(s) = Σ_i h_i s_i + Σ_{i<j} J_ij s_i s_j` over spins `s ∈ {-1, +1}^N`,
/// plus a constant `offset` carried alongside.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingModel<F> {
    fields: Vec<F>,
    couplings: BTreeMap<(usize, usize), F>,
    offset: F,
}

impl<F: Real> IsingModel<F> {
    pub fn new(fields: Vec<F>, couplings: BTreeMap<(usize, usize), F>, offset: F) -> Result<Self> {
        let n = fields.len();
        if n == 0 {
            return Err(Error::Empty("Ising model"));
        }
        for (&(i, j), &v) in &couplings {
            if i >= j || j >= n {
                return Err(Error::InvalidParameter(format!("coupling key ({i}, {j}) must satisfy i < j < {n}")));
            }
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("coupling ({i}, {j}) is not finite")));
            }
        }
        if !fields.iter().all(|x| x.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidParameter("Ising fields and offset must be finite".into()));
        }
        Ok(Self {
            fields,
            couplings,
            offset,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[F] {
        &self.fields
    }

    pub fn couplings(&self) -> &BTreeMap<(usize, usize), F> {
        &self.couplings
    }

    pub fn offset(&self) -> F {
        self.offset
    }

    /// `H(s)`, without the offset.
    pub fn energy(&self, spins: &[i8]) -> Result<F> {
        if spins.len() != self.n_spins() {
            return Err(Error::DimensionMismatch {
                expected: self.n_spins(),
                actual: spins.len(),
            });
        }
        let s = |k: usize| F::of(spins[k] as f64);
        let linear: F = self.fields.iter().enumerate().map(|(i, &h)| h * s(i)).sum();
        let pair: F = self.couplings.iter().map(|(&(i, j), &c)| c * s(i) * s(j)).sum();
        Ok(linear + pair)
    }

    /// Symmetric adjacency in compressed-row form: `(row starts, neighbours)`.
    pub(crate) fn adjacency(&self) -> (Vec<usize>, Vec<(usize, F)>) {
        let n = self.n_spins();
        let mut lists: Vec<Vec<(usize, F)>> = vec![Vec::new(); n];
        for (&(i, j), &c) in &self.couplings {
            lists[i].push((j, c));
            lists[j].push((i, c));
        }
        let mut starts = Vec::with_capacity(n + 1);
        let mut flat = Vec::with_capacity(2 * self.couplings.len());
        starts.push(0);
        for l in lists {
            flat.extend(l);
            starts.push(flat.len());
        }
        (starts, flat)
    }
}

/// Spin vector `s = 2x − 1` for the joint state `x = (v, h)`.
pub fn state_to_spins(v: &[u8], h: &[u8]) -> Vec<i8> {
    v.iter().chain(h).map(|&b| 2 * b as i8 - 1).collect()
}

/// Ising image of the RBM at temperature `T`.
///
/// Spins `0..n` are the visible units and `n..n+m` the hidden units, with
/// `v_i = (s_i + 1)/2`. For every state `H(s) + offset = E(v, h)/T`; there is
/// no further rescaling of the coefficients.
pub fn rbm_to_ising<F: Real>(params: &RbmParams<F>, t: Temperature<F>) -> IsingModel<F> {
    let (n, m) = (params.n_visible(), params.n_hidden());
    let beta = t.beta();
    let half = F::of(0.5);
    let quarter = F::of(0.25);
    let mut fields = vec![F::zero(); n + m];
    let mut couplings = BTreeMap::new();
    let mut offset = F::zero();
    for (i, &a) in params.visible_bias().iter().enumerate() {
        fields[i] = fields[i] - half * a * beta;
        offset = offset - half * a * beta;
    }
    for (j, &b) in params.hidden_bias().iter().enumerate() {
        fields[n + j] = fields[n + j] - half * b * beta;
        offset = offset - half * b * beta;
    }
    for i in 0..n {
        for j in 0..m {
            let q = quarter * params.weight(i, j) * beta;
            fields[i] = fields[i] - q;
            fields[n + j] = fields[n + j] - q;
            offset = offset - q;
            couplings.insert((i, n + j), -q);
        }
    }
    IsingModel {
        fields,
        couplings,
        offset,
    }
}

/// Device coefficient bounds: `|h_i| ≤ h_max`, `|J_ij| ≤ j_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeLimits {
    pub h_max: f64,
    pub j_max: f64,
}

impl RangeLimits {
    pub fn new(h_max: f64, j_max: f64) -> Result<Self> {
        if h_max > 0.0 && j_max > 0.0 {
            Ok(Self { h_max, j_max })
        } else {
            Err(Error::InvalidParameter("range limits must be positive".into()))
        }
    }
}

impl Default for RangeLimits {
    fn default() -> Self {
        Self { h_max: 4.0, j_max: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RangeViolation {
    Field { index: usize, value: f64 },
    Coupling { i: usize, j: usize, value: f64 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RangeReport {
    pub violations: Vec<RangeViolation>,
}

impl RangeReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

impl fmt::Display for RangeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fields = self
            .violations
            .iter()
            .filter(|v| matches!(v, RangeViolation::Field { .. }))
            .count();
        write!(
            f,
            "{} out-of-range coefficients ({} fields, {} couplings)",
            self.len(),
            fields,
            self.len() - fields
        )
    }
}

/// Lists every coefficient outside the limits. The model is left untouched.
pub fn check_ranges<F: Real>(ising: &IsingModel<F>, limits: RangeLimits) -> RangeReport {
    let mut violations = Vec::new();
    for (index, &h) in ising.fields.iter().enumerate() {
        let value = h.as_f64();
        if value.abs() > limits.h_max {
            violations.push(RangeViolation::Field { index, value });
        }
    }
    for (&(i, j), &c) in &ising.couplings {
        let value = c.as_f64();
        if value.abs() > limits.j_max {
            violations.push(RangeViolation::Coupling { i, j, value });
        }
    }
    RangeReport { violations }
}

/// Spin-reversal gauge: a sign per spin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaugeVector(Vec<i8>);

impl GaugeVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().all(|&g| g == 1 || g == -1) {
            Ok(Self(signs))
        } else {
            Err(Error::InvalidParameter("gauge entries must be ±1".into()))
        }
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn random(n: usize, seeds: SeedSequence) -> Self {
        let mut rng = seeds.rng();
        Self((0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `h_i → g_i h_i`, `J_ij → g_i g_j J_ij`, so that `H_g(g∘s) = H(s)`.
pub fn apply_gauge<F: Real>(ising: &IsingModel<F>, g: &GaugeVector) -> Result<IsingModel<F>> {
    if g.len() != ising.n_spins() {
        return Err(Error::DimensionMismatch {
            expected: ising.n_spins(),
            actual: g.len(),
        });
    }
    let sign = |k: usize| F::of(g.0[k] as f64);
    Ok(IsingModel {
        fields: ising.fields.iter().enumerate().map(|(i, &h)| sign(i) * h).collect(),
        couplings: ising
            .couplings
            .iter()
            .map(|(&(i, j), &c)| ((i, j), sign(i) * sign(j) * c))
            .collect(),
        offset: ising.offset,
    })
}

/// Maps samples of the gauged model back to the original: `s_i → g_i s_i`.
pub fn ungauge_samples(spins: &SpinBatch, g: &GaugeVector) -> Result<SpinBatch> {
    if g.len() != spins.width() {
        return Err(Error::DimensionMismatch {
            expected: spins.width(),
            actual: g.len(),
        });
    }
    let data = spins
        .rows()
        .flat_map(|row| row.iter().zip(&g.0).map(|(&s, &gi)| s * gi))
        .collect();
    Ok(SpinBatch::from_parts(spins.width(), data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::index_to_bits;

    fn spins_of(code: usize, n: usize) -> Vec<i8> {
        index_to_bits(code, n).into_iter().map(|b| 2 * b as i8 - 1).collect()
    }

    #[test]
    fn zero_model_maps_to_zero_ising() {
        let p = RbmParams::<f64>::zeros(3, 2).unwrap();
        let ising = rbm_to_ising(&p, Temperature::new(8.0).unwrap());
        assert!(ising.fields().iter().all(|&h| h == 0.0));
        assert!(ising.couplings().values().all(|&j| j == 0.0));
        assert_eq!(ising.offset(), 0.0);
    }

    #[test]
    fn bijection_reproduces_scaled_energy() {
        let p = RbmParams::<f64>::random_full(3, 2, 1.0, SeedSequence::new(31)).unwrap();
        let t = 8.0;
        let ising = rbm_to_ising(&p, Temperature::new(t).unwrap());
        let mut worst: f64 = 0.0;
        for vc in 0..8 {
            for hc in 0..4 {
                let (v, h) = (index_to_bits(vc, 3), index_to_bits(hc, 2));
                let lhs = ising.energy(&state_to_spins(&v, &h)).unwrap() + ising.offset();
                worst = worst.max((lhs - p.energy(&v, &h).unwrap() / t).abs());
            }
        }
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn range_check_reports_without_clamping() {
        let zero = IsingModel::new(vec![0.0f64; 3], BTreeMap::new(), 0.0).unwrap();
        assert!(check_ranges(&zero, RangeLimits::default()).is_empty());
        let mut c = BTreeMap::new();
        c.insert((0, 2), 2.5);
        c.insert((0, 1), 0.5);
        let model = IsingModel::new(vec![0.0f64, 5.0, -1.0], c, 0.0).unwrap();
        let report = check_ranges(&model, RangeLimits::new(10.0, 1.0).unwrap());
        assert_eq!(
            report.violations,
            vec![RangeViolation::Coupling { i: 0, j: 2, value: 2.5 }]
        );
        assert_eq!(check_ranges(&model, RangeLimits::default()).len(), 2);
        assert_eq!(model.couplings()[&(0, 2)], 2.5);
    }

    #[test]
    fn gauge_identity_and_involution() {
        let p = RbmParams::<f64>::random_full(4, 3, 1.0, SeedSequence::new(2)).unwrap();
        let ising = rbm_to_ising(&p, Temperature::unit());
        assert_eq!(apply_gauge(&ising, &GaugeVector::identity(7)).unwrap(), ising);
        let g = GaugeVector::random(7, SeedSequence::new(9));
        let twice = apply_gauge(&apply_gauge(&ising, &g).unwrap(), &g).unwrap();
        assert_eq!(twice, ising);
        let batch = SpinBatch::new(7, (0..14).map(|k| if k % 3 == 0 { 1 } else { -1 }).collect()).unwrap();
        let back = ungauge_samples(&ungauge_samples(&batch, &g).unwrap(), &g).unwrap();
        assert_eq!(back, batch);
        assert!(GaugeVector::new(vec![1, 0]).is_err());
        assert!(apply_gauge(&ising, &GaugeVector::identity(3)).is_err());
    }

    #[test]
    fn gauge_preserves_energy_on_all_states() {
        let n = 10;
        let mut rng = SeedSequence::new(4).rng();
        let fields: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut couplings = BTreeMap::new();
        for i in 0..n {
            for j in i + 1..n {
                couplings.insert((i, j), rng.gen_range(-1.0..1.0));
            }
        }
        let model = IsingModel::new(fields, couplings, 0.3).unwrap();
        let g = GaugeVector::random(n, SeedSequence::new(5));
        let gauged = apply_gauge(&model, &g).unwrap();
        for code in 0..1 << n {
            let s = spins_of(code, n);
            let gs: Vec<i8> = s.iter().zip(g.signs()).map(|(&a, &b)| a * b).collect();
            assert_eq!(gauged.energy(&gs).unwrap(), model.energy(&s).unwrap());
        }
    }

    #[test]
    fn rejects_bad_coupling_keys() {
        let mut c = BTreeMap::new();
        c.insert((2, 1), 1.0f64);
        assert!(IsingModel::new(vec![0.0; 3], c, 0.0).is_err());
        let mut c = BTreeMap::new();
        c.insert((1, 3), 1.0f64);
        assert!(IsingModel::new(vec![0.0; 3], c, 0.0).is_err());
    }
}
