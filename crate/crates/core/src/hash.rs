//! Random linear-map ensembles and exact measurement of their hash parameters.

use std::collections::HashSet;

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{input, resource, Error, Result};
use crate::field::{Field, LinearMap, StorageKind, ENUMERATION_BITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnsembleKind {
    /// every entry i.i.d. uniform over the field
    Uniform,
    /// every column has a fixed number of nonzeros
    Sparse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SparseSampler {
    /// exactly `d` nonzeros at distinct uniform rows
    #[default]
    ExactDistinct,
    /// `d` uniform (row, nonzero value) draws added together, so at most `d` nonzeros
    WithReplacement,
}

/// Distribution of a random `rows x cols` matrix over GF(q).
#[derive(Clone, Debug, PartialEq)]
pub struct HashEnsembleSpec {
    pub kind: EnsembleKind,
    pub field: Field,
    pub rows: usize,
    pub cols: usize,
    /// nonzeros per column for the sparse kind; `None` picks the default
    pub column_degree: Option<usize>,
    pub sampler: SparseSampler,
    /// seed for Monte Carlo estimates when the ensemble is too large to enumerate
    pub seed: u64,
}

impl HashEnsembleSpec {
    pub fn uniform(field: Field, rows: usize, cols: usize) -> Self {
        HashEnsembleSpec {
            kind: EnsembleKind::Uniform,
            field,
            rows,
            cols,
            column_degree: None,
            sampler: SparseSampler::ExactDistinct,
            seed: 0,
        }
    }

    pub fn sparse(field: Field, rows: usize, cols: usize, column_degree: Option<usize>) -> Self {
        HashEnsembleSpec { kind: EnsembleKind::Sparse, column_degree, ..Self::uniform(field, rows, cols) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows > self.cols {
            return input(format!("ensemble with {} rows exceeds {} columns", self.rows, self.cols));
        }
        if self.kind == EnsembleKind::Sparse {
            if let Some(d) = self.column_degree {
                if d == 0 {
                    return input("column degree must be at least 1");
                }
                if d > self.rows {
                    return input(format!("column degree {d} exceeds {} rows", self.rows));
                }
            }
        }
        Ok(())
    }

    /// Nonzeros per column: the configured value, else `max(1, ceil(log2 n))`
    /// capped at the row count.
    pub fn degree(&self) -> usize {
        match self.column_degree {
            Some(d) => d,
            None => {
                let d = (self.cols.max(1) as f64).log2().ceil().max(1.0) as usize;
                d.min(self.rows)
            }
        }
    }

    /// Possible contents of one column, each equally likely.
    fn column_options(&self) -> Result<Vec<Vec<u16>>> {
        let f = self.field;
        let m = self.rows;
        match self.kind {
            EnsembleKind::Uniform => Ok(f.all_vectors(m)?.collect()),
            EnsembleKind::Sparse => {
                let d = self.degree();
                let q = f.order() as u64;
                let opts_bits = match self.sampler {
                    SparseSampler::ExactDistinct => {
                        log2_binomial(m, d) + d as f64 * ((q - 1) as f64).log2()
                    }
                    SparseSampler::WithReplacement => d as f64 * ((m as u64 * (q - 1)) as f64).log2(),
                };
                if opts_bits > ENUMERATION_BITS {
                    return resource("sparse column alphabet too large to enumerate");
                }
                let mut out = Vec::new();
                match self.sampler {
                    SparseSampler::ExactDistinct => {
                        for rows in combinations(m, d) {
                            for code in 0..(q - 1).pow(d as u32) {
                                let mut col = vec![0u16; m];
                                let mut c = code;
                                for r in &rows {
                                    col[*r] = (c % (q - 1) + 1) as u16;
                                    c /= q - 1;
                                }
                                out.push(col);
                            }
                        }
                    }
                    SparseSampler::WithReplacement => {
                        let per = m as u64 * (q - 1);
                        for code in 0..per.pow(d as u32) {
                            let mut col = vec![0u16; m];
                            let mut c = code;
                            for _ in 0..d {
                                let draw = c % per;
                                c /= per;
                                let (r, v) = ((draw / (q - 1)) as usize, (draw % (q - 1) + 1) as u16);
                                col[r] = f.add(col[r], v);
                            }
                            out.push(col);
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Draws one map.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LinearMap> {
        self.validate()?;
        let f = self.field;
        let (m, n) = (self.rows, self.cols);
        let q = f.order();
        let mut data = vec![0u16; m * n];
        match self.kind {
            EnsembleKind::Uniform => {
                for x in data.iter_mut() {
                    *x = rng.gen_range(0..q);
                }
                LinearMap::from_data(f, m, n, data, StorageKind::Dense)
            }
            EnsembleKind::Sparse => {
                let d = self.degree();
                for c in 0..n {
                    match self.sampler {
                        SparseSampler::ExactDistinct => {
                            for r in sample(rng, m, d).into_iter() {
                                data[r * n + c] = rng.gen_range(1..q);
                            }
                        }
                        SparseSampler::WithReplacement => {
                            for _ in 0..d {
                                let r = rng.gen_range(0..m);
                                let v = rng.gen_range(1..q);
                                data[r * n + c] = f.add(data[r * n + c], v);
                            }
                        }
                    }
                }
                LinearMap::from_data(f, m, n, data, StorageKind::Sparse)
            }
        }
    }

    /// Every map of the ensemble with equal weight (duplicates kept, so the
    /// list is the exact distribution). Guarded on its length.
    pub fn enumerate(&self) -> Result<Vec<LinearMap>> {
        self.validate()?;
        let opts = self.column_options()?;
        let bits = self.cols as f64 * (opts.len() as f64).log2();
        if bits > ENUMERATION_BITS + 1e-9 {
            return resource(format!(
                "ensemble has {bits:.1} bits of randomness, above the {ENUMERATION_BITS} bit budget"
            ));
        }
        let total = (opts.len() as u64).pow(self.cols as u32);
        let kind = match self.kind {
            EnsembleKind::Uniform => StorageKind::Dense,
            EnsembleKind::Sparse => StorageKind::Sparse,
        };
        let (m, n) = (self.rows, self.cols);
        let mut maps = Vec::with_capacity(total as usize);
        for idx in 0..total {
            let mut data = vec![0u16; m * n];
            let mut rem = idx;
            for c in (0..n).rev() {
                let col = &opts[(rem % opts.len() as u64) as usize];
                rem /= opts.len() as u64;
                for r in 0..m {
                    data[r * n + c] = col[r];
                }
            }
            maps.push(LinearMap::from_data(self.field, m, n, data, kind)?);
        }
        Ok(maps)
    }
}

fn log2_binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).log2()).sum()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// An enumerated ensemble: equally likely maps.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub field: Field,
    pub rows: usize,
    pub cols: usize,
    pub maps: Vec<LinearMap>,
}

impl Ensemble {
    pub fn from_spec(spec: &HashEnsembleSpec) -> Result<Self> {
        Ok(Ensemble { field: spec.field, rows: spec.rows, cols: spec.cols, maps: spec.enumerate()? })
    }

    /// Pairs `(f, g)` stacked into one map, every pair equally likely.
    pub fn product(a: &Ensemble, b: &Ensemble) -> Result<Self> {
        if a.cols != b.cols || a.field != b.field {
            return input("product ensemble needs matching field and column count");
        }
        let total = a.maps.len() as f64 * b.maps.len() as f64;
        if total.log2() > ENUMERATION_BITS {
            return resource("product ensemble too large to enumerate");
        }
        let mut maps = Vec::with_capacity(total as usize);
        for f in &a.maps {
            for g in &b.maps {
                maps.push(f.stack(g)?);
            }
        }
        Ok(Ensemble { field: a.field, rows: a.rows + b.rows, cols: a.cols, maps })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Size of the union of all images.
    pub fn image_size(&self) -> Result<u64> {
        let mut seen: HashSet<u64> = HashSet::new();
        let full = self.field.space_size(self.rows)?;
        for m in &self.maps {
            seen.extend(m.image_indices()?);
            if seen.len() as u64 == full {
                break;
            }
        }
        Ok(seen.len() as u64)
    }

    /// Exact `P(f(z) = f(z'))`.
    pub fn collision_probability(&self, z: &[u16], zp: &[u16]) -> Result<Ratio<u64>> {
        if z.len() != self.cols || zp.len() != self.cols {
            return input("vectors must match the column count");
        }
        let d = self.field.sub_vec(z, zp);
        let hits = self.maps.iter().filter(|m| m.annihilates(&d)).count() as u64;
        Ok(Ratio::new(hits, self.maps.len() as u64))
    }

    /// Number of maps with `f(d) = 0`, for every vector `d` in index order.
    fn kernel_hits(&self) -> Result<Vec<u64>> {
        let total = self.field.space_size(self.cols)?;
        let mut hits = vec![0u64; total as usize];
        for (i, slot) in hits.iter_mut().enumerate() {
            let d = self.field.vector_at(i as u64, self.cols);
            *slot = self.maps.iter().filter(|m| m.annihilates(&d)).count() as u64;
        }
        Ok(hits)
    }

    /// The excess-collision mass at threshold `alpha / image_size`, maximized
    /// over `z`. For linear maps the collision probability of `(z, z')` only
    /// depends on `z - z'`, so the maximum is attained at every `z`.
    pub fn beta_at(&self, alpha: Ratio<u64>, image_size: u64) -> Result<Ratio<u64>> {
        let hits = self.kernel_hits()?;
        let n = self.maps.len() as u64;
        // hits/n > alpha/image  <=>  hits * image * alpha.denom > alpha.numer * n
        let mut excess = 0u64;
        for &h in hits.iter().skip(1) {
            if h as u128 * image_size as u128 * *alpha.denom() as u128 > *alpha.numer() as u128 * n as u128 {
                excess += h;
            }
        }
        Ok(Ratio::new(excess, n))
    }
}

/// Hash parameters `(alpha, beta)` of an ensemble.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HashParams {
    pub alpha: f64,
    pub beta: f64,
}

impl HashParams {
    pub const IDEAL: HashParams = HashParams { alpha: 1.0, beta: 0.0 };

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 1.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
            return input(format!("hash parameters need alpha >= 1 and beta >= 0, got ({alpha}, {beta})"));
        }
        Ok(HashParams { alpha, beta })
    }
}

/// Exact measurement of an enumerated ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct HashMeasurement {
    pub alpha: Ratio<u64>,
    pub beta: Ratio<u64>,
    pub image_size: u64,
    pub ensemble_size: u64,
}

impl HashMeasurement {
    pub fn params(&self) -> HashParams {
        HashParams { alpha: ratio_f64(self.alpha), beta: ratio_f64(self.beta) }
    }
}

pub fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Smallest admissible alpha (1) and the matching exact beta.
pub fn hash_alpha_beta(spec: &HashEnsembleSpec) -> Result<HashMeasurement> {
    let ens = Ensemble::from_spec(spec)?;
    measure(&ens)
}

pub fn measure(ens: &Ensemble) -> Result<HashMeasurement> {
    let image = ens.image_size()?;
    let alpha = Ratio::from_integer(1);
    let beta = ens.beta_at(alpha, image)?;
    Ok(HashMeasurement { alpha, beta, image_size: image, ensemble_size: ens.len() as u64 })
}

/// Parameters of the ensemble of stacked pairs `(f, g)` with independent `f`, `g`.
pub fn joint_ensemble_alpha_beta(a: HashParams, b: HashParams) -> HashParams {
    HashParams { alpha: a.alpha * b.alpha, beta: a.beta + b.beta }
}

/// Parameters of the product ensemble over a set of messages: alphas multiply,
/// `beta + 1` multiplies. The empty set gives `(1, 0)`.
pub fn set_params(parts: &[HashParams]) -> HashParams {
    let alpha = parts.iter().map(|p| p.alpha).product();
    let beta = parts.iter().map(|p| p.beta + 1.0).product::<f64>() - 1.0;
    HashParams { alpha, beta }
}

/// Parameters used when the ensemble is too large to enumerate. The uniform
/// kind is two-universal, which gives `(1, 0)` outright; the sparse kind is
/// measured and fails when enumeration is out of budget.
pub fn hash_params_for(spec: &HashEnsembleSpec) -> Result<HashParams> {
    match spec.kind {
        EnsembleKind::Uniform => {
            spec.validate()?;
            Ok(HashParams::IDEAL)
        }
        EnsembleKind::Sparse => hash_alpha_beta(spec).map(|m| m.params()).map_err(|e| match e {
            Error::Resource(m) => Error::Input(format!(
                "sparse ensemble {}x{} cannot be measured ({m}); supply alpha and beta explicitly",
                spec.rows, spec.cols
            )),
            other => other,
        }),
    }
}

/// Result of [`collision_spectrum`].
#[derive(Clone, Debug, PartialEq)]
pub enum CollisionEstimate {
    Exact(Ratio<u64>),
    Estimated { probability: f64, std_error: f64, samples: u64 },
}

impl CollisionEstimate {
    pub fn value(&self) -> f64 {
        match self {
            CollisionEstimate::Exact(r) => ratio_f64(*r),
            CollisionEstimate::Estimated { probability, .. } => *probability,
        }
    }
}

pub const COLLISION_SAMPLES: u64 = 1 << 16;

/// `P(f(z) = f(z'))` over the ensemble: exact when enumerable, otherwise a
/// Monte Carlo estimate seeded from `spec.seed`.
pub fn collision_spectrum(spec: &HashEnsembleSpec, z: &[u16], zp: &[u16]) -> Result<CollisionEstimate> {
    if z == zp {
        return input("collision probability of a vector with itself is trivially 1");
    }
    if z.len() != spec.cols || zp.len() != spec.cols {
        return input("vectors must match the column count");
    }
    match Ensemble::from_spec(spec) {
        Ok(ens) => Ok(CollisionEstimate::Exact(ens.collision_probability(z, zp)?)),
        Err(Error::Resource(_)) => {
            let d = spec.field.sub_vec(z, zp);
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut hits = 0u64;
            for _ in 0..COLLISION_SAMPLES {
                if spec.sample(&mut rng)?.annihilates(&d) {
                    hits += 1;
                }
            }
            let p = hits as f64 / COLLISION_SAMPLES as f64;
            Ok(CollisionEstimate::Estimated {
                probability: p,
                std_error: (p * (1.0 - p) / COLLISION_SAMPLES as f64).sqrt(),
                samples: COLLISION_SAMPLES,
            })
        }
        Err(e) => Err(e),
    }
}
