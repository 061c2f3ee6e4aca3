//! Catalogue of synthetic missingness mechanisms.
//!
//! Each mechanism couples an analytic data law for `X` with an analytic
//! pattern probability `P(M=m | X=x)`. Low-dimensional entries also expose
//! the joint density (consumed by the quadrature checkers) and per-column
//! conditional oracles (consumed by the `true-sampler` baseline).

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{DataMatrix, MissingMask};
use crate::error::{Error, Result};
use crate::rng::rng_from;

type ProbFn = Box<dyn Fn(usize, &[f64]) -> f64 + Send + Sync>;
type SampleFn = Box<dyn Fn(&mut ChaCha12Rng) -> Vec<f64> + Send + Sync>;
type StratSampleFn = Box<dyn Fn(usize, &mut ChaCha12Rng) -> Vec<f64> + Send + Sync>;
type DensityFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Analytic conditional law of one column given all others.
pub struct ConditionalOracle {
    sample: Box<dyn Fn(&[f64], &mut ChaCha12Rng) -> f64 + Send + Sync>,
    mean: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl ConditionalOracle {
    /// Draws `x_j` from `p(x_j | x_{-j})`; `x` is the full row, the j-th
    /// entry is ignored.
    pub fn sample(&self, x: &[f64], rng: &mut ChaCha12Rng) -> f64 {
        (self.sample)(x, rng)
    }

    pub fn mean(&self, x: &[f64]) -> f64 {
        (self.mean)(x)
    }
}

/// A named missingness mechanism: data law plus `P(M=m | X=x)`.
pub struct MechanismSpec {
    id: String,
    d: usize,
    patterns: Vec<Vec<u8>>,
    support: Vec<(f64, f64)>,
    prob: ProbFn,
    sampler: SampleFn,
    /// Per-pattern data law; when present, generation is stratified with
    /// equal rows per pattern instead of drawing pattern labels.
    stratified: Option<StratSampleFn>,
    density: Option<DensityFn>,
    oracles: HashMap<usize, ConditionalOracle>,
    discontinuous: bool,
}

impl MechanismSpec {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn patterns(&self) -> &[Vec<u8>] {
        &self.patterns
    }

    /// Integration ranges covering the support of `X`.
    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    /// `P(M = patterns[k] | X = x)`.
    pub fn prob(&self, k: usize, x: &[f64]) -> f64 {
        (self.prob)(k, x)
    }

    pub fn has_density(&self) -> bool {
        self.density.is_some()
    }

    /// Joint density of `X` at `x`.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        match &self.density {
            Some(f) => Ok(f(x)),
            None => Err(Error::NoDensity(self.id.clone())),
        }
    }

    pub fn sample_x(&self, rng: &mut ChaCha12Rng) -> Vec<f64> {
        (self.sampler)(rng)
    }

    pub fn is_stratified(&self) -> bool {
        self.stratified.is_some()
    }

    pub fn oracle(&self, j: usize) -> Result<&ConditionalOracle> {
        self.oracles
            .get(&j)
            .ok_or_else(|| Error::NoOracle(self.id.clone(), j))
    }

    pub fn has_oracle(&self, j: usize) -> bool {
        self.oracles.contains_key(&j)
    }

    /// True when the density has jumps; checkers then use the midpoint rule.
    pub fn discontinuous_density(&self) -> bool {
        self.discontinuous
    }

    /// Index of the fully observed pattern, if present.
    pub fn zero_pattern_index(&self) -> Option<usize> {
        self.patterns.iter().position(|p| p.iter().all(|&b| b == 0))
    }
}

/// One generated `(X, M)` pair.
pub struct GeneratedSample {
    pub x: DataMatrix,
    pub mask: MissingMask,
    pub spec_id: String,
    pub seed: u64,
}

/// Draws `n` rows from the spec's data law and masks each row by
/// categorical sampling from `P(M = . | X = x_i)`. Stratified specs
/// instead produce `n / #patterns` rows per pattern, in pattern order.
pub fn generate(spec: &MechanismSpec, n: usize, seed: u64) -> GeneratedSample {
    assert!(n >= 1);
    let mut rng = rng_from(&[seed, 0x6d65636861]);
    let d = spec.d;
    let mut values = Vec::with_capacity(n * d);
    let mut bits = Vec::with_capacity(n * d);
    if let Some(strat) = &spec.stratified {
        let k = spec.patterns.len();
        for (pi, pat) in spec.patterns.iter().enumerate() {
            let rows = n / k + usize::from(pi < n % k);
            for _ in 0..rows {
                let x = strat(pi, &mut rng);
                values.extend_from_slice(&x);
                bits.extend_from_slice(pat);
            }
        }
    } else {
        for _ in 0..n {
            let x = spec.sample_x(&mut rng);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = spec.patterns.len() - 1;
            for (k, _) in spec.patterns.iter().enumerate() {
                acc += spec.prob(k, &x);
                if u < acc {
                    chosen = k;
                    break;
                }
            }
            values.extend_from_slice(&x);
            bits.extend_from_slice(&spec.patterns[chosen]);
        }
    }
    let x = DataMatrix::new(values, n, d).expect("generated data is finite");
    let mask = MissingMask::new(bits, n, d).expect("mask bits");
    GeneratedSample { x, mask, spec_id: spec.id.clone(), seed }
}

// ---------------------------------------------------------------------------
// FGM copula
// ---------------------------------------------------------------------------

/// FGM joint density `1 + (2x1-1)(2x2-1)` on the unit square.
pub fn fgm_density(x1: f64, x2: f64) -> f64 {
    if (0.0..=1.0).contains(&x1) && (0.0..=1.0).contains(&x2) {
        1.0 + (2.0 * x1 - 1.0) * (2.0 * x2 - 1.0)
    } else {
        0.0
    }
}

/// Inverts the conditional CDF `F(t | given) = t + (2*given - 1) t (t - 1)`
/// at level `u`; the quadratic root in `[0,1]` is returned.
pub fn fgm_conditional_quantile(u: f64, given: f64) -> f64 {
    let a = 2.0 * given - 1.0;
    if a.abs() < 1e-12 {
        return u;
    }
    let t = ((a - 1.0) + ((1.0 - a) * (1.0 - a) + 4.0 * a * u).sqrt()) / (2.0 * a);
    t.clamp(0.0, 1.0)
}

/// Draws `(x1, x2)` from the FGM copula with uniform marginals.
pub fn sample_fgm_pair(rng: &mut ChaCha12Rng) -> (f64, f64) {
    let x1: f64 = rng.gen();
    let u: f64 = rng.gen();
    (x1, fgm_conditional_quantile(u, x1))
}

fn fgm_conditional_mean(given: f64) -> f64 {
    0.5 + (given - 0.5) / 3.0
}

// ---------------------------------------------------------------------------
// Catalogue
// ---------------------------------------------------------------------------

fn normal_pdf(x: f64, mu: f64, sd: f64) -> f64 {
    let z = (x - mu) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

fn draw_normal(rng: &mut ChaCha12Rng, mu: f64, sd: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mu + sd * z
}

fn uniform_oracle() -> ConditionalOracle {
    ConditionalOracle {
        sample: Box::new(|_, rng| rng.gen()),
        mean: Box::new(|_| 0.5),
    }
}

fn fgm_oracle(other: usize) -> ConditionalOracle {
    ConditionalOracle {
        sample: Box::new(move |x, rng| fgm_conditional_quantile(rng.gen(), x[other])),
        mean: Box::new(move |x| fgm_conditional_mean(x[other])),
    }
}

fn unit_support(d: usize) -> Vec<(f64, f64)> {
    vec![(0.0, 1.0); d]
}

/// Looks up a catalogue mechanism by name.
///
/// Known names: `ex1-uniform3`, `ex-nonoverlap`, `ex2-gauss-shift`,
/// `ex-fgm4`, `ex-fgm3` (5-dim), `ex-fgm3-d3`, `ex5-uniform4`,
/// `appA-uniform5`, `appB-gaussmix6`, `appC-nonlinear6`, `mcar-bernoulli`.
pub fn make_spec(name: &str) -> Result<MechanismSpec> {
    match name {
        "ex1-uniform3" => Ok(ex1_uniform3()),
        "ex-nonoverlap" => Ok(ex_nonoverlap()),
        "ex2-gauss-shift" => Ok(ex2_gauss_shift()),
        "ex-fgm4" => Ok(ex_fgm4()),
        "ex-fgm3" => Ok(ex_fgm3(5)),
        "ex-fgm3-d3" => Ok(ex_fgm3(3)),
        "ex5-uniform4" => Ok(ex5_uniform4()),
        "appA-uniform5" => Ok(app_a_uniform5()),
        "appB-gaussmix6" => Ok(app_mix6(false)),
        "appC-nonlinear6" => Ok(app_mix6(true)),
        "mcar-bernoulli" => Ok(make_mcar_bernoulli(0.3, 3, &[0, 1])),
        other => Err(Error::UnknownMechanism(other.to_string())),
    }
}

fn ex1_uniform3() -> MechanismSpec {
    let d = 3;
    let mut oracles = HashMap::new();
    for j in 0..d {
        oracles.insert(j, uniform_oracle());
    }
    MechanismSpec {
        id: "ex1-uniform3".into(),
        d,
        patterns: vec![vec![0, 0, 0], vec![0, 1, 0], vec![1, 0, 0]],
        support: unit_support(d),
        prob: Box::new(|k, x| match k {
            0 => 2.0 * x[0] / 3.0,
            1 => 2.0 / 3.0 - 2.0 * x[0] / 3.0,
            _ => 1.0 / 3.0,
        }),
        sampler: Box::new(|rng| (0..3).map(|_| rng.gen()).collect()),
        stratified: None,
        density: Some(Box::new(|x| {
            if x.iter().all(|v| (0.0..=1.0).contains(v)) {
                1.0
            } else {
                0.0
            }
        })),
        oracles,
        discontinuous: false,
    }
}

fn ex_nonoverlap() -> MechanismSpec {
    let mut oracles = HashMap::new();
    oracles.insert(
        0,
        ConditionalOracle {
            sample: Box::new(|x, rng| x[1] * rng.gen::<f64>()),
            mean: Box::new(|x| x[1] / 2.0),
        },
    );
    // p(x | m1) = (1/x2) 1{x1 <= x2} 1{x2 in [0,1]}, analogously on [1,2];
    // P(M=m) = 1/2 each, so p(x) = 1/(2 x2) on {0 <= x1 <= x2 <= 2}.
    let comp = |x: &[f64], lo: f64, hi: f64| -> f64 {
        if x[1] > lo && x[1] <= hi && x[0] >= 0.0 && x[0] <= x[1] {
            1.0 / x[1]
        } else {
            0.0
        }
    };
    MechanismSpec {
        id: "ex-nonoverlap".into(),
        d: 2,
        patterns: vec![vec![0, 0], vec![1, 0]],
        support: vec![(0.0, 2.0), (0.0, 2.0)],
        prob: Box::new(move |k, x| {
            let p1 = comp(x, 0.0, 1.0);
            let p2 = comp(x, 1.0, 2.0);
            let tot = p1 + p2;
            if tot == 0.0 {
                return 0.0;
            }
            if k == 0 {
                p1 / tot
            } else {
                p2 / tot
            }
        }),
        sampler: Box::new(|rng| {
            let x2: f64 = 2.0 * rng.gen::<f64>();
            let x1 = x2 * rng.gen::<f64>();
            vec![x1, x2]
        }),
        stratified: None,
        density: Some(Box::new(move |x| {
            0.5 * (comp(x, 0.0, 1.0) + comp(x, 1.0, 2.0))
        })),
        oracles,
        discontinuous: true,
    }
}

fn ex2_gauss_shift() -> MechanismSpec {
    // Components N((0,0), S) and N((5,5), S) with S = [[2,1],[1,1]].
    // Equivalent construction: x2 ~ N(mu, 1), x1 = x2 + N(0,1).
    let comp_density = |x: &[f64], mu: f64| -> f64 {
        normal_pdf(x[1], mu, 1.0) * normal_pdf(x[0], x[1], 1.0)
    };
    let mut oracles = HashMap::new();
    oracles.insert(
        0,
        ConditionalOracle {
            sample: Box::new(|x, rng| draw_normal(rng, x[1], 1.0)),
            mean: Box::new(|x| x[1]),
        },
    );
    MechanismSpec {
        id: "ex2-gauss-shift".into(),
        d: 2,
        patterns: vec![vec![0, 0], vec![1, 0]],
        support: vec![(-6.0, 12.0), (-6.0, 12.0)],
        prob: Box::new(move |k, x| {
            let p1 = comp_density(x, 0.0);
            let p2 = comp_density(x, 5.0);
            let tot = p1 + p2;
            if tot == 0.0 {
                return if k == 0 { 0.5 } else { 0.5 };
            }
            if k == 0 {
                p1 / tot
            } else {
                p2 / tot
            }
        }),
        sampler: Box::new(|rng| {
            let mu = if rng.gen_bool(0.5) { 0.0 } else { 5.0 };
            let x2 = draw_normal(rng, mu, 1.0);
            let x1 = draw_normal(rng, x2, 1.0);
            vec![x1, x2]
        }),
        stratified: None,
        density: Some(Box::new(move |x| {
            0.5 * comp_density(x, 0.0) + 0.5 * comp_density(x, 5.0)
        })),
        oracles,
        discontinuous: false,
    }
}

fn fgm_uniform_sampler(d: usize) -> SampleFn {
    Box::new(move |rng| {
        let (x1, x2) = sample_fgm_pair(rng);
        let mut x = vec![x1, x2];
        for _ in 2..d {
            x.push(rng.gen());
        }
        x
    })
}

fn fgm_joint_density(d: usize) -> DensityFn {
    Box::new(move |x: &[f64]| {
        if x.len() != d || x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return 0.0;
        }
        fgm_density(x[0], x[1])
    })
}

fn fgm_oracles(d: usize) -> HashMap<usize, ConditionalOracle> {
    let mut oracles = HashMap::new();
    oracles.insert(0, fgm_oracle(1));
    oracles.insert(1, fgm_oracle(0));
    for j in 2..d {
        oracles.insert(j, uniform_oracle());
    }
    oracles
}

fn ex_fgm4() -> MechanismSpec {
    let d = 3;
    MechanismSpec {
        id: "ex-fgm4".into(),
        d,
        patterns: vec![vec![0, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 0]],
        support: unit_support(d),
        prob: Box::new(|k, x| match k {
            0 => (x[0] + x[1]) / 3.0,
            1 => (1.0 - x[0]) / 3.0,
            2 => (1.0 - x[1]) / 3.0,
            _ => 1.0 / 3.0,
        }),
        sampler: fgm_uniform_sampler(d),
        stratified: None,
        density: Some(fgm_joint_density(d)),
        oracles: fgm_oracles(d),
        discontinuous: false,
    }
}

fn ex_fgm3(d: usize) -> MechanismSpec {
    let p1 = vec![0u8; d];
    let mut p2 = vec![0u8; d];
    let mut p3 = vec![0u8; d];
    p2[1] = 1;
    p3[0] = 1;
    MechanismSpec {
        id: if d == 3 { "ex-fgm3-d3".into() } else { "ex-fgm3".into() },
        d,
        patterns: vec![p1, p2, p3],
        support: unit_support(d),
        prob: Box::new(|k, x| match k {
            0 => (x[0] + x[1]) / 3.0,
            1 => (2.0 - x[0]) / 3.0,
            _ => (1.0 - x[1]) / 3.0,
        }),
        sampler: fgm_uniform_sampler(d),
        stratified: None,
        density: if d <= 3 { Some(fgm_joint_density(d)) } else { None },
        oracles: fgm_oracles(d),
        discontinuous: false,
    }
}

fn ex5_uniform4() -> MechanismSpec {
    let d = 4;
    let mut oracles = HashMap::new();
    for j in 0..d {
        oracles.insert(j, uniform_oracle());
    }
    MechanismSpec {
        id: "ex5-uniform4".into(),
        d,
        patterns: vec![
            vec![0, 0, 0, 0],
            vec![0, 0, 1, 0],
            vec![0, 1, 0, 0],
            vec![1, 1, 0, 0],
        ],
        support: unit_support(d),
        prob: Box::new(|k, x| match k {
            0 => (x[0] + x[1]) / 8.0,
            1 => 0.25 - x[1] / 8.0,
            2 => 0.25 - x[0] / 8.0,
            _ => 0.5,
        }),
        sampler: Box::new(|rng| (0..4).map(|_| rng.gen()).collect()),
        stratified: None,
        density: Some(Box::new(|x| {
            if x.iter().all(|v| (0.0..=1.0).contains(v)) {
                1.0
            } else {
                0.0
            }
        })),
        oracles,
        discontinuous: false,
    }
}

fn app_a_uniform5() -> MechanismSpec {
    let d = 5;
    let mut oracles = HashMap::new();
    for j in 0..d {
        oracles.insert(j, uniform_oracle());
    }
    let mut p2 = vec![0u8; d];
    let mut p3 = vec![0u8; d];
    p2[1] = 1;
    p3[0] = 1;
    MechanismSpec {
        id: "appA-uniform5".into(),
        d,
        patterns: vec![vec![0; d], p2, p3],
        support: unit_support(d),
        prob: Box::new(|k, x| match k {
            0 => x[0] / 3.0,
            1 => 2.0 / 3.0 - x[0] / 3.0,
            _ => 1.0 / 3.0,
        }),
        sampler: Box::new(move |rng| (0..d).map(|_| rng.gen()).collect()),
        stratified: None,
        density: None,
        oracles,
        discontinuous: false,
    }
}

const APP_MIX_MEANS: [f64; 3] = [5.0, 0.0, -5.0];
const APP_MIX_B_ROW: [f64; 3] = [0.5, 1.0, 1.5];
const APP_MIX_NOISE_SD: f64 = 2.0;

fn toeplitz_chol() -> [[f64; 3]; 3] {
    // Cholesky factor of Sigma_ij = 0.5^|i-j|.
    let mut s = [[0.0f64; 3]; 3];
    for (i, row) in s.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = 0.5f64.powi((i as i32 - j as i32).abs());
        }
    }
    let mut l = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut sum = s[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    l
}

fn app_mix_nonlinear(xo: &[f64; 3]) -> [f64; 3] {
    [
        xo[2] * (xo[0] * xo[1]).sin(),
        if xo[1] > 0.0 { xo[1] } else { 0.0 },
        xo[0].atan() * xo[1].atan(),
    ]
}

fn app_mix_conditional_mean(xo: &[f64; 3], nonlinear: bool) -> [f64; 3] {
    if nonlinear {
        app_mix_nonlinear(xo)
    } else {
        let b = APP_MIX_B_ROW;
        let m = b[0] * xo[0] + b[1] * xo[1] + b[2] * xo[2];
        [m, m, m]
    }
}

fn app_mix6(nonlinear: bool) -> MechanismSpec {
    let d = 6;
    let chol = toeplitz_chol();
    let mut patterns = Vec::new();
    for j in 0..3 {
        let mut p = vec![0u8; d];
        p[j] = 1;
        patterns.push(p);
    }
    let mut oracles = HashMap::new();
    for j in 0..3 {
        oracles.insert(
            j,
            ConditionalOracle {
                sample: Box::new(move |x, rng| {
                    let xo = [x[3], x[4], x[5]];
                    let mu = app_mix_conditional_mean(&xo, nonlinear)[j];
                    draw_normal(rng, mu, APP_MIX_NOISE_SD)
                }),
                mean: Box::new(move |x| {
                    let xo = [x[3], x[4], x[5]];
                    app_mix_conditional_mean(&xo, nonlinear)[j]
                }),
            },
        );
    }
    let observed_block_density = move |xo: &[f64; 3], mean: f64| -> f64 {
        // N(mean*1, Toeplitz) density, via the Cholesky factor.
        let c = [xo[0] - mean, xo[1] - mean, xo[2] - mean];
        let mut z = [0.0f64; 3];
        for i in 0..3 {
            let mut s = c[i];
            for k in 0..i {
                s -= chol[i][k] * z[k];
            }
            z[i] = s / chol[i][i];
        }
        let q: f64 = z.iter().map(|v| v * v).sum();
        let det_sqrt = chol[0][0] * chol[1][1] * chol[2][2];
        (-0.5 * q).exp() / ((2.0 * PI).powf(1.5) * det_sqrt)
    };
    MechanismSpec {
        id: if nonlinear { "appC-nonlinear6".into() } else { "appB-gaussmix6".into() },
        d,
        patterns,
        support: vec![(-20.0, 20.0); d],
        prob: Box::new(move |k, x| {
            // Conditional factor p(x_{O^c} | x_O) is common to all patterns
            // and cancels; only the observed-block component densities matter.
            let xo = [x[3], x[4], x[5]];
            let ws: Vec<f64> = APP_MIX_MEANS
                .iter()
                .map(|&mu| observed_block_density(&xo, mu))
                .collect();
            let tot: f64 = ws.iter().sum();
            if tot == 0.0 {
                1.0 / 3.0
            } else {
                ws[k] / tot
            }
        }),
        sampler: Box::new(move |rng| sample_app_mix_row(rng, &chol, None, nonlinear)),
        stratified: Some(Box::new(move |k, rng| {
            sample_app_mix_row(rng, &chol, Some(APP_MIX_MEANS[k]), nonlinear)
        })),
        density: None,
        oracles,
        discontinuous: false,
    }
}

fn sample_app_mix_row(
    rng: &mut ChaCha12Rng,
    chol: &[[f64; 3]; 3],
    mean: Option<f64>,
    nonlinear: bool,
) -> Vec<f64> {
    let mean = mean.unwrap_or_else(|| {
        let k = rng.gen_range(0..3);
        APP_MIX_MEANS[k]
    });
    let z: [f64; 3] = [
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    ];
    let mut xo = [0.0f64; 3];
    for i in 0..3 {
        let mut s = mean;
        for k in 0..=i {
            s += chol[i][k] * z[k];
        }
        xo[i] = s;
    }
    let mu = app_mix_conditional_mean(&xo, nonlinear);
    let mut row = Vec::with_capacity(6);
    for m in mu {
        row.push(draw_normal(rng, m, APP_MIX_NOISE_SD));
    }
    row.extend_from_slice(&xo);
    row
}

/// Independent Bernoulli(`p`) masking on `cols`, data uniform on `[0,1]^d`.
pub fn make_mcar_bernoulli(p: f64, d: usize, cols: &[usize]) -> MechanismSpec {
    assert!((0.0..1.0).contains(&p) && !cols.is_empty());
    let k = cols.len();
    let mut patterns = Vec::new();
    for bitset in 0..(1usize << k) {
        let mut pat = vec![0u8; d];
        for (bi, &c) in cols.iter().enumerate() {
            pat[c] = ((bitset >> bi) & 1) as u8;
        }
        patterns.push(pat);
    }
    patterns.sort();
    let pat_probs: Vec<f64> = patterns
        .iter()
        .map(|pat| {
            cols.iter()
                .map(|&c| if pat[c] == 1 { p } else { 1.0 - p })
                .product()
        })
        .collect();
    let mut oracles = HashMap::new();
    for j in 0..d {
        oracles.insert(j, uniform_oracle());
    }
    MechanismSpec {
        id: "mcar-bernoulli".into(),
        d,
        patterns,
        support: unit_support(d),
        prob: Box::new(move |k, _| pat_probs[k]),
        sampler: Box::new(move |rng| (0..d).map(|_| rng.gen()).collect()),
        stratified: None,
        density: Some(Box::new(move |x| {
            if x.len() == d && x.iter().all(|v| (0.0..=1.0).contains(v)) {
                1.0
            } else {
                0.0
            }
        })),
        oracles,
        discontinuous: false,
    }
}

/// All catalogue names, in a stable order.
pub fn catalogue_names() -> Vec<&'static str> {
    vec![
        "ex1-uniform3",
        "ex-nonoverlap",
        "ex2-gauss-shift",
        "ex-fgm4",
        "ex-fgm3",
        "ex-fgm3-d3",
        "ex5-uniform4",
        "appA-uniform5",
        "appB-gaussmix6",
        "appC-nonlinear6",
        "mcar-bernoulli",
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn fgm_density_center() {
        assert_eq!(fgm_density(0.5, 0.5), 1.0);
    }

    #[test]
    fn fgm_conditional_mean_endpoints() {
        // E[X2 | X1 = x1] = 1/2 + (x1 - 1/2)/3, checked by Monte Carlo.
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for (x1, want) in [(0.0, 1.0 / 3.0), (0.5, 0.5), (1.0, 2.0 / 3.0)] {
            let n = 200_000;
            let mean: f64 = (0..n)
                .map(|_| fgm_conditional_quantile(rng.gen(), x1))
                .sum::<f64>()
                / n as f64;
            assert!((mean - want).abs() < 0.005, "x1={x1} mean={mean}");
        }
    }

    #[test]
    fn fgm_marginal_uniform_ks() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let n = 100_000;
        let mut x2: Vec<f64> = (0..n).map(|_| sample_fgm_pair(&mut rng).1).collect();
        x2.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = x2
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let e_lo = i as f64 / n as f64;
                let e_hi = (i + 1) as f64 / n as f64;
                (v - e_lo).abs().max((v - e_hi).abs())
            })
            .fold(0.0f64, f64::max);
        assert!(ks < 0.02, "KS statistic {ks}");
    }

    #[test]
    fn fgm_covariance_matches_analytic() {
        // Cov(X1,X2) = 1/36 by direct integration of the FGM density.
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let n = 1_000_000;
        let (mut sx, mut sy, mut sxy) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let (a, b) = sample_fgm_pair(&mut rng);
            sx += a;
            sy += b;
            sxy += a * b;
        }
        let nf = n as f64;
        let cov = sxy / nf - (sx / nf) * (sy / nf);
        assert!((cov - 1.0 / 36.0).abs() < 0.002, "cov={cov}");
    }

    #[test]
    fn unknown_name_rejected() {
        assert!(make_spec("no-such-mechanism").is_err());
    }

    #[test]
    fn ex1_probs_at_half() {
        let spec = make_spec("ex1-uniform3").unwrap();
        let x = [0.5, 0.2, 0.9];
        for k in 0..3 {
            assert!((spec.prob(k, &x) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn probability_closure_all_specs() {
        for name in catalogue_names() {
            let spec = make_spec(name).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(99);
            for _ in 0..1000 {
                let x = spec.sample_x(&mut rng);
                let tot: f64 = (0..spec.patterns().len())
                    .map(|k| {
                        let p = spec.prob(k, &x);
                        assert!((0.0..=1.0 + 1e-12).contains(&p), "{name}: prob {p}");
                        p
                    })
                    .sum();
                assert!((tot - 1.0).abs() <= 1e-12, "{name}: sum {tot}");
            }
        }
    }

    #[test]
    fn fgm3_pattern_frequencies() {
        let spec = make_spec("ex-fgm3").unwrap();
        let n = 100_000;
        let s = generate(&spec, n, 5);
        let mut counts = [0usize; 3];
        for i in 0..n {
            let row = s.mask.row(i);
            let k = spec.patterns().iter().position(|p| p == row).unwrap();
            counts[k] += 1;
        }
        let expect = [1.0 / 3.0, 0.5, 1.0 / 6.0];
        for k in 0..3 {
            let f = counts[k] as f64 / n as f64;
            assert!((f - expect[k]).abs() < 0.01, "pattern {k}: {f}");
        }
    }

    #[test]
    fn generate_deterministic() {
        let spec = make_spec("ex-fgm4").unwrap();
        let a = generate(&spec, 500, 17);
        let b = generate(&spec, 500, 17);
        assert_eq!(
            a.x.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.x.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(a.mask, b.mask);
    }

    #[test]
    fn gauss_shift_pattern_means() {
        let spec = make_spec("ex2-gauss-shift").unwrap();
        let s = generate(&spec, 10_000, 3);
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..10_000 {
            if s.mask.get(i, 0) == 1 {
                sum += s.x.get(i, 1);
                count += 1;
            }
        }
        let mean = sum / count as f64;
        assert!((mean - 5.0).abs() < 0.05, "mean={mean}");
    }

    #[test]
    fn app_b_missing_rate() {
        let spec = make_spec("appB-gaussmix6").unwrap();
        let s = generate(&spec, 1500, 1);
        let rate = s.mask.missing_rate();
        assert!((0.16..=0.18).contains(&rate), "rate={rate}");
    }

    #[test]
    fn app_b_stratified_counts() {
        let spec = make_spec("appB-gaussmix6").unwrap();
        let s = generate(&spec, 1500, 1);
        let pats = crate::data::extract_patterns(&s.mask);
        assert_eq!(pats.len(), 3);
        assert!(pats.iter().all(|p| p.count == 500));
    }

    #[test]
    fn pattern_draws_match_conditional_probs_chi2() {
        // Conditional on the sampled x's, pattern counts are a sum of
        // independent categoricals with expected count sum_i prob(k, x_i).
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        for name in ["ex1-uniform3", "ex-fgm4", "ex-fgm3", "appA-uniform5", "mcar-bernoulli"] {
            let spec = make_spec(name).unwrap();
            let n = 100_000;
            let s = generate(&spec, n, 23);
            let np = spec.patterns().len();
            let mut expected = vec![0.0f64; np];
            let mut observed = vec![0.0f64; np];
            for i in 0..n {
                let row = s.x.row(i);
                for k in 0..np {
                    expected[k] += spec.prob(k, row);
                }
                let mk = s.mask.row(i);
                let k = spec.patterns().iter().position(|p| p == mk).unwrap();
                observed[k] += 1.0;
            }
            let chi2: f64 = (0..np)
                .map(|k| (observed[k] - expected[k]).powi(2) / expected[k])
                .sum();
            let dist = ChiSquared::new((np - 1) as f64).unwrap();
            let p = 1.0 - dist.cdf(chi2);
            assert!(p > 0.001, "{name}: chi2={chi2} p={p}");
        }
    }
}
