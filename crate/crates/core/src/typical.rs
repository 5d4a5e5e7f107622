//! The dense approximants `mu_k` and per-cube membership certificates.
//!
//! For `nu` in the reference family and a level `a`, a measure belongs to
//! `R_{nu,a,n}` when at some generation `k >= n` every cube `Q ⊂ I_a` of
//! `Q_a^k` admits `c > 0` and `w` with
//! `F_{a+1}(c T_{x(Q), r_a^k #} mu, nu_a^w) < eps_a eps_a^w`. The certificates
//! here use the explicit candidates `c = nu(I_a) / mu(Q)`, `w_j = mu(Q^j) / mu(Q)`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::blowup::{blowup, weighted_duplication, EpsilonChoice, WeightVector};
use crate::measure::{AtomicMeasure, AxisBox};
use crate::metric::{best_constant, f_a};
use crate::triadic::{blowup_radius, cubes_inside, half_side_radius, pow3, standard_box, CubeId};
use crate::{Error, Result};

/// Masses `mu(Q)` of every cube of one generation that carries mass.
#[derive(Clone, Debug)]
pub struct CubeMasses {
    a: u32,
    k: i32,
    masses: HashMap<Vec<i64>, f64>,
}

impl CubeMasses {
    pub fn new(mu: &AtomicMeasure, a: u32, k: i32) -> Self {
        let mut masses: HashMap<Vec<i64>, f64> = HashMap::new();
        for (p, w) in mu.atoms() {
            *masses.entry(CubeId::locate(p, a, k).m).or_default() += w;
        }
        Self { a, k, masses }
    }

    pub fn mass(&self, q: &CubeId) -> f64 {
        debug_assert!(q.a == self.a && q.k == self.k);
        self.masses.get(&q.m).copied().unwrap_or(0.0)
    }
}

/// One atom of weight `per_cube` at the centre of every cube of `Q_a^k` in `window`.
///
/// Added to measures that vanish on some cubes so that the construction,
/// which divides by `mu(Q)`, applies.
pub fn background(dim: usize, a: u32, k: i32, window: &AxisBox, per_cube: f64) -> Result<AtomicMeasure> {
    let cubes = cubes_inside(a, k, window);
    let positions: Vec<f64> = cubes.iter().flat_map(|q| q.center()).collect();
    AtomicMeasure::from_flat(dim, positions, vec![per_cube; cubes.len()])
}

fn nu_on_level(nu: &AtomicMeasure, a: i32) -> Result<(AtomicMeasure, f64)> {
    let nu_a = nu.restrict(&standard_box(a, nu.dim()))?;
    let mass = nu_a.total_mass();
    if mass <= 0.0 {
        return Err(Error::ZeroMass(format!("nu(I_{a}) = 0")));
    }
    Ok((nu_a, mass))
}

/// `mu_k = sum_Q mu(Q) nu^Q` over the cubes `Q` of `Q_a^k` inside `window`,
/// where `nu^Q` is `nu ⌞ I_a` pulled back into `Q` and normalised to mass one.
pub fn construct_mu_k(
    mu: &AtomicMeasure,
    nu: &AtomicMeasure,
    a: u32,
    k: i32,
    window: &AxisBox,
) -> Result<AtomicMeasure> {
    if mu.dim() != nu.dim() || mu.dim() != window.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    let (nu_a, nu_mass) = nu_on_level(nu, a as i32)?;
    let masses = CubeMasses::new(mu, a, k);
    let cubes = cubes_inside(a, k, window);
    let r = blowup_radius(a, k);
    let d = mu.dim();
    let per_cube = nu_a.len();
    let mut positions = Vec::with_capacity(cubes.len() * per_cube * d);
    let mut weights = Vec::with_capacity(cubes.len() * per_cube);
    for q in &cubes {
        let m = masses.mass(q);
        if m <= 0.0 {
            return Err(Error::EmptyCube(q.to_string()));
        }
        let x = q.center();
        for (p, w) in nu_a.atoms() {
            positions.extend(p.iter().zip(&x).map(|(v, c)| c + r * v));
            weights.push(m * w / nu_mass);
        }
    }
    AtomicMeasure::from_flat(d, positions, weights)
}

/// `c(Q) = nu(I_a) / mu(Q)` and `w_j = mu(Q^j) / mu(Q)`.
pub fn candidate_cw(mu: &AtomicMeasure, nu: &AtomicMeasure, a: u32, q: &CubeId) -> Result<(f64, WeightVector)> {
    let (_, nu_mass) = nu_on_level(nu, a as i32)?;
    candidate_from(&CubeMasses::new(mu, a, q.k), nu_mass, q)
}

fn candidate_from(masses: &CubeMasses, nu_mass: f64, q: &CubeId) -> Result<(f64, WeightVector)> {
    let neighbours = q.neighbours();
    let m: Vec<f64> = neighbours.iter().map(|n| masses.mass(n)).collect();
    if let Some(j) = m.iter().position(|v| *v <= 0.0) {
        return Err(Error::ZeroMass(format!("mu({}) = 0", neighbours[j])));
    }
    let w = m.iter().map(|v| v / m[0]).collect();
    Ok((nu_mass / m[0], WeightVector::new(q.dim(), w)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Pass,
    Fail,
    NotApplicable,
}

/// What a certificate measured for its cube.
#[derive(Clone, Debug, Serialize)]
pub struct Evidence {
    pub c: f64,
    pub w: WeightVector,
    pub distance: f64,
    pub threshold: f64,
    pub epsilon: EpsilonChoice,
    /// `mu_Q(I_a)` for the blow-up `mu_Q = c T_{x(Q), r #} mu`.
    pub blown_outer: f64,
    /// `mu_Q(I_{-a})`.
    pub blown_inner: f64,
    pub nu_outer: f64,
    pub nu_inner: f64,
    /// `mu(Q_c) / mu(Q)`.
    pub central_ratio: f64,
    /// Blow-up radius used, mapping `Q` onto `I_a`.
    pub radius: f64,
    /// Half of `radius`, the half-side convention.
    pub half_radius: f64,
}

impl Evidence {
    /// `|mu_Q(I_a) - nu(I_a)| < 2 beta_a nu(I_{-a})`.
    pub fn outer_mass_close(&self) -> bool {
        (self.blown_outer - self.nu_outer).abs() < 2.0 * self.epsilon.beta_a * self.nu_inner
    }

    /// `|mu_Q(I_{-a}) - nu(I_{-a})| < 2 beta_a nu(I_{-a})`.
    pub fn inner_mass_close(&self) -> bool {
        (self.blown_inner - self.nu_inner).abs() < 2.0 * self.epsilon.beta_a * self.nu_inner
    }

    /// `p_a = nu(I_{-a}) / nu(I_a)`.
    pub fn p(&self) -> f64 {
        self.nu_inner / self.nu_outer
    }

    /// `rho_a^{-1} p_a <= mu(Q_c) / mu(Q) <= rho_a p_a`.
    pub fn central_ratio_within(&self) -> bool {
        let rho = self.epsilon.rho();
        let p = self.p();
        p / rho <= self.central_ratio && self.central_ratio <= rho * p
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CubeCertificate {
    pub cube: String,
    #[serde(skip)]
    pub id: CubeId,
    pub status: CertificateStatus,
    pub evidence: Option<Evidence>,
}

impl CubeCertificate {
    pub fn passed(&self) -> bool {
        self.status == CertificateStatus::Pass
    }
}

/// Evaluates candidate certificates for the cubes of one generation.
pub struct Certifier<'m> {
    mu: &'m AtomicMeasure,
    nu: &'m AtomicMeasure,
    a: u32,
    k: i32,
    window: AxisBox,
    beta: Option<f64>,
    masses: CubeMasses,
    nu_outer: f64,
    nu_inner: f64,
    central_masses: CubeMasses,
}

impl<'m> Certifier<'m> {
    pub fn new(
        mu: &'m AtomicMeasure,
        nu: &'m AtomicMeasure,
        a: u32,
        k: i32,
        window: &AxisBox,
        beta: Option<f64>,
    ) -> Result<Self> {
        let (_, nu_outer) = nu_on_level(nu, a as i32)?;
        let nu_inner = nu.mass_in(&standard_box(-(a as i32), nu.dim()))?;
        if nu_inner <= 0.0 {
            return Err(Error::ZeroMass(format!("nu(I_-{a}) = 0")));
        }
        Ok(Self {
            mu,
            nu,
            a,
            k,
            window: window.clone(),
            beta,
            masses: CubeMasses::new(mu, a, k),
            nu_outer,
            nu_inner,
            central_masses: CubeMasses::new(mu, a, k + 2),
        })
    }

    pub fn certify(&self, q: &CubeId) -> Result<CubeCertificate> {
        let not_applicable = || CubeCertificate {
            cube: q.to_string(),
            id: q.clone(),
            status: CertificateStatus::NotApplicable,
            evidence: None,
        };
        if !q
            .neighbours()
            .iter()
            .all(|n| self.window.contains_box(&n.to_box()))
        {
            return Ok(not_applicable());
        }
        let (c, w) = match candidate_from(&self.masses, self.nu_outer, q) {
            Ok(cw) => cw,
            Err(Error::ZeroMass(_)) => return Ok(not_applicable()),
            Err(e) => return Err(e),
        };
        let a = self.a as i32;
        let d = self.mu.dim();
        let dup = weighted_duplication(self.nu, a, &w)?;
        let epsilon = EpsilonChoice::with_duplicate(self.nu, &dup, self.a, self.beta)?;
        let r = blowup_radius(self.a, self.k);
        let x = q.center();
        let reach = AxisBox::cube(&x, r * pow3(a + 1))?;
        let local = self.mu.restrict_closed(&reach)?;
        let blown = blowup(&local, &x, r, c)?;
        let distance = f_a(&blown, &dup, a + 1)?;
        let threshold = epsilon.eps_a * epsilon.eps_a_w;
        let evidence = Evidence {
            c,
            distance,
            threshold,
            blown_outer: blown.mass_in(&standard_box(a, d))?,
            blown_inner: blown.mass_in(&standard_box(-a, d))?,
            nu_outer: self.nu_outer,
            nu_inner: self.nu_inner,
            central_ratio: self.central_masses.mass(&q.central_cube()) / self.masses.mass(q),
            radius: r,
            half_radius: half_side_radius(self.a, self.k),
            w,
            epsilon,
        };
        Ok(CubeCertificate {
            cube: q.to_string(),
            id: q.clone(),
            status: if distance < threshold {
                CertificateStatus::Pass
            } else {
                CertificateStatus::Fail
            },
            evidence: Some(evidence),
        })
    }

    /// Certificates for `cubes`, computed in parallel, in input order.
    pub fn certify_all(&self, cubes: &[CubeId]) -> Result<Vec<CubeCertificate>> {
        cubes.par_iter().map(|q| self.certify(q)).collect()
    }
}

/// Certificate of `mu_k` at `Q` using the candidate normalisation.
pub fn exactness_check(
    mu_k: &AtomicMeasure,
    nu: &AtomicMeasure,
    a: u32,
    k: i32,
    q: &CubeId,
    window: &AxisBox,
) -> Result<CubeCertificate> {
    Certifier::new(mu_k, nu, a, k, window, None)?.certify(q)
}

/// Cubes of `Q_a^k` in `window` whose neighbours all lie in `window`.
pub fn interior_cubes(a: u32, k: i32, window: &AxisBox) -> Vec<CubeId> {
    cubes_inside(a, k, window)
        .into_iter()
        .filter(|q| q.neighbours().iter().all(|n| window.contains_box(&n.to_box())))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct GenerationSummary {
    pub k: i32,
    pub cubes: usize,
    pub passed: usize,
    pub worst_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Membership {
    Certified {
        k: i32,
        tried: Vec<GenerationSummary>,
        certificates: Vec<CubeCertificate>,
    },
    NotCertified {
        tried: Vec<GenerationSummary>,
    },
}

impl Membership {
    pub fn generation(&self) -> Option<i32> {
        match self {
            Membership::Certified { k, .. } => Some(*k),
            Membership::NotCertified { .. } => None,
        }
    }
}

/// Certificates of `mu` at generation `k` for every cube `Q ⊂ I_a`.
pub fn certify_generation(
    mu: &AtomicMeasure,
    nu: &AtomicMeasure,
    a: u32,
    k: i32,
    window: &AxisBox,
    beta: Option<f64>,
) -> Result<Vec<CubeCertificate>> {
    let cubes = cubes_inside(a, k, &standard_box(a as i32, mu.dim()));
    Certifier::new(mu, nu, a, k, window, beta)?.certify_all(&cubes)
}

/// Searches `k = n..=k_max` for a generation at which every cube `Q ⊂ I_a`
/// passes its candidate certificate.
///
/// Success proves `mu ∈ R_{nu,a,n}` up to the floating-point evaluation of the
/// distances; failure proves nothing.
pub fn certify_r_membership(
    mu: &AtomicMeasure,
    nu: &AtomicMeasure,
    a: u32,
    n: i32,
    k_max: i32,
    window: &AxisBox,
    beta: Option<f64>,
) -> Result<Membership> {
    let needed = standard_box(a as i32 + 1, mu.dim());
    if !window.contains_box(&needed) {
        return Err(Error::OutOfRange(format!(
            "window {window} does not contain I_{}",
            a + 1
        )));
    }
    let mut tried = Vec::new();
    for k in n..=k_max {
        let certificates = certify_generation(mu, nu, a, k, window, beta)?;
        let passed = certificates.iter().filter(|c| c.passed()).count();
        tried.push(GenerationSummary {
            k,
            cubes: certificates.len(),
            passed,
            worst_distance: certificates
                .iter()
                .filter_map(|c| c.evidence.as_ref().map(|e| e.distance))
                .fold(0.0, f64::max),
        });
        if passed == certificates.len() {
            return Ok(Membership::Certified {
                k,
                tried,
                certificates,
            });
        }
    }
    Ok(Membership::NotCertified { tried })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub k: i32,
    pub distance: f64,
    pub bound: f64,
}

impl ConvergenceRow {
    pub fn within_bound(&self) -> bool {
        self.distance <= self.bound
    }
}

/// `F_b(mu_k, mu)` against `2 sqrt(d) 3^{-ak} mu(I_{b+1})` for each `k`.
///
/// `mu_k` is built over the cubes of `I_b`, which is all `F_b` sees.
pub fn convergence_probe(
    mu: &AtomicMeasure,
    nu: &AtomicMeasure,
    a: u32,
    k_list: &[i32],
    b: i32,
    window: &AxisBox,
) -> Result<Vec<ConvergenceRow>> {
    let d = mu.dim();
    let outer = standard_box(b + 1, d);
    if !window.contains_box(&outer) {
        return Err(Error::OutOfRange(format!(
            "window {window} does not contain I_{}",
            b + 1
        )));
    }
    let scope = standard_box(b, d);
    let reference = mu.restrict_closed(&scope)?;
    let outer_mass = mu.mass_in(&outer)?;
    k_list
        .iter()
        .map(|&k| {
            let mu_k = construct_mu_k(mu, nu, a, k, &scope)?;
            Ok(ConvergenceRow {
                k,
                distance: f_a(&mu_k, &reference, b)?,
                bound: 2.0 * (d as f64).sqrt() * pow3(-(a as i32) * k) * outer_mass,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TangentRow {
    pub a: u32,
    pub k: i32,
    pub cube: String,
    pub in_central_cube: bool,
    pub c: f64,
    pub distance: f64,
    pub best_c: f64,
    pub best_distance: f64,
    pub threshold: Option<f64>,
    /// `threshold + 2 3^{-a} nu(I_{b+1})` when the cube's certificate passes.
    pub bound: Option<f64>,
}

/// Blow-ups of `mu` at `x` at the generation-`k` scale of each level `a`,
/// compared with `nu` in `F_b`.
pub fn tangent_probe(
    mu: &AtomicMeasure,
    x: &[f64],
    nu: &AtomicMeasure,
    a_list: &[u32],
    k: i32,
    b: i32,
    window: &AxisBox,
) -> Result<Vec<TangentRow>> {
    let d = mu.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let nu_outer_b = nu.mass_in(&standard_box(b + 1, d))?;
    a_list
        .iter()
        .map(|&a| {
            let q = CubeId::locate(x, a, k);
            let (_, nu_mass) = nu_on_level(nu, a as i32)?;
            let mq = mu.mass_in(&q.to_box())?;
            if mq <= 0.0 {
                return Err(Error::EmptyCube(q.to_string()));
            }
            let c = nu_mass / mq;
            let r = blowup_radius(a, k);
            let reach = AxisBox::cube(x, r * pow3(b))?;
            let local = mu.restrict_closed(&reach)?;
            let blown = blowup(&local, x, r, c)?;
            let distance = f_a(&blown, nu, b)?;
            let best = best_constant(&blowup(&local, x, r, 1.0)?, nu, b)?;
            let cert = Certifier::new(mu, nu, a, k, window, None)?.certify(&q)?;
            let threshold = cert.evidence.as_ref().map(|e| e.threshold);
            let bound = if cert.passed() {
                threshold.map(|t| t + 2.0 * pow3(-(a as i32)) * nu_outer_b)
            } else {
                None
            };
            Ok(TangentRow {
                a,
                k,
                cube: q.to_string(),
                in_central_cube: q.central_cube().to_box().contains(x),
                c,
                distance,
                best_c: best.c,
                best_distance: best.value,
                threshold,
                bound,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{discretize_lebesgue, sample_s};
    use approx::assert_abs_diff_eq;

    fn lebesgue(b: i32, h: f64) -> AtomicMeasure {
        discretize_lebesgue(&standard_box(b, 1), h).unwrap()
    }

    fn dirac0() -> AtomicMeasure {
        AtomicMeasure::dirac(&[0.0], 1.0).unwrap()
    }

    #[test]
    fn construct_with_point_mass() {
        let mu = lebesgue(2, 1.0 / 9.0);
        let window = standard_box(2, 1);
        let mk = construct_mu_k(&mu, &dirac0(), 1, 1, &window).unwrap();
        assert_eq!(mk.len(), 27);
        for (i, (p, w)) in mk.atoms().enumerate() {
            assert_abs_diff_eq!(p[0], -13.0 / 3.0 + i as f64 / 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(w, 1.0 / 3.0, epsilon = 1e-12);
        }
        let q = CubeId::new(1, 1, vec![0]);
        let (c, w) = candidate_cw(&mu, &dirac0(), 1, &q).unwrap();
        assert_abs_diff_eq!(c, 3.0, epsilon = 1e-12);
        assert_eq!(w.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn construct_preserves_cube_masses_and_maps_nu_affinely() {
        let mu = lebesgue(2, 1.0 / 27.0);
        let nu = sample_s(1, &standard_box(2, 1), 1.0 / 9.0, 4).unwrap().measure;
        let window = standard_box(1, 1);
        let mk = construct_mu_k(&mu, &nu, 1, 1, &window).unwrap();
        let nu_a = nu.restrict(&standard_box(1, 1)).unwrap();
        for q in cubes_inside(1, 1, &window) {
            let a = mu.mass_in(&q.to_box()).unwrap();
            let b = mk.mass_in(&q.to_box()).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            let inside = mk.restrict(&q.to_box()).unwrap();
            assert_eq!(inside.len(), nu_a.len());
            let r = blowup_radius(1, 1);
            for ((p, _), (y, _)) in inside.atoms().zip(nu_a.atoms()) {
                assert_abs_diff_eq!(p[0], q.center()[0] + r * y[0], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn construct_rejects_empty_cubes() {
        let mu = AtomicMeasure::dirac(&[0.0], 1.0).unwrap();
        let err = construct_mu_k(&mu, &dirac0(), 1, 1, &standard_box(1, 1));
        assert!(matches!(err, Err(Error::EmptyCube(_))));
        let bg = background(1, 1, 1, &standard_box(1, 1), 1e-9).unwrap();
        assert!(construct_mu_k(&mu.plus(&bg).unwrap(), &dirac0(), 1, 1, &standard_box(1, 1)).is_ok());
    }

    #[test]
    fn candidate_scaling() {
        let mu = AtomicMeasure::from_atoms(1, &[([-1.0], 2.0), ([0.0], 1.0), ([1.0], 5.0)]).unwrap();
        let q = CubeId::unit(1, 1);
        let (c, w) = candidate_cw(&mu, &dirac0(), 1, &q).unwrap();
        let (c2, w2) = candidate_cw(&mu.scaled(4.0).unwrap(), &dirac0(), 1, &q).unwrap();
        assert_eq!(w, w2);
        assert_abs_diff_eq!(c2, c / 4.0, epsilon = 1e-15);
        assert_eq!(w.as_slice(), &[1.0, 2.0, 5.0]);
    }

    #[test]
    fn exactness_at_interior_and_edge_cubes() {
        let mu = lebesgue(2, 1.0 / 9.0);
        let window = standard_box(2, 1);
        let mk = construct_mu_k(&mu, &dirac0(), 1, 1, &window).unwrap();
        let q = CubeId::new(1, 1, vec![0]);
        let cert = exactness_check(&mk, &dirac0(), 1, 1, &q, &window).unwrap();
        let ev = cert.evidence.as_ref().unwrap();
        assert!(cert.passed());
        assert!(ev.distance <= 1e-9);
        assert_abs_diff_eq!(ev.threshold, 1.0 / 24.0 / 48.0, epsilon = 1e-15);
        assert!(ev.outer_mass_close() && ev.inner_mass_close() && ev.central_ratio_within());
        let edge = CubeId::new(1, 1, vec![13]);
        let cert = exactness_check(&mk, &dirac0(), 1, 1, &edge, &window).unwrap();
        assert_eq!(cert.status, CertificateStatus::NotApplicable);
    }

    #[test]
    fn perturbation_raises_distance_by_a_transport_amount() {
        let mu = lebesgue(2, 1.0 / 9.0);
        let window = standard_box(2, 1);
        let mk = construct_mu_k(&mu, &dirac0(), 1, 1, &window).unwrap();
        let q = CubeId::new(1, 1, vec![0]);
        let delta = 1e-3;
        let moved: Vec<(Vec<f64>, f64)> = mk
            .atoms()
            .map(|(p, w)| {
                let shift = if p[0].abs() < 1e-12 { delta } else { 0.0 };
                (vec![p[0] + shift], w)
            })
            .collect();
        let moved = AtomicMeasure::from_atoms(1, &moved).unwrap();
        let cert = exactness_check(&moved, &dirac0(), 1, 1, &q, &window).unwrap();
        let ev = cert.evidence.unwrap();
        // The moved atom has mass 1/3 and travels delta / r after the blow-up.
        let bound = ev.c * (1.0 / 3.0) * delta / blowup_radius(1, 1);
        assert!(ev.distance > 0.0);
        assert!(ev.distance <= bound + 1e-12);
    }

    #[test]
    fn certification_of_a_constructed_measure() {
        let mu = lebesgue(3, 1.0 / 27.0);
        let nu = sample_s(1, &standard_box(3, 1), 1.0 / 9.0, 8).unwrap().measure;
        let window = standard_box(3, 1);
        let mk = construct_mu_k(&mu, &nu, 1, 2, &window).unwrap();
        let m = certify_r_membership(&mk, &nu, 1, 2, 3, &window, None).unwrap();
        let Membership::Certified { k, certificates, .. } = m else {
            panic!("not certified")
        };
        assert_eq!(k, 2);
        assert_eq!(certificates.len(), 27);
        let m = certify_r_membership(&mu, &dirac0(), 1, 1, 2, &window, None).unwrap();
        assert!(m.generation().is_none());
    }

    #[test]
    fn convergence_bound_and_fixed_point() {
        let mu = lebesgue(3, 1.0 / 81.0);
        let nu = sample_s(1, &standard_box(2, 1), 1.0 / 9.0, 2).unwrap().measure;
        let rows = convergence_probe(&mu, &nu, 1, &[1, 2, 3], 1, &standard_box(3, 1)).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].distance < w[0].distance);
        }
        assert!(rows.iter().all(|r| r.within_bound()));
        // With nu a point mass at the origin and mu a lattice at cube centres,
        // the approximant reproduces mu.
        let mu = lebesgue(3, 1.0 / 9.0);
        let rows = convergence_probe(&mu, &dirac0(), 1, &[2], 1, &standard_box(3, 1)).unwrap();
        assert!(rows[0].distance < 1e-12);
    }

    #[test]
    fn tangent_probe_on_constructed_measure() {
        let mu = lebesgue(3, 1.0 / 27.0);
        let nu = sample_s(1, &standard_box(3, 1), 1.0 / 9.0, 3).unwrap().measure;
        let window = standard_box(3, 1);
        let mk = construct_mu_k(&mu, &nu, 1, 2, &window).unwrap();
        let x = CubeId::new(1, 2, vec![2]).center();
        let rows = tangent_probe(&mk, &x, &nu, &[1], 2, 1, &window).unwrap();
        let row = &rows[0];
        assert!(row.in_central_cube);
        assert!(row.distance <= row.bound.unwrap());
        assert!(row.best_distance <= row.distance + 1e-9);
    }

    #[test]
    fn tangent_probe_at_an_isolated_atom() {
        let mu = AtomicMeasure::dirac(&[0.2], 1.0).unwrap();
        let nu = sample_s(1, &standard_box(2, 1), 1.0 / 9.0, 3).unwrap().measure;
        let window = standard_box(3, 1);
        let rows = tangent_probe(&mu, &[0.2], &nu, &[1], 2, 1, &window).unwrap();
        assert!(rows[0].best_distance > 0.1);
    }
}
