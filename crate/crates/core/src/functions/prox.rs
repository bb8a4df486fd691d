use std::fmt;

use crate::error::{invalid, Result};
use crate::vecops::dist;

/// Relative slack when testing membership in `dom g*`. Aggregated dual
/// iterates are convex combinations of feasible points and can overshoot the
/// boundary by a few ulps.
const DOMAIN_SLACK: f64 = 1e-12;

/// Proper closed convex `g` with a cheap proximal map.
pub trait ProxTerm: Send + Sync + fmt::Debug {
    fn value(&self, v: &[f64]) -> f64;

    /// `out = prox_{gamma g}(v)`.
    fn prox_into(&self, v: &[f64], gamma: f64, out: &mut [f64]);

    /// `out = prox_{sigma g*}(v)`; by default through the Moreau identity
    /// `v - sigma prox_{g/sigma}(v/sigma)`.
    fn conj_prox_into(&self, v: &[f64], sigma: f64, out: &mut [f64]) {
        let scaled: Vec<f64> = v.iter().map(|vi| vi / sigma).collect();
        self.prox_into(&scaled, 1.0 / sigma, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = vi - sigma * *o;
        }
    }

    /// `g*(y)`, possibly `+inf`.
    fn conj_value(&self, y: &[f64]) -> f64;

    /// Euclidean projection onto `dom g*`.
    fn project_conj_domain(&self, y: &[f64], out: &mut [f64]);

    /// Rejects argument lengths the term cannot handle.
    fn check_dim(&self, _len: usize) -> Result<()> {
        Ok(())
    }

    fn prox(&self, v: &[f64], gamma: f64) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.prox_into(v, gamma, &mut out);
        out
    }

    fn conj_prox(&self, v: &[f64], sigma: f64) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.conj_prox_into(v, sigma, &mut out);
        out
    }
}

/// Norm of the Moreau residual `v - prox_{gamma g}(v) - gamma prox_{g*/gamma}(v/gamma)`.
pub fn moreau_check(term: &dyn ProxTerm, v: &[f64], gamma: f64) -> f64 {
    let p = term.prox(v, gamma);
    let scaled: Vec<f64> = v.iter().map(|vi| vi / gamma).collect();
    let q = term.conj_prox(&scaled, 1.0 / gamma);
    let recon: Vec<f64> = p.iter().zip(&q).map(|(pi, qi)| pi + gamma * qi).collect();
    dist(v, &recon)
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

/// `g(v) = mu |v|_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Norm {
    mu: f64,
}

impl L1Norm {
    pub fn new(mu: f64) -> Result<Self> {
        check_positive("l1 weight", mu)?;
        Ok(L1Norm { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl ProxTerm for L1Norm {
    fn value(&self, v: &[f64]) -> f64 {
        self.mu * v.iter().map(|x| x.abs()).sum::<f64>()
    }

    fn prox_into(&self, v: &[f64], gamma: f64, out: &mut [f64]) {
        let t = gamma * self.mu;
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = if vi.abs() <= t {
                0.0
            } else {
                vi - t * vi.signum()
            };
        }
    }

    fn conj_prox_into(&self, v: &[f64], _sigma: f64, out: &mut [f64]) {
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = vi.clamp(-self.mu, self.mu);
        }
    }

    fn conj_value(&self, y: &[f64]) -> f64 {
        let bound = self.mu * (1.0 + DOMAIN_SLACK);
        if y.iter().all(|yi| yi.abs() <= bound) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn project_conj_domain(&self, y: &[f64], out: &mut [f64]) {
        self.conj_prox_into(y, 1.0, out);
    }
}

/// Isotropic group norm `g(v) = mu sum_p |v_p|_2`. Entries are stacked by
/// channel, so group `p` collects indices `p, p + G, p + 2G, ...` where
/// `G = len / channels`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupL2 {
    mu: f64,
    channels: usize,
}

impl GroupL2 {
    pub fn new(mu: f64, channels: usize) -> Result<Self> {
        check_positive("group norm weight", mu)?;
        if channels == 0 {
            return Err(invalid("group norm needs at least one channel"));
        }
        Ok(GroupL2 { mu, channels })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    fn group_norms(&self, v: &[f64]) -> Vec<f64> {
        let groups = v.len() / self.channels;
        (0..groups)
            .map(|p| {
                (0..self.channels)
                    .map(|c| v[p + c * groups].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    fn scale_groups(&self, v: &[f64], factors: &[f64], out: &mut [f64]) {
        let groups = factors.len();
        for c in 0..self.channels {
            for (p, f) in factors.iter().enumerate() {
                let i = p + c * groups;
                out[i] = f * v[i];
            }
        }
    }
}

impl ProxTerm for GroupL2 {
    fn value(&self, v: &[f64]) -> f64 {
        self.mu * self.group_norms(v).iter().sum::<f64>()
    }

    fn prox_into(&self, v: &[f64], gamma: f64, out: &mut [f64]) {
        let t = gamma * self.mu;
        let factors: Vec<f64> = self
            .group_norms(v)
            .iter()
            .map(|&n| if n <= t { 0.0 } else { 1.0 - t / n })
            .collect();
        self.scale_groups(v, &factors, out);
    }

    fn conj_prox_into(&self, v: &[f64], _sigma: f64, out: &mut [f64]) {
        let factors: Vec<f64> = self
            .group_norms(v)
            .iter()
            .map(|&n| if n <= self.mu { 1.0 } else { self.mu / n })
            .collect();
        self.scale_groups(v, &factors, out);
    }

    fn conj_value(&self, y: &[f64]) -> f64 {
        let bound = self.mu * (1.0 + DOMAIN_SLACK);
        if self.group_norms(y).iter().all(|&n| n <= bound) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn project_conj_domain(&self, y: &[f64], out: &mut [f64]) {
        self.conj_prox_into(y, 1.0, out);
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len.is_multiple_of(self.channels) {
            Ok(())
        } else {
            Err(invalid(format!(
                "group norm with {} channels cannot act on length {len}",
                self.channels
            )))
        }
    }
}

/// `g = 0`; its conjugate is the indicator of `{0}`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroProx;

impl ProxTerm for ZeroProx {
    fn value(&self, _v: &[f64]) -> f64 {
        0.0
    }

    fn prox_into(&self, v: &[f64], _gamma: f64, out: &mut [f64]) {
        out.copy_from_slice(v);
    }

    fn conj_prox_into(&self, _v: &[f64], _sigma: f64, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn conj_value(&self, y: &[f64]) -> f64 {
        if y.iter().all(|&v| v == 0.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn project_conj_domain(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Minimises `gamma*mu*|u| + (u - v)^2 / 2` over a fine grid.
    fn scalar_prox_by_grid(v: f64, gamma: f64, mu: f64) -> f64 {
        let (lo, hi) = (v.min(0.0) - 1.0, v.max(0.0) + 1.0);
        let steps = 200_000;
        let obj = |u: f64| gamma * mu * u.abs() + 0.5 * (u - v).powi(2);
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=steps {
            let u = lo + (hi - lo) * i as f64 / steps as f64;
            let o = obj(u);
            if o < best.0 {
                best = (o, u);
            }
        }
        let o0 = obj(0.0);
        if o0 <= best.0 {
            0.0
        } else {
            best.1
        }
    }

    #[test]
    fn soft_threshold_examples() {
        let g = L1Norm::new(1.0).unwrap();
        assert_eq!(
            g.prox(&[3.0, -0.5, 1.0, -2.0], 1.0),
            vec![2.0, 0.0, 0.0, -1.0]
        );
        assert_eq!(
            g.conj_prox(&[3.0, -0.5, 1.0, -2.0], 7.0),
            vec![1.0, -0.5, 1.0, -1.0]
        );
    }

    #[test]
    fn soft_threshold_matches_grid_search() {
        for &(v, gamma, mu) in &[
            (0.3, 1.0, 0.5),
            (2.5, 0.4, 1.5),
            (-1.7, 2.0, 0.25),
            (0.0, 1.0, 1.0),
        ] {
            let g = L1Norm::new(mu).unwrap();
            let p = g.prox(&[v], gamma)[0];
            assert!(
                (p - scalar_prox_by_grid(v, gamma, mu)).abs() < 1e-4,
                "v={v}"
            );
        }
    }

    #[test]
    fn group_prox_matches_closed_form() {
        let g = GroupL2::new(1.0, 2).unwrap();
        // groups: (v0, v2) and (v1, v3)
        let v = [3.0, 0.3, 4.0, 0.4];
        let p = g.prox(&v, 1.0);
        let expect = [3.0 * 0.8, 0.0, 4.0 * 0.8, 0.0];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((g.value(&v) - 5.5).abs() < 1e-15);
        let q = g.conj_prox(&v, 3.0);
        assert!((q[0] - 0.6).abs() < 1e-15 && (q[2] - 0.8).abs() < 1e-15);
        assert!((q[1] - 0.3).abs() < 1e-15 && (q[3] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn group_norm_single_channel_is_l1() {
        let g = GroupL2::new(0.7, 1).unwrap();
        let l1 = L1Norm::new(0.7).unwrap();
        let v = [1.0, -0.2, 0.5, -3.0];
        assert!(dist(&g.prox(&v, 1.3), &l1.prox(&v, 1.3)) < 1e-15);
        assert!((g.value(&v) - l1.value(&v)).abs() < 1e-15);
    }

    #[test]
    fn group_norm_rejects_ragged_length() {
        let g = GroupL2::new(1.0, 2).unwrap();
        assert!(g.check_dim(5).is_err());
        assert!(g.check_dim(6).is_ok());
    }

    #[test]
    fn conjugate_values() {
        let g = L1Norm::new(2.0).unwrap();
        assert_eq!(g.conj_value(&[2.0, -1.0]), 0.0);
        assert_eq!(g.conj_value(&[2.1, 0.0]), f64::INFINITY);
        let z = ZeroProx;
        assert_eq!(z.conj_value(&[0.0, 0.0]), 0.0);
        assert_eq!(z.conj_value(&[1e-300]), f64::INFINITY);
        assert_eq!(z.conj_prox(&[5.0, -1.0], 2.0), vec![0.0, 0.0]);
        assert_eq!(z.prox(&[5.0, -1.0], 2.0), vec![5.0, -1.0]);
    }

    #[test]
    fn bad_weights_are_rejected() {
        assert!(L1Norm::new(0.0).is_err());
        assert!(L1Norm::new(f64::NAN).is_err());
        assert!(GroupL2::new(1.0, 0).is_err());
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        (1usize..6).prop_flat_map(|groups| prop::collection::vec(-10.0f64..10.0, groups * 2))
    }

    proptest! {
        #[test]
        fn moreau_identity_l1(v in prop::collection::vec(-10.0f64..10.0, 1..20),
                              gamma in 0.01f64..10.0, mu in 0.01f64..5.0) {
            let g = L1Norm::new(mu).unwrap();
            prop_assert!(moreau_check(&g, &v, gamma) <= 1e-10);
        }

        #[test]
        fn moreau_identity_group(v in vec_strategy(), gamma in 0.01f64..10.0, mu in 0.01f64..5.0) {
            let g = GroupL2::new(mu, 2).unwrap();
            prop_assert!(moreau_check(&g, &v, gamma) <= 1e-10);
        }

        #[test]
        fn default_conjugate_prox_agrees_with_direct(v in vec_strategy(), sigma in 0.01f64..10.0) {
            #[derive(Debug)]
            struct ViaMoreau(GroupL2);
            impl ProxTerm for ViaMoreau {
                fn value(&self, v: &[f64]) -> f64 { self.0.value(v) }
                fn prox_into(&self, v: &[f64], gamma: f64, out: &mut [f64]) { self.0.prox_into(v, gamma, out) }
                fn conj_value(&self, y: &[f64]) -> f64 { self.0.conj_value(y) }
                fn project_conj_domain(&self, y: &[f64], out: &mut [f64]) { self.0.project_conj_domain(y, out) }
            }
            let g = GroupL2::new(0.8, 2).unwrap();
            let a = g.conj_prox(&v, sigma);
            let b = ViaMoreau(g).conj_prox(&v, sigma);
            prop_assert!(dist(&a, &b) <= 1e-10 * (1.0 + sigma));
        }

        #[test]
        fn prox_is_firmly_nonexpansive(u in prop::collection::vec(-5.0f64..5.0, 6),
                                       v in prop::collection::vec(-5.0f64..5.0, 6),
                                       gamma in 0.01f64..5.0) {
            let g = GroupL2::new(1.0, 3).unwrap();
            let (pu, pv) = (g.prox(&u, gamma), g.prox(&v, gamma));
            let lhs: f64 = pu.iter().zip(&pv).map(|(a, b)| (a - b).powi(2)).sum();
            let rhs: f64 = pu.iter().zip(&pv).zip(u.iter().zip(&v))
                .map(|((a, b), (c, d))| (a - b) * (c - d)).sum();
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn conj_prox_lands_in_domain(v in vec_strategy(), sigma in 0.01f64..10.0) {
            let g = GroupL2::new(0.3, 2).unwrap();
            prop_assert_eq!(g.conj_value(&g.conj_prox(&v, sigma)), 0.0);
            let l = L1Norm::new(0.3).unwrap();
            prop_assert_eq!(l.conj_value(&l.conj_prox(&v, sigma)), 0.0);
        }
    }
}
