//! Radial solutions of `f(λ(A^u)) = 1`: the eigenvalues of a radial profile,
//! the implicit second-order ODE and a shooting integrator from the origin.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{bubble_from_initial_conditions, bubble_value};
use crate::operators::{mu_star, CurvatureOperator, EigenVec};
use crate::roots::expand_and_solve;

/// Doublings allowed when bracketing `v″`.
pub const VPP_MAX_DOUBLINGS: usize = 60;
/// Stop a profile once `1 + beta·r²` falls below this level.
pub const BLOWUP_GUARD: f64 = 0.1;
pub const DEFAULT_R_MAX: f64 = 0.9;

/// `(λ₁, λ₂, …, λ₂)` of `A^u` for `u(x) = v(|x|)` at radius `r`.
pub fn radial_eigenvalues(v: f64, vp: f64, vpp: f64, r: f64, n: usize) -> Result<EigenVec> {
    if n < 3 {
        return Err(Error::Domain(format!("n must be at least 3, got {n}")));
    }
    if !(v > 0.0) {
        return Err(Error::Positivity { point: vec![r], value: v });
    }
    if r < 0.0 {
        return Err(Error::Domain(format!("radius must be nonnegative, got {r}")));
    }
    let nf = n as f64;
    let m = nf - 2.0;
    let hess = -2.0 / m * v.powf(-(nf + 2.0) / m);
    if r == 0.0 {
        if vp != 0.0 {
            return Err(Error::InconsistentInitialData(format!("v'(0) = {vp} must vanish")));
        }
        return EigenVec::constant(n, hess * vpp);
    }
    let w = v.powf(-2.0 * nf / m) * vp * vp;
    let l1 = hess * vpp + 2.0 * (nf - 1.0) / (m * m) * w;
    let l2 = hess * vp / r - 2.0 / (m * m) * w;
    let mut e = vec![l2; n];
    e[0] = l1;
    EigenVec::new(e)
}

/// The `v″` with `f(λ^v(r)) = 1`, bracketed outward from `hint`.
pub fn implicit_vpp(op: &CurvatureOperator, v: f64, vp: f64, r: f64, hint: f64) -> Result<f64> {
    let n = op.n();
    // probe validity of (v, vp, r) once so that data errors are not mistaken for cone exit
    radial_eigenvalues(v, vp, 0.0, r, n)?;
    let nf = n as f64;
    let dl = -2.0 / (nf - 2.0) * v.powf(-(nf + 2.0) / (nf - 2.0));
    let g = |w: f64| -> Option<f64> {
        let lam = radial_eigenvalues(v, vp, w, r, n).ok()?;
        op.value(&lam).ok().map(|f| f - 1.0)
    };
    let dg = |w: f64| -> Option<f64> {
        let lam = radial_eigenvalues(v, vp, w, r, n).ok()?;
        let grad = op.gradient(&lam).ok()?;
        Some(if r == 0.0 { dl * grad.iter().sum::<f64>() } else { dl * grad[0] })
    };
    let step = 1e-3 * (1.0 + hint.abs());
    expand_and_solve(g, Some(dg), hint, step, -1.0, VPP_MAX_DOUBLINGS).map_err(|_| Error::ConeExit {
        nodes: Vec::new(),
        eigenvalues: radial_eigenvalues(v, vp, hint, r, n).map(|e| vec![e.into_inner()]).unwrap_or_default(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "radius")]
pub enum ShootStatus {
    Complete,
    ConeExit(f64),
    PositivityLoss(f64),
    BlowupGuard(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialProfile {
    pub n: usize,
    pub operator: String,
    pub v0: f64,
    pub h: f64,
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub vp: Vec<f64>,
    pub vpp: Vec<f64>,
    pub status: ShootStatus,
}

#[derive(Serialize)]
struct ProfileMeta<'a> {
    n: usize,
    operator: &'a str,
    v0: f64,
    h: f64,
    nodes: usize,
    status: ShootStatus,
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,v,vp,vpp")?;
        for i in 0..self.len() {
            writeln!(out, "{:e},{:e},{:e},{:e}", self.r[i], self.v[i], self.vp[i], self.vpp[i])?;
        }
        Ok(())
    }

    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::to_value(ProfileMeta {
            n: self.n,
            operator: &self.operator,
            v0: self.v0,
            h: self.h,
            nodes: self.len(),
            status: self.status,
        })
        .expect("metadata serializes")
    }
}

fn vpp_at_origin(op: &CurvatureOperator, v0: f64) -> Result<f64> {
    let nf = op.n() as f64;
    let m = nf - 2.0;
    Ok(-m / 2.0 * v0.powf((nf + 2.0) / m) * mu_star(op)?)
}

/// Integrate `f(λ^v) = 1` from `r = 0` with `v(0) = v0`, `v′(0) = 0` by
/// classical RK4 in `(v, v′)`, solving for `v″` at every stage. The first
/// step uses the Taylor series through order four, whose coefficients are
/// fixed by `v(0)` and `v″(0)`.
pub fn shoot(op: &CurvatureOperator, v0: f64, r_max: f64, h: f64) -> Result<RadialProfile> {
    if !(v0 > 0.0) || !v0.is_finite() {
        return Err(Error::Domain(format!("v0 must be positive, got {v0}")));
    }
    if !(h > 0.0) || !(r_max > 0.0) || h > 1e-3 * r_max * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("need 0 < h <= 1e-3 r_max, got h = {h}, r_max = {r_max}")));
    }
    let n = op.n();
    let nf = n as f64;
    let steps = (r_max / h).round() as usize;
    let v2 = vpp_at_origin(op, v0)?;
    let v4 = 3.0 * nf * v2 * v2 / ((nf - 2.0) * v0);
    let beta = bubble_from_initial_conditions(v0, v2, n)?.beta;
    let mut profile = RadialProfile {
        n,
        operator: op.name().to_string(),
        v0,
        h,
        r: vec![0.0],
        v: vec![v0],
        vp: vec![0.0],
        vpp: vec![v2],
        status: ShootStatus::Complete,
    };

    let beyond_guard = |r: f64| beta < 0.0 && 1.0 + beta * r * r <= BLOWUP_GUARD;
    let rhs = |r: f64, v: f64, vp: f64, hint: f64| -> Result<f64> {
        if !(v > 0.0) {
            return Err(Error::Positivity { point: vec![r], value: v });
        }
        implicit_vpp(op, v, vp, r, hint)
    };

    for i in 1..=steps {
        let r = i as f64 * h;
        if beyond_guard(r) {
            profile.status = ShootStatus::BlowupGuard(profile.r[i - 1]);
            break;
        }
        let (v, vp, hint) = (profile.v[i - 1], profile.vp[i - 1], profile.vpp[i - 1]);
        let step = if i == 1 {
            let v1 = v0 + v2 * h * h / 2.0 + v4 * h.powi(4) / 24.0;
            let vp1 = v2 * h + v4 * h.powi(3) / 6.0;
            rhs(r, v1, vp1, v2 + v4 * h * h / 2.0).map(|a| (v1, vp1, a))
        } else {
            let r0 = r - h;
            (|| {
                let k1v = vp;
                let k1p = hint;
                let k2v = vp + 0.5 * h * k1p;
                let k2p = rhs(r0 + 0.5 * h, v + 0.5 * h * k1v, k2v, k1p)?;
                let k3v = vp + 0.5 * h * k2p;
                let k3p = rhs(r0 + 0.5 * h, v + 0.5 * h * k2v, k3v, k2p)?;
                let k4v = vp + h * k3p;
                let k4p = rhs(r, v + h * k3v, k4v, k3p)?;
                let v1 = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
                let vp1 = vp + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
                let a = rhs(r, v1, vp1, k4p)?;
                Ok((v1, vp1, a))
            })()
        };
        match step {
            Ok((v1, vp1, a)) => {
                profile.r.push(r);
                profile.v.push(v1);
                profile.vp.push(vp1);
                profile.vpp.push(a);
            }
            Err(Error::Positivity { .. }) => {
                profile.status = ShootStatus::PositivityLoss(profile.r[i - 1]);
                break;
            }
            Err(Error::ConeExit { .. }) => {
                profile.status = ShootStatus::ConeExit(profile.r[i - 1]);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(profile)
}

/// `sup_r |v(r) − w(r)|` against the bubble with the profile's `v(0)`, `v″(0)`.
pub fn compare_to_bubble(profile: &RadialProfile) -> Result<f64> {
    let p = bubble_from_initial_conditions(profile.v[0], profile.vpp[0], profile.n)?;
    let mut x = vec![0.0; profile.n];
    let mut worst = 0.0f64;
    for (r, v) in profile.r.iter().zip(&profile.v) {
        x[0] = *r;
        worst = worst.max((v - bubble_value(&p, &x)?).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::BubbleParams;
    use crate::operators::make_sigma_k_operator;

    fn bubble_data(p: &BubbleParams, r: f64) -> (f64, f64, f64) {
        let s = (p.n as f64 - 2.0) / 2.0;
        let d = 1.0 + p.beta * r * r;
        let v = (p.a / d).powf(s);
        let vp = -2.0 * s * p.beta * r * v / d;
        let vpp = -2.0 * s * p.beta * v / d * (1.0 - 2.0 * p.beta * (s + 1.0) * r * r / d);
        (v, vp, vpp)
    }

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(radial_eigenvalues(1.0, 0.0, 0.0, 0.5, 4).unwrap().into_inner(), vec![0.0; 4]);
        assert_eq!(radial_eigenvalues(1.0, 0.0, -1.0, 0.0, 3).unwrap().into_inner(), vec![2.0; 3]);
        assert!(matches!(
            radial_eigenvalues(1.0, 0.1, 0.0, 0.0, 3),
            Err(Error::InconsistentInitialData(_))
        ));
        let p = BubbleParams::centered(5, 1.3, 0.7).unwrap();
        for r in [0.01, 0.3, 2.0, 10.0] {
            let (v, vp, vpp) = bubble_data(&p, r);
            for l in radial_eigenvalues(v, vp, vpp, r, 5).unwrap().iter() {
                assert!((l - p.curvature_level()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lambda2_continuity_is_linear() {
        let p = BubbleParams::centered(4, 1.0, 1.0).unwrap();
        let mut errs = Vec::new();
        for h in [1e-2, 5e-3] {
            let (v, vpp0) = (1.0, bubble_data(&p, 0.0).2);
            // Taylor data at r = h without the fourth-order term
            let vp = vpp0 * h;
            let l = radial_eigenvalues(v, vp, vpp0, h, 4).unwrap();
            let l0 = radial_eigenvalues(v, 0.0, vpp0, 0.0, 4).unwrap();
            errs.push((l[1] - l0[1]).abs());
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 1.8 && ratio < 4.2, "{ratio}");
    }

    #[test]
    fn implicit_vpp_examples() {
        for n in 3..=6 {
            let op = make_sigma_k_operator(n, 1).unwrap();
            let w = implicit_vpp(&op, 1.0, 0.0, 0.0, 0.0).unwrap();
            let expect = -(n as f64 - 2.0) / (2.0 * n as f64);
            assert!((w - expect).abs() < 1e-13, "{w} {expect}");
            let op2 = make_sigma_k_operator(n, 2).unwrap();
            let w = implicit_vpp(&op2, 1.0, 0.0, 0.0, 0.0).unwrap();
            let expect = -(n as f64 - 2.0) / 2.0 * mu_star(&op2).unwrap();
            assert!((w - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn implicit_vpp_identity_along_bubble() {
        let op = make_sigma_k_operator(5, 2).unwrap();
        let level = 1.0 / mu_star(&op).unwrap();
        // 2 beta / a² = μ*
        let a = 1.4f64;
        let p = BubbleParams::centered(5, a, a * a / (2.0 * level)).unwrap();
        for i in 0..=90 {
            let r = i as f64 * 0.01;
            let (v, vp, vpp) = bubble_data(&p, r);
            let w = implicit_vpp(&op, v, vp, r, 0.9 * vpp).unwrap();
            assert!((w - vpp).abs() <= 1e-10 * (1.0 + vpp.abs()), "r={r}: {w} vs {vpp}");
        }
    }

    #[test]
    fn shoot_sigma1_matches_bubble() {
        let op = make_sigma_k_operator(3, 1).unwrap();
        let prof = shoot(&op, 1.0, 0.9, 1e-4).unwrap();
        assert_eq!(prof.status, ShootStatus::Complete);
        assert_eq!(prof.len(), 9001);
        let e = compare_to_bubble(&prof).unwrap();
        assert!(e <= 1e-6, "{e}");
    }

    #[test]
    fn shoot_is_deterministic() {
        let op = make_sigma_k_operator(4, 2).unwrap();
        let a = shoot(&op, 1.0, 0.9, 9e-4).unwrap();
        let b = shoot(&op, 1.0, 0.9, 9e-4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shoot_scale_covariance() {
        let n = 4;
        let op = make_sigma_k_operator(n, 2).unwrap();
        let s = 2.0f64;
        let m = (n as f64 - 2.0) / 2.0;
        let p = shoot(&op, s.powf(m), 0.45, 2e-4).unwrap();
        let q = shoot(&op, 1.0, 0.9, 4e-4).unwrap();
        assert_eq!(p.len(), q.len());
        let worst = p.v.iter().zip(&q.v).map(|(a, b)| (a - s.powf(m) * b).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-6, "{worst}");
    }

    #[test]
    fn rk4_order() {
        let op = make_sigma_k_operator(3, 1).unwrap();
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|h| compare_to_bubble(&shoot(&op, 1.0, 100.0, *h).unwrap()).unwrap())
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 3.5, "{errs:?}");
        }
    }

    #[test]
    fn compare_detects_perturbation() {
        let op = make_sigma_k_operator(3, 1).unwrap();
        let mut prof = shoot(&op, 1.0, 0.9, 9e-4).unwrap();
        let p = bubble_from_initial_conditions(1.0, prof.vpp[0], 3).unwrap();
        for i in 0..prof.len() {
            prof.v[i] = bubble_value(&p, &[prof.r[i], 0.0, 0.0]).unwrap();
        }
        assert!(compare_to_bubble(&prof).unwrap() <= 1e-15);
        prof.v[300] += 1e-3;
        assert!(compare_to_bubble(&prof).unwrap() >= 9e-4);
    }

    #[test]
    fn rejects_coarse_step() {
        let op = make_sigma_k_operator(3, 1).unwrap();
        assert!(shoot(&op, 1.0, 0.9, 1e-2).is_err());
    }

    #[test]
    fn csv_and_metadata() {
        let op = make_sigma_k_operator(3, 1).unwrap();
        let prof = shoot(&op, 1.0, 0.9, 9e-4).unwrap();
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("r,v,vp,vpp\n0e0,1e0,0e0,"));
        assert_eq!(text.lines().count(), prof.len() + 1);
        let meta = prof.metadata_json();
        assert_eq!(meta["status"]["kind"], "complete");
        assert_eq!(meta["n"], 3);
    }
}
