//! Dissimilarity measures on the HPD manifold.
//!
//! A total Bregman divergence rescales the Bregman divergence of a strictly
//! convex potential `F` by the slope of its graph at the second argument:
//!
//! ```text
//! B_F(X, Y) = F(X) − F(Y) − ⟨∇F(Y), X − Y⟩
//! δ_F(X, Y) = B_F(X, Y) / sqrt(1 + ‖∇F(Y)‖²)
//! ```
//!
//! | kind | F(X)              | ∇F(X) |
//! |------|-------------------|-------|
//! | TSL  | ½‖X‖²             | X     |
//! | TLD  | −ln det X         | −X⁻¹  |
//! | TVN  | tr(X Log X − X)   | Log X |
//!
//! The affine-invariant Riemannian distance `‖Log(X^{-1/2} Y X^{-1/2})‖`
//! completes the set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hpd::{frobenius_inner, CMatrix, Hermitian, Hpd};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceKind {
    Tsl,
    Tld,
    Tvn,
    Airm,
}

impl DivergenceKind {
    pub const ALL: [DivergenceKind; 4] = [Self::Tsl, Self::Tld, Self::Tvn, Self::Airm];
    pub const TOTAL_BREGMAN: [DivergenceKind; 3] = [Self::Tsl, Self::Tld, Self::Tvn];

    pub fn name(self) -> &'static str {
        match self {
            Self::Tsl => "TSL",
            Self::Tld => "TLD",
            Self::Tvn => "TVN",
            Self::Airm => "AIRM",
        }
    }

    pub fn is_symmetric(self) -> bool {
        self == Self::Airm
    }
}

impl std::fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn check_dims(x: &Hpd, y: &Hpd) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(x.dim(), y.dim()));
    }
    Ok(())
}

fn require_potential(kind: DivergenceKind) -> Result<()> {
    if kind == DivergenceKind::Airm {
        return Err(Error::UnsupportedKind("AIRM has no Bregman potential"));
    }
    Ok(())
}

/// The potential `F(X)`.
pub fn potential(kind: DivergenceKind, x: &Hpd) -> Result<f64> {
    require_potential(kind)?;
    let ev = x.eigenvalues();
    Ok(match kind {
        DivergenceKind::Tsl => 0.5 * x.norm().powi(2),
        DivergenceKind::Tld => -x.log_det(),
        DivergenceKind::Tvn => ev.iter().map(|&l| l * l.ln() - l).sum(),
        DivergenceKind::Airm => unreachable!(),
    })
}

/// The gradient `∇F(X)`, Hermitian on the HPD domain.
pub fn potential_gradient(kind: DivergenceKind, x: &Hpd) -> Result<Hermitian> {
    require_potential(kind)?;
    Ok(match kind {
        DivergenceKind::Tsl => x.as_hermitian().clone(),
        DivergenceKind::Tld => x.inverse().as_hermitian().scale(-1.0),
        DivergenceKind::Tvn => x.log(),
        DivergenceKind::Airm => unreachable!(),
    })
}

/// `‖∇F(X)‖`, read off the spectrum.
pub fn gradient_norm(kind: DivergenceKind, x: &Hpd) -> Result<f64> {
    require_potential(kind)?;
    let ev = x.eigenvalues();
    Ok(match kind {
        DivergenceKind::Tsl => x.norm(),
        DivergenceKind::Tld => ev.iter().map(|l| l.powi(-2)).sum::<f64>().sqrt(),
        DivergenceKind::Tvn => ev.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt(),
        DivergenceKind::Airm => unreachable!(),
    })
}

/// `sqrt(1 + ‖∇F(X)‖²)`, the total-divergence normalizer at `X`.
pub fn slope_weight(kind: DivergenceKind, x: &Hpd) -> Result<f64> {
    let g = gradient_norm(kind, x)?;
    Ok((1.0 + g * g).sqrt())
}

/// Clamps round-off negatives; larger negatives are an internal error.
fn clamp_nonnegative(value: f64, x: &Hpd, y: &Hpd) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::NonFinite(value));
    }
    if value >= 0.0 {
        return Ok(value);
    }
    let floor = 1e-10 * (1.0 + x.norm() + y.norm());
    if -value <= floor {
        Ok(0.0)
    } else {
        Err(Error::Inconsistent { value, floor })
    }
}

/// Generic Bregman divergence `F(X) − F(Y) − ⟨∇F(Y), X − Y⟩`.
pub fn bregman(kind: DivergenceKind, x: &Hpd, y: &Hpd) -> Result<f64> {
    check_dims(x, y)?;
    let grad = potential_gradient(kind, y)?;
    let diff: CMatrix = x.matrix() - y.matrix();
    let lin = frobenius_inner(grad.matrix(), &diff)?.re;
    let value = potential(kind, x)? - potential(kind, y)? - lin;
    clamp_nonnegative(value, x, y)
}

/// Closed-form Bregman numerators:
/// TSL `½‖X−Y‖²`, TLD `ln det(YX⁻¹) + tr(Y⁻¹X) − N`,
/// TVN `tr(X(Log X − Log Y) − X + Y)`.
pub fn bregman_closed_form(kind: DivergenceKind, x: &Hpd, y: &Hpd) -> Result<f64> {
    check_dims(x, y)?;
    require_potential(kind)?;
    let value = match kind {
        DivergenceKind::Tsl => 0.5 * (x.matrix() - y.matrix()).norm_squared(),
        DivergenceKind::Tld => {
            let ey = y.eigen();
            let rotated = ey.vectors.adjoint() * x.matrix() * &ey.vectors;
            let trace: f64 = ey
                .values
                .iter()
                .enumerate()
                .map(|(i, l)| rotated[(i, i)].re / l)
                .sum();
            y.log_det() - x.log_det() + trace - x.dim() as f64
        }
        DivergenceKind::Tvn => {
            let xlogx: f64 = x.eigenvalues().iter().map(|&l| l * l.ln()).sum();
            let xlogy = frobenius_inner(y.log().matrix(), x.matrix())?.re;
            xlogx - xlogy - x.trace() + y.trace()
        }
        DivergenceKind::Airm => unreachable!(),
    };
    clamp_nonnegative(value, x, y)
}

/// Total Bregman divergence `δ_F(X, Y)`.
pub fn tbd(kind: DivergenceKind, x: &Hpd, y: &Hpd) -> Result<f64> {
    let numerator = bregman_closed_form(kind, x, y)?;
    Ok(numerator / slope_weight(kind, y)?)
}

/// Geodesic distance `‖Log(X^{-1/2} Y X^{-1/2})‖` of the affine-invariant metric.
pub fn airm_distance(x: &Hpd, y: &Hpd) -> Result<f64> {
    check_dims(x, y)?;
    // both argument orders go through the same arithmetic, so the result is exactly symmetric
    let (x, y) = if entry_order(x, y).is_gt() { (y, x) } else { (x, y) };
    let w = x.inv_sqrt();
    let c = Hermitian::from_hermitian_part(&(w.matrix() * y.matrix() * w.matrix()));
    let e = c.eigen()?;
    if e.values[0] <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: e.values[0],
            floor: 0.0,
        });
    }
    Ok(e.values.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}

fn entry_order(x: &Hpd, y: &Hpd) -> std::cmp::Ordering {
    x.matrix()
        .iter()
        .zip(y.matrix().iter())
        .map(|(a, b)| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// `δ_F(X, Y)` for the Bregman kinds, `d(X, Y)` for AIRM.
pub fn dissimilarity(kind: DivergenceKind, x: &Hpd, y: &Hpd) -> Result<f64> {
    match kind {
        DivergenceKind::Airm => airm_distance(x, y),
        _ => tbd(kind, x, y),
    }
}

/// Roots `λ3` of `dissimilarity(center, diag(λ1, λ2, λ3)) = radius`, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct IsosurfaceRoots {
    pub roots: Vec<f64>,
}

impl IsosurfaceRoots {
    pub fn upper(&self) -> f64 {
        self.roots[self.roots.len() - 1]
    }

    pub fn lower(&self) -> Option<f64> {
        (self.roots.len() > 1).then(|| self.roots[0])
    }
}

pub const ISO_LAMBDA_MIN: f64 = 1e-6;
pub const ISO_LAMBDA_MAX: f64 = 1e6;
const ISO_GRID: usize = 2400;
const ISO_TOL: f64 = 1e-10;

/// Points on the isosurface of radius `radius` around `center` along the
/// diagonal ray `diag(λ1, λ2, ·)`, by bracketed bisection on `ln λ3` over
/// `[1e-6, 1e6]`.
pub fn isosurface_point(
    kind: DivergenceKind,
    center: &Hpd,
    radius: f64,
    eigen_direction: (f64, f64),
) -> Result<IsosurfaceRoots> {
    let (l1, l2) = eigen_direction;
    if center.dim() != 3 {
        return Err(Error::DimensionMismatch(center.dim(), 3));
    }
    if !(l1 > 0.0 && l2 > 0.0) || !(radius >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "isosurface needs positive λ1, λ2 and nonnegative radius, got ({l1}, {l2}), {radius}"
        )));
    }
    let eval = |t: f64| -> Result<f64> {
        let x = Hpd::from_real_diagonal(&[l1, l2, t.exp()])?;
        Ok(dissimilarity(kind, center, &x)? - radius)
    };
    let (lo, hi) = (ISO_LAMBDA_MIN.ln(), ISO_LAMBDA_MAX.ln());
    let step = (hi - lo) / ISO_GRID as f64;
    let ts: Vec<f64> = (0..=ISO_GRID).map(|i| lo + step * i as f64).collect();
    let fs: Vec<f64> = ts.iter().map(|&t| eval(t)).collect::<Result<_>>()?;

    let mut roots = Vec::new();
    for i in 0..ISO_GRID {
        let (fa, fb) = (fs[i], fs[i + 1]);
        if fa == 0.0 {
            roots.push(ts[i].exp());
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            roots.push(bisect(&eval, ts[i], ts[i + 1], fa)?.exp());
        }
    }
    if fs[ISO_GRID] == 0.0 {
        roots.push(ts[ISO_GRID].exp());
    }
    if roots.is_empty() {
        let (imin, &fmin) = fs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is nonempty");
        if fmin < 0.0 {
            return Err(Error::NoSolution { radius });
        }
        // tangent contact, e.g. radius 0 at the center itself
        let a = ts[imin.saturating_sub(1)];
        let b = ts[(imin + 1).min(ISO_GRID)];
        let (t, f) = golden_min(&eval, a, b)?;
        if f <= ISO_TOL {
            roots.push(t.exp());
        } else {
            return Err(Error::NonBracketable { radius });
        }
    }
    Ok(IsosurfaceRoots { roots })
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    while b - a > ISO_TOL {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

fn golden_min<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > ISO_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}
