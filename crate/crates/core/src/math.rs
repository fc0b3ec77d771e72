//! Scalar special functions used by the density algebra.
//!
//! Everything here goes through `libm` so the crate stays `no_std`.

use core::f64::consts::{PI, SQRT_2};

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut w = a - two_pi * libm::floor(a / two_pi);
    // w in [0, 2pi)
    if w > PI {
        w -= two_pi;
    }
    w
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(-z / SQRT_2)
}

/// `P(a < Z <= b)` for a standard normal `Z`, computed on the tail that keeps
/// precision.
pub fn normal_interval(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a >= 0.0 {
        // both in the upper tail: use survival functions
        normal_cdf(-a) - normal_cdf(-b)
    } else {
        normal_cdf(b) - normal_cdf(a)
    }
}

// Gauss-Legendre abscissae (negative half) and weights for 6, 12 and 20 points.
const GL_W: [[f64; 10]; 3] = [
    [
        0.1713244923791705,
        0.3607615730481384,
        0.4679139345726904,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.04717533638651177,
        0.1069393259953183,
        0.1600783285433464,
        0.2031674267230659,
        0.2334925365383547,
        0.2491470458134029,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.01761400713915212,
        0.04060142980038694,
        0.06267204833410906,
        0.08327674157670475,
        0.1019301198172404,
        0.1181945319615184,
        0.1316886384491766,
        0.1420961093183821,
        0.1491729864726037,
        0.1527533871307259,
    ],
];
const GL_X: [[f64; 10]; 3] = [
    [
        -0.9324695142031522,
        -0.6612093864662647,
        -0.238619186083197,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        -0.9815606342467191,
        -0.904117256370475,
        -0.769902674194305,
        -0.5873179542866171,
        -0.3678314989981802,
        -0.1252334085114692,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        -0.9931285991850949,
        -0.9639719272779138,
        -0.912234428251326,
        -0.8391169718222188,
        -0.7463319064601508,
        -0.636053680726515,
        -0.5108670019508271,
        -0.3737060887154196,
        -0.2277858511416451,
        -0.07652652113349733,
    ],
];

/// Upper bivariate normal probability `P(X > h, Y > k)` for standard
/// marginals with correlation `r` (Genz's BVND, finite `h`, `k`).
fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let (ng, lg) = if libm::fabs(r) < 0.3 {
        (0, 3)
    } else if libm::fabs(r) < 0.75 {
        (1, 6)
    } else {
        (2, 10)
    };
    let w = &GL_W[ng];
    let x = &GL_X[ng];
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if libm::fabs(r) < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = libm::asin(r);
        for i in 0..lg {
            let sn = libm::sin(asr * (x[i] + 1.0) / 2.0);
            bvn += w[i] * libm::exp((sn * hk - hs) / (1.0 - sn * sn));
            let sn = libm::sin(asr * (-x[i] + 1.0) / 2.0);
            bvn += w[i] * libm::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
        bvn * asr / (2.0 * two_pi) + normal_cdf(-h) * normal_cdf(-k)
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if libm::fabs(r) < 1.0 {
            let as_ = (1.0 - r) * (1.0 + r);
            let mut a = libm::sqrt(as_);
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 16.0;
            bvn = a * libm::exp(-(bs / as_ + hk) / 2.0) * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
            if hk > -160.0 {
                let b = libm::sqrt(bs);
                bvn -= libm::exp(-hk / 2.0) * libm::sqrt(two_pi) * normal_cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
            }
            a /= 2.0;
            for i in 0..lg {
                let xs = (a * (x[i] + 1.0)) * (a * (x[i] + 1.0));
                let rs = libm::sqrt(1.0 - xs);
                bvn += a
                    * w[i]
                    * (libm::exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs
                        - libm::exp(-(bs / xs + hk) / 2.0) * (1.0 + c * xs * (1.0 + d * xs)));
                let xs = as_ * (-x[i] + 1.0) * (-x[i] + 1.0) / 4.0;
                let rs = libm::sqrt(1.0 - xs);
                bvn += a
                    * w[i]
                    * libm::exp(-(bs / xs + hk) / 2.0)
                    * (libm::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs - (1.0 + c * xs * (1.0 + d * xs)));
            }
            bvn = -bvn / two_pi;
        }
        if r > 0.0 {
            bvn += normal_cdf(-f64::max(h, k));
        } else if r < 0.0 {
            bvn = -bvn + f64::max(0.0, normal_cdf(-h) - normal_cdf(-k));
        }
        bvn
    }
}

/// Bivariate standard normal CDF `P(X <= x, Y <= y)` with correlation `rho`.
/// Infinite arguments are allowed.
pub fn bivariate_normal_cdf(x: f64, y: f64, rho: f64) -> f64 {
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return normal_cdf(y);
    }
    if y == f64::INFINITY {
        return normal_cdf(x);
    }
    if rho == 0.0 {
        return normal_cdf(x) * normal_cdf(y);
    }
    bvn_upper(-x, -y, rho).clamp(0.0, 1.0)
}

/// Probability mass of a bivariate Gaussian `N(mean, cov)` inside the
/// axis-aligned rectangle `(x0, x1] x (y0, y1]`. Bounds may be infinite.
pub fn gaussian_rectangle_mass(mean: [f64; 2], cov: [[f64; 2]; 2], x: (f64, f64), y: (f64, f64)) -> f64 {
    let sx = libm::sqrt(cov[0][0]);
    let sy = libm::sqrt(cov[1][1]);
    if !(sx > 0.0) || !(sy > 0.0) {
        // degenerate: point mass along the collapsed axis
        let inside = |v: f64, (lo, hi): (f64, f64)| lo < v && v <= hi;
        return match (sx > 0.0, sy > 0.0) {
            (false, false) => f64::from(u8::from(inside(mean[0], x) && inside(mean[1], y))),
            (true, false) => {
                if inside(mean[1], y) {
                    normal_interval((x.0 - mean[0]) / sx, (x.1 - mean[0]) / sx)
                } else {
                    0.0
                }
            }
            (false, true) => {
                if inside(mean[0], x) {
                    normal_interval((y.0 - mean[1]) / sy, (y.1 - mean[1]) / sy)
                } else {
                    0.0
                }
            }
            (true, true) => unreachable!(),
        };
    }
    let a0 = (x.0 - mean[0]) / sx;
    let a1 = (x.1 - mean[0]) / sx;
    let b0 = (y.0 - mean[1]) / sy;
    let b1 = (y.1 - mean[1]) / sy;
    let rho = (cov[0][1] / (sx * sy)).clamp(-1.0, 1.0);
    if libm::fabs(rho) < 1e-14 {
        return normal_interval(a0, a1) * normal_interval(b0, b1);
    }
    let f = |u: f64, v: f64| bivariate_normal_cdf(u, v, rho);
    let p = f(a1, b1) - f(a0, b1) - f(a1, b0) + f(a0, b0);
    p.clamp(0.0, 1.0)
}

/// Regularized lower incomplete gamma function `P(a, x)`.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    let ln_prefix = a * libm::log(x) - x - libm::lgamma(a);
    if x < a + 1.0 {
        // series
        let mut ap = a;
        let mut sum = 1.0 / a;
        let mut del = sum;
        for _ in 0..1000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if libm::fabs(del) < libm::fabs(sum) * 1e-16 {
                break;
            }
        }
        (sum * libm::exp(ln_prefix)).clamp(0.0, 1.0)
    } else {
        // continued fraction for Q, modified Lentz
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if libm::fabs(d) < tiny {
                d = tiny;
            }
            c = b + an / c;
            if libm::fabs(c) < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if libm::fabs(del - 1.0) < 1e-16 {
                break;
            }
        }
        (1.0 - libm::exp(ln_prefix) * h).clamp(0.0, 1.0)
    }
}

/// Chi-square CDF with `dof` degrees of freedom.
pub fn chi_square_cdf(x: f64, dof: u32) -> f64 {
    regularized_gamma_p(f64::from(dof) / 2.0, x / 2.0)
}

/// Quantile of the chi-square distribution: the `x` with `P(chi2_dof <= x) = p`.
/// Returns `+inf` for `p >= 1` and `0` for `p <= 0`.
pub fn chi_square_quantile(p: f64, dof: u32) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut lo = 0.0;
    let mut hi = f64::from(dof).max(1.0);
    while chi_square_cdf(hi, dof) < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi_square_cdf(mid, dof) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn chi_square_two_dof_closed_form() {
        // dof 2: cdf = 1 - exp(-x/2)
        for &p in &[0.1, 0.5, 0.95, 0.999] {
            let q = chi_square_quantile(p, 2);
            assert!((q - (-2.0 * libm::log(1.0 - p))).abs() < 1e-9, "p={p} q={q}");
        }
    }

    #[test]
    fn chi_square_four_dof_closed_form() {
        // dof 4: cdf = 1 - exp(-x/2)(1 + x/2)
        for &x in &[0.3, 2.0, 9.48772903678, 20.0] {
            let want = 1.0 - libm::exp(-x / 2.0) * (1.0 + x / 2.0);
            assert!((chi_square_cdf(x, 4) - want).abs() < 1e-13);
        }
    }

    #[test]
    fn bivariate_reduces_to_product_when_uncorrelated() {
        let p = bivariate_normal_cdf(0.3, -0.7, 0.0);
        assert!((p - normal_cdf(0.3) * normal_cdf(-0.7)).abs() < 1e-15);
    }

    #[test]
    fn bivariate_origin_closed_form() {
        // P(X<=0, Y<=0) = 1/4 + asin(rho) / (2 pi)
        for &rho in &[-0.95, -0.8, -0.5, -0.1, 0.2, 0.6, 0.9, 0.99] {
            let want = 0.25 + libm::asin(rho) / (2.0 * PI);
            let got = bivariate_normal_cdf(0.0, 0.0, rho);
            assert!((got - want).abs() < 1e-14, "rho={rho} got={got} want={want}");
        }
    }

    #[test]
    fn rectangle_mass_whole_plane_is_one() {
        let inf = f64::INFINITY;
        let m = gaussian_rectangle_mass([1.0, 2.0], [[4.0, 1.5], [1.5, 2.0]], (-inf, inf), (-inf, inf));
        assert!((m - 1.0).abs() < 1e-14);
    }
}
