//! Eigenvalues of a real upper Hessenberg matrix: diagonal balancing followed
//! by the Francis double-shift QR iteration (eigenvalues only, so updates are
//! restricted to the active window).

use num_complex::Complex64;

use crate::error::{Error, Result};

const RADIX: f64 = 2.0;

/// Dense row-major square matrix.
pub struct Dense {
    n: usize,
    a: Vec<f64>,
}

impl Dense {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut a = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            a.extend_from_slice(r);
        }
        Dense { n, a }
    }

    #[inline(always)]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline(always)]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * self.n + j]
    }
}

/// Scales rows and columns by powers of two so that row and column norms
/// are comparable. Preserves Hessenberg (and tridiagonal) structure.
pub fn balance(m: &mut Dense) {
    let n = m.n;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let (mut r, mut c) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += m.at(j, i).abs();
                    r += m.at(i, j).abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / RADIX;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let ginv = 1.0 / f;
                for j in 0..n {
                    *m.at_mut(i, j) *= ginv;
                }
                for j in 0..n {
                    *m.at_mut(j, i) *= f;
                }
            }
        }
    }
}

/// All eigenvalues of an upper Hessenberg matrix. Gives up after
/// `100 n` QR iterations in total.
pub fn hessenberg_eigenvalues(m: &mut Dense) -> Result<Vec<Complex64>> {
    let n = m.n;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(out);
    }
    let budget = 100 * n;
    let mut total = 0usize;

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += m.at(i, j).abs();
        }
    }

    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let hi = nn as usize;
            // small subdiagonal
            let mut l = hi;
            while l >= 1 {
                let mut s = m.at(l - 1, l - 1).abs() + m.at(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if m.at(l, l - 1).abs() + s == s {
                    *m.at_mut(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = m.at(hi, hi);
            if l == hi {
                out[hi] = Complex64::new(x + t, 0.0);
                nn -= 1;
                break;
            }
            let mut y = m.at(hi - 1, hi - 1);
            let mut w = m.at(hi, hi - 1) * m.at(hi - 1, hi);
            if l + 1 == hi {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    let lo = x + z;
                    let up = if z != 0.0 { x - w / z } else { lo };
                    out[hi - 1] = Complex64::new(lo, 0.0);
                    out[hi] = Complex64::new(up, 0.0);
                } else {
                    out[hi - 1] = Complex64::new(x + p, -z);
                    out[hi] = Complex64::new(x + p, z);
                }
                nn -= 2;
                break;
            }

            if total >= budget {
                return Err(Error::IterationLimit {
                    context: format!("Hessenberg QR, order {n}, {budget} iterations"),
                });
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 0..=hi {
                    *m.at_mut(i, i) -= x;
                }
                let s = m.at(hi, hi - 1).abs() + m.at(hi - 1, hi - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total += 1;

            let mut mm = hi - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = m.at(mm, mm);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / m.at(mm + 1, mm) + m.at(mm, mm + 1);
                q = m.at(mm + 1, mm + 1) - z - rr - ss;
                r = m.at(mm + 2, mm + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if mm == l {
                    break;
                }
                let u = m.at(mm, mm - 1).abs() * (q.abs() + r.abs());
                let v =
                    p.abs() * (m.at(mm - 1, mm - 1).abs() + z.abs() + m.at(mm + 1, mm + 1).abs());
                if u + v == v {
                    break;
                }
                mm -= 1;
            }
            for i in mm + 2..=hi {
                *m.at_mut(i, i - 2) = 0.0;
                if i != mm + 2 {
                    *m.at_mut(i, i - 3) = 0.0;
                }
            }

            let mut k = mm;
            while k < hi {
                if k != mm {
                    p = m.at(k, k - 1);
                    q = m.at(k + 1, k - 1);
                    r = if k + 1 != hi { m.at(k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == mm {
                        if l != mm {
                            *m.at_mut(k, k - 1) = -m.at(k, k - 1);
                        }
                    } else {
                        *m.at_mut(k, k - 1) = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=hi {
                        let mut pp = m.at(k, j) + q * m.at(k + 1, j);
                        if k + 1 != hi {
                            pp += r * m.at(k + 2, j);
                            *m.at_mut(k + 2, j) -= pp * z;
                        }
                        *m.at_mut(k + 1, j) -= pp * y;
                        *m.at_mut(k, j) -= pp * x;
                    }
                    let imax = if hi < k + 3 { hi } else { k + 3 };
                    for i in l..=imax {
                        let mut pp = x * m.at(i, k) + y * m.at(i, k + 1);
                        if k + 1 != hi {
                            pp += z * m.at(i, k + 2);
                            *m.at_mut(i, k + 2) -= pp * r;
                        }
                        *m.at_mut(i, k + 1) -= pp * q;
                        *m.at_mut(i, k) -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(out)
}
