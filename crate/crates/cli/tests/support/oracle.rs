//! Straight-line reference evaluation of the mixed-type distances on tiny
//! tables. Shares no code with the library: every statistic and rule is
//! recomputed here from plain vectors.

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OKind {
    BinSym,
    BinAsym,
    Nominal(usize),
    Ordinal(usize),
    Numeric,
}

#[derive(Debug, Clone)]
pub struct OCol {
    pub name: String,
    pub kind: OKind,
    /// Recipient cells (category codes, 0/1 or numbers).
    pub a: Vec<Option<f64>>,
    /// Donor cells.
    pub b: Vec<Option<f64>>,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OScale {
    Range,
    Iqr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OMethod {
    Std,
    IqrCapped,
    Kde { c: f64, scale: OScale },
    Knn { k: Option<usize>, scale: OScale, symmetric: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OOrdinal {
    Kr,
    Podani,
}

#[derive(Debug, Clone, Copy)]
pub struct OConfig {
    pub method: OMethod,
    pub ordinal: OOrdinal,
    /// `Some((scale, ordinal_as_numeric))` selects the two-step distance.
    pub conditional: Option<(OScale, bool)>,
}

/// Pooled observed values of a column.
fn pooled(col: &OCol) -> Vec<f64> {
    col.a.iter().chain(col.b.iter()).flatten().copied().collect()
}

fn type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

struct NumRef {
    sorted: Vec<f64>,
    range: f64,
    iqr: f64,
    sd: f64,
}

fn num_ref(col: &OCol) -> NumRef {
    let mut v = pooled(col);
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    let iqr = type7(&v, 0.75) - type7(&v, 0.25);
    NumRef {
        range: v[n - 1] - v[0],
        iqr: if iqr < 0.0 { 0.0 } else { iqr },
        sd,
        sorted: v,
    }
}

fn bandwidth(r: &NumRef, c: f64) -> f64 {
    let n = r.sorted.len();
    if n < 2 {
        return 0.0;
    }
    let robust = r.iqr / 1.34;
    let spread = if r.sd > 0.0 && robust > 0.0 {
        r.sd.min(robust)
    } else if r.sd > 0.0 {
        r.sd
    } else {
        robust
    };
    c * (n as f64).powf(-0.2) * spread
}

/// k-th smallest distance from `x` to the reference values, one copy of `x`
/// itself removed; infinite when there are fewer than k others.
fn knn_radius(r: &NumRef, x: f64, k: usize) -> f64 {
    let mut d: Vec<f64> = r.sorted.iter().map(|y| (x - y).abs()).collect();
    if let Some(p) = r.sorted.iter().position(|&y| y == x) {
        d.remove(p);
    }
    d.sort_by(|p, q| p.partial_cmp(q).unwrap());
    if k > d.len() {
        f64::INFINITY
    } else {
        d[k - 1]
    }
}

fn over(a: f64, g: f64) -> f64 {
    if g > 0.0 {
        let q = a / g;
        if q > 1.0 {
            1.0
        } else {
            q
        }
    } else if a == 0.0 {
        0.0
    } else {
        1.0
    }
}

fn numeric_d(r: &NumRef, method: OMethod, xi: f64, xj: f64) -> f64 {
    let a = (xi - xj).abs();
    let g = |s: OScale| match s {
        OScale::Range => r.range,
        OScale::Iqr => r.iqr,
    };
    match method {
        OMethod::Std => over(a, r.range),
        OMethod::IqrCapped => {
            if r.iqr > 0.0 && a < r.iqr {
                a / r.iqr
            } else if a == 0.0 {
                0.0
            } else {
                1.0
            }
        }
        OMethod::Kde { c, scale } => {
            if a <= bandwidth(r, c) {
                0.0
            } else {
                over(a, g(scale))
            }
        }
        OMethod::Knn { k, scale, symmetric } => {
            let n = r.sorted.len();
            let k = k.unwrap_or_else(|| {
                let k = (n as f64).sqrt().round() as usize;
                if n >= 2 {
                    k.max(1).min(n - 1)
                } else {
                    1
                }
            });
            let inside = a <= knn_radius(r, xi, k) || (symmetric && a <= knn_radius(r, xj, k));
            if inside {
                0.0
            } else {
                over(a, g(scale))
            }
        }
    }
}

/// Exact fraction `num / den`, `den > 0`.
#[derive(Debug, Clone, Copy)]
struct Frac {
    num: i128,
    den: i128,
}

impl Frac {
    fn add(self, o: Frac) -> Frac {
        Frac {
            num: self.num * o.den + o.num * self.den,
            den: self.den * o.den,
        }
    }
    fn le(self, o: Frac) -> bool {
        self.num * o.den <= o.num * self.den
    }
    fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Podani midranks of the pooled codes: category -> average 1-based
/// position in the sorted pooled sample, as an exact half-integer (x2).
fn midranks_x2(col: &OCol, n_cat: usize) -> (Vec<Option<i128>>, i128) {
    let mut codes: Vec<usize> = pooled(col).into_iter().map(|v| v as usize).collect();
    codes.sort();
    let out: Vec<Option<i128>> = (0..n_cat)
        .map(|c| {
            let pos: Vec<usize> = codes.iter().enumerate().filter(|(_, &x)| x == c).map(|(i, _)| i + 1).collect();
            // mean of consecutive positions first..last = (first + last) / 2
            (!pos.is_empty()).then(|| (pos[0] + pos[pos.len() - 1]) as i128)
        })
        .collect();
    let present: Vec<i128> = out.iter().flatten().copied().collect();
    let span = present.iter().max().unwrap() - present.iter().min().unwrap();
    (out, span)
}

/// Categorical-type per-variable distance as an exact fraction; `None`
/// when the variable is not valid for the pair.
fn cat_d(col: &OCol, ordinal: OOrdinal, xi: f64, xj: f64) -> Option<Frac> {
    let (i, j) = (xi as i128, xj as i128);
    match col.kind {
        OKind::BinSym | OKind::Nominal(_) => Some(Frac {
            num: (i != j) as i128,
            den: 1,
        }),
        OKind::BinAsym => {
            if i == 0 && j == 0 {
                None
            } else {
                Some(Frac {
                    num: !(i == 1 && j == 1) as i128,
                    den: 1,
                })
            }
        }
        OKind::Ordinal(n_cat) => match ordinal {
            OOrdinal::Kr => Some(Frac {
                num: (i - j).abs(),
                den: n_cat as i128 - 1,
            }),
            OOrdinal::Podani => {
                let (m, span) = midranks_x2(col, n_cat);
                if span == 0 {
                    None
                } else {
                    let diff = (m[i as usize].unwrap() - m[j as usize].unwrap()).abs();
                    Some(Frac { num: diff, den: span })
                }
            }
        },
        OKind::Numeric => unreachable!(),
    }
}

/// Per-variable `(d, weight)` of column `col` for pair (i, j), or `None`.
fn per_var(col: &OCol, cfg: &OConfig, method: OMethod, i: usize, j: usize) -> Option<f64> {
    let (xi, xj) = (col.a[i]?, col.b[j]?);
    match col.kind {
        OKind::Numeric => Some(numeric_d(&num_ref(col), method, xi, xj)),
        _ => cat_d(col, cfg.ordinal, xi, xj).map(Frac::to_f64),
    }
}

fn gower(cols: &[&OCol], cfg: &OConfig, method: OMethod, weighted: bool, i: usize, j: usize) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for c in cols {
        let w = if weighted { c.weight } else { 1.0 };
        if let Some(d) = per_var(c, cfg, method, i, j) {
            num += w * d;
            den += w;
        }
    }
    if den > 0.0 {
        Some(num / den)
    } else {
        None
    }
}

/// Full recipient x donor table.
pub fn oracle_matrix(cols: &[OCol], cfg: &OConfig) -> Vec<Vec<Option<f64>>> {
    let n_a = cols[0].a.len();
    let n_b = cols[0].b.len();
    let all: Vec<&OCol> = cols.iter().collect();
    let Some((scale, ord_numeric)) = cfg.conditional else {
        return (0..n_a)
            .map(|i| (0..n_b).map(|j| gower(&all, cfg, cfg.method, true, i, j)).collect())
            .collect();
    };
    let is_cat = |c: &OCol| match c.kind {
        OKind::Numeric => false,
        OKind::Ordinal(_) => !ord_numeric,
        _ => true,
    };
    let cat: Vec<&OCol> = cols.iter().filter(|c| is_cat(c)).collect();
    let numc: Vec<&OCol> = cols.iter().filter(|c| !is_cat(c)).collect();
    let p_cat = cat.len() as i128;
    let method = match scale {
        OScale::Range => OMethod::Std,
        OScale::Iqr => OMethod::IqrCapped,
    };
    (0..n_a)
        .map(|i| {
            // Step 1: exact unweighted categorical distance, undefined -> 1.
            let step1: Vec<Frac> = (0..n_b)
                .map(|j| {
                    let mut sum = Frac { num: 0, den: 1 };
                    let mut q = 0;
                    for c in &cat {
                        if let (Some(x), Some(y)) = (c.a[i], c.b[j]) {
                            if let Some(d) = cat_d(c, cfg.ordinal, x, y) {
                                sum = sum.add(d);
                                q += 1;
                            }
                        }
                    }
                    if q == 0 {
                        Frac { num: 1, den: 1 }
                    } else {
                        Frac {
                            num: sum.num,
                            den: sum.den * q,
                        }
                    }
                })
                .collect();
            let m = (1..=p_cat)
                .find(|&m| step1.iter().any(|d| d.le(Frac { num: m, den: p_cat })))
                .unwrap();
            let threshold = Frac { num: m, den: p_cat };
            (0..n_b)
                .map(|j| {
                    if step1[j].le(threshold) {
                        gower(&numc, cfg, method, false, i, j)
                    } else {
                        Some(1.0)
                    }
                })
                .collect()
        })
        .collect()
}
