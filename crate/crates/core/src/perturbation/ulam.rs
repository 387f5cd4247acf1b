use super::grid::{cell_of, DensityGrid};
use super::mollifier::{DiscreteKernel, MollifierSpec};
use crate::error::{Error, Result};
use crate::map_core::{iterate, TorusPoint};
use crate::parallel::{par_map, substream};
use crate::profile::ShearProfile;
use rand::Rng;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicBool, Ordering};

/// Compressed sparse rows; row = source cell, columns sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl Csr {
    fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        for r in rows {
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Csr {
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b]
            .iter()
            .zip(&self.vals[a..b])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }
}

/// Transfer operator on a `G × G` grid: `transfer` is the cell-to-cell Ulam matrix of
/// `Tⁿ`, optionally followed by the mollifier `Q_ε`.
#[derive(Debug, Clone)]
pub struct UlamOperator {
    pub g: usize,
    pub n: usize,
    pub samples_per_cell: usize,
    pub seed: u64,
    pub eps: Option<f64>,
    pub transfer: Csr,
    kernel: Option<DiscreteKernel>,
}

const R2_A1: f64 = 0.754_877_666_246_692_7;
const R2_A2: f64 = 0.569_840_290_998_053_3;

/// Point `k` of the additive recurrence `frac(s + k·(1/φ₂, 1/φ₂²))`.
fn r2_point(shift: (f64, f64), k: usize) -> (f64, f64) {
    let k = k as f64;
    ((shift.0 + k * R2_A1).fract(), (shift.1 + k * R2_A2).fract())
}

fn sorted_row(mut entries: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
    entries.sort_by_key(|e| e.0);
    let mut out: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
    for (c, v) in entries {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out
}

/// Ulam matrix of `Tⁿ`: row `j` holds the fraction of the quasi-random sample points of
/// cell `j` landing in each cell.
pub fn ulam_transfer(
    g: usize,
    samples_per_cell: usize,
    n: usize,
    seed: u64,
    h: &ShearProfile,
    workers: usize,
) -> Result<UlamOperator> {
    if g < 16 {
        return Err(Error::Range {
            value: g as f64,
            lo: 16.0,
            hi: f64::INFINITY,
        });
    }
    if samples_per_cell == 0 {
        return Err(Error::Domain("samples_per_cell must be positive".into()));
    }
    let cells: Vec<usize> = (0..g * g).collect();
    let s = 1.0 / g as f64;
    let w = 1.0 / samples_per_cell as f64;
    let rows = par_map(&cells, workers, |&c| {
        if n == 0 {
            return vec![(c as u32, 1.0)];
        }
        let mut rng = substream(seed, c as u64);
        let shift = (rng.random::<f64>(), rng.random::<f64>());
        let (x0, y0) = (-0.5 + (c / g) as f64 * s, -0.5 + (c % g) as f64 * s);
        let mut counts: Vec<u32> = (0..samples_per_cell)
            .map(|k| {
                let (u, v) = r2_point(shift, k);
                let p = TorusPoint::local(x0 + u * s, y0 + v * s);
                cell_of(iterate(p, n as i64, h), g) as u32
            })
            .collect();
        counts.sort_unstable();
        let mut row: Vec<(u32, f64)> = Vec::new();
        let mut i = 0;
        while i < counts.len() {
            let j = counts[i..].iter().take_while(|&&t| t == counts[i]).count();
            row.push((counts[i], j as f64 * w));
            i += j;
        }
        row
    });
    Ok(UlamOperator {
        g,
        n,
        samples_per_cell,
        seed,
        eps: None,
        transfer: Csr::from_rows(rows),
        kernel: None,
    })
}

/// `L_ε = Q_ε Lⁿ` with `n = ceil(C3 ε^{-1/2})`.
#[allow(clippy::too_many_arguments)]
pub fn perturbed_operator(
    g: usize,
    eps: f64,
    c3: f64,
    samples_per_cell: usize,
    seed: u64,
    h: &ShearProfile,
    workers: usize,
) -> Result<UlamOperator> {
    if !(c3 > 0.0) {
        return Err(Error::Range {
            value: c3,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let spec = MollifierSpec::new(eps)?;
    let kernel = DiscreteKernel::new(&spec, g)?;
    let mut op = ulam_transfer(g, samples_per_cell, steps_for(eps, c3), seed, h, workers)?;
    op.eps = Some(eps);
    op.kernel = Some(kernel);
    Ok(op)
}

/// `n_ε = ceil(C3 ε^{-1/2})`.
pub fn steps_for(eps: f64, c3: f64) -> usize {
    (c3 / eps.sqrt()).ceil() as usize
}

impl UlamOperator {
    pub fn identity(g: usize) -> Self {
        UlamOperator {
            g,
            n: 0,
            samples_per_cell: 1,
            seed: 0,
            eps: None,
            transfer: Csr::from_rows((0..g * g).map(|c| vec![(c as u32, 1.0)]).collect()),
            kernel: None,
        }
    }

    pub fn cells(&self) -> usize {
        self.g * self.g
    }

    /// Row `src` of the full operator: distribution of the image of cell `src`.
    pub fn row(&self, src: usize) -> Vec<(usize, f64)> {
        match &self.kernel {
            None => self.transfer.row(src).collect(),
            Some(k) => {
                let mut e: Vec<(u32, f64)> = Vec::new();
                for (t, p) in self.transfer.row(src) {
                    for &(a, b, w) in &k.offsets {
                        e.push((k.shift(t, a, b) as u32, p * w));
                    }
                }
                sorted_row(e)
                    .into_iter()
                    .map(|(c, v)| (c as usize, v))
                    .collect()
            }
        }
    }

    /// Pushes raw cell masses forward (mass-preserving, no density scaling).
    fn push(&self, mass: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cells()];
        for (s, &m) in mass.iter().enumerate() {
            if m != 0.0 {
                for (t, p) in self.transfer.row(s) {
                    out[t] += m * p;
                }
            }
        }
        match &self.kernel {
            None => out,
            Some(k) => k.convolve(&out),
        }
    }

    /// Transfer-operator image of a density.
    pub fn apply(&self, f: &DensityGrid) -> Result<DensityGrid> {
        f.check_size(self.g)?;
        Ok(DensityGrid {
            g: self.g,
            values: self.push(&f.values),
        })
    }

    /// Image of a density under the adjoint (observable pull-back).
    pub fn apply_adjoint(&self, f: &DensityGrid) -> Result<DensityGrid> {
        f.check_size(self.g)?;
        let vals = match &self.kernel {
            None => f.values.clone(),
            Some(k) => k.convolve(&f.values),
        };
        let values = (0..self.cells())
            .map(|s| self.transfer.row(s).map(|(t, p)| p * vals[t]).sum())
            .collect();
        Ok(DensityGrid { g: self.g, values })
    }

    /// Sparse triplets `i j value` (row = source) under a `# G n eps seed` header.
    pub fn write_triplets<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# G n eps seed")?;
        let eps = self.eps.map_or("none".to_string(), |e| format!("{e}"));
        writeln!(w, "{} {} {} {}", self.g, self.n, eps, self.seed)?;
        for s in 0..self.cells() {
            for (t, v) in self.row(s) {
                writeln!(w, "{s} {t} {v:.17e}")?;
            }
        }
        Ok(())
    }

    /// Reads the triplet format; the result holds the full (already mollified) matrix.
    pub fn read_triplets<R: BufRead>(r: R) -> Result<Self> {
        let bad = |m: &str| Error::Domain(format!("malformed operator file: {m}"));
        let mut lines = r.lines().map(|l| l.map_err(|e| bad(&e.to_string())));
        let mut header = None;
        let mut rows: Vec<Vec<(u32, f64)>> = Vec::new();
        for line in lines.by_ref() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = t.split_whitespace().collect();
            if header.is_none() {
                if f.len() != 4 {
                    return Err(bad("header"));
                }
                let g: usize = f[0].parse().map_err(|_| bad("G"))?;
                let n: usize = f[1].parse().map_err(|_| bad("n"))?;
                let eps = if f[2] == "none" {
                    None
                } else {
                    Some(f[2].parse::<f64>().map_err(|_| bad("eps"))?)
                };
                let seed: u64 = f[3].parse().map_err(|_| bad("seed"))?;
                rows = vec![Vec::new(); g * g];
                header = Some((g, n, eps, seed));
                continue;
            }
            if f.len() != 3 {
                return Err(bad(t));
            }
            let i: usize = f[0].parse().map_err(|_| bad(t))?;
            let j: u32 = f[1].parse().map_err(|_| bad(t))?;
            let v: f64 = f[2].parse().map_err(|_| bad(t))?;
            if i >= rows.len() || j as usize >= rows.len() {
                return Err(bad(t));
            }
            rows[i].push((j, v));
        }
        let (g, n, eps, seed) = header.ok_or_else(|| bad("missing header"))?;
        Ok(UlamOperator {
            g,
            n,
            samples_per_cell: 0,
            seed,
            eps,
            transfer: Csr::from_rows(rows.into_iter().map(sorted_row).collect()),
            kernel: None,
        })
    }
}

const BATCH: usize = 32;

/// Minimum over the two-step rows of a batch of sources, streaming the Ulam matrix once.
fn two_step_min(op: &UlamOperator, sources: &[usize]) -> f64 {
    let cells = op.cells();
    let mut a = vec![0.0; cells * BATCH];
    for (b, &s) in sources.iter().enumerate() {
        for (t, p) in op.transfer.row(s) {
            match &op.kernel {
                None => a[t * BATCH + b] += p,
                Some(k) => {
                    for &(da, db, w) in &k.offsets {
                        a[k.shift(t, da, db) * BATCH + b] += p * w;
                    }
                }
            }
        }
    }
    let mut out = vec![0.0; cells * BATCH];
    for t in 0..cells {
        let at: &[f64; BATCH] = a[t * BATCH..(t + 1) * BATCH].try_into().unwrap();
        if at.iter().all(|&v| v == 0.0) {
            continue;
        }
        for (k, u) in op.transfer.row(t) {
            let o: &mut [f64; BATCH] = (&mut out[k * BATCH..(k + 1) * BATCH]).try_into().unwrap();
            for b in 0..BATCH {
                o[b] += u * at[b];
            }
        }
    }
    let used = sources.len();
    let mut m = f64::INFINITY;
    match &op.kernel {
        None => {
            for c in 0..cells {
                for b in 0..used {
                    m = m.min(out[c * BATCH + b]);
                }
            }
        }
        Some(k) => {
            let mut acc = [0.0; BATCH];
            for c in 0..cells {
                acc.fill(0.0);
                for &(da, db, w) in &k.offsets {
                    let src = k.shift(c, -da, -db);
                    let o: &[f64; BATCH] = out[src * BATCH..(src + 1) * BATCH].try_into().unwrap();
                    for b in 0..BATCH {
                        acc[b] += w * o[b];
                    }
                }
                for &v in &acc[..used] {
                    m = m.min(v);
                }
            }
        }
    }
    m
}

/// `σ̂ = G² · min (op²)`: the smallest two-step transition density.
pub fn doeblin_sigma(op: &UlamOperator, workers: usize) -> f64 {
    let cells = op.cells();
    let blocks: Vec<Vec<usize>> = (0..cells)
        .collect::<Vec<_>>()
        .chunks(BATCH)
        .map(|c| c.to_vec())
        .collect();
    let vanished = AtomicBool::new(false);
    let mins = par_map(&blocks, workers, |srcs| {
        if vanished.load(Ordering::Relaxed) {
            return 0.0;
        }
        let m = two_step_min(op, srcs);
        if m <= 0.0 {
            vanished.store(true, Ordering::Relaxed);
        }
        m
    });
    let m = mins.into_iter().fold(f64::INFINITY, f64::min).max(0.0);
    m * cells as f64
}

/// `‖L_εᵏ f₀‖₁` for `k = 0..=n_max`.
pub fn l1_decay_curve(op: &UlamOperator, f0: &DensityGrid, n_max: usize) -> Result<Vec<f64>> {
    f0.check_size(op.g)?;
    let mean = f0.mean();
    if mean.abs() > 1e-12 * (1.0 + f0.l1_norm()) {
        return Err(Error::Contract(format!(
            "initial density has mean {mean:e}, expected 0"
        )));
    }
    let mut f = f0.clone();
    let mut out = vec![f.l1_norm()];
    for _ in 0..n_max {
        f = op.apply(&f)?;
        out.push(f.l1_norm());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: ShearProfile = ShearProfile::PeriodicSine;

    fn row_sums(op: &UlamOperator) -> Vec<f64> {
        (0..op.cells())
            .map(|s| op.row(s).iter().map(|e| e.1).sum())
            .collect()
    }

    #[test]
    fn zero_steps_is_identity() {
        let op = ulam_transfer(16, 10, 0, 1, &H, 1).unwrap();
        for s in 0..op.cells() {
            assert_eq!(op.row(s), vec![(s, 1.0)]);
        }
        assert_eq!(doeblin_sigma(&op, 1), 0.0);
        assert!(ulam_transfer(8, 10, 1, 1, &H, 1).is_err());
    }

    #[test]
    fn rows_are_stochastic_and_deterministic() {
        let op = ulam_transfer(32, 50, 3, 9, &H, 1).unwrap();
        assert!(row_sums(&op).iter().all(|s| (s - 1.0).abs() < 1e-12));
        assert!(op.transfer.vals.iter().all(|&v| v > 0.0));
        let again = ulam_transfer(32, 50, 3, 9, &H, 3).unwrap();
        assert_eq!(op.transfer, again.transfer);
    }

    #[test]
    fn lebesgue_is_nearly_invariant() {
        let spc = 400;
        let op = ulam_transfer(32, spc, 2, 5, &H, 1).unwrap();
        let one = DensityGrid::constant(32, 1.0);
        let img = op.apply(&one).unwrap();
        let dev = img.values.iter().map(|v| (v - 1.0).abs()).sum::<f64>() / img.cells() as f64;
        assert!(dev <= 1.0 / (spc as f64).sqrt(), "{dev}");
    }

    #[test]
    fn perturbed_operator_preserves_mass() {
        let op = perturbed_operator(32, 0.1, 1.0, 64, 3, &H, 1).unwrap();
        assert_eq!(op.n, 4);
        assert!(row_sums(&op).iter().all(|s| (s - 1.0).abs() < 1e-12));
        let f = DensityGrid::from_fn(32, |p| 2.0 + (9.0 * p.x * p.y).sin());
        assert!((op.apply(&f).unwrap().mean() - f.mean()).abs() < 1e-10);
        let one = DensityGrid::constant(32, 1.0);
        let back = op.apply_adjoint(&one).unwrap();
        assert!(back.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert!(matches!(
            perturbed_operator(32, 0.05, 1.0, 4, 3, &H, 1),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn sigma_matches_direct_two_step() {
        let op = perturbed_operator(16, 0.125, 1.5, 32, 4, &H, 1).unwrap();
        let cells = op.cells();
        let mut m = f64::INFINITY;
        for s in 0..cells {
            let one = DensityGrid::point_mass(16, s);
            let two = op.apply(&op.apply(&one).unwrap()).unwrap();
            m = m.min(two.values.iter().copied().fold(f64::INFINITY, f64::min));
        }
        let sigma = doeblin_sigma(&op, 2);
        assert!(sigma > 0.0);
        assert!((sigma - m).abs() <= 1e-12 * m, "{sigma} vs {m}");
    }

    #[test]
    fn decay_curve_contract() {
        let op = perturbed_operator(32, 0.1, 1.0, 64, 3, &H, 1).unwrap();
        let zero = l1_decay_curve(&op, &DensityGrid::zeros(32), 5).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        assert!(l1_decay_curve(&op, &DensityGrid::constant(32, 1.0), 5).is_err());
        let f = DensityGrid::from_fn(32, |p| (6.0 * p.x).sin() + p.y).centered();
        let c = l1_decay_curve(&op, &f, 20).unwrap();
        assert!(c.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn triplets_round_trip() {
        let op = perturbed_operator(16, 0.125, 1.0, 16, 2, &H, 1).unwrap();
        let mut buf = Vec::new();
        op.write_triplets(&mut buf).unwrap();
        let back = UlamOperator::read_triplets(&buf[..]).unwrap();
        assert_eq!(
            (back.g, back.n, back.eps, back.seed),
            (16, op.n, Some(0.125), 2)
        );
        for s in 0..op.cells() {
            let (a, b) = (op.row(s), back.row(s));
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.0, y.0);
                assert!((x.1 - y.1).abs() <= 1e-16 * x.1.abs().max(1e-300) * 4.0);
            }
        }
        assert!(UlamOperator::read_triplets(&b"1 2"[..]).is_err());
    }
}
