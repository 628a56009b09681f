//! SPLPO instances: costs, opening costs, and per-customer preference ranks.
//!
//! Indices are 0-based in memory. Preference ranks are stored as in the
//! files, 1 = most preferred and `n` = least preferred, and every row is a
//! permutation of `1..=n`.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SplpoError};

/// Header token of the canonical text format.
pub const FORMAT_HEADER: &str = "SPLPO 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    m: usize,
    n: usize,
    f: Vec<f64>,
    /// Row-major `m x n` service costs.
    c: Vec<f64>,
    /// Row-major `m x n` preference ranks.
    p: Vec<u32>,
    /// `by_rank[i*n + r]` is the facility customer `i` ranks `r + 1`.
    by_rank: Vec<usize>,
}

impl Instance {
    /// Builds and validates an instance. `c` and `p` are given row by row.
    pub fn new(f: Vec<f64>, c: Vec<Vec<f64>>, p: Vec<Vec<u32>>) -> Result<Self> {
        let n = f.len();
        let m = c.len();
        if m == 0 || n == 0 {
            return Err(SplpoError::InvalidInstance(format!(
                "need at least one customer and one site (m={m}, n={n})"
            )));
        }
        if p.len() != m {
            return Err(SplpoError::InvalidInstance(format!(
                "{} preference rows for {m} customers",
                p.len()
            )));
        }
        for (i, row) in c.iter().enumerate() {
            if row.len() != n {
                return Err(SplpoError::InvalidInstance(format!(
                    "cost row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
        }
        for (i, row) in p.iter().enumerate() {
            if row.len() != n {
                return Err(SplpoError::InvalidInstance(format!(
                    "preference row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
        }
        Self::from_flat(m, n, f, c.concat(), p.concat())
    }

    /// Builds an instance from row-major flat storage.
    pub fn from_flat(m: usize, n: usize, f: Vec<f64>, c: Vec<f64>, p: Vec<u32>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(SplpoError::InvalidInstance(format!(
                "need at least one customer and one site (m={m}, n={n})"
            )));
        }
        if f.len() != n || c.len() != m * n || p.len() != m * n {
            return Err(SplpoError::InvalidInstance("dimension mismatch".into()));
        }
        if let Some(j) = f.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SplpoError::InvalidInstance(format!(
                "opening cost of facility {} is negative or not finite",
                j + 1
            )));
        }
        if let Some(k) = c.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SplpoError::InvalidInstance(format!(
                "service cost c[{}][{}] is negative or not finite",
                k / n + 1,
                k % n + 1
            )));
        }
        let mut by_rank = vec![usize::MAX; m * n];
        for i in 0..m {
            for j in 0..n {
                let r = p[i * n + j] as usize;
                if r == 0 || r > n || by_rank[i * n + r - 1] != usize::MAX {
                    return Err(SplpoError::InvalidInstance(format!(
                        "row {} is not a permutation",
                        i + 1
                    )));
                }
                by_rank[i * n + r - 1] = j;
            }
        }
        Ok(Self {
            m,
            n,
            f,
            c,
            p,
            by_rank,
        })
    }

    /// Number of customers.
    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of candidate sites.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn f(&self, j: usize) -> f64 {
        self.f[j]
    }

    #[inline]
    pub fn opening_costs(&self) -> &[f64] {
        &self.f
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.n + j]
    }

    /// Service costs of customer `i`.
    #[inline]
    pub fn cost_row(&self, i: usize) -> &[f64] {
        &self.c[i * self.n..(i + 1) * self.n]
    }

    /// Preference rank of facility `j` for customer `i` (1 = best).
    #[inline]
    pub fn rank(&self, i: usize, j: usize) -> u32 {
        self.p[i * self.n + j]
    }

    #[inline]
    pub fn rank_row(&self, i: usize) -> &[u32] {
        &self.p[i * self.n..(i + 1) * self.n]
    }

    /// Facilities in customer `i`'s preference order, most preferred first.
    #[inline]
    pub fn preference_order(&self, i: usize) -> &[usize] {
        &self.by_rank[i * self.n..(i + 1) * self.n]
    }

    /// True when customer `i` strictly prefers `a` to `b`.
    #[inline]
    pub fn prefers(&self, i: usize, a: usize, b: usize) -> bool {
        self.rank(i, a) < self.rank(i, b)
    }

    /// Facilities strictly worse than `j` for customer `i`.
    pub fn strictly_worse(&self, i: usize, j: usize) -> Vec<usize> {
        let r = self.rank(i, j) as usize;
        self.preference_order(i)[r..].to_vec()
    }

    /// Facilities weakly preferred to `j` by customer `i` (including `j`).
    pub fn weakly_preferred(&self, i: usize, j: usize) -> Vec<usize> {
        let r = self.rank(i, j) as usize;
        self.preference_order(i)[..r].to_vec()
    }

    /// `j` together with every facility strictly worse than it for `i`.
    pub fn worse_or_equal(&self, i: usize, j: usize) -> Vec<usize> {
        let r = self.rank(i, j) as usize;
        self.preference_order(i)[r - 1..].to_vec()
    }

    /// Most preferred member of `open` for customer `i`.
    pub fn most_preferred_in(&self, i: usize, open: &[usize]) -> Option<usize> {
        open.iter().copied().min_by_key(|&j| self.rank(i, j))
    }

    /// Largest service cost.
    pub fn max_cost(&self) -> f64 {
        self.c.iter().copied().fold(0.0, f64::max)
    }

    /// `min_j (c_ij + f_j)` per customer, the subgradient starting point.
    pub fn cheapest_total(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.c(i, j) + self.f[j])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// Key used to order facilities in variable fixing and branching:
    /// `sum_i (c_ij + f_j) = sum_i c_ij + m * f_j`.
    pub fn facility_key(&self, j: usize) -> f64 {
        (0..self.m).map(|i| self.c(i, j) + self.f[j]).sum()
    }

    /// Parses the canonical text format.
    pub fn parse(text: &str) -> Result<Self> {
        parse_instance(text)
    }

    pub fn to_canonical(&self) -> String {
        write_instance(self)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        parse_instance(&text)
    }

    pub fn write_path(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, write_instance(self))?;
        Ok(())
    }
}

/// Per-customer sorted service costs and the box ceiling `cp`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostLadder {
    m: usize,
    n: usize,
    sorted: Vec<f64>,
    facility: Vec<usize>,
    cp: Vec<f64>,
}

impl CostLadder {
    pub fn new(inst: &Instance) -> Self {
        cost_ladder(inst)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted costs of customer `i`, ascending.
    pub fn sorted_costs(&self, i: usize) -> &[f64] {
        &self.sorted[i * self.n..(i + 1) * self.n]
    }

    /// Facility realising the `k`-th cheapest cost of customer `i` (0-based).
    pub fn facility_at(&self, i: usize, k: usize) -> usize {
        self.facility[i * self.n + k]
    }

    /// 1-based rung `k` of customer `i`'s ladder; rungs above `n` map to `cp_i`.
    pub fn rung(&self, i: usize, k: usize) -> f64 {
        assert!(k >= 1, "rungs are 1-based");
        if k > self.n {
            self.cp[i]
        } else {
            self.sorted[i * self.n + k - 1]
        }
    }

    pub fn cp(&self) -> &[f64] {
        &self.cp
    }

    pub fn lowest(&self, i: usize) -> f64 {
        self.rung(i, 1)
    }

    pub fn highest(&self, i: usize) -> f64 {
        self.rung(i, self.n)
    }
}

/// Sorts each customer's service costs and computes `cp_i = max_j (c_ij + f_j)`.
pub fn cost_ladder(inst: &Instance) -> CostLadder {
    let (m, n) = (inst.m(), inst.n());
    let mut sorted = Vec::with_capacity(m * n);
    let mut facility = Vec::with_capacity(m * n);
    let mut cp = Vec::with_capacity(m);
    for i in 0..m {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| inst.c(i, a).total_cmp(&inst.c(i, b)).then(a.cmp(&b)));
        sorted.extend(idx.iter().map(|&j| inst.c(i, j)));
        facility.extend_from_slice(&idx);
        cp.push(
            (0..n)
                .map(|j| inst.c(i, j) + inst.f(j))
                .fold(f64::NEG_INFINITY, f64::max),
        );
    }
    CostLadder {
        m,
        n,
        sorted,
        facility,
        cp,
    }
}

/// Tokenised line of a text document, remembering its 1-based line number.
struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(k, l)| (k + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Self {
            inner: it.peekable(),
            last: 0,
        }
    }

    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((k, l)) => {
                self.last = k;
                Ok((k, l))
            }
            None => Err(SplpoError::Parse {
                line: self.last + 1,
                message: format!("unexpected end of document, expected {what}"),
            }),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> SplpoError {
    SplpoError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_numbers<T: std::str::FromStr>(line: usize, text: &str, count: usize, what: &str) -> Result<Vec<T>> {
    let values: Vec<T> = text
        .split_whitespace()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| parse_err(line, format!("cannot parse '{t}' in {what}")))
        })
        .collect::<Result<_>>()?;
    if values.len() != count {
        return Err(parse_err(
            line,
            format!("dimension mismatch: {what} has {} values, expected {count}", values.len()),
        ));
    }
    Ok(values)
}

/// Parses the canonical format:
///
/// ```text
/// SPLPO 1
/// m n
/// f_1 .. f_n
/// m rows of c
/// m rows of p
/// ```
///
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = Lines::new(text);
    let (k, header) = lines.next_line("header")?;
    if header.split_whitespace().collect::<Vec<_>>() != ["SPLPO", "1"] {
        return Err(parse_err(k, format!("malformed header '{header}', expected '{FORMAT_HEADER}'")));
    }
    let (k, dims) = lines.next_line("dimensions")?;
    let dims: Vec<usize> = parse_numbers(k, dims, 2, "dimension line")
        .map_err(|_| parse_err(k, format!("malformed dimension line '{dims}'")))?;
    let (m, n) = (dims[0], dims[1]);
    if m == 0 || n == 0 {
        return Err(parse_err(k, format!("m and n must be positive (m={m}, n={n})")));
    }
    let (k, fl) = lines.next_line("opening costs")?;
    let f: Vec<f64> = parse_numbers(k, fl, n, "opening cost line")?;
    if let Some(j) = f.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(parse_err(k, format!("negative cost: f[{}]", j + 1)));
    }
    let mut c = Vec::with_capacity(m * n);
    for i in 0..m {
        let (k, row) = lines.next_line("cost row")?;
        let vals: Vec<f64> = parse_numbers(k, row, n, &format!("cost row {}", i + 1))?;
        if let Some(j) = vals.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(parse_err(k, format!("negative cost: c[{}][{}]", i + 1, j + 1)));
        }
        c.extend(vals);
    }
    let mut p = Vec::with_capacity(m * n);
    for i in 0..m {
        let (k, row) = lines.next_line("preference row")?;
        let vals: Vec<u32> = parse_numbers(k, row, n, &format!("preference row {}", i + 1))?;
        if !is_permutation(&vals) {
            return Err(parse_err(k, format!("row {} is not a permutation", i + 1)));
        }
        p.extend(vals);
    }
    if let Ok((k, extra)) = lines.next_line("") {
        return Err(parse_err(k, format!("trailing content '{extra}'")));
    }
    Instance::from_flat(m, n, f, c, p)
}

fn is_permutation(row: &[u32]) -> bool {
    let n = row.len();
    let mut seen = vec![false; n];
    row.iter().all(|&r| {
        let r = r as usize;
        if r == 0 || r > n || seen[r - 1] {
            false
        } else {
            seen[r - 1] = true;
            true
        }
    })
}

fn push_row<T: std::fmt::Display>(out: &mut String, row: impl IntoIterator<Item = T>) {
    let mut first = true;
    for v in row {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// Writes the canonical format. `f64` values use the shortest representation
/// that parses back to the same bits, so integer data prints without decimals.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str(FORMAT_HEADER);
    out.push('\n');
    let _ = writeln!(out, "{} {}", inst.m, inst.n);
    push_row(&mut out, inst.f.iter());
    for i in 0..inst.m {
        push_row(&mut out, inst.cost_row(i).iter());
    }
    for i in 0..inst.m {
        push_row(&mut out, inst.rank_row(i).iter());
    }
    out
}

/// Imports a Beasley OR-Library warehouse file (capacities ignored) together
/// with a preference sidecar holding `m` permutation rows.
///
/// The OR-Library layout is: `n m`, then `n` lines `capacity fixed_cost`
/// (the capacity token may be a word in the uncapacitated sets), then for
/// every customer its demand followed by `n` allocation costs.
pub fn parse_orlib(text: &str, preferences: &str) -> Result<Instance> {
    let mut tokens = text.split_whitespace();
    let mut next = |what: &str| {
        tokens
            .next()
            .ok_or_else(|| SplpoError::InvalidInstance(format!("OR-Library file ended early, expected {what}")))
    };
    let num = |t: &str, what: &str| -> Result<f64> {
        t.parse::<f64>()
            .map_err(|_| SplpoError::InvalidInstance(format!("cannot parse '{t}' as {what}")))
    };
    let n = num(next("site count")?, "site count")? as usize;
    let m = num(next("customer count")?, "customer count")? as usize;
    let mut f = Vec::with_capacity(n);
    for _ in 0..n {
        let _capacity = next("capacity")?;
        f.push(num(next("fixed cost")?, "fixed cost")?);
    }
    let mut c = Vec::with_capacity(m * n);
    for _ in 0..m {
        let _demand = next("demand")?;
        for _ in 0..n {
            c.push(num(next("allocation cost")?, "allocation cost")?);
        }
    }
    let mut p = Vec::with_capacity(m * n);
    let mut rows = 0;
    for (k, line) in preferences.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<u32> = parse_numbers(k + 1, line, n, "preference row")?;
        if !is_permutation(&vals) {
            return Err(parse_err(k + 1, format!("row {} is not a permutation", rows + 1)));
        }
        p.extend(vals);
        rows += 1;
    }
    if rows != m {
        return Err(SplpoError::InvalidInstance(format!(
            "preference sidecar has {rows} rows, expected {m}"
        )));
    }
    Instance::from_flat(m, n, f, c, p)
}

/// Loads an OR-Library file and its `<name>.pref` sidecar.
pub fn load_orlib(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let pref = std::fs::read_to_string(path.with_extension("pref"))?;
    parse_orlib(&text, &pref)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreferenceMode {
    /// Independent uniformly random permutation per customer.
    #[default]
    Uniform,
    /// Rank by ascending service cost, random order among equal costs.
    CostConsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub cost_range: (u64, u64),
    pub opening_range: (u64, u64),
    pub scale: u64,
    pub mode: PreferenceMode,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            cost_range: (1000, 2000),
            opening_range: (8000, 12000),
            scale: 1,
            mode: PreferenceMode::Uniform,
        }
    }
}

/// Seeded instance generator. Costs are integers so that objective values
/// are exact in `f64`.
pub fn generate_instance(m: usize, n: usize, seed: u64, params: &GeneratorConfig) -> Result<Instance> {
    if m == 0 || n == 0 {
        return Err(SplpoError::InvalidArgument(format!(
            "m and n must be positive (m={m}, n={n})"
        )));
    }
    let (clo, chi) = params.cost_range;
    let (flo, fhi) = params.opening_range;
    if clo > chi || flo > fhi {
        return Err(SplpoError::InvalidArgument("empty cost range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = params.scale as f64;
    let f: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(flo..=fhi) as f64 * scale)
        .collect();
    let c: Vec<f64> = (0..m * n)
        .map(|_| rng.gen_range(clo..=chi) as f64 * scale)
        .collect();
    let mut p = vec![0u32; m * n];
    for i in 0..m {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        if params.mode == PreferenceMode::CostConsistent {
            // stable sort keeps the shuffled order among equal costs
            order.sort_by(|&a, &b| c[i * n + a].total_cmp(&c[i * n + b]));
        }
        for (r, &j) in order.iter().enumerate() {
            p[i * n + j] = r as u32 + 1;
        }
    }
    Instance::from_flat(m, n, f, c, p)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub const T1: &str = "SPLPO 1\n2 2\n3 1\n2 5\n4 2\n1 2\n2 1\n";

    pub fn t1() -> Instance {
        parse_instance(T1).unwrap()
    }

    #[test]
    fn parses_t1_and_computes_cp_by_direct_max() {
        let inst = t1();
        assert_eq!((inst.m(), inst.n()), (2, 2));
        let ladder = cost_ladder(&inst);
        let direct: Vec<f64> = (0..2)
            .map(|i| (0..2).map(|j| inst.c(i, j) + inst.f(j)).fold(f64::MIN, f64::max))
            .collect();
        assert_eq!(direct, vec![6.0, 7.0]);
        assert_eq!(ladder.cp(), &direct[..]);
    }

    #[test]
    fn rejects_non_permutation_row() {
        let text = "SPLPO 1\n2 2\n3 1\n2 5\n4 2\n1 1\n2 1\n";
        let err = parse_instance(text).unwrap_err();
        assert_eq!(err, SplpoError::Parse { line: 6, message: "row 1 is not a permutation".into() });
        assert!(err.to_string().contains("row 1 is not a permutation"));
    }

    #[test]
    fn reports_line_numbers_for_other_errors() {
        let bad_header = "SPLP 2\n1 1\n0\n0\n1\n";
        assert!(matches!(parse_instance(bad_header), Err(SplpoError::Parse { line: 1, .. })));
        let mismatch = "SPLPO 1\n2 2\n3 1\n2 5 7\n4 2\n1 2\n2 1\n";
        let e = parse_instance(mismatch).unwrap_err();
        assert!(matches!(e, SplpoError::Parse { line: 4, .. }), "{e}");
        assert!(e.to_string().contains("dimension mismatch"));
        let negative = "SPLPO 1\n2 2\n3 1\n2 5\n4 -2\n1 2\n2 1\n";
        let e = parse_instance(negative).unwrap_err();
        assert!(matches!(e, SplpoError::Parse { line: 5, .. }));
        assert!(e.to_string().contains("negative cost"));
        let short = "SPLPO 1\n2 2\n3 1\n2 5\n";
        assert!(matches!(parse_instance(short), Err(SplpoError::Parse { .. })));
    }

    #[test]
    fn degenerate_single_site() {
        let inst = parse_instance("SPLPO 1\n1 1\n0\n0\n1\n").unwrap();
        assert_eq!((inst.m(), inst.n()), (1, 1));
        let doc = write_instance(&inst);
        // header, dimensions, f, one cost row, one preference row
        assert_eq!(doc.lines().count(), 5);
        assert_eq!(parse_instance(&doc).unwrap(), inst);
    }

    #[test]
    fn t1_round_trips_bit_exactly() {
        let inst = t1();
        assert_eq!(write_instance(&inst), T1);
        assert_eq!(parse_instance(&write_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn fractional_costs_round_trip() {
        let inst = Instance::new(
            vec![0.1, 1.0 / 3.0],
            vec![vec![2.5, 1e-7], vec![3.25, 7.0]],
            vec![vec![2, 1], vec![1, 2]],
        )
        .unwrap();
        assert_eq!(parse_instance(&write_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn generated_instance_round_trips_and_is_deterministic() {
        let cfg = GeneratorConfig::default();
        let a = generate_instance(50, 50, 1, &cfg).unwrap();
        let b = generate_instance(50, 50, 1, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.m(), 50);
        for i in 0..50 {
            assert!(is_permutation(a.rank_row(i)));
        }
        let g42 = generate_instance(12, 9, 42, &cfg).unwrap();
        assert_eq!(parse_instance(&write_instance(&g42)).unwrap(), g42);
        assert_ne!(generate_instance(12, 9, 43, &cfg).unwrap(), g42);
    }

    #[test]
    fn generator_respects_ranges() {
        let inst = generate_instance(20, 15, 3, &GeneratorConfig::default()).unwrap();
        for j in 0..15 {
            assert!((8000.0..=12000.0).contains(&inst.f(j)));
            for i in 0..20 {
                let v = inst.c(i, j);
                assert!((1000.0..=2000.0).contains(&v));
                assert_eq!(v, v.round());
            }
        }
    }

    #[test]
    fn cost_consistent_preferences_follow_argsort() {
        let cfg = GeneratorConfig {
            mode: PreferenceMode::CostConsistent,
            ..Default::default()
        };
        for (m, n, seed) in [(2, 2, 7), (8, 6, 11)] {
            let inst = generate_instance(m, n, seed, &cfg).unwrap();
            for i in 0..m {
                // argsort oracle: ascending costs, equal costs in any order
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| inst.c(i, a).total_cmp(&inst.c(i, b)));
                let sorted: Vec<f64> = idx.iter().map(|&j| inst.c(i, j)).collect();
                let by_pref: Vec<f64> = inst.preference_order(i).iter().map(|&j| inst.c(i, j)).collect();
                assert_eq!(sorted, by_pref);
            }
        }
    }

    #[test]
    fn generator_rejects_empty_dimensions() {
        assert!(generate_instance(0, 5, 1, &GeneratorConfig::default()).is_err());
    }

    #[test]
    fn t1_ladder() {
        let l = cost_ladder(&t1());
        assert_eq!(l.sorted_costs(0), &[2.0, 5.0]);
        assert_eq!(l.sorted_costs(1), &[2.0, 4.0]);
        assert_eq!(l.cp(), &[6.0, 7.0]);
        assert_eq!(l.rung(0, 3), 6.0);
    }

    #[test]
    fn uniform_costs_ladder() {
        let inst = Instance::new(
            vec![0.0; 3],
            vec![vec![5.0; 3]; 2],
            vec![vec![1, 2, 3], vec![3, 1, 2]],
        )
        .unwrap();
        let l = cost_ladder(&inst);
        for i in 0..2 {
            assert_eq!(l.sorted_costs(i), &[5.0, 5.0, 5.0]);
            assert_eq!(l.cp()[i], 5.0);
        }
    }

    #[test]
    fn random_ladder_is_sorted_and_below_cp() {
        let inst = generate_instance(5, 5, 9, &GeneratorConfig::default()).unwrap();
        let l = cost_ladder(&inst);
        for i in 0..5 {
            let s = l.sorted_costs(i);
            assert!(s.windows(2).all(|w| w[0] <= w[1]));
            let enumerated = (0..5).map(|j| inst.c(i, j) + inst.f(j)).fold(f64::MIN, f64::max);
            assert_eq!(l.cp()[i], enumerated);
            assert!(l.cp()[i] >= l.highest(i));
        }
    }

    #[test]
    fn preference_sets_partition_sites() {
        let inst = generate_instance(6, 7, 5, &GeneratorConfig::default()).unwrap();
        let n = inst.n();
        for i in 0..inst.m() {
            for j in 0..n {
                let w = inst.strictly_worse(i, j);
                let wbar = inst.weakly_preferred(i, j);
                let wprime = inst.worse_or_equal(i, j);
                let p = inst.rank(i, j) as usize;
                assert_eq!(wbar.len(), p);
                assert_eq!(wprime.len(), n - p + 1);
                assert!(wbar.contains(&j) && wprime.contains(&j) && !w.contains(&j));
                assert!(w.iter().all(|k| !wbar.contains(k)));
                let mut all: Vec<usize> = w.iter().chain(wbar.iter()).copied().collect();
                all.sort_unstable();
                assert_eq!(all, (0..n).collect::<Vec<_>>());
                // definition check against ranks
                assert!(w.iter().all(|&k| inst.rank(i, k) > inst.rank(i, j)));
            }
        }
    }

    #[test]
    fn orlib_import_ignores_capacities() {
        let text = "2 3\ncapacity 3\n5000 1\n4\n2 4\n3\n5 2\n2\n1 1\n";
        let pref = "1 2\n2 1\n1 2\n";
        let inst = parse_orlib(text, pref).unwrap();
        assert_eq!((inst.m(), inst.n()), (3, 2));
        assert_eq!(inst.opening_costs(), &[3.0, 1.0]);
        assert_eq!(inst.cost_row(0), &[2.0, 4.0]);
        assert_eq!(inst.cost_row(2), &[1.0, 1.0]);
        assert!(parse_orlib(text, "1 2\n2 1\n").is_err());
    }
}
