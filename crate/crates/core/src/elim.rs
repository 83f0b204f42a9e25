//! Variable elimination in the (min, max) semiring.
//!
//! Solves `min_θ max_g f_g(θ|scope_g)` over finite-domain variables, where
//! every factor table holds ranks (larger = worse). Ties are broken towards
//! the lexicographically smallest assignment in variable index order.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct Factor {
    /// Ascending variable indices; the first is the most significant digit.
    pub scope: Vec<usize>,
    pub table: Vec<u32>,
}

fn strides(scope: &[usize], domains: &[usize]) -> Vec<usize> {
    let mut s = vec![1; scope.len()];
    for i in (0..scope.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * domains[scope[i + 1]];
    }
    s
}

/// Fix the variables in `fixed` by slicing the table.
fn restrict(f: &Factor, domains: &[usize], fixed: &[Option<u32>]) -> Factor {
    if f.scope.iter().all(|&v| fixed[v].is_none()) {
        return f.clone();
    }
    let st = strides(&f.scope, domains);
    let mut base = 0;
    let mut free = Vec::new();
    let mut free_st = Vec::new();
    for (i, &v) in f.scope.iter().enumerate() {
        match fixed[v] {
            Some(x) => base += x as usize * st[i],
            None => {
                free.push(v);
                free_st.push(st[i]);
            }
        }
    }
    let size: usize = free.iter().map(|&v| domains[v]).product();
    let mut table = Vec::with_capacity(size);
    let mut digits = vec![0usize; free.len()];
    for _ in 0..size {
        let idx = base
            + digits
                .iter()
                .zip(&free_st)
                .map(|(d, s)| d * s)
                .sum::<usize>();
        table.push(f.table[idx]);
        for k in (0..digits.len()).rev() {
            digits[k] += 1;
            if digits[k] < domains[free[k]] {
                break;
            }
            digits[k] = 0;
        }
    }
    Factor { scope: free, table }
}

/// `min` over all free variables of the `max` over factors.
pub(crate) fn minmax(
    factors: &[Factor],
    domains: &[usize],
    fixed: &[Option<u32>],
    cap: usize,
) -> Result<u32> {
    let mut fs: Vec<Factor> = factors
        .iter()
        .map(|f| restrict(f, domains, fixed))
        .collect();
    let mut best = 0u32;
    loop {
        // constants are final
        fs.retain(|f| {
            if f.scope.is_empty() {
                best = best.max(f.table[0]);
                false
            } else {
                true
            }
        });
        if fs.is_empty() {
            return Ok(best);
        }
        // greedy: eliminate the variable whose combined table is smallest
        let mut vars: Vec<usize> = fs.iter().flat_map(|f| f.scope.iter().copied()).collect();
        vars.sort_unstable();
        vars.dedup();
        let mut pick = (usize::MAX, 0usize, Vec::new());
        for &v in &vars {
            let mut scope: Vec<usize> = fs
                .iter()
                .filter(|f| f.scope.contains(&v))
                .flat_map(|f| f.scope.iter().copied())
                .filter(|&x| x != v)
                .collect();
            scope.sort_unstable();
            scope.dedup();
            let size = scope
                .iter()
                .try_fold(1usize, |acc, &x| acc.checked_mul(domains[x]))
                .unwrap_or(usize::MAX);
            if size < pick.0 {
                pick = (size, v, scope);
            }
        }
        let (size, v, scope) = pick;
        if size > cap {
            return Err(Error::Resource {
                what: "elimination table entries",
                count: size as u128,
                cap: cap as u128,
            });
        }
        let (bucket, rest): (Vec<Factor>, Vec<Factor>) =
            fs.into_iter().partition(|f| f.scope.contains(&v));
        fs = rest;
        // per factor: stride of each new-scope variable and of v
        let plans: Vec<(Vec<usize>, usize, &Factor)> = bucket
            .iter()
            .map(|f| {
                let st = strides(&f.scope, domains);
                let per_var = scope
                    .iter()
                    .map(|x| f.scope.iter().position(|y| y == x).map_or(0, |i| st[i]))
                    .collect();
                let sv = st[f.scope.iter().position(|&y| y == v).unwrap()];
                (per_var, sv, f)
            })
            .collect();
        let mut table = Vec::with_capacity(size);
        let mut digits = vec![0usize; scope.len()];
        let mut offsets = vec![0usize; plans.len()];
        for _ in 0..size {
            for (o, (per_var, _, _)) in offsets.iter_mut().zip(&plans) {
                *o = digits.iter().zip(per_var).map(|(d, s)| d * s).sum();
            }
            let mut low = u32::MAX;
            for x in 0..domains[v] {
                let mut high = 0u32;
                for (o, (_, sv, f)) in offsets.iter().zip(&plans) {
                    high = high.max(f.table[o + x * sv]);
                    if high >= low {
                        break;
                    }
                }
                low = low.min(high);
            }
            table.push(low);
            for k in (0..digits.len()).rev() {
                digits[k] += 1;
                if digits[k] < domains[scope[k]] {
                    break;
                }
                digits[k] = 0;
            }
        }
        fs.push(Factor { scope, table });
    }
}

/// Optimal value and the lexicographically smallest optimal assignment.
/// Variables that appear in no factor are set to 0.
pub(crate) fn solve(factors: &[Factor], domains: &[usize], cap: usize) -> Result<(u32, Vec<u32>)> {
    let n = domains.len();
    let none = vec![None; n];
    let value = minmax(factors, domains, &none, cap)?;
    // connected components over shared variables; each is settled on its own
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for f in factors {
        for w in f.scope.windows(2) {
            let a = find(&mut parent, w[0]);
            let b = find(&mut parent, w[1]);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut assignment = vec![0u32; n];
    let mut comps: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut comp_factors: Vec<Vec<Factor>> = vec![Vec::new(); n];
    for f in factors {
        if let Some(&v) = f.scope.first() {
            let r = find(&mut parent, v);
            comp_factors[r].push(f.clone());
        }
    }
    for v in 0..n {
        let r = find(&mut parent, v);
        comps[r].push(v);
    }
    for r in 0..n {
        if comp_factors[r].is_empty() {
            continue;
        }
        let fs = &comp_factors[r];
        let mut fixed = vec![None; n];
        for &v in &comps[r] {
            let d = domains[v] as u32;
            let mut chosen = d - 1;
            for x in 0..d - 1 {
                fixed[v] = Some(x);
                if minmax(fs, domains, &fixed, cap)? <= value {
                    chosen = x;
                    break;
                }
            }
            fixed[v] = Some(chosen);
            assignment[v] = chosen;
        }
    }
    Ok((value, assignment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(factors: &[Factor], domains: &[usize]) -> (u32, Vec<u32>) {
        let total: usize = domains.iter().product();
        let mut best: Option<(u32, Vec<u32>)> = None;
        for i in 0..total {
            // variable 0 most significant, so iteration order is lexicographic
            let mut a = vec![0u32; domains.len()];
            let mut r = i;
            for v in (0..domains.len()).rev() {
                a[v] = (r % domains[v]) as u32;
                r /= domains[v];
            }
            let val = factors
                .iter()
                .map(|f| {
                    let st = strides(&f.scope, domains);
                    let idx: usize = f
                        .scope
                        .iter()
                        .zip(&st)
                        .map(|(&v, s)| a[v] as usize * s)
                        .sum();
                    f.table[idx]
                })
                .max()
                .unwrap_or(0);
            if best.as_ref().is_none_or(|(b, _)| val < *b) {
                best = Some((val, a));
            }
        }
        best.unwrap()
    }

    fn arb_problem() -> impl Strategy<Value = (Vec<usize>, Vec<Factor>)> {
        (1usize..6)
            .prop_flat_map(|n| (proptest::collection::vec(1usize..4, n), 1usize..5))
            .prop_flat_map(|(domains, nf)| {
                let n = domains.len();
                let d2 = domains.clone();
                let factors = proptest::collection::vec(
                    proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 0..=n.min(3))
                        .prop_flat_map(move |scope| {
                            let size: usize = scope.iter().map(|&v| d2[v]).product();
                            proptest::collection::vec(0u32..6, size).prop_map(move |table| Factor {
                                scope: scope.clone(),
                                table,
                            })
                        }),
                    nf,
                );
                (Just(domains), factors)
            })
    }

    proptest! {
        #[test]
        fn elimination_matches_enumeration((domains, factors) in arb_problem()) {
            let (v, a) = solve(&factors, &domains, 1 << 20).unwrap();
            let (bv, ba) = brute(&factors, &domains);
            prop_assert_eq!(v, bv);
            prop_assert_eq!(a, ba);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let f = Factor {
            scope: vec![0, 1, 2],
            table: vec![0; 27],
        };
        let g = Factor {
            scope: vec![2, 3],
            table: vec![0; 9],
        };
        let r = minmax(&[f, g], &[3, 3, 3, 3], &[None; 4], 2);
        assert!(matches!(r, Err(Error::Resource { .. })));
    }
}
