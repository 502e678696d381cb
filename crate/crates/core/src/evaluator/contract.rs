//! Pairwise contraction plans for a single term.

use super::Ring;

/// Summation variable of a compiled term.
#[derive(Clone, Debug)]
pub(super) struct Var {
    pub offset: usize,
    pub range: usize,
    /// Step in the output array for free variables, zero for bonds.
    pub out_stride: usize,
}

/// A factor of a term after variable assignment.
#[derive(Clone, Debug)]
pub(super) enum Slot {
    /// `D^order B`: flat index `base + Σ stride * value` over `(var, stride)`.
    Jet { order: usize, base: usize, strides: Vec<(usize, usize)> },
    /// Kronecker delta between two variables.
    Delta(usize, usize),
}

#[derive(Clone, Debug)]
enum Leaf {
    Jet { order: usize, gather: Vec<usize> },
    Delta { mask: Vec<bool> },
}

/// One loop over the union of its inputs' variables; variables missing
/// from the output are summed.
#[derive(Clone, Debug)]
struct Step {
    inputs: Vec<(usize, Vec<usize>)>,
    ranges: Vec<usize>,
    out_strides: Vec<usize>,
    out_len: usize,
}

#[derive(Clone, Debug)]
pub(super) struct Plan {
    leaves: Vec<Leaf>,
    steps: Vec<Step>,
    result: usize,
    /// Output-array strides of the result tensor's variables.
    result_vars: Vec<usize>,
    result_strides: Vec<usize>,
}

fn strides_for(vars: &[usize], ranges: &[usize]) -> Vec<usize> {
    let mut out = vec![0; vars.len()];
    let mut acc = 1;
    for (i, &v) in vars.iter().enumerate().rev() {
        out[i] = acc;
        acc *= ranges[v];
    }
    out
}

fn size(vars: &[usize], ranges: &[usize]) -> usize {
    vars.iter().map(|&v| ranges[v]).product()
}

/// Calls `f(position, values)` for every point of the box, last axis fastest.
fn for_each_point(dims: &[usize], mut f: impl FnMut(&[usize])) {
    let mut vals = vec![0; dims.len()];
    if dims.contains(&0) {
        return;
    }
    loop {
        f(&vals);
        let mut i = dims.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            vals[i] += 1;
            if vals[i] < dims[i] {
                break;
            }
            vals[i] = 0;
        }
    }
}

impl Plan {
    pub fn new(vars: &[Var], factors: &[Slot], free: usize) -> Plan {
        let ranges: Vec<usize> = vars.iter().map(|v| v.range).collect();
        let mut leaves = Vec::new();
        let mut live: Vec<(usize, Vec<usize>)> = Vec::new();
        for factor in factors {
            match factor {
                Slot::Jet { order, base, strides } => {
                    let mut fv: Vec<usize> = strides.iter().map(|&(v, _)| v).collect();
                    fv.sort_unstable();
                    fv.dedup();
                    let dims: Vec<usize> = fv.iter().map(|&v| ranges[v]).collect();
                    let mut gather = Vec::with_capacity(size(&fv, &ranges));
                    for_each_point(&dims, |vals| {
                        let idx = strides.iter().fold(*base, |acc, &(w, st)| {
                            let pos = fv.iter().position(|&x| x == w).expect("own variable");
                            acc + st * vals[pos]
                        });
                        gather.push(idx);
                    });
                    leaves.push(Leaf::Jet { order: *order, gather });
                    live.push((leaves.len() - 1, fv));
                }
                Slot::Delta(a, b) => {
                    if a == b {
                        let dims = [ranges[*a]];
                        leaves.push(Leaf::Delta {
                            mask: vec![true; dims[0]],
                        });
                        live.push((leaves.len() - 1, vec![*a]));
                        continue;
                    }
                    let fv = if a < b { vec![*a, *b] } else { vec![*b, *a] };
                    let dims: Vec<usize> = fv.iter().map(|&v| ranges[v]).collect();
                    let mut mask = Vec::new();
                    for_each_point(&dims, |vals| {
                        mask.push(vars[fv[0]].offset + vals[0] == vars[fv[1]].offset + vals[1]);
                    });
                    leaves.push(Leaf::Delta { mask });
                    live.push((leaves.len() - 1, fv));
                }
            }
        }
        let is_free = |v: usize| v < free;
        let mut next_id = leaves.len();
        let mut steps = Vec::new();

        let mut emit = |inputs: Vec<(usize, Vec<usize>)>, live: &[(usize, Vec<usize>)], steps: &mut Vec<Step>| {
            let mut union: Vec<usize> = inputs.iter().flat_map(|(_, v)| v.iter().copied()).collect();
            union.sort_unstable();
            union.dedup();
            let keep: Vec<usize> = union
                .iter()
                .copied()
                .filter(|&v| is_free(v) || live.iter().any(|(_, lv)| lv.contains(&v)))
                .collect();
            let keep_strides = strides_for(&keep, &ranges);
            let out_strides: Vec<usize> = union
                .iter()
                .map(|v| keep.iter().position(|x| x == v).map_or(0, |p| keep_strides[p]))
                .collect();
            let inputs_strided: Vec<(usize, Vec<usize>)> = inputs
                .iter()
                .map(|(id, iv)| {
                    let own = strides_for(iv, &ranges);
                    let st = union
                        .iter()
                        .map(|v| iv.iter().position(|x| x == v).map_or(0, |p| own[p]))
                        .collect();
                    (*id, st)
                })
                .collect();
            steps.push(Step {
                inputs: inputs_strided,
                ranges: union.iter().map(|&v| ranges[v]).collect(),
                out_strides,
                out_len: size(&keep, &ranges),
            });
            let id = next_id;
            next_id += 1;
            (id, keep)
        };

        loop {
            // sum out variables private to a single tensor
            let mut changed = false;
            for i in 0..live.len() {
                let private = live[i].1.iter().any(|&v| {
                    !is_free(v) && live.iter().enumerate().all(|(j, (_, lv))| j == i || !lv.contains(&v))
                });
                if private {
                    let t = live[i].clone();
                    let others: Vec<_> = live.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x.clone()).collect();
                    live[i] = emit(vec![t], &others, &mut steps);
                    changed = true;
                }
            }
            if live.len() <= 1 {
                if changed {
                    continue;
                }
                break;
            }
            let mut best: Option<(usize, usize, usize)> = None;
            for i in 0..live.len() {
                for j in i + 1..live.len() {
                    let mut u: Vec<usize> = live[i].1.iter().chain(&live[j].1).copied().collect();
                    u.sort_unstable();
                    u.dedup();
                    let shares = live[i].1.iter().any(|v| live[j].1.contains(v));
                    let cost = size(&u, &ranges) * if shares { 1 } else { 64 };
                    if best.is_none_or(|(c, _, _)| cost < c) {
                        best = Some((cost, i, j));
                    }
                }
            }
            let (_, i, j) = best.expect("two live tensors");
            let b = live.remove(j);
            let a = live.remove(i);
            let merged = emit(vec![a, b], &live, &mut steps);
            live.push(merged);
        }
        let (result, result_vars) = live.pop().expect("term has factors");
        let result_strides = result_vars.iter().map(|&v| vars[v].out_stride).collect();
        Plan {
            leaves,
            steps,
            result,
            result_vars,
            result_strides,
        }
    }

    /// Adds `coeff` times the contracted term into `out`; `tensors` is
    /// scratch space reused between calls.
    pub fn accumulate<R: Ring>(&self, coeff: &R, bjets: &[Vec<R>], vars: &[Var], out: &mut [R], tensors: &mut Vec<Vec<R>>) {
        let needed = self.leaves.len() + self.steps.len();
        if tensors.len() < needed {
            tensors.resize_with(needed, Vec::new);
        }
        for (leaf, t) in self.leaves.iter().zip(tensors.iter_mut()) {
            t.clear();
            match leaf {
                Leaf::Jet { order, gather } => t.extend(gather.iter().map(|&i| bjets[*order][i].clone())),
                Leaf::Delta { mask } => t.extend(
                    mask.iter()
                        .map(|&on| R::from_rational(num_rational::Rational64::from_integer(on as i64))),
                ),
            }
        }
        for (s, step) in self.steps.iter().enumerate() {
            let slot_id = self.leaves.len() + s;
            let mut result = std::mem::take(&mut tensors[slot_id]);
            result.clear();
            result.resize(step.out_len, R::zero());
            let mut pos = vec![0usize; step.inputs.len()];
            let mut out_pos = 0usize;
            let mut vals = vec![0usize; step.ranges.len()];
            'outer: loop {
                let mut p = tensors[step.inputs[0].0][pos[0]].clone();
                for (slot, (id, _)) in step.inputs.iter().enumerate().skip(1) {
                    p = p.mul(&tensors[*id][pos[slot]]);
                }
                if !p.is_zero() {
                    result[out_pos].add_assign(&p);
                }
                let mut i = step.ranges.len();
                loop {
                    if i == 0 {
                        break 'outer;
                    }
                    i -= 1;
                    if vals[i] + 1 < step.ranges[i] {
                        vals[i] += 1;
                        out_pos += step.out_strides[i];
                        for (slot, (_, st)) in step.inputs.iter().enumerate() {
                            pos[slot] += st[i];
                        }
                        break;
                    }
                    let back = vals[i];
                    vals[i] = 0;
                    out_pos -= back * step.out_strides[i];
                    for (slot, (_, st)) in step.inputs.iter().enumerate() {
                        pos[slot] -= back * st[i];
                    }
                }
            }
            tensors[slot_id] = result;
        }
        let result = &tensors[self.result];
        let dims: Vec<usize> = self.result_vars.iter().map(|&v| vars[v].range).collect();
        let mut flat = 0;
        for_each_point(&dims, |vals| {
            let target: usize = vals.iter().zip(&self.result_strides).map(|(v, s)| v * s).sum();
            let value = result[flat].mul(coeff);
            out[target].add_assign(&value);
            flat += 1;
        });
    }
}
