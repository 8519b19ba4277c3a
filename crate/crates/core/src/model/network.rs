use std::time::Instant;

use super::{edge_input_dim, Mlp, ModelParams, ParamGrads, BLOCKS, HIDDEN};
use crate::error::{Error, Result};
use crate::graph::{build_graph, MatrixGraph, NODE_FEATURES};
use crate::precond::PrecondResult;
use crate::sparse::{Csr, LowerTriangular, SparseSpd};

const F: usize = NODE_FEATURES;
const H: usize = HIDDEN;

type Node = [f64; F];
type Hidden = [f64; H];

/// Node features enter the network through `sign(v)·ln(1 + |v|)`, which keeps
/// degree counts and capped decay values on a unit scale.
fn squash(v: f64) -> f64 {
    v.signum() * v.abs().ln_1p()
}

/// Activations of one block, kept for the reverse sweep.
#[derive(Debug, Clone, Default)]
struct BlockTape {
    x_in: Vec<Node>,
    z_in: Vec<f64>,
    h1: Vec<Hidden>,
    z_mid: Vec<f64>,
    m1: Vec<f64>,
    hp1: Vec<Hidden>,
    x_half: Vec<Node>,
    h2: Vec<Hidden>,
    z_out: Vec<f64>,
    m2: Vec<f64>,
    hp2: Vec<Hidden>,
}

/// Everything the reverse pass needs: graph topology, the skip values and
/// per-block activations.
#[derive(Debug, Clone)]
pub struct Tape {
    graph: MatrixGraph,
    blocks: Vec<BlockTape>,
}

impl Tape {
    pub fn graph(&self) -> &MatrixGraph {
        &self.graph
    }
}

/// Per-node projections of the two node blocks of an edge network's first
/// layer, so each edge only adds its own feature terms.
fn project(mlp: &Mlp, offset: usize, x: &[Node]) -> Vec<Hidden> {
    x.iter()
        .map(|xi| {
            let mut p = [0.0; H];
            for (k, pk) in p.iter_mut().enumerate() {
                let w = &mlp.w1.row(k)[offset..offset + F];
                *pk = w.iter().zip(xi).map(|(a, b)| a * b).sum();
            }
            p
        })
        .collect()
}

#[inline]
fn edge_eval(
    mlp: &Mlp,
    feats: &[f64],
    p_first: &Hidden,
    p_second: &Hidden,
    hidden: &mut Hidden,
) -> f64 {
    let mut out = mlp.b2[0];
    let w2 = mlp.w2.row(0);
    for k in 0..H {
        let w = mlp.w1.row(k);
        let mut pre = mlp.b1[k] + p_first[k] + p_second[k];
        for (t, f) in feats.iter().enumerate() {
            pre += w[t] * f;
        }
        let h = pre.max(0.0);
        hidden[k] = h;
        out += w2[k] * h;
    }
    out
}

fn node_eval(mlp: &Mlp, x: &Node, m: f64, hidden: &mut Hidden) -> Node {
    let mut input = [0.0; F + 1];
    input[..F].copy_from_slice(x);
    input[F] = m;
    let mut out = [0.0; F];
    mlp.forward(&input, hidden, &mut out);
    out
}

fn check_finite<'a>(values: impl IntoIterator<Item = &'a f64>, stage: &'static str) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::DivergedForward { stage })
    }
}

fn forward_impl(params: &ModelParams, graph: &MatrixGraph, record: bool) -> Result<(LowerTriangular, Vec<BlockTape>)> {
    params.validate()?;
    let n = graph.n;
    let slots = graph.num_slots();
    let a = &graph.edge_values;

    let mut x: Vec<Node> = graph
        .node_features
        .iter()
        .map(|f| f.map(squash))
        .collect();
    let mut z = a.clone();
    let mut tapes = Vec::with_capacity(if record { BLOCKS } else { 0 });
    let mut scratch = [0.0; H];

    for (b, block) in params.blocks.iter().enumerate() {
        let e1 = edge_input_dim(b);
        let mut h1 = if record { vec![[0.0; H]; slots] } else { Vec::new() };
        let mut h2 = if record { vec![[0.0; H]; slots] } else { Vec::new() };
        let mut hp1 = if record { vec![[0.0; H]; n] } else { Vec::new() };
        let mut hp2 = if record { vec![[0.0; H]; n] } else { Vec::new() };

        // lower pass: edge (r, c) reads [z, (a), x_r, x_c]
        let phi = &block.phi_lower;
        let p_row = project(phi, e1, &x);
        let p_col = project(phi, e1 + F, &x);
        let mut z_mid = vec![0.0; slots];
        for e in &graph.lower_edges {
            let s = e.slot;
            let feats = [z[s], a[s]];
            let hid = if record { &mut h1[s] } else { &mut scratch };
            z_mid[s] = edge_eval(phi, &feats[..e1], &p_row[e.row], &p_col[e.col], hid);
        }
        check_finite(&z_mid, "lower edge update")?;

        let mut m1 = vec![0.0; n];
        let mut x_half = vec![[0.0; F]; n];
        for i in 0..n {
            let nb = graph.lower_neighborhood(i);
            m1[i] = nb.iter().map(|e| z_mid[e.slot]).sum::<f64>() / nb.len() as f64;
            let hid = if record { &mut hp1[i] } else { &mut scratch };
            x_half[i] = node_eval(&block.psi_lower, &x[i], m1[i], hid);
        }
        check_finite(x_half.iter().flatten(), "lower node update")?;

        // upper pass: slot s of lower edge (r, c) is upper edge (c, r) and
        // reads [z, x½_c, x½_r]
        let phi = &block.phi_upper;
        let p_first = project(phi, 1, &x_half);
        let p_second = project(phi, 1 + F, &x_half);
        let mut z_out = vec![0.0; slots];
        for e in &graph.upper_edges {
            let s = e.slot;
            let hid = if record { &mut h2[s] } else { &mut scratch };
            z_out[s] = edge_eval(phi, &[z_mid[s]], &p_first[e.row], &p_second[e.col], hid);
        }
        check_finite(&z_out, "upper edge update")?;

        let mut m2 = vec![0.0; n];
        let mut x_out = vec![[0.0; F]; n];
        for i in 0..n {
            let nb = graph.upper_neighborhood(i);
            m2[i] = nb.iter().map(|e| z_out[e.slot]).sum::<f64>() / nb.len() as f64;
            let hid = if record { &mut hp2[i] } else { &mut scratch };
            x_out[i] = node_eval(&block.psi_upper, &x[i], m2[i], hid);
        }
        check_finite(x_out.iter().flatten(), "upper node update")?;

        if record {
            tapes.push(BlockTape {
                x_in: std::mem::replace(&mut x, x_out),
                z_in: std::mem::replace(&mut z, z_out.clone()),
                h1,
                z_mid,
                m1,
                hp1,
                x_half,
                h2,
                z_out,
                m2,
                hp2,
            });
        } else {
            x = x_out;
            z = z_out;
        }
    }

    let values: Vec<f64> = graph
        .lower_edges
        .iter()
        .map(|e| if e.row == e.col { z[e.slot].exp() } else { z[e.slot] })
        .collect();
    check_finite(&values, "output map")?;
    if let Some(e) = graph
        .lower_edges
        .iter()
        .find(|e| e.row == e.col && !(values[e.slot] > 0.0))
    {
        return Err(Error::IllFormedFactor {
            row: e.row,
            value: values[e.slot],
        });
    }
    let csr = Csr::from_raw(
        n,
        graph.lower_ptr.clone(),
        graph.lower_edges.iter().map(|e| e.col).collect(),
        values,
    )?;
    Ok((LowerTriangular::from_csr(csr)?, tapes))
}

/// Runs the network and keeps the activations needed by [`backward`].
///
/// The returned factor has exactly the lower-triangle pattern of the graph's
/// matrix, with value `k` belonging to edge slot `k`.
pub fn forward(params: &ModelParams, graph: &MatrixGraph) -> Result<(LowerTriangular, Tape)> {
    let (l, blocks) = forward_impl(params, graph, true)?;
    Ok((
        l,
        Tape {
            graph: graph.clone(),
            blocks,
        },
    ))
}

/// Inference-only forward pass.
pub fn forward_factor(params: &ModelParams, graph: &MatrixGraph) -> Result<LowerTriangular> {
    forward_impl(params, graph, false).map(|(l, _)| l)
}

/// Reverse sweep of an edge network over one partition.
///
/// `edges` yields `(slot, first node, second node)`; `dz` is the gradient of
/// each slot's output. Writes the gradient of the slot's first edge feature
/// into `dz_prev`, accumulates into the node gradients `dx` and the parameter
/// gradient `grad`.
#[allow(clippy::too_many_arguments)]
fn edge_backward(
    mlp: &Mlp,
    grad: &mut Mlp,
    edges: impl Iterator<Item = (usize, usize, usize)>,
    feats: &[&[f64]],
    hidden: &[Hidden],
    x: &[Node],
    dz: &[f64],
    dz_prev: &mut [f64],
    dx: &mut [Node],
) {
    let e = feats.len();
    let n = x.len();
    let mut acc_first = vec![[0.0; H]; n];
    let mut acc_second = vec![[0.0; H]; n];
    let w2 = mlp.w2.row(0);

    for (s, first, second) in edges {
        let d = dz[s];
        if d == 0.0 {
            dz_prev[s] = 0.0;
            continue;
        }
        let h = &hidden[s];
        grad.b2[0] += d;
        let gw2 = grad.w2.row_mut(0);
        let mut dfeat0 = 0.0;
        for k in 0..H {
            gw2[k] += d * h[k];
            if h[k] <= 0.0 {
                continue;
            }
            let dpre = d * w2[k];
            grad.b1[k] += dpre;
            acc_first[first][k] += dpre;
            acc_second[second][k] += dpre;
            let gw1 = grad.w1.row_mut(k);
            for t in 0..e {
                gw1[t] += dpre * feats[t][s];
            }
            dfeat0 += dpre * mlp.w1.row(k)[0];
        }
        dz_prev[s] = dfeat0;
    }

    for (acc, offset) in [(&acc_first, e), (&acc_second, e + F)] {
        for (i, a) in acc.iter().enumerate() {
            for k in 0..H {
                let dpre = a[k];
                if dpre == 0.0 {
                    continue;
                }
                let w = &mlp.w1.row(k)[offset..offset + F];
                let gw = &mut grad.w1.row_mut(k)[offset..offset + F];
                for t in 0..F {
                    gw[t] += dpre * x[i][t];
                    dx[i][t] += dpre * w[t];
                }
            }
        }
    }
}

/// Reverse sweep of a node network; returns `∂/∂m` per node.
fn node_backward(
    mlp: &Mlp,
    grad: &mut Mlp,
    x: &[Node],
    m: &[f64],
    hidden: &[Hidden],
    dout: &[Node],
    dx: &mut [Node],
) -> Vec<f64> {
    let mut dm = vec![0.0; x.len()];
    let mut input = [0.0; F + 1];
    let mut dinput = [0.0; F + 1];
    for i in 0..x.len() {
        if dout[i].iter().all(|&v| v == 0.0) {
            continue;
        }
        input[..F].copy_from_slice(&x[i]);
        input[F] = m[i];
        mlp.backward(&input, &hidden[i], &dout[i], grad, &mut dinput);
        for t in 0..F {
            dx[i][t] += dinput[t];
        }
        dm[i] = dinput[F];
    }
    dm
}

/// Exact gradient of a scalar loss with respect to every parameter, given
/// the loss gradient on the factor's values (in factor storage order).
pub fn backward(params: &ModelParams, tape: &Tape, grad_l: &[f64]) -> Result<ParamGrads> {
    params.validate()?;
    let graph = &tape.graph;
    let n = graph.n;
    let slots = graph.num_slots();
    if tape.blocks.len() != BLOCKS {
        return Err(Error::ArchMismatch(format!(
            "tape holds {} blocks, expected {BLOCKS}",
            tape.blocks.len()
        )));
    }
    crate::error::check_dim(slots, grad_l.len())?;
    if tape.blocks.iter().any(|t| t.z_out.len() != slots || t.x_in.len() != n) {
        return Err(Error::ArchMismatch("tape does not match its graph".into()));
    }

    let mut grads = params.zeros_like();
    let last = &tape.blocks[BLOCKS - 1];
    let mut dz: Vec<f64> = graph
        .lower_edges
        .iter()
        .map(|e| {
            let g = grad_l[e.slot];
            if e.row == e.col {
                g * last.z_out[e.slot].exp()
            } else {
                g
            }
        })
        .collect();
    let mut dx_out = vec![[0.0; F]; n];
    let a = &graph.edge_values;

    for b in (0..BLOCKS).rev() {
        let t = &tape.blocks[b];
        let p = &params.blocks[b];
        let g = &mut grads.blocks[b];

        // upper node update reads [x_in, m2]
        let mut dx_in = vec![[0.0; F]; n];
        let dm2 = node_backward(&p.psi_upper, &mut g.psi_upper, &t.x_in, &t.m2, &t.hp2, &dx_out, &mut dx_in);
        for i in 0..n {
            if dm2[i] == 0.0 {
                continue;
            }
            let nb = graph.upper_neighborhood(i);
            let share = dm2[i] / nb.len() as f64;
            for e in nb {
                dz[e.slot] += share;
            }
        }

        let mut dz_mid = vec![0.0; slots];
        let mut dx_half = vec![[0.0; F]; n];
        edge_backward(
            &p.phi_upper,
            &mut g.phi_upper,
            graph.upper_edges.iter().map(|e| (e.slot, e.row, e.col)),
            &[&t.z_mid],
            &t.h2,
            &t.x_half,
            &dz,
            &mut dz_mid,
            &mut dx_half,
        );

        let dm1 = node_backward(&p.psi_lower, &mut g.psi_lower, &t.x_in, &t.m1, &t.hp1, &dx_half, &mut dx_in);
        for i in 0..n {
            if dm1[i] == 0.0 {
                continue;
            }
            let nb = graph.lower_neighborhood(i);
            let share = dm1[i] / nb.len() as f64;
            for e in nb {
                dz_mid[e.slot] += share;
            }
        }

        let e1 = edge_input_dim(b);
        let feats: [&[f64]; 2] = [&t.z_in, a];
        let mut dz_in = vec![0.0; slots];
        edge_backward(
            &p.phi_lower,
            &mut g.phi_lower,
            graph.lower_edges.iter().map(|e| (e.slot, e.row, e.col)),
            &feats[..e1],
            &t.h1,
            &t.x_in,
            &dz_mid,
            &mut dz_in,
            &mut dx_in,
        );

        dz = dz_in;
        dx_out = dx_in;
    }
    Ok(grads)
}

/// Builds the graph of `a`, runs inference and wraps the factor with its
/// construction time.
pub fn neuralif_precondition(params: &ModelParams, a: &SparseSpd) -> Result<PrecondResult> {
    let start = Instant::now();
    let graph = build_graph(a);
    let l = forward_factor(params, &graph)?;
    Ok(PrecondResult::new(l, start.elapsed().as_secs_f64()))
}
