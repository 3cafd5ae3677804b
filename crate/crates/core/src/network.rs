//! Assembly of unitary networks into a single contraction problem.
//!
//! Node `α` (1-based) has input blocks `H_αβ` and output blocks `F_βα` for `β = 0..=N`,
//! where index 0 is the external world. Rows of `U_α` list its output blocks in `β`
//! order and columns its input blocks in `β` order. A connection `Ω_αβ : F_αβ → H_αβ`
//! feeds the output of node `β` that is addressed to `α` into the matching input of `α`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Partition};
use crate::unitary::UnitaryProblem;

#[derive(Clone, Debug)]
pub struct NetworkNode {
    pub u: CMatrix,
    /// `input_dims[β] = dim H_αβ`, length `N + 1`.
    pub input_dims: Vec<usize>,
    /// `output_dims[β] = dim F_βα`, length `N + 1`.
    pub output_dims: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Connection {
    /// Receiving node `α` (1-based).
    pub to: usize,
    /// Emitting node `β` (1-based).
    pub from: usize,
    /// `Ω_αβ : F_αβ → H_αβ`.
    pub omega: CMatrix,
}

#[derive(Clone, Debug, Default)]
pub struct NetworkSpec {
    pub nodes: Vec<NetworkNode>,
    pub connections: Vec<Connection>,
}

/// Location of one block of a node inside the assembled space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockPlacement {
    /// Node owning the block (1-based).
    pub node: usize,
    /// Peer index `β` (0 = external).
    pub peer: usize,
    /// First coordinate of the block in the assembled space.
    pub offset: usize,
    pub dim: usize,
}

/// Contraction problem of a network and the basis ordering it was assembled with.
#[derive(Clone, Debug)]
pub struct AssembledNetwork {
    pub problem: UnitaryProblem,
    /// Blocks of `H` in assembled order: `H_α0` for ascending `α`, then `H_αβ` in `(α, β)` order.
    pub h_layout: Vec<BlockPlacement>,
    /// Blocks of `F` in assembled order: `F_0α` for ascending `α`, then `F_αβ` in `(α, β)` order.
    /// For an `F` block, `node` is the emitting node and `peer` the receiver.
    pub f_layout: Vec<BlockPlacement>,
}

/// Builds `U = ⊕ U_α`, `Ω = ⊕ Ω_αβ` with sector 0 collecting the external blocks.
pub fn assemble_network(spec: &NetworkSpec) -> Result<AssembledNetwork> {
    let n = spec.nodes.len();
    check_dimensions(spec)?;
    let mut omegas: BTreeMap<(usize, usize), &CMatrix> = BTreeMap::new();
    for c in &spec.connections {
        if c.to == 0 || c.to > n || c.from == 0 || c.from > n {
            return Err(Error::DimensionMismatch(format!(
                "connection {}<-{} refers to a node outside 1..={n}",
                c.to, c.from
            )));
        }
        if omegas.insert((c.to, c.from), &c.omega).is_some() {
            return Err(Error::DimensionMismatch(format!(
                "connection {}<-{} given twice",
                c.to, c.from
            )));
        }
    }

    // H coordinates: key (α, β) of H_αβ. F coordinates: key (receiver, emitter) of F_{receiver,emitter}.
    let mut h_offsets: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut f_offsets: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut h_layout = Vec::new();
    let mut f_layout = Vec::new();
    let mut h_pos = 0;
    let mut f_pos = 0;
    for a in 1..=n {
        let dim = spec.nodes[a - 1].input_dims[0];
        h_offsets.insert((a, 0), h_pos);
        h_layout.push(BlockPlacement {
            node: a,
            peer: 0,
            offset: h_pos,
            dim,
        });
        h_pos += dim;
        let dim = spec.nodes[a - 1].output_dims[0];
        f_offsets.insert((0, a), f_pos);
        f_layout.push(BlockPlacement {
            node: a,
            peer: 0,
            offset: f_pos,
            dim,
        });
        f_pos += dim;
    }
    let sector0 = (h_pos, f_pos);
    for a in 1..=n {
        for b in 1..=n {
            let dim = spec.nodes[a - 1].input_dims[b];
            h_offsets.insert((a, b), h_pos);
            h_layout.push(BlockPlacement {
                node: a,
                peer: b,
                offset: h_pos,
                dim,
            });
            h_pos += dim;
            // F_ab is emitted by node b towards a.
            let dim = spec.nodes[b - 1].output_dims[a];
            f_offsets.insert((a, b), f_pos);
            f_layout.push(BlockPlacement {
                node: b,
                peer: a,
                offset: f_pos,
                dim,
            });
            f_pos += dim;
        }
    }
    let total = h_pos;

    let mut u = CMatrix::zeros(total, total);
    for (idx, node) in spec.nodes.iter().enumerate() {
        let a = idx + 1;
        let mut row = 0;
        for (b, &rdim) in node.output_dims.iter().enumerate() {
            // Output slot b of node a is F_{b a}.
            let f_off = if b == 0 {
                f_offsets[&(0, a)]
            } else {
                f_offsets[&(b, a)]
            };
            let mut col = 0;
            for (g, &cdim) in node.input_dims.iter().enumerate() {
                let h_off = h_offsets[&(a, g)];
                u.set_block(
                    f_off,
                    h_off,
                    &node.u.block(row..row + rdim, col..col + cdim),
                );
                col += cdim;
            }
            row += rdim;
        }
    }

    let d1 = total - sector0.0;
    let mut omega = CMatrix::zeros(d1, d1);
    for a in 1..=n {
        for b in 1..=n {
            let dim = spec.nodes[a - 1].input_dims[b];
            match omegas.get(&(a, b)) {
                Some(m) => {
                    if m.shape() != (dim, dim) {
                        return Err(Error::DimensionMismatch(format!(
                            "Omega_{a}{b} must be {dim}x{dim}, got {}x{}",
                            m.rows(),
                            m.cols()
                        )));
                    }
                    let h = h_offsets[&(a, b)] - sector0.0;
                    let f = f_offsets[&(a, b)] - sector0.1;
                    omega.set_block(h, f, m);
                }
                None if dim > 0 => {
                    return Err(Error::DimensionMismatch(format!(
                        "H_{a}{b} has dimension {dim} but no connection Omega_{a}{b} was given"
                    )));
                }
                None => {}
            }
        }
    }

    let problem = UnitaryProblem::new(
        u,
        omega,
        Partition::new(sector0.0, d1),
        Partition::new(sector0.1, d1),
    )?;
    Ok(AssembledNetwork {
        problem,
        h_layout,
        f_layout,
    })
}

fn check_dimensions(spec: &NetworkSpec) -> Result<()> {
    let n = spec.nodes.len();
    if n == 0 {
        return Err(Error::DimensionMismatch("network has no nodes".into()));
    }
    for (idx, node) in spec.nodes.iter().enumerate() {
        let a = idx + 1;
        if node.input_dims.len() != n + 1 || node.output_dims.len() != n + 1 {
            return Err(Error::DimensionMismatch(format!(
                "node {a}: input_dims and output_dims need {} entries (external + one per node)",
                n + 1
            )));
        }
        let din: usize = node.input_dims.iter().sum();
        let dout: usize = node.output_dims.iter().sum();
        if din != dout {
            return Err(Error::DimensionMismatch(format!(
                "node {a}: sum of dim H_{a}β = {din} differs from sum of dim F_β{a} = {dout}"
            )));
        }
        if node.u.shape() != (dout, din) {
            return Err(Error::DimensionMismatch(format!(
                "node {a}: U is {}x{}, block dimensions require {dout}x{din}",
                node.u.rows(),
                node.u.cols()
            )));
        }
    }
    for a in 1..=n {
        for b in 1..=n {
            let h = spec.nodes[a - 1].input_dims[b];
            let f = spec.nodes[b - 1].output_dims[a];
            if h != f {
                return Err(Error::DimensionMismatch(format!(
                    "dim H_{a}{b} = {h} differs from dim F_{a}{b} = {f}"
                )));
            }
        }
    }
    Ok(())
}
