//! The untagged binary wire format.
//!
//! ```text
//! stream  = "UMV1" item
//! item    = 0x49 i64le                      integer
//!         | 0x42 mark:u32le arity:u32le item*arity
//!         | 0x52 index:u32le                 reference to an earlier block
//! ```
//!
//! Blocks are numbered in the order their headers appear. A reference may
//! name a block whose fields are still being read, which is how cycles are
//! written.

use std::fmt;

use thiserror::Error;

use crate::graph::{arity_ok, Node, NodeId, RawGraph};

pub const MAGIC: [u8; 4] = *b"UMV1";
const TAG_INT: u8 = 0x49;
const TAG_BLOCK: u8 = 0x42;
const TAG_REF: u8 = 0x52;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeErrorKind {
    BadMagic,
    Truncated,
    BackRefOutOfRange,
    TrailingBytes,
    BadArity,
    IntegerOverflow,
    UnknownTag,
}

impl fmt::Display for DecodeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("{kind} at byte offset {offset}")]
pub struct DecodeError {
    pub kind: DecodeErrorKind,
    /// Start of the offending item, or the first bad byte of the magic.
    pub offset: usize,
}

fn err<T>(kind: DecodeErrorKind, offset: usize) -> Result<T, DecodeError> {
    Err(DecodeError { kind, offset })
}

/// Writes `g` in preorder from the root. Integers are always written inline;
/// a block seen before becomes a reference.
pub fn encode(g: &RawGraph) -> Vec<u8> {
    const UNSEEN: u32 = u32::MAX;
    let mut out = MAGIC.to_vec();
    let mut index = vec![UNSEEN; g.len()];
    let mut blocks = 0u32;
    let mut stack: Vec<NodeId> = vec![g.root()];
    while let Some(id) = stack.pop() {
        match g.node(id) {
            Node::Int(v) => {
                out.push(TAG_INT);
                out.extend_from_slice(&v.to_le_bytes());
            }
            Node::Block { .. } if index[id] != UNSEEN => {
                out.push(TAG_REF);
                out.extend_from_slice(&index[id].to_le_bytes());
            }
            Node::Block { mark, children } => {
                index[id] = blocks;
                blocks = blocks.checked_add(1).expect("fewer than 2^32 blocks");
                out.push(TAG_BLOCK);
                out.extend_from_slice(&mark.to_le_bytes());
                out.extend_from_slice(&(children.len() as u32).to_le_bytes());
                stack.extend(children.iter().rev());
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self, item: usize) -> Result<[u8; N], DecodeError> {
        match self.bytes.get(self.pos..self.pos + N) {
            Some(b) => {
                self.pos += N;
                Ok(b.try_into().expect("slice of length N"))
            }
            None => err(DecodeErrorKind::Truncated, item),
        }
    }

    fn u32(&mut self, item: usize) -> Result<u32, DecodeError> {
        self.take::<4>(item).map(u32::from_le_bytes)
    }
}

/// Parses a stream into a graph. Node ids follow stream order, so the root
/// is node 0. Every byte string either decodes or yields an error; nothing
/// is preallocated from length fields.
pub fn decode(bytes: &[u8]) -> Result<RawGraph, DecodeError> {
    if let Some(i) = (0..MAGIC.len()).find(|&i| bytes.get(i) != Some(&MAGIC[i])) {
        return err(DecodeErrorKind::BadMagic, i);
    }
    let mut r = Reader { bytes, pos: MAGIC.len() };
    let mut nodes: Vec<Node> = Vec::new();
    let mut block_ids: Vec<NodeId> = Vec::new();
    // open blocks and the number of fields each still expects
    let mut open: Vec<(NodeId, u32)> = Vec::new();
    loop {
        let start = r.pos;
        let [tag] = r.take::<1>(start)?;
        let (id, arity) = match tag {
            TAG_INT => {
                let v = i64::from_le_bytes(r.take::<8>(start)?);
                nodes.push(Node::Int(v));
                (nodes.len() - 1, 0)
            }
            TAG_REF => {
                let index = r.u32(start)? as usize;
                match block_ids.get(index) {
                    Some(&id) => (id, 0),
                    None => return err(DecodeErrorKind::BackRefOutOfRange, start),
                }
            }
            TAG_BLOCK => {
                let mark = r.u32(start)?;
                let arity = r.u32(start)?;
                if !arity_ok(mark, arity as usize) {
                    return err(DecodeErrorKind::BadArity, start);
                }
                if block_ids.len() == u32::MAX as usize {
                    return err(DecodeErrorKind::IntegerOverflow, start);
                }
                nodes.push(Node::Block { mark, children: Vec::new() });
                block_ids.push(nodes.len() - 1);
                (nodes.len() - 1, arity)
            }
            _ => return err(DecodeErrorKind::UnknownTag, start),
        };
        if let Some((parent, remaining)) = open.last_mut() {
            *remaining -= 1;
            if let Node::Block { children, .. } = &mut nodes[*parent] {
                children.push(id);
            }
        }
        if arity > 0 {
            open.push((id, arity));
        }
        while open.last().is_some_and(|&(_, remaining)| remaining == 0) {
            open.pop();
        }
        if open.is_empty() {
            break;
        }
    }
    if r.pos != bytes.len() {
        return err(DecodeErrorKind::TrailingBytes, r.pos);
    }
    Ok(RawGraph::from_valid(nodes, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::rooted_equal;

    fn block(mark: u32, children: Vec<NodeId>) -> Node {
        Node::Block { mark, children }
    }

    fn hex(s: &str) -> Vec<u8> {
        let digits: String = s.split_whitespace().collect();
        (0..digits.len()).step_by(2).map(|i| u8::from_str_radix(&digits[i..i + 2], 16).unwrap()).collect()
    }

    #[test]
    fn leaf_bytes() {
        let g = RawGraph::new(vec![Node::Int(7)], 0).unwrap();
        assert_eq!(encode(&g), hex("554D5631 49 0700000000000000"));
    }

    #[test]
    fn self_loop_bytes() {
        let g = RawGraph::new(vec![block(1, vec![0])], 0).unwrap();
        let bytes = encode(&g);
        assert_eq!(bytes, hex("554D5631 42 01000000 01000000 52 00000000"));
        assert!(rooted_equal(&decode(&bytes).unwrap(), &g));
    }

    #[test]
    fn errors() {
        let kind = |b: &[u8]| decode(b).unwrap_err();
        assert_eq!(kind(&hex("554D5631 52 00000000")), DecodeError { kind: DecodeErrorKind::BackRefOutOfRange, offset: 4 });
        assert_eq!(kind(&hex("554D5631 49 0700")).kind, DecodeErrorKind::Truncated);
        assert_eq!(kind(&hex("554D5631")), DecodeError { kind: DecodeErrorKind::Truncated, offset: 4 });
        assert_eq!(kind(&hex("554D5632 49 0700000000000000")), DecodeError { kind: DecodeErrorKind::BadMagic, offset: 3 });
        assert_eq!(kind(&hex("55")).kind, DecodeErrorKind::BadMagic);
        assert_eq!(
            kind(&hex("554D5631 49 0700000000000000 00")),
            DecodeError { kind: DecodeErrorKind::TrailingBytes, offset: 13 }
        );
        assert_eq!(kind(&hex("554D5631 42 01000000 02000000")).kind, DecodeErrorKind::BadArity);
        assert_eq!(kind(&hex("554D5631 42 00000000 01000000")).kind, DecodeErrorKind::BadArity);
        assert_eq!(kind(&hex("554D5631 42 00000000 00000000")).kind, DecodeErrorKind::BadArity);
        assert_eq!(kind(&hex("554D5631 00")).kind, DecodeErrorKind::UnknownTag);
        // huge arity with nothing behind it fails fast
        assert_eq!(kind(&hex("554D5631 42 00000000 FFFFFFFF")).kind, DecodeErrorKind::Truncated);
    }

    #[test]
    fn shared_and_nested() {
        // (a, a, B(root-tuple)) with a = A(5)
        let g = RawGraph::new(
            vec![block(0, vec![1, 1, 3]), block(1, vec![2]), Node::Int(5), block(2, vec![0])],
            0,
        )
        .unwrap();
        let bytes = encode(&g);
        let back = decode(&bytes).unwrap();
        assert!(rooted_equal(&back, &g));
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn random_round_trips_and_mutations() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for i in 0..1000 {
            let g = crate::oracles::generate::random_graph(&mut rng, 1 + i % 80, i % 2 == 0);
            let bytes = encode(&g);
            let back = decode(&bytes).unwrap();
            assert!(rooted_equal(&back, &g));
            assert_eq!(encode(&back), bytes);

            let mut mutated = bytes.clone();
            for _ in 0..rng.gen_range(1..4) {
                let at = rng.gen_range(0..mutated.len());
                mutated[at] = rng.gen();
            }
            if let Ok(m) = decode(&mutated) {
                assert_eq!(encode(&m), mutated);
            }
        }
    }
}
