use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::template::Template;
use crate::model::{CloneType, WeightFunction};

/// Serialization format version; the second byte of every key.
pub const KEY_VERSION: u8 = 1;

/// Isomorphism-class identifier of a template. Tree keys identify templates
/// up to relabeling and up to permutations of same-type clones at variables
/// and at factors whose weight is invariant under them. Non-tree keys are
/// the ordered root-first serialization.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(Vec<u8>);

impl CanonicalKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn from_hex(s: &str) -> crate::Result<Self> {
        let bytes = hex::decode(s).map_err(|e| crate::Error::InvalidArgument(format!("key {s:?}: {e}")))?;
        if bytes.len() < 3 || bytes[0] != b'G' {
            return crate::error::invalid(format!("key {s:?} lacks the header"));
        }
        if bytes[1] != KEY_VERSION {
            return crate::error::invalid(format!("key version {} is not {KEY_VERSION}", bytes[1]));
        }
        Ok(Self(bytes))
    }

    pub fn is_tree(&self) -> bool {
        self.0.get(2) == Some(&b'T')
    }

    /// Whether the root is a variable.
    pub fn is_variable_rooted(&self) -> bool {
        self.0.get(5) == Some(&b'V')
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalKey({})", String::from_utf8_lossy(&self.0[2..]))
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for CanonicalKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for CanonicalKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Whether `w` is unchanged by every transposition of two slots that carry
/// the same clone type.
pub fn slot_symmetric(w: &WeightFunction, types: &[CloneType]) -> bool {
    let (q, k) = (w.q(), w.arity());
    let table = w.table();
    let mut args = vec![0; k];
    for i in 0..k {
        for j in i + 1..k {
            if types[i] != types[j] {
                continue;
            }
            for idx in 0..table.len() {
                crate::cube::decode(idx, q, &mut args);
                args.swap(i, j);
                if table[crate::cube::encode(&args, q)] != table[idx] {
                    return false;
                }
            }
        }
    }
    true
}

pub(crate) fn permutable(t: &Template, v: usize) -> bool {
    match t.weight_of(v) {
        None => true,
        Some(w) => slot_symmetric(w, &t.node(v).types),
    }
}

fn push_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(s.len().to_string().as_bytes());
    out.push(b':');
    out.extend_from_slice(s.as_bytes());
}

fn push_num(out: &mut Vec<u8>, x: impl fmt::Display) {
    out.extend_from_slice(x.to_string().as_bytes());
    out.push(b',');
}

fn head(t: &Template, v: usize, perm: bool, out: &mut Vec<u8>) {
    let node = t.node(v);
    out.push(if node.is_variable() { b'V' } else { b'F' });
    push_num(out, node.degree());
    let mut types = node.types.clone();
    if perm {
        types.sort_unstable();
        out.push(b'*');
    }
    out.push(b'[');
    for ty in types {
        push_num(out, ty);
    }
    out.push(b']');
    if let Some(w) = t.weight_of(v) {
        push_str(out, w.id());
    }
}

/// Code of the subtree below `v`, entered through slot `parent` of `v`.
fn tree_code(t: &Template, v: usize, parent: Option<usize>, perms: &[bool]) -> Vec<u8> {
    let node = t.node(v);
    let perm = perms[v];
    let mut out = vec![b'('];
    head(t, v, perm, &mut out);
    match parent {
        None => out.push(b'R'),
        Some(p) => {
            out.push(b'P');
            push_num(&mut out, node.types[p]);
            if !perm {
                out.push(b'@');
                push_num(&mut out, p);
            }
        }
    }
    for (_, code) in child_codes(t, v, parent, perms) {
        out.extend(code);
    }
    out.push(b')');
    out
}

fn branch_code(t: &Template, v: usize, s: usize, perms: &[bool]) -> Vec<u8> {
    match t.node(v).ports[s] {
        None => b"D".to_vec(),
        Some((u, r)) => {
            let mut c = b"C".to_vec();
            c.extend(tree_code(t, u, Some(r), perms));
            c
        }
    }
}

/// `(slot, branch code)` for every slot of `v` except `parent`, in key
/// order: slot order for rigid nodes, grouped by type and sorted by code for
/// permutable ones.
fn child_codes(t: &Template, v: usize, parent: Option<usize>, perms: &[bool]) -> Vec<(usize, Vec<u8>)> {
    let node = t.node(v);
    let mut codes: Vec<(usize, Vec<u8>)> = (0..node.degree())
        .filter(|&s| Some(s) != parent)
        .map(|s| (s, branch_code(t, v, s, perms)))
        .collect();
    if perms[v] {
        codes.sort_by(|a, b| node.types[a.0].cmp(&node.types[b.0]).then_with(|| a.1.cmp(&b.1)).then(a.0.cmp(&b.0)));
    }
    codes
}

fn permutable_flags(t: &Template) -> Vec<bool> {
    (0..t.len()).map(|v| permutable(t, v)).collect()
}

/// The isomorphism-class key of `t`.
pub fn canonical_key(t: &Template) -> CanonicalKey {
    if !t.is_tree() {
        return strict_key(t);
    }
    let perms = permutable_flags(t);
    let mut out = vec![b'G', KEY_VERSION, b'T', b'|'];
    out.extend(tree_code(t, 0, None, &perms));
    CanonicalKey(out)
}

/// Ordered serialization: nodes labeled in breadth-first discovery order
/// from the root, visiting slots in index order. Equal iff the templates are
/// equal up to node relabeling with all slot indices preserved.
pub fn strict_key(t: &Template) -> CanonicalKey {
    let mut label = vec![usize::MAX; t.len()];
    let mut order = vec![0];
    label[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        for &(u, _) in t.node(v).ports.iter().flatten() {
            if label[u] == usize::MAX {
                label[u] = order.len();
                order.push(u);
                queue.push_back(u);
            }
        }
    }
    let mut out = vec![b'G', KEY_VERSION, if t.is_tree() { b'S' } else { b'N' }, b'|'];
    for &v in &order {
        out.push(b'(');
        head(t, v, false, &mut out);
        for p in &t.node(v).ports {
            match p {
                None => out.push(b'D'),
                Some((u, r)) => {
                    out.push(b'<');
                    push_num(&mut out, label[*u]);
                    push_num(&mut out, r);
                    out.push(b'>');
                }
            }
        }
        out.push(b')');
    }
    CanonicalKey(out)
}

/// Reorders the root clones into key order: within every type class the
/// class's slot positions receive its branches sorted by code. Returns the
/// reordered template and `perm` with new slot `i` = old slot `perm[i]`.
/// Rigid roots and non-tree templates are returned unchanged.
pub fn canonical_root_order(t: &Template) -> (Template, Vec<usize>) {
    let d = t.root().degree();
    let identity: Vec<usize> = (0..d).collect();
    if !t.is_tree() {
        return (t.clone(), identity);
    }
    let perms = permutable_flags(t);
    if !perms[0] {
        return (t.clone(), identity);
    }
    let sorted = child_codes(t, 0, None, &perms);
    let types = &t.root().types;
    let classes: BTreeSet<CloneType> = types.iter().copied().collect();
    let mut perm = identity;
    for ty in classes {
        let positions = (0..d).filter(|&s| types[s] == ty);
        let slots = sorted.iter().filter(|(s, _)| types[*s] == ty).map(|(s, _)| *s);
        for (pos, s) in positions.zip(slots) {
            perm[pos] = s;
        }
    }
    let mut out = t.clone();
    out.permute_slots(0, &perm);
    (out, perm)
}

/// Code of the subtree rooted at node 0 of `t` when entered through slot
/// `parent`; matches the code of the same subtree inside a larger tree.
pub(crate) fn subtree_code(t: &Template, parent: Option<usize>) -> Vec<u8> {
    tree_code(t, 0, parent, &permutable_flags(t))
}
