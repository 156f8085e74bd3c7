//! Fixed-width one-hot encoding of simplified paths.
//!
//! Layout for hop limit k and relation vocabulary size |R|:
//! `[role 0 (3) | relation 1 (|R|) | role 1 (3) | … | relation k (|R|) | role k (3)]`,
//! dimension D = (k+1)·3 + k·|R|. Slots past a path's actual length stay
//! all-zero, which keeps the encoding injective across path lengths.

use crate::error::{Error, Result};
use crate::paths::SimplifiedPath;

/// Width of one role slot (three role values).
pub const ROLE_SLOT: usize = 3;

/// Encoded vector dimension for hop limit `k` and `n_relations` relation types.
pub fn dim(k: usize, n_relations: usize) -> usize {
    (k + 1) * ROLE_SLOT + k * n_relations
}

/// Offset of role slot `i` (0-based node position).
fn role_offset(i: usize, n_relations: usize) -> usize {
    i * (ROLE_SLOT + n_relations)
}

/// Offset of relation slot for hop `j` (0-based edge position).
fn relation_offset(j: usize, n_relations: usize) -> usize {
    j * (ROLE_SLOT + n_relations) + ROLE_SLOT
}

/// Encodes `p` as the sparse one-hot vector consumed by the path encoder.
pub fn encode(p: &SimplifiedPath, k: usize, n_relations: usize) -> Result<Vec<f64>> {
    let h = p.hops();
    if p.roles.len() != h + 1 {
        return Err(Error::Encode(format!(
            "path has {} roles for {} relations; expected {}",
            p.roles.len(),
            h,
            h + 1
        )));
    }
    if h > k {
        return Err(Error::Encode(format!("path has {h} hops, exceeding hop limit {k}")));
    }
    let mut v = vec![0.0; dim(k, n_relations)];
    for (i, role) in p.roles.iter().enumerate() {
        v[role_offset(i, n_relations) + role.as_u8() as usize] = 1.0;
    }
    for (j, rel) in p.relations.iter().enumerate() {
        if rel.0 as usize >= n_relations {
            return Err(Error::Encode(format!(
                "relation id {} out of range for vocabulary of {n_relations}",
                rel.0
            )));
        }
        v[relation_offset(j, n_relations) + rel.0 as usize] = 1.0;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RelationId;
    use crate::paths::NodeRole;

    fn path(roles: &[u8], rels: &[u32]) -> SimplifiedPath {
        SimplifiedPath {
            roles: roles.iter().map(|&r| NodeRole::from_u8(r).unwrap()).collect(),
            relations: rels.iter().map(|&r| RelationId(r)).collect(),
        }
    }

    fn ones(v: &[f64]) -> Vec<usize> {
        v.iter()
            .enumerate()
            .filter_map(|(i, &x)| (x == 1.0).then_some(i))
            .collect()
    }

    #[test]
    fn one_hop_layout() {
        let v = encode(&path(&[0, 1], &[0]), 2, 4).unwrap();
        assert_eq!(v.len(), 17);
        assert_eq!(ones(&v), vec![0, 3, 8]);
        assert!(v.iter().all(|&x| x == 0.0 || x == 1.0));
    }

    #[test]
    fn default_dimension_is_81() {
        assert_eq!(dim(2, 36), 81);
    }

    #[test]
    fn two_hop_layout_has_five_ones() {
        let v = encode(&path(&[0, 2, 1], &[1, 2]), 2, 4).unwrap();
        assert_eq!(v.len(), 17);
        assert_eq!(ones(&v), vec![0, 4, 9, 12, 15]);
    }

    #[test]
    fn popcount_is_2h_plus_1() {
        for (roles, rels) in [
            (vec![0u8, 1], vec![3u32]),
            (vec![0, 2, 1], vec![0, 1]),
            (vec![0, 0, 2, 1], vec![2, 2, 0]),
        ] {
            let h = rels.len();
            let v = encode(&path(&roles, &rels), 3, 4).unwrap();
            let count = v.iter().filter(|&&x| x == 1.0).count();
            assert_eq!(count, 2 * h + 1);
        }
    }

    #[test]
    fn out_of_range_relation_rejected() {
        assert!(encode(&path(&[0, 1], &[4]), 2, 4).is_err());
    }

    #[test]
    fn too_many_hops_rejected() {
        assert!(encode(&path(&[0, 2, 2, 1], &[0, 0, 0]), 2, 4).is_err());
    }

    #[test]
    fn encoding_is_injective_over_random_paths() {
        use rand::{Rng, SeedableRng};
        use std::collections::HashMap;
        let (k, n_rel) = (3usize, 5usize);
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(41);
        let mut seen: HashMap<Vec<u8>, SimplifiedPath> = HashMap::new();
        for _ in 0..3000 {
            let h = rng.gen_range(1..=k);
            let mut roles = vec![0u8];
            for _ in 1..h {
                roles.push(rng.gen_range(0..3));
            }
            roles.push(1);
            let rels: Vec<u32> = (0..h).map(|_| rng.gen_range(0..n_rel as u32)).collect();
            let p = path(&roles, &rels);
            let key: Vec<u8> = encode(&p, k, n_rel).unwrap().iter().map(|&x| x as u8).collect();
            if let Some(prev) = seen.get(&key) {
                assert_eq!(prev, &p, "distinct paths collided");
            } else {
                seen.insert(key, p);
            }
        }
    }

    #[test]
    fn dimension_constant_across_lengths() {
        let v1 = encode(&path(&[0, 1], &[0]), 3, 4).unwrap();
        let v2 = encode(&path(&[0, 2, 2, 1], &[0, 1, 2]), 3, 4).unwrap();
        assert_eq!(v1.len(), v2.len());
        assert_eq!(v1.len(), dim(3, 4));
    }
}
