//! Finite permutations, block sums and shuffles.
//!
//! Conventions, used consistently across the crate:
//!
//! * a [`Permutation`] of degree `n` stores the images of positions
//!   `0..n` (displayed 1-based, e.g. `[2,3,1]`);
//! * composition is right-to-left: `(σ ∘ τ)(i) = σ(τ(i))`;
//! * [`Permutation::act`] pulls: `act(xs, σ)[i] = xs[σ(i)]`, so acting is a
//!   right action: `act(xs, σ ∘ τ) = act(act(xs, σ), τ)`;
//! * an `(n₁,…,n_k)`-shuffle maps the positions of each block — block `i`
//!   occupies positions `n₁+…+n_{i-1} .. n₁+…+n_i` of the concatenation — to
//!   strictly increasing images, i.e. it interleaves the blocks without
//!   reordering any of them.
//!
//! Every permutation factors uniquely as `shuffle ∘ (block-internal parts)`
//! for any block profile of its degree; [`shuffle_decompose`] computes the
//! factorization and is the workhorse behind pushing context permutations
//! through typing derivations.

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PermError {
    #[error("images {0:?} do not describe a bijection")]
    NotBijective(Vec<usize>),
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
}

/// A permutation of `{0, …, n-1}`, stored as the vector of images.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    imgs: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { imgs: (0..n).collect() }
    }

    /// Builds a permutation from 0-based images.
    pub fn from_images(imgs: Vec<usize>) -> Result<Self, PermError> {
        let n = imgs.len();
        let mut seen = vec![false; n];
        for &i in &imgs {
            if i >= n || seen[i] {
                return Err(PermError::NotBijective(imgs));
            }
            seen[i] = true;
        }
        Ok(Permutation { imgs })
    }

    /// Builds a permutation from 1-based images, as they appear in printed
    /// output and in the test corpus.
    pub fn from_one_based(imgs: &[usize]) -> Result<Self, PermError> {
        if imgs.iter().any(|&i| i == 0) {
            return Err(PermError::NotBijective(imgs.to_vec()));
        }
        Self::from_images(imgs.iter().map(|&i| i - 1).collect())
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.imgs.iter().map(|&i| i + 1).collect()
    }

    pub fn degree(&self) -> usize {
        self.imgs.len()
    }

    /// The 0-based image of 0-based position `i`.
    pub fn image(&self, i: usize) -> usize {
        self.imgs[i]
    }

    pub fn is_identity(&self) -> bool {
        self.imgs.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation, PermError> {
        if self.degree() != other.degree() {
            return Err(PermError::DegreeMismatch {
                expected: self.degree(),
                got: other.degree(),
            });
        }
        Ok(Permutation {
            imgs: other.imgs.iter().map(|&i| self.imgs[i]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut imgs = vec![0; self.degree()];
        for (i, &j) in self.imgs.iter().enumerate() {
            imgs[j] = i;
        }
        Permutation { imgs }
    }

    /// Pulls `xs` back along the permutation: `result[i] = xs[σ(i)]`.
    pub fn act<T: Clone>(&self, xs: &[T]) -> Result<Vec<T>, PermError> {
        if xs.len() != self.degree() {
            return Err(PermError::DegreeMismatch {
                expected: self.degree(),
                got: xs.len(),
            });
        }
        Ok(self.imgs.iter().map(|&i| xs[i].clone()).collect())
    }

    /// `σ₁ ⊕ … ⊕ σ_k`: acts as `σ_i` on the `i`-th block of the
    /// concatenation.
    pub fn block_sum(parts: &[Permutation]) -> Permutation {
        let mut imgs = Vec::with_capacity(parts.iter().map(Permutation::degree).sum());
        let mut offset = 0;
        for part in parts {
            imgs.extend(part.imgs.iter().map(|&i| i + offset));
            offset += part.degree();
        }
        Permutation { imgs }
    }

    /// True iff the permutation maps each block's positions to strictly
    /// increasing images. Blocks may be empty; the profile must sum to the
    /// degree.
    pub fn is_shuffle(&self, blocks: &[usize]) -> bool {
        if blocks.iter().sum::<usize>() != self.degree() {
            return false;
        }
        let mut pos = 0;
        for &len in blocks {
            for k in 1..len {
                if self.imgs[pos + k - 1] >= self.imgs[pos + k] {
                    return false;
                }
            }
            pos += len;
        }
        true
    }

    /// Expands a permutation of `sizes.len()` entries into a permutation of
    /// `Σ sizes` positions that moves each entry's span as a block:
    /// the result pulls span `i` from the span of entry `self(i)`.
    pub fn inflate(&self, sizes: &[usize]) -> Result<Permutation, PermError> {
        if sizes.len() != self.degree() {
            return Err(PermError::DegreeMismatch {
                expected: self.degree(),
                got: sizes.len(),
            });
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut acc = 0;
        for &s in sizes {
            offsets.push(acc);
            acc += s;
        }
        let mut imgs = Vec::with_capacity(acc);
        for &src in &self.imgs {
            imgs.extend(offsets[src]..offsets[src] + sizes[src]);
        }
        Ok(Permutation { imgs })
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, i) in self.one_based().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let one = self.one_based();
        let mut seq = serializer.serialize_seq(Some(one.len()))?;
        for i in one {
            seq.serialize_element(&i)?;
        }
        seq.end()
    }
}

/// All shuffles of the given block profile, sorted lexicographically by
/// image vector.
pub fn enumerate_shuffles(blocks: &[usize]) -> Vec<Permutation> {
    let n: usize = blocks.iter().sum();
    // A shuffle is determined by the sequence of block labels along the
    // target positions; walk all label sequences.
    let mut out = Vec::new();
    let mut remaining = blocks.to_vec();
    let mut labels = Vec::with_capacity(n);
    fn go(
        remaining: &mut [usize],
        labels: &mut Vec<usize>,
        n: usize,
        blocks: &[usize],
        out: &mut Vec<Permutation>,
    ) {
        if labels.len() == n {
            // Block `b`'s j-th element lands at the j-th position labelled b.
            let mut offsets = Vec::with_capacity(blocks.len());
            let mut acc = 0;
            for &s in blocks {
                offsets.push(acc);
                acc += s;
            }
            let mut imgs = vec![0; n];
            let mut taken = vec![0usize; blocks.len()];
            for (target, &b) in labels.iter().enumerate() {
                imgs[offsets[b] + taken[b]] = target;
                taken[b] += 1;
            }
            out.push(Permutation { imgs });
            return;
        }
        for b in 0..remaining.len() {
            if remaining[b] > 0 {
                remaining[b] -= 1;
                labels.push(b);
                go(remaining, labels, n, blocks, out);
                labels.pop();
                remaining[b] += 1;
            }
        }
    }
    go(&mut remaining, &mut labels, n, blocks, &mut out);
    out.sort_by(|a, b| a.imgs.cmp(&b.imgs));
    out.dedup();
    out
}

/// The number of `(n₁,…,n_k)`-shuffles: the multinomial coefficient
/// `(Σnᵢ)! / Π nᵢ!`.
pub fn multinomial(blocks: &[usize]) -> u128 {
    let mut acc: u128 = 1;
    let mut total: u128 = 0;
    for &b in blocks {
        for j in 1..=b as u128 {
            total += 1;
            acc = acc * total / j; // binomial(total, j) stays integral
        }
    }
    acc
}

/// Factors `σ = τ₀ ∘ (τ₁ ⊕ … ⊕ τ_k)` where `τ₀` is a `blocks`-shuffle and
/// each `τᵢ` permutes block `i` internally. The factorization exists and is
/// unique for every `σ` whose degree is the profile total.
pub fn shuffle_decompose(
    sigma: &Permutation,
    blocks: &[usize],
) -> Result<(Permutation, Vec<Permutation>), PermError> {
    let n: usize = blocks.iter().sum();
    if n != sigma.degree() {
        return Err(PermError::DegreeMismatch {
            expected: n,
            got: sigma.degree(),
        });
    }
    let mut shuffle_imgs = Vec::with_capacity(n);
    let mut parts = Vec::with_capacity(blocks.len());
    let mut pos = 0;
    for &len in blocks {
        // The shuffle sends this block to the sorted images; the internal
        // part records where each original image sits in that sorted order.
        let mut sorted: Vec<usize> = sigma.imgs[pos..pos + len].to_vec();
        sorted.sort_unstable();
        shuffle_imgs.extend(sorted.iter().copied());
        let part = sigma.imgs[pos..pos + len]
            .iter()
            .map(|img| sorted.binary_search(img).expect("image present"))
            .collect();
        parts.push(Permutation { imgs: part });
        pos += len;
    }
    Ok((Permutation { imgs: shuffle_imgs }, parts))
}

/// All permutations of degree `n`, in lexicographic order. Intended for
/// desk-scale `n`: the result has `n!` elements.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(Permutation { imgs: current.clone() });
        // Next lexicographic image vector.
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

/// All permutations fixing `xs` under [`Permutation::act`]. Desk scale: the
/// search is over all `|xs|!` permutations.
pub fn stabilizer<T: Eq + Clone>(xs: &[T]) -> Vec<Permutation> {
    all_permutations(xs.len())
        .into_iter()
        .filter(|p| p.act(xs).expect("degree matches") == xs)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(one_based: &[usize]) -> Permutation {
        Permutation::from_one_based(one_based).unwrap()
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::from_images(vec![0, 0]).is_err());
        assert!(Permutation::from_images(vec![1, 2]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
    }

    #[test]
    fn act_pulls_images() {
        let sigma = p(&[3, 1, 2]);
        assert_eq!(sigma.act(&['a', 'b', 'c']).unwrap(), vec!['c', 'a', 'b']);
        assert!(sigma.act(&['a', 'b']).is_err());
    }

    #[test]
    fn compose_is_right_to_left() {
        let sigma = p(&[2, 3, 1]);
        let tau = p(&[2, 1, 3]);
        assert_eq!(sigma.compose(&tau).unwrap(), p(&[3, 2, 1]));
    }

    #[test]
    fn shuffle_enumeration_matches_hand_counts() {
        let shu11 = enumerate_shuffles(&[1, 1]);
        assert_eq!(shu11, vec![p(&[1, 2]), p(&[2, 1])]);
        assert_eq!(enumerate_shuffles(&[2, 1]), vec![p(&[1, 2, 3]), p(&[1, 3, 2]), p(&[2, 3, 1])]);
        assert_eq!(enumerate_shuffles(&[2, 2]).len(), 6);
        assert_eq!(enumerate_shuffles(&[]).len(), 1);
        assert_eq!(enumerate_shuffles(&[0, 3]).len(), 1);
        assert_eq!(enumerate_shuffles(&[0]).len(), 1);
    }

    #[test]
    fn multinomials() {
        assert_eq!(multinomial(&[2, 2]), 6);
        assert_eq!(multinomial(&[1, 1, 1]), 6);
        assert_eq!(multinomial(&[0, 4]), 1);
        assert_eq!(multinomial(&[]), 1);
    }

    #[test]
    fn reversal_decomposes_as_swap_under_shuffle() {
        // Frozen: the reversal of S₃ over blocks (2,1) factors through the
        // shuffle [2,3,1] with an internal swap on the first block.
        let sigma = p(&[3, 2, 1]);
        let (shuffle, parts) = shuffle_decompose(&sigma, &[2, 1]).unwrap();
        assert_eq!(shuffle, p(&[2, 3, 1]));
        assert_eq!(parts, vec![p(&[2, 1]), p(&[1])]);
        let recomposed = shuffle.compose(&Permutation::block_sum(&parts)).unwrap();
        assert_eq!(recomposed, sigma);
    }

    #[test]
    fn decompose_requires_matching_degree() {
        assert!(shuffle_decompose(&p(&[2, 1]), &[2, 1]).is_err());
    }

    #[test]
    fn stabilizer_counts_repeats() {
        assert_eq!(stabilizer(&["o", "o", "p"]).len(), 2);
        assert_eq!(stabilizer(&["a", "b", "c"]).len(), 1);
        assert_eq!(stabilizer::<&str>(&[]).len(), 1);
    }

    #[test]
    fn decomposition_is_unique_by_exhaustion() {
        // Oracle for uniqueness: for every σ and profile, exactly one pair
        // (shuffle, internal parts) recomposes to σ.
        for blocks in [vec![2, 1], vec![1, 2], vec![2, 2], vec![3, 1], vec![0, 2, 1]] {
            let n: usize = blocks.iter().sum();
            for sigma in all_permutations(n) {
                let mut found = Vec::new();
                for shuffle in enumerate_shuffles(&blocks) {
                    let mut part_choices: Vec<Vec<Permutation>> =
                        vec![Vec::new()];
                    for &len in &blocks {
                        let mut next = Vec::new();
                        for prefix in &part_choices {
                            for tau in all_permutations(len) {
                                let mut ext = prefix.clone();
                                ext.push(tau);
                                next.push(ext);
                            }
                        }
                        part_choices = next;
                    }
                    for parts in part_choices {
                        let candidate =
                            shuffle.compose(&Permutation::block_sum(&parts)).unwrap();
                        if candidate == sigma {
                            found.push((shuffle.clone(), parts));
                        }
                    }
                }
                assert_eq!(found.len(), 1, "σ={sigma} blocks={blocks:?}");
                let (shuffle, parts) = shuffle_decompose(&sigma, &blocks).unwrap();
                assert_eq!(found[0], (shuffle, parts));
            }
        }
    }

    #[test]
    fn inflate_moves_spans() {
        // Entry permutation [2,1] over spans of sizes (2,1): the result
        // pulls the single atom first only if entry 2 comes first.
        let sigma = p(&[2, 1]);
        let inflated = sigma.inflate(&[2, 1]).unwrap();
        assert_eq!(inflated, p(&[3, 1, 2]));
        assert_eq!(inflated.act(&['a', 'b', 'c']).unwrap(), vec!['c', 'a', 'b']);
    }

    fn arb_perm(max: usize) -> impl Strategy<Value = Permutation> {
        (0..=max).prop_flat_map(|n| {
            Just((0..n).collect::<Vec<usize>>())
                .prop_shuffle()
                .prop_map(|imgs| Permutation::from_images(imgs).unwrap())
        })
    }

    fn arb_blocks() -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(0usize..4, 0..4)
    }

    proptest! {
        #[test]
        fn identity_is_neutral(sigma in arb_perm(7)) {
            let id = Permutation::identity(sigma.degree());
            prop_assert_eq!(sigma.compose(&id).unwrap(), sigma.clone());
            prop_assert_eq!(id.compose(&sigma).unwrap(), sigma);
        }

        #[test]
        fn inverse_cancels(sigma in arb_perm(7)) {
            let id = Permutation::identity(sigma.degree());
            prop_assert_eq!(sigma.compose(&sigma.inverse()).unwrap(), id.clone());
            prop_assert_eq!(sigma.inverse().compose(&sigma).unwrap(), id);
        }

        #[test]
        fn acting_is_a_right_action(
            (sigma, tau, xs) in arb_perm(7).prop_flat_map(|s| {
                let n = s.degree();
                (
                    Just(s),
                    Just((0..n).collect::<Vec<usize>>())
                        .prop_shuffle()
                        .prop_map(|v| Permutation::from_images(v).unwrap()),
                    proptest::collection::vec(0u8..8, n..=n),
                )
            })
        ) {
            let composed = sigma.compose(&tau).unwrap();
            let via_compose = composed.act(&xs).unwrap();
            let stepwise = tau.act(&sigma.act(&xs).unwrap()).unwrap();
            prop_assert_eq!(via_compose, stepwise);
        }

        #[test]
        fn composition_associates(
            (a, b, c) in (0usize..=6).prop_flat_map(|n| {
                let one = move || Just((0..n).collect::<Vec<usize>>())
                    .prop_shuffle()
                    .prop_map(|v| Permutation::from_images(v).unwrap());
                (one(), one(), one())
            })
        ) {
            let left = a.compose(&b).unwrap().compose(&c).unwrap();
            let right = a.compose(&b.compose(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn shuffle_counts_are_multinomial(blocks in arb_blocks()) {
            let shuffles = enumerate_shuffles(&blocks);
            prop_assert_eq!(shuffles.len() as u128, multinomial(&blocks));
            for s in &shuffles {
                prop_assert!(s.is_shuffle(&blocks));
            }
        }

        #[test]
        fn decompose_recomposes(
            (blocks, sigma) in arb_blocks().prop_flat_map(|blocks| {
                let n: usize = blocks.iter().sum();
                (
                    Just(blocks),
                    Just((0..n).collect::<Vec<usize>>())
                        .prop_shuffle()
                        .prop_map(|v| Permutation::from_images(v).unwrap()),
                )
            })
        ) {
            let (shuffle, parts) = shuffle_decompose(&sigma, &blocks).unwrap();
            prop_assert!(shuffle.is_shuffle(&blocks));
            for (tau, &len) in parts.iter().zip(&blocks) {
                prop_assert_eq!(tau.degree(), len);
            }
            let recomposed = shuffle.compose(&Permutation::block_sum(&parts)).unwrap();
            prop_assert_eq!(recomposed, sigma);
        }

        #[test]
        fn block_sum_of_identities_is_identity(sizes in arb_blocks()) {
            let parts: Vec<Permutation> =
                sizes.iter().map(|&n| Permutation::identity(n)).collect();
            let total: usize = sizes.iter().sum();
            prop_assert_eq!(Permutation::block_sum(&parts), Permutation::identity(total));
        }

        #[test]
        fn inflate_respects_composition(
            (sigma, tau, sizes) in (1usize..=5).prop_flat_map(|n| {
                let one = move || Just((0..n).collect::<Vec<usize>>())
                    .prop_shuffle()
                    .prop_map(|v| Permutation::from_images(v).unwrap());
                (one(), one(), proptest::collection::vec(0usize..3, n..=n))
            })
        ) {
            // Inflating σ∘τ needs τ-pulled sizes for the outer factor:
            // inflate(σ∘τ, sizes) = inflate(σ, sizes) ∘ inflate(τ, act(sizes, σ)).
            let composed = sigma.compose(&tau).unwrap();
            let left = composed.inflate(&sizes).unwrap();
            let pulled = sigma.act(&sizes).unwrap();
            let right = sigma
                .inflate(&sizes)
                .unwrap()
                .compose(&tau.inflate(&pulled).unwrap())
                .unwrap();
            prop_assert_eq!(left, right);
        }
    }
}
