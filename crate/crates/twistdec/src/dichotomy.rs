//! Constants, certificates, and the decision driver for pairs of linearly
//! growing outer automorphisms.

/// The uniform ping-pong power 48r² − 48r + 3. Divisible by 3 for every r.
pub fn uniform_power(rank: u64) -> u64 {
    48 * rank * rank - 48 * rank + 3
}

/// |GL(r, Z/3Z)| = ∏_{k=0}^{r-1} (3^r − 3^k).
pub fn gl3_order(rank: u64) -> u64 {
    let p3r = 3u64.pow(rank as u32);
    (0..rank).map(|k| p3r - 3u64.pow(k as u32)).product()
}

/// The power in the main statement: uniform_power(r) · |GL(r, Z/3Z)|.
pub fn theorem_power(rank: u64) -> u64 {
    uniform_power(rank) * gl3_order(rank)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constants {
    pub rank: u64,
    pub uniform_power: u64,
    pub gl3_order: u64,
    pub theorem_power: u64,
}

pub fn constants(rank: u64) -> Constants {
    Constants {
        rank,
        uniform_power: uniform_power(rank),
        gl3_order: gl3_order(rank),
        theorem_power: theorem_power(rank),
    }
}

#[cfg(test)]
mod constant_tests {
    use super::*;

    #[test]
    fn table() {
        assert_eq!(uniform_power(2), 99);
        assert_eq!(uniform_power(3), 291);
        assert_eq!(uniform_power(1), 3);
        assert_eq!(gl3_order(1), 2);
        assert_eq!(gl3_order(2), 48);
        assert_eq!(theorem_power(2), 4752);
    }

    #[test]
    fn gl2_order_brute_force() {
        // count invertible 2x2 matrices over Z/3 by determinant
        let mut count = 0u64;
        for a in 0..3i32 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        if (a * d - b * c).rem_euclid(3) != 0 {
                            count += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(count, gl3_order(2));
    }

    #[test]
    fn uniform_power_divisible_by_three() {
        for r in 1..=10 {
            assert_eq!(uniform_power(r) % 3, 0);
        }
    }
}
