//! Small hand-checkable models used throughout the tests, docs and CLI examples.

use crate::model::MdpModel;
use crate::scalar::Real;

/// Every row is uniform over the states; `r(s,a) = state_rewards[s]` for
/// both actions.
pub fn symmetric<T: Real>(state_rewards: &[T]) -> MdpModel<T> {
    let reward = state_rewards.iter().map(|&r| vec![r, r]).collect();
    symmetric_table(reward)
}

/// Uniform rows with an arbitrary `[s][a]` reward table.
pub fn symmetric_table<T: Real>(reward: Vec<Vec<T>>) -> MdpModel<T> {
    let n = reward.len();
    let na = reward[0].len();
    let p = T::one() / T::from_count(n);
    let transition = vec![vec![vec![p; n]; na]; n];
    let r_max = reward.iter().flatten().fold(T::zero(), |m, &r| m.max(r)).max(T::one());
    MdpModel::from_tables(transition, reward, r_max).expect("symmetric fixture")
}

/// Two states; both actions move deterministically to the other state.
pub fn swap<T: Real>(r0: T, r1: T) -> MdpModel<T> {
    let (o, z) = (T::one(), T::zero());
    let transition = vec![vec![vec![z, o], vec![z, o]], vec![vec![o, z], vec![o, z]]];
    let reward = vec![vec![r0, r0], vec![r1, r1]];
    MdpModel::from_tables(transition, reward, T::one().max(r0).max(r1)).expect("swap fixture")
}

/// Deterministic single-action cycle `0 -> 1 -> … -> n-1 -> 0`, reward 1 in
/// state 0.
pub fn cycle<T: Real>(n: usize) -> MdpModel<T> {
    let transition = (0..n)
        .map(|s| {
            let mut row = vec![T::zero(); n];
            row[(s + 1) % n] = T::one();
            vec![row]
        })
        .collect();
    let reward = (0..n).map(|s| vec![if s == 0 { T::one() } else { T::zero() }]).collect();
    MdpModel::from_tables(transition, reward, T::one()).expect("cycle fixture")
}

/// Two states; action 0 stays put, action 1 moves to the other state.
/// Policy `(0,0)` has two absorbing classes.
pub fn two_absorbing<T: Real>(r0: T, r1: T) -> MdpModel<T> {
    let (o, z) = (T::one(), T::zero());
    let transition = vec![vec![vec![o, z], vec![z, o]], vec![vec![z, o], vec![o, z]]];
    let reward = vec![vec![r0, r0], vec![r1, r1]];
    MdpModel::from_tables(transition, reward, T::one().max(r0).max(r1)).expect("absorbing fixture")
}

/// Two states where state 1 is absorbing under every action and state 0
/// can reach it.
pub fn sink<T: Real>() -> MdpModel<T> {
    let (o, z, h) = (T::one(), T::zero(), T::c(0.5));
    let transition = vec![vec![vec![h, h], vec![z, o]], vec![vec![z, o], vec![z, o]]];
    let reward = vec![vec![o, z], vec![z, z]];
    MdpModel::from_tables(transition, reward, T::one()).expect("sink fixture")
}
