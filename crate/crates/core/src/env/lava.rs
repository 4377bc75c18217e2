//! The lava navigation benchmark: five states, two actions, a noisy state
//! sensor, and absorbing goal and lava states.
//!
//! States 0 and 1 are corridor cells, state 3 is the goal, state 2 sits
//! between the goal and the lava, and state 4 is the lava. Moving left from
//! state 0 hits a wall; moving left from state 2 enters the goal, while
//! moving right from state 2 risks the lava edge (reaching the lava with
//! probability 0.6 and slipping into the goal otherwise). Everything else is
//! deterministic, and both the goal and the lava absorb under both actions.
//!
//! Two facts pin this layout: the open-loop sequence (left, right, right)
//! reaches the goal with probability 1 from every initial state and collects
//! an expected reward of 3.425 over the 5-step horizon, while the best
//! open-loop sequence (right, right, anything) collects exactly 3.5 — the
//! value an information-free bound must reproduce.

use super::DiscretePomdp;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const GOAL: usize = 3;
pub const LAVA: usize = 4;

/// Probability that moving right from the goal-adjacent state 2 falls into
/// the lava rather than slipping back into the goal.
const LAVA_EDGE_RISK: f64 = 0.6;

/// Build the lava POMDP for a given sensor accuracy.
///
/// The sensor reports the true state with probability `p_correct` and one of
/// the four incorrect states uniformly otherwise; `p_correct = 0.2` makes it
/// exactly uniform and therefore uninformative.
pub fn lava_pomdp(p_correct: f64) -> DiscretePomdp {
    assert!(
        (0.0..=1.0).contains(&p_correct),
        "p_correct must lie in [0,1]"
    );
    let n = 5;
    let mut transition = vec![vec![vec![0.0; n]; n]; 2];

    let deterministic = |t: &mut Vec<Vec<f64>>, from: usize, to: usize| {
        t[from][to] = 1.0;
    };

    // Left: wall at state 0; state 2 steps (left) into the goal.
    deterministic(&mut transition[LEFT], 0, 0);
    deterministic(&mut transition[LEFT], 1, 0);
    deterministic(&mut transition[LEFT], 2, GOAL);
    deterministic(&mut transition[LEFT], GOAL, GOAL);
    deterministic(&mut transition[LEFT], LAVA, LAVA);

    // Right: 0 -> 1 -> goal; state 2 rides the lava edge.
    deterministic(&mut transition[RIGHT], 0, 1);
    deterministic(&mut transition[RIGHT], 1, GOAL);
    transition[RIGHT][2][LAVA] = LAVA_EDGE_RISK;
    transition[RIGHT][2][GOAL] = 1.0 - LAVA_EDGE_RISK;
    deterministic(&mut transition[RIGHT], GOAL, GOAL);
    deterministic(&mut transition[RIGHT], LAVA, LAVA);

    let wrong = (1.0 - p_correct) / (n - 1) as f64;
    let sensor: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            (0..n)
                .map(|o| if o == s { p_correct } else { wrong })
                .collect()
        })
        .collect();

    let state_reward = |s: usize| match s {
        GOAL => 1.0,
        LAVA => 0.0,
        _ => 0.1,
    };
    let reward: Vec<Vec<f64>> = (0..n).map(|s| vec![state_reward(s); 2]).collect();

    let init = vec![0.25, 0.25, 0.25, 0.25, 0.0];

    let pomdp = DiscretePomdp {
        n_states: n,
        n_actions: 2,
        n_obs: n,
        transition,
        sensor,
        reward,
        init,
        horizon: 5,
    };
    pomdp.validate().expect("lava construction is always valid");
    pomdp
}
