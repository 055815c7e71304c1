//! Max-parity games and two solvers: Zielonka's recursion and, for tiny
//! arenas, literal enumeration of positional strategies.
//!
//! Even wins a play when the highest color occurring infinitely often is
//! even. The successor relation must be total; construction with a
//! successor-free node panics.

/// The two players. `Even` wins on even maximal recurring color.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    Even,
    Odd,
}

/// Explicit max-parity game.
#[derive(Debug, Clone)]
pub struct ParityGame {
    pub owner: Vec<Player>,
    pub color: Vec<u8>,
    pub succ: Vec<Vec<usize>>,
}

impl ParityGame {
    pub fn new(owner: Vec<Player>, color: Vec<u8>, succ: Vec<Vec<usize>>) -> Self {
        assert_eq!(owner.len(), color.len());
        assert_eq!(owner.len(), succ.len());
        for (i, s) in succ.iter().enumerate() {
            assert!(!s.is_empty(), "node {i} has no successor");
            assert!(s.iter().all(|&t| t < owner.len()));
        }
        ParityGame { owner, color, succ }
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }
}

/// Nodes of `region` from which `player` can force reaching `region`,
/// within the subgame induced by `alive`. The result contains `region`.
fn attractor(g: &ParityGame, alive: &[bool], region: &[bool], player: Player) -> Vec<bool> {
    let n = g.len();
    let mut attr = region.to_vec();
    for v in 0..n {
        attr[v] = attr[v] && alive[v];
    }
    loop {
        let mut changed = false;
        for v in 0..n {
            if !alive[v] || attr[v] {
                continue;
            }
            let mut any = false;
            let mut all = true;
            let mut has_live_succ = false;
            for &w in &g.succ[v] {
                if !alive[w] {
                    continue;
                }
                has_live_succ = true;
                if attr[w] {
                    any = true;
                } else {
                    all = false;
                }
            }
            let pulled = if g.owner[v] == player {
                any
            } else {
                // A node with no live successor is a dead end for its
                // owner; the opponent attracts it.
                all || !has_live_succ
            };
            if pulled {
                attr[v] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    attr
}

fn zielonka(g: &ParityGame, alive: &[bool]) -> (Vec<bool>, Vec<bool>) {
    let n = g.len();
    let live_nodes: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    if live_nodes.is_empty() {
        return (vec![false; n], vec![false; n]);
    }
    let d = live_nodes.iter().map(|&v| g.color[v]).max().unwrap();
    let p = if d % 2 == 0 { Player::Even } else { Player::Odd };

    let mut top = vec![false; n];
    for &v in &live_nodes {
        if g.color[v] == d {
            top[v] = true;
        }
    }
    let attr_top = attractor(g, alive, &top, p);
    let mut rest = alive.to_vec();
    for v in 0..n {
        rest[v] = rest[v] && !attr_top[v];
    }
    let (we, wo) = zielonka(g, &rest);
    let opp_region = match p {
        Player::Even => &wo,
        Player::Odd => &we,
    };
    if opp_region.iter().all(|&b| !b) {
        // p wins the whole subgame.
        let wp = alive.to_vec();
        let empty = vec![false; n];
        return match p {
            Player::Even => (wp, empty),
            Player::Odd => (empty, wp),
        };
    }
    let opp = match p {
        Player::Even => Player::Odd,
        Player::Odd => Player::Even,
    };
    let attr_opp = attractor(g, alive, opp_region, opp);
    let mut rest2 = alive.to_vec();
    for v in 0..n {
        rest2[v] = rest2[v] && !attr_opp[v];
    }
    let (we2, wo2) = zielonka(g, &rest2);
    let mut winner_even = we2;
    let mut winner_odd = wo2;
    match opp {
        Player::Even => {
            for v in 0..n {
                winner_even[v] = winner_even[v] || attr_opp[v];
            }
        }
        Player::Odd => {
            for v in 0..n {
                winner_odd[v] = winner_odd[v] || attr_opp[v];
            }
        }
    }
    (winner_even, winner_odd)
}

/// Winning regions `(even, odd)`; a partition of the nodes.
pub fn solve_parity(g: &ParityGame) -> (Vec<bool>, Vec<bool>) {
    let alive = vec![true; g.len()];
    zielonka(g, &alive)
}

/// Nodes from which `Even` wins, by literal enumeration of Even's
/// positional strategies. Exponential; callers keep arenas tiny.
#[allow(clippy::needless_range_loop)] // node ids seed searches over parallel arrays
pub fn enumerate_winning(g: &ParityGame, player: Player) -> Vec<bool> {
    let n = g.len();
    let own_nodes: Vec<usize> = (0..n).filter(|&v| g.owner[v] == player).collect();
    let mut wins = vec![false; n];
    let mut choice = vec![0usize; own_nodes.len()];
    loop {
        // Restricted successor relation under this positional strategy.
        let mut rsucc = g.succ.clone();
        for (k, &v) in own_nodes.iter().enumerate() {
            rsucc[v] = vec![g.succ[v][choice[k]]];
        }
        for v in 0..n {
            if wins[v] {
                continue;
            }
            // Reachable set from v under the strategy.
            let mut reach = vec![false; n];
            let mut stack = vec![v];
            while let Some(u) = stack.pop() {
                if reach[u] {
                    continue;
                }
                reach[u] = true;
                stack.extend(rsucc[u].iter().copied());
            }
            // A reachable losing cycle refutes the strategy at v: a cycle
            // whose maximal color has the opponent's parity, found as a
            // node u on a cycle within colors <= color(u).
            let bad_parity = match player {
                Player::Even => 1,
                Player::Odd => 0,
            };
            let mut bad = false;
            'outer: for u in 0..n {
                if !reach[u] || g.color[u] % 2 != bad_parity {
                    continue;
                }
                let cu = g.color[u];
                let mut seen = vec![false; n];
                let mut stack: Vec<usize> = rsucc[u]
                    .iter()
                    .copied()
                    .filter(|&w| g.color[w] <= cu)
                    .collect();
                while let Some(w) = stack.pop() {
                    if w == u {
                        bad = true;
                        break 'outer;
                    }
                    if seen[w] {
                        continue;
                    }
                    seen[w] = true;
                    stack.extend(
                        rsucc[w].iter().copied().filter(|&t| g.color[t] <= cu),
                    );
                }
            }
            if !bad {
                wins[v] = true;
            }
        }
        // Next strategy in product order.
        let mut k = 0;
        loop {
            if k == own_nodes.len() {
                return wins;
            }
            choice[k] += 1;
            if choice[k] < g.succ[own_nodes[k]].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}
