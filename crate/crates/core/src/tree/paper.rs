use super::{ImplementationTree, TreeSpec};
use crate::error::{Error, Result};
use crate::instances::{AgentDomain, FeasibleFamily, Orientation, SetSystemInstance};
use crate::rational::int;

/// Builds a named hand-written tree on `instance`. Recognized ids:
///
/// * `ca-appendixB`: on the `ca-appendixB` auction, asks bidders 0, 1, 2 in
///   turn whether they hold tmax, then in turn whether they hold tmed; the
///   first yes wins (bidders 0 and 1 win together), and all-zero bids go to
///   bidders 0 and 1.
/// * `four-type-violation`: on the instance of [`four_type_violation`].
pub fn make_paper_tree(id: &str, instance: &SetSystemInstance) -> Result<ImplementationTree> {
    let spec = match id {
        "ca-appendixB" => {
            let d = instance.domain(0).values();
            if instance.n() != 3 || d.len() != 3 {
                return Err(Error::InvalidParams(
                    "ca-appendixB tree needs three bidders with three types each".into(),
                ));
            }
            let (zero, tmed, tmax) = (d[0].clone(), d[1].clone(), d[2].clone());
            let winner = |bidder: usize| {
                if bidder == 2 {
                    TreeSpec::leaf(&[2])
                } else {
                    TreeSpec::leaf(&[0, 1])
                }
            };
            let mut spec = TreeSpec::leaf(&[0, 1]);
            for bidder in (0..3).rev() {
                spec = TreeSpec::query(
                    bidder,
                    vec![(vec![zero.clone()], spec), (vec![tmed.clone()], winner(bidder))],
                );
            }
            for bidder in (0..3).rev() {
                spec = TreeSpec::query(
                    bidder,
                    vec![
                        (vec![zero.clone(), tmed.clone()], spec),
                        (vec![tmax.clone()], winner(bidder)),
                    ],
                );
            }
            spec
        }
        "four-type-violation" => four_type_spec(),
        other => return Err(Error::UnknownId(other.to_string())),
    };
    ImplementationTree::from_spec(instance, &spec)
}

fn four_type_spec() -> TreeSpec {
    let c = |v: i64| vec![int(v)];
    let inner = TreeSpec::query(
        1,
        vec![(c(1), TreeSpec::leaf(&[1])), (c(2), TreeSpec::leaf(&[0]))],
    );
    TreeSpec::query(
        0,
        vec![
            (c(1), TreeSpec::leaf(&[0])),
            (vec![int(2), int(3)], inner),
            (c(4), TreeSpec::leaf(&[1])),
        ],
    )
}

/// Two agents competing for one slot: agent 0 with costs {1,2,3,4}, agent 1
/// with costs {1,2}. The tree separates agent 0's extremes at the root and
/// lets agent 1 decide the middle, which keeps every two-cycle nonnegative
/// while the four-cycle (3,2) -> (4,.) -> (2,1) -> (1,.) has weight -1.
pub fn four_type_violation() -> Result<(SetSystemInstance, ImplementationTree)> {
    let domains = vec![
        AgentDomain::from_ints(&[1, 2, 3, 4])?,
        AgentDomain::from_ints(&[1, 2])?,
    ];
    let instance = SetSystemInstance::new(
        domains,
        Orientation::Cost,
        FeasibleFamily::ParallelSolutions {
            sets: vec![vec![0], vec![1]],
        },
    )?;
    let tree = make_paper_tree("four-type-violation", &instance)?;
    Ok((instance, tree))
}

