//! Results checked against independent brute-force computations.

use prm_core::cross_product::CrossProductMdp;
use prm_core::labeled_mdp::{riverswim, warehouse, Environment, JointPolicy, LabeledMdp};
use prm_core::random;
use prm_core::reward_free::{
    self, expected_return, history_dp_planner, markov_policies, max_reach_probability, reach_probability, ExploreConfig,
    HistoryPolicy, Kernel, NmReward, Planner,
};
use prm_core::rng::{seeded, unit};
use prm_core::ucbvi::{self, compute_w, AgentHyper, AgentModel, AgentState, Algorithm, CountStore, EmpiricalModel, RunOptions};
use prm_core::{EventAlphabet, RewardMachine};

fn best_over_deterministic_policies(cp: &CrossProductMdp) -> f64 {
    markov_policies(cp.num_states(), cp.num_actions(), cp.horizon())
        .unwrap()
        .map(|pi| cp.policy_evaluation(&pi).unwrap().value(0, cp.initial_state()))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn value_iteration_equals_best_enumerated_policy() {
    let mut rng = seeded(11);
    for _ in 0..5 {
        let env = random::environment(2, 2, 3, 2, 3, false, &mut rng).unwrap();
        let cp = CrossProductMdp::build(&env);
        let vi = cp.value_iteration().value(0, cp.initial_state());
        let best = best_over_deterministic_policies(&cp);
        assert!((vi - best).abs() < 1e-12, "{vi} vs {best}");
    }
}

#[test]
fn optimal_values_dominate_every_policy_at_every_state() {
    let mut rng = seeded(12);
    let env = random::environment(2, 2, 2, 2, 2, false, &mut rng).unwrap();
    let cp = CrossProductMdp::build(&env);
    let vt = cp.value_iteration();
    for pi in markov_policies(cp.num_states(), 2, 2).unwrap() {
        let pv = cp.policy_evaluation(&pi).unwrap();
        for h in 0..=2 {
            for s in 0..cp.num_states() {
                assert!(vt.value(h, s) >= pv.value(h, s) - 1e-12);
            }
        }
    }
}

#[test]
fn occupancy_weighted_rewards_give_the_value() {
    let mut rng = seeded(13);
    for _ in 0..10 {
        let env = random::environment(3, 2, 4, 2, 3, false, &mut rng).unwrap();
        let cp = CrossProductMdp::build(&env);
        let pi = random::markov_policy(cp.num_states(), 2, 4, &mut rng);
        let occ = cp.occupancy_measure(&pi).unwrap();
        let mut total = 0.0;
        for h in 0..4 {
            for s in 0..cp.num_states() {
                for a in 0..2 {
                    total += occ.at(h, s, a) * cp.reward(s, a);
                }
            }
        }
        let v = cp.policy_evaluation(&pi).unwrap().value(0, cp.initial_state());
        assert!((total - v).abs() < 1e-12);
    }
}

fn monte_carlo(env: &Environment, pi: &JointPolicy, episodes: u64) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sq = 0.0;
    for i in 0..episodes {
        let r = env.rollout(pi, 1_000_003 * i + 17).total_reward();
        sum += r;
        sq += r * r;
    }
    let n = episodes as f64;
    let mean = sum / n;
    (mean, ((sq / n - mean * mean).max(0.0) / n).sqrt())
}

#[test]
fn simulated_returns_match_exact_evaluation() {
    let mut rng = seeded(14);
    for deterministic in [true, false] {
        let env = random::environment(3, 2, 4, 3, 3, deterministic, &mut rng).unwrap();
        let cp = CrossProductMdp::build(&env);
        let pi = random::markov_policy(cp.num_states(), 2, 4, &mut rng);
        let exact = cp.policy_evaluation(&pi).unwrap().value(0, cp.initial_state());
        let (mean, se) = monte_carlo(&env, &pi, 20_000);
        assert!((mean - exact).abs() <= 4.0 * se + 1e-12, "{mean} vs {exact} (se {se})");
    }
}

#[test]
fn w_matches_naive_summation() {
    let mut rng = seeded(15);
    let env = random::environment(4, 2, 3, 2, 3, false, &mut rng).unwrap();
    let model = AgentModel::observation_level(&env);
    let sn = model.num_states();
    let v: Vec<f64> = (0..sn).map(|_| 3.0 * unit(&mut rng)).collect();
    let w = compute_w(&model, &v);
    let (qn, on, an) = (2, 4, 2);
    for q in 0..qn {
        for o in 0..on {
            for a in 0..an {
                for z in 0..on {
                    let mut naive = 0.0;
                    for q2 in 0..qn {
                        naive += env.rm.tau(q, env.mdp.label(o, a, z), q2) * v[q2 * on + z];
                    }
                    let got = w[((q * on + o) * an + a) * on + z];
                    assert!((got - naive).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn empirical_rows_converge_in_total_variation() {
    let p = [0.1, 0.25, 0.4, 0.25];
    let mut counts = CountStore::new(4, 1, 1);
    let mut rng = seeded(16);
    for _ in 0..100_000 {
        let z = prm_core::rng::sample_index(&p, unit(&mut rng));
        counts.record(0, 0, 0, z).unwrap();
    }
    let m = counts.empirical_model();
    let tv: f64 = m.row(0, 0).iter().zip(&p).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
    assert!(tv < 0.02, "tv {tv}");
}

#[test]
fn counting_identities_over_random_trajectories() {
    let env = warehouse::build(3, 9).unwrap();
    let mut counts = CountStore::new(9, 5, 9);
    let pi = JointPolicy::Uniform { num_actions: 5 };
    for i in 0..1000 {
        counts.ingest_trajectory(&env.rollout(&pi, i)).unwrap();
    }
    assert_eq!(counts.total(), 1000 * 9);
    assert!(counts.identities_hold());
}

#[test]
fn exact_model_without_bonus_reproduces_value_iteration() {
    for env in [riverswim::build(5, 10).unwrap(), warehouse::build(3, 9).unwrap()] {
        let cp = CrossProductMdp::build(&env);
        let vt = cp.value_iteration();
        let hyper = AgentHyper::new(0.05, 0.0, 10, true).unwrap();
        let mut agent = AgentState::new(&env, Algorithm::UcbviPrm, hyper);
        let exact = EmpiricalModel::exact(env.mdp.num_obs(), env.mdp.num_actions(), env.mdp.transitions());
        agent.plan_with(&exact);
        for (a, b) in agent.v.iter().zip(&vt.v) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn single_state_machine_makes_both_bonus_agents_agree() {
    let mut alphabet = EventAlphabet::new();
    let hit = alphabet.insert(["hit"]);
    let base = riverswim::build(4, 6).unwrap().mdp;
    let labels: Vec<usize> = (0..base.labels().len()).map(|i| usize::from(i % 4 == 3)).collect();
    let mdp = LabeledMdp::new(4, 2, 6, base.transitions().to_vec(), labels, 0).unwrap();
    let mut rewards = vec![0.0; alphabet.len()];
    rewards[hit] = 1.0;
    let env = Environment::new(mdp, RewardMachine::constant_rewards(&rewards), alphabet).unwrap();
    let hyper = AgentHyper::new(0.05, 0.05, 300, true).unwrap();
    let prm = ucbvi::run(&env, Algorithm::UcbviPrm, hyper, 3);
    let cp = ucbvi::run(&env, Algorithm::UcbviCp, hyper, 3);
    assert_eq!(prm.records, cp.records);
}

#[test]
fn doubling_keeps_the_known_set_current_and_bounds_epochs() {
    let env = warehouse::build(3, 9).unwrap();
    let episodes = 3000;
    let (on, an) = (9, 5);
    let mut plans = Vec::new();
    for doubling in [true, false] {
        let hyper = AgentHyper::new(0.05, 0.001, episodes, doubling).unwrap();
        let mut before = vec![false; on * an];
        let mut known_per_episode = Vec::new();
        let log = ucbvi::run_observed(&env, Algorithm::UcbviPrm, hyper, 5, RunOptions::default(), |agent, _| {
            assert_eq!(agent.planned_known, before);
            known_per_episode.push(agent.planned_known.clone());
            before = agent.counts.empirical_model().known;
        });
        if doubling {
            let t = (episodes * 9) as f64;
            assert!((log.replans as f64) <= (on * an) as f64 * t.log2() + 1.0);
        } else {
            assert_eq!(log.replans, episodes);
        }
        plans.push(known_per_episode);
    }
    // the first plan sees nothing in both modes
    assert!(plans.iter().all(|p| p[0].iter().all(|&k| !k)));
}

#[test]
fn product_agent_starts_with_more_bonus_per_cell_on_the_warehouse() {
    let env = warehouse::build(3, 9).unwrap();
    let hyper = AgentHyper::theory(200);
    let mut first = Vec::new();
    for alg in [Algorithm::UcbviPrm, Algorithm::UcbviCp] {
        let mut total = 0.0;
        let mut seen = 0;
        ucbvi::run_observed(&env, alg, hyper, 21, RunOptions::default(), |agent, rec| {
            let known = agent.planned_known.iter().filter(|&&k| k).count();
            if rec.replanned && known > 0 && seen < 4 {
                let cells = known * agent.model.rm.num_states() * agent.model.horizon;
                total += agent.last_bonus_total / cells as f64;
                seen += 1;
            }
        });
        first.push(total);
    }
    assert!(first[1] > first[0], "{first:?}");
}

/// All deterministic history policies, by mixed-radix decoding of a counter.
fn all_history_policies(on: usize, an: usize, h: usize) -> impl Iterator<Item = HistoryPolicy> {
    let sizes: Vec<usize> = (0..h).map(|k| (on * an).pow(k as u32)).collect();
    let cells: usize = sizes.iter().sum();
    (0..an.pow(cells as u32)).map(move |mut code| {
        let actions: Vec<Vec<usize>> = sizes
            .iter()
            .map(|&n| {
                (0..n)
                    .map(|_| {
                        let a = code % an;
                        code /= an;
                        a
                    })
                    .collect()
            })
            .collect();
        HistoryPolicy::deterministic(on, an, &actions)
    })
}

fn random_table(on: usize, an: usize, h: usize, rng: &mut impl rand::Rng) -> NmReward {
    let values = (0..(on * an).pow(h as u32)).map(|_| unit(rng)).collect();
    NmReward::Table { num_obs: on, num_actions: an, horizon: h, values }
}

#[test]
fn history_planner_matches_exhaustive_search() {
    let mut rng = seeded(17);
    for (on, an, h) in [(3, 2, 2), (2, 2, 3)] {
        let kernel = Kernel { num_obs: on, num_actions: an, initial_obs: 0, p: random::kernel(on, an, 0.2, &mut rng) };
        let reward = random_table(on, an, h, &mut rng);
        let (policy, value) = history_dp_planner(&kernel, &reward).unwrap();
        let best = all_history_policies(on, an, h)
            .map(|pi| expected_return(&kernel, &pi, &reward).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((value - best).abs() < 1e-12);
        assert!((expected_return(&kernel, &policy, &reward).unwrap() - best).abs() < 1e-12);
    }
}

#[test]
fn history_planner_matches_product_planner_on_machine_rewards() {
    let mut rng = seeded(18);
    for deterministic in [true, false] {
        for _ in 0..5 {
            let env = random::environment(3, 2, 3, 2, 3, deterministic, &mut rng).unwrap();
            let reward = NmReward::from_environment(&env);
            let kernel = Kernel::of(&env.mdp);
            let (_, history_value) = history_dp_planner(&kernel, &reward).unwrap();
            let cp = CrossProductMdp::build(&env);
            let product_value = cp.value_iteration().value(0, cp.initial_state());
            if deterministic {
                assert!((history_value - product_value).abs() < 1e-12);
            } else {
                // the history planner cannot see the machine state
                assert!(history_value <= product_value + 1e-12);
            }
        }
    }
}

#[test]
fn markov_policies_lift_to_identical_history_values() {
    let mut rng = seeded(19);
    let env = random::environment(3, 2, 3, 1, 2, true, &mut rng).unwrap();
    let reward = NmReward::from_environment(&env);
    let kernel = Kernel::of(&env.mdp);
    let cp = CrossProductMdp::build(&env);
    let pi = random::markov_policy(3, 2, 3, &mut rng);
    let lifted = HistoryPolicy::from_markov(&pi, 3, 2, 3, 0);
    let a = expected_return(&kernel, &lifted, &reward).unwrap();
    let b = cp.policy_evaluation(&pi).unwrap().value(0, cp.initial_state());
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn reach_dp_matches_policy_enumeration() {
    let mut rng = seeded(20);
    for _ in 0..5 {
        let mdp = random::labeled_mdp(3, 2, 3, 1, &mut rng).unwrap();
        for target in 0..3 {
            let best = markov_policies(3, 2, 3)
                .unwrap()
                .map(|pi| reach_probability(&mdp, &pi, target))
                .fold(0.0, f64::max);
            assert!((max_reach_probability(&mdp, target) - best).abs() < 1e-12);
        }
    }
}

#[test]
fn visitation_learner_finds_a_near_optimal_reaching_policy() {
    // action 1 moves right w.p. 0.3, action 0 only w.p. 0.05
    let p = vec![0.95, 0.05, 0.7, 0.3, 0.0, 1.0, 0.0, 1.0];
    let mdp = LabeledMdp::new(2, 2, 3, p, vec![0; 8], 0).unwrap();
    let best = max_reach_probability(&mdp, 1);
    let phi = reward_free::visitation_policies(&mdp, 1, &ExploreConfig::new(2000), 4).unwrap();
    assert_eq!(phi.iter().map(|(n, _)| n).sum::<usize>(), 2000);
    let found = phi.iter().map(|(_, pi)| reach_probability(&mdp, pi, 1)).fold(0.0, f64::max);
    assert!(best - found <= 0.05, "{found} vs {best}");
    // the initial observation is always visited
    let phi0 = reward_free::visitation_policies(&mdp, 0, &ExploreConfig::new(50), 4).unwrap();
    assert!(phi0.iter().all(|(_, pi)| reach_probability(&mdp, pi, 0) == 1.0));
}

#[test]
fn deterministic_covering_data_recovers_the_kernel() {
    // deterministic cycle o -> o + a + 1 (mod 3)
    let mut p = vec![0.0; 18];
    for o in 0..3 {
        for a in 0..2 {
            p[(o * 2 + a) * 3 + (o + a + 1) % 3] = 1.0;
        }
    }
    let mdp = LabeledMdp::new(3, 2, 3, p, vec![0; 18], 0).unwrap();
    let mut config = ExploreConfig::new(200);
    config.gamma = 0.5;
    let data = reward_free::explore(&mdp, &config, 500, 2).unwrap();
    let k = data.empirical_kernel(0);
    assert_eq!(k.p, mdp.transitions());
    let mut rng = seeded(3);
    let reward = random_table(3, 2, 3, &mut rng);
    let (policy, _) = reward_free::plan(&data, 0, &reward, Planner::HistoryDp).unwrap();
    let truth = Kernel::of(&mdp);
    let gap = reward_free::optimality_gap(&truth, &policy, &reward, Planner::HistoryDp).unwrap();
    assert!(gap.abs() < 1e-12);
}

#[test]
fn exploration_is_seed_deterministic() {
    let mdp = random::labeled_mdp(3, 2, 3, 1, &mut seeded(30)).unwrap();
    let config = ExploreConfig::new(20);
    let a = reward_free::explore(&mdp, &config, 100, 8).unwrap();
    let b = reward_free::explore(&mdp, &config, 100, 8).unwrap();
    assert_eq!(a, b);
    assert!(a.trajectories.iter().all(|t| t.len() == 3));
    let empty = reward_free::explore(&mdp, &config, 0, 8).unwrap();
    assert!(empty.trajectories.is_empty());
    assert!(!empty.policies.is_empty());
}

#[test]
fn visitation_policies_act_uniformly_at_the_target() {
    let mdp = random::labeled_mdp(3, 2, 3, 1, &mut seeded(31)).unwrap();
    let phi = reward_free::visitation_policies(&mdp, 2, &ExploreConfig::new(30), 1).unwrap();
    let mut probs = [0.0; 2];
    for (_, pi) in &phi {
        for h in 0..3 {
            pi.action_probs(h, 2, &mut probs);
            assert_eq!(probs, [0.5, 0.5]);
        }
    }
}
