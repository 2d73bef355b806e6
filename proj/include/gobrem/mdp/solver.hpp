#pragma once

// Finite discounted MDPs with sparse per-action kernels, and Policy
// Iteration over deterministic policies.

#include "gobrem/common.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <string>
#include <vector>

namespace gobrem::mdp {

template <typename Scalar>
struct FiniteMdp {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Kernel = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

  std::vector<Kernel> transitions;  // one |S| x |S| row-stochastic kernel per action
  Matrix rewards;                   // |S| x |A|

  Eigen::Index states() const { return rewards.rows(); }
  Eigen::Index actions() const { return rewards.cols(); }

  /// Largest deviation of any kernel row sum from 1; negative entries count
  /// as their magnitude.
  Scalar stochasticity_error() const {
    Scalar worst = 0;
    for (const auto& k : transitions) {
      for (Eigen::Index s = 0; s < k.outerSize(); ++s) {
        Scalar sum = 0;
        for (typename Kernel::InnerIterator it(k, s); it; ++it) {
          if (it.value() < 0) worst = std::max(worst, -it.value());
          sum += it.value();
        }
        worst = std::max(worst, std::abs(sum - Scalar(1)));
      }
    }
    return worst;
  }
};

/// Deterministic policy: one action index per state.
using ActionVector = Eigen::VectorXi;

template <typename Scalar>
typename FiniteMdp<Scalar>::Kernel policy_kernel(const FiniteMdp<Scalar>& mdp,
                                                 const ActionVector& policy) {
  using Kernel = typename FiniteMdp<Scalar>::Kernel;
  std::vector<Eigen::Triplet<Scalar>> triplets;
  for (Eigen::Index s = 0; s < mdp.states(); ++s) {
    const Kernel& k = mdp.transitions[policy(s)];
    for (typename Kernel::InnerIterator it(k, s); it; ++it)
      triplets.emplace_back(static_cast<int>(s), static_cast<int>(it.col()), it.value());
  }
  Kernel out(mdp.states(), mdp.states());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

template <typename Scalar>
typename FiniteMdp<Scalar>::Vector policy_rewards(const FiniteMdp<Scalar>& mdp,
                                                  const ActionVector& policy) {
  typename FiniteMdp<Scalar>::Vector r(mdp.states());
  for (Eigen::Index s = 0; s < mdp.states(); ++s) r(s) = mdp.rewards(s, policy(s));
  return r;
}

/// Iterative Bellman expectation sweeps V <- r_pi + gamma P_pi V until the
/// max-norm residual drops below `tol`. The returned V satisfies
/// ||V - T_pi V||_inf < tol.
template <typename Scalar>
typename FiniteMdp<Scalar>::Vector policy_evaluation(
    const FiniteMdp<Scalar>& mdp, const ActionVector& policy, Scalar gamma, Scalar tol,
    typename FiniteMdp<Scalar>::Vector values = {}, int max_sweeps = 100000) {
  if (!(gamma >= 0 && gamma < 1)) throw std::invalid_argument("discount must lie in [0, 1)");
  if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
  if (policy.size() != mdp.states()) throw std::invalid_argument("policy size mismatch");
  if (values.size() != mdp.states()) values = FiniteMdp<Scalar>::Vector::Zero(mdp.states());

  const auto kernel = policy_kernel(mdp, policy);
  const auto r = policy_rewards(mdp, policy);
  Scalar residual = 0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    typename FiniteMdp<Scalar>::Vector next = r + gamma * (kernel * values);
    residual = (next - values).template lpNorm<Eigen::Infinity>();
    values.swap(next);
    // The swapped-in iterate's own residual is at most gamma times this one.
    if (residual < tol) return values;
  }
  throw ConvergenceError("policy evaluation did not converge within " +
                             std::to_string(max_sweeps) + " sweeps (residual " +
                             std::to_string(static_cast<double>(residual)) + ")",
                         static_cast<double>(residual));
}

/// One-step lookahead values Q(s, a) = r(s, a) + gamma * E[V(s')].
template <typename Scalar>
typename FiniteMdp<Scalar>::Matrix action_values(const FiniteMdp<Scalar>& mdp,
                                                 const typename FiniteMdp<Scalar>::Vector& values,
                                                 Scalar gamma) {
  typename FiniteMdp<Scalar>::Matrix q = mdp.rewards;
  for (Eigen::Index a = 0; a < mdp.actions(); ++a) q.col(a) += gamma * (mdp.transitions[a] * values);
  return q;
}

/// Greedy policy w.r.t. `values`. Actions within a relative 1e-12 of the
/// best count as tied; ties go to the lowest action index.
template <typename Scalar>
ActionVector policy_improvement(const FiniteMdp<Scalar>& mdp,
                                const typename FiniteMdp<Scalar>::Vector& values, Scalar gamma) {
  const auto q = action_values(mdp, values, gamma);
  ActionVector policy(mdp.states());
  for (Eigen::Index s = 0; s < mdp.states(); ++s) {
    const Scalar best = q.row(s).maxCoeff();
    const Scalar slack = Scalar(1e-12) * std::max(Scalar(1), std::abs(best));
    Eigen::Index a = 0;
    while (q(s, a) < best - slack) ++a;
    policy(s) = static_cast<int>(a);
  }
  return policy;
}

template <typename Scalar>
struct PolicyIterationResult {
  ActionVector policy;
  typename FiniteMdp<Scalar>::Vector values;
  int rounds = 0;
  /// Sum of state values after each evaluation step.
  std::vector<Scalar> value_sums;
};

/// Alternates evaluation and greedy improvement from `initial` until the
/// policy stops changing.
template <typename Scalar>
PolicyIterationResult<Scalar> policy_iteration(const FiniteMdp<Scalar>& mdp, Scalar gamma,
                                               Scalar tol, ActionVector initial,
                                               int max_rounds = 1000) {
  if (initial.size() != mdp.states()) throw std::invalid_argument("initial policy size mismatch");
  PolicyIterationResult<Scalar> result;
  result.policy = std::move(initial);
  typename FiniteMdp<Scalar>::Vector values;
  for (int round = 1; round <= max_rounds; ++round) {
    values = policy_evaluation(mdp, result.policy, gamma, tol, std::move(values));
    result.value_sums.push_back(values.sum());
    ActionVector next = policy_improvement(mdp, values, gamma);
    result.rounds = round;
    if (next == result.policy) {
      result.values = std::move(values);
      return result;
    }
    result.policy = std::move(next);
  }
  throw ConvergenceError("policy iteration exceeded " + std::to_string(max_rounds) + " rounds",
                         0.0);
}

}  // namespace gobrem::mdp
