#ifndef HMMSTAB_VERIFY_HPP_
#define HMMSTAB_VERIFY_HPP_

// Exact checks of the numerator/denominator inequalities on small finite
// models, the counting lemma, and the exponential supermartingale bound.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hmmstab/bounds.hpp"
#include "hmmstab/model.hpp"

namespace hmmstab {

using Matrix = std::vector<std::vector<double>>;

// Two independent copies of a finite chain, with the diagonal block C x C.
struct PairChainSpec {
  Matrix p;
  std::vector<int> c;  // sorted; may be empty
  double rho = 1.0;    // rho_C, unused when C is empty

  static PairChainSpec from_model(const ModelSpec& model, std::vector<int> c);
  int size() const { return static_cast<int>(p.size()); }
  bool in_c(int x) const;
  // Pbar[(a,b),(a',b')]; checked against p(a,a') p(b,b') by check_tensor.
  double pair_kernel(int a, int b, int a2, int b2) const;
  bool check_tensor(double tol = 0.0) const;
};

struct ExactDeltaResult {
  std::vector<double> delta;       // sup_A |difference|, as half-L1, n = 0..N
  std::vector<double> delta_enum;  // the same sup by enumerating all subsets A
  std::vector<double> rhs;         // E[prod gbar rho^{N_C,n}] by DP over (pair state, count)
  std::vector<double> rhs_direct;  // the same by rho-weighted forward recursion
  std::vector<double> mass;        // E_nu[prod g] E_nu'[prod g]
  std::vector<double> n_counter_support;  // mass by value of N_{C,N} at the final step
};

// g_seq[i][x] = g_i(x) for i = 0..N.
ExactDeltaResult exact_delta(const PairChainSpec& spec, const std::vector<double>& nu,
                             const std::vector<double>& nu_prime, const Matrix& g_seq);

struct DenominatorRow {
  int n = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

// lhs = E_nu[prod_{i<=n} g_i(X_i)], rhs = (eps-_C)^{n-1} nu(g_0 Q g_1 1_C)
// prod_{i>=2} lambda_C(g_i 1_C), for n = 1..N.
std::vector<DenominatorRow> exact_denominator_bound(const ModelSpec& model,
                                                    const std::vector<double>& nu,
                                                    const StateSubset& c, const Matrix& g_seq);

struct CountingResult {
  int m = 0;
  int n_pairs = 0;
  double bound = 0.0;
  bool holds = false;
};

// M_n = #{i < n : x_i = 1}, N_n = #{i < n : x_i = x_{i+1} = 1}; bits past
// the end count as 0.
CountingResult counting_lemma_check(const std::vector<int>& bits, int n);
CountingResult counting_lemma_check(const std::vector<int>& bits);

struct SupermartingaleResult {
  double lhs = 0.0;
  double se = 0.0;  // zero for the exact version
  double rhs = 0.0;
  bool holds = false;
};

// Exact: E_x[exp sum_{k<n} |F_k(X_k)|] by backward recursion, for every
// start state x. f_seq[k][x] = F_k(x), k = 0..n-1.
std::vector<SupermartingaleResult> supermartingale_exact(const ModelSpec& model,
                                                         const std::vector<double>& v,
                                                         const std::vector<double>& w, double b,
                                                         const Matrix& f_seq);

struct McDriftSpec {
  std::function<double(double)> w;
  double b = 0.0;
  std::vector<std::function<double(double)>> f_seq;  // F_0..F_{n-1}
  std::vector<double> test_grid;  // where the drift condition and the sups are evaluated
};

// Monte Carlo version on a continuous model with the model's drift function;
// holds iff mean + 3 se <= rhs. Throws PreconditionFailed when
// log(QV/V) <= -W + b fails on the test grid.
SupermartingaleResult supermartingale_mc(const ModelSpec& model, const McDriftSpec& spec,
                                         double x0, int replications, std::uint64_t seed,
                                         int threads = 1);

// Randomized 3-state corpus: Dirichlet(1) transition rows and initial laws,
// log-normal emission weights over a small alphabet, a simulated path, and a
// random nonempty subset C.
struct RandomCase {
  std::uint64_t id = 0;
  ModelSpec model;
  std::vector<double> nu;
  std::vector<double> nu_prime;
  std::vector<double> obs;
  Matrix g_seq;
  std::vector<int> c;
};

struct CorpusSpec {
  std::uint64_t seed = 20240607;
  int cases = 50;
  int states = 3;
  int symbols = 4;
  int horizon = 20;
};

RandomCase random_case(const CorpusSpec& spec, std::uint64_t id);

struct CaseRow {
  std::string suite;
  std::uint64_t case_id = 0;
  int n = 0;
  std::string label;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct SuiteResult {
  std::string name;
  std::vector<CaseRow> rows;
  bool passed = true;
  int violations = 0;
};

SuiteResult run_prop51_suite(const CorpusSpec& spec, int threads = 1);
SuiteResult run_prop52_suite(const CorpusSpec& spec, int threads = 1);
SuiteResult run_lemma_a1_suite(int length = 12);
SuiteResult run_lemma_a2_suite(const CorpusSpec& spec, int mc_replications = 10000,
                               int threads = 1);

// Exact tv(n) against the assembled bounds on one corpus case: lhs = tv,
// rhs = corollary total_clipped (rows where the K-frequency hypothesis
// holds), plus lemma-form rows under suite "lemma". D is base.d when that is
// certified (eps_minus > 0), else the whole state space; C is the first
// subset passing the eta search on the observations in K.
SuiteResult corollary_case_check(const RandomCase& rc, const BoundConfig& base);
// corollary_case_check over the whole corpus; D is certified per case.
SuiteResult run_bound_suite(const CorpusSpec& spec, const BoundConfig& base, int threads = 1);

// Comparisons between exactly computed quantities allow this much relative
// roundoff.
inline constexpr double kRoundoff = 1e-12;
bool leq_roundoff(double a, double b);

}  // namespace hmmstab

#endif  // HMMSTAB_VERIFY_HPP_
