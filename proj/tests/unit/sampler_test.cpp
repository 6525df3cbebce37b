#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dolda/error.hpp"
#include "dolda/hash.hpp"
#include "dolda/sampler.hpp"
#include "dolda/simulate.hpp"

namespace dolda {
namespace {

struct Fixture {
  Corpus corpus;
  RunConfig config;
  ModelState state;
};

// Small supervised problem with eta, a and phi moved away from their start.
Fixture make_fixture(std::size_t K, std::size_t L, std::size_t P, std::size_t D,
                     std::size_t N, std::uint64_t seed) {
  SimulationConfig sim;
  sim.hyper.num_topics = static_cast<std::uint32_t>(K);
  sim.hyper.alpha = 0.3;
  sim.hyper.beta = 0.2;
  sim.prior.c = 3.0;
  sim.num_docs = D;
  sim.doc_length = N;
  sim.vocabulary_size = 12;
  sim.num_classes = L;
  sim.num_covariates = P;
  sim.seed = seed;
  Fixture f;
  f.corpus = forward_simulate(sim).corpus;
  f.config.hyper = sim.hyper;
  f.config.prior = sim.prior;
  f.config.iterations = 10;
  f.config.burn_in = 5;
  f.config.phi_mean_window = 5;
  f.config.thinning = 1;
  f.config.seed = seed;
  f.state = init_model_state(f.corpus, f.config);
  std::mt19937_64 gen(seed);
  std::normal_distribution<> n01;
  for (Eigen::Index i = 0; i < f.state.regression.eta.size(); ++i) {
    f.state.regression.eta.data()[i] = 1.5 * n01(gen);
  }
  for (Eigen::Index i = 0; i < f.state.regression.a.size(); ++i) {
    f.state.regression.a.data()[i] = n01(gen);
  }
  f.state.eta_cross = eta_cross_product(f.state.regression.eta, K);
  return f;
}

Eigen::VectorXd zbar_without_token(const ModelState& state, std::size_t d, std::size_t N) {
  return state.topics.doc_topic.row(static_cast<Eigen::Index>(d)).transpose().cast<double>() /
         static_cast<double>(N);
}

TEST(ComputeG, HandExample) {
  Eigen::MatrixXd eta(2, 1);
  eta << 0.0, 1.0;
  const Eigen::VectorXd zbar = Eigen::VectorXd::Constant(1, 0.5);
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 0.5);
  EXPECT_DOUBLE_EQ(compute_g_full(0, zbar, Eigen::VectorXd(0), a, eta, 2), -0.125);
}

TEST(ComputeG, ZeroCoefficientsGiveZero) {
  const Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(4, 3);
  const Eigen::VectorXd zbar = Eigen::Vector2d(0.2, 0.3);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 7.0);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(compute_g_full(k, zbar, x, Eigen::Vector3d(1, -2, 3), eta, 5), 0.0);
  }
}

TEST(ComputeG, DifferencesInvariantToResidualShift) {
  std::mt19937_64 gen(2);
  std::normal_distribution<> n01;
  for (int trial = 0; trial < 100; ++trial) {
    const int K = 4, L = 3;
    Eigen::MatrixXd eta(1 + K, L);
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta.data()[i] = n01(gen);
    Eigen::VectorXd zbar(K);
    for (int k = 0; k < K; ++k) zbar[k] = std::abs(n01(gen)) / K;
    Eigen::VectorXd a(L);
    for (int l = 0; l < L; ++l) a[l] = n01(gen);
    // Shifting a and the predicted value together: move a and the intercept by c.
    const double c = 3.0 * n01(gen);
    Eigen::MatrixXd eta2 = eta;
    eta2.row(0).array() += c;
    const Eigen::VectorXd a2 = a.array() + c;
    const Eigen::VectorXd x(0);
    for (int k = 1; k < K; ++k) {
      const double d1 = compute_g_full(k, zbar, x, a, eta, 9) - compute_g_full(0, zbar, x, a, eta, 9);
      const double d2 =
          compute_g_full(k, zbar, x, a2, eta2, 9) - compute_g_full(0, zbar, x, a2, eta2, 9);
      EXPECT_NEAR(d1, d2, 1e-12);
    }
  }
}

TEST(UpdateG, NoOpAndZeroCrossProduct) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Random(3, 3);
  S = S * S.transpose();
  std::vector<double> g{0.1, -0.2, 0.3};
  const auto before = g;
  update_g_incremental(g, S, 1, 1, 7);
  EXPECT_EQ(g, before);
  update_g_incremental(g, Eigen::MatrixXd::Zero(3, 3), 0, 2, 7);
  EXPECT_EQ(g, before);
}

TEST(UpdateG, RandomTrajectoryMatchesFromScratch) {
  std::mt19937_64 gen(12);
  std::normal_distribution<> n01;
  const std::size_t K = 5, L = 3, N = 17;
  Eigen::MatrixXd eta(1 + K, L);
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta.data()[i] = n01(gen);
  const Eigen::MatrixXd S = eta_cross_product(eta, K);
  Eigen::VectorXd a(L);
  for (std::size_t l = 0; l < L; ++l) a[l] = n01(gen);
  std::vector<TopicId> z(N);
  for (auto& t : z) t = static_cast<TopicId>(gen() % K);
  auto counts_without = [&](std::size_t skip) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(K);
    for (std::size_t n = 0; n < N; ++n) {
      if (n != skip) c[z[n]] += 1.0;
    }
    return Eigen::VectorXd(c / static_cast<double>(N));
  };
  auto scratch = [&](std::size_t skip) {
    std::vector<double> g(K);
    const auto zb = counts_without(skip);
    for (std::size_t k = 0; k < K; ++k) g[k] = compute_g_full(k, zb, Eigen::VectorXd(0), a, eta, N);
    return g;
  };
  std::size_t current = 0;
  auto g = scratch(current);
  double worst = 0.0;
  for (int move = 0; move < 1000; ++move) {
    // The excluded token takes a new topic and returns; the next one leaves.
    z[current] = static_cast<TopicId>(gen() % K);
    const std::size_t next = gen() % N;
    if (next == current) continue;
    update_g_incremental(g, S, z[next], z[current], N);
    current = next;
    const auto expected = scratch(current);
    for (std::size_t k = 0; k < K; ++k) worst = std::max(worst, std::abs(g[k] - expected[k]));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(EtaCross, MatchesDefinition) {
  Eigen::MatrixXd eta = Eigen::MatrixXd::Random(5, 3);
  const auto S = eta_cross_product(eta, 3);
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int l = 0; l < 3; ++l) s += eta(1 + k, l) * eta(1 + j, l);
      EXPECT_NEAR(S(k, j), s, 1e-14);
    }
  }
}

// Cached g seen by the observer equals the from-scratch value at every token.
TEST(SampleTopicIndicators, CacheCoherentWithFromScratch) {
  for (auto kernel : {ZKernel::kCached, ZKernel::kNaive}) {
    auto f = make_fixture(4, 3, 2, 30, 40, 5);
    f.config.z_kernel = kernel;
    std::size_t checked = 0;
    double worst = 0.0;
    const TokenObserver obs = [&](std::size_t d, std::size_t, std::span<const double> g,
                                  std::span<const double>) {
      const auto N = f.corpus.doc_length(d);
      const auto zb = zbar_without_token(f.state, d, N);
      const Eigen::VectorXd x = f.corpus.covariates.row(static_cast<Eigen::Index>(d)).transpose();
      const Eigen::VectorXd a = f.state.regression.a.row(static_cast<Eigen::Index>(d)).transpose();
      for (std::size_t k = 0; k < g.size(); ++k) {
        worst = std::max(worst, std::abs(g[k] - compute_g_full(k, zb, x, a, f.state.regression.eta, N)));
      }
      ++checked;
    };
    for (int sweep = 0; sweep < 3; ++sweep) {
      f.state.regression.eta *= 1.3;
      f.state.eta_cross = eta_cross_product(f.state.regression.eta, 4);
      sample_topic_indicators(f.state, f.corpus, f.config, &obs);
    }
    EXPECT_EQ(checked, 3u * 30 * 40);
    EXPECT_LT(worst, 1e-8) << static_cast<int>(kernel);
  }
}

// Conditional of one indicator by enumerating both values in the joint:
// phi_{k,w} (n_dk + alpha) prod_l N(a_l; h_l(z = k), 1).
TEST(SampleTopicIndicators, MatchesEnumerationOracleForTwoTopics) {
  auto f = make_fixture(2, 2, 1, 20, 15, 8);
  double worst = 0.0;
  const TokenObserver obs = [&](std::size_t d, std::size_t n, std::span<const double>,
                                std::span<const double> p) {
    const auto row = static_cast<Eigen::Index>(d);
    const auto N = static_cast<double>(f.corpus.doc_length(d));
    const WordId w = f.corpus.docs[d][n];
    const auto& eta = f.state.regression.eta;
    std::array<double, 2> logj{};
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd counts = f.state.topics.doc_topic.row(row).transpose().cast<double>();
      const double n_dk = counts[k];
      counts[k] += 1.0;
      const Eigen::VectorXd design = design_row(counts / N, f.corpus.covariates.row(row).transpose());
      double lp = std::log(f.state.topics.phi(k, w)) + std::log(n_dk + f.config.hyper.alpha);
      for (int l = 0; l < 2; ++l) {
        const double r = f.state.regression.a(row, l) - design.dot(eta.col(l));
        lp += -0.5 * r * r;
      }
      logj[k] = lp;
    }
    const double p0 = 1.0 / (1.0 + std::exp(logj[1] - logj[0]));
    worst = std::max({worst, std::abs(p[0] - p0), std::abs(p[1] - (1.0 - p0))});
  };
  for (int sweep = 0; sweep < 2; ++sweep) sample_topic_indicators(f.state, f.corpus, f.config, &obs);
  EXPECT_LT(worst, 1e-10);
}

TEST(SampleTopicIndicators, ZeroCoefficientsReduceToUnsupervised) {
  auto f = make_fixture(3, 2, 0, 10, 12, 3);
  f.state.regression.eta.setZero();
  f.state.eta_cross.setZero();
  double worst = 0.0;
  const TokenObserver obs = [&](std::size_t d, std::size_t n, std::span<const double>,
                                std::span<const double> p) {
    const WordId w = f.corpus.docs[d][n];
    Eigen::Vector3d q;
    for (int k = 0; k < 3; ++k) {
      q[k] = f.state.topics.phi(k, w) *
             (f.state.topics.doc_topic(static_cast<Eigen::Index>(d), k) + f.config.hyper.alpha);
    }
    q /= q.sum();
    for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(p[k] - q[k]));
  };
  sample_topic_indicators(f.state, f.corpus, f.config, &obs);
  EXPECT_LT(worst, 1e-12);
}

TEST(SampleTopicIndicators, PermutingTopicsPermutesConditional) {
  const std::size_t K = 4;
  auto f = make_fixture(K, 3, 1, 15, 20, 9);
  const std::array<TopicId, 4> perm{2, 0, 3, 1};  // new id of old topic k
  auto g = f;
  for (std::size_t k = 0; k < K; ++k) {
    g.state.topics.phi.row(perm[k]) = f.state.topics.phi.row(k);
    g.state.topics.doc_topic.col(perm[k]) = f.state.topics.doc_topic.col(k);
    g.state.topics.topic_word.row(perm[k]) = f.state.topics.topic_word.row(k);
    g.state.topics.topic_totals[perm[k]] = f.state.topics.topic_totals[k];
    g.state.regression.eta.row(1 + perm[k]) = f.state.regression.eta.row(1 + k);
  }
  for (auto& doc : g.state.topics.z) {
    for (auto& t : doc) t = perm[t];
  }
  g.state.eta_cross = eta_cross_product(g.state.regression.eta, K);

  // Only the first token of each document sees identical inputs in both runs.
  std::vector<std::vector<double>> first_f(15), first_g(15);
  const TokenObserver of = [&](std::size_t d, std::size_t n, std::span<const double>,
                               std::span<const double> p) {
    if (n == 0) first_f[d].assign(p.begin(), p.end());
  };
  const TokenObserver og = [&](std::size_t d, std::size_t n, std::span<const double>,
                               std::span<const double> p) {
    if (n == 0) first_g[d].assign(p.begin(), p.end());
  };
  sample_topic_indicators(f.state, f.corpus, f.config, &of);
  sample_topic_indicators(g.state, g.corpus, g.config, &og);
  for (std::size_t d = 0; d < 15; ++d) {
    for (std::size_t k = 0; k < K; ++k) EXPECT_NEAR(first_g[d][perm[k]], first_f[d][k], 1e-12);
  }
}

TEST(SampleTopicIndicators, KernelsAgree) {
  auto a = make_fixture(5, 3, 1, 25, 30, 14);
  auto b = a;
  b.config.z_kernel = ZKernel::kNaive;
  sample_topic_indicators(a.state, a.corpus, a.config);
  sample_topic_indicators(b.state, b.corpus, b.config);
  EXPECT_EQ(a.state.topics.z, b.state.topics.z);
}

TEST(GibbsIteration, ConservesCountsEachSweep) {
  auto f = make_fixture(3, 2, 1, 40, 25, 4);
  for (int it = 0; it < 10; ++it) {
    gibbs_iteration(f.state, f.corpus, f.config);
    ASSERT_TRUE(counts_consistent(f.state.topics, f.corpus));
    EXPECT_EQ(f.state.topics.doc_topic.sum(), static_cast<int>(f.corpus.num_tokens()));
    EXPECT_EQ(f.state.topics.topic_word.sum(), static_cast<int>(f.corpus.num_tokens()));
    EXPECT_TRUE(latent_signs_consistent(f.state.regression.a, f.corpus.labels));
    EXPECT_NEAR((f.state.topics.phi.rowwise().sum().array() - 1.0).abs().maxCoeff(), 0.0, 1e-12);
  }
  EXPECT_EQ(f.state.iteration, 10u);
}

TEST(GibbsIteration, WorkerCountInvariant) {
  std::vector<std::string> hashes;
  for (unsigned workers : {1u, 2u, 8u}) {
    auto f = make_fixture(6, 3, 2, 60, 30, 21);
    f.state = init_model_state(f.corpus, f.config);
    f.config.workers = workers;
    for (int it = 0; it < 10; ++it) gibbs_iteration(f.state, f.corpus, f.config);
    hashes.push_back(state_hash(f.state));
  }
  EXPECT_EQ(hashes[0], hashes[1]);
  EXPECT_EQ(hashes[0], hashes[2]);
}

TEST(GibbsIteration, SeedChangesTrajectory) {
  auto a = make_fixture(3, 2, 0, 20, 20, 2);
  auto b = a;
  b.config.seed = 3;
  gibbs_iteration(a.state, a.corpus, a.config);
  gibbs_iteration(b.state, b.corpus, b.config);
  EXPECT_NE(state_hash(a.state), state_hash(b.state));
}

TEST(GibbsIteration, UnsupervisedLeavesRegressionUntouched) {
  auto f = make_fixture(3, 2, 0, 20, 20, 6);
  f.config.supervised = false;
  const auto eta = f.state.regression.eta;
  gibbs_iteration(f.state, f.corpus, f.config);
  EXPECT_EQ(f.state.regression.eta, eta);
}

TEST(RunConfig, Validation) {
  RunConfig c;
  c.iterations = 100;
  c.burn_in = 100;
  EXPECT_THROW(c.validate(), ValidationError);
  c.burn_in = 50;
  c.phi_mean_window = 51;
  EXPECT_THROW(c.validate(), ValidationError);
  c.phi_mean_window = 50;
  EXPECT_NO_THROW(c.validate());
  c.workers = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c.workers = 1;
  c.hyper.alpha = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(LogLikelihood, ZeroCoefficientsTwoClasses) {
  auto f = make_fixture(3, 2, 0, 11, 10, 1);
  f.state.regression.eta.setZero();
  const auto ll = log_likelihood(f.state, f.corpus, f.config.hyper);
  EXPECT_NEAR(ll.do_probit, 11 * std::log(0.5), 1e-12);
  EXPECT_NEAR(do_label_log_likelihood(f.state, f.corpus), 11 * std::log(0.5), 1e-12);
}

TEST(LogLikelihood, LogSpaceMatchesDirectProduct) {
  auto f = make_fixture(4, 3, 1, 25, 10, 7);
  const auto h = linear_predictors(f.state, f.corpus);
  double direct = 0.0;
  auto Phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  for (Eigen::Index d = 0; d < h.rows(); ++d) {
    double sum = 0.0;
    for (Eigen::Index s = 0; s < h.cols(); ++s) {
      double term = 1.0 - Phi(-h(d, s));
      for (Eigen::Index l = 0; l < h.cols(); ++l) {
        if (l != s) term *= Phi(-h(d, l));
      }
      sum += term;
    }
    direct += std::log(sum);
  }
  EXPECT_NEAR(log_likelihood(f.state, f.corpus, f.config.hyper).do_probit, direct, 1e-9);
}

TEST(LogLikelihood, DirichletMultinomialTermHandExample) {
  // One topic, two word types with counts (2, 1) and beta = 1:
  // p(w | z) = B(3, 2) / B(1, 1) = 1 / 12.
  Corpus c;
  c.vocabulary = Vocabulary({"a", "b"});
  c.label_names = {"x"};
  c.docs = {{0, 0, 1}};
  c.labels = {0};
  c.doc_ids = {"d"};
  c.covariates = Eigen::MatrixXd::Zero(1, 0);
  RunConfig cfg;
  cfg.hyper.num_topics = 1;
  cfg.hyper.beta = 1.0;
  cfg.hyper.alpha = 1.0;
  const auto state = init_model_state(c, cfg);
  EXPECT_NEAR(log_likelihood(state, c, cfg.hyper).lda, std::log(1.0 / 12.0), 1e-12);
}

TEST(LinearPredictors, MatchDesignTimesEta) {
  auto f = make_fixture(3, 2, 2, 8, 9, 13);
  const auto h = linear_predictors(f.state, f.corpus);
  const auto X = design_matrix(zbar_matrix(f.state.topics), f.corpus.covariates);
  EXPECT_LT((h - X * f.state.regression.eta).cwiseAbs().maxCoeff(), 1e-12);
}

}  // namespace
}  // namespace dolda
