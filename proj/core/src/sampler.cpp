#include "dolda/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "dolda/distributions.hpp"
#include "dolda/error.hpp"
#include "dolda/parallel.hpp"

namespace dolda {
namespace {

struct TokenScratch {
  std::vector<double> g;
  std::vector<double> e;  // exp(g - shift), the supervised factor
  std::vector<double> cumulative;
  std::vector<double> probabilities;
  Eigen::VectorXd zbar;
  Eigen::VectorXd h;
  // Cached kernel: lazily filled columns exp(+-S[:, j] / N^2) for the current document.
  std::vector<double> grow;
  std::vector<double> shrink;
  std::vector<std::uint8_t> column_ready;

  TokenScratch(std::size_t K, std::size_t L, bool cached)
      : g(K), e(K), cumulative(K), probabilities(K), zbar(static_cast<Eigen::Index>(K)),
        h(static_cast<Eigen::Index>(L)) {
    if (cached) {
      grow.resize(K * K);
      shrink.resize(K * K);
      column_ready.resize(K);
    }
  }
};

// Fills cumulative weights phi_{k,v} (n_{d,k} + alpha) e_k and samples.
// Returns K when the total is not a usable positive number.
std::size_t weigh_and_draw(const double* phi, const std::int32_t* counts, const double* e,
                           double alpha, TokenScratch& s, double u) {
  const std::size_t K = s.cumulative.size();
  double total = 0.0;
  if (e != nullptr) {
    for (std::size_t k = 0; k < K; ++k) {
      total += phi[k] * (counts[k] + alpha) * e[k];
      s.cumulative[k] = total;
    }
  } else {
    for (std::size_t k = 0; k < K; ++k) {
      total += phi[k] * (counts[k] + alpha);
      s.cumulative[k] = total;
    }
  }
  if (!(total > 1e-280) || !(total < 1e280)) return K;
  const double target = u * total;
  auto it = std::upper_bound(s.cumulative.begin(), s.cumulative.end(), target);
  std::size_t k = static_cast<std::size_t>(it - s.cumulative.begin());
  if (k >= K) k = K - 1;
  // Never land on a zero-width bucket.
  while (s.cumulative[k] == (k > 0 ? s.cumulative[k - 1] : 0.0)) --k;
  return k;
}

void reset_factor(TokenScratch& s) {
  const double gmax = *std::max_element(s.g.begin(), s.g.end());
  for (std::size_t k = 0; k < s.g.size(); ++k) s.e[k] = std::exp(s.g[k] - gmax);
}

void notify(std::size_t d, std::size_t n, const ZSweepContext& ctx, TokenScratch& s) {
  if (ctx.observer == nullptr) return;
  const std::size_t K = s.cumulative.size();
  const double total = s.cumulative[K - 1];
  double prev = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    s.probabilities[k] = (s.cumulative[k] - prev) / total;
    prev = s.cumulative[k];
  }
  (*ctx.observer)(d, n, s.g, s.probabilities);
}

TopicId draw_topic(std::size_t d, std::size_t n, WordId v, Eigen::Index doc_row,
                   const TopicState& topics, const ZSweepContext& ctx, TokenScratch& s,
                   RngStream& rng) {
  const double* phi = ctx.phi_by_word.row(v).data();
  const auto* counts = topics.doc_topic.row(doc_row).data();
  const double u = rng.uniform();
  const double* e = ctx.supervised ? s.e.data() : nullptr;
  std::size_t k = weigh_and_draw(phi, counts, e, ctx.alpha, s, u);
  if (k == s.g.size() && ctx.supervised) {
    // The running factor drifted out of range; rebuild it from g.
    reset_factor(s);
    k = weigh_and_draw(phi, counts, e, ctx.alpha, s, u);
  }
  if (k == s.g.size()) {
    throw NumericalError("topic indicator weights vanished for document " +
                         std::to_string(d) + ", token " + std::to_string(n));
  }
  notify(d, n, ctx, s);
  return static_cast<TopicId>(k);
}

void sweep_cached(std::size_t d, TopicState& topics, const ZSweepContext& ctx,
                  TokenScratch& s, RngStream& rng, std::vector<TokenMove>& moves) {
  const auto& doc = ctx.corpus.docs[d];
  const std::size_t N = doc.size();
  const std::size_t K = s.g.size();
  const auto row = static_cast<Eigen::Index>(d);
  auto& z = topics.z[d];
  const double inv_n = 1.0 / static_cast<double>(N);
  const double inv_n2 = inv_n * inv_n;

  if (ctx.supervised) {
    // g for the full current assignment: (1/N) sum_l eta_lk r_l - S_kk / (2 N^2),
    // with r the residual of the latent utilities.
    s.zbar = topics.doc_topic.row(row).transpose().cast<double>() * inv_n;
    const Eigen::VectorXd design = design_row(s.zbar, ctx.corpus.covariates.row(row).transpose());
    s.h = (design.transpose() * ctx.eta).transpose();
    const Eigen::VectorXd residual = ctx.a.row(row).transpose() - s.h;
    const Eigen::VectorXd base = ctx.topic_eta * residual;
    for (std::size_t k = 0; k < K; ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      s.g[k] = base[ki] * inv_n - 0.5 * ctx.eta_cross(ki, ki) * inv_n2;
    }
    reset_factor(s);
    std::fill(s.column_ready.begin(), s.column_ready.end(), 0);
  }

  // exp(g) moves by exp(S[k][leaving] / N^2) and exp(-S[k][entering] / N^2).
  const double* shared_up = nullptr;
  const double* shared_down = nullptr;
  if (ctx.supervised) {
    if (auto it = ctx.length_table.find(N); it != ctx.length_table.end()) {
      shared_up = ctx.grow_tables[it->second].data();
      shared_down = ctx.shrink_tables[it->second].data();
    }
  }
  auto grow_column = [&](TopicId j) -> const double* {
    if (shared_up != nullptr) return shared_up + j * K;
    double* up = &s.grow[j * K];
    if (!s.column_ready[j]) {
      const double* sj = ctx.eta_cross.col(j).data();
      double* down = &s.shrink[j * K];
      for (std::size_t k = 0; k < K; ++k) {
        up[k] = std::exp(sj[k] * inv_n2);
        down[k] = 1.0 / up[k];
      }
      s.column_ready[j] = 1;
    }
    return up;
  };
  auto shrink_column = [&](TopicId j) -> const double* {
    if (shared_down != nullptr) return shared_down + j * K;
    grow_column(j);
    return &s.shrink[j * K];
  };

  bool have_pending = false;
  TopicId pending = 0;
  for (std::size_t n = 0; n < N; ++n) {
    const TopicId old_topic = z[n];
    --topics.doc_topic(row, old_topic);
    if (ctx.supervised) {
      const double* leaving = ctx.eta_cross.col(old_topic).data();
      const double* up = grow_column(old_topic);
      if (!have_pending) {
        for (std::size_t k = 0; k < K; ++k) {
          s.g[k] += leaving[k] * inv_n2;
          s.e[k] *= up[k];
        }
      } else if (pending != old_topic) {
        const double* entering = ctx.eta_cross.col(pending).data();
        const double* down = shrink_column(pending);
        for (std::size_t k = 0; k < K; ++k) {
          s.g[k] += (leaving[k] - entering[k]) * inv_n2;
          s.e[k] *= up[k] * down[k];
        }
      }
    }
    const TopicId new_topic = draw_topic(d, n, doc[n], row, topics, ctx, s, rng);
    ++topics.doc_topic(row, new_topic);
    if (new_topic != old_topic) {
      z[n] = new_topic;
      moves.push_back({doc[n], old_topic, new_topic});
    }
    pending = new_topic;
    have_pending = true;
  }
}

void sweep_naive(std::size_t d, TopicState& topics, const ZSweepContext& ctx,
                 TokenScratch& s, RngStream& rng, std::vector<TokenMove>& moves) {
  const auto& doc = ctx.corpus.docs[d];
  const std::size_t N = doc.size();
  const std::size_t K = s.g.size();
  const auto L = ctx.eta.cols();
  const auto row = static_cast<Eigen::Index>(d);
  auto& z = topics.z[d];
  const double inv_n = 1.0 / static_cast<double>(N);
  const Eigen::VectorXd x = ctx.corpus.covariates.row(row).transpose();
  const Eigen::VectorXd a_row = ctx.a.row(row).transpose();

  for (std::size_t n = 0; n < N; ++n) {
    const TopicId old_topic = z[n];
    --topics.doc_topic(row, old_topic);
    if (ctx.supervised) {
      s.zbar = topics.doc_topic.row(row).transpose().cast<double>() * inv_n;
      const Eigen::VectorXd design = design_row(s.zbar, x);
      for (Eigen::Index l = 0; l < L; ++l) s.h[l] = design.dot(ctx.eta.col(l));
      for (std::size_t k = 0; k < K; ++k) {
        const double* eta_k = ctx.topic_eta.row(static_cast<Eigen::Index>(k)).data();
        double acc = 0.0;
        for (Eigen::Index l = 0; l < L; ++l) {
          const double scaled = eta_k[l] * inv_n;
          acc += scaled * (a_row[l] - s.h[l]) - 0.5 * scaled * scaled;
        }
        s.g[k] = acc;
      }
      reset_factor(s);
    }
    const TopicId new_topic = draw_topic(d, n, doc[n], row, topics, ctx, s, rng);
    ++topics.doc_topic(row, new_topic);
    if (new_topic != old_topic) {
      z[n] = new_topic;
      moves.push_back({doc[n], old_topic, new_topic});
    }
  }
}

}  // namespace

void RunConfig::validate() const {
  hyper.validate();
  prior.validate();
  if (iterations == 0) throw ValidationError("iterations must be positive");
  if (burn_in >= iterations) throw ValidationError("burn_in must be below iterations");
  if (phi_mean_window == 0 || phi_mean_window > iterations - burn_in) {
    throw ValidationError("phi_mean_window must lie in [1, iterations - burn_in]");
  }
  if (thinning == 0) throw ValidationError("thinning must be positive");
  if (workers == 0) throw ValidationError("workers must be positive");
}

ModelState init_model_state(const Corpus& corpus, const RunConfig& config) {
  config.hyper.validate();
  corpus.validate();
  if (corpus.num_classes() == 0) throw ValidationError("corpus has no classes");
  ModelState state;
  RngStream rng(config.seed, StreamPhase::kInit, 0, 0);
  state.topics = init_random(corpus, config.hyper, rng);
  const std::size_t J = 1 + config.hyper.num_topics + corpus.num_covariates();
  state.regression = RegressionState::initial(corpus.num_docs(), J, corpus.num_classes());
  state.eta_cross = Eigen::MatrixXd::Zero(config.hyper.num_topics, config.hyper.num_topics);
  return state;
}

Eigen::MatrixXd eta_cross_product(const Eigen::MatrixXd& eta, std::size_t num_topics) {
  const auto K = static_cast<Eigen::Index>(num_topics);
  const auto topic_rows = eta.middleRows(1, K);
  return topic_rows * topic_rows.transpose();
}

double compute_g_full(std::size_t k, const Eigen::VectorXd& zbar_noti, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& a_row, const Eigen::MatrixXd& eta,
                      std::size_t doc_length) {
  const Eigen::VectorXd design = design_row(zbar_noti, x);
  const double inv_n = 1.0 / static_cast<double>(doc_length);
  const auto row = static_cast<Eigen::Index>(k) + 1;
  double sum = 0.0;
  for (Eigen::Index l = 0; l < eta.cols(); ++l) {
    const double scaled = eta(row, l) * inv_n;
    const double predicted = design.dot(eta.col(l));
    sum += -2.0 * scaled * (a_row[l] - predicted) + scaled * scaled;
  }
  return -0.5 * sum;
}

void update_g_incremental(std::span<double> g, const Eigen::MatrixXd& eta_cross,
                          TopicId leaving, TopicId entering, std::size_t doc_length) {
  if (leaving == entering) return;
  const double inv_n2 = 1.0 / (static_cast<double>(doc_length) * static_cast<double>(doc_length));
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    g[k] += (eta_cross(ki, leaving) - eta_cross(ki, entering)) * inv_n2;
  }
}

ZSweepContext::ZSweepContext(const Corpus& corpus_, const ModelState& state,
                             const RunConfig& config)
    : corpus(corpus_),
      phi_by_word(state.topics.phi.transpose()),
      eta(state.regression.eta),
      topic_eta(state.regression.eta.middleRows(1, config.hyper.num_topics)),
      eta_cross(state.eta_cross),
      a(state.regression.a),
      alpha(config.hyper.alpha),
      supervised(config.supervised),
      kernel(config.z_kernel) {
  if (!supervised || kernel != ZKernel::kCached) return;
  const std::size_t K = config.hyper.num_topics;
  std::map<std::size_t, std::size_t> docs_by_length;
  for (const auto& doc : corpus.docs) {
    if (!doc.empty()) ++docs_by_length[doc.size()];
  }
  // A shared table costs K^2 exponentials; lazy columns cost up to
  // min(N, K) K per document. Memory is capped at kTableBudget bytes.
  constexpr std::size_t kTableBudget = std::size_t{1} << 27;
  const std::size_t max_tables = kTableBudget / std::max<std::size_t>(1, 2 * K * K * sizeof(double));
  std::vector<std::size_t> lengths;
  for (const auto& [length, count] : docs_by_length) {
    if (count * std::min(length, K) >= K) lengths.push_back(length);
  }
  if (lengths.size() > max_tables) {
    std::stable_sort(lengths.begin(), lengths.end(), [&](std::size_t x, std::size_t y) {
      return docs_by_length[x] > docs_by_length[y];
    });
    lengths.resize(max_tables);
  }
  grow_tables.resize(lengths.size());
  shrink_tables.resize(lengths.size());
  for (std::size_t i = 0; i < lengths.size(); ++i) length_table[lengths[i]] = i;
  parallel_for(lengths.size(), config.workers, [&](std::size_t i) {
    const double n = static_cast<double>(lengths[i]);
    const double inv_n2 = 1.0 / (n * n);
    auto& up = grow_tables[i];
    auto& down = shrink_tables[i];
    up.resize(K * K);
    down.resize(K * K);
    for (std::size_t j = 0; j < K; ++j) {
      const double* sj = eta_cross.col(static_cast<Eigen::Index>(j)).data();
      for (std::size_t k = 0; k < K; ++k) {
        up[j * K + k] = std::exp(sj[k] * inv_n2);
        down[j * K + k] = 1.0 / up[j * K + k];
      }
    }
  });
}

void sample_z_document(std::size_t d, TopicState& topics, const ZSweepContext& context,
                       RngStream& rng, std::vector<TokenMove>& moves) {
  if (context.corpus.docs[d].empty()) return;
  TokenScratch scratch(topics.num_topics(), static_cast<std::size_t>(context.eta.cols()),
                       context.kernel == ZKernel::kCached);
  if (context.kernel == ZKernel::kCached) {
    sweep_cached(d, topics, context, scratch, rng, moves);
  } else {
    sweep_naive(d, topics, context, scratch, rng, moves);
  }
}

std::size_t sample_topic_indicators(ModelState& state, const Corpus& corpus,
                                    const RunConfig& config, const TokenObserver* observer) {
  ZSweepContext context(corpus, state, config);
  context.observer = observer;
  const unsigned workers =
      std::max(1u, std::min<unsigned>(config.workers,
                                      static_cast<unsigned>(std::max<std::size_t>(corpus.num_docs(), 1))));
  std::vector<std::vector<TokenMove>> moves(workers);
  const auto iteration = state.iteration;
  auto& topics = state.topics;
  const std::size_t K = topics.num_topics();
  const auto L = static_cast<std::size_t>(context.eta.cols());

  parallel_for_blocks(corpus.num_docs(), workers,
                      [&](std::size_t begin, std::size_t end, unsigned w) {
                        TokenScratch scratch(K, L, context.kernel == ZKernel::kCached);
                        auto& out = moves[w];
                        for (std::size_t d = begin; d < end; ++d) {
                          if (corpus.docs[d].empty()) continue;
                          RngStream rng(config.seed, StreamPhase::kTopicIndicator, iteration, d);
                          if (context.kernel == ZKernel::kCached) {
                            sweep_cached(d, topics, context, scratch, rng, out);
                          } else {
                            sweep_naive(d, topics, context, scratch, rng, out);
                          }
                        }
                      });

  // Ordered reduction of the per-worker deltas.
  std::size_t moved = 0;
  for (const auto& list : moves) {
    for (const auto& m : list) {
      --topics.topic_word(m.from, m.word);
      ++topics.topic_word(m.to, m.word);
      --topics.topic_totals[m.from];
      ++topics.topic_totals[m.to];
    }
    moved += list.size();
  }
  return moved;
}

void gibbs_iteration(ModelState& state, const Corpus& corpus, const RunConfig& config,
                     const TokenObserver* observer) {
  const auto iteration = state.iteration;
  if (config.supervised) {
    const Eigen::MatrixXd design =
        design_matrix(zbar_matrix(state.topics), corpus.covariates);
    sample_latents(state.regression, design, corpus.labels, config.seed, iteration,
                   config.workers);
    sample_coefficients(state.regression, design, config.prior, config.seed, iteration,
                        config.workers);
    state.eta_cross = eta_cross_product(state.regression.eta, config.hyper.num_topics);
  }
  sample_topic_indicators(state, corpus, config, observer);
  sample_phi(state.topics, config.hyper, config.seed, iteration, config.workers);
  ++state.iteration;
}

Eigen::MatrixXd linear_predictors(const ModelState& state, const Corpus& corpus) {
  return design_matrix(zbar_matrix(state.topics), corpus.covariates) * state.regression.eta;
}

namespace {

// log of (1 - Phi(-h_s)) prod_{l != s} Phi(-h_l) for every s.
std::vector<double> orthant_log_terms(const Eigen::RowVectorXd& h) {
  double all_negative = 0.0;
  for (Eigen::Index l = 0; l < h.size(); ++l) all_negative += normal_log_cdf(-h[l]);
  std::vector<double> terms(static_cast<std::size_t>(h.size()));
  for (Eigen::Index s = 0; s < h.size(); ++s) {
    terms[static_cast<std::size_t>(s)] =
        all_negative - normal_log_cdf(-h[s]) + normal_log_cdf(h[s]);
  }
  return terms;
}

}  // namespace

LogLikelihood log_likelihood(const ModelState& state, const Corpus& corpus, const Hyper& hyper) {
  LogLikelihood ll;
  const Eigen::MatrixXd h = linear_predictors(state, corpus);
  for (Eigen::Index d = 0; d < h.rows(); ++d) {
    ll.do_probit += log_sum_exp(orthant_log_terms(h.row(d)));
  }
  const auto& counts = state.topics.topic_word;
  const double V = static_cast<double>(counts.cols());
  const double lg_beta = std::lgamma(hyper.beta);
  const double lg_vbeta = std::lgamma(V * hyper.beta);
  for (Eigen::Index k = 0; k < counts.rows(); ++k) {
    double row = lg_vbeta - std::lgamma(V * hyper.beta + state.topics.topic_totals[k]);
    for (Eigen::Index v = 0; v < counts.cols(); ++v) {
      const auto c = counts(k, v);
      if (c > 0) row += std::lgamma(hyper.beta + c) - lg_beta;
    }
    ll.lda += row;
  }
  return ll;
}

double do_label_log_likelihood(const ModelState& state, const Corpus& corpus) {
  const Eigen::MatrixXd h = linear_predictors(state, corpus);
  double total = 0.0;
  for (Eigen::Index d = 0; d < h.rows(); ++d) {
    const auto terms = orthant_log_terms(h.row(d));
    total += terms[static_cast<std::size_t>(corpus.labels[static_cast<std::size_t>(d)])] -
             log_sum_exp(terms);
  }
  return total;
}

}  // namespace dolda
