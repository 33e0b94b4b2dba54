#include "netf/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace netf {

std::string to_string(ClassifierMode mode) {
  switch (mode) {
    case ClassifierMode::standard: return "standard";
    case ClassifierMode::fixed_etf: return "fixed_etf";
    case ClassifierMode::implicit_etf: return "implicit_etf";
  }
  return "?";
}

ClassifierMode mode_from_string(const std::string& s) {
  if (s == "standard") return ClassifierMode::standard;
  if (s == "fixed_etf") return ClassifierMode::fixed_etf;
  if (s == "implicit_etf") return ClassifierMode::implicit_etf;
  throw std::invalid_argument("unknown classifier mode: " + s);
}

namespace {

void normalise_columns(Matrix& X) {
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    double n = X.col(j).norm();
    if (n == 0.0) throw std::runtime_error("zero-norm feature column");
    X.col(j) /= n;
  }
}

void normalise_rows(Matrix& X) {
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double n = X.row(i).norm();
    if (n == 0.0) throw std::runtime_error("zero-norm classifier row");
    X.row(i) /= n;
  }
}

Matrix softmax_columns(const Matrix& logits) {
  Matrix P(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    Vector z = logits.col(i);
    double m = z.maxCoeff();
    Vector e = (z.array() - m).exp();
    P.col(i) = e / e.sum();
  }
  return P;
}

// Adjoint of X -> X / ||X||_F at the pre-normalisation input.
Matrix renorm_adjoint(const Matrix& grad_out, const Matrix& normalised, double input_norm) {
  double dot = (grad_out.array() * normalised.array()).sum();
  return (grad_out - dot * normalised) / input_norm;
}

}  // namespace

UfmModel UfmModel::make(Eigen::Index d, Eigen::Index C, Eigen::Index N, ClassifierMode mode,
                        std::uint64_t seed) {
  if (N % C != 0) throw std::invalid_argument("UfmModel: N must be a multiple of C");
  UfmModel m;
  m.d = d;
  m.C = C;
  m.N = N;
  m.mode = mode;
  m.labels.resize(static_cast<std::size_t>(N));
  for (Eigen::Index i = 0; i < N; ++i) m.labels[static_cast<std::size_t>(i)] = static_cast<int>(i % C);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  m.features.resize(d, N);
  for (Eigen::Index j = 0; j < N; ++j)
    for (Eigen::Index i = 0; i < d; ++i) m.features(i, j) = gauss(rng);
  normalise_columns(m.features);

  m.W.resize(C, d);
  for (Eigen::Index i = 0; i < C; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m.W(i, j) = gauss(rng);
  normalise_rows(m.W);
  m.b = Vector::Zero(C);
  return m;
}

double EmaState::alpha_at(long step) {
  return std::max(2.0 / (static_cast<double>(step) + 1.0), 1e-4);
}

EmaState ema_update(const EmaState& state, const Matrix& H_tilde_batch, const Vector& h_G_batch) {
  EmaState next;
  next.step = state.step + 1;
  double alpha = EmaState::alpha_at(next.step);
  Matrix pre = alpha * H_tilde_batch;
  Vector g = alpha * h_G_batch;
  if (state.step > 0) {
    pre += (1.0 - alpha) * state.H_tilde;
    g += (1.0 - alpha) * state.h_G;
  }
  double n = pre.norm();
  if (n == 0.0) throw std::runtime_error("ema_update: degenerate mean matrix");
  next.H_tilde = pre / n;
  next.h_G = g;
  return next;
}

Matrix implicit_logits(const Matrix& features, const StiefelPoint& U_star, const Vector& h_G,
                       double tau) {
  Matrix M_bar = unit_column_etf(U_star.C());
  Matrix W = M_bar * U_star.matrix().transpose();
  return tau * (W * (features.colwise() - h_G));
}

double cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    Vector z = logits.col(i);
    double m = z.maxCoeff();
    double lse = std::log((z.array() - m).exp().sum()) + m;
    total += lse - z(labels[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<double>(logits.cols());
}

double accuracy(const Matrix& logits, const std::vector<int>& labels) {
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.rows(); ++c)
      if (logits(c, i) > logits(best, i)) best = c;
    if (best == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.cols());
}

double collapse_lower_bound(Eigen::Index C, double tau) {
  if (C < 2) throw std::domain_error("collapse_lower_bound: C >= 2 required");
  Matrix M_bar = unit_column_etf(C);
  StiefelPoint U = StiefelPoint::canonical(C, C);
  std::vector<int> labels(static_cast<std::size_t>(C));
  std::iota(labels.begin(), labels.end(), 0);
  Matrix logits = implicit_logits(M_bar, U, Vector::Zero(C), tau);
  return cross_entropy(logits, labels);
}

std::vector<std::vector<Eigen::Index>> stratified_batches(const std::vector<int>& labels,
                                                          Eigen::Index C, Eigen::Index batch_size,
                                                          std::uint64_t seed) {
  if (batch_size < 1) throw std::invalid_argument("stratified_batches: batch_size >= 1");
  const auto N = static_cast<Eigen::Index>(labels.size());
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> order;
  order.reserve(static_cast<std::size_t>(N));

  if (batch_size >= C) {
    // Interleave class-shuffled lists so every chunk of >= C indices covers
    // all classes (balanced labels).
    std::vector<std::vector<Eigen::Index>> per_class(static_cast<std::size_t>(C));
    for (Eigen::Index i = 0; i < N; ++i)
      per_class[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].push_back(i);
    for (auto& v : per_class) std::shuffle(v.begin(), v.end(), rng);
    std::size_t longest = 0;
    for (const auto& v : per_class) longest = std::max(longest, v.size());
    for (std::size_t k = 0; k < longest; ++k)
      for (const auto& v : per_class)
        if (k < v.size()) order.push_back(v[k]);
  } else {
    order.resize(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);
  }

  std::vector<std::vector<Eigen::Index>> batches;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

TrainerState init_trainer_state(const UfmModel& model, const TrainConfig& config) {
  TrainerState state;
  state.M_bar = unit_column_etf(model.C);
  state.rng.seed(config.seed + 0x9e3779b97f4a7c15ULL);
  state.class_mean_cache = Matrix::Zero(model.d, model.C);
  state.class_seen.assign(static_cast<std::size_t>(model.C), false);
  state.ema.step = 0;
  return state;
}

namespace {

struct BatchStats {
  Vector h_G;
  Matrix means;        // d x C after missing-class substitution
  Matrix centred;      // means - h_G
  Matrix normalised;   // centred / ||centred||_F
  double centred_norm = 0.0;
  std::vector<Eigen::Index> counts;
  std::vector<bool> present;
  std::vector<bool> backprop_column;  // column depends on the batch features
};

BatchStats batch_statistics(const Matrix& features, const std::vector<int>& labels,
                            Eigen::Index C, const std::vector<Eigen::Index>& idx,
                            TrainerState& state) {
  const auto B = static_cast<Eigen::Index>(idx.size());
  BatchStats st;
  st.counts.assign(static_cast<std::size_t>(C), 0);
  st.present.assign(static_cast<std::size_t>(C), false);
  st.backprop_column.assign(static_cast<std::size_t>(C), false);
  st.means = Matrix::Zero(features.rows(), C);
  st.h_G = Vector::Zero(features.rows());
  for (Eigen::Index k : idx) {
    int c = labels[static_cast<std::size_t>(k)];
    st.means.col(c) += features.col(k);
    st.h_G += features.col(k);
    ++st.counts[static_cast<std::size_t>(c)];
  }
  st.h_G /= static_cast<double>(B);
  for (Eigen::Index c = 0; c < C; ++c) {
    auto cc = static_cast<std::size_t>(c);
    if (st.counts[cc] > 0) {
      st.means.col(c) /= static_cast<double>(st.counts[cc]);
      st.present[cc] = true;
      st.backprop_column[cc] = true;
      state.class_mean_cache.col(c) = st.means.col(c);
      state.class_seen[cc] = true;
    } else if (state.class_seen[cc]) {
      st.means.col(c) = state.class_mean_cache.col(c);
      st.backprop_column[cc] = true;  // through -h_G only
    } else {
      st.means.col(c) = st.h_G;  // centred column vanishes
    }
  }
  st.centred = st.means.colwise() - st.h_G;
  st.centred_norm = st.centred.norm();
  if (st.centred_norm == 0.0)
    throw DegenerateFeaturesError("batch class means coincide with the global mean");
  st.normalised = st.centred / st.centred_norm;
  return st;
}

struct StepWork {
  EmaState ema_next;
  std::optional<StiefelPoint> U_star;
  Matrix W;
  Vector b;
  int inner_iterations = 0;
  double inner_seconds = 0.0;
};

}  // namespace

static StepResult train_step_on_batch(UfmModel& model, const TrainConfig& config,
                                      TrainerState& state,
                                      const std::vector<Eigen::Index>& idx) {
  const Eigen::Index C = model.C;
  const Eigen::Index d = model.d;
  const auto B = static_cast<Eigen::Index>(idx.size());
  const double tau = config.tau;

  BatchStats st = batch_statistics(model.features, model.labels, C, idx, state);
  EmaState ema_next = ema_update(state.ema, st.normalised, st.h_G);
  const double alpha = EmaState::alpha_at(ema_next.step);
  // Norm of the pre-renormalisation EMA combination, needed by the adjoint.
  double ema_pre_norm;
  {
    Matrix pre = alpha * st.normalised;
    if (state.ema.step > 0) pre += (1.0 - alpha) * state.ema.H_tilde;
    ema_pre_norm = pre.norm();
  }

  StepWork work;
  work.ema_next = ema_next;
  std::optional<NearestEtfProblem> problem;

  switch (model.mode) {
    case ClassifierMode::standard:
      work.W = model.W;
      work.b = model.b;
      break;
    case ClassifierMode::fixed_etf: {
      if (!state.U_star) {
        state.U_star = config.init_scheme == InitScheme::canonical
                           ? StiefelPoint::canonical(d, C)
                           : haar_orthonormal(d, C, state.rng);
      }
      work.U_star = state.U_star;
      work.W = state.M_bar * work.U_star->matrix().transpose();
      work.b = config.fixed_etf_centred_bias ? Vector(-work.W * ema_next.h_G)
                                             : Vector(Vector::Zero(C));
      break;
    }
    case ClassifierMode::implicit_etf: {
      TrustRegionOptions opts;
      opts.tol = config.solver_tol;
      opts.max_iter = config.solver_max_iter;
      StiefelPoint warm = state.U_star ? *state.U_star
                                       : initialize_directions(ema_next.H_tilde, C,
                                                               config.init_scheme, state.rng, opts);
      problem = NearestEtfProblem::make(ema_next.H_tilde, C, config.delta, warm);
      auto t0 = std::chrono::steady_clock::now();
      EtfSolution sol = solve_nearest_etf(*problem, warm, opts);
      auto t1 = std::chrono::steady_clock::now();
      if (!sol.report.converged)
        throw std::runtime_error(
            "inner nearest-ETF solve failed to converge (gradient norm " +
            std::to_string(sol.report.riemannian_grad_norm) + "); step aborted");
      work.inner_iterations = sol.report.iterations;
      work.inner_seconds = std::chrono::duration<double>(t1 - t0).count();
      work.U_star = sol.U_star;
      work.W = state.M_bar * sol.U_star.matrix().transpose();
      work.b = -work.W * ema_next.h_G;
      break;
    }
  }

  // Forward pass on the batch.
  Matrix Hb(d, B);
  std::vector<int> batch_labels(static_cast<std::size_t>(B));
  for (Eigen::Index k = 0; k < B; ++k) {
    Hb.col(k) = model.features.col(idx[static_cast<std::size_t>(k)]);
    batch_labels[static_cast<std::size_t>(k)] =
        model.labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
  }
  Matrix logits = tau * ((work.W * Hb).colwise() + work.b);
  double loss = cross_entropy(logits, batch_labels);
  double top1 = accuracy(logits, batch_labels);

  Matrix delta = softmax_columns(logits);
  for (Eigen::Index k = 0; k < B; ++k) delta(batch_labels[static_cast<std::size_t>(k)], k) -= 1.0;
  delta /= static_cast<double>(B);

  // Direct gradient path.
  Matrix grad_h = tau * (work.W.transpose() * delta);
  Vector delta_rowsum = delta.rowwise().sum();
  const bool centred_bias =
      model.mode == ClassifierMode::implicit_etf ||
      (model.mode == ClassifierMode::fixed_etf && config.fixed_etf_centred_bias);
  if (centred_bias) {
    // b = -W h_G^ema and h_G^ema carries weight alpha/B on each batch feature.
    Vector through_g = -(alpha / static_cast<double>(B)) * tau * (work.W.transpose() * delta_rowsum);
    grad_h.colwise() += through_g;
  }

  // Indirect path through the argmin layer.
  if (model.mode == ClassifierMode::implicit_etf && config.use_ddn_vjp) {
    Matrix X = Hb.colwise() - ema_next.h_G;
    Matrix upstream = tau * (X * delta.transpose() * state.M_bar);
    EtfSolution sol{*work.U_star, SolveReport{}, true};
    ImplicitJacobian jac = ImplicitJacobian::build(*problem, sol);
    Matrix g_ema = jac.vjp(upstream);
    Matrix g_pre = renorm_adjoint(g_ema, ema_next.H_tilde, ema_pre_norm);
    Matrix g_batch_norm = alpha * g_pre;
    Matrix g_centred = renorm_adjoint(g_batch_norm, st.normalised, st.centred_norm);
    // Columns -> per-sample contributions.
    Vector colsum = Vector::Zero(d);
    for (Eigen::Index c = 0; c < C; ++c)
      if (st.backprop_column[static_cast<std::size_t>(c)]) colsum += g_centred.col(c);
    for (Eigen::Index k = 0; k < B; ++k) {
      int c = batch_labels[static_cast<std::size_t>(k)];
      grad_h.col(k) += g_centred.col(c) / static_cast<double>(st.counts[static_cast<std::size_t>(c)]);
      grad_h.col(k) -= colsum / static_cast<double>(B);
    }
  }

  // Hypersphere parameterisation: project out the radial component.
  for (Eigen::Index k = 0; k < B; ++k)
    grad_h.col(k) -= Hb.col(k) * Hb.col(k).dot(grad_h.col(k));

  StepResult result;
  result.loss = loss;
  result.top1 = top1;
  result.inner_iterations = work.inner_iterations;
  result.inner_seconds = work.inner_seconds;
  result.feature_grad_norm = grad_h.norm();
  result.feature_gradient = grad_h;

  // Commit: parameter updates and state advance.
  for (Eigen::Index k = 0; k < B; ++k) {
    Eigen::Index i = idx[static_cast<std::size_t>(k)];
    model.features.col(i) -= config.learning_rate * grad_h.col(k);
    double n = model.features.col(i).norm();
    if (n == 0.0) throw std::runtime_error("feature collapsed to zero during update");
    model.features.col(i) /= n;
  }
  if (model.mode == ClassifierMode::standard) {
    Matrix grad_W = tau * (delta * Hb.transpose());
    Vector grad_b = tau * delta_rowsum;
    model.W -= config.learning_rate * grad_W;
    normalise_rows(model.W);
    model.b -= config.learning_rate * grad_b;
  } else {
    model.W = work.W;
    model.b = work.b;
  }
  state.ema = work.ema_next;
  if (work.U_star) state.U_star = work.U_star;
  return result;
}

StepResult train_step(UfmModel& model, const TrainConfig& config, TrainerState& state) {
  std::vector<Eigen::Index> all(static_cast<std::size_t>(model.N));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  return train_step_on_batch(model, config, state, all);
}

TrainResult train(UfmModel& model, const TrainConfig& config) {
  TrainerState state = init_trainer_state(model, config);
  TrainResult result;

  std::vector<std::vector<Eigen::Index>> batches;
  if (config.batch_size > 0)
    batches = stratified_batches(model.labels, model.C, config.batch_size, config.seed);
  else {
    batches.emplace_back(static_cast<std::size_t>(model.N));
    std::iota(batches[0].begin(), batches[0].end(), Eigen::Index{0});
  }

  for (int iter = 1; iter <= config.iterations; ++iter) {
    const auto& idx = batches[static_cast<std::size_t>((iter - 1) % static_cast<int>(batches.size()))];
    StepResult step = train_step_on_batch(model, config, state, idx);
    if (step.top1 >= 1.0 && result.first_interpolation_iter < 0)
      result.first_interpolation_iter = iter;

    if (iter % config.log_interval == 0 || iter == config.iterations || iter == 1) {
      IterationRecord rec;
      rec.iteration = iter;
      rec.loss = step.loss;
      rec.train_top1 = step.top1;
      rec.inner_solve_iterations = step.inner_iterations;
      rec.inner_solve_seconds = step.inner_seconds;
      FeatureStatistics fs = compute_feature_statistics(model.features, model.labels, model.C);
      rec.metrics.nc1 = nc1(model.features, model.labels, model.C);
      rec.metrics.nc2 = nc2(model.W);
      rec.metrics.nc3 = nc3(model.W, fs.centred);
      rec.metrics.nc4_agreement =
          nc4_agreement(model.W, model.b, model.features, model.labels, fs.class_means);
      rec.metrics.equinorm_gap = equinorm_gap(model.W, fs.centred);
      rec.metrics.mean_cosine_margin =
          cosine_margins(model.W, model.features, model.labels).mean;
      result.trace.push_back(rec);
    }
  }
  result.final_margins = cosine_margins(model.W, model.features, model.labels).values;
  return result;
}

double pipeline_loss(const Matrix& raw_features, const std::vector<int>& labels, Eigen::Index C,
                     const TrainConfig& config, const EmaState& ema_prev,
                     const StiefelPoint& U_prox) {
  Matrix H = raw_features;
  normalise_columns(H);
  FeatureStatistics st = compute_feature_statistics(H, labels, C);
  EmaState ema = ema_update(ema_prev, st.normalised, st.global_mean);
  NearestEtfProblem p = NearestEtfProblem::make(ema.H_tilde, C, config.delta, U_prox);
  StiefelPoint U_star = nearest_etf_oracle(p).point;
  Matrix logits = implicit_logits(H, U_star, ema.h_G, config.tau);
  return cross_entropy(logits, labels);
}

}  // namespace netf
