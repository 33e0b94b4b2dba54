#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "netf/ddn.hpp"

namespace netf {

enum class ClassifierMode { standard, fixed_etf, implicit_etf };

std::string to_string(ClassifierMode mode);
ClassifierMode mode_from_string(const std::string& s);

struct TrainConfig {
  int iterations = 2000;
  double learning_rate = 1.0;
  double tau = 5.0;
  double delta = 1e-3;
  int batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  InitScheme init_scheme = InitScheme::canonical;
  bool use_ddn_vjp = true;
  bool fixed_etf_centred_bias = false;  // b = -W h_G for the fixed-ETF baseline
  int log_interval = 50;
  double solver_tol = 1e-8;
  int solver_max_iter = 200;
};

struct UfmModel {
  Eigen::Index d = 0;
  Eigen::Index C = 0;
  Eigen::Index N = 0;
  Matrix features;          // d x N, columns kept at unit norm
  std::vector<int> labels;  // balanced by construction
  ClassifierMode mode = ClassifierMode::implicit_etf;
  Matrix W;                 // C x d; derived in the ETF modes
  Vector b;

  static UfmModel make(Eigen::Index d, Eigen::Index C, Eigen::Index N, ClassifierMode mode,
                       std::uint64_t seed);
};

// Exponential moving average with the alpha = max(2/(T+1), 1e-4)
// schedule; the state is renormalised to unit Frobenius norm after each
// update.
struct EmaState {
  Matrix H_tilde;   // d x C, unit Frobenius norm
  Vector h_G;       // matching EMA of the global mean
  long step = 0;

  static double alpha_at(long step);
};

EmaState ema_update(const EmaState& state, const Matrix& H_tilde_batch, const Vector& h_G_batch);

// tau * M_bar * U*^T * (h_i - h_G) with M_bar the unit-column simplex ETF.
Matrix implicit_logits(const Matrix& features, const StiefelPoint& U_star, const Vector& h_G,
                       double tau);

// Mean negative log-softmax of the true class (max-shifted).
double cross_entropy(const Matrix& logits, const std::vector<int>& labels);

double accuracy(const Matrix& logits, const std::vector<int>& labels);

// Cross-entropy of the exactly collapsed configuration (features at the ETF
// vertices, classifier the dual map); the convergence target of training.
double collapse_lower_bound(Eigen::Index C, double tau);

// Deterministic stratified batches: with batch_size >= C every batch covers
// all classes; below C the batches are plain random chunks and the
// missing-class substitution rule applies downstream.
std::vector<std::vector<Eigen::Index>> stratified_batches(const std::vector<int>& labels,
                                                          Eigen::Index C,
                                                          Eigen::Index batch_size,
                                                          std::uint64_t seed);

struct IterationRecord {
  int iteration = 0;
  double loss = 0.0;
  double train_top1 = 0.0;
  NcMetricsRecord metrics;
  int inner_solve_iterations = 0;
  double inner_solve_seconds = 0.0;
};

struct TrainerState {
  EmaState ema;
  std::optional<StiefelPoint> U_star;  // warm start / proximal target
  Matrix M_bar;                        // C x C unit-column ETF
  Matrix class_mean_cache;             // stochastic path: last-known means
  std::vector<bool> class_seen;
  std::mt19937_64 rng;
};

struct StepResult {
  double loss = 0.0;
  double top1 = 0.0;
  int inner_iterations = 0;
  double inner_seconds = 0.0;
  double feature_grad_norm = 0.0;
  Matrix feature_gradient;  // d x |batch|, the applied (tangential) gradient
};

TrainerState init_trainer_state(const UfmModel& model, const TrainConfig& config);

// One full-batch training step; mutates model and state in place. Throws on
// inner-solver failure without touching the state.
StepResult train_step(UfmModel& model, const TrainConfig& config, TrainerState& state);

struct TrainResult {
  std::vector<IterationRecord> trace;
  std::vector<double> final_margins;  // per-sample cosine margins at end of training
  int first_interpolation_iter = -1;  // first iteration with 100% train accuracy
};

TrainResult train(UfmModel& model, const TrainConfig& config);

// Loss of the full pipeline (normalise -> stats -> EMA step -> inner solve ->
// logits -> CE) evaluated at raw features; exists for the finite-difference
// oracles in tests.
double pipeline_loss(const Matrix& raw_features, const std::vector<int>& labels, Eigen::Index C,
                     const TrainConfig& config, const EmaState& ema_prev,
                     const StiefelPoint& U_prox);

}  // namespace netf
