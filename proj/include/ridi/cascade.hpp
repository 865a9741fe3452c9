#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ridi/features.hpp"
#include "ridi/frames.hpp"
#include "ridi/svm.hpp"

namespace ridi {

struct Hyperparams {
  double c = 0.1;
  double epsilon = 0.01;  ///< insensitivity tube, m/s
};

/// Per-dimension standardization fitted on the training set only.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  ///< floored at 1e-8

  void fit(const SampleMatrix& x);
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  void apply_rows(SampleMatrix& x) const;
};

enum class Kernel : std::uint8_t { Linear = 0, Rbf = 1 };

std::string to_string(Kernel k);

/// One regressor of the cascade: a linear or RBF epsilon-SVR plus the
/// hyperparameters it was trained with.
struct SvrModel {
  Kernel kernel = Kernel::Linear;
  Hyperparams hp;
  LinearModel linear;
  RbfSvrModel rbf;

  double predict(const Eigen::VectorXd& x) const {
    return kernel == Kernel::Linear ? linear.decision(x) : rbf.predict(x);
  }
};

/// One-vs-rest linear max-margin classifier over the four placements.
/// Ties break toward the smaller enum value (Leg < Bag < Hand < Body).
struct ClassifierModel {
  std::array<LinearModel, 4> ovr;

  Placement classify(const Eigen::VectorXd& x) const;
};

/// The full model: normalizer, placement classifier, and per-placement
/// regressor pairs (axis 0 = stabilized x, axis 1 = stabilized z).
struct CascadeModel {
  static constexpr std::uint32_t kFormatVersion = 1;

  Normalizer norm;
  ClassifierModel classifier;
  std::array<std::array<SvrModel, 2>, 4> regressors;
  std::uint64_t grid_seed = 1;

  struct Prediction {
    Eigen::Vector2d velocity;  ///< m/s in the stabilized frame (x, z)
    Placement placement;
  };

  Prediction predict(const FeatureVector& feature) const;
};

/// Normalizer + a single regressor pair shared by every placement; the
/// comparison point for the cascade (no classifier dispatch).
struct GlobalModel {
  Normalizer norm;
  std::array<SvrModel, 2> regressors;

  Eigen::Vector2d predict(const FeatureVector& feature) const;
};

struct TrainOptions {
  double classifier_c = 10.0;
  Hyperparams hp;                 ///< used for every regressor unless grid_search
  bool grid_search = false;
  int cv_folds = 3;
  Kernel kernel = Kernel::Linear;
  double rbf_gamma = 0.0;         ///< 0 = 1/feature_dim
  std::uint64_t seed = 1;
  SolverOptions solver;
};

struct TrainReport {
  double classifier_accuracy = 0.0;               ///< training-set accuracy
  std::array<int, 4> samples_per_placement{};
  std::array<std::array<Hyperparams, 2>, 4> hp{};
  std::array<std::array<double, 2>, 4> train_mse{};
  std::array<std::array<double, 2>, 4> cv_mse{};  ///< NaN when grid search off

  std::string to_text() const;
};

/// One-vs-rest classifier over normalized features. Requires at least two
/// classes and >= 10 samples in each class that is present.
ClassifierModel train_classifier(const SampleMatrix& x, const std::vector<Placement>& labels,
                                 double c = 10.0, const SolverOptions& opt = {});

/// 4x4 grid search (C in {0.1,1,10,100}, eps in {0.001,0.01,0.1,1.0}) by
/// k-fold cross validation on mean squared error. Fold assignment is a
/// seeded permutation; ties break toward smaller C, then smaller epsilon.
/// A cell whose solver fails to converge scores +inf instead of aborting
/// the search; if every cell fails the error propagates.
/// Returns the winning pair and its mean CV MSE; `cv_table` (when given)
/// receives all 16 cell scores, C-major.
std::pair<Hyperparams, double> grid_search(const SampleMatrix& x, const Eigen::VectorXd& y,
                                           int folds = 3, std::uint64_t seed = 1,
                                           Kernel kernel = Kernel::Linear, double rbf_gamma = 0.0,
                                           const SolverOptions& opt = {},
                                           std::array<double, 16>* cv_table = nullptr);

/// Trains normalizer, classifier, and all eight regressors. Every placement
/// must be present; throws UsageError listing the present ones otherwise.
std::pair<CascadeModel, TrainReport> train_cascade(const std::vector<TrainingSample>& samples,
                                                   const TrainOptions& opt = {});

/// Trains the single global regressor pair on the same samples (placement
/// labels ignored), with the same options.
GlobalModel train_global(const std::vector<TrainingSample>& samples,
                         const TrainOptions& opt = {});

/// Mean squared velocity error (both axes pooled) of a model over samples.
double cascade_mse(const CascadeModel& model, const std::vector<TrainingSample>& samples);
double global_mse(const GlobalModel& model, const std::vector<TrainingSample>& samples);

/// Classification accuracy of the cascade's classifier over labeled samples.
double classifier_accuracy(const CascadeModel& model, const std::vector<TrainingSample>& samples);

/// Batch prediction; the parallel version must match the serial one bitwise.
std::vector<CascadeModel::Prediction> predict_batch_serial(const CascadeModel& model,
                                                           const SampleMatrix& features);
std::vector<CascadeModel::Prediction> predict_batch(const CascadeModel& model,
                                                    const SampleMatrix& features);

}  // namespace ridi
