#include "ridi/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ridi/errors.hpp"

namespace ridi {

void Normalizer::fit(const SampleMatrix& x) {
  if (x.rows() < 1) throw UsageError("cannot fit normalizer on empty set");
  mean = x.colwise().mean();
  Eigen::VectorXd var = Eigen::VectorXd::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::VectorXd d = x.row(i).transpose() - mean;
    var += d.cwiseProduct(d);
  }
  var /= static_cast<double>(x.rows());
  std = var.cwiseSqrt().cwiseMax(1e-8);
}

Eigen::VectorXd Normalizer::apply(const Eigen::VectorXd& x) const {
  return (x - mean).cwiseQuotient(std);
}

void Normalizer::apply_rows(SampleMatrix& x) const {
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    x.row(i) = (x.row(i).transpose() - mean).cwiseQuotient(std).transpose();
}

std::string to_string(Kernel k) { return k == Kernel::Linear ? "linear" : "rbf"; }

Placement ClassifierModel::classify(const Eigen::VectorXd& x) const {
  int best = 0;
  double best_score = ovr[0].decision(x);
  for (int k = 1; k < 4; ++k) {
    const double s = ovr[static_cast<std::size_t>(k)].decision(x);
    if (s > best_score) {  // strict: ties keep the smaller enum value
      best_score = s;
      best = k;
    }
  }
  return static_cast<Placement>(best);
}

CascadeModel::Prediction CascadeModel::predict(const FeatureVector& feature) const {
  const Eigen::VectorXd z = norm.apply(feature);
  const Placement p = classifier.classify(z);
  const auto& pair = regressors[static_cast<std::size_t>(p)];
  return {Eigen::Vector2d(pair[0].predict(z), pair[1].predict(z)), p};
}

Eigen::Vector2d GlobalModel::predict(const FeatureVector& feature) const {
  const Eigen::VectorXd z = norm.apply(feature);
  return {regressors[0].predict(z), regressors[1].predict(z)};
}

ClassifierModel train_classifier(const SampleMatrix& x, const std::vector<Placement>& labels,
                                 double c, const SolverOptions& opt) {
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    throw UsageError("label count does not match sample count");
  std::array<int, 4> counts{};
  for (Placement p : labels) ++counts[static_cast<std::size_t>(p)];
  int classes = 0;
  for (int n : counts)
    if (n > 0) ++classes;
  if (classes < 2) {
    std::ostringstream os;
    os << "classifier needs >= 2 placement classes, got";
    for (Placement p : kAllPlacements)
      if (counts[static_cast<std::size_t>(p)] > 0) os << " " << to_string(p);
    throw UsageError(os.str());
  }
  for (Placement p : kAllPlacements) {
    const int n = counts[static_cast<std::size_t>(p)];
    if (n > 0 && n < 10)
      throw UsageError(std::string("placement ") + to_string(p) + " has only " +
                       std::to_string(n) + " samples; need >= 10");
  }

  ClassifierModel model;
  Eigen::VectorXd y(x.rows());
  for (Placement p : kAllPlacements) {
    const auto k = static_cast<std::size_t>(p);
    if (counts[k] == 0) {
      // Absent class: constant -1 decision keeps argmax away from it.
      model.ovr[k].w = Eigen::VectorXd::Zero(x.cols());
      model.ovr[k].b = -1.0;
      continue;
    }
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      y(i) = labels[static_cast<std::size_t>(i)] == p ? 1.0 : -1.0;
    model.ovr[k] = train_linear_svc(x, y, c, opt);
  }
  return model;
}

namespace {

SvrModel train_one_svr(const SampleMatrix& x, const Eigen::VectorXd& y, const Hyperparams& hp,
                       Kernel kernel, double rbf_gamma, const SolverOptions& opt) {
  SvrModel m;
  m.kernel = kernel;
  m.hp = hp;
  if (kernel == Kernel::Linear) {
    m.linear = train_linear_svr(x, y, hp.c, hp.epsilon, opt);
  } else {
    const double gamma = rbf_gamma > 0.0 ? rbf_gamma : 1.0 / static_cast<double>(x.cols());
    m.rbf = train_rbf_svr(x, y, hp.c, hp.epsilon, gamma, opt);
  }
  return m;
}

double holdout_mse(const SvrModel& m, const SampleMatrix& x, const Eigen::VectorXd& y) {
  double se = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double r = m.predict(x.row(i).transpose()) - y(i);
    se += r * r;
  }
  return se / static_cast<double>(x.rows());
}

}  // namespace

std::pair<Hyperparams, double> grid_search(const SampleMatrix& x, const Eigen::VectorXd& y,
                                           int folds, std::uint64_t seed, Kernel kernel,
                                           double rbf_gamma, const SolverOptions& opt,
                                           std::array<double, 16>* cv_table) {
  const int n = static_cast<int>(x.rows());
  if (folds < 2) throw UsageError("grid search needs >= 2 folds");
  if (n < folds)
    throw UsageError("grid search needs at least as many samples (" + std::to_string(n) +
                     ") as folds (" + std::to_string(folds) + ")");

  const std::vector<int> perm = seeded_permutation(n, seed);
  // fold of sample perm[i] is i % folds; build per-fold train/test splits once.
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) fold_of[static_cast<std::size_t>(perm[i])] = i % folds;

  static constexpr double kCs[4] = {0.1, 1.0, 10.0, 100.0};
  static constexpr double kEps[4] = {0.001, 0.01, 0.1, 1.0};
  std::array<double, 16> cell_mse{};
  std::array<std::exception_ptr, 16> cell_error{};

  // Exceptions may not cross the parallel region; capture per cell, rethrow
  // the first (in fixed cell order) afterwards.
#pragma omp parallel for schedule(dynamic) collapse(2)
  for (int ci = 0; ci < 4; ++ci) {
    for (int ei = 0; ei < 4; ++ei) {
      const auto cell = static_cast<std::size_t>(ci * 4 + ei);
      try {
        const Hyperparams hp{kCs[ci], kEps[ei]};
        double total_se = 0.0;
        int total_cnt = 0;
        for (int f = 0; f < folds; ++f) {
          int ntr = 0, nte = 0;
          for (int i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? nte : ntr)++;
          SampleMatrix xtr(ntr, x.cols()), xte(nte, x.cols());
          Eigen::VectorXd ytr(ntr), yte(nte);
          int a = 0, b = 0;
          for (int i = 0; i < n; ++i) {
            if (fold_of[static_cast<std::size_t>(i)] == f) {
              xte.row(b) = x.row(i);
              yte(b++) = y(i);
            } else {
              xtr.row(a) = x.row(i);
              ytr(a++) = y(i);
            }
          }
          const SvrModel m = train_one_svr(xtr, ytr, hp, kernel, rbf_gamma, opt);
          total_se += holdout_mse(m, xte, yte) * static_cast<double>(nte);
          total_cnt += nte;
        }
        cell_mse[cell] = total_se / static_cast<double>(total_cnt);
      } catch (const ConvergenceError&) {
        // A cell the solver cannot finish is a losing hyperparameter choice,
        // not a reason to abort the search.
        cell_mse[cell] = std::numeric_limits<double>::infinity();
      } catch (...) {
        cell_error[cell] = std::current_exception();
      }
    }
  }
  for (const auto& err : cell_error)
    if (err) std::rethrow_exception(err);

  // Fixed reduction order: C ascending then epsilon ascending, strict < keeps
  // the smaller pair on ties.
  Hyperparams best{kCs[0], kEps[0]};
  double best_mse = cell_mse[0];
  for (int ci = 0; ci < 4; ++ci) {
    for (int ei = 0; ei < 4; ++ei) {
      const double m = cell_mse[static_cast<std::size_t>(ci * 4 + ei)];
      if (m < best_mse) {
        best_mse = m;
        best = {kCs[ci], kEps[ei]};
      }
    }
  }
  if (cv_table != nullptr) *cv_table = cell_mse;
  if (!std::isfinite(best_mse))
    throw ConvergenceError("no grid cell converged within the pass budget", best_mse);
  return {best, best_mse};
}

namespace {

struct SplitData {
  SampleMatrix x;
  Eigen::VectorXd yx, yz;
};

SplitData collect(const std::vector<TrainingSample>& samples, const Normalizer& norm,
                  const Placement* only) {
  std::vector<const TrainingSample*> keep;
  keep.reserve(samples.size());
  for (const auto& s : samples)
    if (!only || s.placement == *only) keep.push_back(&s);
  SplitData d;
  d.x.resize(static_cast<Eigen::Index>(keep.size()), kFeatureDim);
  d.yx.resize(static_cast<Eigen::Index>(keep.size()));
  d.yz.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    d.x.row(static_cast<Eigen::Index>(i)) = norm.apply(keep[i]->feature).transpose();
    d.yx(static_cast<Eigen::Index>(i)) = keep[i]->target.x();
    d.yz(static_cast<Eigen::Index>(i)) = keep[i]->target.y();
  }
  return d;
}

}  // namespace

std::pair<CascadeModel, TrainReport> train_cascade(const std::vector<TrainingSample>& samples,
                                                   const TrainOptions& opt) {
  if (samples.empty()) throw UsageError("no training samples");
  std::array<int, 4> counts{};
  for (const auto& s : samples) ++counts[static_cast<std::size_t>(s.placement)];
  {
    std::ostringstream present;
    bool missing = false;
    for (Placement p : kAllPlacements) {
      if (counts[static_cast<std::size_t>(p)] == 0)
        missing = true;
      else
        present << " " << to_string(p);
    }
    if (missing)
      throw UsageError("training set must cover all four placements; present:" + present.str());
  }

  CascadeModel model;
  model.grid_seed = opt.seed;

  SampleMatrix raw(static_cast<Eigen::Index>(samples.size()), kFeatureDim);
  std::vector<Placement> labels(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    raw.row(static_cast<Eigen::Index>(i)) = samples[i].feature.transpose();
    labels[i] = samples[i].placement;
  }
  model.norm.fit(raw);
  model.norm.apply_rows(raw);

  model.classifier = train_classifier(raw, labels, opt.classifier_c, opt.solver);

  TrainReport report;
  report.samples_per_placement = counts;
  int correct = 0;
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    if (model.classifier.classify(raw.row(i).transpose()) == labels[static_cast<std::size_t>(i)])
      ++correct;
  report.classifier_accuracy = static_cast<double>(correct) / static_cast<double>(raw.rows());

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Placement p : kAllPlacements) {
    const auto k = static_cast<std::size_t>(p);
    const SplitData d = collect(samples, model.norm, &p);
    const Eigen::VectorXd* ys[2] = {&d.yx, &d.yz};
    for (int axis = 0; axis < 2; ++axis) {
      const auto a = static_cast<std::size_t>(axis);
      Hyperparams hp = opt.hp;
      double cv = nan;
      if (opt.grid_search)
        std::tie(hp, cv) =
            grid_search(d.x, *ys[axis], opt.cv_folds, opt.seed, opt.kernel, opt.rbf_gamma,
                        opt.solver);
      model.regressors[k][a] =
          train_one_svr(d.x, *ys[axis], hp, opt.kernel, opt.rbf_gamma, opt.solver);
      report.hp[k][a] = hp;
      report.cv_mse[k][a] = cv;
      report.train_mse[k][a] = holdout_mse(model.regressors[k][a], d.x, *ys[axis]);
    }
  }
  return {std::move(model), std::move(report)};
}

GlobalModel train_global(const std::vector<TrainingSample>& samples, const TrainOptions& opt) {
  if (samples.empty()) throw UsageError("no training samples");
  GlobalModel model;
  SampleMatrix raw(static_cast<Eigen::Index>(samples.size()), kFeatureDim);
  for (std::size_t i = 0; i < samples.size(); ++i)
    raw.row(static_cast<Eigen::Index>(i)) = samples[i].feature.transpose();
  model.norm.fit(raw);
  const SplitData d = collect(samples, model.norm, nullptr);
  const Eigen::VectorXd* ys[2] = {&d.yx, &d.yz};
  for (int axis = 0; axis < 2; ++axis) {
    Hyperparams hp = opt.hp;
    if (opt.grid_search)
      hp = grid_search(d.x, *ys[axis], opt.cv_folds, opt.seed, opt.kernel, opt.rbf_gamma,
                       opt.solver)
               .first;
    model.regressors[static_cast<std::size_t>(axis)] =
        train_one_svr(d.x, *ys[axis], hp, opt.kernel, opt.rbf_gamma, opt.solver);
  }
  return model;
}

double cascade_mse(const CascadeModel& model, const std::vector<TrainingSample>& samples) {
  if (samples.empty()) throw UsageError("no samples");
  double se = 0.0;
  for (const auto& s : samples)
    se += (model.predict(s.feature).velocity - s.target).squaredNorm();
  return se / (2.0 * static_cast<double>(samples.size()));
}

double global_mse(const GlobalModel& model, const std::vector<TrainingSample>& samples) {
  if (samples.empty()) throw UsageError("no samples");
  double se = 0.0;
  for (const auto& s : samples) se += (model.predict(s.feature) - s.target).squaredNorm();
  return se / (2.0 * static_cast<double>(samples.size()));
}

double classifier_accuracy(const CascadeModel& model,
                           const std::vector<TrainingSample>& samples) {
  if (samples.empty()) throw UsageError("no samples");
  int correct = 0;
  for (const auto& s : samples)
    if (model.predict(s.feature).placement == s.placement) ++correct;
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

std::vector<CascadeModel::Prediction> predict_batch_serial(const CascadeModel& model,
                                                           const SampleMatrix& features) {
  std::vector<CascadeModel::Prediction> out(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    out[static_cast<std::size_t>(i)] = model.predict(features.row(i).transpose());
  return out;
}

std::vector<CascadeModel::Prediction> predict_batch(const CascadeModel& model,
                                                    const SampleMatrix& features) {
  std::vector<CascadeModel::Prediction> out(static_cast<std::size_t>(features.rows()));
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    out[static_cast<std::size_t>(i)] = model.predict(features.row(i).transpose());
  return out;
}

std::string TrainReport::to_text() const {
  std::ostringstream os;
  os << "classifier training accuracy: " << classifier_accuracy * 100.0 << "%\n";
  for (Placement p : kAllPlacements) {
    const auto k = static_cast<std::size_t>(p);
    os << to_string(p) << ": " << samples_per_placement[k] << " samples\n";
    const char* axis_name[2] = {"x", "z"};
    for (std::size_t a = 0; a < 2; ++a) {
      os << "  axis " << axis_name[a] << ": C=" << hp[k][a].c << " eps=" << hp[k][a].epsilon
         << " train_mse=" << train_mse[k][a];
      if (!std::isnan(cv_mse[k][a])) os << " cv_mse=" << cv_mse[k][a];
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace ridi
