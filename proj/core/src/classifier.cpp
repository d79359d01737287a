#include "icdlab/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "icdlab/csv.hpp"
#include "icdlab/digest.hpp"
#include "icdlab/errors.hpp"

namespace icdlab {

namespace {

// Compressed rows; the design matrices are mostly zeros (unanswered questions).
struct Csr {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<size_t> row_ptr;
  std::vector<uint32_t> col;
  std::vector<double> val;

  explicit Csr(const Matrix& X) : rows(X.rows), cols(X.cols) {
    row_ptr.reserve(rows + 1);
    row_ptr.push_back(0);
    for (size_t i = 0; i < rows; ++i) {
      for (size_t j = 0; j < cols; ++j) {
        const double v = X(i, j);
        if (v != 0.0) {
          col.push_back(static_cast<uint32_t>(j));
          val.push_back(v);
        }
      }
      row_ptr.push_back(col.size());
    }
  }
};

// Parameters: Wt is F x K (transposed for row-wise access), then b.
struct Params {
  std::vector<double> wt;
  std::vector<double> b;
};

// Summed cross-entropy; fills gradients when the pointers are non-null.
double loss_and_grad(const Csr& X, std::span<const size_t> y, size_t K, const Params& p, Params* grad,
                     std::vector<double>& z) {
  if (grad != nullptr) {
    std::fill(grad->wt.begin(), grad->wt.end(), 0.0);
    std::fill(grad->b.begin(), grad->b.end(), 0.0);
  }
  z.resize(K);
  double loss = 0.0;
  for (size_t i = 0; i < X.rows; ++i) {
    std::copy(p.b.begin(), p.b.end(), z.begin());
    for (size_t e = X.row_ptr[i]; e < X.row_ptr[i + 1]; ++e) {
      const double v = X.val[e];
      const double* w = &p.wt[X.col[e] * K];
      for (size_t k = 0; k < K; ++k) z[k] += v * w[k];
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (size_t k = 0; k < K; ++k) sum += std::exp(z[k] - zmax);
    const double lse = zmax + std::log(sum);
    loss += lse - z[y[i]];
    if (grad == nullptr) continue;
    for (size_t k = 0; k < K; ++k) z[k] = std::exp(z[k] - lse);
    z[y[i]] -= 1.0;
    for (size_t k = 0; k < K; ++k) grad->b[k] += z[k];
    for (size_t e = X.row_ptr[i]; e < X.row_ptr[i + 1]; ++e) {
      const double v = X.val[e];
      double* g = &grad->wt[X.col[e] * K];
      for (size_t k = 0; k < K; ++k) g[k] += v * z[k];
    }
  }
  return loss;
}

double l1(const std::vector<double>& w) {
  double s = 0.0;
  for (double v : w) s += std::abs(v);
  return s;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

void check_finite(const Matrix& X) {
  for (double v : X.data) {
    if (!std::isfinite(v)) throw ValidationError("design matrix contains a non-finite value");
  }
}

Params to_params(const Matrix& W, std::span<const double> b) {
  Params p;
  const size_t K = W.rows;
  const size_t F = W.cols;
  p.wt.assign(F * K, 0.0);
  for (size_t k = 0; k < K; ++k) {
    for (size_t j = 0; j < F; ++j) p.wt[j * K + k] = W(k, j);
  }
  p.b.assign(b.begin(), b.end());
  return p;
}

Matrix to_w(const std::vector<double>& wt, size_t K, size_t F) {
  Matrix W(K, F);
  for (size_t k = 0; k < K; ++k) {
    for (size_t j = 0; j < F; ++j) W(k, j) = wt[j * K + k];
  }
  return W;
}

}  // namespace

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"C", c.C}, {"tolerance", c.tolerance}, {"max_iterations", c.max_iterations}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.C = j.value("C", c.C);
  c.tolerance = j.value("tolerance", c.tolerance);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.seed = j.value("seed", c.seed);
  if (!(c.C > 0.0)) throw ValidationError("classifier C must be > 0");
  if (!(c.tolerance > 0.0)) throw ValidationError("classifier tolerance must be > 0");
  if (c.max_iterations < 1) throw ValidationError("classifier max_iterations must be >= 1");
}

size_t LogRegModel::nonzero_weights() const {
  return static_cast<size_t>(std::count_if(W.data.begin(), W.data.end(), [](double v) { return v != 0.0; }));
}

std::string LogRegModel::digest() const {
  nlohmann::json j = *this;
  return hex_digest(j.dump());
}

void to_json(nlohmann::json& j, const LogRegModel& m) {
  std::vector<std::vector<double>> w;
  for (size_t k = 0; k < m.W.rows; ++k) w.emplace_back(m.W.row(k).begin(), m.W.row(k).end());
  j = nlohmann::json{{"format", "icdlab-logreg"},
                     {"classes", m.classes},
                     {"feature_ids", m.feature_ids},
                     {"W", w},
                     {"b", m.b},
                     {"background_mean", m.background_mean},
                     {"training",
                      {{"C", m.info.C},
                       {"tolerance", m.info.tolerance},
                       {"iterations", m.info.iterations},
                       {"objective", m.info.objective},
                       {"converged", m.info.converged}}}};
}

void from_json(const nlohmann::json& j, LogRegModel& m) {
  if (j.value("format", "") != "icdlab-logreg") throw ValidationError("not a logistic regression model");
  m = LogRegModel{};
  m.classes = j.at("classes").get<std::vector<std::string>>();
  m.feature_ids = j.at("feature_ids").get<std::vector<std::string>>();
  const auto w = j.at("W").get<std::vector<std::vector<double>>>();
  m.b = j.at("b").get<std::vector<double>>();
  m.background_mean = j.at("background_mean").get<std::vector<double>>();
  const size_t K = m.classes.size();
  const size_t F = m.background_mean.size();
  if (K < 2 || w.size() != K || m.b.size() != K || m.feature_ids.size() != F) {
    throw ValidationError("logistic regression model has inconsistent dimensions");
  }
  m.W = Matrix(K, F);
  for (size_t k = 0; k < K; ++k) {
    if (w[k].size() != F) throw ValidationError("logistic regression model has a ragged weight row");
    std::copy(w[k].begin(), w[k].end(), m.W.row(k).begin());
  }
  const auto& t = j.at("training");
  m.info.C = t.at("C").get<double>();
  m.info.tolerance = t.at("tolerance").get<double>();
  m.info.iterations = t.at("iterations").get<int>();
  m.info.objective = t.at("objective").get<double>();
  m.info.converged = t.at("converged").get<bool>();
}

SmoothLoss smooth_loss(const Matrix& X, std::span<const size_t> y, const Matrix& W, std::span<const double> b) {
  const size_t K = W.rows;
  if (W.cols != X.cols || b.size() != K || y.size() != X.rows) throw ValidationError("smooth_loss: dimension mismatch");
  const Csr csr(X);
  const Params p = to_params(W, b);
  Params g{std::vector<double>(p.wt.size()), std::vector<double>(K)};
  std::vector<double> z;
  SmoothLoss out;
  out.value = loss_and_grad(csr, y, K, p, &g, z);
  out.grad_W = to_w(g.wt, K, X.cols);
  out.grad_b = std::move(g.b);
  return out;
}

double penalized_objective(const Matrix& X, std::span<const size_t> y, const Matrix& W, std::span<const double> b,
                           double C) {
  const Csr csr(X);
  std::vector<double> z;
  return loss_and_grad(csr, y, W.rows, to_params(W, b), nullptr, z) + l1(W.data) / C;
}

LogRegModel train_logreg(const Matrix& X, std::span<const std::string> y, const TrainConfig& config,
                         std::vector<std::string> feature_ids) {
  if (!(config.C > 0.0) || !(config.tolerance > 0.0)) throw ValidationError("train_logreg: C and tolerance must be > 0");
  if (y.size() != X.rows) throw ValidationError("train_logreg: label count does not match rows");
  check_finite(X);
  const std::set<std::string> distinct(y.begin(), y.end());
  if (distinct.size() < 2) throw ValidationError("train_logreg: need at least two classes");
  if (feature_ids.empty()) {
    for (size_t j = 0; j < X.cols; ++j) feature_ids.push_back("x" + std::to_string(j));
  }
  if (feature_ids.size() != X.cols) throw ValidationError("train_logreg: feature id count does not match columns");

  LogRegModel model;
  model.classes.assign(distinct.begin(), distinct.end());
  model.feature_ids = std::move(feature_ids);
  const size_t K = model.classes.size();
  const size_t F = X.cols;
  std::vector<size_t> yi(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    yi[i] = static_cast<size_t>(std::lower_bound(model.classes.begin(), model.classes.end(), y[i]) -
                                model.classes.begin());
  }

  const Csr csr(X);
  const double lambda = 1.0 / config.C;
  std::vector<double> z;

  Params x{std::vector<double>(F * K, 0.0), std::vector<double>(K, 0.0)};
  Params g{std::vector<double>(F * K), std::vector<double>(K)};
  Params xn = x;
  Params gn = g;
  double f = loss_and_grad(csr, yi, K, x, &g, z);
  double obj = f + lambda * l1(x.wt);

  // Safe first step from a Lipschitz bound of the summed loss.
  double sq = 0.0;
  for (size_t i = 0; i < csr.rows; ++i) {
    sq += 1.0;
    for (size_t e = csr.row_ptr[i]; e < csr.row_ptr[i + 1]; ++e) sq += csr.val[e] * csr.val[e];
  }
  double t = 1.0 / std::max(0.5 * sq, 1e-12);

  TrainingInfo info;
  info.C = config.C;
  info.tolerance = config.tolerance;
  for (int it = 0; it < config.max_iterations; ++it) {
    double fn = 0.0;
    double objn = 0.0;
    double ss = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      double lin = 0.0;
      ss = 0.0;
      for (size_t q = 0; q < x.wt.size(); ++q) {
        xn.wt[q] = soft_threshold(x.wt[q] - t * g.wt[q], t * lambda);
        const double d = xn.wt[q] - x.wt[q];
        lin += g.wt[q] * d;
        ss += d * d;
      }
      for (size_t k = 0; k < K; ++k) {
        xn.b[k] = x.b[k] - t * g.b[k];
        const double d = xn.b[k] - x.b[k];
        lin += g.b[k] * d;
        ss += d * d;
      }
      fn = loss_and_grad(csr, yi, K, xn, &gn, z);
      objn = fn + lambda * l1(xn.wt);
      if (fn <= f + lin + ss / (2.0 * t) && objn <= obj) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted || ss == 0.0) {
      info.converged = true;
      break;
    }

    // Barzilai-Borwein step for the next iteration.
    double sy = 0.0;
    for (size_t q = 0; q < x.wt.size(); ++q) sy += (xn.wt[q] - x.wt[q]) * (gn.wt[q] - g.wt[q]);
    for (size_t k = 0; k < K; ++k) sy += (xn.b[k] - x.b[k]) * (gn.b[k] - g.b[k]);
    const double next_t = sy > 0.0 ? ss / sy : 2.0 * t;
    t = std::clamp(next_t, 1e-12, 1e12);

    const double change = obj - objn;
    std::swap(x, xn);
    std::swap(g, gn);
    f = fn;
    obj = objn;
    info.iterations = it + 1;
    if (config.record_history) info.history.push_back(obj);
    if (change <= config.tolerance * std::max(1.0, std::abs(obj))) {
      info.converged = true;
      break;
    }
  }
  info.objective = obj;

  model.W = to_w(x.wt, K, F);
  model.b = x.b;
  model.background_mean.assign(F, 0.0);
  for (size_t i = 0; i < X.rows; ++i) {
    for (size_t j = 0; j < F; ++j) model.background_mean[j] += X(i, j);
  }
  if (X.rows > 0) {
    for (double& v : model.background_mean) v /= static_cast<double>(X.rows);
  }
  model.info = std::move(info);
  return model;
}

LogRegModel train_logreg(const FeatureMatrix& X, const TrainConfig& config) {
  return train_logreg(X.values, X.labels, config, X.column_ids());
}

Matrix logits(const LogRegModel& model, const Matrix& X) {
  if (X.cols != model.num_features()) {
    throw ValidationError("model expects " + std::to_string(model.num_features()) + " features, got " +
                          std::to_string(X.cols));
  }
  const size_t K = model.num_classes();
  Matrix out(X.rows, K);
  for (size_t i = 0; i < X.rows; ++i) {
    const auto x = X.row(i);
    for (size_t k = 0; k < K; ++k) {
      const auto w = model.W.row(k);
      double s = model.b[k];
      for (size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
      out(i, k) = s;
    }
  }
  return out;
}

Matrix predict_proba(const LogRegModel& model, const Matrix& X) {
  Matrix p = logits(model, X);
  for (size_t i = 0; i < p.rows; ++i) {
    auto r = p.row(i);
    const double zmax = *std::max_element(r.begin(), r.end());
    double sum = 0.0;
    for (double& v : r) {
      v = std::exp(v - zmax);
      sum += v;
    }
    for (double& v : r) v /= sum;
  }
  return p;
}

std::vector<std::string> predict(const LogRegModel& model, const Matrix& X) {
  const Matrix z = logits(model, X);
  std::vector<std::string> out;
  out.reserve(z.rows);
  for (size_t i = 0; i < z.rows; ++i) {
    const auto r = z.row(i);
    out.push_back(model.classes[static_cast<size_t>(std::max_element(r.begin(), r.end()) - r.begin())]);
  }
  return out;
}

ShapExplanation linear_shap(const LogRegModel& model, const Matrix& X) {
  const size_t K = model.num_classes();
  const size_t F = model.num_features();
  if (X.cols != F || model.background_mean.size() != F) throw ValidationError("linear_shap: dimension mismatch");
  ShapExplanation e;
  e.classes = model.classes;
  e.feature_ids = model.feature_ids;
  e.rows = X.rows;
  e.base.assign(K, 0.0);
  for (size_t k = 0; k < K; ++k) {
    double s = model.b[k];
    for (size_t j = 0; j < F; ++j) s += model.W(k, j) * model.background_mean[j];
    e.base[k] = s;
  }
  e.contributions.resize(X.rows * K * F);
  for (size_t i = 0; i < X.rows; ++i) {
    for (size_t k = 0; k < K; ++k) {
      double* out = &e.contributions[(i * K + k) * F];
      for (size_t j = 0; j < F; ++j) out[j] = model.W(k, j) * (X(i, j) - model.background_mean[j]);
    }
  }
  return e;
}

ShapExplanation linear_shap(const LogRegModel& model, const Matrix& X, const Matrix& background) {
  if (background.rows == 0) throw ValidationError("linear_shap: empty background");
  if (background.cols != model.num_features()) throw ValidationError("linear_shap: dimension mismatch");
  LogRegModel m = model;
  std::fill(m.background_mean.begin(), m.background_mean.end(), 0.0);
  for (size_t i = 0; i < background.rows; ++i) {
    for (size_t j = 0; j < background.cols; ++j) m.background_mean[j] += background(i, j);
  }
  for (double& v : m.background_mean) v /= static_cast<double>(background.rows);
  return linear_shap(m, X);
}

std::vector<FeatureImportance> importance_summary(const ShapExplanation& e, size_t top_n) {
  const size_t K = e.classes.size();
  const size_t F = e.feature_ids.size();
  std::vector<FeatureImportance> all(F);
  for (size_t j = 0; j < F; ++j) {
    all[j].feature_id = e.feature_ids[j];
    all[j].per_class.assign(K, 0.0);
  }
  for (size_t i = 0; i < e.rows; ++i) {
    for (size_t k = 0; k < K; ++k) {
      for (size_t j = 0; j < F; ++j) all[j].per_class[k] += std::abs(e.at(i, k, j));
    }
  }
  for (auto& fi : all) {
    for (double& v : fi.per_class) {
      if (e.rows > 0) v /= static_cast<double>(e.rows);
      fi.total += v;
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) { return a.total > b.total; });
  all.resize(std::min(top_n, F));
  return all;
}

std::string shap_summary_csv(const std::vector<FeatureImportance>& ranked, const std::vector<std::string>& classes) {
  CsvWriter w;
  w.row({"feature_id", "class", "mean_abs_contribution"});
  for (const auto& fi : ranked) {
    for (size_t k = 0; k < classes.size(); ++k) w.row({fi.feature_id, classes[k], format_double(fi.per_class[k])});
  }
  return w.str();
}

}  // namespace icdlab
