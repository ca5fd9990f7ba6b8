#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "nodulemorph/error.hpp"
#include "nodulemorph/learn.hpp"
#include "nodulemorph/rng.hpp"

namespace nodulemorph {

namespace {

constexpr int kMlpFormatVersion = 1;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double target(ClassLabel label) { return label == ClassLabel::Malignant ? 1.0 : 0.0; }

// Accumulates the summed loss and gradient of rows [first, first + count)
// of `order` into `grad` (not averaged).
double accumulate(const MlpModel& m, const Matrix& rows, std::span<const ClassLabel> labels,
                  std::span<const std::size_t> order, std::vector<double>& grad, std::vector<double>& hidden) {
  const std::size_t in = m.n_inputs;
  const std::size_t h = m.hidden;
  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + h * in;
  double* g_w2 = g_b1 + h;
  double* g_b2 = g_w2 + h;
  double loss = 0.0;
  for (std::size_t idx : order) {
    auto x = rows.row(idx);
    double z = m.b2;
    for (std::size_t j = 0; j < h; ++j) {
      double a = m.b1[j];
      for (std::size_t i = 0; i < in; ++i) a += m.w1[j * in + i] * x[i];
      hidden[j] = a > 0.0 ? a : 0.0;
      z += m.w2[j] * hidden[j];
    }
    const double y = target(labels[idx]);
    loss += softplus(z) - y * z;
    const double dz = sigmoid(z) - y;
    *g_b2 += dz;
    for (std::size_t j = 0; j < h; ++j) {
      g_w2[j] += dz * hidden[j];
      if (hidden[j] <= 0.0) continue;
      const double da = dz * m.w2[j];
      g_b1[j] += da;
      for (std::size_t i = 0; i < in; ++i) g_w1[j * in + i] += da * x[i];
    }
  }
  return loss;
}

void check_labels(const Matrix& rows, std::span<const ClassLabel> labels) {
  if (rows.rows() != labels.size()) throw Error(ErrorKind::Shape, "row and label counts differ");
}

}  // namespace

std::vector<double> MlpModel::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  flat.insert(flat.end(), w1.begin(), w1.end());
  flat.insert(flat.end(), b1.begin(), b1.end());
  flat.insert(flat.end(), w2.begin(), w2.end());
  flat.push_back(b2);
  return flat;
}

void MlpModel::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw Error(ErrorKind::Shape, "parameter vector has wrong length");
  auto it = flat.begin();
  std::copy_n(it, w1.size(), w1.begin());
  it += static_cast<std::ptrdiff_t>(w1.size());
  std::copy_n(it, b1.size(), b1.begin());
  it += static_cast<std::ptrdiff_t>(b1.size());
  std::copy_n(it, w2.size(), w2.begin());
  it += static_cast<std::ptrdiff_t>(w2.size());
  b2 = *it;
}

double MlpModel::logit(std::span<const double> row) const {
  double z = b2;
  for (std::size_t j = 0; j < hidden; ++j) {
    double a = b1[j];
    for (std::size_t i = 0; i < n_inputs; ++i) a += w1[j * n_inputs + i] * row[i];
    if (a > 0.0) z += w2[j] * a;
  }
  return z;
}

MlpModel init_mlp(std::size_t n_inputs, const MlpConfig& config, std::uint64_t seed) {
  if (n_inputs == 0 || config.hidden == 0) throw Error(ErrorKind::Config, "MLP layers must be non-empty");
  MlpModel m;
  m.n_inputs = n_inputs;
  m.hidden = config.hidden;
  m.config = config;
  m.seed = seed;
  Rng rng(derive_seed(seed, "mlp-init"));
  const double s1 = std::sqrt(2.0 / static_cast<double>(n_inputs));
  const double s2 = std::sqrt(2.0 / static_cast<double>(config.hidden));
  m.w1.resize(config.hidden * n_inputs);
  for (auto& w : m.w1) w = s1 * rng.normal();
  m.b1.assign(config.hidden, 0.0);
  m.w2.resize(config.hidden);
  for (auto& w : m.w2) w = s2 * rng.normal();
  m.b2 = 0.0;
  return m;
}

LossGradient mlp_loss_gradient(const MlpModel& model, const Matrix& rows, std::span<const ClassLabel> labels) {
  check_labels(rows, labels);
  if (rows.cols() != model.n_inputs) throw Error(ErrorKind::Shape, "MLP input dimension mismatch");
  if (rows.empty()) throw Error(ErrorKind::Shape, "loss of an empty batch");
  LossGradient out;
  out.gradient.assign(model.parameter_count(), 0.0);
  std::vector<double> hidden(model.hidden);
  std::vector<std::size_t> order(rows.rows());
  std::iota(order.begin(), order.end(), 0);
  const double n = static_cast<double>(rows.rows());
  out.loss = accumulate(model, rows, labels, order, out.gradient, hidden) / n;
  for (auto& g : out.gradient) g /= n;
  return out;
}

MlpTrainResult train_mlp(const Matrix& rows, std::span<const ClassLabel> labels, const MlpConfig& config,
                         std::uint64_t seed) {
  check_labels(rows, labels);
  const bool has_benign = std::find(labels.begin(), labels.end(), ClassLabel::Benign) != labels.end();
  const bool has_malignant = std::find(labels.begin(), labels.end(), ClassLabel::Malignant) != labels.end();
  if (!has_benign || !has_malignant) throw Error(ErrorKind::Training, "MLP training data contains a single class");
  if (config.batch == 0) throw Error(ErrorKind::Config, "batch size must be >= 1");
  if (!(config.learning_rate > 0.0)) throw Error(ErrorKind::Config, "learning rate must be positive");

  MlpTrainResult result{init_mlp(rows.cols(), config, seed), {}};
  MlpModel& m = result.model;
  const std::size_t p = m.parameter_count();
  std::vector<double> params = m.parameters();
  std::vector<double> grad(p), first_moment(p, 0.0), second_moment(p, 0.0), hidden(m.hidden);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t step = 0;

  Rng rng(derive_seed(seed, "mlp-shuffle"));
  std::vector<std::size_t> order(rows.rows());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t count = std::min(config.batch, order.size() - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      epoch_loss += accumulate(m, rows, labels, std::span(order).subspan(start, count), grad, hidden);
      ++step;
      const double inv = 1.0 / static_cast<double>(count);
      if (config.optimizer == Optimizer::Adam) {
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        for (std::size_t k = 0; k < p; ++k) {
          const double g = grad[k] * inv;
          first_moment[k] = beta1 * first_moment[k] + (1.0 - beta1) * g;
          second_moment[k] = beta2 * second_moment[k] + (1.0 - beta2) * g * g;
          params[k] -= config.learning_rate * (first_moment[k] / c1) / (std::sqrt(second_moment[k] / c2) + eps);
        }
      } else {
        for (std::size_t k = 0; k < p; ++k) params[k] -= config.learning_rate * grad[k] * inv;
      }
      m.set_parameters(params);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss))
      throw Error(ErrorKind::Divergence, "MLP loss became non-finite at epoch " + std::to_string(epoch + 1));
    result.loss_trace.push_back(epoch_loss);
  }
  return result;
}

Prediction predict_mlp(const MlpModel& model, std::span<const double> row) {
  if (row.size() != model.n_inputs)
    throw Error(ErrorKind::Shape, "MLP expects " + std::to_string(model.n_inputs) + " features, got " +
                                      std::to_string(row.size()));
  Prediction p;
  p.score = sigmoid(model.logit(row));
  p.label = p.score >= 0.5 ? ClassLabel::Malignant : ClassLabel::Benign;
  return p;
}

std::string MlpModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "nodulemorph.mlp";
  j["version"] = kMlpFormatVersion;
  j["seed"] = seed;
  j["config"] = {{"hidden", config.hidden},
                 {"epochs", config.epochs},
                 {"batch", config.batch},
                 {"learning_rate", config.learning_rate},
                 {"optimizer", config.optimizer == Optimizer::Adam ? "adam" : "sgd"}};
  j["n_inputs"] = n_inputs;
  j["w1"] = w1;
  j["b1"] = b1;
  j["w2"] = w2;
  j["b2"] = b2;
  return j.dump();
}

MlpModel MlpModel::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "nodulemorph.mlp" || j.at("version").get<int>() != kMlpFormatVersion)
      throw Error(ErrorKind::Format, "not a version-1 MLP document");
    MlpModel m;
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& c = j.at("config");
    m.config.hidden = c.at("hidden").get<std::size_t>();
    m.config.epochs = c.at("epochs").get<std::size_t>();
    m.config.batch = c.at("batch").get<std::size_t>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.optimizer = c.at("optimizer").get<std::string>() == "sgd" ? Optimizer::Sgd : Optimizer::Adam;
    m.n_inputs = j.at("n_inputs").get<std::size_t>();
    m.hidden = m.config.hidden;
    m.w1 = j.at("w1").get<std::vector<double>>();
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = j.at("w2").get<std::vector<double>>();
    m.b2 = j.at("b2").get<double>();
    if (m.w1.size() != m.hidden * m.n_inputs || m.b1.size() != m.hidden || m.w2.size() != m.hidden)
      throw Error(ErrorKind::Format, "MLP weight arrays do not match the declared shape");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad MLP document: ") + e.what());
  }
}

}  // namespace nodulemorph
