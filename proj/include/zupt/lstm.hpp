#ifndef ZUPT_LSTM_HPP_
#define ZUPT_LSTM_HPP_

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "zupt/csv.hpp"
#include "zupt/detectors.hpp"
#include "zupt/error.hpp"
#include "zupt/types.hpp"

namespace zupt::lstm
{

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr int kFormatVersion = 1;
inline constexpr std::size_t kImuChannels = 6;

/**
 * @brief Weights of one LSTM layer.
 *
 * Rows are four stacked gate blocks of H rows each, in the order
 * input (i), forget (f), cell candidate (g), output (o).
 */
struct LstmLayerWeights
{
  MatrixXd w_input;   ///< 4H x D
  MatrixXd w_hidden;  ///< 4H x H
  VectorXd bias;      ///< 4H

  Index hidden_dim() const { return w_hidden.cols(); }
  Index input_dim() const { return w_input.cols(); }

  static LstmLayerWeights zeros(Index input, Index hidden)
  {
    return {MatrixXd::Zero(4 * hidden, input), MatrixXd::Zero(4 * hidden, hidden), VectorXd::Zero(4 * hidden)};
  }
};

/// Stacked LSTM with a 2-way dense head (index 0 = moving, 1 = stationary).
struct LstmModel
{
  std::vector<LstmLayerWeights> layers;
  Eigen::Matrix<double, 2, Eigen::Dynamic> head_weight;
  Eigen::Vector2d head_bias{Eigen::Vector2d::Zero()};
  double confidence_threshold{0.85};
  std::size_t input_dim{kImuChannels};

  Index hidden_dim() const { return layers.empty() ? 0 : layers.front().hidden_dim(); }

  /// Throws ValidationError naming the first inconsistent tensor.
  void validate() const
  {
    if (layers.empty()) {throw ValidationError("model has no LSTM layers");}
    if (!(confidence_threshold > 0.0 && confidence_threshold < 1.0)) {
      throw ValidationError("confidence_threshold must lie in (0, 1)");
    }
    const Index h = hidden_dim();
    Index in = static_cast<Index>(input_dim);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto & layer = layers[l];
      const std::string name = "layers[" + std::to_string(l) + "]";
      if (layer.w_input.rows() != 4 * h || layer.w_input.cols() != in) {
        throw ValidationError(name + ".w_input has wrong shape");
      }
      if (layer.w_hidden.rows() != 4 * h || layer.w_hidden.cols() != h) {
        throw ValidationError(name + ".w_hidden has wrong shape");
      }
      if (layer.bias.size() != 4 * h) {throw ValidationError(name + ".bias has wrong length");}
      if (!layer.w_input.allFinite() || !layer.w_hidden.allFinite() || !layer.bias.allFinite()) {
        throw ValidationError(name + " contains non-finite weights");
      }
      in = h;
    }
    if (head_weight.cols() != h) {throw ValidationError("head_weight has wrong shape");}
    if (!head_weight.allFinite() || !head_bias.allFinite()) {
      throw ValidationError("head contains non-finite weights");
    }
  }

  static LstmModel zeros(std::size_t num_layers, Index hidden, std::size_t input = kImuChannels)
  {
    LstmModel m;
    m.input_dim = input;
    Index in = static_cast<Index>(input);
    for (std::size_t l = 0; l < num_layers; ++l) {
      m.layers.push_back(LstmLayerWeights::zeros(in, hidden));
      in = hidden;
    }
    m.head_weight = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, hidden);
    return m;
  }
};

/// Per-layer hidden and cell state.
struct LstmState
{
  std::vector<VectorXd> h;
  std::vector<VectorXd> s;

  static LstmState zeros(const LstmModel & model)
  {
    LstmState st;
    for (const auto & layer : model.layers) {
      st.h.push_back(VectorXd::Zero(layer.hidden_dim()));
      st.s.push_back(VectorXd::Zero(layer.hidden_dim()));
    }
    return st;
  }
};

struct ZvProbability
{
  double p_moving{0.5};
  double p_stationary{0.5};
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// One LSTM cell update; returns (h', s').
inline std::pair<VectorXd, VectorXd> lstm_cell_step(
  const LstmLayerWeights & layer, const VectorXd & x, const VectorXd & h, const VectorXd & s)
{
  const Index n = layer.hidden_dim();
  const VectorXd z = layer.w_input * x + layer.w_hidden * h + layer.bias;
  const auto i = z.segment(0, n).unaryExpr(&sigmoid);
  const auto f = z.segment(n, n).unaryExpr(&sigmoid);
  const auto g = z.segment(2 * n, n).array().tanh();
  const auto o = z.segment(3 * n, n).unaryExpr(&sigmoid);
  VectorXd s_next = g.array() * i.array() + s.array() * f.array();
  VectorXd h_next = s_next.array().tanh() * o.array();
  return {std::move(h_next), std::move(s_next)};
}

inline Eigen::Vector2d softmax(const Eigen::Vector2d & logits)
{
  const double m = logits.maxCoeff();
  const Eigen::Vector2d e = (logits.array() - m).exp();
  return e / e.sum();
}

inline VectorXd imu_features(const ImuSample & s)
{
  VectorXd x(6);
  x << s.accel, s.gyro;
  return x;
}

/// Advance the stacked network by one timestep and classify it.
inline ZvProbability forward_step(const LstmModel & model, const VectorXd & x, LstmState & state)
{
  VectorXd in = x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto [h, s] = lstm_cell_step(model.layers[l], in, state.h[l], state.s[l]);
    state.h[l] = std::move(h);
    state.s[l] = std::move(s);
    in = state.h[l];
  }
  const Eigen::Vector2d p = softmax(model.head_weight * in + model.head_bias);
  return {p[0], p[1]};
}

/// Forward pass over consecutive samples, continuing from `state`.
inline std::vector<ZvProbability> forward(
  const LstmModel & model, std::span<const ImuSample> samples, LstmState & state)
{
  if (model.input_dim != kImuChannels) {
    throw ContractError("model input_dim " + std::to_string(model.input_dim) + " does not match 6 IMU channels");
  }
  model.validate();
  std::vector<ZvProbability> out;
  out.reserve(samples.size());
  for (const auto & s : samples) {out.push_back(forward_step(model, imu_features(s), state));}
  return out;
}

/// Whole-sequence pass from a zero state.
inline std::vector<ZvProbability> forward_sequence(const LstmModel & model, const ImuSequence & seq)
{
  model.validate();
  auto state = LstmState::zeros(model);
  return forward(model, seq.samples(), state);
}

/// flag[k] = p_stationary[k] > threshold; the statistic is p_stationary.
inline detect::ZvDecision gate_confidence(const std::vector<ZvProbability> & probs, double threshold)
{
  detect::ZvDecision d;
  d.statistic.reserve(probs.size());
  d.flag.reserve(probs.size());
  for (const auto & p : probs) {
    d.statistic.push_back(p.p_stationary);
    d.flag.push_back(static_cast<std::uint8_t>(p.p_stationary > threshold));
  }
  return d;
}

/// Model with weights drawn uniformly from [-scale, scale].
inline LstmModel make_random_model(std::size_t num_layers, Index hidden, std::uint64_t seed, double scale = 0.5)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  auto fill = [&](auto & m) {
      for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {m(r, c) = u(rng);}
      }
    };
  auto model = LstmModel::zeros(num_layers, hidden);
  for (auto & layer : model.layers) {
    fill(layer.w_input);
    fill(layer.w_hidden);
    fill(layer.bias);
  }
  fill(model.head_weight);
  fill(model.head_bias);
  return model;
}

// --- weight file -------------------------------------------------------------

namespace detail
{

template<typename M>
nlohmann::json to_row_major(const M & m)
{
  auto arr = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {arr.push_back(m(r, c));}
  }
  return arr;
}

inline std::vector<double> numbers(const nlohmann::json & doc, const std::string & key, const std::string & name)
{
  const auto it = doc.find(key);
  if (it == doc.end() || !it->is_array()) {throw ValidationError(name + ": missing array");}
  std::vector<double> v;
  v.reserve(it->size());
  for (const auto & e : *it) {
    if (!e.is_number()) {throw ValidationError(name + ": non-numeric entry");}
    v.push_back(e.get<double>());
  }
  return v;
}

inline MatrixXd matrix(
  const nlohmann::json & doc, const std::string & key, const std::string & name, Index rows, Index cols)
{
  const auto v = numbers(doc, key, name);
  if (static_cast<Index>(v.size()) != rows * cols) {
    throw ValidationError(
            name + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) + " = " +
            std::to_string(rows * cols) + " values, got " + std::to_string(v.size()));
  }
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {m(r, c) = v[static_cast<std::size_t>(r * cols + c)];}
  }
  return m;
}

inline std::int64_t integer(const nlohmann::json & doc, const std::string & key)
{
  const auto it = doc.find(key);
  if (it == doc.end() || !it->is_number_integer()) {throw ValidationError(key + ": missing integer");}
  return it->get<std::int64_t>();
}

}  // namespace detail

inline nlohmann::json to_json(const LstmModel & model)
{
  model.validate();
  nlohmann::json doc;
  doc["format_version"] = kFormatVersion;
  doc["input_dim"] = model.input_dim;
  doc["hidden_dim"] = model.hidden_dim();
  doc["num_layers"] = model.layers.size();
  doc["confidence_threshold"] = model.confidence_threshold;
  auto layers = nlohmann::json::array();
  for (const auto & layer : model.layers) {
    layers.push_back(
      {{"w_input", detail::to_row_major(layer.w_input)},
        {"w_hidden", detail::to_row_major(layer.w_hidden)},
        {"bias", detail::to_row_major(layer.bias)}});
  }
  doc["layers"] = std::move(layers);
  doc["head_weight"] = detail::to_row_major(model.head_weight);
  doc["head_bias"] = detail::to_row_major(model.head_bias);
  return doc;
}

inline LstmModel from_json(const nlohmann::json & doc)
{
  if (!doc.is_object()) {throw ValidationError("weight file is not an object");}
  if (detail::integer(doc, "format_version") != kFormatVersion) {
    throw ValidationError("format_version: unsupported version");
  }
  const auto input = detail::integer(doc, "input_dim");
  const auto hidden = detail::integer(doc, "hidden_dim");
  const auto num_layers = detail::integer(doc, "num_layers");
  if (input <= 0) {throw ValidationError("input_dim: must be positive");}
  if (hidden <= 0) {throw ValidationError("hidden_dim: must be positive");}
  if (num_layers <= 0) {throw ValidationError("num_layers: must be positive");}
  const auto thr = doc.find("confidence_threshold");
  if (thr == doc.end() || !thr->is_number()) {throw ValidationError("confidence_threshold: missing number");}
  const auto layers = doc.find("layers");
  if (layers == doc.end() || !layers->is_array() || static_cast<std::int64_t>(layers->size()) != num_layers) {
    throw ValidationError("layers: expected " + std::to_string(num_layers) + " entries");
  }

  LstmModel m;
  m.input_dim = static_cast<std::size_t>(input);
  m.confidence_threshold = thr->get<double>();
  const Index h = hidden;
  Index in = input;
  for (std::size_t l = 0; l < layers->size(); ++l) {
    const auto & node = (*layers)[l];
    const std::string name = "layers[" + std::to_string(l) + "]";
    if (!node.is_object()) {throw ValidationError(name + ": not an object");}
    LstmLayerWeights w;
    w.w_input = detail::matrix(node, "w_input", name + ".w_input", 4 * h, in);
    w.w_hidden = detail::matrix(node, "w_hidden", name + ".w_hidden", 4 * h, h);
    w.bias = detail::matrix(node, "bias", name + ".bias", 4 * h, 1);
    m.layers.push_back(std::move(w));
    in = h;
  }
  m.head_weight = detail::matrix(doc, "head_weight", "head_weight", 2, h);
  m.head_bias = detail::matrix(doc, "head_bias", "head_bias", 2, 1);
  m.validate();
  return m;
}

inline void save_model(const std::string & path, const LstmModel & model)
{
  auto out = csv::open_out(path);
  out << to_json(model).dump(1) << '\n';
}

inline LstmModel read_model(std::istream & in)
{
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error & e) {
    throw ParseError(std::string("weight file: ") + e.what());
  }
  return from_json(doc);
}

inline LstmModel load_model(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {throw ParseError("cannot open model file '" + path + "'");}
  return read_model(in);
}

// --- probability stream CSV (`t,p_moving,p_stationary`) ---------------------

inline void write_probability_csv(
  std::ostream & os, const std::vector<double> & times, const std::vector<ZvProbability> & probs)
{
  if (times.size() != probs.size()) {throw ContractError("times and probabilities differ in length");}
  os << "t,p_moving,p_stationary\n";
  for (std::size_t k = 0; k < probs.size(); ++k) {
    csv::write_double(os, times[k]);
    os << ',';
    csv::write_double(os, probs[k].p_moving);
    os << ',';
    csv::write_double(os, probs[k].p_stationary);
    os << '\n';
  }
}

struct ProbabilityStream
{
  std::vector<double> times;
  std::vector<ZvProbability> probs;
};

inline ProbabilityStream read_probability_csv(std::istream & in)
{
  const auto table = csv::read_table(in);
  if (!csv::header_is(table.header, {"t", "p_moving", "p_stationary"})) {
    throw ParseError("probability CSV header must be 't,p_moving,p_stationary'", 1);
  }
  ProbabilityStream out;
  for (const auto & row : table.rows) {
    out.times.push_back(row[0]);
    out.probs.push_back({row[1], row[2]});
  }
  return out;
}

inline ProbabilityStream load_probability_csv(const std::string & path)
{
  auto in = csv::open_in(path);
  return read_probability_csv(in);
}

}  // namespace zupt::lstm

#endif  // ZUPT_LSTM_HPP_
