#pragma once

#include "decom/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace decom {

// Single-layer LSTM with a linear read-out of the final hidden state.
// Gate blocks in `w` and `b` are stacked as [input, forget, cell, output];
// each gate row sees the concatenation [x_t, h_{t-1}].
struct LstmParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Matrix w;        // 4H x (K + H)
  Vector b;        // 4H
  Matrix w_out;    // K x H
  Vector b_out;    // K

  static LstmParams zeros(std::size_t input_size, std::size_t hidden_size);
  static LstmParams uniform(std::size_t input_size, std::size_t hidden_size, double scale,
                            std::mt19937_64& rng);

  std::size_t parameter_count() const;
  // Flat views in the order w, b, w_out, b_out (row-major within matrices).
  Vector flatten() const;
  void assign(const Vector& flat);
  void validate() const;
};

struct LstmStates {
  Matrix hidden;  // w x H, row t is h_t
  Matrix cell;    // w x H, row t is c_t
  Matrix gates;   // w x 4H, post-activation [i, f, g, o]
};

struct LstmOutput {
  RowVector prediction;
  LstmStates states;
};

LstmOutput lstm_forward(const LstmParams& p, const Matrix& window);

struct LstmGradient {
  LstmParams grad;  // same shapes as the parameters
  double loss = 0.0;
};

// Gradient of ||prediction - target||^2 by backpropagation through time.
LstmGradient lstm_backward(const LstmParams& p, const Matrix& window, const RowVector& target);

// Per-column affine standardization (x - shift) / scale.
struct Standardizer {
  RowVector shift;
  RowVector scale;

  static Standardizer fit(const Matrix& data);
  Matrix apply(const Matrix& data) const;
  Matrix invert(const Matrix& data) const;
};

enum class ForecasterKind { kLstm, kAr };

std::string to_string(ForecasterKind kind);
ForecasterKind forecaster_kind_from_string(const std::string& name);

struct ForecasterConfig {
  ForecasterKind kind = ForecasterKind::kLstm;
  std::size_t window = 52;
  std::size_t hidden = 32;
  std::size_t epochs = 500;
  double learning_rate = 1e-2;
  double clip_norm = 5.0;
  double init_scale = 0.08;
  std::size_t batch_size = 1;
  double ar_ridge = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

// A trained one-step model over rows of a factor matrix, applied
// recursively for multi-step forecasts.
struct Forecaster {
  ForecasterKind kind = ForecasterKind::kAr;
  std::size_t window = 1;
  std::size_t width = 1;
  Standardizer scaling;
  std::optional<LstmParams> lstm;
  // AR: (window*width + 1) x width; row j*width + i is lag j+1 of column i,
  // the last row is the intercept.
  Matrix ar_coefficients;
  std::vector<double> loss_trace;

  // One step in original units from the last `window` rows of `history`.
  RowVector predict_next(const Matrix& history) const;
};

struct SequenceSample {
  Matrix window;     // w x K
  RowVector target;  // 1 x K
};

// Sliding windows over consecutive rows: sample i uses rows [i, i+w) to
// predict row i+w.
std::vector<SequenceSample> make_samples(const Matrix& series, std::size_t window);

Forecaster train_forecaster(const Matrix& c, const ForecasterConfig& cfg);

// Recursive rollout; each predicted row is appended to the history before
// the next step. Returns horizon x K.
Matrix forecast(const Forecaster& f, const Matrix& history, std::size_t horizon);

}  // namespace decom
