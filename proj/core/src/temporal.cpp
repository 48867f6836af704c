#include "decom/temporal.hpp"

#include "decom/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace decom {

namespace {

template <class V>
Vector logistic(const V& z) {
  return (1.0 + (-z.array()).exp()).inverse().matrix();
}

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw PreconditionError(std::string(what) + ": non-finite values");
}

}  // namespace

// ---------------------------------------------------------------------------
// LstmParams

LstmParams LstmParams::zeros(std::size_t input_size, std::size_t hidden_size) {
  if (input_size < 1 || hidden_size < 1) throw ContractViolation("lstm sizes must be positive");
  const auto k = static_cast<Eigen::Index>(input_size);
  const auto h = static_cast<Eigen::Index>(hidden_size);
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.w = Matrix::Zero(4 * h, k + h);
  p.b = Vector::Zero(4 * h);
  p.w_out = Matrix::Zero(k, h);
  p.b_out = Vector::Zero(k);
  return p;
}

LstmParams LstmParams::uniform(std::size_t input_size, std::size_t hidden_size, double scale,
                               std::mt19937_64& rng) {
  LstmParams p = zeros(input_size, hidden_size);
  std::uniform_real_distribution<double> dist(-scale, scale);
  Vector flat(static_cast<Eigen::Index>(p.parameter_count()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] = dist(rng);
  p.assign(flat);
  return p;
}

std::size_t LstmParams::parameter_count() const {
  return static_cast<std::size_t>(w.size() + b.size() + w_out.size() + b_out.size());
}

Vector LstmParams::flatten() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index pos = 0;
  auto put = [&](const double* data, Eigen::Index n) {
    std::copy(data, data + n, flat.data() + pos);
    pos += n;
  };
  put(w.data(), w.size());
  put(b.data(), b.size());
  put(w_out.data(), w_out.size());
  put(b_out.data(), b_out.size());
  return flat;
}

void LstmParams::assign(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw ContractViolation("LstmParams::assign: wrong parameter count");
  }
  Eigen::Index pos = 0;
  auto take = [&](double* data, Eigen::Index n) {
    std::copy(flat.data() + pos, flat.data() + pos + n, data);
    pos += n;
  };
  take(w.data(), w.size());
  take(b.data(), b.size());
  take(w_out.data(), w_out.size());
  take(b_out.data(), b_out.size());
}

void LstmParams::validate() const {
  const auto k = static_cast<Eigen::Index>(input_size);
  const auto h = static_cast<Eigen::Index>(hidden_size);
  if (k < 1 || h < 1 || w.rows() != 4 * h || w.cols() != k + h || b.size() != 4 * h ||
      w_out.rows() != k || w_out.cols() != h || b_out.size() != k) {
    throw ContractViolation("LstmParams: inconsistent shapes");
  }
  if (!w.allFinite() || !b.allFinite() || !w_out.allFinite() || !b_out.allFinite()) {
    throw ModelError("LstmParams: non-finite parameters");
  }
}

// ---------------------------------------------------------------------------
// Forward / backward

LstmOutput lstm_forward(const LstmParams& p, const Matrix& window) {
  const auto k = static_cast<Eigen::Index>(p.input_size);
  const auto h = static_cast<Eigen::Index>(p.hidden_size);
  if (window.cols() != k) throw ContractViolation("lstm_forward: window width must equal input size");
  if (window.rows() < 1) throw ContractViolation("lstm_forward: empty window");
  check_finite(window, "lstm_forward");

  const Eigen::Index steps = window.rows();
  LstmOutput out;
  out.states.hidden.resize(steps, h);
  out.states.cell.resize(steps, h);
  out.states.gates.resize(steps, 4 * h);

  // Input contributions for every step in one product.
  const Matrix input_part = (window * p.w.leftCols(k).transpose()).rowwise() + p.b.transpose();
  const auto recurrent = p.w.rightCols(h);
  Vector hidden = Vector::Zero(h);
  Vector cell = Vector::Zero(h);
  Vector z(4 * h);
  for (Eigen::Index t = 0; t < steps; ++t) {
    z.noalias() = input_part.row(t).transpose();
    z.noalias() += recurrent * hidden;
    z.head(2 * h) = logistic(z.head(2 * h));
    z.segment(2 * h, h) = z.segment(2 * h, h).array().tanh().matrix();
    z.tail(h) = logistic(z.tail(h));
    cell = z.segment(h, h).cwiseProduct(cell) + z.head(h).cwiseProduct(z.segment(2 * h, h));
    hidden = z.tail(h).cwiseProduct(cell.array().tanh().matrix());
    out.states.gates.row(t) = z.transpose();
    out.states.cell.row(t) = cell.transpose();
    out.states.hidden.row(t) = hidden.transpose();
  }
  out.prediction = (p.w_out * hidden + p.b_out).transpose();
  return out;
}

LstmGradient lstm_backward(const LstmParams& p, const Matrix& window, const RowVector& target) {
  const auto k = static_cast<Eigen::Index>(p.input_size);
  const auto h = static_cast<Eigen::Index>(p.hidden_size);
  if (target.size() != k) throw ContractViolation("lstm_backward: target width must equal input size");
  const LstmOutput fwd = lstm_forward(p, window);
  const auto& st = fwd.states;
  const Eigen::Index steps = window.rows();

  LstmGradient g{LstmParams::zeros(p.input_size, p.hidden_size), 0.0};
  const Vector residual = (fwd.prediction - target).transpose();
  g.loss = residual.squaredNorm();
  const Vector dy = 2.0 * residual;
  g.grad.w_out = dy * st.hidden.row(steps - 1);
  g.grad.b_out = dy;

  Vector dh = p.w_out.transpose() * dy;
  Vector dc = Vector::Zero(h);
  Matrix dz(steps, 4 * h);
  const auto recurrent = p.w.rightCols(h);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto gates = st.gates.row(t);
    const auto c = st.cell.row(t);
    for (Eigen::Index j = 0; j < h; ++j) {
      const double i_g = gates[j];
      const double f_g = gates[h + j];
      const double c_g = gates[2 * h + j];
      const double o_g = gates[3 * h + j];
      const double c_prev = t > 0 ? st.cell(t - 1, j) : 0.0;
      const double tc = std::tanh(c[j]);
      const double d_o = dh[j] * tc;
      const double dcj = dc[j] + dh[j] * o_g * (1.0 - tc * tc);
      dz(t, j) = dcj * c_g * i_g * (1.0 - i_g);
      dz(t, h + j) = dcj * c_prev * f_g * (1.0 - f_g);
      dz(t, 2 * h + j) = dcj * i_g * (1.0 - c_g * c_g);
      dz(t, 3 * h + j) = d_o * o_g * (1.0 - o_g);
      dc[j] = dcj * f_g;
    }
    dh.noalias() = recurrent.transpose() * dz.row(t).transpose();
  }
  // Weight gradients as two products over all steps; h_prev at step 0 is zero.
  g.grad.w.leftCols(k).noalias() = dz.transpose() * window;
  if (steps > 1) {
    g.grad.w.rightCols(h).noalias() = dz.bottomRows(steps - 1).transpose() * st.hidden.topRows(steps - 1);
  }
  g.grad.b = dz.colwise().sum().transpose();
  return g;
}

// ---------------------------------------------------------------------------
// Standardizer

Standardizer Standardizer::fit(const Matrix& data) {
  if (data.rows() < 1) throw PreconditionError("Standardizer::fit: no rows");
  Standardizer s;
  s.shift = data.colwise().mean();
  s.scale.resize(data.cols());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const double sd = std::sqrt((data.col(j).array() - s.shift[j]).square().mean());
    s.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(s.shift[j])) ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& data) const {
  return (data.rowwise() - shift).array().rowwise() / scale.array();
}

Matrix Standardizer::invert(const Matrix& data) const {
  return (data.array().rowwise() * scale.array()).matrix().rowwise() + shift;
}

// ---------------------------------------------------------------------------
// Forecaster

std::string to_string(ForecasterKind kind) { return kind == ForecasterKind::kLstm ? "lstm" : "ar"; }

ForecasterKind forecaster_kind_from_string(const std::string& name) {
  if (name == "lstm") return ForecasterKind::kLstm;
  if (name == "ar") return ForecasterKind::kAr;
  throw ConfigError("unknown forecaster kind '" + name + "' (expected lstm or ar)");
}

void ForecasterConfig::validate() const {
  if (window < 1) throw ConfigError("forecaster window must be at least 1");
  if (kind == ForecasterKind::kLstm) {
    if (hidden < 1) throw ConfigError("forecaster hidden size must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("forecaster learning_rate must be positive");
    if (!(clip_norm > 0.0)) throw ConfigError("forecaster clip_norm must be positive");
    if (batch_size < 1) throw ConfigError("forecaster batch_size must be at least 1");
  }
  if (!(ar_ridge >= 0.0)) throw ConfigError("forecaster ar_ridge must be nonnegative");
}

RowVector Forecaster::predict_next(const Matrix& history) const {
  const auto w = static_cast<Eigen::Index>(window);
  if (history.rows() < w) throw PreconditionError("forecast: history shorter than the window");
  if (history.cols() != static_cast<Eigen::Index>(width)) {
    throw ContractViolation("forecast: history width does not match the forecaster");
  }
  const Matrix z = scaling.apply(history.bottomRows(w));
  RowVector next;
  if (kind == ForecasterKind::kLstm) {
    next = lstm_forward(*lstm, z).prediction;
  } else {
    const auto k = static_cast<Eigen::Index>(width);
    next = ar_coefficients.row(w * k);
    for (Eigen::Index lag = 0; lag < w; ++lag) {
      next.noalias() += z.row(w - 1 - lag) * ar_coefficients.middleRows(lag * k, k);
    }
  }
  return scaling.invert(next);
}

std::vector<SequenceSample> make_samples(const Matrix& series, std::size_t window) {
  const auto w = static_cast<Eigen::Index>(window);
  std::vector<SequenceSample> samples;
  for (Eigen::Index i = 0; i + w < series.rows(); ++i) {
    samples.push_back({series.middleRows(i, w), series.row(i + w)});
  }
  return samples;
}

namespace {

Forecaster train_ar(const Matrix& z, const ForecasterConfig& cfg, Forecaster f) {
  const auto w = static_cast<Eigen::Index>(cfg.window);
  const auto k = z.cols();
  const Eigen::Index n = z.rows() - w;
  const Eigen::Index p = w * k + 1;
  Matrix design(n, p);
  Matrix targets(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index t = i + w;
    for (Eigen::Index lag = 0; lag < w; ++lag) design.row(i).segment(lag * k, k) = z.row(t - 1 - lag);
    design(i, p - 1) = 1.0;
    targets.row(i) = z.row(t);
  }
  Eigen::MatrixXd normal = design.transpose() * design;
  normal.diagonal().array() += cfg.ar_ridge;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  f.ar_coefficients = ldlt.solve(Eigen::MatrixXd(design.transpose() * targets));
  const Matrix fitted = design * f.ar_coefficients;
  f.loss_trace.push_back((fitted - targets).squaredNorm() / static_cast<double>(n));
  return f;
}

Forecaster train_lstm(const Matrix& z, const ForecasterConfig& cfg, Forecaster f) {
  std::mt19937_64 rng(cfg.seed);
  LstmParams params = LstmParams::uniform(f.width, cfg.hidden, cfg.init_scale, rng);
  const auto samples = make_samples(z, cfg.window);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  LstmParams grad = LstmParams::zeros(f.width, cfg.hidden);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      grad.w.setZero();
      grad.b.setZero();
      grad.w_out.setZero();
      grad.b_out.setZero();
      for (std::size_t s = start; s < end; ++s) {
        const auto& sample = samples[order[s]];
        const LstmGradient g = lstm_backward(params, sample.window, sample.target);
        grad.w += g.grad.w;
        grad.b += g.grad.b;
        grad.w_out += g.grad.w_out;
        grad.b_out += g.grad.b_out;
        epoch_loss += g.loss;
      }
      const double norm = std::sqrt(grad.w.squaredNorm() + grad.b.squaredNorm() + grad.w_out.squaredNorm() +
                                    grad.b_out.squaredNorm()) /
                          static_cast<double>(end - start);
      double step = cfg.learning_rate / static_cast<double>(end - start);
      if (norm > cfg.clip_norm) step *= cfg.clip_norm / norm;
      params.w -= step * grad.w;
      params.b -= step * grad.b;
      params.w_out -= step * grad.w_out;
      params.b_out -= step * grad.b_out;
    }
    f.loss_trace.push_back(epoch_loss / static_cast<double>(samples.size()));
  }
  params.validate();
  f.lstm = std::move(params);
  return f;
}

}  // namespace

Forecaster train_forecaster(const Matrix& c, const ForecasterConfig& cfg) {
  cfg.validate();
  if (c.rows() < static_cast<Eigen::Index>(cfg.window) + 1) {
    throw PreconditionError("train_forecaster: need at least window+1 = " +
                            std::to_string(cfg.window + 1) + " rows, got " +
                            std::to_string(c.rows()));
  }
  if (c.cols() < 1) throw PreconditionError("train_forecaster: series has no columns");
  check_finite(c, "train_forecaster");

  Forecaster f;
  f.kind = cfg.kind;
  f.window = cfg.window;
  f.width = static_cast<std::size_t>(c.cols());
  f.scaling = Standardizer::fit(c);
  const Matrix z = f.scaling.apply(c);
  return cfg.kind == ForecasterKind::kAr ? train_ar(z, cfg, std::move(f))
                                         : train_lstm(z, cfg, std::move(f));
}

Matrix forecast(const Forecaster& f, const Matrix& history, std::size_t horizon) {
  const auto w = static_cast<Eigen::Index>(f.window);
  if (history.rows() < w) throw PreconditionError("forecast: history shorter than the window");
  const auto k = static_cast<Eigen::Index>(f.width);
  Matrix out(static_cast<Eigen::Index>(horizon), k);
  if (horizon == 0) return out;
  Matrix buffer(w + static_cast<Eigen::Index>(horizon), k);
  buffer.topRows(w) = history.bottomRows(w);
  for (Eigen::Index step = 0; step < static_cast<Eigen::Index>(horizon); ++step) {
    const RowVector next = f.predict_next(buffer.middleRows(step, w));
    buffer.row(w + step) = next;
    out.row(step) = next;
  }
  return out;
}

}  // namespace decom
