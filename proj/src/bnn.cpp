#include "lifelong/bnn.hpp"

#include <cmath>
#include <numbers>

namespace lifelong {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kSwish:
      return "swish";
  }
  return "tanh";
}

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "swish") return Activation::kSwish;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::vector<Architecture::Layer> Architecture::layers() const {
  std::vector<Layer> out;
  Eigen::Index offset = 0;
  int in = input_dim();
  auto push = [&](int o) {
    Layer l;
    l.in = in;
    l.out = o;
    l.w_offset = offset;
    offset += static_cast<Eigen::Index>(in) * o;
    l.b_offset = offset;
    offset += o;
    out.push_back(l);
    in = o;
  };
  for (int h : hidden) push(h);
  push(output_dim());
  return out;
}

Eigen::Index Architecture::parameter_count() const {
  const auto ls = layers();
  return ls.back().b_offset + ls.back().out;
}

void Architecture::validate() const {
  if (state_dim < 1 || action_dim < 0) {
    throw std::invalid_argument("Architecture: state_dim >= 1 and action_dim >= 0 required");
  }
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("Architecture: hidden widths must be positive");
  }
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double inverse_softplus(double y) {
  if (!(y > 0.0)) throw std::invalid_argument("inverse_softplus: argument must be positive");
  return y > 30.0 ? y : y + std::log(-std::expm1(-y));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void Normalizer::observe(const Eigen::VectorXd& x) {
  if (mean.size() == 0) *this = Normalizer(static_cast<int>(x.size()));
  if (x.size() != mean.size()) throw std::invalid_argument("Normalizer: dimension mismatch");
  count += 1.0;
  const Eigen::VectorXd delta = x - mean;
  mean += delta / count;
  m2 += delta.cwiseProduct(x - mean);
}

Eigen::VectorXd Normalizer::scale() const {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(mean.size());
  if (count < 2.0) return s;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double sd = std::sqrt(m2[i] / count);
    if (sd > 1e-8) s[i] = sd;
  }
  return s;
}

void Normalizer::apply(Eigen::Ref<Eigen::MatrixXd> x) const {
  if (mean.size() == 0 || count < 1.0) return;
  if (x.rows() != mean.size()) throw std::invalid_argument("Normalizer: dimension mismatch");
  const Eigen::VectorXd inv = scale().cwiseInverse();
  x.colwise() -= mean;
  x.array().colwise() *= inv.array();
}

GaussianWeightPosterior::GaussianWeightPosterior(const Architecture& a) : arch(a) {
  arch.validate();
  const auto n = arch.parameter_count();
  mu = Eigen::VectorXd::Zero(n);
  rho = Eigen::VectorXd::Constant(n, inverse_softplus(1.0 - kWeightSigmaFloor));
  normalizer = Normalizer(arch.input_dim());
}

GaussianWeightPosterior GaussianWeightPosterior::initialized(const Architecture& a, Rng& rng,
                                                             double init_sigma) {
  GaussianWeightPosterior q(a);
  if (!(init_sigma > kWeightSigmaFloor)) {
    throw std::invalid_argument("GaussianWeightPosterior: init_sigma must exceed the floor");
  }
  q.rho.setConstant(inverse_softplus(init_sigma - kWeightSigmaFloor));
  for (const auto& l : a.layers()) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(l.in) * l.out; ++j) {
      q.mu[l.w_offset + j] = scale * standard_normal(rng);
    }
  }
  return q;
}

Eigen::VectorXd GaussianWeightPosterior::sigma() const {
  return rho.unaryExpr([](double r) { return softplus(r) + kWeightSigmaFloor; });
}

void GaussianWeightPosterior::validate() const {
  arch.validate();
  const auto n = arch.parameter_count();
  if (mu.size() != n || rho.size() != n) {
    throw std::invalid_argument("GaussianWeightPosterior: parameter count does not match architecture");
  }
  if (!mu.allFinite() || !rho.allFinite()) {
    throw std::invalid_argument("GaussianWeightPosterior: non-finite parameter");
  }
  if (normalizer.dim() != 0 && normalizer.dim() != arch.input_dim()) {
    throw std::invalid_argument("GaussianWeightPosterior: normalizer dimension mismatch");
  }
}

namespace {

struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre;   // one per layer
  std::vector<Eigen::MatrixXd> post;  // post[0] is the input
};

void activate(Activation act, const Eigen::MatrixXd& z, Eigen::MatrixXd& h) {
  if (act == Activation::kTanh) {
    // Through exp, which Eigen vectorizes for double; std::tanh is scalar.
    h = 1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0);
  } else {
    h = z.unaryExpr([](double v) { return v * sigmoid(v); });
  }
}

// g <- g * f'(z) given z and h = f(z).
void activation_backward(Activation act, const Eigen::MatrixXd& z, const Eigen::MatrixXd& h,
                         Eigen::MatrixXd& g) {
  if (act == Activation::kTanh) {
    g.array() *= 1.0 - h.array().square();
  } else {
    g = g.binaryExpr(z, [](double gv, double v) {
      const double s = sigmoid(v);
      return gv * (s + v * s * (1.0 - s));
    });
  }
}

void forward(const Architecture& arch, const std::vector<Architecture::Layer>& layers,
             const double* w, const Eigen::MatrixXd& x, ForwardCache& cache) {
  const std::size_t n_layers = layers.size();
  cache.pre.resize(n_layers);
  cache.post.resize(n_layers + 1);
  cache.post[0] = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& L = layers[l];
    Eigen::Map<const Eigen::MatrixXd> W(w + L.w_offset, L.out, L.in);
    Eigen::Map<const Eigen::VectorXd> b(w + L.b_offset, L.out);
    cache.pre[l].noalias() = W * cache.post[l];
    cache.pre[l].colwise() += b;
    if (l + 1 < n_layers) {
      activate(arch.activation, cache.pre[l], cache.post[l + 1]);
    } else {
      cache.post[l + 1] = cache.pre[l];
    }
  }
}

// Accumulates scale * dLoss/dw into grad, given dLoss/d(raw output) in g.
void backward(const Architecture& arch, const std::vector<Architecture::Layer>& layers,
              const double* w, const ForwardCache& cache, Eigen::MatrixXd g, double* grad,
              double scale, Eigen::MatrixXd* input_grad = nullptr) {
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& L = layers[li];
    Eigen::Map<const Eigen::MatrixXd> W(w + L.w_offset, L.out, L.in);
    if (grad != nullptr) {
      Eigen::Map<Eigen::MatrixXd> gW(grad + L.w_offset, L.out, L.in);
      Eigen::Map<Eigen::VectorXd> gb(grad + L.b_offset, L.out);
      gW.noalias() += scale * g * cache.post[li].transpose();
      gb.noalias() += scale * g.rowwise().sum();
    }
    if (li > 0 || input_grad != nullptr) {
      Eigen::MatrixXd prev = W.transpose() * g;
      if (li > 0) {
        activation_backward(arch.activation, cache.pre[li - 1], cache.post[li], prev);
        g = std::move(prev);
      } else {
        *input_grad = std::move(prev);
      }
    }
  }
}

double output_sigma(double raw, const OutputLimits& lim) {
  return std::min(softplus(raw) + lim.sigma_min, lim.sigma_max);
}

void decode(const Eigen::MatrixXd& raw, int d, const OutputLimits& lim, BatchPrediction& out) {
  out.mean_delta = raw.topRows(d);
  out.mean_reward = raw.row(d);
  out.std_state = raw.middleRows(d + 1, d).unaryExpr([&](double v) { return output_sigma(v, lim); });
  out.std_reward = raw.row(2 * d + 1).unaryExpr([&](double v) { return output_sigma(v, lim); });
}

Eigen::MatrixXd stack_inputs(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                             const Architecture& arch, const Normalizer& norm) {
  if (states.rows() != arch.state_dim || actions.rows() != arch.action_dim ||
      states.cols() != actions.cols()) {
    throw std::invalid_argument("predict: input dimensions do not match the architecture");
  }
  Eigen::MatrixXd x(arch.input_dim(), states.cols());
  x.topRows(arch.state_dim) = states;
  x.bottomRows(arch.action_dim) = actions;
  norm.apply(x);
  return x;
}

constexpr double kHalfLog2Pi = 0.91893853320467274178;

}  // namespace

FixedWeightNet::FixedWeightNet(Architecture arch, Eigen::VectorXd weights, Normalizer normalizer,
                               OutputLimits limits)
    : arch_(std::move(arch)),
      weights_(std::move(weights)),
      normalizer_(std::move(normalizer)),
      limits_(limits),
      layers_(arch_.layers()) {
  if (weights_.size() != arch_.parameter_count()) {
    throw std::invalid_argument("FixedWeightNet: weight count does not match architecture");
  }
}

void FixedWeightNet::predict_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                   BatchPrediction& out) const {
  const Eigen::MatrixXd x = stack_inputs(states, actions, arch_, normalizer_);
  ForwardCache cache;
  forward(arch_, layers_, weights_.data(), x, cache);
  decode(cache.post.back(), arch_.state_dim, limits_, out);
}

Eigen::VectorXd FixedWeightNet::input_gradient(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                                               int output_row) const {
  if (output_row < 0 || output_row >= arch_.output_dim()) {
    throw std::out_of_range("FixedWeightNet::input_gradient: bad output row");
  }
  const Eigen::MatrixXd x = stack_inputs(s, a, arch_, normalizer_);
  ForwardCache cache;
  forward(arch_, layers_, weights_.data(), x, cache);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(arch_.output_dim(), 1);
  g(output_row, 0) = 1.0;
  Eigen::MatrixXd gx;
  backward(arch_, layers_, weights_.data(), cache, g, nullptr, 0.0, &gx);
  Eigen::VectorXd out = gx.col(0);
  if (normalizer_.dim() != 0 && normalizer_.count >= 1.0) {
    out = out.cwiseQuotient(normalizer_.scale());
  }
  return out;
}

FixedWeightNet sample_weights(const GaussianWeightPosterior& q, Rng& rng,
                              const OutputLimits& limits, bool use_mean) {
  Eigen::VectorXd w = q.mu;
  if (!use_mean) {
    Eigen::VectorXd eps(w.size());
    fill_standard_normal(rng, eps.data(), static_cast<std::size_t>(eps.size()));
    w += q.sigma().cwiseProduct(eps);
  }
  return FixedWeightNet(q.arch, std::move(w), q.normalizer, limits);
}

PosteriorSampler::PosteriorSampler(const GaussianWeightPosterior& q, OutputLimits limits,
                                   bool use_mean)
    : q_(&q), limits_(limits), use_mean_(use_mean) {
  if (!use_mean_) sigma_ = q.sigma();
}

std::unique_ptr<DynamicsModel> PosteriorSampler::draw(Rng& rng) const {
  Eigen::VectorXd w = q_->mu;
  if (!use_mean_) {
    Eigen::VectorXd eps(w.size());
    fill_standard_normal(rng, eps.data(), static_cast<std::size_t>(eps.size()));
    w += sigma_.cwiseProduct(eps);
  }
  return std::make_unique<FixedWeightNet>(q_->arch, std::move(w), q_->normalizer, limits_);
}

BNNPrediction predict(const DynamicsModel& net, const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
  BatchPrediction b;
  net.predict_batch(s, a, b);
  BNNPrediction p;
  p.mean_next_state = s + b.mean_delta.col(0);
  p.std_next_state = b.std_state.col(0);
  p.mean_reward = b.mean_reward[0];
  p.std_reward = b.std_reward[0];
  return p;
}

double gaussian_nll(const BNNPrediction& pred, const Eigen::VectorXd& target_next_state,
                    double target_reward) {
  if (target_next_state.size() != pred.mean_next_state.size()) {
    throw std::invalid_argument("gaussian_nll: dimension mismatch");
  }
  auto term = [](double residual, double sigma) {
    const double z = residual / sigma;
    return kHalfLog2Pi + std::log(sigma) + 0.5 * z * z;
  };
  double total = term(target_reward - pred.mean_reward, pred.std_reward);
  for (Eigen::Index i = 0; i < target_next_state.size(); ++i) {
    total += term(target_next_state[i] - pred.mean_next_state[i], pred.std_next_state[i]);
  }
  return total;
}

double kl_factorized_gaussians(std::span<const double> mu_q, std::span<const double> sigma_q,
                               std::span<const double> mu_p, std::span<const double> sigma_p) {
  const std::size_t n = mu_q.size();
  if (sigma_q.size() != n || mu_p.size() != n || sigma_p.size() != n) {
    throw std::invalid_argument("kl_factorized_gaussians: size mismatch");
  }
  double kl = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double dm = mu_q[j] - mu_p[j];
    const double vp = sigma_p[j] * sigma_p[j];
    kl += std::log(sigma_p[j] / sigma_q[j]) + (sigma_q[j] * sigma_q[j] + dm * dm) / (2.0 * vp) - 0.5;
  }
  return kl;
}

double kl_factorized_gaussians(const GaussianWeightPosterior& q, const GaussianWeightPosterior& p) {
  if (!(q.arch == p.arch) || q.mu.size() != p.mu.size()) {
    throw std::invalid_argument("kl_factorized_gaussians: architecture mismatch");
  }
  const Eigen::VectorXd sq = q.sigma();
  const Eigen::VectorXd sp = p.sigma();
  return kl_factorized_gaussians({q.mu.data(), static_cast<std::size_t>(q.mu.size())},
                                 {sq.data(), static_cast<std::size_t>(sq.size())},
                                 {p.mu.data(), static_cast<std::size_t>(p.mu.size())},
                                 {sp.data(), static_cast<std::size_t>(sp.size())});
}

Eigen::MatrixXd draw_weight_noise(Eigen::Index n_params, int n_mc, Rng& rng) {
  Eigen::MatrixXd eps(n_params, n_mc);
  for (int i = 0; i < n_mc; ++i) {
    for (Eigen::Index j = 0; j < n_params; ++j) eps(j, i) = standard_normal(rng);
  }
  return eps;
}

ElboResult elbo_loss_with_noise(const GaussianWeightPosterior& q,
                                const GaussianWeightPosterior& prior,
                                std::span<const Transition> batch, const Eigen::MatrixXd& noise,
                                double kl_weight, const OutputLimits& limits, bool deterministic) {
  if (batch.empty()) throw std::invalid_argument("elbo_loss: empty batch");
  if (noise.cols() < 1 || noise.rows() != q.mu.size()) {
    throw std::invalid_argument("elbo_loss: noise must be n_params x n_mc with n_mc >= 1");
  }
  const Architecture& arch = q.arch;
  const int d = arch.state_dim;
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto layers = arch.layers();

  Eigen::MatrixXd states(d, n), actions(arch.action_dim, n), targets(d + 1, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto& t = batch[static_cast<std::size_t>(c)];
    if (t.state.size() != d || t.next_state.size() != d || t.action.size() != arch.action_dim) {
      throw std::invalid_argument("elbo_loss: transition dimensions do not match the architecture");
    }
    states.col(c) = t.state;
    actions.col(c) = t.action;
    targets.col(c).head(d) = t.next_state - t.state;
    targets(d, c) = t.reward;
  }
  const Eigen::MatrixXd x = stack_inputs(states, actions, arch, q.normalizer);

  const Eigen::VectorXd sigma = q.sigma();
  const int n_mc = static_cast<int>(noise.cols());
  const double inv_n = 1.0 / static_cast<double>(n);
  ElboResult res;
  res.grad_mu = Eigen::VectorXd::Zero(q.mu.size());
  res.grad_rho = Eigen::VectorXd::Zero(q.mu.size());
  Eigen::VectorXd grad_w(q.mu.size());
  ForwardCache cache;

  double nll_sum = 0.0;
  for (int i = 0; i < n_mc; ++i) {
    const Eigen::VectorXd w =
        deterministic ? q.mu : Eigen::VectorXd(q.mu + sigma.cwiseProduct(noise.col(i)));
    forward(arch, layers, w.data(), x, cache);
    const Eigen::MatrixXd& raw = cache.post.back();

    Eigen::MatrixXd g(arch.output_dim(), n);
    double nll = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
      for (int k = 0; k <= d; ++k) {
        const double r = raw(d + 1 + k, c);
        const double sp = softplus(r) + limits.sigma_min;
        const bool clamped = sp >= limits.sigma_max;
        const double s = clamped ? limits.sigma_max : sp;
        const double diff = targets(k, c) - raw(k, c);
        const double z = diff / s;
        nll += kHalfLog2Pi + std::log(s) + 0.5 * z * z;
        g(k, c) = -diff / (s * s) * inv_n;
        g(d + 1 + k, c) = clamped ? 0.0 : (1.0 / s - diff * diff / (s * s * s)) * sigmoid(r) * inv_n;
      }
    }
    nll_sum += nll * inv_n;

    grad_w.setZero();
    backward(arch, layers, w.data(), cache, std::move(g), grad_w.data(), 1.0);
    res.grad_mu += grad_w / n_mc;
    if (!deterministic) {
      for (Eigen::Index j = 0; j < grad_w.size(); ++j) {
        res.grad_rho[j] += grad_w[j] * noise(j, i) * sigmoid(q.rho[j]) / n_mc;
      }
    }
  }
  res.nll = nll_sum / n_mc;

  res.kl = kl_factorized_gaussians(q, prior);
  if (kl_weight != 0.0) {
    const Eigen::VectorXd sp = prior.sigma();
    for (Eigen::Index j = 0; j < q.mu.size(); ++j) {
      const double vp = sp[j] * sp[j];
      res.grad_mu[j] += kl_weight * (q.mu[j] - prior.mu[j]) / vp;
      if (!deterministic) {
        res.grad_rho[j] += kl_weight * (-1.0 / sigma[j] + sigma[j] / vp) * sigmoid(q.rho[j]);
      }
    }
  }
  res.loss = kl_weight * res.kl + res.nll;
  return res;
}

ElboResult elbo_loss(const GaussianWeightPosterior& q, const GaussianWeightPosterior& prior,
                     std::span<const Transition> batch, int n_mc, double kl_weight, Rng& rng,
                     const OutputLimits& limits, bool deterministic) {
  if (n_mc < 1) throw std::invalid_argument("elbo_loss: n_mc must be >= 1");
  if (batch.empty()) throw std::invalid_argument("elbo_loss: empty batch");
  const Eigen::MatrixXd noise = deterministic ? Eigen::MatrixXd::Zero(q.mu.size(), 1)
                                              : draw_weight_noise(q.mu.size(), n_mc, rng);
  return elbo_loss_with_noise(q, prior, batch, noise, kl_weight, limits, deterministic);
}

ElboResult train_step(GaussianWeightPosterior& q, const GaussianWeightPosterior& prior,
                      std::span<const Transition> batch, const TrainConfig& cfg, AdamState& adam,
                      Rng& rng, const OutputLimits& limits) {
  if (!(cfg.lr >= 0.0)) throw std::invalid_argument("train_step: lr must be >= 0");
  ElboResult res = elbo_loss(q, prior, batch, cfg.n_mc, cfg.kl_weight, rng, limits, cfg.deterministic);
  if (!std::isfinite(res.loss) || !res.grad_mu.allFinite() || !res.grad_rho.allFinite()) {
    throw DivergenceError("train_step: non-finite loss or gradient");
  }
  const auto n = q.mu.size();
  if (adam.m_mu.size() != n) {
    adam.m_mu = adam.v_mu = adam.m_rho = adam.v_rho = Eigen::VectorXd::Zero(n);
    adam.step = 0;
  }
  ++adam.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.step));
  auto update = [&](Eigen::VectorXd& p, Eigen::VectorXd& m, Eigen::VectorXd& v,
                    const Eigen::VectorXd& g) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseAbs2();
    if (cfg.lr == 0.0) return;
    p.array() -= cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_eps);
  };
  update(q.mu, adam.m_mu, adam.v_mu, res.grad_mu);
  if (!cfg.deterministic) update(q.rho, adam.m_rho, adam.v_rho, res.grad_rho);
  return res;
}

void to_json(nlohmann::json& j, const Architecture& a) {
  j = nlohmann::json{{"state_dim", a.state_dim},
                     {"action_dim", a.action_dim},
                     {"hidden", a.hidden},
                     {"activation", activation_name(a.activation)}};
}

void from_json(const nlohmann::json& j, Architecture& a) {
  a.state_dim = j.at("state_dim").get<int>();
  a.action_dim = j.at("action_dim").get<int>();
  a.hidden = j.at("hidden").get<std::vector<int>>();
  a.activation = parse_activation(j.value("activation", std::string("tanh")));
  a.validate();
}

namespace {

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd unvec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json matrix_rows(const double* base, int rows, int cols) {
  Eigen::Map<const Eigen::MatrixXd> m(base, rows, cols);
  nlohmann::json out = nlohmann::json::array();
  for (int r = 0; r < rows; ++r) {
    std::vector<double> row(cols);
    for (int c = 0; c < cols; ++c) row[c] = m(r, c);
    out.push_back(row);
  }
  return out;
}

void read_matrix_rows(const nlohmann::json& j, double* base, int rows, int cols) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw std::invalid_argument("checkpoint: weight matrix has wrong row count");
  }
  Eigen::Map<Eigen::MatrixXd> m(base, rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto row = j[r].get<std::vector<double>>();
    if (static_cast<int>(row.size()) != cols) {
      throw std::invalid_argument("checkpoint: weight matrix has wrong column count");
    }
    for (int c = 0; c < cols; ++c) m(r, c) = row[c];
  }
}

void read_vector(const nlohmann::json& j, double* base, int n) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<int>(v.size()) != n) throw std::invalid_argument("checkpoint: bias has wrong length");
  std::copy(v.begin(), v.end(), base);
}

}  // namespace

void to_json(nlohmann::json& j, const Normalizer& n) {
  j = nlohmann::json{{"mean", vec(n.mean)}, {"m2", vec(n.m2)}, {"count", n.count}};
}

void from_json(const nlohmann::json& j, Normalizer& n) {
  n.mean = unvec(j.at("mean"));
  n.m2 = unvec(j.at("m2"));
  n.count = j.at("count").get<double>();
}

void to_json(nlohmann::json& j, const GaussianWeightPosterior& q) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : q.arch.layers()) {
    layers.push_back({{"mu_w", matrix_rows(q.mu.data() + l.w_offset, l.out, l.in)},
                      {"rho_w", matrix_rows(q.rho.data() + l.w_offset, l.out, l.in)},
                      {"mu_b", std::vector<double>(q.mu.data() + l.b_offset,
                                                   q.mu.data() + l.b_offset + l.out)},
                      {"rho_b", std::vector<double>(q.rho.data() + l.b_offset,
                                                    q.rho.data() + l.b_offset + l.out)}});
  }
  j = nlohmann::json{{"architecture", q.arch}, {"layers", layers}, {"normalizer", q.normalizer}};
}

void from_json(const nlohmann::json& j, GaussianWeightPosterior& q) {
  q.arch = j.at("architecture").get<Architecture>();
  const auto layers = q.arch.layers();
  const auto& jl = j.at("layers");
  if (jl.size() != layers.size()) throw std::invalid_argument("checkpoint: wrong number of layers");
  q.mu.resize(q.arch.parameter_count());
  q.rho.resize(q.arch.parameter_count());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    read_matrix_rows(jl[i].at("mu_w"), q.mu.data() + l.w_offset, l.out, l.in);
    read_matrix_rows(jl[i].at("rho_w"), q.rho.data() + l.w_offset, l.out, l.in);
    read_vector(jl[i].at("mu_b"), q.mu.data() + l.b_offset, l.out);
    read_vector(jl[i].at("rho_b"), q.rho.data() + l.b_offset, l.out);
  }
  q.normalizer = j.at("normalizer").get<Normalizer>();
  q.validate();
}

}  // namespace lifelong
